//! Fidelity between states, entanglement fidelity between channels for a
//! fixed input, and the worst case over inputs.

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, hermitian_part, hermitian_deviation, identity, is_finite,
    tensor, trace, trace_norm, zeros, ComplexMatrix, C64,
};
use crate::optim::{self, DensityMin, LinearForm};
use crate::random;

/// Tolerance on Hermiticity, positivity and trace of density operators.
pub const DENSITY_TOL: f64 = 1e-9;

/// A positive operator with trace in (0, 1].
#[derive(Debug, Clone)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("density operator must be square".into()));
        }
        if !is_finite(&m) {
            return Err(Error::NonFinite);
        }
        let dev = hermitian_deviation(&m);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let m = hermitian_part(&m);
        let lo = hermitian_eig(&m)?.min();
        if lo < -1e-10 {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        let t = trace(&m).re;
        if t <= 0.0 || t > 1.0 + DENSITY_TOL {
            return Err(Error::InvalidInput(format!("trace {t} outside (0, 1]")));
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(identity(d).unscale(d as f64))
    }

    /// |v⟩⟨v| for a unit vector `v`.
    pub fn pure(v: &ComplexMatrix) -> Result<Self> {
        Self::new(v * v.adjoint())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

fn same_shape(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Relative cut below which eigenvalues are treated as round-off in [`fidelity`].
pub const SPECTRAL_CUT: f64 = 1e-14;

/// Columns √λ_i |q_i⟩ so that `m = A A†`.
fn psd_factor(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = hermitian_eig(&hermitian_part(m))?;
    let top = e.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if e.min() < -1e-10 * top.max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: e.min(),
        });
    }
    let keep: Vec<usize> = (0..e.dim())
        .filter(|&i| e.eigenvalues[i] > SPECTRAL_CUT * top)
        .collect();
    let d = e.dim();
    Ok(ComplexMatrix::from_fn(d, keep.len().max(1), |a, j| match keep.get(j) {
        Some(&i) => e.eigenvectors[(a, i)] * e.eigenvalues[i].sqrt(),
        None => C64::new(0.0, 0.0),
    }))
}

/// f(ρ, σ) = Tr √(√ρ σ √ρ), evaluated as the singular-value sum of A†B
/// for spectral factors ρ = AA†, σ = BB†.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    same_shape(rho, sigma)?;
    let a = psd_factor(rho)?;
    let b = psd_factor(sigma)?;
    Ok(trace_norm(&(a.adjoint() * b))?.value)
}

/// Σ √p_i |i⟩ ⊗ |i⟩ over the descending eigenbasis of ρ (system first).
pub fn purify(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = hermitian_eig(&hermitian_part(rho))?;
    let d = e.dim();
    let mut psi = zeros(d * d, 1);
    for (i, p) in e.eigenvalues.iter().enumerate() {
        let w = p.max(0.0).sqrt();
        for a in 0..d {
            psi[(a * d + i, 0)] = e.eigenvectors[(a, i)] * w;
        }
    }
    Ok(psi)
}

/// (N ⊗ id)(|ψ⟩⟨ψ|) with the reference factor last.
pub fn apply_on_purification(ch: &KrausChannel, psi: &ComplexMatrix) -> ComplexMatrix {
    let r = psi.nrows() / ch.dim_in();
    let proj = psi * psi.adjoint();
    let id_r = identity(r);
    ch.kraus()
        .iter()
        .fold(zeros(ch.dim_out() * r, ch.dim_out() * r), |acc, k| {
            let big = tensor(k, &id_r);
            acc + &big * &proj * big.adjoint()
        })
}

fn check_pair(n: &KrausChannel, m: &KrausChannel) -> Result<()> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "channels map {}→{} and {}→{}",
            n.dim_in(),
            n.dim_out(),
            m.dim_in(),
            m.dim_out()
        )));
    }
    Ok(())
}

/// Columns (E_k ⊗ 1)|ψ⟩, a factor of (N ⊗ id)(|ψ⟩⟨ψ|).
fn purified_factor(ch: &KrausChannel, psi: &ComplexMatrix) -> ComplexMatrix {
    let r = psi.nrows() / ch.dim_in();
    let id_r = identity(r);
    let cols: Vec<ComplexMatrix> = ch.kraus().iter().map(|k| tensor(k, &id_r) * psi).collect();
    ComplexMatrix::from_fn(ch.dim_out() * r, cols.len(), |i, j| cols[j][(i, 0)])
}

/// F_ρ(N, M) = f((N⊗id)ψ, (M⊗id)ψ) for a purification ψ of ρ. The two output
/// states are factored through their Kraus operators, so no square roots of
/// round-off eigenvalues enter.
pub fn entanglement_fidelity(n: &KrausChannel, m: &KrausChannel, rho: &ComplexMatrix) -> Result<f64> {
    check_pair(n, m)?;
    if rho.shape() != (n.dim_in(), n.dim_in()) {
        return Err(Error::DimensionMismatch("state does not match channel input".into()));
    }
    let psi = purify(rho)?;
    let a = purified_factor(n, &psi);
    let b = purified_factor(m, &psi);
    Ok(trace_norm(&(a.adjoint() * b))?.value)
}

/// The operators T_{mn} = E_n† F_m for which F_ρ(N, M) = Tr|[Tr(ρ T_{mn})]_{mn}|.
#[derive(Debug, Clone)]
pub struct OverlapForm {
    dim: usize,
    rows: usize,
    cols: usize,
    ops: Vec<ComplexMatrix>,
}

impl OverlapForm {
    pub fn new(n: &KrausChannel, m: &KrausChannel) -> Result<Self> {
        check_pair(n, m)?;
        let ops = m
            .kraus()
            .iter()
            .flat_map(|f| n.kraus().iter().map(move |e| e.adjoint() * f))
            .collect();
        Ok(Self {
            dim: n.dim_in(),
            rows: m.n_kraus(),
            cols: n.n_kraus(),
            ops,
        })
    }

    /// Y_ρ with entries Tr(ρ E_n† F_m).
    pub fn overlap(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let rt = rho.transpose();
        ComplexMatrix::from_fn(self.rows, self.cols, |m, n| {
            self.ops[m * self.cols + n]
                .iter()
                .zip(rt.iter())
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    pub fn value(&self, rho: &ComplexMatrix) -> f64 {
        trace_norm(&self.overlap(rho)).map(|t| t.value).unwrap_or(f64::NAN)
    }

    /// Smoothed objective Tr√(Y†Y + μ²) and its gradient in ρ.
    pub fn smoothed(&self, rho: &ComplexMatrix, mu: f64) -> (f64, ComplexMatrix) {
        optim::smoothed_trace_norm(self, rho, mu)
    }
}

impl LinearForm for OverlapForm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.overlap(rho)
    }

    fn pull_back(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let mut g = zeros(self.dim, self.dim);
        for m in 0..self.rows {
            for n in 0..self.cols {
                let c = w[(n, m)];
                if c != C64::new(0.0, 0.0) {
                    g += &self.ops[m * self.cols + n] * c;
                }
            }
        }
        hermitian_part(&g)
    }
}

/// Smoothing continuation for min_ρ Tr|Y_ρ| over density operators.
pub fn minimize_trace_norm_form(
    form: &OverlapForm,
    rho0: ComplexMatrix,
    max_iter: usize,
) -> DensityMin {
    optim::minimize_trace_norm(form, rho0, max_iter)
}

#[derive(Debug, Clone, Copy)]
pub struct WorstCaseOptions {
    /// Starting points: the maximally mixed state, then seeded random states.
    pub starts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for WorstCaseOptions {
    fn default() -> Self {
        Self {
            starts: 2,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WorstCase {
    /// F_ρ at `argmin`; an upper bound on the true minimum.
    pub value: f64,
    pub argmin: ComplexMatrix,
    /// Frank-Wolfe gap of the subgradient at `argmin`.
    pub gap: f64,
    pub converged: bool,
}

/// min_ρ F_ρ(N, M) with the default options.
pub fn worst_case_fidelity(n: &KrausChannel, m: &KrausChannel) -> Result<WorstCase> {
    worst_case_fidelity_with(n, m, WorstCaseOptions::default())
}

pub fn worst_case_fidelity_with(
    n: &KrausChannel,
    m: &KrausChannel,
    opts: WorstCaseOptions,
) -> Result<WorstCase> {
    let form = OverlapForm::new(n, m)?;
    let d = n.dim_in();
    let mut rng = random::rng(opts.seed);
    let mut best: Option<DensityMin> = None;
    for s in 0..opts.starts.max(1) {
        let rho0 = if s == 0 {
            identity(d).unscale(d as f64)
        } else {
            random::density(&mut rng, d, d)
        };
        let out = minimize_trace_norm_form(&form, rho0, opts.max_iter);
        if best.as_ref().map_or(true, |b| out.value < b.value) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let value = entanglement_fidelity(n, m, &best.rho)?;
    Ok(WorstCase {
        value,
        argmin: best.rho,
        gap: best.gap,
        converged: best.converged || best.gap <= 1e-7,
    })
}

/// d(N, M) = √(1 − F(N, M)).
pub fn channel_distance(n: &KrausChannel, m: &KrausChannel) -> Result<f64> {
    let f = worst_case_fidelity(n, m)?.value;
    Ok((1.0 - f.min(1.0)).max(0.0).sqrt())
}

/// d_ρ(N, M) = √(1 − F_ρ(N, M)).
pub fn fixed_state_distance(n: &KrausChannel, m: &KrausChannel, rho: &ComplexMatrix) -> Result<f64> {
    let f = entanglement_fidelity(n, m, rho)?;
    Ok((1.0 - f.min(1.0)).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::standard::*;
    use crate::linalg::{frobenius, from_real_diag, ket_bra, partial_trace, Keep};

    #[test]
    fn fidelity_examples() {
        let rho = from_real_diag(&[0.3, 0.7]);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&ket_bra(2, 0, 0), &ket_bra(2, 1, 1)).unwrap().abs() < 1e-12);
        let f = fidelity(&ket_bra(2, 0, 0), &identity(2).scale(0.5)).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn purification_examples() {
        let psi = purify(&identity(2).scale(0.5)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi[(0, 0)].re - h).abs() < 1e-15 && (psi[(3, 0)].re - h).abs() < 1e-15);
        let pure = ket_bra(2, 1, 1);
        let psi = purify(&pure).unwrap();
        let back = partial_trace(&(&psi * psi.adjoint()), Keep::First, (2, 2)).unwrap();
        assert!(frobenius(&(back - pure)) < 1e-15);
    }

    #[test]
    fn entanglement_fidelity_examples() {
        let n = amplitude_damping(0.3);
        let rho = from_real_diag(&[0.4, 0.6]);
        assert!((entanglement_fidelity(&n, &n, &rho).unwrap() - 1.0).abs() < 1e-10);
        // {√(1−p)·1, √p·Z} at I/2: only the identity Kraus term overlaps with Φ.
        let f = entanglement_fidelity(&identity_channel(2), &dephasing(0.3), &identity(2).scale(0.5))
            .unwrap();
        assert!((f - 0.7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn overlap_form_matches_spectral() {
        let mut rng = random::rng(11);
        let n = random::channel(&mut rng, 2, 3, 3);
        let m = random::channel(&mut rng, 2, 3, 2);
        let rho = random::density(&mut rng, 2, 2);
        let form = OverlapForm::new(&n, &m).unwrap();
        let a = form.value(&rho);
        let b = entanglement_fidelity(&n, &m, &rho).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn worst_case_examples() {
        let n = amplitude_damping(0.3);
        assert!((worst_case_fidelity(&n, &n).unwrap().value - 1.0).abs() < 1e-9);
        let to_zero = constant_channel(&ket_bra(2, 0, 0), 2).unwrap();
        let w = worst_case_fidelity(&identity_channel(2), &to_zero).unwrap();
        assert!(w.value.abs() < 1e-6, "{}", w.value);
        assert!((channel_distance(&identity_channel(2), &to_zero).unwrap() - 1.0).abs() < 1e-6);
    }
}
