//! Recovery for approximate error correction: the convex bound F_0, the
//! channel built from its minimizer, comparison channels and the
//! nearby-exactly-correctable construction.

use crate::channels::{
    self, complementary, complete_to_tp, compose, standard, KrausChannel, TpMode, CHANNEL_EQ_TOL,
};
use crate::error::{Error, Result};
use crate::fidelity::{
    channel_distance, entanglement_fidelity, purify, worst_case_fidelity, DensityOperator,
};
use crate::linalg::{
    frobenius, hermitian_eig, identity, ket, matrix_sqrt_psd, pseudo_inverse_sqrt, tensor,
    trace, trace_distance, trace_norm, zeros, ComplexMatrix, C64,
};
use crate::optim::{self, LinearForm};
use crate::qec::{knill_laflamme_check, CodeSpec};
use crate::random;
use rayon::prelude::*;

/// Relative eigenvalue cut for ρ₀ to count as full rank.
pub const FULL_RANK_TOL: f64 = 1e-8;
/// Restarts agreeing to this trace distance mark ρ₀ as (heuristically) unique.
pub const UNIQUE_TOL: f64 = 1e-6;
/// Target certificate for the F_0 minimization.
pub const F0_GAP_TOL: f64 = 1e-8;
/// Relative cut when inverting Φ_ρ(1).
pub const PINV_RANK_TOL: f64 = 1e-10;

/// Noise N (already encoded) and the state σ of the target ρ ↦ ρ ⊗ σ.
/// σ lives on the input space: its purification is what the noise acts on.
#[derive(Debug, Clone)]
pub struct SimulationProblem {
    noise: KrausChannel,
    sigma: DensityOperator,
}

impl SimulationProblem {
    pub fn new(noise: KrausChannel, sigma: DensityOperator) -> Result<Self> {
        if !noise.is_trace_preserving() {
            return Err(Error::InvalidInput("noise must be trace preserving".into()));
        }
        if sigma.dim() != noise.dim_in() {
            return Err(Error::DimensionMismatch(format!(
                "σ is {}-dimensional, noise input is {}",
                sigma.dim(),
                noise.dim_in()
            )));
        }
        Ok(Self { noise, sigma })
    }

    /// Plain error correction (target = id) with σ maximally mixed.
    pub fn correcting(noise: KrausChannel) -> Result<Self> {
        let d = noise.dim_in();
        Self::new(noise, DensityOperator::maximally_mixed(d))
    }

    pub fn noise(&self) -> &KrausChannel {
        &self.noise
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.noise.dim_in()
    }

    /// c_ij = Tr(σ E_i† E_j).
    pub fn coefficients(&self) -> ComplexMatrix {
        let e = self.noise.kraus();
        let s = self.sigma.matrix();
        ComplexMatrix::from_fn(e.len(), e.len(), |i, j| trace(&(s * e[i].adjoint() * &e[j])))
    }

    /// F_k = Σ_i √λ_k u_k[i] E_i from the eigen-decomposition of c, so that
    /// Φ_ρ(Y) = Σ_k F_k ρ Y ρ F_k†.
    fn factors(&self) -> Result<Vec<ComplexMatrix>> {
        let c = self.coefficients();
        let e = hermitian_eig(&c)?;
        let top = e.max_abs().max(1.0);
        if e.min() < -1e-9 * top {
            return Err(Error::CoefficientNotPsd {
                min_eigenvalue: e.min(),
            });
        }
        let kraus = self.noise.kraus();
        Ok((0..e.dim())
            .filter(|&k| e.eigenvalues[k] > 1e-15 * top)
            .map(|k| {
                let w = e.eigenvalues[k].sqrt();
                kraus
                    .iter()
                    .enumerate()
                    .fold(zeros(self.noise.dim_out(), self.dim()), |acc, (i, ei)| {
                        acc + ei * (e.eigenvectors[(i, k)] * w)
                    })
            })
            .collect())
    }

    fn check_state(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state is {}-dimensional, noise input is {}",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// ρ ↦ Σ_k ρF_k† ⊗ |k⟩, a compressed X_ρ with the same X†X.
struct F0Form {
    dim: usize,
    dim_out: usize,
    factors: Vec<ComplexMatrix>,
}

impl F0Form {
    fn new(p: &SimulationProblem) -> Result<Self> {
        Ok(Self {
            dim: p.dim(),
            dim_out: p.noise.dim_out(),
            factors: p.factors()?,
        })
    }
}

impl LinearForm for F0Form {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let r = self.factors.len();
        let blocks: Vec<ComplexMatrix> = self.factors.iter().map(|f| rho * f.adjoint()).collect();
        ComplexMatrix::from_fn(self.dim * r, self.dim_out, |row, b| blocks[row % r][(row / r, b)])
    }

    fn pull_back(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let r = self.factors.len();
        let g = self.factors.iter().enumerate().fold(zeros(self.dim, self.dim), |acc, (k, f)| {
            let wk = ComplexMatrix::from_fn(self.dim_out, self.dim, |b, a| w[(b, a * r + k)]);
            acc + f.adjoint() * wk
        });
        crate::linalg::hermitian_part(&g)
    }
}

/// X_ρ = Σ_i ρE_i† ⊗ (E_i ⊗ 1)|ψ_σ⟩, mapping B into A ⊗ B ⊗ R.
pub fn x_operator(p: &SimulationProblem, rho: &DensityOperator) -> Result<ComplexMatrix> {
    p.check_state(rho)?;
    let psi = purify(p.sigma.matrix())?;
    let id_r = identity(p.dim());
    Ok(p.noise.kraus().iter().fold(
        zeros(p.dim() * p.noise.dim_out() * p.dim(), p.noise.dim_out()),
        |acc, e| {
            let v = tensor(e, &id_r) * &psi;
            acc + tensor(&(rho.matrix() * e.adjoint()), &v)
        },
    ))
}

/// Φ_ρ(Y) = Σ_ij c_ij E_i ρ Y ρ E_j†, as Kraus operators F_k ρ.
pub fn phi_map(p: &SimulationProblem, rho: &DensityOperator) -> Result<KrausChannel> {
    p.check_state(rho)?;
    let kraus: Vec<ComplexMatrix> = p.factors()?.iter().map(|f| f * rho.matrix()).collect();
    let kraus = if kraus.is_empty() {
        vec![zeros(p.noise.dim_out(), p.dim())]
    } else {
        kraus
    };
    KrausChannel::new(p.dim(), p.noise.dim_out(), kraus, TpMode::TraceNonincreasing)
}

/// F_0(ρ) = Tr|X_ρ| = Tr√Φ_ρ(1).
pub fn f0(p: &SimulationProblem, rho: &DensityOperator) -> Result<f64> {
    Ok(trace_norm(&x_operator(p, rho)?)?.value)
}

#[derive(Debug, Clone, Copy)]
pub struct F0Options {
    /// Random restarts used only for the uniqueness heuristic.
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for F0Options {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct F0Minimum {
    pub rho0: DensityOperator,
    pub value: f64,
    /// Upper bound on value − min F_0.
    pub gap: f64,
    pub converged: bool,
    pub unique: bool,
    /// Largest trace distance from ρ₀ among restart endpoints.
    pub spread: f64,
}

pub fn minimize_f0(p: &SimulationProblem) -> Result<F0Minimum> {
    minimize_f0_with(p, F0Options::default())
}

/// Minimizes F_0 from the maximally mixed state, then reruns from seeded
/// random states to judge uniqueness.
pub fn minimize_f0_with(p: &SimulationProblem, opts: F0Options) -> Result<F0Minimum> {
    let form = F0Form::new(p)?;
    let d = p.dim();
    let main = optim::minimize_trace_norm(&form, identity(d).unscale(d as f64), opts.max_iter);
    let mut rng = random::rng(opts.seed);
    let starts: Vec<ComplexMatrix> = (0..opts.restarts)
        .map(|_| random::density(&mut rng, d, d))
        .collect();
    let others: Vec<_> = starts
        .into_par_iter()
        .map(|start| optim::minimize_trace_norm(&form, start, opts.max_iter))
        .collect();
    let mut best = main;
    for o in &others {
        if o.value < best.value - best.gap.max(1e-12) {
            best = o.clone();
        }
    }
    let rho0 = snap_to_face(&form, &best.rho)?;
    let mut spread: f64 = 0.0;
    for o in &others {
        spread = spread.max(trace_distance(&snap_to_face(&form, &o.rho)?, &rho0)?);
    }
    best.rho = rho0;
    let value = f0(p, &DensityOperator::new(best.rho.clone())?)?;
    Ok(F0Minimum {
        rho0: DensityOperator::new(best.rho)?,
        value,
        gap: best.gap,
        converged: best.gap <= F0_GAP_TOL,
        unique: spread <= UNIQUE_TOL,
        spread,
    })
}

/// Relative eigenvalue below which [`snap_to_face`] tries to drop a direction.
const SNAP_TOL: f64 = 1e-6;

/// Smoothing leaves minimizers on a face of the state space slightly inside
/// it. Drop eigenvalues below `SNAP_TOL` if that does not raise the objective.
fn snap_to_face(form: &F0Form, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = hermitian_eig(rho)?;
    let cut = SNAP_TOL * e.max_abs();
    if e.eigenvalues.iter().all(|&x| x > cut) {
        return Ok(rho.clone());
    }
    let kept: f64 = e.eigenvalues.iter().filter(|&&x| x > cut).sum();
    let snapped = e.map(|x| if x > cut { x / kept } else { 0.0 });
    let value = |m: &ComplexMatrix| trace_norm(&form.apply(m)).map(|t| t.value);
    if value(&snapped)? <= value(rho)? + 1e-13 {
        Ok(snapped)
    } else {
        Ok(rho.clone())
    }
}

/// Diagnostic report of [`near_optimal_recovery`].
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub f0_value: f64,
    pub gap: f64,
    pub rho0: DensityOperator,
    pub rho0_rank: usize,
    pub rho0_full_rank: bool,
    pub rho0_unique_heuristic: bool,
    /// Bounds on max_R F(R∘N, id).
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub recovery: Option<KrausChannel>,
    pub warnings: Vec<String>,
}

pub fn near_optimal_recovery(p: &SimulationProblem) -> Result<RecoveryReport> {
    near_optimal_recovery_with(p, F0Options::default())
}

pub fn near_optimal_recovery_with(p: &SimulationProblem, opts: F0Options) -> Result<RecoveryReport> {
    let m = minimize_f0_with(p, opts)?;
    let e = hermitian_eig(m.rho0.matrix())?;
    let top = e.max_abs();
    let rank = e.rank(FULL_RANK_TOL);
    let full_rank = e.min() > FULL_RANK_TOL * top;
    let mut warnings = Vec::new();
    if !m.converged {
        warnings.push(format!(
            "F0 minimization stopped with certificate gap {:.3e} above {:.0e}",
            m.gap, F0_GAP_TOL
        ));
    }
    let recovery = if full_rank {
        if !m.unique {
            warnings.push(format!(
                "restarts disagree on the minimizer (spread {:.3e}); recovery built from the \
                 maximally-mixed start, which is valid for any full-rank minimizer",
                m.spread
            ));
        }
        Some(good_channel(p, &m.rho0)?)
    } else {
        warnings.push(format!(
            "minimizer is rank deficient (rank {rank} of {}, smallest eigenvalue {:.3e}): a polar \
             unitary of X at this state need not be a saddle point, so no recovery is emitted",
            e.dim(),
            e.min()
        ));
        None
    };
    Ok(RecoveryReport {
        f0_value: m.value,
        gap: m.gap,
        rho0: m.rho0,
        rho0_rank: rank,
        rho0_full_rank: full_rank,
        rho0_unique_heuristic: m.unique,
        lower_bound: m.value,
        upper_bound: 0.25 * m.value + 0.75,
        recovery,
        warnings,
    })
}

/// R(τ) = Φ_ρ†[Φ_ρ(1)^{-1/2} τ Φ_ρ(1)^{-1/2}] completed to a channel with
/// the maximally mixed state on the kernel of Φ_ρ(1).
pub fn good_channel(p: &SimulationProblem, rho: &DensityOperator) -> Result<KrausChannel> {
    p.check_state(rho)?;
    let form = F0Form::new(p)?;
    let x = form.apply(rho.matrix());
    let z = x.adjoint() * x;
    let inv = pseudo_inverse_sqrt(&z, PINV_RANK_TOL)?.inv_sqrt;
    let kraus = form
        .factors
        .iter()
        .map(|f| rho.matrix() * f.adjoint() * &inv)
        .collect();
    finish_recovery(kraus, p.noise.dim_out(), p.dim())
}

/// Rescales Kraus operators whose ΣR†R is close to a projector so it is one
/// to round-off, then completes with the maximally mixed state.
fn finish_recovery(kraus: Vec<ComplexMatrix>, dim_in: usize, dim_out: usize) -> Result<KrausChannel> {
    let s = kraus
        .iter()
        .fold(zeros(dim_in, dim_in), |acc, k| acc + k.adjoint() * k);
    let e = hermitian_eig(&s)?;
    let polish = e.map(|x| if x > 0.5 { 1.0 / x.sqrt() } else { 0.0 });
    let mut kraus: Vec<ComplexMatrix> = kraus.iter().map(|k| k * &polish).collect();
    kraus.retain(|k| frobenius(k) > 1e-300);
    if kraus.is_empty() {
        kraus.push(zeros(dim_out, dim_in));
    }
    let partial = KrausChannel::new(dim_in, dim_out, kraus, TpMode::TraceNonincreasing)?;
    complete_to_tp(&partial, &identity(dim_out).unscale(dim_out as f64))
}

/// Petz map R(τ) = √ρ N†[N(ρ)^{-1/2} τ N(ρ)^{-1/2}] √ρ plus kernel completion.
pub fn transpose_channel(n: &KrausChannel, rho: &DensityOperator) -> Result<KrausChannel> {
    check_tp_input(n, rho)?;
    let sqrt_rho = matrix_sqrt_psd(rho.matrix())?;
    let inv = pseudo_inverse_sqrt(&n.apply(rho.matrix())?, PINV_RANK_TOL)?.inv_sqrt;
    let kraus = n
        .kraus()
        .iter()
        .map(|e| &sqrt_rho * e.adjoint() * &inv)
        .collect();
    finish_recovery(kraus, n.dim_out(), n.dim_in())
}

/// The channel of [`good_channel`] with ρ₀ = σ = ρ.
pub fn tyson_channel(n: &KrausChannel, rho: &DensityOperator) -> Result<KrausChannel> {
    check_tp_input(n, rho)?;
    let p = SimulationProblem::new(n.clone(), rho.clone())?;
    good_channel(&p, rho)
}

fn check_tp_input(n: &KrausChannel, rho: &DensityOperator) -> Result<()> {
    if !n.is_trace_preserving() {
        return Err(Error::InvalidInput("channel must be trace preserving".into()));
    }
    if rho.dim() != n.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}-dimensional, channel input is {}",
            rho.dim(),
            n.dim_in()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct FixedStateBounds {
    /// ½ d_ρ(Ñ, Ñ(ρ)Tr), a lower bound on min_R d_ρ(R∘N, id).
    pub lower: f64,
    /// d_ρ(Ñ, Ñ(ρ)Tr).
    pub upper: f64,
    /// Λ(ρ) = F_ρ(Ñ, Ñ(ρ)Tr).
    pub lambda: f64,
}

/// Λ(ρ) = Tr√(Σ_ij E_i ρ² E_j† Tr(ρ E_i† E_j)) and the bounds on the best
/// recovery at input ρ.
///
/// The Gram factor Tr(ρ E_i† E_j) = ⟨v_i, v_j⟩ with v_i = E_i√ρ gives the
/// operator as Σ_k Y_k Y_k† for Y_k = Σ_i conj(v_i[k]) E_i ρ, so Λ is the
/// trace norm of [Y_1 … Y_K] and no square roots of round-off appear.
pub fn fixed_state_bounds(n: &KrausChannel, rho: &DensityOperator) -> Result<FixedStateBounds> {
    check_tp_input(n, rho)?;
    let r = rho.matrix();
    let sqrt_rho = matrix_sqrt_psd(r)?;
    let vs: Vec<ComplexMatrix> = n.kraus().iter().map(|e| e * &sqrt_rho).collect();
    let ers: Vec<ComplexMatrix> = n.kraus().iter().map(|e| e * r).collect();
    let (db, d) = (n.dim_out(), n.dim_in());
    let blocks = db * d;
    let mut y = zeros(db, blocks * d);
    for k in 0..blocks {
        let (a, b) = (k / d, k % d);
        let yk = vs
            .iter()
            .zip(&ers)
            .fold(zeros(db, d), |acc, (v, er)| acc + er * v[(a, b)].conj());
        y.view_mut((0, k * d), (db, d)).copy_from(&yk);
    }
    let lambda = trace_norm(&y)?.value;
    let d = (1.0 - lambda.min(1.0)).max(0.0).sqrt();
    Ok(FixedStateBounds {
        lower: 0.5 * d,
        upper: d,
        lambda,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SandwichBounds {
    /// ε̃/2.
    pub lower: f64,
    /// ε̃ = d(Ñ, Ñ∘M̃).
    pub upper: f64,
}

/// Brackets min_R d(R∘N, M) by ε̃ = d(Ñ, Ñ∘M̃), where M̃ is an idempotent
/// channel similar to a complement of M (caller's responsibility) and Ñ is
/// the complement of `n`.
pub fn sandwich_bounds(
    n: &KrausChannel,
    m: &KrausChannel,
    m_tilde: &KrausChannel,
) -> Result<SandwichBounds> {
    if m.dim_in() != n.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "target takes {}, noise takes {}",
            m.dim_in(),
            n.dim_in()
        )));
    }
    if m_tilde.dim_in() != n.dim_in() || m_tilde.dim_out() != n.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "M̃ must act on the {}-dimensional input",
            n.dim_in()
        )));
    }
    let distance = channels::choi_distance(&compose(m_tilde, m_tilde)?, m_tilde);
    if distance > CHANNEL_EQ_TOL {
        return Err(Error::NotIdempotent { distance });
    }
    let nc = complementary(n)?;
    let eps = channel_distance(&nc, &compose(&nc, m_tilde)?)?;
    Ok(SandwichBounds {
        lower: 0.5 * eps,
        upper: eps,
    })
}

/// Sandwich for target = id, with M̃ the constant channel onto |0⟩⟨0|.
pub fn correction_bounds(n: &KrausChannel) -> Result<SandwichBounds> {
    let d = n.dim_in();
    let m_tilde = standard::constant_channel(&crate::linalg::ket_bra(d, 0, 0), d)?;
    sandwich_bounds(n, &standard::identity_channel(d), &m_tilde)
}

#[derive(Debug, Clone)]
pub struct NearbyCorrectable {
    /// N'(ρ) = N(ρ) ⊗ |0⟩⟨0|.
    pub n_prime: KrausChannel,
    /// N₀(ρ) = V(ρ ⊗ σ')V†, exactly correctable.
    pub n0: KrausChannel,
    /// d(N', N₀).
    pub distance: f64,
    /// Output state of the constant channel approximating Ñ.
    pub sigma: ComplexMatrix,
    /// max_ρ F_ρ(Ñ, σTr) reached while choosing σ.
    pub constant_fidelity: f64,
    /// Largest deviation of N₀'s Kraus products from multiples of 1.
    pub kl_residual: f64,
    /// A channel undoing N₀ exactly.
    pub n0_recovery: KrausChannel,
}

/// Rounds of σ ← Ñ(ρ*) when choosing the constant channel.
const SIGMA_ROUNDS: usize = 3;

/// Builds a channel N' similar to N and an exactly correctable N₀ near it.
///
/// σ is chosen among Ñ(1/d) and Ñ(ρ*) for worst-case inputs ρ* of the
/// previous candidate. Writing σ = Σ q_l |u_l⟩⟨u_l| and G_l = (1 ⊗ ⟨u_l|)W_N
/// for the Stinespring isometry W_N, the contraction A = Σ_l G_l/√q_l ⊗ ⟨l|
/// (singular values clipped at 1) is dilated to the isometry
/// V = A ⊗ |0⟩ + √(1 − A†A) ⊗ |1⟩.
pub fn nearby_correctable(n: &KrausChannel) -> Result<NearbyCorrectable> {
    if !n.is_trace_preserving() {
        return Err(Error::InvalidInput("channel must be trace preserving".into()));
    }
    let d = n.dim_in();
    let nc = complementary(n)?;
    let mut sigma = nc.apply(&identity(d).unscale(d as f64))?;
    let mut best: Option<(ComplexMatrix, f64)> = None;
    for _ in 0..SIGMA_ROUNDS {
        let constant = standard::constant_channel(&sigma, d)?;
        let wc = worst_case_fidelity(&nc, &constant)?;
        if best.as_ref().map_or(true, |b| wc.value > b.1) {
            best = Some((sigma.clone(), wc.value));
        }
        if wc.value >= 1.0 - 1e-12 {
            break;
        }
        sigma = nc.apply(&wc.argmin)?;
    }
    let (sigma, constant_fidelity) = best.expect("at least one round");

    let eig = hermitian_eig(&sigma)?;
    let top = eig.max_abs();
    let kept: Vec<usize> = (0..eig.dim())
        .filter(|&l| eig.eigenvalues[l] > 1e-12 * top)
        .collect();
    let r = kept.len();
    let db = n.dim_out();
    let mut a = zeros(db, d * r);
    for (slot, &l) in kept.iter().enumerate() {
        let q = eig.eigenvalues[l];
        let g = n
            .kraus()
            .iter()
            .enumerate()
            .fold(zeros(db, d), |acc, (k, e)| acc + e * eig.eigenvectors[(k, l)].conj());
        for b in 0..db {
            for x in 0..d {
                a[(b, x * r + slot)] = g[(b, x)] / q.sqrt();
            }
        }
    }
    let ata = hermitian_eig(&(a.adjoint() * &a))?;
    let clip = ata.map(|x| if x > 1.0 { 1.0 / x.sqrt() } else { 1.0 });
    let a = a * clip;
    let defect = ata.map(|x| (1.0 - x.min(1.0)).max(0.0).sqrt());
    let m = db.max(d * r);
    let v = tensor(&pad_rows(&a, m), &ket(2, 0)) + tensor(&pad_rows(&defect, m), &ket(2, 1));
    let n0_kraus: Vec<ComplexMatrix> = kept
        .iter()
        .enumerate()
        .map(|(slot, &l)| {
            let q = eig.eigenvalues[l];
            &v * tensor(&identity(d), &ket(r, slot)).scale(q.sqrt())
        })
        .collect();
    let out = v.nrows();
    let n0 = KrausChannel::new(d, out, normalize_tp(n0_kraus, d)?, TpMode::TracePreserving)?;
    let n_prime = KrausChannel::new(
        d,
        out,
        n.kraus()
            .iter()
            .map(|e| tensor(&pad_rows(e, m), &ket(2, 0)))
            .collect(),
        TpMode::TracePreserving,
    )?;
    let distance = channel_distance(&n_prime, &n0)?;
    let kl_residual = knill_laflamme_check(&CodeSpec::trivial(d), &n0)?.residual;
    let undo: Vec<ComplexMatrix> = (0..r)
        .map(|slot| tensor(&identity(d), &ket(r, slot)).adjoint() * v.adjoint())
        .collect();
    let n0_recovery = finish_recovery(undo, out, d)?;
    Ok(NearbyCorrectable {
        n_prime,
        n0,
        distance,
        sigma,
        constant_fidelity,
        kl_residual,
        n0_recovery,
    })
}

/// Embeds the row space into dimension `rows` (V's two halves and N' share
/// one output space).
fn pad_rows(x: &ComplexMatrix, rows: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, x.ncols(), |i, j| {
        if i < x.nrows() {
            x[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Removes round-off from Kraus sums that should already be the identity.
fn normalize_tp(kraus: Vec<ComplexMatrix>, d: usize) -> Result<Vec<ComplexMatrix>> {
    let s = kraus.iter().fold(zeros(d, d), |acc, k| acc + k.adjoint() * k);
    let fix = pseudo_inverse_sqrt(&s, 1e-12)?.inv_sqrt;
    Ok(kraus.into_iter().map(|k| k * &fix).collect())
}

/// F_ρ(R∘N, id) for convenience in checks.
pub fn recovered_fidelity(r: &KrausChannel, n: &KrausChannel, rho: &ComplexMatrix) -> Result<f64> {
    let d = n.dim_in();
    entanglement_fidelity(&compose(r, n)?, &standard::identity_channel(d), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::standard::*;
    use crate::channels::{encode_then_noise, TpMode};
    use crate::fidelity::worst_case_fidelity;
    use crate::linalg::{from_real_rows, ket_bra};

    /// Ñ(ρ) = (1−s)ρ + s|0⟩⟨0|Trρ, and N its complement.
    pub(crate) fn partial_reset(s: f64) -> KrausChannel {
        let kraus = vec![
            identity(2).scale((1.0 - s).sqrt()),
            ket_bra(2, 0, 0).scale(s.sqrt()),
            ket_bra(2, 0, 1).scale(s.sqrt()),
        ];
        let nhat = KrausChannel::new(2, 2, kraus, TpMode::TracePreserving).unwrap();
        complementary(&nhat).unwrap()
    }

    fn reset_problem(s: f64) -> SimulationProblem {
        let sigma = DensityOperator::pure(&ket(2, 0)).unwrap();
        SimulationProblem::new(partial_reset(s), sigma).unwrap()
    }

    fn density(m: ComplexMatrix) -> DensityOperator {
        DensityOperator::new(m).unwrap()
    }

    #[test]
    fn identity_noise_gives_unit_f0() {
        let p = SimulationProblem::correcting(identity_channel(2)).unwrap();
        let rho = density(identity(2).scale(0.5));
        assert!((f0(&p, &rho).unwrap() - 1.0).abs() < 1e-12);
        let phi = phi_map(&p, &rho).unwrap();
        let tau = from_real_rows(2, 2, &[0.3, 0.1, 0.1, 0.7]);
        let expect = rho.matrix() * &tau * rho.matrix();
        assert!(frobenius(&(phi.dual_apply(&tau).unwrap() - expect)) < 1e-12);
    }

    #[test]
    fn x_and_phi_agree() {
        let mut rng = random::rng(3);
        let n = random::channel(&mut rng, 2, 3, 3);
        let sigma = density(random::density(&mut rng, 2, 2));
        let p = SimulationProblem::new(n, sigma).unwrap();
        let rho = density(random::density(&mut rng, 2, 2));
        let x = x_operator(&p, &rho).unwrap();
        let phi1 = phi_map(&p, &rho).unwrap().apply(&identity(2)).unwrap();
        assert!(frobenius(&(x.adjoint() * &x - phi1)) < 1e-10);
    }

    #[test]
    fn partial_reset_minimizer() {
        for s in [0.1, 0.5, 0.9] {
            let p = reset_problem(s);
            let at_one = f0(&p, &density(ket_bra(2, 1, 1))).unwrap();
            assert!((at_one * at_one - s).abs() < 1e-12);
            let m = minimize_f0(&p).unwrap();
            assert!((m.value * m.value - s).abs() < 1e-6, "s={s}: {}", m.value);
            let dist = trace_distance(m.rho0.matrix(), &ket_bra(2, 1, 1)).unwrap();
            assert!(dist < 1e-6, "s={s}: {dist}");
            let report = near_optimal_recovery(&p).unwrap();
            assert!(report.recovery.is_none());
            assert!(!report.warnings.is_empty());
        }
    }

    #[test]
    fn f0_matches_complementary_fidelity() {
        // F_0 at ρ equals F_ρ(Ñ, Ñ∘(|0⟩⟨0| Tr)).
        let mut rng = random::rng(11);
        let n = random::channel(&mut rng, 2, 2, 3);
        let sigma = DensityOperator::pure(&ket(2, 0)).unwrap();
        let p = SimulationProblem::new(n.clone(), sigma).unwrap();
        let nc = complementary(&n).unwrap();
        let c = constant_channel(&ket_bra(2, 0, 0), 2).unwrap();
        let rho = random::density(&mut rng, 2, 2);
        let direct = entanglement_fidelity(&nc, &compose(&nc, &c).unwrap(), &rho).unwrap();
        assert!((f0(&p, &density(rho)).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn adversarial_polar_completion_breaks_saddle() {
        let s = 0.5;
        let p = reset_problem(s);
        let x1 = x_operator(&p, &density(ket_bra(2, 1, 1))).unwrap();
        let x0 = x_operator(&p, &density(ket_bra(2, 0, 0))).unwrap();
        // X_{|1⟩⟨1|} has support |2⟩; X_{|0⟩⟨0|} = |w⟩⟨φ|.
        let col2 = (&x1 * ket(3, 2)).unscale(s.sqrt());
        let phi = from_real_rows(3, 1, &[(1.0 - s).sqrt(), s.sqrt(), 0.0]);
        let w = &x0 * &phi;
        assert!((col2.adjoint() * &w)[(0, 0)].norm() < 1e-12);
        // A valid polar unitary of X_{|1⟩⟨1|} on |2⟩, adversarial on |φ⟩.
        let a = &col2 * ket(3, 2).adjoint() - &w * phi.adjoint();
        let g = |x: &ComplexMatrix| trace(&(&a * x.adjoint())).re;
        assert!((g(&x1) - s.sqrt()).abs() < 1e-12);
        assert!((g(&x0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_code_recovers_exactly() {
        let noise = encode_then_noise(&repetition_code(), &single_bit_flips(3, 0.1)).unwrap();
        let p = SimulationProblem::correcting(noise.clone()).unwrap();
        let report = near_optimal_recovery(&p).unwrap();
        assert!((report.f0_value - 1.0).abs() < 1e-9);
        let r = report.recovery.expect("full-rank minimizer");
        let f = worst_case_fidelity(&compose(&r, &noise).unwrap(), &identity_channel(2)).unwrap();
        assert!(f.value > 1.0 - 1e-8, "{}", f.value);
    }

    #[test]
    fn amplitude_damping_recovery_meets_f0() {
        let noise = amplitude_damping(0.2);
        let p = SimulationProblem::correcting(noise.clone()).unwrap();
        let report = near_optimal_recovery(&p).unwrap();
        let r = report.recovery.clone().expect("full rank");
        assert!(r.is_trace_preserving());
        let f = worst_case_fidelity(&compose(&r, &noise).unwrap(), &identity_channel(2)).unwrap();
        assert!(f.value >= report.f0_value - 1e-6, "{} vs {}", f.value, report.f0_value);
        assert!(f.value <= report.upper_bound + 1e-9);
    }

    #[test]
    fn petz_and_tyson_on_identity() {
        let n = identity_channel(2);
        let rho = density(identity(2).scale(0.5));
        for r in [transpose_channel(&n, &rho).unwrap(), tyson_channel(&n, &rho).unwrap()] {
            assert!(channels::channels_equal(&r, &n));
        }
    }

    #[test]
    fn lambda_matches_fixed_state_fidelity() {
        let n = dephasing(0.3);
        let rho = density(identity(2).scale(0.5));
        let b = fixed_state_bounds(&n, &rho).unwrap();
        let nc = complementary(&n).unwrap();
        let out = nc.apply(rho.matrix()).unwrap();
        let direct = entanglement_fidelity(&nc, &constant_channel(&out, 2).unwrap(), rho.matrix()).unwrap();
        assert!((b.lambda - direct).abs() < 1e-8);
        let p = SimulationProblem::new(n, rho.clone()).unwrap();
        assert!((b.lambda - f0(&p, &rho).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn nearby_correctable_on_unitary_is_exact() {
        let mut rng = random::rng(5);
        let u = random::unitary(&mut rng, 2);
        let n = isometric_channel(&u).unwrap();
        let out = nearby_correctable(&n).unwrap();
        assert!(out.distance < 1e-6, "{}", out.distance);
        assert!(out.kl_residual < 1e-10);
    }

    #[test]
    fn nearby_correctable_random_channel() {
        let mut rng = random::rng(8);
        let n = random::channel(&mut rng, 2, 2, 2);
        let out = nearby_correctable(&n).unwrap();
        assert!(out.kl_residual < 1e-10);
        let back = compose(&out.n0_recovery, &out.n0).unwrap();
        let f = worst_case_fidelity(&back, &identity_channel(2)).unwrap();
        assert!(f.value > 1.0 - 1e-7);
        let bounds = correction_bounds(&n).unwrap();
        assert!(out.distance >= bounds.lower - 1e-6);
    }
}


