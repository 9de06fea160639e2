//! Minimax state discrimination: the Δ estimate, the error bracket it
//! implies, and the prepare/measure channels.

use crate::channels::{KrausChannel, TpMode};
use crate::error::{Error, Result};
use crate::fidelity::DensityOperator;
use crate::linalg::{
    frobenius, hermitian_eig, hermitian_part, identity, ket, matrix_sqrt_psd, pseudo_inverse_sqrt,
    trace, trace_norm, zeros, ComplexMatrix, C64,
};
use crate::optim::{self, LinearForm};
use crate::random;

pub const POVM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct StateEnsemble {
    states: Vec<DensityOperator>,
}

impl StateEnsemble {
    pub fn new(states: Vec<DensityOperator>) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidInput("ensemble needs at least one state".into()));
        };
        let d = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch(format!(
                "ensemble mixes dimensions {d} and {}",
                bad.dim()
            )));
        }
        Ok(Self { states })
    }

    pub fn from_matrices(states: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(
            states
                .into_iter()
                .map(DensityOperator::new)
                .collect::<Result<_>>()?,
        )
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let d = first.nrows();
        let mut sum = zeros(d, d);
        for (i, a) in elements.iter().enumerate() {
            if a.shape() != (d, d) {
                return Err(Error::InvalidPovm(format!("element {i} has the wrong shape")));
            }
            if frobenius(&(a - a.adjoint())) > POVM_TOL {
                return Err(Error::InvalidPovm(format!("element {i} is not Hermitian")));
            }
            let lo = hermitian_eig(&hermitian_part(a))?.min();
            if lo < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} has eigenvalue {lo:.3e}"
                )));
            }
            sum += a;
        }
        let deviation = frobenius(&(sum - identity(d)));
        if deviation > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the identity only within {deviation:.3e}"
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }
}

/// N(ρ) = Σ_i ρ_i ⟨i|ρ|i⟩ with Kraus operators s_i†|j⟩⟨i|, s_i = √ρ_i.
pub fn preparation_channel(ens: &StateEnsemble) -> Result<KrausChannel> {
    let k = ens.len();
    let d = ens.dim();
    let mut kraus = Vec::with_capacity(k * d);
    for (i, rho) in ens.states.iter().enumerate() {
        let s = matrix_sqrt_psd(rho.matrix())?;
        for j in 0..d {
            kraus.push(s.adjoint() * ket(d, j) * ket(k, i).adjoint());
        }
    }
    KrausChannel::new(k, d, kraus, TpMode::TracePreserving)
}

/// ρ ↦ Σ_i Tr(ρA_i)|i⟩⟨i|, with Kraus operators √μ|i⟩⟨v| over the
/// eigenpairs (μ, v) of each A_i.
pub fn measurement_channel(povm: &Povm) -> Result<KrausChannel> {
    let k = povm.elements.len();
    let d = povm.dim();
    let mut kraus = Vec::new();
    for (i, a) in povm.elements.iter().enumerate() {
        let e = hermitian_eig(&hermitian_part(a))?;
        for (l, mu) in e.eigenvalues.iter().enumerate() {
            if *mu > 1e-15 {
                kraus.push(ket(k, i) * e.vector(l).adjoint().scale(mu.sqrt()));
            }
        }
    }
    if kraus.is_empty() {
        return Err(Error::InvalidPovm("all elements vanish".into()));
    }
    KrausChannel::new(d, k, kraus, TpMode::TracePreserving)
}

/// p ↦ Σ_i |i⟩ ⊗ p_i ρ_i, read off the diagonal of a k×k density matrix so
/// the density-matrix solver works on the simplex.
struct DeltaForm {
    states: Vec<ComplexMatrix>,
    dim: usize,
}

impl DeltaForm {
    fn probs(rho: &ComplexMatrix) -> Vec<f64> {
        (0..rho.nrows()).map(|i| rho[(i, i)].re.max(0.0)).collect()
    }

    fn objective(&self, p: &[f64]) -> f64 {
        trace_norm(&self.stack(p)).map(|t| t.value).unwrap_or(f64::NAN)
    }

    fn stack(&self, p: &[f64]) -> ComplexMatrix {
        let d = self.dim;
        ComplexMatrix::from_fn(self.states.len() * d, d, |row, b| {
            self.states[row / d][(row % d, b)] * p[row / d]
        })
    }

    /// ∂/∂p_i Tr√(Σ p_j²ρ_j²) = p_i Tr(Q^{-1/2} ρ_i²).
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let q = self
            .states
            .iter()
            .zip(p)
            .fold(zeros(self.dim, self.dim), |acc, (r, pi)| acc + r * r * C64::new(pi * pi, 0.0));
        let inv = pseudo_inverse_sqrt(&q, 1e-14).map(|x| x.inv_sqrt).unwrap_or_else(|_| zeros(self.dim, self.dim));
        self.states
            .iter()
            .zip(p)
            .map(|(r, pi)| pi * trace(&(&inv * r * r)).re)
            .collect()
    }
}

impl LinearForm for DeltaForm {
    fn dim(&self) -> usize {
        self.states.len()
    }

    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.stack(&Self::probs(rho))
    }

    fn pull_back(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim;
        let g: Vec<f64> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let wi = ComplexMatrix::from_fn(d, d, |b, a| w[(b, i * d + a)]);
                trace(&(wi * r)).re
            })
            .collect();
        crate::linalg::from_real_diag(&g)
    }
}

#[derive(Debug, Clone)]
pub struct DeltaEstimate {
    /// Δ = 1 − min_p Tr√(Σ p_i² ρ_i²).
    pub delta: f64,
    pub p_star: Vec<f64>,
    /// Upper bound on the suboptimality of the minimum.
    pub gap: f64,
    pub converged: bool,
}

pub const EG_ITERATIONS: usize = 5000;
pub const EG_RESTARTS: usize = 5;

pub fn delta_estimate(ens: &StateEnsemble) -> Result<DeltaEstimate> {
    delta_estimate_seeded(ens, 0)
}

/// Exponentiated-gradient descent (step 0.5/√t) from the uniform prior and
/// seeded random priors, then the best point is refined by the smoothed
/// projected-gradient solver, whose gap certifies the value.
pub fn delta_estimate_seeded(ens: &StateEnsemble, seed: u64) -> Result<DeltaEstimate> {
    let k = ens.len();
    let form = DeltaForm {
        states: ens.states.iter().map(|s| s.matrix().clone()).collect(),
        dim: ens.dim(),
    };
    let mut rng = random::rng(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for restart in 0..EG_RESTARTS {
        let mut p = if restart == 0 {
            vec![1.0 / k as f64; k]
        } else {
            let w: Vec<f64> = (0..k).map(|_| -random::uniform(&mut rng).max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        let mut local = (p.clone(), form.objective(&p));
        for t in 1..=EG_ITERATIONS {
            let g = form.gradient(&p);
            let eta = 0.5 / (t as f64).sqrt();
            let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi *= (-eta * (gi - gmin)).exp();
            }
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let v = form.objective(&p);
            if v < local.1 {
                local = (p.clone(), v);
            }
        }
        if best.as_ref().map_or(true, |b| local.1 < b.1) {
            best = Some(local);
        }
    }
    let (p0, _) = best.expect("at least one restart");
    let refined = optim::minimize_trace_norm(&form, crate::linalg::from_real_diag(&p0), 10_000);
    let p = DeltaForm::probs(&refined.rho);
    let value = form.objective(&p);
    Ok(DeltaEstimate {
        delta: (1.0 - value).clamp(0.0, 1.0),
        p_star: p,
        gap: refined.gap,
        converged: refined.gap <= 1e-7,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorBracket {
    pub delta: f64,
    /// Δ/2 − Δ²/16.
    pub err_lower: f64,
    /// 2Δ − Δ².
    pub err_upper: f64,
}

/// Bracket on the minimax error min_A max_i [1 − Tr(ρ_i A_i)].
pub fn success_probability_bounds(ens: &StateEnsemble) -> Result<ErrorBracket> {
    let delta = delta_estimate(ens)?.delta;
    Ok(ErrorBracket {
        delta,
        err_lower: 0.5 * delta - delta * delta / 16.0,
        err_upper: 2.0 * delta - delta * delta,
    })
}
