//! Brute-force reference values: seesaw search for max_R F(RN, M), the
//! two-sided duality check, and multi-start POVM minimax search.
//!
//! Nothing here calls into the recovery or discrimination solvers; the only
//! shared numerics are the fidelity evaluations.

use std::cell::RefCell;

use rayon::prelude::*;

use crate::channels::{complementary, KrausChannel, TpMode};
use crate::discrimination::{Povm, StateEnsemble};
use crate::error::{Error, Result};
use crate::fidelity::{self, OverlapForm, WorstCaseOptions};
use crate::linalg::{hermitian_eig, identity, projector, trace, trace_norm, zeros, ComplexMatrix, C64};
use crate::optim;
use crate::random;

pub const SEESAW_DIM_LIMIT: usize = 4;
pub const DUALITY_DIM_LIMIT: usize = 3;
pub const POVM_DIM_LIMIT: usize = 3;

#[derive(Debug, Clone)]
pub enum Certificate {
    Channel(KrausChannel),
    Povm(Povm),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best objective across starts, evaluated at the certificate.
    pub value: f64,
    pub certificate: Option<Certificate>,
    pub starts: usize,
    /// Max minus min of the per-start values.
    pub spread: f64,
    /// Suboptimality bound of the inner minimization; value − gap is a
    /// certified lower bound (zero for the POVM search, which has no inner
    /// minimization).
    pub gap: f64,
}

impl OracleResult {
    pub fn lower_bound(&self) -> f64 {
        self.value - self.gap
    }
}

fn guard(dims: &[usize], limit: usize) -> Result<()> {
    match dims.iter().copied().max() {
        Some(dim) if dim > limit => Err(Error::DeskScaleExceeded { dim, limit }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeesawOptions {
    pub starts: usize,
    /// Iteration cap of the minimization over states, per start.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            starts: 20,
            iterations: 30,
            seed: 0,
        }
    }
}

/// Kraus operators of R read off the blocks of its Stinespring matrix.
fn kraus_blocks(w: &ComplexMatrix, out: usize) -> Vec<ComplexMatrix> {
    (0..w.nrows() / out)
        .map(|k| w.rows(k * out, out).into_owned())
        .collect()
}

/// R∘N with Kraus operators R_k E_i, ordered k-major.
fn after(w: &ComplexMatrix, out: usize, n: &KrausChannel) -> Result<KrausChannel> {
    let kraus = kraus_blocks(w, out)
        .iter()
        .flat_map(|r| n.kraus().iter().map(move |e| r * e))
        .collect();
    KrausChannel::new(n.dim_in(), out, kraus, TpMode::TraceNonincreasing)
}

/// Closest isometry to a tall matrix (its polar factor).
fn retract(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(trace_norm(m)?.contraction)
}

struct Seesaw<'a> {
    n: &'a KrausChannel,
    m: &'a KrausChannel,
    out: usize,
}

impl Seesaw<'_> {
    fn form(&self, w: &ComplexMatrix) -> Result<OverlapForm> {
        OverlapForm::new(&after(w, self.out, self.n)?, self.m)
    }

    /// The k-th block of Σ_{m,i} conj(A[m, (k,i)]) F_m ρ E_i†, so that
    /// Re Tr(A Y_ρ(W')†) = Re Tr(W'† G) for every W'.
    fn gradient(&self, a: &ComplexMatrix, rho: &ComplexMatrix, rows: usize, cols: usize) -> ComplexMatrix {
        let ne = self.n.n_kraus();
        let mut g = zeros(rows, cols);
        for k in 0..rows / self.out {
            let mut gk = zeros(self.out, cols);
            for (mi, f) in self.m.kraus().iter().enumerate() {
                let frho = f * rho;
                for (i, e) in self.n.kraus().iter().enumerate() {
                    let c = a[(mi, k * ne + i)].conj();
                    if c != C64::new(0.0, 0.0) {
                        gk += &frho * e.adjoint() * c;
                    }
                }
            }
            g.rows_mut(k * self.out, self.out).copy_from(&gk);
        }
        g
    }

    /// max_R F_ρ(RN, M) at fixed ρ by alternating the fidelity contraction
    /// A and the Stinespring matrix W, each the polar factor of the other's
    /// linear functional. The value never decreases.
    fn best_response(&self, rho: &ComplexMatrix, mut w: ComplexMatrix, max_iter: usize) -> Result<(ComplexMatrix, f64)> {
        let (rows, cols) = w.shape();
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..max_iter {
            let t = trace_norm(&self.form(&w)?.overlap(rho))?;
            if t.value - prev <= 1e-13 {
                return Ok((w, t.value.max(prev)));
            }
            prev = t.value;
            let g = self.gradient(&t.contraction, rho, rows, cols);
            // the W term breaks ties when G is rank deficient
            let tie = 1e-10 * crate::linalg::frobenius(&g).max(1e-300);
            w = retract(&(g + w.scale(tie)))?;
        }
        let value = self.form(&w)?.value(rho);
        Ok((w, value))
    }

    /// Minimizes Φ(ρ) = max_R F_ρ(RN, M), which is convex in ρ, then returns
    /// the best response at the minimizer.
    fn run(&self, w0: ComplexMatrix, rho0: ComplexMatrix, max_iter: usize) -> Result<ComplexMatrix> {
        let cache = RefCell::new(w0);
        let failure = RefCell::new(None);
        let phi = |rho: &ComplexMatrix| -> (f64, ComplexMatrix) {
            let w = cache.borrow().clone();
            match self
                .best_response(rho, w, INNER_ITER)
                .and_then(|(w, _)| Ok((self.form(&w)?.smoothed(rho, 0.0), w)))
            {
                Ok((out, w)) => {
                    *cache.borrow_mut() = w;
                    out
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    (f64::NAN, zeros(rho.nrows(), rho.nrows()))
                }
            }
        };
        let rho = descend(&phi, rho0, max_iter);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let w = cache.into_inner();
        Ok(self.best_response(&rho, w, FINAL_ITER)?.0)
    }
}

/// Alternating steps per best response while the state moves, and for the
/// final response.
const INNER_ITER: usize = 100;
const FINAL_ITER: usize = 5000;

/// Projected gradient over states with Barzilai-Borwein steps and a bounded
/// Armijo backtrack; Φ is only evaluated to the accuracy of the inner
/// alternation, so a failed backtrack ends the descent.
fn descend(phi: &impl Fn(&ComplexMatrix) -> (f64, ComplexMatrix), rho0: ComplexMatrix, iters: usize) -> ComplexMatrix {
    let mut rho = optim::project_to_density(&rho0);
    let (mut val, mut g) = phi(&rho);
    let mut step = 1.0;
    for _ in 0..iters {
        let mut accepted = None;
        let mut t = step;
        for _ in 0..12 {
            let cand = optim::project_to_density(&(&rho - g.scale(t)));
            let decrease = crate::linalg::hs_inner(&g, &(&rho - &cand)).re;
            let (cv, cg) = phi(&cand);
            if cv <= val - 1e-4 * decrease && decrease > 0.0 {
                accepted = Some((cand, cv, cg));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cv, cg)) = accepted else { break };
        let s = &cand - &rho;
        let y = &cg - &g;
        let sy = crate::linalg::hs_inner(&s, &y).re;
        step = if sy > 1e-300 { (crate::linalg::hs_inner(&s, &s).re / sy).clamp(1e-6, 1e6) } else { 4.0 * t };
        rho = cand;
        val = cv;
        g = cg;
    }
    rho
}

/// max over channels R with at most `kraus_budget` Kraus operators of
/// F(RN, M).
///
/// Each start minimizes ρ ↦ max_R F_ρ(RN, M) over states, with the inner
/// maximum taken by alternating polar steps on R's Stinespring matrix, and
/// the R found at the end is scored by its worst-case fidelity.
pub fn seesaw_max_fidelity(n: &KrausChannel, m: &KrausChannel, kraus_budget: usize) -> Result<OracleResult> {
    seesaw_max_fidelity_with(n, m, kraus_budget, SeesawOptions::default())
}

pub fn seesaw_max_fidelity_with(
    n: &KrausChannel,
    m: &KrausChannel,
    kraus_budget: usize,
    opts: SeesawOptions,
) -> Result<OracleResult> {
    guard(&[n.dim_in(), n.dim_out(), m.dim_out()], SEESAW_DIM_LIMIT)?;
    if n.dim_in() != m.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "channels act on {} and {} dimensions",
            n.dim_in(),
            m.dim_in()
        )));
    }
    if kraus_budget == 0 {
        return Err(Error::InvalidInput("Kraus budget must be positive".into()));
    }
    let (inp, out) = (n.dim_out(), m.dim_out());
    // inp·out Kraus operators already reach every channel
    let rows = kraus_budget.min(inp * out) * out;
    if rows < inp {
        return Err(Error::InvalidInput(format!(
            "{kraus_budget} Kraus operators into {out} dimensions cannot form a channel on {inp}"
        )));
    }
    let d = n.dim_in();
    let seesaw = Seesaw { n, m, out };
    let mut rng = random::rng(opts.seed);
    let starts: Vec<(ComplexMatrix, ComplexMatrix)> = (0..opts.starts.max(1))
        .map(|s| {
            if s == 0 {
                // R ≈ id where the dimensions allow it
                let w = ComplexMatrix::from_fn(rows, inp, |r, c| {
                    if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                });
                (w, identity(d).unscale(d as f64))
            } else {
                (random::isometry(&mut rng, rows, inp), random::density(&mut rng, d, d))
            }
        })
        .collect();
    let wc_opts = WorstCaseOptions {
        seed: opts.seed,
        ..WorstCaseOptions::default()
    };
    let results: Vec<Result<(ComplexMatrix, fidelity::WorstCase)>> = starts
        .into_par_iter()
        .map(|(w0, rho0)| {
            let w = seesaw.run(w0, rho0, opts.iterations)?;
            let wc = fidelity::worst_case_fidelity_with(&after(&w, out, n)?, m, wc_opts)?;
            Ok((w, wc))
        })
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut best: Option<(ComplexMatrix, fidelity::WorstCase)> = None;
    for r in results {
        let (w, wc) = r?;
        values.push(wc.value);
        if best.as_ref().map_or(true, |b| wc.value > b.1.value) {
            best = Some((w, wc));
        }
    }
    let (w, wc) = best.expect("at least one start");
    let r = KrausChannel::new(inp, out, kraus_blocks(&w, out), TpMode::TracePreserving)?;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(OracleResult {
        value: wc.value,
        certificate: Some(Certificate::Channel(r)),
        starts: values.len(),
        spread: hi - lo,
        gap: wc.gap,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DualityGap {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Both sides of max_R F(RN, M) = max_R' F(N̂, R'M̂), each by seesaw.
///
/// Each side's budget is capped at dim_in·dim_out of its R, which already
/// reaches every channel.
pub fn duality_check(n: &KrausChannel, m: &KrausChannel, kraus_budget: usize) -> Result<DualityGap> {
    duality_check_with(n, m, kraus_budget, SeesawOptions::default())
}

pub fn duality_check_with(
    n: &KrausChannel,
    m: &KrausChannel,
    kraus_budget: usize,
    opts: SeesawOptions,
) -> Result<DualityGap> {
    guard(&[n.dim_in(), n.dim_out(), m.dim_in(), m.dim_out()], DUALITY_DIM_LIMIT)?;
    let nc = complementary(n)?;
    let mc = complementary(m)?;
    let cap = |a: usize, b: usize| kraus_budget.min(a * b).max(1);
    let primal = seesaw_max_fidelity_with(n, m, cap(n.dim_out(), m.dim_out()), opts)?;
    // F is symmetric, so F(N̂, R'M̂) is the seesaw objective for (M̂, N̂)
    let dual = seesaw_max_fidelity_with(&mc, &nc, cap(mc.dim_out(), nc.dim_out()), opts)?;
    Ok(DualityGap {
        primal: primal.value,
        dual: dual.value,
        gap: (primal.value - dual.value).abs(),
    })
}

/// |max_R F(RN, M) − max_R F(RN', M')| for N' ~ N and M' ~ M supplied by the
/// caller, with unrestricted Kraus budgets on both sides.
pub fn robustness_check(
    n: &KrausChannel,
    n_equiv: &KrausChannel,
    m: &KrausChannel,
    m_equiv: &KrausChannel,
) -> Result<f64> {
    let a = seesaw_max_fidelity(n, m, n.dim_out() * m.dim_out())?;
    let b = seesaw_max_fidelity(n_equiv, m_equiv, n_equiv.dim_out() * m_equiv.dim_out())?;
    Ok((a.value - b.value).abs())
}

pub const POVM_STARTS: usize = 50;
pub const BLOCH_GRID: usize = 1000;

/// max over POVMs of min_i Tr(ρ_i A_i), the worst-case success probability.
pub fn brute_force_povm_minimax(ens: &StateEnsemble) -> Result<OracleResult> {
    brute_force_povm_minimax_seeded(ens, 0)
}

pub fn brute_force_povm_minimax_seeded(ens: &StateEnsemble, seed: u64) -> Result<OracleResult> {
    let d = ens.dim();
    let k = ens.len();
    guard(&[d, k], POVM_DIM_LIMIT)?;
    let states: Vec<ComplexMatrix> = ens.states().iter().map(|s| s.matrix().clone()).collect();
    let mut rng = random::rng(seed);
    let starts: Vec<ComplexMatrix> = (0..POVM_STARTS)
        .map(|_| random::isometry(&mut rng, k * d, d))
        .collect();
    let runs: Vec<Result<(f64, Vec<ComplexMatrix>)>> = starts
        .into_par_iter()
        .map(|v| naimark_ascent(&states, v))
        .collect();
    let mut values = Vec::new();
    let mut best: Option<(f64, Vec<ComplexMatrix>)> = None;
    for r in runs {
        let (v, povm) = r?;
        values.push(v);
        if best.as_ref().map_or(true, |b| v > b.0) {
            best = Some((v, povm));
        }
    }
    let mut extra = Vec::new();
    if k == 2 {
        extra.push(two_outcome_dual(&states)?);
        if d == 2 {
            extra.push(bloch_grid(&states));
        }
    }
    for (v, povm) in extra {
        if v > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
            best = Some((v, povm));
        }
    }
    let (value, elements) = best.expect("at least one start");
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(OracleResult {
        value,
        certificate: Some(Certificate::Povm(Povm::new(elements)?)),
        starts: values.len(),
        spread: hi - lo,
        gap: 0.0,
    })
}

fn success(states: &[ComplexMatrix], povm: &[ComplexMatrix]) -> Vec<f64> {
    states.iter().zip(povm).map(|(r, a)| trace(&(r * a)).re).collect()
}

fn naimark_povm(v: &ComplexMatrix, k: usize) -> Vec<ComplexMatrix> {
    let d = v.ncols();
    (0..k)
        .map(|i| {
            let b = v.rows(i * d, d);
            b.adjoint() * b
        })
        .collect()
}

/// Ascent on the Naimark isometry V with A_i = V_i†V_i, maximizing a
/// soft minimum whose temperature is lowered in stages.
fn naimark_ascent(states: &[ComplexMatrix], mut v: ComplexMatrix) -> Result<(f64, Vec<ComplexMatrix>)> {
    let k = states.len();
    let d = v.ncols();
    let soft = |s: &[f64], tau: f64| {
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        lo - tau * s.iter().map(|x| (-(x - lo) / tau).exp()).sum::<f64>().ln()
    };
    for tau in [1e-2, 1e-3, 1e-4, 1e-5] {
        let mut step = 0.1;
        let mut cur = soft(&success(states, &naimark_povm(&v, k)), tau);
        for _ in 0..400 {
            let s = success(states, &naimark_povm(&v, k));
            let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = s.iter().map(|x| (-(x - lo) / tau).exp()).collect();
            let total: f64 = w.iter().sum();
            let mut g = zeros(k * d, d);
            for i in 0..k {
                let gi = v.rows(i * d, d) * &states[i] * C64::new(2.0 * w[i] / total, 0.0);
                g.rows_mut(i * d, d).copy_from(&gi);
            }
            let trial = retract(&(&v + g.scale(step)))?;
            let val = soft(&success(states, &naimark_povm(&trial, k)), tau);
            if val > cur {
                v = trial;
                cur = val;
                step = (step * 1.5).min(10.0);
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
    }
    let povm = naimark_povm(&v, k);
    let value = success(states, &povm).into_iter().fold(f64::INFINITY, f64::min);
    Ok((value, povm))
}

/// Two-outcome measurement from the dual min_t (1 − t) + Tr(tρ₁ − (1 − t)ρ₂)₊.
/// With A(t) the positive eigenspace of H(t) = tρ₁ − (1 − t)ρ₂, the
/// imbalance Tr ρ₁A(t) − Tr ρ₂(1 − A(t)) goes from −1 at t = 0 to ≥ 0 at
/// t = 1; bisection finds the crossing, where the optimum is A(t) plus a
/// balancing weight on the near-kernel of H.
fn two_outcome_dual(states: &[ComplexMatrix]) -> Result<(f64, Vec<ComplexMatrix>)> {
    let (r1, r2) = (&states[0], &states[1]);
    let d = r1.nrows();
    let tr = |a: &ComplexMatrix, b: &ComplexMatrix| trace(&(a * b)).re;
    let split = |t: f64, tol: f64| -> Result<(ComplexMatrix, ComplexMatrix)> {
        let e = hermitian_eig(&(r1.scale(t) - r2.scale(1.0 - t)))?;
        let mut p = zeros(d, d);
        let mut k = zeros(d, d);
        for (i, l) in e.eigenvalues.iter().enumerate() {
            if *l > tol {
                p += projector(&e.vector(i));
            } else if l.abs() <= tol {
                k += projector(&e.vector(i));
            }
        }
        Ok((p, k))
    };
    let imbalance = |a: &ComplexMatrix| tr(r1, a) - (1.0 - tr(r2, a));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if imbalance(&split(mid, 0.0)?.0) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut candidates = vec![split(lo, 0.0)?.0, split(hi, 0.0)?.0];
    let (p, k) = split(0.5 * (lo + hi), 1e-9)?;
    let (a0, a1, b0, b1) = (tr(r1, &p), tr(r1, &k), tr(r2, &p), tr(r2, &k));
    if a1 + b1 > 0.0 {
        let c = ((1.0 - a0 - b0) / (a1 + b1)).clamp(0.0, 1.0);
        candidates.push(p + k.scale(c));
    }
    let score = |a: &ComplexMatrix| tr(r1, a).min(1.0 - tr(r2, a));
    let a = candidates
        .into_iter()
        .max_by(|x, y| score(x).total_cmp(&score(y)))
        .expect("at least two candidates");
    let povm = vec![a.clone(), identity(d) - a];
    let value = success(states, &povm).into_iter().fold(f64::INFINITY, f64::min);
    Ok((value, povm))
}

/// Refinement after the coarse grid: a ZOOM_POINTS² window around the best
/// point, recentred while the best point sits on its edge and halved once it
/// is interior.
const ZOOM_POINTS: usize = 21;
const ZOOM_ROUNDS: usize = 400;

/// Projective measurements {|v⟩⟨v|, 1 − |v⟩⟨v|} over a BLOCH_GRID² grid of
/// Bloch angles, refined by zooming in on the best point, plus the two
/// trivial measurements.
fn bloch_grid(states: &[ComplexMatrix]) -> (f64, Vec<ComplexMatrix>) {
    let id = identity(2);
    let (a, b) = (&states[0], &states[1]);
    let pi = std::f64::consts::PI;
    let value_at = |theta: f64, phi: f64| {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(s, phi);
        // ⟨v|ρ|v⟩ for v = (c, e)
        let q = |r: &ComplexMatrix| {
            (r[(0, 0)] * c * c + r[(1, 1)] * e.norm_sqr() + r[(0, 1)] * e * c + r[(1, 0)] * e.conj() * c).re
        };
        q(a).min(1.0 - q(b))
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..BLOCH_GRID {
        let theta = pi * (i as f64 + 0.5) / BLOCH_GRID as f64;
        for j in 0..BLOCH_GRID {
            let phi = 2.0 * pi * j as f64 / BLOCH_GRID as f64;
            let v = value_at(theta, phi);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let (mut ht, mut hp) = (pi / BLOCH_GRID as f64, 2.0 * pi / BLOCH_GRID as f64);
    let half = (ZOOM_POINTS / 2) as isize;
    for _ in 0..ZOOM_ROUNDS {
        let (_, t0, p0) = best;
        let mut arg = (0, 0);
        for i in -half..=half {
            let theta = (t0 + ht * i as f64 / half as f64).clamp(0.0, pi);
            for j in -half..=half {
                let v = value_at(theta, p0 + hp * j as f64 / half as f64);
                if v > best.0 {
                    best = (v, theta, p0 + hp * j as f64 / half as f64);
                    arg = (i, j);
                }
            }
        }
        if arg.0.abs() < half && arg.1.abs() < half {
            ht *= 0.5;
            hp *= 0.5;
        }
        if hp < 1e-13 {
            break;
        }
    }
    let trivial = [[id.clone(), zeros(2, 2)], [zeros(2, 2), id.clone()]]
        .into_iter()
        .map(|povm| (success(states, &povm).into_iter().fold(f64::INFINITY, f64::min), povm))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .expect("two trivial measurements");
    let (value, theta, phi) = best;
    if trivial.0 > value {
        return (trivial.0, trivial.1.to_vec());
    }
    let ket = ComplexMatrix::from_column_slice(
        2,
        1,
        &[C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)],
    );
    let p = &ket * ket.adjoint();
    (value, vec![p.clone(), id - p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::standard::*;
    use crate::linalg::{ket_bra, projector};
    use crate::qec::CodeSpec;
    use crate::channels::encode_then_noise;

    fn pure(v: &[f64]) -> ComplexMatrix {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        projector(&ComplexMatrix::from_fn(v.len(), 1, |i, _| C64::new(v[i] / n, 0.0)))
    }

    #[test]
    fn seesaw_on_equal_channels_is_one() {
        let n = amplitude_damping(0.3);
        let r = seesaw_max_fidelity(&n, &n, 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn desk_scale_guard() {
        let code = CodeSpec::new(repetition_code(), "repetition");
        let n = encode_then_noise(&code.encoding, &single_bit_flips(3, 0.1)).unwrap();
        let r = seesaw_max_fidelity(&n, &identity_channel(2), 4);
        assert!(matches!(r, Err(Error::DeskScaleExceeded { dim: 8, limit: 4 })));
        let big = identity_channel(4);
        assert!(matches!(
            duality_check(&big, &big, 4),
            Err(Error::DeskScaleExceeded { .. })
        ));
    }

    #[test]
    fn certificate_reproduces_value() {
        let mut rng = random::rng(8);
        let n = random::channel(&mut rng, 2, 2, 2);
        let opts = SeesawOptions { starts: 3, ..SeesawOptions::default() };
        let r = seesaw_max_fidelity_with(&n, &identity_channel(2), 4, opts).unwrap();
        let Some(Certificate::Channel(c)) = &r.certificate else { panic!("no channel") };
        assert!(c.is_trace_preserving());
        let again = fidelity::worst_case_fidelity(
            &crate::channels::compose(c, &n).unwrap(),
            &identity_channel(2),
        )
        .unwrap();
        assert!((again.value - r.value).abs() < 1e-9);
        assert!(r.lower_bound() <= r.value && r.gap < 1e-6);
    }

    #[test]
    fn duality_on_unitary_noise() {
        let mut rng = random::rng(9);
        let n = isometric_channel(&random::unitary(&mut rng, 2)).unwrap();
        let opts = SeesawOptions { starts: 2, ..SeesawOptions::default() };
        for m in [identity_channel(2), dephasing(0.3)] {
            let d = duality_check_with(&n, &m, 4, opts).unwrap();
            assert!((d.primal - 1.0).abs() < 1e-6 && (d.dual - 1.0).abs() < 1e-6, "{d:?}");
        }
    }

    #[test]
    fn seesaw_correctable_fixture() {
        // isometric noise into a 4-dim space is exactly reversible
        let mut rng = random::rng(3);
        let u = random::isometry(&mut rng, 4, 2);
        let n = isometric_channel(&u).unwrap();
        let opts = SeesawOptions { starts: 4, ..SeesawOptions::default() };
        let r = seesaw_max_fidelity_with(&n, &identity_channel(2), 4, opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{}", r.value);
        assert!(r.gap < 1e-6);
    }

    #[test]
    fn povm_oracle_fixtures() {
        let ortho = StateEnsemble::from_matrices(vec![ket_bra(2, 0, 0), ket_bra(2, 1, 1)]).unwrap();
        assert!((brute_force_povm_minimax(&ortho).unwrap().value - 1.0).abs() < 1e-6);
        let same = StateEnsemble::from_matrices(vec![ket_bra(2, 0, 0), ket_bra(2, 0, 0)]).unwrap();
        assert!((brute_force_povm_minimax(&same).unwrap().value - 0.5).abs() < 1e-4);
        // |0⟩ vs |+⟩: optimum is 1/2 + 1/(2√2) (symmetric Helstrom measurement)
        let plus = StateEnsemble::from_matrices(vec![ket_bra(2, 0, 0), pure(&[1.0, 1.0])]).unwrap();
        let r = brute_force_povm_minimax(&plus).unwrap();
        assert!((r.value - (0.5 + 0.5 / 2f64.sqrt())).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn two_outcome_dual_matches_pure_state_formula() {
        // success (1 + √(1 − |⟨ψ|φ⟩|²))/2 for two pure states
        let mut rng = random::rng(8);
        for d in [2, 3] {
            let a = random::pure_state(&mut rng, d);
            let b = random::pure_state(&mut rng, d);
            let overlap = trace(&(&a * &b)).re;
            let expect = 0.5 * (1.0 + (1.0 - overlap).sqrt());
            let (v, povm) = two_outcome_dual(&[a, b]).unwrap();
            assert!((v - expect).abs() < 1e-9, "d={d}: {v} vs {expect}");
            assert!(Povm::new(povm).is_ok());
        }
    }
}
