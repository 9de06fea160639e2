//! Small dense optimizers shared by the numerical searches: Levenberg-Marquardt
//! for least squares and a projected-gradient solver over density operators.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{
    hermitian_eig, hermitian_part, hs_inner, identity, trace, trace_norm, ComplexMatrix, C64,
};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: Vec<f64>,
    /// ‖r(x)‖₂
    pub residual: f64,
    pub iterations: usize,
}

/// Levenberg-Marquardt with a forward-difference Jacobian.
pub fn levenberg_marquardt(
    x0: Vec<f64>,
    residual: impl Fn(&[f64]) -> Vec<f64>,
    max_iter: usize,
    target: f64,
) -> LeastSquares {
    let mut x = x0;
    let mut r = residual(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let p = x.len();
    let mut it = 0;
    while it < max_iter && cost.sqrt() > target {
        it += 1;
        let q = r.len();
        let mut jac = DMatrix::<f64>::zeros(q, p);
        for j in 0..p {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let rp = residual(&xp);
            for i in 0..q {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_vec(r.clone());
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for d in 0..p {
                a[(d, d)] += lambda * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rc = residual(&cand);
            let cc: f64 = rc.iter().map(|v| v * v).sum();
            if cc < cost {
                x = cand;
                r = rc;
                cost = cc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    LeastSquares {
        x,
        residual: cost.sqrt(),
        iterations: it,
    }
}

/// Pack a complex matrix into interleaved real/imaginary parts (column-major).
pub fn pack(m: &ComplexMatrix) -> Vec<f64> {
    m.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn unpack(x: &[f64], rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_iterator(rows, cols, x.chunks(2).map(|p| C64::new(p[0], p[1])))
}

/// Euclidean projection of a Hermitian matrix onto the density operators.
pub fn project_to_density(h: &ComplexMatrix) -> ComplexMatrix {
    let e = hermitian_eig(&crate::linalg::hermitian_part(h)).expect("Hermitian input");
    let p = project_simplex(&e.eigenvalues);
    let mut q = e.eigenvectors.clone();
    for (j, w) in p.iter().enumerate() {
        for i in 0..q.nrows() {
            q[(i, j)] *= w.sqrt();
        }
    }
    &q * q.adjoint()
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Value and Hermitian gradient of a convex function of a density operator.
pub trait DensityObjective {
    fn eval(&self, rho: &ComplexMatrix) -> (f64, ComplexMatrix);
}

impl<F: Fn(&ComplexMatrix) -> (f64, ComplexMatrix)> DensityObjective for F {
    fn eval(&self, rho: &ComplexMatrix) -> (f64, ComplexMatrix) {
        self(rho)
    }
}

#[derive(Debug, Clone)]
pub struct DensityMin {
    pub rho: ComplexMatrix,
    pub value: f64,
    /// Frank-Wolfe gap Tr(Gρ) − λ_min(G) at the returned point.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Frank-Wolfe gap for gradient `g` at `rho`.
pub fn fw_gap(rho: &ComplexMatrix, g: &ComplexMatrix) -> f64 {
    let lin = hs_inner(g, rho).re;
    let lmin = hermitian_eig(g).map(|e| e.min()).unwrap_or(f64::NAN);
    lin - lmin
}

/// Minimum-eigenvector pure state of a Hermitian matrix.
pub fn min_eigenstate(g: &ComplexMatrix) -> ComplexMatrix {
    let e = hermitian_eig(g).expect("Hermitian gradient");
    let v = e.vector(e.dim() - 1);
    &v * v.adjoint()
}

const PROGRESS_WINDOW: usize = 200;

/// Spectral projected gradient over density operators with a nonmonotone
/// Armijo search. Each iterate also takes a Frank-Wolfe vertex step when
/// that is better, and the Frank-Wolfe gap is the stopping certificate.
pub fn minimize_over_densities(
    f: &impl DensityObjective,
    rho0: ComplexMatrix,
    gap_tol: f64,
    max_iter: usize,
) -> DensityMin {
    let mut rho = project_to_density(&rho0);
    let (mut val, mut g) = f.eval(&rho);
    let mut step = 1.0;
    let mut history = vec![val];
    let mut gap = fw_gap(&rho, &g);
    let mut it = 0;
    let mut stall = 0;
    while it < max_iter && gap > gap_tol {
        it += 1;
        let ref_val = history.iter().rev().take(10).cloned().fold(f64::MIN, f64::max);
        let direction = project_to_density(&(&rho - g.scale(step))) - &rho;
        let slope = hs_inner(&g, &direction).re;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..50 {
            let cand = &rho + direction.scale(t);
            let (cv, cg) = f.eval(&cand);
            if cv <= ref_val + 1e-4 * t * slope {
                next = Some((cand, cv, cg));
                break;
            }
            t *= 0.5;
        }
        // Frank-Wolfe step with a golden-section line search when the
        // projected step makes no progress.
        let (cand, cv, cg) = match next {
            Some(n) if n.1 < val => n,
            other => {
                let (c, v) = line_search(f, &rho, &min_eigenstate(&g));
                match other {
                    Some(n) if n.1 <= v => n,
                    _ => {
                        let (_, cg) = f.eval(&c);
                        (c, v, cg)
                    }
                }
            }
        };
        let s = &cand - &rho;
        let y = &cg - &g;
        let sy = hs_inner(&s, &y).re;
        let ss = hs_inner(&s, &s).re;
        step = if sy > 1e-300 { (ss / sy).clamp(1e-8, 1e8) } else { (step * 4.0).min(1e8) };
        if cv >= val - 1e-16 * val.abs().max(1.0) {
            stall += 1;
        } else {
            stall = 0;
        }
        rho = cand;
        val = cv;
        g = cg;
        history.push(val);
        gap = fw_gap(&rho, &g);
        // progress over the last PROGRESS_WINDOW steps is too slow to ever
        // close the gap (flat valleys, round-off floor)
        let flat = history.len() > PROGRESS_WINDOW
            && history[history.len() - 1 - PROGRESS_WINDOW] - val
                <= (1e-3 * gap).max(1e-14 * val.abs().max(1.0));
        if stall > 50 || flat {
            break;
        }
    }
    DensityMin {
        converged: gap <= gap_tol,
        rho,
        value: val,
        gap,
        iterations: it,
    }
}

/// Golden-section search of `f` on the segment from `a` to `b`; returns the
/// best point found including both endpoints.
pub fn line_search(
    f: &impl DensityObjective,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> (ComplexMatrix, f64) {
    let point = |t: f64| a.scale(1.0 - t) + b.scale(t);
    let eval = |t: f64| f.eval(&point(t)).0;
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..60 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(0.0, eval(0.0)), (1.0, eval(1.0)), (mid, eval(mid))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(t, v)| (point(t), v))
        .expect("three candidates")
}

/// A linear map ρ ↦ Y_ρ from density operators to rectangular matrices.
pub trait LinearForm {
    /// Dimension of ρ.
    fn dim(&self) -> usize;
    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix;
    /// Hermitian gradient of ρ ↦ Re Tr(W Y_ρ).
    fn pull_back(&self, w: &ComplexMatrix) -> ComplexMatrix;
}

/// Tr√(Y†Y + μ²) at Y = Y_ρ and its gradient in ρ. With μ = 0 this is the
/// trace norm with the polar subgradient.
pub fn smoothed_trace_norm(form: &impl LinearForm, rho: &ComplexMatrix, mu: f64) -> (f64, ComplexMatrix) {
    let y = form.apply(rho);
    if mu == 0.0 {
        let t = trace_norm(&y).expect("finite form");
        return (t.value, form.pull_back(&t.contraction.adjoint()));
    }
    let (r, c) = y.shape();
    // Diagonalize the smaller Gram matrix; the extra singular values of a
    // wide Y are zero and contribute μ each.
    let wide = r < c;
    let (v, s) = smoothed_spectrum(&if wide { y.adjoint() } else { y.clone() }, mu).expect("finite form");
    let value = s.iter().sum::<f64>() + c.saturating_sub(r) as f64 * mu;
    let inv_s = DVector::from_iterator(s.len(), s.iter().map(|x| C64::new(1.0 / x, 0.0)));
    let inv = &v * ComplexMatrix::from_diagonal(&inv_s) * v.adjoint();
    let w = if wide { y.adjoint() * inv } else { inv * y.adjoint() };
    (value, form.pull_back(&w))
}

/// Certified gaps at or below this (relative to the objective scale) skip
/// the Newton polish.
const POLISH_ABOVE: f64 = 1e-10;

const CERTIFY_LEVELS: [f64; 8] = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11];

/// Smoothing continuation for min_ρ Tr|Y_ρ| over density operators.
///
/// The reported gap bounds Tr|Y_ρ| − min: it is the smaller of the
/// subgradient Frank-Wolfe gap and, over a ladder of smoothing levels μ,
/// the smoothed gap at the returned point plus the bias n·μ.
pub fn minimize_trace_norm(form: &impl LinearForm, rho0: ComplexMatrix, max_iter: usize) -> DensityMin {
    let probe = form.apply(&rho0);
    let n = probe.ncols() as f64;
    let scale = trace_norm(&probe).map(|t| t.value).unwrap_or(1.0).max(1e-3);
    let mut rho = rho0;
    let mut total = 0;
    let mut last = None;
    let mut bias = 0.0;
    let schedule = [1e-2, 1e-4, 1e-6, 1e-8];
    for (stage, mu) in schedule.iter().enumerate() {
        let mu = mu * scale;
        let f = |r: &ComplexMatrix| smoothed_trace_norm(form, r, mu);
        // earlier stages only need to land near the next stage's minimizer
        let tol = if stage + 1 == schedule.len() { 1e-12 } else { (1e-3 * mu).max(1e-12) };
        let out = minimize_over_densities(&f, rho, tol, max_iter);
        total += out.iterations;
        rho = out.rho.clone();
        bias = n * mu;
        last = Some(out);
    }
    let mut out = last.expect("schedule is non-empty");
    // f − min f ≤ (smoothed gap at μ) + n·μ holds for every μ; the last
    // stage is not always the tightest
    let certify = |rho: &ComplexMatrix, g: &ComplexMatrix, known: f64| {
        CERTIFY_LEVELS
            .iter()
            .map(|m| {
                let mu = m * scale;
                fw_gap(rho, &smoothed_trace_norm(form, rho, mu).1).max(0.0) + n * mu
            })
            .fold(known, f64::min)
            .min(fw_gap(rho, g).max(0.0))
    };
    let (value, g) = smoothed_trace_norm(form, &out.rho, 0.0);
    let gap = certify(&out.rho, &g, out.gap.max(0.0) + bias);
    out.gap = gap;
    out.value = value;
    if gap <= POLISH_ABOVE * scale {
        out.iterations = total;
        return out;
    }
    let polished = newton_trace_norm(form, &out.rho, scale);
    let (pv, pg) = smoothed_trace_norm(form, &polished, 0.0);
    if pv < value {
        // the bound at the first-order point carries over
        out.gap = certify(&polished, &pg, (gap - (value - pv)).max(0.0));
        out.rho = polished;
        out.value = pv;
    }
    out.iterations = total;
    out
}

/// Traceless Hermitian basis of the tangent space of the density operators.
fn traceless_basis(d: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d - 1);
    for i in 0..d {
        for j in i + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(i, j)] = C64::new(h, 0.0);
            re[(j, i)] = C64::new(h, 0.0);
            let mut im = ComplexMatrix::zeros(d, d);
            im[(i, j)] = C64::new(0.0, -h);
            im[(j, i)] = C64::new(0.0, h);
            basis.push(re);
            basis.push(im);
        }
    }
    for i in 0..d.saturating_sub(1) {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(i, i)] = C64::new(1.0, 0.0);
        e[(d - 1, d - 1)] = C64::new(-1.0, 0.0);
        basis.push(e);
    }
    basis
}

/// Right singular vectors of `y` and √(σ² + μ²), with σ_i = ‖Y v_i‖ so
/// that singular values far below ‖Y‖ keep their absolute accuracy.
fn smoothed_spectrum(y: &ComplexMatrix, mu: f64) -> Option<(ComplexMatrix, Vec<f64>)> {
    let e = hermitian_eig(&(y.adjoint() * y)).ok()?;
    let v = e.eigenvectors;
    let s = (y * &v)
        .column_iter()
        .map(|c| (c.norm_squared() + mu * mu).sqrt())
        .collect();
    Some((v, s))
}

/// Barrier objective Tr√(Y_ρ†Y_ρ + μ²) − ν log det ρ, or None outside the
/// positive definite cone.
fn barrier_value(form: &impl LinearForm, rho: &ComplexMatrix, mu: f64, nu: f64) -> Option<f64> {
    let e = hermitian_eig(rho).ok()?;
    if e.min() <= 0.0 {
        return None;
    }
    let (_, s) = smoothed_spectrum(&form.apply(rho), mu)?;
    Some(s.iter().sum::<f64>() - nu * e.eigenvalues.iter().map(|x| x.ln()).sum::<f64>())
}

const NEWTON_LEVELS: [f64; 9] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11];

/// Damped Newton path following for min_ρ Tr|Y_ρ| from an interior point:
/// the smoothing μ and the log-det barrier weight ν shrink together, so the
/// iterate tracks a kink of the trace norm where first-order steps stall.
pub fn newton_trace_norm(form: &impl LinearForm, rho0: &ComplexMatrix, scale: f64) -> ComplexMatrix {
    let d = form.dim();
    if d < 2 {
        return rho0.clone();
    }
    let basis = traceless_basis(d);
    let dys: Vec<ComplexMatrix> = basis.iter().map(|e| form.apply(e)).collect();
    let p = basis.len();
    let mut rho = rho0.scale(0.99) + identity(d).scale(0.01 / d as f64);
    for level in NEWTON_LEVELS {
        let (mu, nu) = (level * scale, level * scale);
        for _ in 0..50 {
            let Ok(re) = hermitian_eig(&rho) else { return rho };
            if re.min() <= 0.0 {
                return rho;
            }
            let rho_inv = re.map(|x| 1.0 / x);
            let y = form.apply(&rho);
            let Some((v, s)) = smoothed_spectrum(&y, mu) else { return rho };
            let inv_s = DVector::from_iterator(s.len(), s.iter().map(|x| C64::new(1.0 / x, 0.0)));
            let z_inv_half = &v * ComplexMatrix::from_diagonal(&inv_s) * v.adjoint();
            let v = &v;
            let grad = form.pull_back(&(&z_inv_half * y.adjoint()));
            let g = DVector::from_iterator(
                p,
                basis.iter().map(|e| hs_inner(e, &grad).re - nu * hs_inner(e, &rho_inv).re),
            );
            let mut hess = DMatrix::<f64>::zeros(p, p);
            for (l, dy) in dys.iter().enumerate() {
                let dz = v.adjoint() * (dy.adjoint() * &y + y.adjoint() * dy) * v;
                let gamma = ComplexMatrix::from_fn(dz.nrows(), dz.ncols(), |i, j| {
                    dz[(i, j)] * (-1.0 / (s[i] * s[j] * (s[i] + s[j])))
                });
                let dw = v * gamma * v.adjoint() * y.adjoint() + &z_inv_half * dy.adjoint();
                let col = form.pull_back(&dw);
                let bar = &rho_inv * &basis[l] * &rho_inv;
                for (k, e) in basis.iter().enumerate() {
                    hess[(k, l)] = hs_inner(e, &col).re + nu * hs_inner(e, &bar).re;
                }
            }
            let hess = (&hess + hess.transpose()) * 0.5;
            let step = match hess.clone().cholesky() {
                Some(c) => c.solve(&(-&g)),
                None => {
                    // round-off broke definiteness along the kink
                    let e = hess.symmetric_eigen();
                    let floor = 1e-14 * e.eigenvalues.amax();
                    let lam = e.eigenvalues.map(|x| 1.0 / x.max(floor));
                    -(&e.eigenvectors * DMatrix::from_diagonal(&lam) * e.eigenvectors.transpose() * &g)
                }
            };
            let decrement = -g.dot(&step);
            if !(decrement > 0.0) {
                break;
            }
            let dir = basis
                .iter()
                .zip(step.iter())
                .fold(ComplexMatrix::zeros(d, d), |acc, (e, c)| acc + e.scale(*c));
            let Some(f0) = barrier_value(form, &rho, mu, nu) else { return rho };
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand = &rho + dir.scale(t);
                if barrier_value(form, &cand, mu, nu).is_some_and(|f| f <= f0 - 0.25 * t * decrement) {
                    rho = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            // below this φ only changes by round-off
            if !moved || decrement < 1e-16 * scale {
                break;
            }
        }
    }
    hermitian_part(&rho)
}

/// Normalize a PSD matrix to unit trace.
pub fn normalize_trace(m: &ComplexMatrix) -> ComplexMatrix {
    let t = trace(m).re;
    m.unscale(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, from_real_diag, identity};

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn lm_solves_quadratic_system() {
        let r = |x: &[f64]| vec![x[0] * x[0] - 2.0, x[1] - x[0]];
        let sol = levenberg_marquardt(vec![1.0, 0.0], r, 100, 1e-12);
        assert!((sol.x[0] - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn linear_objective_reaches_vertex() {
        let c = from_real_diag(&[1.0, 0.2, 0.5]);
        let f = |rho: &ComplexMatrix| (hs_inner(&c, rho).re, c.clone());
        let out = minimize_over_densities(&f, identity(3).scale(1.0 / 3.0), 1e-10, 1000);
        assert!((out.value - 0.2).abs() < 1e-10);
        assert!(frobenius(&(out.rho - from_real_diag(&[0.0, 1.0, 0.0]))) < 1e-8);
    }
}
