//! Dense complex matrices: Hermitian eigensolver, spectral functions,
//! polar decomposition, trace norm and tensor/partial-trace plumbing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Off-diagonal Frobenius threshold for the Jacobi sweeps (relative to max(1, ‖M‖_F)).
pub const JACOBI_TOL: f64 = 1e-12;
/// Hermiticity tolerance for eigensolver inputs (relative to max(1, ‖M‖_F)).
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Negative eigenvalues above `-PSD_CLAMP * max(1, λ_max)` are treated as zero.
pub const PSD_CLAMP: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(r, c)
}

/// Column vector |i⟩ in C^d.
pub fn ket(d: usize, i: usize) -> ComplexMatrix {
    let mut v = zeros(d, 1);
    v[(i, 0)] = C64::new(1.0, 0.0);
    v
}

/// |i⟩⟨j| in C^{d×d}.
pub fn ket_bra(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

pub fn projector(v: &ComplexMatrix) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn from_real_diag(d: &[f64]) -> ComplexMatrix {
    let mut m = zeros(d.len(), d.len());
    for (i, x) in d.iter().enumerate() {
        m[(i, i)] = C64::new(*x, 0.0);
    }
    m
}

/// Build a matrix from row-major real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(data.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| C64::new(data[i * cols + j], 0.0))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// Hilbert-Schmidt inner product Tr(a† b).
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor(&acc, f))
}

fn check_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| x)
    }

    /// Q f(Λ) Q†.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let q = &self.eigenvectors;
        let d = self.dim();
        let mut scaled = q.clone();
        for (j, lam) in self.eigenvalues.iter().enumerate() {
            let s = f(*lam);
            for i in 0..d {
                scaled[(i, j)] *= s;
            }
        }
        scaled * q.adjoint()
    }

    pub fn vector(&self, i: usize) -> ComplexMatrix {
        let n = self.eigenvectors.nrows();
        ComplexMatrix::from_fn(n, 1, |r, _| self.eigenvectors[(r, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Number of eigenvalues above `rel_tol * λ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max_abs();
        self.eigenvalues.iter().filter(|x| **x > cut).count()
    }
}

/// Rotate the phase of `v` so its largest-magnitude entry is real positive.
/// Ties go to the lowest index.
pub fn fix_phase(v: &mut ComplexMatrix, col: usize) {
    let n = v.nrows();
    let mut best = 0;
    let mut best_mag = -1.0;
    for i in 0..n {
        let mag = v[(i, col)].norm();
        if mag > best_mag * (1.0 + 1e-9) + 1e-300 {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let ph = v[(best, col)].conj() / best_mag;
    for i in 0..n {
        v[(i, col)] *= ph;
    }
    v[(best, col)] = C64::new(v[(best, col)].re, 0.0);
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = check_square(m, "eigensolver input")?;
    let scale = frobenius(m).max(1.0);
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let mut a = hermitian_part(m);
    let mut q = identity(n);
    let threshold = JACOBI_TOL * scale;
    let budget = 100 * n * n;
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > threshold {
        if sweeps >= budget {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: off_diagonal_norm(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for r in (p + 1)..n {
                jacobi_rotate(&mut a, &mut q, p, r);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    for j in 0..n {
        fix_phase(&mut eigenvectors, j);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One complex Jacobi rotation zeroing a[p][r]; accumulates into q.
fn jacobi_rotate(a: &mut ComplexMatrix, q: &mut ComplexMatrix, p: usize, r: usize) {
    let apr = a[(p, r)];
    let beta = apr.norm();
    if beta < 1e-300 {
        return;
    }
    let alpha = a[(p, p)].re;
    let gamma = a[(r, r)].re;
    let phase = apr / beta;
    let theta = (gamma - alpha) / (2.0 * beta);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    // u = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let u00 = C64::new(cs, 0.0);
    let u01 = C64::new(sn, 0.0);
    let u10 = -phase.conj() * sn;
    let u11 = phase.conj() * cs;
    let n = a.nrows();
    for i in 0..n {
        let x = a[(i, p)];
        let y = a[(i, r)];
        a[(i, p)] = x * u00 + y * u10;
        a[(i, r)] = x * u01 + y * u11;
    }
    for j in 0..n {
        let x = a[(p, j)];
        let y = a[(r, j)];
        a[(p, j)] = u00.conj() * x + u10.conj() * y;
        a[(r, j)] = u01.conj() * x + u11.conj() * y;
    }
    a[(p, r)] = C64::new(0.0, 0.0);
    a[(r, p)] = C64::new(0.0, 0.0);
    for i in 0..n {
        let x = q[(i, p)];
        let y = q[(i, r)];
        q[(i, p)] = x * u00 + y * u10;
        q[(i, r)] = x * u01 + y * u11;
    }
}

fn psd_eig(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let mut e = hermitian_eig(m)?;
    let cut = PSD_CLAMP * e.max_abs().max(1.0);
    let lo = e.min();
    if lo < -cut {
        return Err(Error::NotPsd { min_eigenvalue: lo });
    }
    for x in e.eigenvalues.iter_mut() {
        *x = x.max(0.0);
    }
    Ok(e)
}

/// Principal square root of a PSD matrix.
pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(psd_eig(m)?.map(f64::sqrt))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    match hermitian_eig(m) {
        Ok(e) => e.min() >= -tol,
        Err(_) => false,
    }
}

#[derive(Debug, Clone)]
pub struct PinvSqrt {
    pub inv_sqrt: ComplexMatrix,
    /// Projector onto eigenvectors at or below the rank cut.
    pub kernel: ComplexMatrix,
}

/// Support-restricted inverse square root. Eigenvalues `λ > rank_tol·λ_max`
/// go to `λ^{-1/2}`, the rest to zero (and into the kernel projector).
pub fn pseudo_inverse_sqrt(m: &ComplexMatrix, rank_tol: f64) -> Result<PinvSqrt> {
    let e = psd_eig(m)?;
    let cut = rank_tol * e.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let keep = |x: f64| x > cut && x > 0.0;
    let inv_sqrt = e.map(|x| if keep(x) { 1.0 / x.sqrt() } else { 0.0 });
    let kernel = e.map(|x| if keep(x) { 0.0 } else { 1.0 });
    Ok(PinvSqrt { inv_sqrt, kernel })
}

#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub unitary_part: ComplexMatrix,
    pub positive_part: ComplexMatrix,
}

/// ‖M v_i‖ over the eigenvectors of M†M. Unlike √λ_i this stays accurate
/// to ε‖M‖ for singular values near zero.
fn column_norms(m: &ComplexMatrix, right: &EigenDecomposition) -> Vec<f64> {
    (0..right.dim()).map(|i| frobenius(&(m * right.vector(i)))).collect()
}

/// Singular values (descending up to round-off) and an isometry `U` (rows×cols, rows ≥ cols)
/// with `M = U |M|`.
struct TallPolar {
    singular_values: Vec<f64>,
    unitary: ComplexMatrix,
    positive: ComplexMatrix,
}

fn normalize_against(v: ComplexMatrix, basis: &[ComplexMatrix]) -> Option<ComplexMatrix> {
    let mut w = v;
    // Two Gram-Schmidt passes keep orthogonality at round-off level.
    for _ in 0..2 {
        for b in basis {
            let proj = hs_inner(b, &w);
            w -= b * proj;
        }
    }
    let n = frobenius(&w);
    (n > 1e-6).then(|| w.unscale(n))
}

fn tall_polar(m: &ComplexMatrix) -> Result<TallPolar> {
    let (rows, cols) = m.shape();
    debug_assert!(rows >= cols);
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let right = hermitian_eig(&(m.adjoint() * m))?;
    let sv = column_norms(m, &right);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = 1e-13 * smax.max(1e-300);

    let left = if rows == cols || sv.iter().any(|s| *s <= cut) {
        Some(hermitian_eig(&(m * m.adjoint()))?)
    } else {
        None
    };
    // Left null-space candidates in index order: trailing eigenvectors of MM†,
    // then the standard basis as a fallback.
    let mut fallback: Vec<ComplexMatrix> = Vec::new();
    if let Some(l) = &left {
        let rank = sv.iter().filter(|s| **s > cut).count();
        for j in rank..rows {
            fallback.push(l.vector(j));
        }
    }
    fallback.extend((0..rows).map(|i| ket(rows, i)));

    let mut us: Vec<ComplexMatrix> = Vec::with_capacity(cols);
    let mut fb = fallback.into_iter();
    for (i, s) in sv.iter().enumerate() {
        let mut u = if *s > cut {
            normalize_against(m * right.vector(i), &us)
        } else {
            None
        };
        while u.is_none() {
            let cand = fb.next().expect("enough basis vectors to complete isometry");
            u = normalize_against(cand, &us);
        }
        us.push(u.unwrap());
    }
    let mut unitary = zeros(rows, cols);
    for (i, u) in us.iter().enumerate() {
        unitary += u * right.vector(i).adjoint();
    }
    let positive = (0..cols).fold(zeros(cols, cols), |acc, i| {
        let v = right.vector(i);
        acc + &v * v.adjoint() * C64::new(sv[i], 0.0)
    });
    Ok(TallPolar {
        singular_values: sv,
        unitary,
        positive,
    })
}

/// `M = U |M|` with a deterministic completion of `U` on the kernel.
pub fn polar_decompose(m: &ComplexMatrix) -> Result<PolarDecomposition> {
    check_square(m, "polar input")?;
    let p = tall_polar(m)?;
    Ok(PolarDecomposition {
        unitary_part: p.unitary,
        positive_part: p.positive,
    })
}

#[derive(Debug, Clone)]
pub struct TraceNorm {
    pub value: f64,
    /// Contraction `A` with `Re Tr(A M†) = Tr|M|`.
    pub contraction: ComplexMatrix,
}

/// Sum of singular values together with a maximizing contraction.
pub fn trace_norm(m: &ComplexMatrix) -> Result<TraceNorm> {
    let (rows, cols) = m.shape();
    if rows >= cols {
        let p = tall_polar(m)?;
        Ok(TraceNorm {
            value: p.singular_values.iter().sum(),
            contraction: p.unitary,
        })
    } else {
        let p = tall_polar(&m.adjoint())?;
        Ok(TraceNorm {
            value: p.singular_values.iter().sum(),
            contraction: p.unitary.adjoint(),
        })
    }
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let tall = if m.nrows() >= m.ncols() { m.clone() } else { m.adjoint() };
    let mut sv = column_norms(&tall, &hermitian_eig(&(tall.adjoint() * &tall))?);
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// ½‖a − b‖₁ for Hermitian a, b.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let e = hermitian_eig(&hermitian_part(&(a - b)))?;
    Ok(0.5 * e.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on C^{dA} ⊗ C^{dB}.
pub fn partial_trace(m: &ComplexMatrix, keep: Keep, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {}x{}, got {}x{}",
            da * db,
            da * db,
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// Swap the tensor factors of an operator on C^{dA} ⊗ C^{dB} (rows and columns).
pub fn swap_factors(m: &ComplexMatrix, dims: (usize, usize)) -> ComplexMatrix {
    let s = swap_operator(dims);
    &s * m * s.adjoint()
}

/// Permutation |a⟩|b⟩ ↦ |b⟩|a⟩ from C^{dA}⊗C^{dB} to C^{dB}⊗C^{dA}.
pub fn swap_operator(dims: (usize, usize)) -> ComplexMatrix {
    let (da, db) = dims;
    let mut s = zeros(da * db, da * db);
    for a in 0..da {
        for b in 0..db {
            s[(b * da + a, a * db + b)] = C64::new(1.0, 0.0);
        }
    }
    s
}
