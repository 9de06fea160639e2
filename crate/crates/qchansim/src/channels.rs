//! Kraus-form channels: application, duals, composition, Stinespring
//! dilations, complementary channels, Choi matrices and algebra projectors.

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, hermitian_eig, identity, is_finite, ket, ket_bra, polar_decompose, swap_operator,
    tensor, zeros, ComplexMatrix, C64,
};
use crate::{optim, random};

/// Tolerance for the trace-preservation and subnormalization checks.
pub const TP_TOL: f64 = 1e-9;
/// Two channels are equal when their Choi matrices are this close.
pub const CHANNEL_EQ_TOL: f64 = 1e-9;
/// Relative eigenvalue cut used for Choi rank.
pub const CHOI_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpMode {
    TracePreserving,
    TraceNonincreasing,
}

#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
    tp_mode: TpMode,
}

fn kraus_sum(kraus: &[ComplexMatrix], dim_in: usize) -> ComplexMatrix {
    kraus
        .iter()
        .fold(zeros(dim_in, dim_in), |acc, k| acc + k.adjoint() * k)
}

impl KrausChannel {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
        tp_mode: TpMode,
    ) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidInput("channel dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidInput("channel needs at least one Kraus operator".into()));
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.shape() != (dim_out, dim_in) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if !is_finite(k) {
                return Err(Error::NonFinite);
            }
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
            tp_mode,
        };
        ch.check_normalization()?;
        Ok(ch)
    }

    fn check_normalization(&self) -> Result<()> {
        let s = self.kraus_sum();
        match self.tp_mode {
            TpMode::TracePreserving => {
                let deviation = frobenius(&(s - identity(self.dim_in)));
                if deviation > TP_TOL {
                    return Err(Error::NotTracePreserving { deviation });
                }
            }
            TpMode::TraceNonincreasing => {
                let lo = hermitian_eig(&(identity(self.dim_in) - s))?.min();
                if lo < -TP_TOL {
                    return Err(Error::NotSubnormalized { min_eigenvalue: lo });
                }
            }
        }
        Ok(())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<ComplexMatrix> {
        self.kraus
    }

    pub fn tp_mode(&self) -> TpMode {
        self.tp_mode
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.tp_mode == TpMode::TracePreserving
    }

    pub fn n_kraus(&self) -> usize {
        self.kraus.len()
    }

    /// Σ E_i† E_i, i.e. the dual map applied to the identity.
    pub fn kraus_sum(&self) -> ComplexMatrix {
        kraus_sum(&self.kraus, self.dim_in)
    }

    /// Same operators, relabelled as trace-nonincreasing.
    pub fn as_trace_nonincreasing(&self) -> Self {
        Self {
            tp_mode: TpMode::TraceNonincreasing,
            ..self.clone()
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.dim_in,
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(zeros(self.dim_out, self.dim_out), |acc, k| {
                acc + k * rho * k.adjoint()
            }))
    }

    pub fn dual_apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.shape() != (self.dim_out, self.dim_out) {
            return Err(Error::DimensionMismatch(format!(
                "dual input is {0}x{0}, got {1}x{2}",
                self.dim_out,
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(zeros(self.dim_in, self.dim_in), |acc, k| {
                acc + k.adjoint() * a * k
            }))
    }
}

/// An isometry V: C^{dim_in} → C^{dim_out} ⊗ C^{dim_env}, environment last.
#[derive(Debug, Clone)]
pub struct Isometry {
    v: ComplexMatrix,
    dim_out: usize,
    dim_env: usize,
}

impl Isometry {
    pub fn new(v: ComplexMatrix, dim_out: usize, dim_env: usize) -> Result<Self> {
        if v.nrows() != dim_out * dim_env {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {}",
                v.nrows(),
                dim_out * dim_env
            )));
        }
        if !is_finite(&v) {
            return Err(Error::NonFinite);
        }
        let deviation = frobenius(&(v.adjoint() * &v - identity(v.ncols())));
        if deviation > TP_TOL {
            return Err(Error::InvalidInput(format!(
                "V^dag V deviates from identity by {deviation:.3e}"
            )));
        }
        Ok(Self { v, dim_out, dim_env })
    }

    /// An encoding isometry with no environment factor.
    pub fn encoding(v: ComplexMatrix) -> Result<Self> {
        let rows = v.nrows();
        Self::new(v, rows, 1)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn dim_in(&self) -> usize {
        self.v.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    /// The channel ρ ↦ VρV† (environment kept as part of the output).
    pub fn as_channel(&self) -> KrausChannel {
        KrausChannel::new(
            self.dim_in(),
            self.v.nrows(),
            vec![self.v.clone()],
            TpMode::TracePreserving,
        )
        .expect("isometry is trace preserving")
    }
}

/// Kraus set {F_j E_i}: first `inner`, then `outer`.
pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner outputs {}, outer takes {}",
            inner.dim_out, outer.dim_in
        )));
    }
    let kraus = outer
        .kraus
        .iter()
        .flat_map(|f| inner.kraus.iter().map(move |e| f * e))
        .collect();
    let mode = if outer.is_trace_preserving() && inner.is_trace_preserving() {
        TpMode::TracePreserving
    } else {
        TpMode::TraceNonincreasing
    };
    KrausChannel::new(inner.dim_in, outer.dim_out, kraus, mode)
}

/// Kraus set {E_i ⊗ F_j}.
pub fn tensor_channels(a: &KrausChannel, b: &KrausChannel) -> KrausChannel {
    let kraus = a
        .kraus
        .iter()
        .flat_map(|e| b.kraus.iter().map(move |f| tensor(e, f)))
        .collect();
    let mode = if a.is_trace_preserving() && b.is_trace_preserving() {
        TpMode::TracePreserving
    } else {
        TpMode::TraceNonincreasing
    };
    KrausChannel::new(a.dim_in * b.dim_in, a.dim_out * b.dim_out, kraus, mode)
        .expect("tensor product of valid maps is valid")
}

fn require_tp(ch: &KrausChannel) -> Result<()> {
    if ch.is_trace_preserving() {
        Ok(())
    } else {
        Err(Error::NotTracePreserving {
            deviation: frobenius(&(ch.kraus_sum() - identity(ch.dim_in))),
        })
    }
}

/// V = Σ_i E_i ⊗ |i⟩, environment basis in Kraus-list order.
pub fn stinespring_isometry(ch: &KrausChannel) -> Result<Isometry> {
    require_tp(ch)?;
    let k = ch.n_kraus();
    let v = ComplexMatrix::from_fn(ch.dim_out * k, ch.dim_in, |r, j| {
        ch.kraus[r % k][(r / k, j)]
    });
    Isometry::new(v, ch.dim_out, k)
}

/// Channel to the environment: Kraus operators G_k = (⟨k| ⊗ 1)V.
pub fn complementary(ch: &KrausChannel) -> Result<KrausChannel> {
    require_tp(ch)?;
    let k = ch.n_kraus();
    let kraus = (0..ch.dim_out)
        .map(|b| ComplexMatrix::from_fn(k, ch.dim_in, |i, j| ch.kraus[i][(b, j)]))
        .collect();
    KrausChannel::new(ch.dim_in, k, kraus, TpMode::TracePreserving)
}

/// Σ_k |E_k⟩⟩⟨⟨E_k| with |E⟩⟩ = Σ_i E|i⟩ ⊗ |i⟩ (output factor first).
pub fn choi(ch: &KrausChannel) -> ComplexMatrix {
    let d = ch.dim_out * ch.dim_in;
    let mut out = zeros(d, d);
    for k in &ch.kraus {
        let v = vectorize(k);
        out += &v * v.adjoint();
    }
    out
}

/// Row-major vectorization: index `a * cols + i` holds `m[a][i]`.
pub fn vectorize(m: &ComplexMatrix) -> ComplexMatrix {
    let (r, c) = m.shape();
    ComplexMatrix::from_fn(r * c, 1, |idx, _| m[(idx / c, idx % c)])
}

pub fn unvectorize(v: &ComplexMatrix, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |a, i| v[(a * cols + i, 0)])
}

pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
        return f64::INFINITY;
    }
    frobenius(&(choi(a) - choi(b)))
}

pub fn channels_equal(a: &KrausChannel, b: &KrausChannel) -> bool {
    choi_distance(a, b) <= CHANNEL_EQ_TOL
}

/// Minimal Kraus representation from the Choi eigendecomposition.
pub fn canonicalize(ch: &KrausChannel) -> KrausChannel {
    let e = hermitian_eig(&choi(ch)).expect("Choi matrix is Hermitian");
    let cut = CHOI_RANK_TOL * e.max_abs();
    let mut kraus: Vec<ComplexMatrix> = e
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > cut)
        .map(|(i, l)| unvectorize(&e.vector(i), ch.dim_out, ch.dim_in).scale(l.sqrt()))
        .collect();
    if kraus.is_empty() {
        kraus.push(zeros(ch.dim_out, ch.dim_in));
    }
    KrausChannel {
        kraus,
        ..ch.clone()
    }
}

/// Rank of the Choi matrix at the relative cut [`CHOI_RANK_TOL`].
pub fn minimal_kraus_count(ch: &KrausChannel) -> usize {
    let e = hermitian_eig(&choi(ch)).expect("Choi matrix is Hermitian");
    e.rank(CHOI_RANK_TOL).max(1)
}

/// Adds ρ ↦ Tr[(1 − ΣE†E)ρ] τ so the result is trace preserving.
pub fn complete_to_tp(ch: &KrausChannel, tau: &ComplexMatrix) -> Result<KrausChannel> {
    if tau.shape() != (ch.dim_out, ch.dim_out) {
        return Err(Error::DimensionMismatch(format!(
            "completion state must be {0}x{0}",
            ch.dim_out
        )));
    }
    let defect = hermitian_eig(&(identity(ch.dim_in) - ch.kraus_sum()))?;
    if defect.min() < -TP_TOL {
        return Err(Error::NotSubnormalized {
            min_eigenvalue: defect.min(),
        });
    }
    let t = hermitian_eig(tau)?;
    if t.min() < -TP_TOL {
        return Err(Error::NotPsd {
            min_eigenvalue: t.min(),
        });
    }
    let mut kraus = ch.kraus.clone();
    for (l, dl) in defect.eigenvalues.iter().enumerate() {
        if *dl <= 1e-14 {
            continue;
        }
        let bra = defect.vector(l).adjoint();
        for (k, qk) in t.eigenvalues.iter().enumerate() {
            if *qk <= 1e-14 {
                continue;
            }
            kraus.push((t.vector(k) * &bra).scale((dl * qk).sqrt()));
        }
    }
    KrausChannel::new(ch.dim_in, ch.dim_out, kraus, TpMode::TracePreserving)
}

/// Kraus set {E_i V}.
pub fn encode_then_noise(code: &Isometry, noise: &KrausChannel) -> Result<KrausChannel> {
    if noise.dim_in != code.matrix().nrows() {
        return Err(Error::DimensionMismatch(format!(
            "code outputs {}, noise takes {}",
            code.matrix().nrows(),
            noise.dim_in
        )));
    }
    let kraus = noise.kraus.iter().map(|e| e * code.matrix()).collect();
    KrausChannel::new(code.dim_in(), noise.dim_out, kraus, noise.tp_mode)
}

/// A †-algebra ⊕_i (M_{n_i} ⊗ 1_{m_i}) written in the basis `basis`
/// (a unitary from the ambient space onto the block decomposition).
#[derive(Debug, Clone)]
pub struct BlockAlgebra {
    blocks: Vec<(usize, usize)>,
    basis: ComplexMatrix,
}

impl BlockAlgebra {
    pub fn new(blocks: Vec<(usize, usize)>, basis: ComplexMatrix) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|(n, m)| *n == 0 || *m == 0) {
            return Err(Error::InvalidInput("blocks must be non-empty with positive sizes".into()));
        }
        let dim: usize = blocks.iter().map(|(n, m)| n * m).sum();
        if basis.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "blocks span {dim} dimensions but basis is {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let deviation = frobenius(&(basis.adjoint() * &basis - identity(dim)));
        if deviation > TP_TOL {
            return Err(Error::InvalidInput(format!(
                "basis is not unitary (deviation {deviation:.3e})"
            )));
        }
        Ok(Self { blocks, basis })
    }

    /// Blocks in the computational basis.
    pub fn standard(blocks: Vec<(usize, usize)>) -> Result<Self> {
        let dim = blocks.iter().map(|(n, m)| n * m).sum();
        Self::new(blocks, identity(dim))
    }

    /// All operators on C^d.
    pub fn full(d: usize) -> Self {
        Self::standard(vec![(d, 1)]).expect("valid block")
    }

    /// Multiples of the identity on C^d.
    pub fn trivial(d: usize) -> Self {
        Self::standard(vec![(1, d)]).expect("valid block")
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }
}

/// Trace-preserving conditional expectation onto the algebra:
/// ρ ↦ B† [⊕_i Tr₂(P_i BρB† P_i) ⊗ 1_i/m_i] B.
pub fn algebra_projector(alg: &BlockAlgebra) -> KrausChannel {
    let d = alg.dim();
    let b = &alg.basis;
    let mut kraus = Vec::new();
    let mut offset = 0;
    for &(n, m) in &alg.blocks {
        let w = 1.0 / (m as f64).sqrt();
        for k in 0..m {
            for l in 0..m {
                let mut local = zeros(d, d);
                let flip = tensor(&identity(n), &ket_bra(m, k, l));
                local
                    .view_mut((offset, offset), (n * m, n * m))
                    .copy_from(&flip);
                kraus.push((b.adjoint() * local * b).scale(w));
            }
        }
        offset += n * m;
    }
    KrausChannel::new(d, d, kraus, TpMode::TracePreserving).expect("projector is a channel")
}

/// Blocks (m_i, n_i) with the factor order of each block swapped.
pub fn commutant(alg: &BlockAlgebra) -> BlockAlgebra {
    let d = alg.dim();
    let mut swap = zeros(d, d);
    let mut offset = 0;
    for &(n, m) in &alg.blocks {
        swap.view_mut((offset, offset), (n * m, n * m))
            .copy_from(&swap_operator((n, m)));
        offset += n * m;
    }
    BlockAlgebra {
        blocks: alg.blocks.iter().map(|(n, m)| (*m, *n)).collect(),
        basis: swap * &alg.basis,
    }
}

#[derive(Debug, Clone)]
pub struct PostprocessingResult {
    pub related: bool,
    pub residual: f64,
    /// Best post-processing channel found.
    pub witness: KrausChannel,
}

pub const POSTPROCESSING_TOL: f64 = 1e-6;
const POSTPROCESSING_STARTS: usize = 20;
const POSTPROCESSING_ITERS: usize = 5000;

/// Searches for a channel R with R∘N = M by minimizing the Choi distance.
/// A negative answer only means no witness was found.
pub fn postprocessing_oracle(n: &KrausChannel, m: &KrausChannel) -> Result<PostprocessingResult> {
    if n.dim_in != m.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "input dimensions differ: {} vs {}",
            n.dim_in, m.dim_in
        )));
    }
    let target = choi(m);
    let (db, dc) = (n.dim_out, m.dim_out);
    let env = db * dc;
    let rows = dc * env;
    let residual_fn = |x: &[f64]| {
        let w = optim::unpack(x, rows, db);
        let r = channel_from_stinespring_unchecked(&w, dc, env);
        let mut delta = -target.clone();
        for rk in &r {
            for e in n.kraus() {
                let v = vectorize(&(rk * e));
                delta += &v * v.adjoint();
            }
        }
        let mut out = optim::pack(&delta);
        out.extend(optim::pack(&(w.adjoint() * &w - identity(db))));
        out
    };
    let mut best: Option<(f64, KrausChannel)> = None;
    for start in 0..POSTPROCESSING_STARTS {
        let mut rng = random::rng(0x5eed_0000 + start as u64);
        let w0 = random::isometry(&mut rng, rows, db);
        let sol = optim::levenberg_marquardt(
            optim::pack(&w0),
            residual_fn,
            POSTPROCESSING_ITERS,
            POSTPROCESSING_TOL * 1e-3,
        );
        let w = retract_isometry(&optim::unpack(&sol.x, rows, db));
        let witness = channel_from_stinespring(&w, dc, env)?;
        let residual = frobenius(&(choi(&compose(&witness, n)?) - &target));
        if best.as_ref().map_or(true, |(b, _)| residual < *b) {
            best = Some((residual, witness));
        }
        if residual <= POSTPROCESSING_TOL * 1e-2 {
            break;
        }
    }
    let (residual, witness) = best.expect("at least one start");
    Ok(PostprocessingResult {
        related: residual <= POSTPROCESSING_TOL,
        residual,
        witness,
    })
}

fn channel_from_stinespring_unchecked(w: &ComplexMatrix, dim_out: usize, env: usize) -> Vec<ComplexMatrix> {
    (0..env)
        .map(|k| ComplexMatrix::from_fn(dim_out, w.ncols(), |a, j| w[(a * env + k, j)]))
        .collect()
}

/// Kraus operators R_k = (1 ⊗ ⟨k|)W of a Stinespring matrix W (environment last).
pub fn channel_from_stinespring(w: &ComplexMatrix, dim_out: usize, env: usize) -> Result<KrausChannel> {
    let kraus = channel_from_stinespring_unchecked(w, dim_out, env);
    KrausChannel::new(w.ncols(), dim_out, kraus, TpMode::TracePreserving)
}

/// Nearest isometry (polar factor) of a tall matrix.
pub fn retract_isometry(w: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = w.shape();
    if rows == cols {
        return polar_decompose(w).expect("finite matrix").unitary_part;
    }
    crate::linalg::trace_norm(w)
        .expect("finite matrix")
        .contraction
}

/// Standard channel constructors.
pub mod standard {
    use super::*;
    use crate::linalg::{c, from_real_diag, from_real_rows};

    pub fn pauli_x() -> ComplexMatrix {
        from_real_rows(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> ComplexMatrix {
        from_real_diag(&[1.0, -1.0])
    }

    pub fn identity_channel(d: usize) -> KrausChannel {
        KrausChannel::new(d, d, vec![identity(d)], TpMode::TracePreserving).expect("valid")
    }

    /// ρ ↦ UρU† (U may be an isometry).
    pub fn isometric_channel(u: &ComplexMatrix) -> Result<KrausChannel> {
        KrausChannel::new(u.ncols(), u.nrows(), vec![u.clone()], TpMode::TracePreserving)
    }

    /// ρ ↦ [Tr ρ].
    pub fn trace_channel(d: usize) -> KrausChannel {
        let kraus = (0..d).map(|i| ket(d, i).adjoint()).collect();
        KrausChannel::new(d, 1, kraus, TpMode::TracePreserving).expect("valid")
    }

    /// ρ ↦ σ Tr ρ.
    pub fn constant_channel(sigma: &ComplexMatrix, dim_in: usize) -> Result<KrausChannel> {
        let e = hermitian_eig(sigma)?;
        let d = sigma.nrows();
        let mut kraus = Vec::new();
        for (k, p) in e.eigenvalues.iter().enumerate() {
            if *p <= 1e-15 {
                continue;
            }
            for i in 0..dim_in {
                kraus.push((e.vector(k) * ket(dim_in, i).adjoint()).scale(p.sqrt()));
            }
        }
        KrausChannel::new(dim_in, d, kraus, TpMode::TracePreserving)
    }

    /// Qubit dephasing {√(1−p)·1, √p·Z}.
    pub fn dephasing(p: f64) -> KrausChannel {
        KrausChannel::new(
            2,
            2,
            vec![identity(2).scale((1.0 - p).sqrt()), pauli_z().scale(p.sqrt())],
            TpMode::TracePreserving,
        )
        .expect("valid")
    }

    /// Qubit depolarizing ρ ↦ (1−p)ρ + p·1/2; p = 1 is fully depolarizing.
    pub fn depolarizing(p: f64) -> KrausChannel {
        let w = (p / 4.0).sqrt();
        KrausChannel::new(
            2,
            2,
            vec![
                identity(2).scale((1.0 - 0.75 * p).sqrt()),
                pauli_x().scale(w),
                pauli_y().scale(w),
                pauli_z().scale(w),
            ],
            TpMode::TracePreserving,
        )
        .expect("valid")
    }

    pub fn amplitude_damping(gamma: f64) -> KrausChannel {
        KrausChannel::new(
            2,
            2,
            vec![
                from_real_rows(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]),
                from_real_rows(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0]),
            ],
            TpMode::TracePreserving,
        )
        .expect("valid")
    }

    /// Independent bit flips with probability p on each of `n` qubits,
    /// truncated to at most one flip and renormalized onto the identity term.
    pub fn single_bit_flips(n: usize, p: f64) -> KrausChannel {
        let d = 1 << n;
        let flip = |q: usize| {
            let factors: Vec<ComplexMatrix> = (0..n)
                .map(|j| if j == q { pauli_x() } else { identity(2) })
                .collect();
            crate::linalg::tensor_all(factors.iter())
        };
        let p_id = 1.0 - n as f64 * p;
        let mut kraus = vec![identity(d).scale(p_id.sqrt())];
        kraus.extend((0..n).map(|q| flip(q).scale(p.sqrt())));
        KrausChannel::new(d, d, kraus, TpMode::TracePreserving).expect("valid")
    }

    /// ρ ↦ ρ ⊗ |0⟩⟨0| on an ancilla of dimension `k`.
    pub fn append_ancilla(d: usize, k: usize) -> KrausChannel {
        isometric_channel(&tensor(&identity(d), &ket(k, 0))).expect("valid")
    }

    /// Three-qubit repetition code |0⟩ ↦ |000⟩, |1⟩ ↦ |111⟩.
    pub fn repetition_code() -> Isometry {
        let mut v = zeros(8, 2);
        v[(0, 0)] = C64::new(1.0, 0.0);
        v[(7, 1)] = C64::new(1.0, 0.0);
        Isometry::encoding(v).expect("valid")
    }
}
