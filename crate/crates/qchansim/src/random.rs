//! Seeded random states, unitaries and channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channels::{KrausChannel, TpMode};
use crate::linalg::{trace, ComplexMatrix, C64};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with unit-variance entries.
pub fn ginibre(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Orthonormalize the columns of a tall matrix (modified Gram-Schmidt).
fn orthonormal_columns(mut m: ComplexMatrix) -> ComplexMatrix {
    let cols = m.ncols();
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..m.nrows()).map(|i| m[(i, k)].conj() * m[(i, j)]).sum();
                for i in 0..m.nrows() {
                    let v = m[(i, k)];
                    m[(i, j)] -= v * proj;
                }
            }
        }
        let n: f64 = (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..m.nrows() {
            m[(i, j)] /= n;
        }
    }
    m
}

/// Haar-distributed isometry C^cols → C^rows.
pub fn isometry(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols);
    orthonormal_columns(ginibre(rng, rows, cols))
}

pub fn unitary(rng: &mut Rng, d: usize) -> ComplexMatrix {
    isometry(rng, d, d)
}

/// Random density operator of the given rank (Hilbert-Schmidt measure for full rank).
pub fn density(rng: &mut Rng, d: usize, rank: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    m.unscale(t)
}

pub fn pure_state(rng: &mut Rng, d: usize) -> ComplexMatrix {
    density(rng, d, 1)
}

/// Random channel with `n_kraus` Kraus operators from a Haar isometry.
pub fn channel(rng: &mut Rng, dim_in: usize, dim_out: usize, n_kraus: usize) -> KrausChannel {
    let v = isometry(rng, dim_out * n_kraus, dim_in);
    let kraus = (0..n_kraus)
        .map(|k| ComplexMatrix::from_fn(dim_out, dim_in, |i, j| v[(i * n_kraus + k, j)]))
        .collect();
    KrausChannel::new(dim_in, dim_out, kraus, TpMode::TracePreserving)
        .expect("isometry blocks form a channel")
}

/// Random trace-nonincreasing map: a channel scaled by `factor ≤ 1`.
pub fn subchannel(rng: &mut Rng, dim_in: usize, dim_out: usize, n_kraus: usize, factor: f64) -> KrausChannel {
    let ch = channel(rng, dim_in, dim_out, n_kraus);
    let s = factor.sqrt();
    KrausChannel::new(
        dim_in,
        dim_out,
        ch.kraus().iter().map(|k| k.scale(s)).collect(),
        TpMode::TraceNonincreasing,
    )
    .expect("scaled channel is subnormalized")
}

/// Uniform point in [0,1).
pub fn uniform(rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    rng.gen::<f64>()
}
