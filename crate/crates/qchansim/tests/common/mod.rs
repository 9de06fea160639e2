//! Property bodies shared by the invariant suite and the acceptance run.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use qchansim::channels::{complementary, compose, postprocessing_oracle, KrausChannel};
use qchansim::fidelity::{entanglement_fidelity, fidelity, worst_case_fidelity, DensityOperator};
use qchansim::linalg::{frobenius, identity, ComplexMatrix};
use qchansim::random::{self, Rng};
use qchansim::recovery::{f0, phi_map, x_operator, SimulationProblem};

pub type Outcome = Result<(), TestCaseError>;

/// A seed plus small dimensions, all instances built from the seed.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub seed: u64,
    pub d_in: usize,
    pub d_out: usize,
    pub n_kraus: usize,
}

impl Case {
    pub fn rng(&self) -> Rng {
        random::rng(self.seed)
    }
}

pub fn case(max_dim: usize, max_kraus: usize) -> impl Strategy<Value = Case> {
    // a Stinespring isometry needs d_out·n_kraus ≥ d_in
    (any::<u64>(), 2..=max_dim, 2..=max_dim, 1..=max_kraus).prop_map(|(seed, d_in, d_out, n_kraus)| Case {
        seed,
        d_in,
        d_out,
        n_kraus: n_kraus.max(d_in.div_ceil(d_out)),
    })
}

fn mixed(rng: &mut Rng, d: usize) -> ComplexMatrix {
    let rank = 1 + (random::uniform(rng) * d as f64) as usize;
    random::density(rng, d, rank.min(d))
}

fn err(e: qchansim::Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

/// Range, symmetry, normalization and unitary invariance of the state
/// fidelity, plus symmetry and normalization of the entanglement fidelity.
pub fn fidelity_axioms(c: Case) -> Outcome {
    let mut rng = c.rng();
    let d = c.d_in;
    let rho = mixed(&mut rng, d);
    let sigma = mixed(&mut rng, d);
    let f = fidelity(&rho, &sigma).map_err(err)?;
    prop_assert!((-1e-12..=1.0 + 1e-10).contains(&f), "f = {f}");
    let g = fidelity(&sigma, &rho).map_err(err)?;
    prop_assert!((f - g).abs() <= 1e-9, "asymmetric: {f} vs {g}");
    let same = fidelity(&rho, &rho).map_err(err)?;
    prop_assert!((same - 1.0).abs() <= 1e-9, "f(ρ,ρ) = {same}");
    let u = random::unitary(&mut rng, d);
    let conj = |m: &ComplexMatrix| &u * m * u.adjoint();
    let h = fidelity(&conj(&rho), &conj(&sigma)).map_err(err)?;
    prop_assert!((f - h).abs() <= 1e-9, "not unitarily invariant: {f} vs {h}");

    let n = random::channel(&mut rng, d, c.d_out, c.n_kraus);
    let m = random::channel(&mut rng, d, c.d_out, c.n_kraus);
    let nm = entanglement_fidelity(&n, &m, &rho).map_err(err)?;
    let mn = entanglement_fidelity(&m, &n, &rho).map_err(err)?;
    prop_assert!((nm - mn).abs() <= 1e-9);
    prop_assert!((-1e-12..=1.0 + 1e-10).contains(&nm));
    let nn = entanglement_fidelity(&n, &n, &rho).map_err(err)?;
    prop_assert!((nn - 1.0).abs() <= 1e-9, "F_ρ(N,N) = {nn}");
    Ok(())
}

fn distance(n: &KrausChannel, m: &KrausChannel) -> Result<(f64, f64), TestCaseError> {
    let wc = worst_case_fidelity(n, m).map_err(err)?;
    Ok(((1.0 - wc.value.min(1.0)).max(0.0).sqrt(), wc.gap))
}

/// d(N∘R, M∘R) ≤ d(N, M) for the worst-case distance, and
/// F_ρ(S∘N, S∘M) ≥ F_ρ(N, M) at a fixed input.
pub fn monotonicity(c: Case) -> Outcome {
    let mut rng = c.rng();
    let d = c.d_in.min(3);
    let mid = c.d_out.min(3);
    let r = random::channel(&mut rng, d, mid, c.n_kraus);
    let n = random::channel(&mut rng, mid, 2, 2);
    let m = random::channel(&mut rng, mid, 2, 2);
    let (outer, outer_gap) = distance(&n, &m)?;
    let (inner, _) = distance(&compose(&n, &r).map_err(err)?, &compose(&m, &r).map_err(err)?)?;
    // the reported d is a lower bound; its error in F is at most the gap
    let slack = 1e-7 + (outer * outer + outer_gap).sqrt() - outer;
    prop_assert!(inner <= outer + slack, "d(NR,MR) = {inner} > d(N,M) = {outer}");

    let rho = mixed(&mut rng, mid);
    let s = random::channel(&mut rng, 2, 2, c.n_kraus);
    let before = entanglement_fidelity(&n, &m, &rho).map_err(err)?;
    let after = entanglement_fidelity(&compose(&s, &n).map_err(err)?, &compose(&s, &m).map_err(err)?, &rho)
        .map_err(err)?;
    prop_assert!(after >= before - 1e-9, "{after} < {before}");
    Ok(())
}

fn problem(rng: &mut Rng, c: Case) -> SimulationProblem {
    let n = random::channel(rng, c.d_in, c.d_out, c.n_kraus);
    let sigma = DensityOperator::new(mixed(rng, c.d_in)).unwrap();
    SimulationProblem::new(n, sigma).unwrap()
}

/// f0((ρ₁+ρ₂)/2) ≤ (f0(ρ₁)+f0(ρ₂))/2.
pub fn f0_midpoint_convexity(c: Case) -> Outcome {
    let mut rng = c.rng();
    let p = problem(&mut rng, c);
    let r1 = mixed(&mut rng, c.d_in);
    let r2 = mixed(&mut rng, c.d_in);
    let mid = (&r1 + &r2).scale(0.5);
    let val = |m: ComplexMatrix| f0(&p, &DensityOperator::new(m).unwrap()).map_err(err);
    let (a, b, m) = (val(r1)?, val(r2)?, val(mid)?);
    prop_assert!(m <= 0.5 * (a + b) + 1e-9, "f0(mid) = {m} > {}", 0.5 * (a + b));
    Ok(())
}

/// The complement of the complement and the channel post-process into each
/// other.
pub fn complementary_involution(c: Case) -> Outcome {
    let mut rng = c.rng();
    let d_out = c.d_out.min(3);
    let n_kraus = c.n_kraus.min(3);
    let n = random::channel(&mut rng, 2, d_out, n_kraus);
    let back = complementary(&complementary(&n).map_err(err)?).map_err(err)?;
    for (a, b) in [(&back, &n), (&n, &back)] {
        let r = postprocessing_oracle(a, b).map_err(err)?;
        prop_assert!(r.related && r.residual <= 1e-6, "residual {}", r.residual);
    }
    Ok(())
}

/// X_ρ†X_ρ = Φ_ρ(1).
pub fn x_phi_consistency(c: Case) -> Outcome {
    let mut rng = c.rng();
    let p = problem(&mut rng, c);
    let rho = DensityOperator::new(mixed(&mut rng, c.d_in)).unwrap();
    let x = x_operator(&p, &rho).map_err(err)?;
    let phi = phi_map(&p, &rho).map_err(err)?;
    let out = phi.apply(&identity(phi.dim_in())).map_err(err)?;
    let dev = frobenius(&(x.adjoint() * &x - out));
    prop_assert!(dev <= 1e-10, "‖X†X − Φ(1)‖ = {dev}");
    Ok(())
}
