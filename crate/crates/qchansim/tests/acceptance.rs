//! Acceptance run: one PASS/FAIL line per criterion, with wall-clock limits.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use qchansim::channels::standard::*;
use qchansim::channels::{complementary, compose, KrausChannel, TpMode};
use qchansim::discrimination::{delta_estimate, success_probability_bounds, StateEnsemble};
use qchansim::fidelity::{entanglement_fidelity, worst_case_fidelity, DensityOperator};
use qchansim::linalg::{identity, ket, ket_bra, projector, trace_distance, ComplexMatrix, C64};
use qchansim::oracles::{brute_force_povm_minimax, duality_check, seesaw_max_fidelity};
use qchansim::qec::{encoded_noise, exact_recovery_from_kl, knill_laflamme_check, CodeSpec};
use qchansim::random;
use qchansim::recovery::{
    f0, fixed_state_bounds, minimize_f0, near_optimal_recovery, nearby_correctable, transpose_channel, tyson_channel,
    SimulationProblem,
};

type Verdict = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn worst(n: &KrausChannel, m: &KrausChannel) -> f64 {
    worst_case_fidelity(n, m).unwrap().value
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

struct Suite {
    failed: Vec<u32>,
}

impl Suite {
    fn run(&mut self, id: u32, limit: Option<Duration>, body: impl FnOnce() -> Verdict) {
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = t.elapsed();
        let out = match (out, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {:.1} s, limit {:.0} s", secs(took), secs(l))),
            (o, _) => o,
        };
        match out {
            Ok(detail) => println!("PASS criterion {id}: {detail} [{:.1} s]", secs(took)),
            Err(detail) => {
                println!("FAIL criterion {id}: {detail} [{:.1} s]", secs(took));
                self.failed.push(id);
            }
        }
    }
}

/// Ñ(ρ) = (1−s)ρ + s|0⟩⟨0|Trρ; the noise is its complement.
fn partial_reset(s: f64) -> KrausChannel {
    let kraus = vec![
        identity(2).scale((1.0 - s).sqrt()),
        ket_bra(2, 0, 0).scale(s.sqrt()),
        ket_bra(2, 0, 1).scale(s.sqrt()),
    ];
    complementary(&KrausChannel::new(2, 2, kraus, TpMode::TracePreserving).unwrap()).unwrap()
}

fn reset_closed_form() -> Verdict {
    let mut notes = Vec::new();
    for s in [0.1, 0.5, 0.9] {
        let t = Instant::now();
        let sigma = DensityOperator::pure(&ket(2, 0)).unwrap();
        let p = SimulationProblem::new(partial_reset(s), sigma).unwrap();
        let m = minimize_f0(&p).unwrap();
        let sq = m.value * m.value;
        check((sq - s).abs() <= 1e-6, || format!("s={s}: value² = {sq}"))?;
        let dist = trace_distance(m.rho0.matrix(), &ket_bra(2, 1, 1)).unwrap();
        check(dist <= 1e-6, || format!("s={s}: minimizer {dist:.2e} from |1⟩⟨1|"))?;
        let report = near_optimal_recovery(&p).unwrap();
        check(report.recovery.is_none(), || format!("s={s}: recovery emitted"))?;
        check(report.warnings.iter().any(|w| w.contains("rank")), || format!("s={s}: no rank warning"))?;
        let took = t.elapsed();
        check(took < Duration::from_secs(5), || format!("s={s}: {:.1} s", secs(took)))?;
        notes.push(format!("s={s} |value²−s|={:.1e} dist={dist:.1e} {:.1}s", (sq - s).abs(), secs(took)));
    }
    Ok(notes.join("; "))
}

fn repetition_code_recovery() -> Verdict {
    let code = CodeSpec::new(repetition_code(), "repetition");
    let noise = single_bit_flips(3, 0.1);
    let kl = knill_laflamme_check(&code, &noise).unwrap();
    check(kl.residual < 1e-10, || format!("KL residual {:.2e}", kl.residual))?;
    let enc = encoded_noise(&code, &noise).unwrap();
    let id = identity_channel(2);
    let exact = worst(&compose(&exact_recovery_from_kl(&code, &noise).unwrap(), &enc).unwrap(), &id);
    check(exact >= 1.0 - 1e-7, || format!("KL recovery F = {exact}"))?;
    let report = near_optimal_recovery(&SimulationProblem::correcting(enc.clone()).unwrap()).unwrap();
    let r = report.recovery.ok_or("near-optimal recovery abstained")?;
    let near = worst(&compose(&r, &enc).unwrap(), &id);
    check(near >= 1.0 - 1e-7, || format!("near-optimal recovery F = {near}"))?;
    Ok(format!("KL residual {:.1e}, F(KL) = {exact:.10}, F(near-optimal) = {near:.10}", kl.residual))
}

fn recovery_sandwich() -> Verdict {
    let mut rng = random::rng(2024);
    let id = identity_channel(2);
    let mut emitted = 0;
    let mut worst_margin = f64::INFINITY;
    for i in 0..25 {
        let n = random::channel(&mut rng, 2, 2, 2 + i % 3);
        let report = near_optimal_recovery(&SimulationProblem::correcting(n.clone()).unwrap()).unwrap();
        let f0v = report.f0_value;
        let oracle = seesaw_max_fidelity(&n, &id, 8).unwrap().value;
        let upper = 0.25 * f0v + 0.75;
        check(f0v - 1e-4 <= oracle && oracle <= upper + 1e-4, || {
            format!("channel {i}: f0 {f0v} seesaw {oracle} upper {upper}")
        })?;
        worst_margin = worst_margin.min(oracle - f0v).min(upper - oracle);
        if let Some(r) = &report.recovery {
            emitted += 1;
            let f = worst(&compose(r, &n).unwrap(), &id);
            check(f >= f0v - 1e-6, || format!("channel {i}: F(R̂N) = {f} < f0 = {f0v}"))?;
        }
    }
    Ok(format!("25 channels, smallest margin {worst_margin:.2e}, {emitted} recoveries checked"))
}

fn duality() -> Verdict {
    let mut rng = random::rng(7);
    let mut largest: f64 = 0.0;
    for i in 0..10 {
        let n = random::channel(&mut rng, 2, 2, 2 + i % 2);
        for m in [identity_channel(2), dephasing(0.3)] {
            let d = duality_check(&n, &m, 8).unwrap();
            check(d.gap <= 5e-3, || format!("instance {i}: primal {} dual {}", d.primal, d.dual))?;
            largest = largest.max(d.gap);
        }
    }
    for _ in 0..2 {
        let n = isometric_channel(&random::unitary(&mut rng, 2)).unwrap();
        for m in [identity_channel(2), dephasing(0.3)] {
            let d = duality_check(&n, &m, 8).unwrap();
            check((d.primal - 1.0).abs() <= 1e-6 && (d.dual - 1.0).abs() <= 1e-6, || {
                format!("correctable: primal {} dual {}", d.primal, d.dual)
            })?;
        }
    }
    Ok(format!("20 random pairs, largest gap {largest:.2e}; unitary noise gives 1 on both sides"))
}

fn pure(v: &[C64]) -> ComplexMatrix {
    let k = ComplexMatrix::from_column_slice(v.len(), 1, v);
    let n = k.norm();
    projector(&k.unscale(n))
}

fn bracket_contains_oracle(states: Vec<ComplexMatrix>) -> Result<(f64, f64, f64), String> {
    let ens = StateEnsemble::from_matrices(states).unwrap();
    let b = success_probability_bounds(&ens).unwrap();
    let err = 1.0 - brute_force_povm_minimax(&ens).unwrap().value;
    check(b.err_lower - 1e-4 <= err && err <= b.err_upper + 1e-4, || {
        format!("error {err} outside ({}, {})", b.err_lower, b.err_upper)
    })?;
    Ok((b.err_lower, err, b.err_upper))
}

fn discrimination() -> Verdict {
    let orth = StateEnsemble::from_matrices(vec![ket_bra(2, 0, 0), ket_bra(2, 1, 1)]).unwrap();
    let d0 = delta_estimate(&orth).unwrap().delta;
    check(d0.abs() <= 1e-9, || format!("orthogonal Δ = {d0}"))?;
    let e0 = 1.0 - brute_force_povm_minimax(&orth).unwrap().value;
    check(e0.abs() <= 1e-4, || format!("orthogonal oracle error {e0}"))?;

    let same = vec![ket_bra(2, 0, 0), ket_bra(2, 0, 0)];
    let ds = delta_estimate(&StateEnsemble::from_matrices(same.clone()).unwrap()).unwrap().delta;
    let expect = 1.0 - 0.5f64.sqrt();
    check((ds - expect).abs() <= 1e-7, || format!("identical pair Δ = {ds}"))?;
    let (_, es, _) = bracket_contains_oracle(same)?;
    check((es - 0.5).abs() <= 1e-4, || format!("identical pair oracle error {es}"))?;

    let mut rng = random::rng(99);
    for i in 0..10 {
        let states = (0..2).map(|_| random::density(&mut rng, 2, 1 + i % 2)).collect();
        bracket_contains_oracle(states).map_err(|e| format!("pair {i}: {e}"))?;
    }
    let trine: Vec<ComplexMatrix> = (0..3)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            pure(&[C64::new(a.cos(), 0.0), C64::new(a.sin(), 0.0)])
        })
        .collect();
    let (lo, err, hi) = bracket_contains_oracle(trine)?;
    Ok(format!("Δ(orthogonal) = {d0:.1e}, Δ(identical) − (1 − 1/√2) = {:.1e}, trine {lo:.4} ≤ {err:.4} ≤ {hi:.4}", ds - expect))
}

fn fixed_state_identities() -> Verdict {
    let mut rng = random::rng(31);
    let mut max_dev: f64 = 0.0;
    for i in 0..20 {
        let d_in = 2 + i % 2;
        let n = random::channel(&mut rng, d_in, 2 + (i / 2) % 2, 2 + i % 3);
        let rho = DensityOperator::new(random::density(&mut rng, d_in, 1 + i % d_in)).unwrap();
        let lambda = fixed_state_bounds(&n, &rho).unwrap().lambda;
        let p = SimulationProblem::new(n.clone(), rho.clone()).unwrap();
        let f = f0(&p, &rho).unwrap();
        check((lambda - f).abs() <= 1e-9, || format!("instance {i}: Λ = {lambda}, f0 = {f}"))?;
        max_dev = max_dev.max((lambda - f).abs());
        let r = tyson_channel(&n, &rho).unwrap();
        let fr = entanglement_fidelity(&compose(&r, &n).unwrap(), &identity_channel(d_in), rho.matrix()).unwrap();
        check(fr >= lambda - 1e-6, || format!("instance {i}: F_ρ(R N) = {fr} < Λ = {lambda}"))?;
    }
    let v = repetition_code();
    let noise = single_bit_flips(3, 0.1);
    let rho = DensityOperator::new((v.matrix() * v.matrix().adjoint()).scale(0.5)).unwrap();
    let r = transpose_channel(&noise, &rho).unwrap();
    let enc = v.as_channel();
    let f = worst(&compose(&compose(&r, &noise).unwrap(), &enc).unwrap(), &enc);
    check((f - 1.0).abs() <= 1e-7, || format!("transpose channel F = {f}"))?;
    Ok(format!("max |Λ − f0| = {max_dev:.1e} over 20 instances; transpose channel F = {f:.10}"))
}

fn nearby_correctable_channels() -> Verdict {
    let mut rng = random::rng(55);
    let id = identity_channel(2);
    let mut least_slack = f64::INFINITY;
    for i in 0..10 {
        let n = random::channel(&mut rng, 2, 2, 2 + i % 2);
        let near = nearby_correctable(&n).unwrap();
        let f = worst(&compose(&near.n0_recovery, &near.n0).unwrap(), &id);
        check((f - 1.0).abs() <= 1e-7, || format!("channel {i}: N₀ recovery F = {f}"))?;
        // min_R d(R N', id) ≤ d(N', N₀), and the minimum is at least ½√(1 − F_0)
        let m = minimize_f0(&SimulationProblem::correcting(n.clone()).unwrap()).unwrap();
        let lower = 0.5 * (1.0 - m.value.min(1.0)).sqrt();
        check(near.distance >= lower - 1e-4, || {
            format!("channel {i}: d(N', N₀) = {} below {lower}", near.distance)
        })?;
        least_slack = least_slack.min(near.distance - lower);
    }
    let correctable = [
        identity_channel(2),
        isometric_channel(&random::unitary(&mut rng, 2)).unwrap(),
        encoded_noise(&CodeSpec::new(repetition_code(), "repetition"), &single_bit_flips(3, 0.1)).unwrap(),
    ];
    let mut largest: f64 = 0.0;
    for n in &correctable {
        let near = nearby_correctable(n).unwrap();
        check(near.distance <= 1e-6, || format!("correctable input: distance {}", near.distance))?;
        largest = largest.max(near.distance);
    }
    Ok(format!("10 channels, smallest d(N', N₀) − lower bound = {least_slack:.2e}; correctable inputs within {largest:.1e}"))
}

fn invariant_suites() -> Verdict {
    type Property = fn(common::Case) -> common::Outcome;
    let props: [(&str, usize, Property); 5] = [
        ("fidelity axioms", 4, common::fidelity_axioms),
        ("monotonicity", 3, common::monotonicity),
        ("f0 midpoint convexity", 3, common::f0_midpoint_convexity),
        ("complementary involution", 3, common::complementary_involution),
        ("X/Φ consistency", 3, common::x_phi_consistency),
    ];
    let mut failures = Vec::new();
    for (name, max_dim, prop) in props {
        let config = Config {
            cases: 200,
            failure_persistence: None,
            ..Config::default()
        };
        let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        if let Err(e) = runner.run(&common::case(max_dim, 3), prop) {
            failures.push(format!("{name}: {e}"));
        }
    }
    check(failures.is_empty(), || failures.join("; "))?;
    Ok("5 properties × 200 cases, 0 failures".into())
}

#[test]
fn acceptance() {
    let mut suite = Suite { failed: Vec::new() };
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    suite.run(1, None, reset_closed_form);
    suite.run(2, Some(Duration::from_secs(30)), repetition_code_recovery);
    suite.run(3, minutes(10), recovery_sandwich);
    suite.run(4, minutes(10), duality);
    suite.run(5, minutes(5), discrimination);
    suite.run(6, None, fixed_state_identities);
    suite.run(7, None, nearby_correctable_channels);
    suite.run(8, minutes(10), invariant_suites);
    assert!(suite.failed.is_empty(), "failed criteria: {:?}", suite.failed);
}
