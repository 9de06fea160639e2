use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qchansim::channels::{complementary, compose, minimal_kraus_count, standard, KrausChannel, TpMode};
use qchansim::discrimination::delta_estimate_seeded;
use qchansim::fidelity::{worst_case_fidelity_with, DensityOperator, WorstCaseOptions};
use qchansim::io;
use qchansim::oracles::{duality_check_with, SeesawOptions};
use qchansim::qec::{algebra_correctable_check, encoded_noise, knill_laflamme_check, CORRECTABLE_TOL};
use qchansim::recovery::{near_optimal_recovery_with, F0Options, RecoveryReport, SimulationProblem};
use qchansim::Error;

const DUALITY_GAP_TOL: f64 = 5e-3;

#[derive(Parser, Debug)]
#[command(name = "qchansim", version, about = "Channel simulation, recovery bounds and discrimination estimates")]
struct Cli {
    /// Seed for every randomized start.
    #[arg(long, global = true, env = "QDK_SEED", default_value_t = 0)]
    seed: u64,
    /// Tolerance override, e.g. `--tol correctable=1e-6`. Keys: correctable, duality_gap.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a channel file and report its normalization and Kraus rank.
    Validate { channel: PathBuf },
    /// Write a complementary channel.
    Complementary { channel: PathBuf },
    /// Knill-Laflamme test of a code against a noise channel.
    KlCheck { code: PathBuf, noise: PathBuf },
    /// Correctability of an operator algebra on a code.
    AlgebraCheck { algebra: PathBuf, code: PathBuf, noise: PathBuf },
    /// Minimize F_0 and report the recovery-fidelity bounds.
    Bounds {
        noise: PathBuf,
        #[arg(long)]
        code: Option<PathBuf>,
        /// Matrix file for σ; maximally mixed when absent.
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Construct the near-optimal recovery channel.
    Recover {
        noise: PathBuf,
        #[arg(long)]
        code: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<PathBuf>,
    },
    /// Δ estimate and minimax error bracket for a state ensemble.
    Discriminate { ensemble: PathBuf },
    /// Worst-case fidelity and distance of R∘N against a target.
    Verify {
        noise: PathBuf,
        recovery: PathBuf,
        /// Target channel; the identity when absent.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        code: Option<PathBuf>,
    },
    /// Compare max_R F(RN, M) with its complementary dual.
    DualityCheck {
        n: PathBuf,
        m: PathBuf,
        #[arg(long, default_value_t = 8)]
        budget: usize,
    },
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    let v: f64 = v.parse().map_err(|e| format!("bad value for {k}: {e}"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("tolerance {k} must be finite and non-negative"));
    }
    Ok((k.to_string(), v))
}

#[derive(Debug)]
struct Tolerances {
    correctable: f64,
    duality_gap: f64,
}

impl Tolerances {
    fn from_overrides(pairs: &[(String, f64)]) -> Result<Self, Failure> {
        let mut t = Self {
            correctable: CORRECTABLE_TOL,
            duality_gap: DUALITY_GAP_TOL,
        };
        for (k, v) in pairs {
            match k.as_str() {
                "correctable" => t.correctable = *v,
                "duality_gap" => t.duality_gap = *v,
                other => return Err(Failure::Usage(format!("unknown tolerance key '{other}'"))),
            }
        }
        Ok(t)
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 2,
            Failure::Lib(Error::Schema(_)) => 2,
            Failure::Lib(Error::DeskScaleExceeded { .. }) => 4,
            Failure::Lib(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

/// A finished command: the document to emit and whether the verdict was
/// affirmative.
struct Outcome {
    doc: Value,
    affirmative: bool,
    note: Option<String>,
}

impl Outcome {
    fn ok(doc: Value) -> Self {
        Self { doc, affirmative: true, note: None }
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(io::parse(&text)?)
}

fn load_channel(path: &Path) -> Result<KrausChannel, Failure> {
    Ok(io::channel_from_json(&read_json(path)?)?.channel)
}

fn load_noise(noise: &Path, code: Option<&Path>) -> Result<KrausChannel, Failure> {
    let n = load_channel(noise)?;
    match code {
        Some(c) => Ok(encoded_noise(&io::code_from_json(&read_json(c)?)?, &n)?),
        None => Ok(n),
    }
}

fn problem(noise: &Path, code: Option<&Path>, sigma: Option<&Path>) -> Result<SimulationProblem, Failure> {
    let n = load_noise(noise, code)?;
    match sigma {
        Some(s) => {
            let sigma = DensityOperator::new(io::matrix_from_json(&read_json(s)?)?)?;
            Ok(SimulationProblem::new(n, sigma)?)
        }
        None => Ok(SimulationProblem::correcting(n)?),
    }
}

fn recovery_report(p: &SimulationProblem, seed: u64) -> Result<RecoveryReport, Failure> {
    let opts = F0Options { seed, ..F0Options::default() };
    Ok(near_optimal_recovery_with(p, opts)?)
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let tol = Tolerances::from_overrides(&cli.tol)?;
    let seed = cli.seed;
    match &cli.command {
        Command::Validate { channel } => {
            let doc = io::channel_from_json(&read_json(channel)?)?;
            let ch = &doc.channel;
            let mode = match ch.tp_mode() {
                TpMode::TracePreserving => "tp",
                TpMode::TraceNonincreasing => "tni",
            };
            let rank = minimal_kraus_count(ch);
            Ok(Outcome::ok(json!({
                "name": doc.name,
                "tp_mode": mode,
                "dim_in": ch.dim_in(),
                "dim_out": ch.dim_out(),
                "kraus_count": ch.n_kraus(),
                "minimal_kraus_count": rank,
                "summary": format!("{mode}, |N|={rank}"),
            })))
        }
        Command::Complementary { channel } => {
            let doc = io::channel_from_json(&read_json(channel)?)?;
            let c = complementary(&doc.channel)?;
            Ok(Outcome::ok(io::channel_to_json(&c, &format!("{}_complementary", doc.name))))
        }
        Command::KlCheck { code, noise } => {
            let code = io::code_from_json(&read_json(code)?)?;
            let check = knill_laflamme_check(&code, &load_channel(noise)?)?;
            let correctable = check.residual <= tol.correctable;
            Ok(Outcome {
                doc: json!({
                    "correctable": correctable,
                    "residual": check.residual,
                    "lambda": io::matrix_to_json(&check.lambda),
                }),
                affirmative: correctable,
                note: None,
            })
        }
        Command::AlgebraCheck { algebra, code, noise } => {
            let alg = io::algebra_from_json(&read_json(algebra)?)?;
            let code = io::code_from_json(&read_json(code)?)?;
            let check = algebra_correctable_check(&alg, &code, &load_channel(noise)?)?;
            let correctable = check.residual <= tol.correctable;
            Ok(Outcome {
                doc: json!({ "correctable": correctable, "residual": check.residual }),
                affirmative: correctable,
                note: None,
            })
        }
        Command::Bounds { noise, code, sigma } => {
            let p = problem(noise, code.as_deref(), sigma.as_deref())?;
            Ok(Outcome::ok(io::report_to_json(&recovery_report(&p, seed)?)))
        }
        Command::Recover { noise, code, sigma } => {
            let p = problem(noise, code.as_deref(), sigma.as_deref())?;
            let report = recovery_report(&p, seed)?;
            match &report.recovery {
                Some(r) => Ok(Outcome::ok(io::channel_to_json(r, "recovery"))),
                None => Ok(Outcome {
                    doc: io::report_to_json(&report),
                    affirmative: false,
                    note: Some(format!("no recovery constructed: {}", report.warnings.join("; "))),
                }),
            }
        }
        Command::Discriminate { ensemble } => {
            let ens = io::ensemble_from_json(&read_json(ensemble)?)?;
            let est = delta_estimate_seeded(&ens, seed)?;
            let d = est.delta;
            Ok(Outcome::ok(json!({
                "delta": d,
                "p_star": est.p_star,
                "gap": est.gap,
                "error_bracket": [0.5 * d - d * d / 16.0, 2.0 * d - d * d],
            })))
        }
        Command::Verify { noise, recovery, target, code } => {
            let n = load_noise(noise, code.as_deref())?;
            let r = load_channel(recovery)?;
            let m = match target {
                Some(t) => load_channel(t)?,
                None => standard::identity_channel(n.dim_in()),
            };
            let rn = compose(&r, &n)?;
            let opts = WorstCaseOptions { seed, ..WorstCaseOptions::default() };
            let wc = worst_case_fidelity_with(&rn, &m, opts)?;
            let f = wc.value.min(1.0);
            Ok(Outcome::ok(json!({
                "fidelity": wc.value,
                "distance": (1.0 - f).max(0.0).sqrt(),
                "gap": wc.gap,
            })))
        }
        Command::DualityCheck { n, m, budget } => {
            let n = load_channel(n)?;
            let m = load_channel(m)?;
            let opts = SeesawOptions { seed, ..SeesawOptions::default() };
            let d = duality_check_with(&n, &m, *budget, opts)?;
            let within = d.gap <= tol.duality_gap;
            Ok(Outcome {
                doc: json!({ "primal": d.primal, "dual": d.dual, "gap": d.gap, "within_tolerance": within }),
                affirmative: within,
                note: None,
            })
        }
    }
}

fn emit(doc: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = io::to_string_pretty(doc);
    text.push('\n');
    let Some(path) = out else {
        print!("{text}");
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(text.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|o| emit(&o.doc, cli.out.as_deref()).map(|_| o));
    match result {
        Ok(o) => {
            if let Some(note) = &o.note {
                eprintln!("{note}");
            }
            ExitCode::from(if o.affirmative { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
