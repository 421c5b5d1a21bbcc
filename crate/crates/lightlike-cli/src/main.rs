//! `ljet` — batch front-end for the lightlike-hypersurface pipeline:
//! analyze jet files, check the gauge-flow laws, compute involutivity
//! characters, and emit flat-model fixtures with trajectory and
//! foci-locus plot data.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use lightlike::cartan::characters_seeded;
use lightlike::flat::{
    develop_along_generator, generate_jet, GeneratorPoint, GeneratorSpan, ModelSpec,
};
use lightlike::gauge::{
    check_weight, integrate_gauge_flow, integrate_state, GaugeParams, GaugeState,
};
use lightlike::invariants::singular_points;
use lightlike::jet::{load_jet, save_jet};
use lightlike::report::{analyze, AnalysisReport, Classification};
use lightlike::{Error, Tolerances, DEFAULT_SEED};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Exit codes: 0 success, 1 residual over tolerance, 2 invalid input,
/// 3 degenerate verdict (umbilical, special-type, singular chart).
const EXIT_OK: i32 = 0;
const EXIT_RESIDUAL: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_DEGENERATE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "ljet",
    version,
    about = "Invariant-normalization pipeline for lightlike hypersurfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override one tolerance, e.g. `--tol umbilical=1e-6` (repeatable).
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Output file (`analyze`, `gauge-check`, `cartan`) or output
    /// directory (`model`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for batch analysis.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one or more jet files.
    Analyze {
        /// Jet file in `ljet-1` JSON form (repeatable).
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
    },
    /// Integrate the gauge flow on a jet and report per-law residuals,
    /// measured scaling weights, and the flow-composition defect.
    GaugeCheck {
        /// Jet file in `ljet-1` JSON form.
        #[arg(long)]
        input: PathBuf,
        /// Flow-parameter JSON file; all rates default to zero.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Flow time.
        #[arg(long, default_value_t = 0.5)]
        time: f64,
        /// Integration steps (minimum 100).
        #[arg(long, default_value_t = 400)]
        steps: usize,
    },
    /// Involutivity characters of the exterior system in ambient
    /// dimension n.
    Cartan {
        #[arg(long)]
        n: usize,
    },
    /// Generate flat-model jet fixtures with development trajectories
    /// and foci-locus plot data.
    Model {
        /// Model specification JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Number of generators to sample.
        #[arg(long, default_value_t = 8)]
        generators: usize,
        /// Ruling coordinate at which jet fixtures are extracted.
        #[arg(long, default_value_t = 0.75)]
        jet_s: f64,
        /// Development span start.
        #[arg(long, default_value_t = 0.25)]
        span_start: f64,
        /// Development span end.
        #[arg(long, default_value_t = 1.0)]
        span_end: f64,
        /// Development integration steps.
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(&cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("ljet: {}", failure.message);
            failure.code
        }
    });
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Umbilical | Error::SpecialType | Error::SingularChart(_) => EXIT_DEGENERATE,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::invalid(err.to_string())
    }
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let tols = tolerances(&cli.tol)?;
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    if cli.jobs == 0 {
        return Err(Failure::invalid("--jobs must be at least 1"));
    }
    match &cli.command {
        Command::Analyze { input } => cmd_analyze(cli, &tols, input),
        Command::GaugeCheck {
            input,
            params,
            time,
            steps,
        } => cmd_gauge_check(cli, &tols, input, params.as_deref(), *time, *steps),
        Command::Cartan { n } => cmd_cartan(cli, seed, *n),
        Command::Model {
            spec,
            generators,
            jet_s,
            span_start,
            span_end,
            steps,
        } => cmd_model(
            cli,
            &tols,
            seed,
            spec,
            *generators,
            *jet_s,
            *span_start,
            *span_end,
            *steps,
        ),
    }
}

/// Base profile from `LJET_TOL_PROFILE`, then named overrides on top.
fn tolerances(overrides: &[String]) -> Result<Tolerances, Failure> {
    let mut tols = match std::env::var("LJET_TOL_PROFILE") {
        Ok(profile) => match profile.as_str() {
            "strict" => Tolerances::strict(),
            "default" => Tolerances::default(),
            other => {
                return Err(Failure::invalid(format!(
                    "unknown tolerance profile `{other}` (expected `strict` or `default`)"
                )))
            }
        },
        Err(_) => Tolerances::default(),
    };
    for entry in overrides {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| Failure::invalid(format!("--tol `{entry}` is not NAME=VALUE")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Failure::invalid(format!("--tol `{entry}` has a non-numeric value")))?;
        tols.set(name, value)?;
    }
    Ok(tols)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

// ---------------------------------------------------------------- analyze

fn cmd_analyze(cli: &Cli, tols: &Tolerances, inputs: &[PathBuf]) -> Result<i32, Failure> {
    let reports = analyze_batch(inputs, tols, cli.jobs)?;

    let text = match cli.format {
        Format::Json => {
            let body = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0]).expect("report serialization")
            } else {
                serde_json::to_string_pretty(&reports).expect("report serialization")
            };
            format!("{body}\n")
        }
        Format::Csv => analyze_csv(inputs, &reports),
    };
    emit(cli.out.as_deref(), &text)?;

    let degenerate = reports
        .iter()
        .any(|r| r.classification != Classification::Regular);
    Ok(if degenerate { EXIT_DEGENERATE } else { EXIT_OK })
}

/// Worker pool over the input list; results are collected by index so the
/// output order never depends on scheduling.
fn analyze_batch(
    inputs: &[PathBuf],
    tols: &Tolerances,
    jobs: usize,
) -> Result<Vec<AnalysisReport>, Failure> {
    let slots: Mutex<Vec<Option<Result<AnalysisReport, String>>>> =
        Mutex::new(vec![None; inputs.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.min(inputs.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= inputs.len() {
                    break;
                }
                let outcome = load_jet(&inputs[idx], tols)
                    .and_then(|jet| analyze(&jet, tols))
                    .map_err(|e| format!("{}: {e}", inputs[idx].display()));
                slots.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let mut reports = Vec::with_capacity(inputs.len());
    for slot in slots.into_inner().unwrap() {
        match slot.expect("every index visited") {
            Ok(report) => reports.push(report),
            Err(message) => return Err(Failure::invalid(message)),
        }
    }
    Ok(reports)
}

fn analyze_csv(inputs: &[PathBuf], reports: &[AnalysisReport]) -> String {
    let mut text =
        String::from("input,n,classification,foci,multiplicities,mu,tau,max_residual\n");
    for (path, report) in inputs.iter().zip(reports.iter()) {
        let foci = join_floats(&report.foci.cluster_values);
        let multiplicities = report
            .foci
            .multiplicities
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let mu = report
            .normalization
            .as_ref()
            .map(|n| n.mu.to_string())
            .unwrap_or_default();
        let tau = report
            .normalization
            .as_ref()
            .and_then(|n| n.transversal.as_ref())
            .map(|t| t.tau.to_string())
            .unwrap_or_default();
        let max_residual = report
            .residuals
            .values()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            path.display(),
            report.n,
            report.classification,
            foci,
            multiplicities,
            mu,
            tau,
            max_residual
        ));
    }
    text
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

// ------------------------------------------------------------ gauge-check

/// Flow-parameter file: every rate optional, defaulting to zero.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    #[serde(default)]
    pi00: f64,
    #[serde(default)]
    pi11: f64,
    #[serde(default)]
    pi01: f64,
    #[serde(default)]
    pi_ab: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pi_a0: Option<Vec<f64>>,
    #[serde(default)]
    pi_a1: Option<Vec<f64>>,
    #[serde(default)]
    pi_n0: f64,
}

fn params_from_file(file: &ParamsFile, m: usize) -> Result<GaugeParams, Failure> {
    let mut params = GaugeParams::zero(m);
    params.pi00 = file.pi00;
    params.pi11 = file.pi11;
    params.pi01 = file.pi01;
    params.pi_n0 = file.pi_n0;
    if let Some(rows) = &file.pi_ab {
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Failure::invalid(format!("pi_ab must be {m}x{m}")));
        }
        params.pi_ab = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    }
    for (name, target, source) in [
        ("pi_a0", &mut params.pi_a0, &file.pi_a0),
        ("pi_a1", &mut params.pi_a1, &file.pi_a1),
    ] {
        if let Some(values) = source {
            if values.len() != m {
                return Err(Failure::invalid(format!("{name} must have {m} entries")));
            }
            *target = DVector::from_column_slice(values);
        }
    }
    Ok(params)
}

#[derive(Serialize)]
struct GaugeCheckReport {
    time: f64,
    steps: usize,
    /// Per-law self-consistency residuals of the flowed state.
    residuals: BTreeMap<String, f64>,
    max_residual: f64,
    /// Measured scaling exponents under the pure rescaling generator,
    /// with their expected integer weights.
    weights: BTreeMap<String, WeightEntry>,
    worst_weight_error: f64,
    /// Two flows of durations summing to `time` versus one flow of
    /// `time`, as a state distance.
    composition_residual: f64,
    within_tolerance: bool,
}

#[derive(Serialize)]
struct WeightEntry {
    measured: f64,
    expected: f64,
}

fn cmd_gauge_check(
    cli: &Cli,
    tols: &Tolerances,
    input: &Path,
    params_path: Option<&Path>,
    time: f64,
    steps: usize,
) -> Result<i32, Failure> {
    let jet = load_jet(input, tols)?;
    let m = jet.m();

    let params = match params_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let file: ParamsFile = serde_json::from_str(&text)
                .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
            params_from_file(&file, m)?
        }
        None => GaugeParams::zero(m),
    };

    let flow = integrate_gauge_flow(&jet, &params, time, steps)?;
    let mut residuals = BTreeMap::new();
    let r = &flow.residuals;
    residuals.insert("h-vs-lambda".to_string(), r.h_vs_lambda);
    residuals.insert("mu-vs-h".to_string(), r.mu_vs_h);
    let optional = [
        ("central-vs-h", r.central_vs_h),
        ("inverse-consistency", r.inverse_consistency),
        ("mn-vs-invariants", r.mn_vs_invariants),
        ("pq-vs-mn", r.pq_vs_mn),
        ("tau-vs-matrix", r.tau_vs_matrix),
        ("cn-vs-tau", r.cn_vs_tau),
        ("foci-vs-matrix", r.foci_vs_matrix),
    ];
    for (name, value) in optional {
        if let Some(v) = value {
            residuals.insert(name.to_string(), v);
        }
    }
    let max_residual = flow.residuals.max_residual();

    // Scaling weights, probed independently of the supplied parameters.
    let probe = GaugeParams {
        pi11: 0.4,
        ..GaugeParams::zero(m)
    };
    let expected = [
        ("mu", 2.0),
        ("nu", 3.0),
        ("h_ab", 1.0),
        ("central", 2.0),
        ("central_inverse", -2.0),
        ("tau", -1.0),
        ("tau_a", 0.0),
        ("tau_ab", -1.0),
    ];
    let mut weights = BTreeMap::new();
    let mut worst_weight_error = 0.0f64;
    for (name, want) in expected {
        match check_weight(name, &jet, &probe, 0.8) {
            // An identically-zero quantity measures the conventional
            // exponent 0 exactly; that says nothing about its weight, so
            // it is left out of the table rather than gated.
            Ok(measured) if measured == 0.0 && want != 0.0 => {}
            Ok(measured) => {
                worst_weight_error = worst_weight_error.max((measured - want).abs());
                weights.insert(
                    name.to_string(),
                    WeightEntry {
                        measured,
                        expected: want,
                    },
                );
            }
            // Layers the jet does not carry (degenerate branches) are
            // simply absent from the table.
            Err(Error::SpecialType) | Err(Error::Umbilical) => {}
            Err(other) => return Err(other.into()),
        }
    }

    let one_leg = integrate_state(&GaugeState::from_jet(&jet, tols), &params, time, steps)?;
    let two_leg = {
        let first = integrate_gauge_flow(&jet, &params, 0.6 * time, steps)?;
        integrate_state(&first.state, &params, 0.4 * time, steps)?
    };
    let composition_residual = two_leg.state.distance(&one_leg.state);

    let within_tolerance = max_residual < tols.flow
        && composition_residual < tols.flow
        && worst_weight_error < tols.weight_fit;

    let report = GaugeCheckReport {
        time,
        steps,
        residuals,
        max_residual,
        weights,
        worst_weight_error,
        composition_residual,
        within_tolerance,
    };

    let text = match cli.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serialization")
        ),
        Format::Csv => {
            let mut text = String::from("check,value\n");
            for (name, value) in &report.residuals {
                text.push_str(&format!("residual-{name},{value}\n"));
            }
            for (name, entry) in &report.weights {
                text.push_str(&format!("weight-{name},{}\n", entry.measured));
            }
            text.push_str(&format!("composition,{}\n", report.composition_residual));
            text
        }
    };
    emit(cli.out.as_deref(), &text)?;

    Ok(if within_tolerance {
        EXIT_OK
    } else {
        EXIT_RESIDUAL
    })
}

// ----------------------------------------------------------------- cartan

fn cmd_cartan(cli: &Cli, seed: u64, n: usize) -> Result<i32, Failure> {
    let report = characters_seeded(n, seed)?;
    let text = match cli.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serialization")
        ),
        Format::Csv => {
            let characters = report
                .characters
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            format!(
                "n,involutive,cartan_number,element_dimension,characters\n{},{},{},{},{}\n",
                report.n,
                report.involutive,
                report.cartan_number,
                report.element_dimension,
                characters
            )
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

// ------------------------------------------------------------------ model

#[allow(clippy::too_many_arguments)]
fn cmd_model(
    cli: &Cli,
    tols: &Tolerances,
    seed: u64,
    spec_path: &Path,
    generators: usize,
    jet_s: f64,
    span_start: f64,
    span_end: f64,
    steps: usize,
) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: ModelSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", spec_path.display())))?;
    spec.validate()?;
    let out_dir = cli
        .out
        .as_deref()
        .ok_or_else(|| Failure::invalid("model needs --out DIRECTORY"))?;
    std::fs::create_dir_all(out_dir)?;

    let m = spec.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut foci_csv = String::from("generator");
    for a in 0..m {
        foci_csv.push_str(&format!(",s{}", a + 1));
    }
    foci_csv.push('\n');

    for k in 0..generators {
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();

        // jet fixture at the sampling coordinate
        let point = GeneratorPoint { s: jet_s, u: u.clone() };
        let generated = generate_jet(&spec, &point)?;
        save_jet(&out_dir.join(format!("jet_{k:03}.json")), &generated.jet)?;

        // foci locus: cluster representatives expanded by multiplicity,
        // mapped back to chart coordinates along the ruling
        let report = singular_points(&generated.jet, tols)?;
        foci_csv.push_str(&k.to_string());
        for (value, count) in &report.clusters {
            let shifted = value + generated.lambda_bar;
            for _ in 0..*count {
                if shifted.abs() > 1e-9 {
                    foci_csv.push_str(&format!(",{}", generated.r0 - 1.0 / shifted));
                } else {
                    foci_csv.push(',');
                }
            }
        }
        foci_csv.push('\n');

        // development trajectory
        let span = GeneratorSpan {
            u,
            s_start: span_start,
            s_end: span_end,
        };
        let trajectory = develop_along_generator(&spec, &span, steps)?;
        let dim = spec.n + 2;
        let mut csv = String::from("t");
        for i in 0..dim {
            for j in 0..dim {
                csv.push_str(&format!(",v{i}_{j}"));
            }
        }
        csv.push('\n');
        for (t, frame) in trajectory.params.iter().zip(trajectory.frames.iter()) {
            csv.push_str(&t.to_string());
            for i in 0..dim {
                for j in 0..dim {
                    csv.push_str(&format!(",{}", frame[(i, j)]));
                }
            }
            csv.push('\n');
        }
        std::fs::write(out_dir.join(format!("trajectory_{k:03}.csv")), csv)?;
    }

    std::fs::write(out_dir.join("foci.csv"), foci_csv)?;
    Ok(EXIT_OK)
}
