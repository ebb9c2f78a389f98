use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use signgeo::experiments::{run_experiment, ExperimentConfig, ExperimentError, REGISTRY};
use signgeo::matfile;
use signgeo::report::ExperimentReport;
use signgeo::suite;
use signgeo_core::geometry;
use signgeo_core::perturb::{sample_input, ternary_quantize, InputModel, TernaryMode};
use signgeo_core::theory::{
    self, CorrelationRho, LeverageForm, RadialKind, TheoryValue, BUSSGANG,
};
use signgeo_core::CoreError;

const EXIT_TOLERANCE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "signgeo",
    version,
    about = "Monte Carlo experiments and closed-form values for sign-vs-magnitude \
             weight-perturbation geometry in ReLU + RMSNorm networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(RunArgs),
    /// Print a closed-form value with its defining formula.
    Theory(TheoryArgs),
    /// Analyze a binary matrix file.
    Ingest(IngestArgs),
    /// Run the whole experiment battery with tolerance checks.
    Suite(SuiteArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment id (see `signgeo suite --help` for the registry).
    experiment_id: String,
    /// Input dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Hidden dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Output dimension of the second layer.
    #[arg(long)]
    dout: Option<usize>,
    /// Flip probability.
    #[arg(long)]
    p: Option<f64>,
    /// Outlier input amplitude.
    #[arg(long)]
    alpha: Option<f64>,
    /// Outlier column fraction η = k/n.
    #[arg(long)]
    eta: Option<f64>,
    /// Outlier energy share γ = kα².
    #[arg(long)]
    gamma: Option<f64>,
    /// Network depth (multi-layer experiments).
    #[arg(long)]
    layers: Option<usize>,
    /// Number of independent seeds.
    #[arg(long)]
    seeds: Option<u64>,
    /// Monte Carlo samples per seed.
    #[arg(long)]
    samples: Option<u64>,
    /// Base RNG seed.
    #[arg(long)]
    base_seed: Option<u64>,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Report file path (defaults to `<experiment_id>.json` / `.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the larger reference protocols instead of desk-scale defaults.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct TheoryArgs {
    /// One of: bussgang, prop2-exact, c-of-p, f-rho, gateflip, leverage,
    /// colgroup, ternary-post, equal-norm-p.
    name: String,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    /// Use the leading-order nα² form instead of the exact f-ratio.
    #[arg(long)]
    leading: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestOp {
    /// Per-row cos²(wᵢ, sign(wᵢ)) statistics against the 2/π limit.
    RowCos2,
    /// Monte Carlo cos²(Wx, W_T x) after per-row ternary quantization.
    TernaryCos2,
}

#[derive(Args)]
struct IngestArgs {
    /// Matrix file path.
    path: PathBuf,
    #[arg(long, value_enum)]
    op: IngestOp,
    /// Spherical input samples (ternary-cos2 only).
    #[arg(long, default_value_t = 200)]
    samples: u64,
    #[arg(long, default_value_t = 2026)]
    base_seed: u64,
    /// Write the analysis as JSON here (stdout summary either way).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(value_enum)]
    preset: Preset,
    /// Comma-separated experiment ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Directory for the per-experiment reports.
    #[arg(long, default_value = "reports")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    if let Err(code) = init_threads() {
        return code;
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Suite(args) => cmd_suite(args),
    }
}

/// Honors SIGNGEO_THREADS by sizing the global worker pool before first use.
fn init_threads() -> Result<(), ExitCode> {
    let Ok(raw) = std::env::var("SIGNGEO_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.parse() {
        Ok(t) if t >= 1 => t,
        _ => {
            eprintln!("error: SIGNGEO_THREADS must be a positive integer, got '{raw}'");
            return Err(ExitCode::from(EXIT_VALIDATION));
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| {
            eprintln!("error: could not size the worker pool: {e}");
            ExitCode::from(EXIT_RUNTIME)
        })
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let Some(mut cfg) = ExperimentConfig::defaults(&args.experiment_id, args.full_scale) else {
        eprintln!(
            "error: unknown experiment '{}'\nregistered experiments: {}",
            args.experiment_id,
            REGISTRY.join(", ")
        );
        return ExitCode::from(EXIT_VALIDATION);
    };
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.dout {
        cfg.d_out = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = Some(v);
    }
    if let Some(v) = args.eta {
        cfg.eta = Some(v);
    }
    if let Some(v) = args.gamma {
        cfg.gamma_energy = Some(v);
    }
    if let Some(v) = args.layers {
        cfg.layers = Some(v);
    }
    if let Some(v) = args.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = args.samples {
        cfg.samples_per_seed = v;
    }
    if let Some(v) = args.base_seed {
        cfg.base_seed = v;
    }

    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return report_experiment_error(&e),
    };
    println!("{}", report.summary_line());

    let (default_name, body) = match args.format {
        Format::Json => (format!("{}.json", cfg.experiment_id), report.to_json()),
        Format::Csv => (format!("{}.csv", cfg.experiment_id), report.to_csv()),
    };
    let path = args.out.unwrap_or_else(|| PathBuf::from(default_name));
    if let Err(e) = std::fs::write(&path, body) {
        eprintln!("error: could not write {}: {e}", path.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    println!("report written to {}", path.display());
    ExitCode::SUCCESS
}

fn report_experiment_error(e: &ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ExperimentError::UnknownExperiment(_)
        | ExperimentError::InvalidConfig(_)
        | ExperimentError::Core(_) => ExitCode::from(EXIT_VALIDATION),
        ExperimentError::NonFiniteStatistic { .. } => ExitCode::from(EXIT_RUNTIME),
    }
}

fn cmd_theory(args: TheoryArgs) -> ExitCode {
    match theory_value(&args) {
        Ok(tv) => {
            println!("{} = {:.12}    [{}]", tv.name, tv.value, tv.anchor);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn require(opt: Option<f64>, flag: &'static str) -> Result<f64, CoreError> {
    opt.ok_or(CoreError::ConstraintViolation(flag))
}

fn theory_value(args: &TheoryArgs) -> Result<TheoryValue, CoreError> {
    let name = args.name.as_str();
    Ok(match name {
        "bussgang" => TheoryValue::new("bussgang", BUSSGANG, "2/π"),
        "prop2-exact" => {
            let n = args.n.ok_or(CoreError::ConstraintViolation("--n required"))?;
            TheoryValue::new("prop2_exact", theory::prop2_exact(n)?, "3/(n+2)")
        }
        "c-of-p" => {
            let p = require(args.p, "--p required")?;
            TheoryValue::new(
                "c_theory",
                theory::c_theory(p)?,
                "(1−p)·f(ρ_p)/(2p(1−2/π)), ρ_p = (1−2p)/√(1−4p(1−p)·2/π)",
            )
        }
        "f-rho" => {
            let rho = CorrelationRho::new(require(args.rho, "--rho required")?)?;
            TheoryValue::new(
                "f_rho",
                theory::f_rho(rho),
                "1 − ρ + (ρ·arccos ρ − √(1−ρ²))/π",
            )
        }
        "gateflip" => {
            if let Some(alpha) = args.alpha {
                TheoryValue::new(
                    "gate_flip_prob",
                    theory::gate_flip_prob_alpha(alpha)?,
                    "(2/π)·arcsin α",
                )
            } else {
                let rho = CorrelationRho::new(require(args.rho, "--alpha or --rho required")?)?;
                TheoryValue::new("gate_flip_prob", theory::gate_flip_prob_rho(rho), "arccos(ρ)/π")
            }
        }
        "leverage" => {
            let alpha = require(args.alpha, "--alpha required")?;
            let n = args.n.ok_or(CoreError::ConstraintViolation("--n required"))?;
            let form = if args.leading {
                LeverageForm::Leading
            } else {
                LeverageForm::Exact
            };
            TheoryValue::new(
                "outlier_leverage",
                theory::outlier_leverage(alpha, n, form)?,
                if args.leading {
                    "nα²·f'(1)-ratio leading order"
                } else {
                    "(n−1)·f(ρ_out)/f(ρ_typ) with 1−ρ = 2α², 2/n"
                },
            )
        }
        "colgroup" => {
            let eta = require(args.eta, "--eta required")?;
            let gamma = require(args.gamma, "--gamma required")?;
            TheoryValue::new(
                "column_group_leverage",
                theory::column_group_leverage(eta, gamma)?,
                "((1−η)/η)·f(1−2γ)/f(2γ−1)",
            )
        }
        "ternary-post" => TheoryValue::new(
            "ternary_post_radial",
            theory::radial_fraction_theory(RadialKind::TernaryPost, 0.0)?,
            "post-ReLU radial fraction of the ternary quantization error",
        ),
        "equal-norm-p" => TheoryValue::new(
            "equal_norm_flip_rate",
            theory::equal_norm_flip_rate(),
            "p with ‖ΔW_flip‖_F = ‖W_T − W‖_F: 2p = 1 − 2/π ⇒ p = (1 − 2/π)/2",
        ),
        _ => {
            return Err(CoreError::OutOfRange {
                what: "theory name",
                value: f64::NAN,
                expected: "bussgang | prop2-exact | c-of-p | f-rho | gateflip | leverage | colgroup | ternary-post | equal-norm-p",
            })
        }
    })
}

fn cmd_ingest(args: IngestArgs) -> ExitCode {
    let w = match matfile::read_matrix(&args.path) {
        Ok(w) => w,
        Err(matfile::MatFileError::Io(e)) => {
            eprintln!("error: could not read {}: {e}", args.path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
        Err(e) => {
            eprintln!("error: {}: {e}", args.path.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let doc = match args.op {
        IngestOp::RowCos2 => row_cos2_doc(&w),
        IngestOp::TernaryCos2 => match ternary_cos2_doc(&w, args.samples, args.base_seed) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_VALIDATION);
            }
        },
    };
    println!(
        "{} on {} ({}×{}): mean cos² = {:.6} vs 2/π = {:.6} (Δ {:+.3}%)",
        match args.op {
            IngestOp::RowCos2 => "row-cos2",
            IngestOp::TernaryCos2 => "ternary-cos2",
        },
        args.path.display(),
        w.rows(),
        w.cols(),
        doc["mean"].as_f64().unwrap(),
        BUSSGANG,
        doc["deviation_pct"].as_f64().unwrap(),
    );
    if let Some(out) = args.out {
        let body = serde_json::to_string_pretty(&doc).expect("serializable");
        if let Err(e) = std::fs::write(&out, body) {
            eprintln!("error: could not write {}: {e}", out.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
        println!("analysis written to {}", out.display());
    }
    ExitCode::SUCCESS
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let t = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (t.floor() as usize, t.ceil() as usize);
    sorted[lo] + (t - t.floor()) * (sorted[hi] - sorted[lo])
}

fn summarize(op: &str, w: &signgeo_core::Matrix, values: Vec<f64>) -> serde_json::Value {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len().max(2) - 1) as f64;
    let mut sorted = values;
    sorted.sort_by(|a, b| a.total_cmp(b));
    serde_json::json!({
        "op": op,
        "rows": w.rows(),
        "cols": w.cols(),
        "count": sorted.len(),
        "mean": mean,
        "std": var.sqrt(),
        "median": percentile(&sorted, 0.5),
        "theory": BUSSGANG,
        "deviation_pct": 100.0 * (mean - BUSSGANG) / BUSSGANG,
    })
}

/// Per-row cos²(wᵢ, sign(wᵢ)) = (Σ|wᵢⱼ|)² / (n·Σwᵢⱼ²).
fn row_cos2_doc(w: &signgeo_core::Matrix) -> serde_json::Value {
    let n = w.cols() as f64;
    let values: Vec<f64> = (0..w.rows())
        .map(|i| {
            let row = w.row(i);
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            let l2: f64 = row.iter().map(|v| v * v).sum();
            if l2 == 0.0 {
                0.0
            } else {
                l1 * l1 / (n * l2)
            }
        })
        .collect();
    summarize("row-cos2", w, values)
}

/// Monte Carlo cos²(Wx, W_T x) over spherical inputs, per-row ternary scale.
fn ternary_cos2_doc(
    w: &signgeo_core::Matrix,
    samples: u64,
    base_seed: u64,
) -> Result<serde_json::Value, CoreError> {
    let pair = ternary_quantize(w, TernaryMode::PerRow)?;
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    let n = w.cols();
    let values: Result<Vec<f64>, CoreError> = (0..samples.max(1))
        .map(|_| {
            let x = sample_input(InputModel::UniformSphere { n }, &mut rng)?;
            let y = pair.original.matvec(&x)?;
            let yq = pair.quantized.matvec(&x)?;
            geometry::cos2(&y, &yq)
        })
        .collect();
    Ok(summarize("ternary-cos2", w, values?))
}

fn cmd_suite(args: SuiteArgs) -> ExitCode {
    if let Some(only) = &args.only {
        if let Some(bad) = only.iter().find(|id| !REGISTRY.contains(&id.as_str())) {
            eprintln!(
                "error: unknown experiment '{bad}'\nregistered experiments: {}",
                REGISTRY.join(", ")
            );
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        eprintln!("error: could not create {}: {e}", args.out_dir.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    let full = matches!(args.preset, Preset::Full);
    let entries = match suite::run_suite(full, args.only.as_deref()) {
        Ok(e) => e,
        Err(e) => return report_experiment_error(&e),
    };

    let mut all_pass = true;
    println!("{:<18} {:<6} detail", "experiment", "status");
    for entry in &entries {
        let report: &ExperimentReport = &entry.report;
        let path = args
            .out_dir
            .join(format!("{}.json", report.config.experiment_id));
        if let Err(e) = std::fs::write(&path, report.to_json()) {
            eprintln!("error: could not write {}: {e}", path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
        let passed = entry.passed();
        all_pass &= passed;
        println!(
            "{:<18} {:<6} {}",
            report.config.experiment_id,
            if passed { "PASS" } else { "FAIL" },
            report.summary_line(),
        );
        for check in &entry.checks {
            if !check.passed {
                println!("    FAIL {}: {}", check.name, check.detail);
            }
        }
    }
    println!(
        "{} of {} experiments passed; reports in {}",
        entries.iter().filter(|e| e.passed()).count(),
        entries.len(),
        args.out_dir.display()
    );
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TOLERANCE)
    }
}
