//! Batch runner: executes every registered experiment at a preset scale and
//! applies per-experiment tolerance checks against the closed-form targets.

use crate::experiments::{run_experiment, ExperimentConfig, ExperimentError, REGISTRY};
use crate::report::{ExperimentReport, MetricReport};

/// One tolerance verdict.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// An experiment run plus its verdicts.
#[derive(Debug)]
pub struct SuiteEntry {
    pub report: ExperimentReport,
    pub checks: Vec<Check>,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn metric<'a>(report: &'a ExperimentReport, name: &str) -> &'a MetricReport {
    report
        .metrics
        .iter()
        .find(|m| m.name == name)
        .unwrap_or_else(|| panic!("missing metric '{name}'"))
}

/// Relative-deviation check against a metric's own theory anchor.
fn rel_check(report: &ExperimentReport, name: &str, tol: f64) -> Check {
    let m = metric(report, name);
    let theory = m
        .theory
        .as_ref()
        .map(|t| t.value)
        .expect("metric has no theory anchor");
    let got = m.aggregate.mean;
    let dev = (got - theory) / theory;
    Check::new(
        format!("{name} vs theory"),
        dev.abs() <= tol,
        format!("measured {got:.6}, target {theory:.6}, deviation {:+.2}% (tol ±{:.1}%)", 100.0 * dev, 100.0 * tol),
    )
}

/// Absolute-deviation check against a metric's own theory anchor.
fn abs_check(report: &ExperimentReport, name: &str, tol: f64) -> Check {
    let m = metric(report, name);
    let theory = m.theory.as_ref().map(|t| t.value).unwrap_or(0.0);
    let got = m.aggregate.mean;
    Check::new(
        format!("{name} vs theory"),
        (got - theory).abs() <= tol,
        format!("measured {got:.6}, target {theory:.6} (tol ±{tol})"),
    )
}

fn range_check(report: &ExperimentReport, name: &str, lo: f64, hi: f64) -> Check {
    let got = metric(report, name).aggregate.mean;
    Check::new(
        format!("{name} in range"),
        got >= lo && got <= hi,
        format!("measured {got:.6}, expected within [{lo}, {hi}]"),
    )
}

/// Tolerance checks for one finished report. The tolerances assume the
/// default desk/full configurations from [`ExperimentConfig::defaults`].
pub fn check_report(report: &ExperimentReport) -> Vec<Check> {
    let cfg = &report.config;
    match cfg.experiment_id.as_str() {
        "fact1" => vec![rel_check(report, "row_cos2", 0.01)],
        "prop2" => vec![rel_check(report, "cos2", 0.10)],
        "prop1" => {
            let m = cfg.m as f64;
            vec![
                rel_check(report, "energy_ratio", 0.02),
                rel_check(report, "r_mag", 0.20),
                // The per-sample estimate carries the isotropic 1/m floor on
                // top of the flip-rate target.
                range_check(report, "r_sign", 0.8 * cfg.p, cfg.p + 2.0 / m),
            ]
        }
        "thm1-tightness" => vec![
            abs_check(report, "exact_cv_0.1", 1e-12),
            abs_check(report, "bound_cv_0.1", 1e-12),
            range_check(report, "sweep_max_exact_minus_bound", -1.0, 1e-12),
        ],
        "thm2-fd" => vec![
            range_check(report, "fd_max_rel_err", 0.0, 1e-4),
            range_check(report, "remainder_max_ratio", 0.0, 1.0 + 1e-9),
        ],
        "thm3-v1" => vec![rel_check(report, "c_ratio", 0.10)],
        // No closed form for the normalized-difference variant; it sits a
        // third above the transverse-energy constant at p = 0.01.
        "thm3-v0" => vec![range_check(report, "c_ratio", 3.2, 4.1)],
        "radial-fractions" => vec![
            range_check(
                report,
                "r_sign",
                0.5 * cfg.p,
                1.5 * cfg.p + 2.0 / cfg.d_out as f64,
            ),
            rel_check(report, "r_mag", 0.10),
        ],
        "lemma-a1" => vec![
            abs_check(report, "corr_relu", 0.02),
            abs_check(report, "corr_linear", 0.02),
        ],
        "multilayer-v2" => {
            let layers = cfg.layers.unwrap_or(6);
            let c1 = metric(report, "c_depth_1").aggregate.mean;
            let cl = metric(report, &format!("c_depth_{layers}")).aggregate.mean;
            vec![
                range_check(report, "c_depth_1", 3.3, 3.9),
                Check::new(
                    "depth decay",
                    cl < c1,
                    format!("c_depth_{layers} = {cl:.4} vs c_depth_1 = {c1:.4}, expected decay"),
                ),
            ]
        }
        "multilayer-v3" => {
            let layers = cfg.layers.unwrap_or(6);
            let c1 = metric(report, "c_depth_1").aggregate.mean;
            let cl = metric(report, &format!("c_depth_{layers}")).aggregate.mean;
            vec![
                range_check(report, "c_depth_1", 1.28, 1.45),
                Check::new(
                    "depth stability",
                    cl >= 0.95 * c1 && cl <= 1.15 * c1,
                    format!("c_depth_{layers} = {cl:.4} vs c_depth_1 = {c1:.4}, expected ≈ flat"),
                ),
            ]
        }
        "thm4" => vec![
            rel_check(report, "cos2", 0.01),
            abs_check(report, "chord2", 0.01),
        ],
        "ternary-radial" => vec![
            abs_check(report, "corr_pre", 0.02),
            abs_check(report, "r_pre", 0.01),
            abs_check(report, "gate_flip", 0.01),
            abs_check(report, "r_post", 0.01),
        ],
        "outlier-leverage" => vec![
            rel_check(report, "leverage", 0.10),
            abs_check(report, "gate_flip", 0.01),
        ],
        "column-group" => vec![
            rel_check(report, "r_col", 0.10),
            abs_check(report, "rho_a", 0.02),
        ],
        other => vec![Check::new(
            "known experiment",
            false,
            format!("no checks registered for '{other}'"),
        )],
    }
}

/// Runs the whole battery (optionally filtered to a subset of ids).
pub fn run_suite(
    full_scale: bool,
    only: Option<&[String]>,
) -> Result<Vec<SuiteEntry>, ExperimentError> {
    let mut entries = Vec::new();
    for id in REGISTRY {
        if let Some(filter) = only {
            if !filter.iter().any(|f| f == id) {
                continue;
            }
        }
        let cfg = ExperimentConfig::defaults(id, full_scale).expect("registered id");
        let report = run_experiment(&cfg)?;
        let checks = check_report(&report);
        entries.push(SuiteEntry { report, checks });
    }
    Ok(entries)
}
