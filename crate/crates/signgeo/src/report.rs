//! Experiment report types and their JSON/CSV serialization.
//!
//! JSON is the canonical format (schema_version "1", lossless round-trip,
//! ≥ 10 significant digits via full f64 emission); CSV is a convenience
//! export with one row per seed plus one aggregate row.

use serde::{Deserialize, Serialize};

use crate::experiments::ExperimentConfig;

pub const SCHEMA_VERSION: &str = "1";

/// One seed's contribution to a metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed_index: u64,
    /// The per-seed estimate (e.g. the per-seed transverse energy ratio).
    pub statistic: f64,
}

/// Cross-seed summary statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    /// Normal-approximation 95% interval: mean ± 1.96·std/√count.
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub median: f64,
    pub iqr_lo: f64,
    pub iqr_hi: f64,
    pub count: u64,
}

impl Aggregate {
    /// Summarizes per-seed statistics. Panics on empty input (no experiment
    /// runs with zero seeds; configs validate `seeds ≥ 1`).
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "aggregate of zero seeds");
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        let half = 1.96 * std / k.sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Self {
            mean,
            std,
            ci95_lo: mean - half,
            ci95_hi: mean + half,
            median: percentile(&sorted, 0.50),
            iqr_lo: percentile(&sorted, 0.25),
            iqr_hi: percentile(&sorted, 0.75),
            count: values.len() as u64,
        }
    }
}

/// Linear-interpolated percentile of pre-sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// A closed-form reference value with the formula it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRef {
    pub name: String,
    pub value: f64,
    /// Human-readable formula or derivation note.
    pub anchor: String,
}

impl From<signgeo_core::theory::TheoryValue> for TheoryRef {
    fn from(t: signgeo_core::theory::TheoryValue) -> Self {
        Self {
            name: t.name,
            value: t.value,
            anchor: t.anchor,
        }
    }
}

/// One measured quantity: per-seed values, their aggregate, and the theory
/// value it is compared against (when one exists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub per_seed: Vec<SeedResult>,
    pub aggregate: Aggregate,
    pub theory: Option<TheoryRef>,
    /// `100·(mean − theory)/theory` when a theory value is present.
    pub deviation_pct: Option<f64>,
}

impl MetricReport {
    pub fn new(name: &str, per_seed_values: &[f64], theory: Option<TheoryRef>) -> Self {
        let aggregate = Aggregate::from_values(per_seed_values);
        let deviation_pct = theory
            .as_ref()
            .map(|t| 100.0 * (aggregate.mean - t.value) / t.value);
        Self {
            name: name.to_string(),
            per_seed: per_seed_values
                .iter()
                .enumerate()
                .map(|(i, &v)| SeedResult {
                    seed_index: i as u64,
                    statistic: v,
                })
                .collect(),
            aggregate,
            theory,
            deviation_pct,
        }
    }
}

/// Full result of one experiment run: config echo plus one or more metrics.
/// The first metric is the experiment's headline quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub experiment_id: String,
    pub config: ExperimentConfig,
    pub metrics: Vec<MetricReport>,
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, metrics: Vec<MetricReport>, wall: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            experiment_id: config.experiment_id.clone(),
            config,
            metrics,
            wall_time_seconds: wall,
        }
    }

    pub fn primary(&self) -> &MetricReport {
        &self.metrics[0]
    }

    /// One-line human summary of the headline metric.
    pub fn summary_line(&self) -> String {
        let m = self.primary();
        match (&m.theory, m.deviation_pct) {
            (Some(t), Some(dev)) => format!(
                "{} {}: measured {:.6} vs theory {:.6} (Δ {:+.2}%)",
                self.experiment_id, m.name, m.aggregate.mean, t.value, dev
            ),
            _ => format!(
                "{} {}: measured {:.6} (no closed-form reference)",
                self.experiment_id, m.name, m.aggregate.mean
            ),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// CSV export: config echoed as a comment header, then one row per seed
    /// per metric plus one aggregate row per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# schema_version={} experiment_id={} config={}\n",
            self.schema_version,
            self.experiment_id,
            serde_json::to_string(&self.config).expect("config serializes")
        ));
        out.push_str("metric,kind,seed_index,value,theory,deviation_pct\n");
        for m in &self.metrics {
            let theory = m
                .theory
                .as_ref()
                .map(|t| format!("{:.12e}", t.value))
                .unwrap_or_default();
            for s in &m.per_seed {
                out.push_str(&format!(
                    "{},seed,{},{:.12e},{},\n",
                    m.name, s.seed_index, s.statistic, theory
                ));
            }
            let dev = m
                .deviation_pct
                .map(|d| format!("{d:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},aggregate,,{:.12e},{},{}\n",
                m.name, m.aggregate.mean, theory, dev
            ));
        }
        out
    }
}
