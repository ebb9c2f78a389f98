//! Monte Carlo experiment registry and the seeded parallel runner.
//!
//! Every experiment follows the same protocol: seeds are independent work
//! units fanned out across threads, each seed derives its own RNG stream from
//! `(base_seed, experiment id, seed index)` so thread count and scheduling
//! never change results, per-seed statistics are ratios of per-seed sample
//! means (ratio of expectations, not mean of per-sample ratios), and results
//! are merged in seed-index order before aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand_chacha::ChaCha8Rng;
use signgeo_core::perturb::{stream_rng, Seed};
use signgeo_core::CoreError;

use crate::report::{ExperimentReport, MetricReport};

mod basic;
mod leverage;
mod multilayer;
mod ternary;
mod twolayer;

/// All registered experiment ids.
pub const REGISTRY: &[&str] = &[
    "fact1",
    "prop1",
    "prop2",
    "thm1-tightness",
    "thm2-fd",
    "thm3-v0",
    "thm3-v1",
    "radial-fractions",
    "lemma-a1",
    "multilayer-v2",
    "multilayer-v3",
    "thm4",
    "ternary-radial",
    "outlier-leverage",
    "column-group",
];

/// Parameters of one experiment run. Echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    /// Input dimension.
    pub n: usize,
    /// Hidden (first-layer output) dimension.
    pub m: usize,
    /// Output dimension of the second layer, where one exists.
    pub d_out: usize,
    /// Flip probability shared by the sign-flip and constant-δ models.
    pub p: f64,
    /// Outlier input amplitude (single-entry leverage experiments).
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Outlier column fraction η = k/n (column-group experiments).
    #[serde(default)]
    pub eta: Option<f64>,
    /// Outlier energy share γ = kα² (column-group experiments).
    #[serde(default)]
    pub gamma_energy: Option<f64>,
    /// Network depth for the multi-layer experiments.
    #[serde(default)]
    pub layers: Option<usize>,
    /// Residual (skip-connection) blocks instead of a plain stack.
    #[serde(default)]
    pub residual: bool,
    pub seeds: u64,
    pub samples_per_seed: u64,
    pub base_seed: u64,
    /// Use the per-tensor ternary scale instead of per-row.
    #[serde(default)]
    pub per_tensor: bool,
    /// Multi-layer variant: perturb every layer instead of only the first.
    #[serde(default)]
    pub perturb_all_layers: bool,
    /// Draw sign-flip masks once per seed instead of per sample.
    #[serde(default)]
    pub fix_masks: bool,
}

impl ExperimentConfig {
    /// Default configuration for an experiment id, at desk scale (laptop
    /// minutes) or full scale (the larger reference protocols).
    pub fn defaults(id: &str, full_scale: bool) -> Option<Self> {
        if !REGISTRY.contains(&id) {
            return None;
        }
        let mut c = ExperimentConfig {
            experiment_id: id.to_string(),
            n: 1024,
            m: 1024,
            d_out: 1024,
            p: 0.01,
            alpha: None,
            eta: None,
            gamma_energy: None,
            layers: None,
            residual: false,
            seeds: 10,
            samples_per_seed: 2000,
            base_seed: 20_26,
            per_tensor: false,
            perturb_all_layers: false,
            fix_masks: false,
        };
        match id {
            "fact1" => {
                c.n = 4096;
                c.samples_per_seed = 10_000;
            }
            "prop1" => {
                c.n = 256;
                c.m = 256;
                c.seeds = 20;
                c.samples_per_seed = 10_000;
            }
            "prop2" => {
                c.n = 256;
                c.samples_per_seed = 10_000;
            }
            "thm1-tightness" => {
                c.seeds = 1;
                c.samples_per_seed = 1000;
            }
            "thm2-fd" => {
                c.seeds = 1;
                c.samples_per_seed = 100;
            }
            "thm3-v0" | "thm3-v1" | "radial-fractions" => {}
            "lemma-a1" => {
                c.n = 4096;
                c.m = 4096;
                c.p = 0.001;
                c.samples_per_seed = 50;
            }
            "multilayer-v2" | "multilayer-v3" => {
                c.n = 512;
                c.m = 512;
                c.layers = Some(6);
                c.residual = id == "multilayer-v3";
                c.seeds = 8;
                c.samples_per_seed = 1000;
            }
            "thm4" => {
                c.m = 512;
                c.n = 1024;
                c.samples_per_seed = 200;
            }
            "ternary-radial" => {
                c.n = 2048;
                c.m = 2048;
                c.samples_per_seed = 200;
            }
            "outlier-leverage" => {
                c.n = 2048;
                c.m = 2048;
                c.alpha = Some(0.1);
                c.samples_per_seed = 300;
            }
            "column-group" => {
                c.eta = Some(0.05);
                c.gamma_energy = Some(0.5);
                c.samples_per_seed = 300;
            }
            _ => {}
        }
        if full_scale {
            c.seeds = 20;
            match id {
                "thm3-v0" | "thm3-v1" | "radial-fractions" => {
                    c.n = 2048;
                    c.m = 2048;
                    c.d_out = 2048;
                    c.samples_per_seed = 10_000;
                }
                "multilayer-v2" | "multilayer-v3" => {
                    c.n = 2048;
                    c.m = 2048;
                    c.samples_per_seed = 10_000;
                }
                "thm4" => {
                    c.m = 2048;
                    c.n = 4096;
                    c.samples_per_seed = 1000;
                }
                "ternary-radial" | "outlier-leverage" => {
                    c.samples_per_seed = 2000;
                }
                "thm1-tightness" | "thm2-fd" | "prop1" | "prop2" | "fact1" => {
                    c.seeds = ExperimentConfig::defaults(id, false).unwrap().seeds;
                }
                _ => {
                    c.samples_per_seed = 10_000;
                }
            }
        }
        Some(c)
    }

    pub(crate) fn base(&self) -> Seed {
        Seed(self.base_seed)
    }
}

/// Runner errors.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment id '{0}'")]
    UnknownExperiment(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("seed {seed} produced a non-finite statistic for '{metric}'")]
    NonFiniteStatistic { seed: u64, metric: String },
}

/// FNV-1a over the experiment id: the RNG stream domain separator.
pub(crate) fn domain_of(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in id.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Runs `per_seed` once per seed (in parallel), checks finiteness, and
/// returns the statistics transposed per metric: `out[metric][seed]`.
///
/// `metric_names` fixes both the arity and the labels used in error
/// reporting.
pub(crate) fn fan_out<F>(
    cfg: &ExperimentConfig,
    metric_names: &[&str],
    per_seed: F,
) -> Result<Vec<Vec<f64>>, ExperimentError>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<Vec<f64>, CoreError> + Sync,
{
    if cfg.seeds == 0 {
        return Err(ExperimentError::InvalidConfig("seeds must be >= 1".into()));
    }
    if cfg.samples_per_seed == 0 {
        return Err(ExperimentError::InvalidConfig(
            "samples_per_seed must be >= 1".into(),
        ));
    }
    let domain = domain_of(&cfg.experiment_id);
    let base = cfg.base();
    let rows: Result<Vec<Vec<f64>>, CoreError> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(base, domain, i);
            per_seed(i, &mut rng)
        })
        .collect();
    let rows = rows?;
    let mut out = vec![Vec::with_capacity(cfg.seeds as usize); metric_names.len()];
    for (seed, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), metric_names.len(), "metric arity mismatch");
        for (k, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ExperimentError::NonFiniteStatistic {
                    seed: seed as u64,
                    metric: metric_names[k].to_string(),
                });
            }
            out[k].push(v);
        }
    }
    Ok(out)
}

/// Runs the experiment named by `cfg.experiment_id`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let start = std::time::Instant::now();
    let metrics: Vec<MetricReport> = match cfg.experiment_id.as_str() {
        "fact1" => basic::fact1(cfg)?,
        "prop1" => twolayer::prop1(cfg)?,
        "prop2" => basic::prop2(cfg)?,
        "thm1-tightness" => basic::thm1_tightness(cfg)?,
        "thm2-fd" => basic::thm2_finite_difference(cfg)?,
        "thm3-v0" => twolayer::thm3(cfg, twolayer::Arch::V0)?,
        "thm3-v1" => twolayer::thm3(cfg, twolayer::Arch::V1)?,
        "radial-fractions" => twolayer::radial_fractions(cfg)?,
        "lemma-a1" => basic::lemma_a1(cfg)?,
        "multilayer-v2" => multilayer::run(cfg, false)?,
        "multilayer-v3" => multilayer::run(cfg, true)?,
        "thm4" => ternary::thm4(cfg)?,
        "ternary-radial" => ternary::ternary_radial(cfg)?,
        "outlier-leverage" => leverage::outlier(cfg)?,
        "column-group" => leverage::column_group(cfg)?,
        other => return Err(ExperimentError::UnknownExperiment(other.to_string())),
    };
    Ok(ExperimentReport::new(
        cfg.clone(),
        metrics,
        start.elapsed().as_secs_f64(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_defaults() {
        for id in REGISTRY {
            assert!(ExperimentConfig::defaults(id, false).is_some(), "{id}");
            assert!(ExperimentConfig::defaults(id, true).is_some(), "{id}");
        }
        assert!(ExperimentConfig::defaults("nope", false).is_none());
    }

    #[test]
    fn unknown_experiment_rejected() {
        let mut cfg = ExperimentConfig::defaults("fact1", false).unwrap();
        cfg.experiment_id = "bogus".into();
        assert!(matches!(
            run_experiment(&cfg),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let mut cfg = ExperimentConfig::defaults("fact1", false).unwrap();
        cfg.n = 128;
        cfg.seeds = 4;
        cfg.samples_per_seed = 50;
        let a = run_experiment(&cfg).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| run_experiment(&cfg).unwrap());
        assert_eq!(a.metrics, b.metrics);
    }
}
