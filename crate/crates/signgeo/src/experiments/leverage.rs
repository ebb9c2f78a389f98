//! Outlier leverage Monte Carlo: the post-ReLU energy cost of flipping a
//! weight entry in a high-amplitude input column vs a typical one, and the
//! column-group variant where all outlier (resp. non-outlier) columns flip
//! together.

use signgeo_core::perturb::{gaussian_matrix, sample_input, InputModel};
use signgeo_core::theory::{self, LeverageForm, TheoryValue};

use super::{fan_out, ExperimentConfig, ExperimentError};
use crate::report::MetricReport;

/// Single-entry flip leverage with a two-population input (one outlier
/// coordinate of amplitude α). The flip's effect is averaged over every row,
/// which is exact by row exchangeability and costs one matvec per sample.
pub fn outlier(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let (m, n) = (cfg.m, cfg.n);
    let alpha = cfg
        .alpha
        .ok_or_else(|| ExperimentError::InvalidConfig("outlier-leverage needs --alpha".into()))?;
    let model = InputModel::TwoPopulation { n, k: 1, alpha };
    model.validate()?;
    let stats = fan_out(cfg, &["leverage", "gate_flip"], |_, rng| {
        let w = gaussian_matrix(m, n, rng)?;
        // The denominator is defined against a fully delocalized reference
        // input (amplitude 1/√n everywhere), not against the two-population
        // input's slightly deflated non-outlier coordinates. It only depends
        // on W, so it is computed once per seed, averaged over every column.
        let root_n = (n as f64).sqrt();
        let x_ref = vec![1.0 / root_n; n];
        let z_ref = w.matvec(&x_ref)?;
        let mut e_ref = 0.0;
        for i in 0..m {
            let a = z_ref[i].max(0.0);
            for j in 1..n {
                let zn = z_ref[i] - 2.0 * w.get(i, j) / root_n;
                let d = zn.max(0.0) - a;
                e_ref += d * d;
            }
        }
        let e_ref_mean = e_ref / (m * (n - 1)) as f64;

        let mut e_out = 0.0;
        let (mut flips, mut gates) = (0u64, 0u64);
        for _ in 0..cfg.samples_per_seed {
            let x = sample_input(model, rng)?;
            let z = w.matvec(&x)?;
            for i in 0..m {
                // Flip W[i,0] (the outlier column): z_i loses 2·w_i0·x_0.
                let zo = z[i] - 2.0 * w.get(i, 0) * x[0];
                let d = zo.max(0.0) - z[i].max(0.0);
                e_out += d * d;
                if (z[i] > 0.0) != (zo > 0.0) {
                    flips += 1;
                }
            }
            gates += m as u64;
        }
        let e_out_mean = e_out / (m as u64 * cfg.samples_per_seed) as f64;
        Ok(vec![e_out_mean / e_ref_mean, flips as f64 / gates as f64])
    })?;
    Ok(vec![
        MetricReport::new(
            "leverage",
            &stats[0],
            Some(
                TheoryValue::new(
                    "outlier_leverage",
                    theory::outlier_leverage(alpha, n as u64, LeverageForm::Exact)?,
                    "f(1−2α²)/f(1−2/n)",
                )
                .into(),
            ),
        ),
        MetricReport::new(
            "gate_flip",
            &stats[1],
            Some(
                TheoryValue::new(
                    "gate_flip",
                    theory::gate_flip_prob_alpha(alpha)?,
                    "(2/π)·arcsin(α)",
                )
                .into(),
            ),
        ),
    ])
}

/// Column-group leverage: negate all k outlier columns vs all n−k others,
/// report the per-flip energy ratio ((1−η)/η)·E_out/E_non and the measured
/// pre-activation correlation ρ_A between clean and outlier-flipped outputs.
pub fn column_group(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let (m, n) = (cfg.m, cfg.n);
    let eta = cfg
        .eta
        .ok_or_else(|| ExperimentError::InvalidConfig("column-group needs --eta".into()))?;
    let gamma = cfg.gamma_energy.ok_or_else(|| {
        ExperimentError::InvalidConfig("column-group needs --gamma".into())
    })?;
    let k = (eta * n as f64).round() as usize;
    if k < 1 || k >= n {
        return Err(ExperimentError::InvalidConfig(
            "eta·n must round to 1 ≤ k < n".into(),
        ));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ExperimentError::InvalidConfig("need gamma in (0, 1)".into()));
    }
    let alpha = (gamma / k as f64).sqrt();
    let model = InputModel::TwoPopulation { n, k, alpha };
    model.validate()?;
    let stats = fan_out(cfg, &["r_col", "rho_a"], |_, rng| {
        let w = gaussian_matrix(m, n, rng)?;
        let (mut e_out, mut e_non) = (0.0, 0.0);
        let (mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0);
        for _ in 0..cfg.samples_per_seed {
            let x = sample_input(model, rng)?;
            let z = w.matvec(&x)?;
            for i in 0..m {
                // Outlier-column contribution to z_i.
                let mut a_part = 0.0;
                let row = w.row(i);
                for j in 0..k {
                    a_part += row[j] * x[j];
                }
                let zi = z[i];
                let zo = zi - 2.0 * a_part; // all outlier columns negated
                let zn = 2.0 * a_part - zi; // all non-outlier columns negated
                let base = zi.max(0.0);
                let d = zo.max(0.0) - base;
                e_out += d * d;
                let d = zn.max(0.0) - base;
                e_non += d * d;
                s00 += zi * zi;
                s01 += zi * zo;
                s11 += zo * zo;
            }
        }
        Ok(vec![
            (1.0 - eta) / eta * e_out / e_non,
            s01 / (s00 * s11).sqrt(),
        ])
    })?;
    Ok(vec![
        MetricReport::new(
            "r_col",
            &stats[0],
            Some(
                TheoryValue::new(
                    "column_group_leverage",
                    theory::column_group_leverage(eta, gamma)?,
                    "((1−η)/η)·f(1−2γ)/f(2γ−1)",
                )
                .into(),
            ),
        ),
        MetricReport::new(
            "rho_a",
            &stats[1],
            Some(TheoryValue::new("rho_a", 1.0 - 2.0 * gamma, "1 − 2γ").into()),
        ),
    ])
}
