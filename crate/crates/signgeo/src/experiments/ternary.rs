//! Ternary sign-quantization estimators: output alignment cos²(Wx̂, W_Tx̂)
//! with its post-normalization chord (thm4), and the pre/post-ReLU radial
//! structure of the quantization error (ternary-radial).

use signgeo_core::geometry::{chord2, cos2, radial_split};
use signgeo_core::perturb::{gaussian_matrix, sample_input, ternary_quantize, InputModel, TernaryMode};
use signgeo_core::theory::{self, RadialKind, TheoryValue, BUSSGANG};

use super::{fan_out, ExperimentConfig, ExperimentError};
use crate::report::MetricReport;

/// Mean cos²(y, y_T) and squared chord between the normalized outputs.
pub fn thm4(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let (m, n) = (cfg.m, cfg.n);
    let mode = if cfg.per_tensor {
        TernaryMode::PerTensor
    } else {
        TernaryMode::PerRow
    };
    let stats = fan_out(cfg, &["cos2", "chord2"], |_, rng| {
        let w = gaussian_matrix(m, n, rng)?;
        let pair = ternary_quantize(&w, mode)?;
        let (mut c2, mut ch) = (0.0, 0.0);
        for _ in 0..cfg.samples_per_seed {
            let x = sample_input(InputModel::UniformSphere { n }, rng)?;
            let y = w.matvec(&x)?;
            let yt = pair.quantized.matvec(&x)?;
            c2 += cos2(&y, &yt)?;
            // chord2 is scale-invariant, so this equals the squared distance
            // between the RMS-normalized unit directions.
            ch += chord2(&y, &yt)?;
        }
        let k = cfg.samples_per_seed as f64;
        Ok(vec![c2 / k, ch / k])
    })?;
    Ok(vec![
        MetricReport::new(
            "cos2",
            &stats[0],
            Some(TheoryValue::new("bussgang", BUSSGANG, "2/π as dimension grows").into()),
        ),
        MetricReport::new(
            "chord2",
            &stats[1],
            Some(
                TheoryValue::new(
                    "normalized_error",
                    theory::ternary_rmsnorm_error_limit(),
                    "2(1 − √(2/π))",
                )
                .into(),
            ),
        ),
    ])
}

/// Pre/post-ReLU radial structure of the ternary quantization error:
/// pre-activation correlation, pre- and post-ReLU radial fractions (ratios of
/// mean energies), and the gate-flip rate.
pub fn ternary_radial(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let (m, n) = (cfg.m, cfg.n);
    let stats = fan_out(
        cfg,
        &["corr_pre", "r_pre", "gate_flip", "r_post"],
        |_, rng| {
            let w = gaussian_matrix(m, n, rng)?;
            let pair = ternary_quantize(&w, TernaryMode::PerRow)?;
            let (mut szz, mut szdz, mut sdzdz) = (0.0, 0.0, 0.0);
            let (mut pre_rad, mut pre_tot) = (0.0, 0.0);
            let (mut post_rad, mut post_tot) = (0.0, 0.0);
            let (mut flips, mut gates) = (0u64, 0u64);
            for _ in 0..cfg.samples_per_seed {
                let x = sample_input(InputModel::UniformSphere { n }, rng)?;
                let z = w.matvec(&x)?;
                let zq = pair.quantized.matvec(&x)?;
                let dz: Vec<f64> = zq.iter().zip(&z).map(|(a, b)| a - b).collect();
                for i in 0..m {
                    szz += z[i] * z[i];
                    szdz += z[i] * dz[i];
                    sdzdz += dz[i] * dz[i];
                    if (z[i] > 0.0) != (zq[i] > 0.0) {
                        flips += 1;
                    }
                }
                gates += m as u64;
                let s = radial_split(&dz, &z)?;
                pre_rad += s.radial_energy;
                pre_tot += s.radial_energy + s.transverse_energy;
                let a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                let da: Vec<f64> = zq
                    .iter()
                    .zip(&a)
                    .map(|(&q, &ai)| q.max(0.0) - ai)
                    .collect();
                let s = radial_split(&da, &a)?;
                post_rad += s.radial_energy;
                post_tot += s.radial_energy + s.transverse_energy;
            }
            Ok(vec![
                szdz / (szz * sdzdz).sqrt(),
                pre_rad / pre_tot,
                flips as f64 / gates as f64,
                post_rad / post_tot,
            ])
        },
    )?;
    let rho_q = BUSSGANG.sqrt();
    Ok(vec![
        MetricReport::new(
            "corr_pre",
            &stats[0],
            Some(TheoryValue::new("corr_z_dz", -(1.0 - BUSSGANG).sqrt(), "−√(1−2/π)").into()),
        ),
        MetricReport::new(
            "r_pre",
            &stats[1],
            Some(
                TheoryValue::new(
                    "radial_pre",
                    theory::radial_fraction_theory(RadialKind::TernaryPre, 0.0)?,
                    "1 − 2/π, exact in the limit",
                )
                .into(),
            ),
        ),
        MetricReport::new(
            "gate_flip",
            &stats[2],
            Some(
                TheoryValue::new(
                    "gate_flip",
                    theory::gate_flip_prob_rho(theory::CorrelationRho::new(rho_q)?),
                    "arccos(√(2/π))/π",
                )
                .into(),
            ),
        ),
        MetricReport::new(
            "r_post",
            &stats[3],
            Some(
                TheoryValue::new(
                    "radial_post",
                    theory::radial_fraction_theory(RadialKind::TernaryPost, 0.0)?,
                    "2(S−1/2)²/(1/2 + 1/π − 2S)",
                )
                .into(),
            ),
        ),
    ])
}
