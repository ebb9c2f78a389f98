//! Depth propagation of the sign-vs-magnitude output-difference ratio through
//! stacked ReLU + RMSNorm layers, plain (`multilayer-v2`) or with post-norm
//! residual blocks (`multilayer-v3`). Refutes exponential compounding: the
//! ratio stays near its single-layer value instead of growing like c(p)^L.


use signgeo_core::geometry::rmsnorm_in_place;
use signgeo_core::matrix::Matrix;
use signgeo_core::perturb::{gaussian_matrix, sample_input, sgn, sign_flip_delta_into, InputModel};
use signgeo_core::CoreError;

use super::{fan_out, ExperimentConfig, ExperimentError};
use crate::report::MetricReport;

/// One layer's forward map for all three branches.
///
/// Plain stack: `x ← rms(ReLU(Wx + Δz))`.
/// Residual (post-norm): `x ← rms(x + ReLU(Wx + Δz))`.
fn layer_step(
    w: &Matrix,
    x: &[f64],
    dz: Option<&[f64]>,
    residual: bool,
) -> Result<Vec<f64>, CoreError> {
    let mut z = w.matvec(x)?;
    if let Some(dz) = dz {
        for (zi, di) in z.iter_mut().zip(dz) {
            *zi += di;
        }
    }
    for (i, zi) in z.iter_mut().enumerate() {
        let a = zi.max(0.0);
        *zi = if residual { x[i] + a } else { a };
    }
    rmsnorm_in_place(&mut z)?;
    Ok(z)
}

/// Per-depth output-difference energy ratios `C_1 … C_L`.
pub fn run(cfg: &ExperimentConfig, residual: bool) -> Result<Vec<MetricReport>, ExperimentError> {
    if !(cfg.p > 0.0 && cfg.p < 0.5) {
        return Err(ExperimentError::InvalidConfig("need p in (0, 0.5)".into()));
    }
    if cfg.n != cfg.m {
        return Err(ExperimentError::InvalidConfig(
            "multilayer stacks use square layers (n = m)".into(),
        ));
    }
    let layers = cfg.layers.unwrap_or(6);
    if layers < 1 {
        return Err(ExperimentError::InvalidConfig("need layers >= 1".into()));
    }
    let (n, p) = (cfg.n, cfg.p);
    let names: Vec<String> = (1..=layers).map(|l| format!("c_depth_{l}")).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();

    let stats = fan_out(cfg, &name_refs, |_, rng| {
        let ws: Vec<Matrix> = (0..layers)
            .map(|_| gaussian_matrix(n, n, rng))
            .collect::<Result<_, _>>()?;
        let delta = 2.0 * (p / n as f64).sqrt();
        let sws: Vec<Matrix> = ws
            .iter()
            .map(|w| {
                let mut s = w.clone();
                for v in s.as_mut_slice() {
                    *v = delta * sgn(*v);
                }
                s
            })
            .collect();

        let mut num = vec![0.0; layers];
        let mut den = vec![0.0; layers];
        let mut dz = vec![0.0; n];
        for _ in 0..cfg.samples_per_seed {
            let x0 = sample_input(InputModel::UniformSphere { n }, rng)?;
            let mut xb = x0.clone();
            let mut xs = x0.clone();
            let mut xm = x0;
            for l in 0..layers {
                // Default: perturbation enters at the first layer only;
                // downstream layers are clean and shared.
                let perturbed = l == 0 || cfg.perturb_all_layers;
                xb = layer_step(&ws[l], &xb, None, residual)?;
                if perturbed {
                    sign_flip_delta_into(&ws[l], p, &xs, rng, &mut dz)?;
                    xs = layer_step(&ws[l], &xs, Some(&dz), residual)?;
                    sws[l].matvec_into(&xm, &mut dz)?;
                    xm = layer_step(&ws[l], &xm, Some(&dz), residual)?;
                } else {
                    xs = layer_step(&ws[l], &xs, None, residual)?;
                    xm = layer_step(&ws[l], &xm, None, residual)?;
                }
                let ds: f64 = xs.iter().zip(&xb).map(|(a, b)| (a - b) * (a - b)).sum();
                let dm: f64 = xm.iter().zip(&xb).map(|(a, b)| (a - b) * (a - b)).sum();
                num[l] += ds;
                den[l] += dm;
            }
        }
        Ok(num.iter().zip(&den).map(|(a, b)| a / b).collect())
    })?;

    Ok(names
        .iter()
        .zip(stats)
        .map(|(name, vals)| MetricReport::new(name, &vals, None))
        .collect())
}
