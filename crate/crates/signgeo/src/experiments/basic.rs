//! Single-object estimators: row-level sign alignment (fact1), the
//! random-sign alignment decay (prop2), the scaling-bound tightness sweep
//! (thm1-tightness), the Fréchet-derivative finite-difference check (thm2-fd),
//! and the ReLU correlation propagation estimate (lemma-a1).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use signgeo_core::geometry::{
    frechet_apply, norm, norm_sq, relu, rmsnorm, rmsnorm_scaling_error,
    second_order_remainder_bound,
};
use signgeo_core::perturb::{gaussian_matrix, sample_input, sgn, InputModel};
use signgeo_core::theory::{self, TheoryValue, BUSSGANG};
use signgeo_core::CoreError;

use super::{fan_out, ExperimentConfig, ExperimentError};
use crate::report::MetricReport;

fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Mean row-level cos²(w, sign(w)) for Gaussian rows; → 2/π as n grows.
pub fn fact1(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let n = cfg.n;
    if n < 2 {
        return Err(ExperimentError::InvalidConfig("need n >= 2".into()));
    }
    let stats = fan_out(cfg, &["row_cos2"], |_, rng| {
        let mut acc = 0.0;
        for _ in 0..cfg.samples_per_seed {
            let w = gaussian_vec(n, rng);
            let l1: f64 = w.iter().map(|x| x.abs()).sum();
            let l2sq = norm_sq(&w);
            if l2sq == 0.0 {
                return Err(CoreError::ZeroVector);
            }
            acc += l1 * l1 / (n as f64 * l2sq);
        }
        Ok(vec![acc / cfg.samples_per_seed as f64])
    })?;
    Ok(vec![MetricReport::new(
        "row_cos2",
        &stats[0],
        Some(TheoryValue::new("bussgang", BUSSGANG, "2/π, limiting cos²(w, sign(w))").into()),
    )])
}

/// Mean cos²(w, s⊙|w|) for independent Rademacher signs s; exactly 3/(n+2).
pub fn prop2(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let n = cfg.n;
    if n < 1 {
        return Err(ExperimentError::InvalidConfig("need n >= 1".into()));
    }
    let stats = fan_out(cfg, &["cos2"], |_, rng| {
        let mut acc = 0.0;
        for _ in 0..cfg.samples_per_seed {
            let w = gaussian_vec(n, rng);
            let l2sq = norm_sq(&w);
            if l2sq == 0.0 {
                return Err(CoreError::ZeroVector);
            }
            // (w · s⊙|w|) = Σ sᵢ·sign(wᵢ)·wᵢ², and ‖s⊙|w|‖ = ‖w‖.
            let mut dot = 0.0;
            for &wi in &w {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                dot += s * sgn(wi) * wi * wi;
            }
            acc += dot * dot / (l2sq * l2sq);
        }
        Ok(vec![acc / cfg.samples_per_seed as f64])
    })?;
    let th = theory::prop2_exact(n as u64)?;
    Ok(vec![MetricReport::new(
        "cos2",
        &stats[0],
        Some(TheoryValue::new("random_sign_alignment", th, "3/(n+2)").into()),
    )])
}

/// Tightness of the per-row scaling bound: the constructed CV = 0.1 case plus
/// a random sweep confirming `exact ≤ bound` everywhere.
pub fn thm1_tightness(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    // Constructed pair with CV_p(d) = 0.1 exactly: uniform weights, d = 1 ± 0.1.
    let y = [1.0, 1.0];
    let d = [0.9, 1.1];
    let (exact, bound) = rmsnorm_scaling_error(&y, &d)?;

    let stats = fan_out(cfg, &["sweep_max_exact_minus_bound"], |_, rng| {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..cfg.samples_per_seed {
            let dim = 2 + (rng.gen::<u64>() % 63) as usize;
            let yv = gaussian_vec(dim, rng);
            if norm_sq(&yv) == 0.0 {
                continue;
            }
            let dv: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 3.0 + 1e-3).collect();
            let (e, b) = rmsnorm_scaling_error(&yv, &dv)?;
            worst = worst.max(e - b);
        }
        Ok(vec![worst])
    })?;

    Ok(vec![
        MetricReport::new(
            "exact_cv_0.1",
            &[exact],
            Some(TheoryValue::new("exact_error", 0.09962740376031823, "√(2(1 − 1/√1.01))").into()),
        ),
        MetricReport::new(
            "bound_cv_0.1",
            &[bound],
            Some(TheoryValue::new("cv_bound", 0.1, "CV_p(d)").into()),
        ),
        MetricReport::new("sweep_max_exact_minus_bound", &stats[0], None),
    ])
}

/// Central finite-difference validation of the RMSNorm Fréchet derivative,
/// plus the dimension-independent second-order remainder bound.
pub fn thm2_finite_difference(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    const DIMS: [usize; 3] = [8, 64, 512];
    const ETAS: [f64; 3] = [0.01, 0.05, 0.10];
    let trials = cfg.samples_per_seed;
    let stats = fan_out(
        cfg,
        &["fd_max_rel_err", "remainder_max_ratio"],
        |_, rng| {
            let mut fd_worst = 0.0_f64;
            for &dim in &DIMS {
                for _ in 0..trials {
                    let y = gaussian_vec(dim, rng);
                    let h = gaussian_vec(dim, rng);
                    let ny = norm(&y);
                    let nh = norm(&h);
                    if ny == 0.0 || nh == 0.0 {
                        continue;
                    }
                    let step = 1e-6 * ny / nh;
                    let plus: Vec<f64> = y.iter().zip(&h).map(|(a, b)| a + step * b).collect();
                    let minus: Vec<f64> = y.iter().zip(&h).map(|(a, b)| a - step * b).collect();
                    let rp = rmsnorm(&plus)?;
                    let rm = rmsnorm(&minus)?;
                    let fd: Vec<f64> = rp
                        .iter()
                        .zip(&rm)
                        .map(|(a, b)| (a - b) / (2.0 * step))
                        .collect();
                    let an = frechet_apply(&y, &h)?;
                    let diff_sq: f64 = fd.iter().zip(&an).map(|(a, b)| (a - b) * (a - b)).sum();
                    let an_sq = norm_sq(&an);
                    if an_sq > 0.0 {
                        fd_worst = fd_worst.max((diff_sq / an_sq).sqrt());
                    }
                }
            }
            // Remainder bound: 1000 (y, Δy) trials per η across the dims.
            let mut rem_worst = 0.0_f64;
            for &eta in &ETAS {
                let bound = second_order_remainder_bound(eta).expect("eta in range");
                for &dim in &DIMS {
                    for _ in 0..334 {
                        let y = gaussian_vec(dim, rng);
                        let mut dy = gaussian_vec(dim, rng);
                        let ny = norm(&y);
                        let ndy = norm(&dy);
                        if ny == 0.0 || ndy == 0.0 {
                            continue;
                        }
                        let scale = eta * ny / ndy;
                        for v in &mut dy {
                            *v *= scale;
                        }
                        let perturbed: Vec<f64> =
                            y.iter().zip(&dy).map(|(a, b)| a + b).collect();
                        let lin = frechet_apply(&y, &dy)?;
                        let r0 = rmsnorm(&y)?;
                        let r1 = rmsnorm(&perturbed)?;
                        let rem_sq: f64 = r1
                            .iter()
                            .zip(&r0)
                            .zip(&lin)
                            .map(|((a, b), c)| {
                                let d = a - b - c;
                                d * d
                            })
                            .sum();
                        let rem = (rem_sq / dim as f64).sqrt();
                        rem_worst = rem_worst.max(rem / bound);
                    }
                }
            }
            Ok(vec![fd_worst, rem_worst])
        },
    )?;
    Ok(vec![
        MetricReport::new("fd_max_rel_err", &stats[0], None),
        MetricReport::new("remainder_max_ratio", &stats[1], None),
    ])
}

/// Uncentered correlation between activations and their change under the
/// constant-δ magnitude model; ReLU propagates the √(2/π) alignment.
pub fn lemma_a1(cfg: &ExperimentConfig) -> Result<Vec<MetricReport>, ExperimentError> {
    let (n, m, p) = (cfg.n, cfg.m, cfg.p);
    if !(p > 0.0 && p < 0.5) {
        return Err(ExperimentError::InvalidConfig("need p in (0, 0.5)".into()));
    }
    let stats = fan_out(cfg, &["corr_relu", "corr_linear"], |_, rng| {
        let w = gaussian_matrix(m, n, rng)?;
        // δ·sign(W) as a matrix so Δz = (δ·sign(W))x is one matvec.
        let delta = 2.0 * (p / n as f64).sqrt();
        let mut sw = w.clone();
        for v in sw.as_mut_slice() {
            *v = delta * sgn(*v);
        }
        let (mut saa, mut sdd, mut sad) = (0.0, 0.0, 0.0);
        let (mut szz, mut szdz, mut sdzdz) = (0.0, 0.0, 0.0);
        let mut z = vec![0.0; m];
        let mut dz = vec![0.0; m];
        for _ in 0..cfg.samples_per_seed {
            let x = sample_input(InputModel::UniformSphere { n }, rng)?;
            w.matvec_into(&x, &mut z)?;
            sw.matvec_into(&x, &mut dz)?;
            let a = relu(&z);
            for i in 0..m {
                let ai = a[i];
                let api = (z[i] + dz[i]).max(0.0);
                let dai = api - ai;
                saa += ai * ai;
                sdd += dai * dai;
                sad += ai * dai;
                szz += z[i] * z[i];
                szdz += z[i] * dz[i];
                sdzdz += dz[i] * dz[i];
            }
        }
        Ok(vec![
            sad / (saa * sdd).sqrt(),
            szdz / (szz * sdzdz).sqrt(),
        ])
    })?;
    let th = BUSSGANG.sqrt();
    Ok(vec![
        MetricReport::new(
            "corr_relu",
            &stats[0],
            Some(TheoryValue::new("bussgang_corr", th, "√(2/π) + O(√p)").into()),
        ),
        MetricReport::new(
            "corr_linear",
            &stats[1],
            Some(TheoryValue::new("bussgang_corr", th, "√(2/π), exact pre-activation").into()),
        ),
    ])
}
