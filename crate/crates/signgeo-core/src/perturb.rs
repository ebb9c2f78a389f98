//! Seeded generation of weights and inputs, and every perturbation or
//! quantization model under study: Bernoulli sign flips, the constant-δ
//! sign-preserving magnitude model, ternary sign quantization (per-row and
//! per-tensor scales), single-entry flips, and column-group flips.
//!
//! Determinism contract: identical `(inputs, Seed)` produce identical outputs
//! within this implementation. Cross-implementation bit-exactness is not a
//! goal; downstream comparisons are statistical.

use alloc::vec::Vec;

use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::CoreError;
use crate::fmath;
use crate::matrix::Matrix;

/// Seed for a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

/// splitmix64 finalizer; decorrelates nearby seed values.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent RNG stream from `(base seed, domain, index)`.
///
/// `domain` separates experiments, `index` separates seeds within one
/// experiment, so parallel fan-out never depends on execution order.
pub fn stream_rng(base: Seed, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        mix64(base.0),
        mix64(base.0 ^ mix64(domain)),
        mix64(domain.wrapping_add(mix64(index))),
        mix64(index ^ 0xa076_1d64_78bd_642f),
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Sign with the fixed convention `sign(0) = +1`, keeping file-ingested
/// matrices (which may contain exact zeros) deterministic.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Perturbation/quantization model selector.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    /// Each entry independently negated with probability `p ∈ (0, 0.5)`.
    /// Preserves magnitudes exactly.
    SignFlip { p: f64 },
    /// Adds `δ·sign(W)` entry-wise with `δ = 2√(p/n)`, so that
    /// `‖ΔW‖²_F = 4pm` exactly. Preserves signs, deterministic given `W`.
    MagnitudeConstDelta { p: f64 },
    /// Replace each row by its scaled sign pattern, `s_i = ‖w_i‖₁/n`.
    TernaryPerRow,
    /// Same with one tensor-wide scale `β = ‖W‖₁/(mn)`.
    TernaryPerTensor,
    /// Negate exactly one entry.
    SingleEntryFlip { row: usize, col: usize },
    /// Negate every listed column.
    ColumnGroupFlip { cols: Vec<usize> },
}

fn check_p(p: f64) -> Result<(), CoreError> {
    if !(p > 0.0 && p < 0.5) {
        return Err(CoreError::OutOfRange {
            what: "p",
            value: p,
            expected: "in (0, 0.5)",
        });
    }
    Ok(())
}

/// Input distribution for the spherical samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputModel {
    /// `x̂` uniform on the unit sphere in n dimensions.
    UniformSphere { n: usize },
    /// Unit vector with `k` coordinates of magnitude `alpha` (the outliers,
    /// placed first — position is immaterial by exchangeability) and `n−k`
    /// of magnitude `β = √((1−kα²)/(n−k))`, all with independent signs.
    TwoPopulation { n: usize, k: usize, alpha: f64 },
}

impl InputModel {
    pub fn dim(&self) -> usize {
        match *self {
            InputModel::UniformSphere { n } => n,
            InputModel::TwoPopulation { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        match *self {
            InputModel::UniformSphere { n } => {
                if n == 0 {
                    return Err(CoreError::OutOfRange {
                        what: "n",
                        value: 0.0,
                        expected: ">= 1",
                    });
                }
            }
            InputModel::TwoPopulation { n, k, alpha } => {
                if k == 0 || k >= n {
                    return Err(CoreError::ConstraintViolation("need 1 <= k < n"));
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(CoreError::OutOfRange {
                        what: "alpha",
                        value: alpha,
                        expected: "in (0, 1)",
                    });
                }
                if k as f64 * alpha * alpha >= 1.0 {
                    return Err(CoreError::ConstraintViolation("k·alpha² must be < 1"));
                }
            }
        }
        Ok(())
    }
}

/// `m × n` matrix with i.i.d. `N(0, 1/n)` entries.
pub fn gaussian_matrix<R: Rng>(m: usize, n: usize, rng: &mut R) -> Result<Matrix, CoreError> {
    if m == 0 || n == 0 {
        return Err(CoreError::OutOfRange {
            what: "matrix dim",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let scale = 1.0 / fmath::sqrt(n as f64);
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        let g: f64 = rng.sample(StandardNormal);
        data.push(g * scale);
    }
    Matrix::from_rows(m, n, data)
}

/// Seed-keyed convenience wrapper over [`gaussian_matrix`].
pub fn gaussian_matrix_seeded(m: usize, n: usize, seed: Seed) -> Result<Matrix, CoreError> {
    gaussian_matrix(m, n, &mut stream_rng(seed, 0, 0))
}

/// Draws one input vector. Unit norm within 1e-12 for both models.
pub fn sample_input<R: Rng>(model: InputModel, rng: &mut R) -> Result<Vec<f64>, CoreError> {
    model.validate()?;
    match model {
        InputModel::UniformSphere { n } => {
            // Normalized Gaussian; resample the probability-zero zero draw.
            loop {
                let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let norm_sq: f64 = v.iter().map(|x| x * x).sum();
                if norm_sq > 0.0 {
                    let inv = 1.0 / fmath::sqrt(norm_sq);
                    for x in &mut v {
                        *x *= inv;
                    }
                    return Ok(v);
                }
            }
        }
        InputModel::TwoPopulation { n, k, alpha } => {
            let beta = fmath::sqrt((1.0 - k as f64 * alpha * alpha) / (n - k) as f64);
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                let mag = if i < k { alpha } else { beta };
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                v.push(s * mag);
            }
            Ok(v)
        }
    }
}

/// Applies a perturbation model, returning the perturbed matrix.
pub fn apply_perturbation<R: Rng>(
    w: &Matrix,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> Result<Matrix, CoreError> {
    let mut out = w.clone();
    match spec {
        PerturbationSpec::SignFlip { p } => {
            check_p(*p)?;
            for i in 0..out.rows() {
                let row = out.row_mut(i);
                for j in sample_flip_columns(row.len(), *p, rng) {
                    row[j] = -row[j];
                }
            }
        }
        PerturbationSpec::MagnitudeConstDelta { p } => {
            check_p(*p)?;
            let delta = 2.0 * fmath::sqrt(p / out.cols() as f64);
            for x in out.as_mut_slice() {
                *x += delta * sgn(*x);
            }
        }
        PerturbationSpec::TernaryPerRow => {
            out = ternary_quantize(w, TernaryMode::PerRow)?.quantized;
        }
        PerturbationSpec::TernaryPerTensor => {
            out = ternary_quantize(w, TernaryMode::PerTensor)?.quantized;
        }
        PerturbationSpec::SingleEntryFlip { row, col } => {
            if *row >= w.rows() {
                return Err(CoreError::IndexOutOfRange {
                    what: "row",
                    index: *row,
                    len: w.rows(),
                });
            }
            if *col >= w.cols() {
                return Err(CoreError::IndexOutOfRange {
                    what: "col",
                    index: *col,
                    len: w.cols(),
                });
            }
            out.set(*row, *col, -w.get(*row, *col));
        }
        PerturbationSpec::ColumnGroupFlip { cols } => {
            for &j in cols {
                if j >= w.cols() {
                    return Err(CoreError::IndexOutOfRange {
                        what: "col",
                        index: j,
                        len: w.cols(),
                    });
                }
            }
            for i in 0..out.rows() {
                let row = out.row_mut(i);
                for &j in cols {
                    row[j] = -row[j];
                }
            }
        }
    }
    Ok(out)
}

/// Samples the flipped-column set of one row: draw `K ~ Binomial(n, p)`, then
/// `K` distinct columns. Identical in distribution to `n` Bernoulli draws and
/// ~`1/p` faster at small `p`.
pub fn sample_flip_columns<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<usize> {
    let k = Binomial::new(n as u64, p)
        .expect("validated p")
        .sample(rng) as usize;
    index_sample(rng, n, k).into_vec()
}

/// Per-sample sign-flip image: writes `Δy = −2·(W ⊙ M)x` into `out`, where
/// `M` is a fresh Bernoulli(p) mask, without materializing the mask.
pub fn sign_flip_delta_into<R: Rng>(
    w: &Matrix,
    p: f64,
    x: &[f64],
    rng: &mut R,
    out: &mut [f64],
) -> Result<(), CoreError> {
    check_p(p)?;
    if x.len() != w.cols() || out.len() != w.rows() {
        return Err(CoreError::DimMismatch {
            left: w.cols(),
            right: x.len(),
        });
    }
    for (i, o) in out.iter_mut().enumerate() {
        let row = w.row(i);
        let mut acc = 0.0;
        for j in sample_flip_columns(row.len(), p, rng) {
            acc += row[j] * x[j];
        }
        *o = -2.0 * acc;
    }
    Ok(())
}

/// Scale placement for ternary sign quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TernaryMode {
    /// `s_i = ‖w_i‖₁/n`, one scale per row.
    PerRow,
    /// `β = ‖W‖₁/(mn)`, one scale for the whole tensor.
    PerTensor,
}

/// Original matrix together with its ternary-quantized counterpart and the
/// scales used. `quantized[i][j] = s_i·sign(original[i][j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPair {
    pub original: Matrix,
    pub quantized: Matrix,
    /// Per-row scales; for [`TernaryMode::PerTensor`] the single scale is
    /// repeated `m` times.
    pub row_scales: Vec<f64>,
}

/// Ternary sign quantization of a weight matrix.
pub fn ternary_quantize(w: &Matrix, mode: TernaryMode) -> Result<QuantizedPair, CoreError> {
    let (m, n) = (w.rows(), w.cols());
    let scales: Vec<f64> = match mode {
        TernaryMode::PerRow => {
            let mut s = Vec::with_capacity(m);
            for i in 0..m {
                let l1: f64 = w.row(i).iter().map(|x| x.abs()).sum();
                if l1 == 0.0 {
                    return Err(CoreError::DegenerateRow { row: i });
                }
                s.push(l1 / n as f64);
            }
            s
        }
        TernaryMode::PerTensor => {
            let l1: f64 = w.as_slice().iter().map(|x| x.abs()).sum();
            if l1 == 0.0 {
                return Err(CoreError::ConstraintViolation(
                    "all-zero matrix cannot be quantized",
                ));
            }
            let beta = l1 / (m * n) as f64;
            alloc::vec![beta; m]
        }
    };
    let mut q = Matrix::zeros(m, n);
    for i in 0..m {
        let si = scales[i];
        let (orig, dst) = (w.row(i), q.row_mut(i));
        for (d, &o) in dst.iter_mut().zip(orig) {
            *d = si * sgn(o);
        }
    }
    Ok(QuantizedPair {
        original: w.clone(),
        quantized: q,
        row_scales: scales,
    })
}

/// Quantization error `ΔW = quantized − original`. Sign-preserving: the
/// perturbed entry keeps the original entry's sign even where `Δ` opposes it.
pub fn ternary_error(pair: &QuantizedPair) -> Matrix {
    let mut d = pair.quantized.clone();
    for (e, &o) in d.as_mut_slice().iter_mut().zip(pair.original.as_slice()) {
        *e -= o;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gaussian_moments() {
        let mut rng = stream_rng(Seed(7), 1, 0);
        let w = gaussian_matrix(1024, 1024, &mut rng).unwrap();
        let k = (1024 * 1024) as f64;
        let mean: f64 = w.as_slice().iter().sum::<f64>() / k;
        assert!(mean.abs() < 0.005);
        let var: f64 = w.as_slice().iter().map(|x| x * x).sum::<f64>() / k;
        assert!((var * 1024.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn determinism_and_stream_separation() {
        let a = gaussian_matrix(8, 8, &mut stream_rng(Seed(42), 3, 5)).unwrap();
        let b = gaussian_matrix(8, 8, &mut stream_rng(Seed(42), 3, 5)).unwrap();
        assert_eq!(a, b);
        let c = gaussian_matrix(8, 8, &mut stream_rng(Seed(42), 3, 6)).unwrap();
        assert_ne!(a, c);
        let d = gaussian_matrix(8, 8, &mut stream_rng(Seed(42), 4, 5)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn sphere_input_unit_norm_and_delocalized() {
        let mut rng = stream_rng(Seed(1), 2, 0);
        for _ in 0..100 {
            let x = sample_input(InputModel::UniformSphere { n: 2048 }, &mut rng).unwrap();
            let norm_sq: f64 = x.iter().map(|v| v * v).sum();
            assert!((norm_sq - 1.0).abs() < 1e-12);
            let max = x.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            assert!(max < 0.12);
        }
    }

    #[test]
    fn two_population_structure() {
        let mut rng = stream_rng(Seed(1), 2, 1);
        let model = InputModel::TwoPopulation {
            n: 100,
            k: 1,
            alpha: 0.5,
        };
        let x = sample_input(model, &mut rng).unwrap();
        assert!((x[0].abs() - 0.5).abs() < 1e-15);
        let beta = (0.75_f64 / 99.0).sqrt();
        for &v in &x[1..] {
            assert!((v.abs() - beta).abs() < 1e-15);
        }
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        assert!((norm_sq - 1.0).abs() < 1e-12);
        // Energy constraint violation rejected.
        let bad = InputModel::TwoPopulation {
            n: 10,
            k: 5,
            alpha: 0.5,
        };
        assert!(sample_input(bad, &mut rng).is_err());
    }

    #[test]
    fn sign_flip_preserves_magnitudes_and_counts() {
        let mut rng = stream_rng(Seed(9), 5, 0);
        let w = gaussian_matrix(128, 128, &mut rng).unwrap();
        let p = 0.05;
        let wp = apply_perturbation(&w, &PerturbationSpec::SignFlip { p }, &mut rng).unwrap();
        let mut flips = 0usize;
        for (a, b) in w.as_slice().iter().zip(wp.as_slice()) {
            assert_eq!(a.abs(), b.abs());
            if a != b {
                flips += 1;
            }
        }
        let mn = (128 * 128) as f64;
        let sigma = (mn * p * (1.0 - p)).sqrt();
        assert!((flips as f64 - mn * p).abs() < 4.0 * sigma);
    }

    #[test]
    fn magnitude_frobenius_exact_and_sign_preserving() {
        let mut rng = stream_rng(Seed(9), 5, 1);
        let w = gaussian_matrix(64, 256, &mut rng).unwrap();
        let p = 0.03;
        let wp =
            apply_perturbation(&w, &PerturbationSpec::MagnitudeConstDelta { p }, &mut rng).unwrap();
        let mut frob = 0.0;
        for (a, b) in w.as_slice().iter().zip(wp.as_slice()) {
            frob += (b - a) * (b - a);
            assert_eq!(sgn(*a), sgn(*b));
        }
        assert!((frob - 4.0 * p * 64.0).abs() < 1e-10);
    }

    #[test]
    fn entry_and_column_flips() {
        let w = Matrix::from_rows(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut rng = stream_rng(Seed(0), 0, 0);
        let e = apply_perturbation(
            &w,
            &PerturbationSpec::SingleEntryFlip { row: 1, col: 0 },
            &mut rng,
        )
        .unwrap();
        assert_eq!(e.as_slice(), &[1.0, 2.0, -3.0, 4.0]);
        let c = apply_perturbation(
            &w,
            &PerturbationSpec::ColumnGroupFlip { cols: vec![1] },
            &mut rng,
        )
        .unwrap();
        assert_eq!(c.as_slice(), &[1.0, -2.0, 3.0, -4.0]);
        assert!(apply_perturbation(
            &w,
            &PerturbationSpec::SingleEntryFlip { row: 2, col: 0 },
            &mut rng,
        )
        .is_err());
        assert!(apply_perturbation(
            &w,
            &PerturbationSpec::ColumnGroupFlip { cols: vec![5] },
            &mut rng,
        )
        .is_err());
    }

    #[test]
    fn ternary_quantize_direct() {
        let w = Matrix::from_rows(1, 3, vec![1.0, -2.0, 3.0]).unwrap();
        let q = ternary_quantize(&w, TernaryMode::PerRow).unwrap();
        assert_eq!(q.row_scales, vec![2.0]);
        assert_eq!(q.quantized.as_slice(), &[2.0, -2.0, 2.0]);
        let d = ternary_error(&q);
        assert_eq!(d.as_slice(), &[1.0, 0.0, -1.0]);
        // w=3 > s=2: Δ opposes sign(w) but the quantized entry keeps it.
        assert!(d.as_slice()[2] < 0.0 && q.quantized.as_slice()[2] > 0.0);
    }

    #[test]
    fn ternary_scale_moments() {
        let mut rng = stream_rng(Seed(3), 6, 0);
        let w = gaussian_matrix(64, 4096, &mut rng).unwrap();
        let q = ternary_quantize(&w, TernaryMode::PerRow).unwrap();
        let mean_s: f64 = q.row_scales.iter().sum::<f64>() / 64.0;
        // E|w| = √(2/(πn)) so s·√n → √(2/π).
        assert!((mean_s * 4096.0_f64.sqrt() - (2.0 / core::f64::consts::PI).sqrt()).abs() < 0.01);
        let d = ternary_error(&q);
        let per_row_energy = d.frob_sq() / 64.0;
        let expect = 1.0 - 2.0 / core::f64::consts::PI;
        assert!((per_row_energy - expect).abs() / expect < 0.02);
    }

    #[test]
    fn ternary_equal_l1_rows_match_per_tensor() {
        let w = Matrix::from_rows(2, 2, vec![1.0, -3.0, -2.0, 2.0]).unwrap();
        let a = ternary_quantize(&w, TernaryMode::PerRow).unwrap();
        let b = ternary_quantize(&w, TernaryMode::PerTensor).unwrap();
        assert_eq!(a.quantized, b.quantized);
    }

    #[test]
    fn degenerate_rows_rejected() {
        let w = Matrix::from_rows(2, 2, vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            ternary_quantize(&w, TernaryMode::PerRow),
            Err(CoreError::DegenerateRow { row: 0 })
        );
        let z = Matrix::zeros(2, 2);
        assert!(ternary_quantize(&z, TernaryMode::PerTensor).is_err());
    }

    #[test]
    fn flip_column_sampler_matches_binomial_mean() {
        let mut rng = stream_rng(Seed(11), 7, 0);
        let (n, p, trials) = (512, 0.02, 4000);
        let mut total = 0usize;
        for _ in 0..trials {
            total += sample_flip_columns(n, p, &mut rng).len();
        }
        let mean = total as f64 / trials as f64;
        let sigma = (n as f64 * p * (1.0 - p) / trials as f64).sqrt();
        assert!((mean - n as f64 * p).abs() < 4.0 * sigma);
    }
}
