//! Closed-form theory: every analytic constant and curve the Monte Carlo
//! estimators are compared against. All functions are pure and cheap; the
//! experiment layer treats them as oracles.

use alloc::string::String;

use crate::error::CoreError;
use crate::fmath;

/// `2/π`, the limiting squared cosine between a Gaussian vector and its sign
/// pattern (Bussgang constant).
pub const BUSSGANG: f64 = 2.0 / core::f64::consts::PI;

const PI: f64 = core::f64::consts::PI;

/// A named closed-form value with the formula it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryValue {
    pub name: String,
    pub value: f64,
    /// Human-readable formula or derivation note.
    pub anchor: String,
}

impl TheoryValue {
    pub fn new(name: &str, value: f64, anchor: &str) -> Self {
        Self {
            name: String::from(name),
            value,
            anchor: String::from(anchor),
        }
    }
}

/// Correlation coefficient validated to `[−1, 1]`.
///
/// Values within `1e-12` outside the interval (floating-point arithmetic
/// arriving from `1 − 2p` style expressions) are clamped; anything further out
/// is rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRho(f64);

impl CorrelationRho {
    pub fn new(rho: f64) -> Result<Self, CoreError> {
        if !rho.is_finite() || rho.abs() > 1.0 + 1e-12 {
            return Err(CoreError::OutOfRange {
                what: "rho",
                value: rho,
                expected: "in [-1, 1]",
            });
        }
        Ok(Self(rho.clamp(-1.0, 1.0)))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// `(E|w|)²/E[w²]` — the squared cosine between a random variable and its
/// sign, in the large-dimension limit. Gaussian moments give [`BUSSGANG`].
pub fn bussgang_limit(moment_abs: f64, moment_sq: f64) -> Result<f64, CoreError> {
    if moment_sq <= 0.0 {
        return Err(CoreError::OutOfRange {
            what: "moment_sq",
            value: moment_sq,
            expected: "> 0",
        });
    }
    if moment_abs < 0.0 {
        return Err(CoreError::OutOfRange {
            what: "moment_abs",
            value: moment_abs,
            expected: ">= 0",
        });
    }
    Ok(moment_abs * moment_abs / moment_sq)
}

/// Exact mean squared cosine between an n-dimensional Gaussian vector and an
/// independent uniform sign pattern applied to its magnitudes: `3/(n+2)`.
pub fn prop2_exact(n: u64) -> Result<f64, CoreError> {
    if n == 0 {
        return Err(CoreError::OutOfRange {
            what: "n",
            value: 0.0,
            expected: ">= 1",
        });
    }
    Ok(3.0 / (n as f64 + 2.0))
}

/// `E[X²·1{X>0, Y<0}]` for a standard bivariate normal pair with correlation
/// ρ: `1/4 − (arcsin ρ + ρ√(1−ρ²))/(2π)`.
///
/// Continuous at the boundaries: 0 at ρ=1 (event impossible), 1/2 at ρ=−1.
pub fn plackett_flip_energy(rho: CorrelationRho) -> f64 {
    let r = rho.get();
    let s = fmath::sqrt((1.0 - r * r).max(0.0));
    0.25 - (fmath::asin(r) + r * s) / (2.0 * PI)
}

/// `E[max(X,0)·max(Y,0)]` for centered jointly Gaussian `(X, Y)` with
/// correlation ρ and standard deviations `(σ_x, σ_y)`:
/// `(σ_xσ_y/2π)(sin θ + (π−θ)cos θ)` with `θ = arccos ρ`.
pub fn relu_product(rho: CorrelationRho, sigma_x: f64, sigma_y: f64) -> Result<f64, CoreError> {
    if sigma_x <= 0.0 {
        return Err(CoreError::OutOfRange {
            what: "sigma_x",
            value: sigma_x,
            expected: "> 0",
        });
    }
    if sigma_y <= 0.0 {
        return Err(CoreError::OutOfRange {
            what: "sigma_y",
            value: sigma_y,
            expected: "> 0",
        });
    }
    let theta = fmath::acos(rho.get());
    Ok(sigma_x * sigma_y / (2.0 * PI) * (fmath::sin(theta) + (PI - theta) * fmath::cos(theta)))
}

/// `E[(X'−X)²·1{X>0, X'>0}]` for standardized correlated Gaussians, via the
/// identity `β_smooth = 1 − 2·β_flip − 2·E[ReLU(X)ReLU(X')]`.
pub fn beta_smooth(rho: CorrelationRho) -> f64 {
    let prod = relu_product(rho, 1.0, 1.0).expect("unit sigmas are valid");
    1.0 - 2.0 * plackett_flip_energy(rho) - 2.0 * prod
}

/// Post-ReLU energy of the difference of a correlated standardized Gaussian
/// pair: `f(ρ) = 1 − ρ + (ρ arccos ρ − √(1−ρ²))/π`.
///
/// Key values: `f(1) = 0`, `f(0) = 1 − 1/π`, `f(−1) = 1` (the difference
/// `ReLU(X) − ReLU(−X)` is `X` itself). Strictly decreasing on `[−1, 1]`.
pub fn f_rho(rho: CorrelationRho) -> f64 {
    let r = rho.get();
    let s = fmath::sqrt((1.0 - r * r).max(0.0));
    1.0 - r + (r * fmath::acos(r) - s) / PI
}

fn check_p(p: f64) -> Result<(), CoreError> {
    if !(0.0..0.5).contains(&p) {
        return Err(CoreError::OutOfRange {
            what: "p",
            value: p,
            expected: "in [0, 0.5)",
        });
    }
    Ok(())
}

/// Transverse energy ratio of sign-flip over magnitude perturbation after
/// ReLU + RMSNorm, factored structural form:
/// `c(p) = (π/(π−2))·(1−p)·(1 − 4√p/(3π))`, with `c(0) = π/(π−2) ≈ 2.75`.
///
/// The multiplicative remainder `ε(p)` (bounded by `O(√p)`, coefficient
/// undetermined) is intentionally excluded; measured values sit a few percent
/// above this curve.
pub fn c_theory(p: f64) -> Result<f64, CoreError> {
    check_p(p)?;
    Ok(PI / (PI - 2.0) * (1.0 - p) * (1.0 - 4.0 * fmath::sqrt(p) / (3.0 * PI)))
}

/// Which perturbation's limiting radial fraction to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    /// Sign flips with probability p: `p − 4p^{3/2}/(3π)`.
    Sign,
    /// Constant-δ sign-preserving (idealized magnitude) model: `2/π`.
    MagConstDelta,
    /// Ternary quantization error before ReLU: `1 − 2/π` (exact).
    TernaryPre,
    /// Ternary quantization error after ReLU: `2(S−1/2)²/(1/2 + 1/π − 2S)`.
    TernaryPost,
}

/// Limiting radial fraction for the given perturbation kind. `p` is only
/// read for [`RadialKind::Sign`] and [`RadialKind::MagConstDelta`].
pub fn radial_fraction_theory(kind: RadialKind, p: f64) -> Result<f64, CoreError> {
    match kind {
        RadialKind::Sign => {
            check_p(p)?;
            Ok(p - 4.0 * p * fmath::sqrt(p) / (3.0 * PI))
        }
        RadialKind::MagConstDelta => {
            check_p(p)?;
            Ok(BUSSGANG)
        }
        RadialKind::TernaryPre => Ok(1.0 - BUSSGANG),
        RadialKind::TernaryPost => {
            let s = ternary_relu_overlap();
            let d = s - 0.5;
            Ok(2.0 * d * d / (0.5 + 1.0 / PI - 2.0 * s))
        }
    }
}

/// `S = E[ReLU(z)·ReLU(z^Q)]` for the standardized pre-activation and its
/// ternary-quantized counterpart (correlation `√(2/π)`, second vector scaled
/// to variance `2/π`). Derived from [`relu_product`], never hard-coded.
pub fn ternary_relu_overlap() -> f64 {
    let rho = CorrelationRho::new(fmath::sqrt(BUSSGANG)).expect("in range");
    relu_product(rho, 1.0, fmath::sqrt(BUSSGANG)).expect("valid sigmas")
}

/// Probability that a ReLU gate flips state, from the pre-activation
/// correlation: `arccos(ρ)/π` (arcsine law).
pub fn gate_flip_prob_rho(rho: CorrelationRho) -> f64 {
    fmath::acos(rho.get()) / PI
}

/// Gate-flip probability for a single flipped entry carrying input amplitude
/// α: `(2/π)·arcsin(α)`. Agrees with [`gate_flip_prob_rho`] under
/// `ρ = 1 − 2α²`.
pub fn gate_flip_prob_alpha(alpha: f64) -> Result<f64, CoreError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CoreError::OutOfRange {
            what: "alpha",
            value: alpha,
            expected: "in [0, 1]",
        });
    }
    Ok(2.0 / PI * fmath::asin(alpha))
}

/// Form selector for [`outlier_leverage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeverageForm {
    /// `f(1−2α²)/f(1−2/n)` — the full bivariate-normal result.
    Exact,
    /// `nα²(1 − 4α/(3π))` — the leading-order expansion.
    Leading,
}

/// Post-ReLU energy leverage of flipping one weight entry in a column whose
/// input amplitude is α, relative to a typical (amplitude `1/√n`) column.
///
/// Crosses 1 at `α ≈ 1/√n`; grows like `nα²`.
pub fn outlier_leverage(alpha: f64, n: u64, form: LeverageForm) -> Result<f64, CoreError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CoreError::OutOfRange {
            what: "alpha",
            value: alpha,
            expected: "in (0, 1)",
        });
    }
    if n < 2 {
        return Err(CoreError::OutOfRange {
            what: "n",
            value: n as f64,
            expected: ">= 2",
        });
    }
    match form {
        LeverageForm::Exact => {
            let num = f_rho(CorrelationRho::new(1.0 - 2.0 * alpha * alpha)?);
            let den = f_rho(CorrelationRho::new(1.0 - 2.0 / n as f64)?);
            Ok(num / den)
        }
        LeverageForm::Leading => Ok(n as f64 * alpha * alpha * (1.0 - 4.0 * alpha / (3.0 * PI))),
    }
}

/// Per-flip leverage of negating all k outlier columns versus all non-outlier
/// columns in the two-population input model:
/// `R_col = ((1−η)/η)·f(1−2γ)/f(2γ−1)` with `η = k/n` and outlier energy
/// share `γ = kα²`.
pub fn column_group_leverage(eta: f64, gamma_energy: f64) -> Result<f64, CoreError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CoreError::OutOfRange {
            what: "eta",
            value: eta,
            expected: "in (0, 1)",
        });
    }
    if !(gamma_energy > 0.0 && gamma_energy < 1.0) {
        return Err(CoreError::OutOfRange {
            what: "gamma_energy",
            value: gamma_energy,
            expected: "in (0, 1)",
        });
    }
    let num = f_rho(CorrelationRho::new(1.0 - 2.0 * gamma_energy)?);
    let den = f_rho(CorrelationRho::new(2.0 * gamma_energy - 1.0)?);
    Ok((1.0 - eta) / eta * num / den)
}

/// Variance-based single-entry leverage heuristic for amplitude ratio `α/β`
/// and outlier energy share γ: `R_entry = (α/β)²·(1−γ)`.
pub fn dettmers_entry_leverage(amp_ratio: f64, gamma_energy: f64) -> Result<f64, CoreError> {
    if amp_ratio <= 0.0 {
        return Err(CoreError::OutOfRange {
            what: "amp_ratio",
            value: amp_ratio,
            expected: "> 0",
        });
    }
    if !(0.0..1.0).contains(&gamma_energy) {
        return Err(CoreError::OutOfRange {
            what: "gamma_energy",
            value: gamma_energy,
            expected: "in [0, 1)",
        });
    }
    Ok(amp_ratio * amp_ratio * (1.0 - gamma_energy))
}

/// Flip rate at which a sign-flip perturbation's expected energy equals the
/// ternary quantization error's: `p = (1 − 2/π)/4 ≈ 0.0908`.
pub fn equal_norm_flip_rate() -> f64 {
    (1.0 - BUSSGANG) / 4.0
}

/// Limiting squared chord length between RMS-normalized original and
/// ternary-quantized outputs: `2(1 − √(2/π)) ≈ 0.404`.
pub fn ternary_rmsnorm_error_limit() -> f64 {
    2.0 * (1.0 - fmath::sqrt(BUSSGANG))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(r: f64) -> CorrelationRho {
        CorrelationRho::new(r).unwrap()
    }

    #[test]
    fn rho_validation() {
        assert!(CorrelationRho::new(1.0 + 1e-13).is_ok()); // clamped
        assert!(CorrelationRho::new(1.0 + 1e-9).is_err());
        assert!(CorrelationRho::new(f64::NAN).is_err());
        assert_eq!(rho(1.0 + 1e-14).get(), 1.0);
    }

    #[test]
    fn bussgang_limit_values() {
        // Gaussian: E|w| = σ√(2/π), E[w²] = σ².
        let sigma = 1.7;
        let v = bussgang_limit(sigma * (2.0 / PI).sqrt(), sigma * sigma).unwrap();
        assert!((v - BUSSGANG).abs() < 1e-15);
        // Rademacher: sign(w) = w.
        assert_eq!(bussgang_limit(1.0, 1.0).unwrap(), 1.0);
        // Uniform[-1,1]: E|w| = 1/2, E[w²] = 1/3.
        assert!((bussgang_limit(0.5, 1.0 / 3.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(bussgang_limit(0.5, 0.0).is_err());
    }

    #[test]
    fn prop2_values() {
        assert_eq!(prop2_exact(1).unwrap(), 1.0);
        assert!((prop2_exact(256).unwrap() - 0.011627906976744186).abs() < 1e-15);
        assert!(prop2_exact(10_000_000).unwrap() < 1e-6);
        assert!(prop2_exact(0).is_err());
    }

    #[test]
    fn plackett_values() {
        assert!((plackett_flip_energy(rho(0.0)) - 0.25).abs() < 1e-15);
        assert!(plackett_flip_energy(rho(1.0)).abs() < 1e-15);
        assert!((plackett_flip_energy(rho(-1.0)) - 0.5).abs() < 1e-15);
        // ρ = 1 − 2p at p = 0.01 vs the leading term 8p^{3/2}/(3π).
        let exact = plackett_flip_energy(rho(0.98));
        assert!((exact - 0.000846275319008355).abs() < 1e-15);
        let leading = 8.0 * 0.01_f64.powf(1.5) / (3.0 * PI);
        assert!((exact / leading - 1.0).abs() < 0.03);
    }

    #[test]
    fn relu_product_values() {
        assert!((relu_product(rho(0.0), 1.0, 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((relu_product(rho(1.0), 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ternary_relu_overlap() - 0.3293024281132891).abs() < 1e-12);
        assert!(relu_product(rho(0.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn beta_smooth_values() {
        assert!(beta_smooth(rho(1.0)).abs() < 1e-15);
        // ρ = 1 − 2p, p = 0.01 vs the expansion 2p − 8p^{3/2}/π.
        let v = beta_smooth(rho(0.98));
        assert!((v - 0.017457771431390712).abs() < 1e-15);
        let expansion = 2.0 * 0.01 - 8.0 * 0.01_f64.powf(1.5) / PI;
        assert!((v / expansion - 1.0).abs() < 0.02);
    }

    #[test]
    fn f_rho_key_values() {
        assert!(f_rho(rho(1.0)).abs() < 1e-15);
        assert!((f_rho(rho(0.0)) - (1.0 - 1.0 / PI)).abs() < 1e-15);
        // The difference ReLU(X) − ReLU(−X) is X itself, so f(−1) = E[X²] = 1.
        assert!((f_rho(rho(-1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn c_theory_values() {
        assert!((c_theory(0.0).unwrap() - PI / (PI - 2.0)).abs() < 1e-15);
        assert!((c_theory(0.01).unwrap() - 2.6087910759489166).abs() < 1e-12);
        assert!((c_theory(0.02).unwrap() - 2.5350287769176547).abs() < 1e-12);
        assert!((c_theory(0.05).unwrap() - 2.366236095919181).abs() < 1e-12);
        assert!((c_theory(0.10).unwrap() - 2.1443376157974385).abs() < 1e-12);
        assert!(c_theory(0.5).is_err());
        assert!(c_theory(-0.1).is_err());
    }

    #[test]
    fn radial_fraction_values() {
        let s = radial_fraction_theory(RadialKind::Sign, 0.01).unwrap();
        assert!((s - 0.009575586818421612).abs() < 1e-15);
        assert_eq!(
            radial_fraction_theory(RadialKind::MagConstDelta, 0.01).unwrap(),
            BUSSGANG
        );
        let pre = radial_fraction_theory(RadialKind::TernaryPre, 0.0).unwrap();
        assert!((pre - 0.3633802276324186).abs() < 1e-15);
        let post = radial_fraction_theory(RadialKind::TernaryPost, 0.0).unwrap();
        assert!((post - 0.3648934671102753).abs() < 1e-12);
        // Near-equality of pre- and post-ReLU ternary fractions (≈0.4%).
        assert!((post - pre).abs() / pre < 0.005);
    }

    #[test]
    fn gate_flip_values() {
        assert!((gate_flip_prob_alpha(1.0 / 2.0_f64.sqrt()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(gate_flip_prob_alpha(0.0).unwrap(), 0.0);
        let r = rho(BUSSGANG.sqrt());
        assert!((gate_flip_prob_rho(r) - 0.20595241678357126).abs() < 1e-12);
        // Agreement of the two parameterizations under ρ = 1 − 2α².
        for &a in &[0.05, 0.1, 0.3, 0.6, 0.9] {
            let via_alpha = gate_flip_prob_alpha(a).unwrap();
            let via_rho = gate_flip_prob_rho(rho(1.0 - 2.0 * a * a));
            assert!((via_alpha - via_rho).abs() < 1e-12);
        }
    }

    #[test]
    fn outlier_leverage_values() {
        let ex = |a: f64| outlier_leverage(a, 2048, LeverageForm::Exact).unwrap();
        let ld = |a: f64| outlier_leverage(a, 2048, LeverageForm::Leading).unwrap();
        assert!((ex(0.1) - 19.795587725982273).abs() < 1e-9);
        assert!((ex(0.3) - 162.1548657133401).abs() < 1e-9);
        assert!((ex(0.5) - 404.17694795626863).abs() < 1e-9);
        // Exact and leading forms agree within 1% for small α.
        for &a in &[0.05, 0.1] {
            assert!((ex(a) - ld(a)).abs() / ex(a) < 0.01);
        }
        // Crossover at α = 1/√n.
        let a_c = 1.0 / 2048.0_f64.sqrt();
        assert!((ex(a_c) - 1.0).abs() < 0.05);
        assert!(outlier_leverage(0.0, 2048, LeverageForm::Exact).is_err());
        assert!(outlier_leverage(0.1, 1, LeverageForm::Exact).is_err());
    }

    #[test]
    fn column_group_values() {
        let cg = |g: f64| column_group_leverage(0.05, g).unwrap();
        assert!((cg(0.1) - 3.376289342370128).abs() < 1e-9);
        assert!((cg(0.3) - 10.120128265125212).abs() < 1e-9);
        assert!((cg(0.5) - 19.0).abs() < 1e-9);
        assert!((cg(0.9) - 106.9221157883882).abs() < 1e-9);
        assert!(column_group_leverage(0.0, 0.5).is_err());
        assert!(column_group_leverage(0.05, 1.0).is_err());
    }

    #[test]
    fn dettmers_values() {
        assert!((dettmers_entry_leverage(50.0, 0.7).unwrap() - 750.0).abs() < 1e-9);
        assert_eq!(dettmers_entry_leverage(3.0, 0.0).unwrap(), 9.0);
        assert!((dettmers_entry_leverage(1.0, 0.25).unwrap() - 0.75).abs() < 1e-15);
        assert!(dettmers_entry_leverage(0.0, 0.5).is_err());
    }

    #[test]
    fn equal_norm_and_ternary_limits() {
        let p = equal_norm_flip_rate();
        assert!((p - 0.09084505690810465).abs() < 1e-15);
        assert!((4.0 * p + BUSSGANG - 1.0).abs() < 1e-15);
        assert!((c_theory(p).unwrap() - 2.18).abs() < 0.01);
        let lim = ternary_rmsnorm_error_limit();
        assert!((lim - 0.4042308783942692).abs() < 1e-15);
        assert!((lim / 2.0 - (1.0 - BUSSGANG.sqrt())).abs() < 1e-15);
    }
}
