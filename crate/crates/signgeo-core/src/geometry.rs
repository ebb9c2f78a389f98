//! Vector geometry around RMSNorm: normalization, radial/transverse
//! decomposition of perturbations, angle metrics, the per-row scaling bound,
//! and the RMSNorm Fréchet derivative with its second-order remainder bound.
//!
//! All arithmetic is f64; theory comparisons downstream need ~6 significant
//! digits and f32 would not survive the cancellations in `radial_split`.

use alloc::vec::Vec;

use crate::error::CoreError;
use crate::fmath;

/// Dot product. Callers guarantee equal lengths.
#[inline]
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Euclidean norm.
#[inline]
pub fn norm(v: &[f64]) -> f64 {
    fmath::sqrt(norm_sq(v))
}

/// Entry-wise ReLU.
pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), CoreError> {
    if u.len() != v.len() {
        return Err(CoreError::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

/// RMS normalization: `y ↦ √m · y/‖y‖` where `m = dim(y)`.
///
/// Preserves direction, discards norm; output norm is exactly `√m` up to
/// rounding. Zero input is a hard error.
pub fn rmsnorm(y: &[f64]) -> Result<Vec<f64>, CoreError> {
    let n = norm(y);
    if n == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let scale = fmath::sqrt(y.len() as f64) / n;
    Ok(y.iter().map(|&x| x * scale).collect())
}

/// In-place variant of [`rmsnorm`] for hot loops.
pub fn rmsnorm_in_place(y: &mut [f64]) -> Result<(), CoreError> {
    let n = norm(y);
    if n == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let scale = fmath::sqrt(y.len() as f64) / n;
    for x in y {
        *x *= scale;
    }
    Ok(())
}

/// Energy decomposition of a perturbation `Δy` relative to the direction of
/// the unperturbed output `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSplit {
    /// `(Δy·ŷ)²` — the energy RMSNorm absorbs at first order.
    pub radial_energy: f64,
    /// `‖P_{y⊥}Δy‖²` — the energy that survives normalization.
    pub transverse_energy: f64,
    /// `radial_energy / ‖Δy‖²`, in [0, 1].
    pub radial_fraction: f64,
}

/// Splits `‖Δy‖²` into radial and transverse parts with respect to `y`.
pub fn radial_split(delta_y: &[f64], y: &[f64]) -> Result<RadialSplit, CoreError> {
    check_dims(delta_y, y)?;
    let ny = norm(y);
    let total = norm_sq(delta_y);
    if ny == 0.0 || total == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let proj = dot(delta_y, y) / ny;
    let radial = proj * proj;
    // Computed by subtraction; clamp the rounding residue at zero.
    let transverse = (total - radial).max(0.0);
    Ok(RadialSplit {
        radial_energy: radial,
        transverse_energy: transverse,
        radial_fraction: (radial / total).clamp(0.0, 1.0),
    })
}

/// Projects `h` onto the orthogonal complement of `y`: `h − (ŷ·h)ŷ`.
///
/// This is the transverse projector `P_{y⊥} = I − ŷŷᵀ`; it is idempotent and
/// its output is orthogonal to `y`.
pub fn transverse_project(h: &[f64], y: &[f64]) -> Result<Vec<f64>, CoreError> {
    check_dims(h, y)?;
    let ny_sq = norm_sq(y);
    if ny_sq == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let c = dot(h, y) / ny_sq;
    Ok(h.iter().zip(y).map(|(&hi, &yi)| hi - c * yi).collect())
}

/// Transverse energy `‖P_{y⊥}h‖²` without materializing the projection.
pub fn transverse_energy(h: &[f64], y: &[f64]) -> Result<f64, CoreError> {
    Ok(radial_split(h, y)?.transverse_energy)
}

/// Exact direction error and its coefficient-of-variation bound for replacing
/// per-coordinate scales `d` by one common scale under RMS normalization.
///
/// With weights `p_i = y_i²/‖y‖²`, mean `d̄ = Σ pᵢdᵢ` and r.m.s.
/// `r = √(Σ pᵢdᵢ²)`, returns
/// `(exact, bound) = (√(2(1 − d̄/r)), √(r² − d̄²)/d̄)`.
/// `exact ≤ bound` always; equality of all active `dᵢ` gives `(0, 0)`.
pub fn rmsnorm_scaling_error(y: &[f64], d: &[f64]) -> Result<(f64, f64), CoreError> {
    check_dims(y, d)?;
    if let Some(bad) = d.iter().find(|&&di| !(di >= 0.0)) {
        return Err(CoreError::OutOfRange {
            what: "scale entry",
            value: *bad,
            expected: ">= 0",
        });
    }
    let ny_sq = norm_sq(y);
    if ny_sq == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let mut mean = 0.0; // E_p[d]
    let mut mean_sq = 0.0; // E_p[d²]
    for (&yi, &di) in y.iter().zip(d) {
        let p = yi * yi / ny_sq;
        mean += p * di;
        mean_sq += p * di * di;
    }
    if mean_sq == 0.0 {
        // Dy = 0: every coordinate with weight has zero scale.
        return Err(CoreError::ZeroVector);
    }
    let r = fmath::sqrt(mean_sq);
    let exact = fmath::sqrt((2.0 * (1.0 - mean / r)).max(0.0));
    let var = (mean_sq - mean * mean).max(0.0);
    let bound = fmath::sqrt(var) / mean;
    Ok((exact, bound))
}

/// Fréchet derivative of RMSNorm at `y` applied to direction `h`:
/// `(√m/‖y‖)·P_{y⊥}h`.
///
/// Radial directions are annihilated; transverse ones pass with gain
/// `√m/‖y‖`.
pub fn frechet_apply(y: &[f64], h: &[f64]) -> Result<Vec<f64>, CoreError> {
    let ny = norm(y);
    if ny == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let mut out = transverse_project(h, y)?;
    let gain = fmath::sqrt(y.len() as f64) / ny;
    for x in &mut out {
        *x *= gain;
    }
    Ok(out)
}

/// Dimension-independent bound `3η²/(1−η)²` on the normalized second-order
/// remainder of the RMSNorm linearization, valid for `‖Δy‖ = η‖y‖`, η ∈ (0,1).
pub fn second_order_remainder_bound(eta: f64) -> Result<f64, CoreError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CoreError::OutOfRange {
            what: "eta",
            value: eta,
            expected: "in (0, 1)",
        });
    }
    let r = eta / (1.0 - eta);
    Ok(3.0 * r * r)
}

/// Squared cosine `(u·v)²/(‖u‖²‖v‖²)` ∈ [0, 1].
///
/// The squared form is canonical here (it is what the theory predicts);
/// [`chord2`] uses the signed cosine internally.
pub fn cos2(u: &[f64], v: &[f64]) -> Result<f64, CoreError> {
    check_dims(u, v)?;
    let nu = norm_sq(u);
    let nv = norm_sq(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let d = dot(u, v);
    Ok((d * d / (nu * nv)).clamp(0.0, 1.0))
}

/// Squared chord length between directions: `2(1 − cosθ)` ∈ [0, 4].
pub fn chord2(u: &[f64], v: &[f64]) -> Result<f64, CoreError> {
    check_dims(u, v)?;
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let c = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(2.0 * (1.0 - c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const SQRT_2: f64 = core::f64::consts::SQRT_2;

    #[test]
    fn rmsnorm_direct() {
        let out = rmsnorm(&[3.0, 4.0]).unwrap();
        assert!((out[0] - 3.0 * SQRT_2 / 5.0).abs() < 1e-15);
        assert!((out[1] - 4.0 * SQRT_2 / 5.0).abs() < 1e-15);
        assert!((norm(&out) - SQRT_2).abs() < 1e-14);

        let axis = rmsnorm(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(axis, vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rmsnorm_scale_invariant() {
        let y = [0.3, -1.2, 0.7];
        let a = rmsnorm(&y).unwrap();
        let scaled: Vec<f64> = y.iter().map(|x| x * 41.5).collect();
        let b = rmsnorm(&scaled).unwrap();
        for (x, z) in a.iter().zip(&b) {
            assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn rmsnorm_zero_is_error() {
        assert_eq!(rmsnorm(&[0.0, 0.0]), Err(CoreError::ZeroVector));
    }

    #[test]
    fn radial_split_cases() {
        let y = [1.0, 0.0];
        // Pure radial.
        let s = radial_split(&[2.0, 0.0], &y).unwrap();
        assert!((s.radial_fraction - 1.0).abs() < 1e-15);
        // Pure transverse.
        let s = radial_split(&[0.0, 5.0], &y).unwrap();
        assert_eq!(s.radial_fraction, 0.0);
        // 45°.
        let s = radial_split(&[1.0, 1.0], &y).unwrap();
        assert!((s.radial_energy - 1.0).abs() < 1e-15);
        assert!((s.transverse_energy - 1.0).abs() < 1e-15);
        assert!((s.radial_fraction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transverse_project_cases() {
        let y = [1.0, 0.0];
        assert_eq!(transverse_project(&[2.0, 3.0], &y).unwrap(), vec![0.0, 3.0]);
        // h = y annihilated.
        let z = transverse_project(&y, &y).unwrap();
        assert!(norm(&z) < 1e-15);
        // Mismatched dims rejected.
        assert!(matches!(
            transverse_project(&[1.0], &y),
            Err(CoreError::DimMismatch { .. })
        ));
    }

    #[test]
    fn scaling_error_uniform_is_zero() {
        let (exact, bound) = rmsnorm_scaling_error(&[0.4, -2.0, 1.0], &[1.7, 1.7, 1.7]).unwrap();
        // sqrt amplifies the ~1e-16 rounding residue to ~1e-8.
        assert!(exact < 1e-7);
        assert!(bound < 1e-7);
    }

    #[test]
    fn scaling_error_direct_case() {
        let (exact, bound) = rmsnorm_scaling_error(&[1.0, 1.0], &[1.0, 3.0]).unwrap();
        // p = (1/2, 1/2): mean = 2, r = √5, CV = 1/2.
        assert!((bound - 0.5).abs() < 1e-12);
        let expected = (2.0 * (1.0 - 2.0 / 5.0_f64.sqrt())).sqrt();
        assert!((exact - expected).abs() < 1e-12);
        assert!(exact <= bound);
    }

    #[test]
    fn remainder_bound_values() {
        assert!((second_order_remainder_bound(0.05).unwrap() - 0.008310249307479225).abs() < 1e-15);
        let b10 = second_order_remainder_bound(0.10).unwrap();
        assert!((b10 - 3.0 / 81.0).abs() < 1e-15);
        assert!(second_order_remainder_bound(0.0).is_err());
        assert!(second_order_remainder_bound(1.0).is_err());
    }

    #[test]
    fn angle_metrics() {
        let u = [1.0, 2.0];
        assert!((cos2(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert!((chord2(&u, &u).unwrap()).abs() < 1e-15);
        let v = [-2.0, 1.0];
        assert_eq!(cos2(&u, &v).unwrap(), 0.0);
        assert!((chord2(&u, &v).unwrap() - 2.0).abs() < 1e-15);
        let w = [-1.0, -2.0];
        assert!((cos2(&u, &w).unwrap() - 1.0).abs() < 1e-15);
        assert!((chord2(&u, &w).unwrap() - 4.0).abs() < 1e-15);
    }
}
