//! Property tests for the geometric primitives and closed-form values.

use proptest::prelude::*;

use signgeo_core::geometry::{
    chord2, cos2, dot, frechet_apply, norm, norm_sq, radial_split, rmsnorm,
    rmsnorm_scaling_error, second_order_remainder_bound, transverse_project,
};
use signgeo_core::perturb::{
    apply_perturbation, gaussian_matrix_seeded, sgn, stream_rng, ternary_quantize,
    PerturbationSpec, Seed, TernaryMode,
};
use signgeo_core::theory::{
    self, plackett_flip_energy, CorrelationRho,
};

fn vec_strategy(len: core::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, len)
        .prop_filter("nonzero", |v| norm_sq(v) > 1e-6)
}

fn rho_strategy() -> impl Strategy<Value = CorrelationRho> {
    (-1.0f64..=1.0).prop_map(|r| CorrelationRho::new(r).unwrap())
}

proptest! {
    #[test]
    fn rmsnorm_fixes_norm_and_direction(y in vec_strategy(1..64)) {
        let r = rmsnorm(&y).unwrap();
        let m = y.len() as f64;
        prop_assert!((norm_sq(&r) - m).abs() < 1e-9 * m);
        prop_assert!((cos2(&y, &r).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transverse_projector_is_an_orthogonal_idempotent(
        (h, y) in (1usize..48).prop_flat_map(|n| (vec_strategy(n..n + 1), vec_strategy(n..n + 1)))
    ) {
        let p1 = transverse_project(&h, &y).unwrap();
        let p2 = transverse_project(&p1, &y).unwrap();
        let scale = norm(&h).max(1.0);
        prop_assert!(dot(&p1, &y).abs() < 1e-9 * scale * norm(&y));
        for (a, b) in p1.iter().zip(&p2) {
            prop_assert!((a - b).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn radial_split_is_an_energy_partition(
        (dy, y) in (1usize..48).prop_flat_map(|n| (vec_strategy(n..n + 1), vec_strategy(n..n + 1)))
    ) {
        let s = radial_split(&dy, &y).unwrap();
        let total = norm_sq(&dy);
        prop_assert!((s.radial_energy + s.transverse_energy - total).abs() < 1e-9 * total);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s.radial_fraction));
    }

    #[test]
    fn frechet_image_is_transverse(
        (h, y) in (1usize..48).prop_flat_map(|n| (vec_strategy(n..n + 1), vec_strategy(n..n + 1)))
    ) {
        let img = frechet_apply(&y, &h).unwrap();
        prop_assert!(dot(&img, &y).abs() < 1e-8 * norm(&h).max(1.0) * norm(&y));
    }

    #[test]
    fn scaling_error_never_exceeds_its_bound(y in vec_strategy(2..32)) {
        // Positive magnitude profile paired with the squared-coordinate weights.
        let d: Vec<f64> = y.iter().map(|v| 1.0 + v.abs() / 50.0).collect();
        let (exact, bound) = rmsnorm_scaling_error(&y, &d).unwrap();
        prop_assert!(exact <= bound + 1e-12);
        prop_assert!(exact >= 0.0);
    }

    #[test]
    fn chord2_ignores_positive_scaling(
        (u, v, a, b) in (1usize..32).prop_flat_map(|n| (
            vec_strategy(n..n + 1),
            vec_strategy(n..n + 1),
            0.01f64..100.0,
            0.01f64..100.0,
        ))
    ) {
        let base = chord2(&u, &v).unwrap();
        let us: Vec<f64> = u.iter().map(|x| a * x).collect();
        let vs: Vec<f64> = v.iter().map(|x| b * x).collect();
        prop_assert!((chord2(&us, &vs).unwrap() - base).abs() < 1e-9);
        prop_assert!((0.0..=4.0 + 1e-12).contains(&base));
    }

    #[test]
    fn remainder_bound_is_nonnegative_and_increasing(eta in 1e-6f64..0.98) {
        let b = second_order_remainder_bound(eta).unwrap();
        let b2 = second_order_remainder_bound((eta + 0.01).min(0.985)).unwrap();
        prop_assert!(b >= 0.0);
        prop_assert!(b2 >= b);
    }

    #[test]
    fn orthant_energy_and_difference_energy_stay_in_range(rho in rho_strategy()) {
        let beta = plackett_flip_energy(rho);
        prop_assert!((-1e-12..=0.5 + 1e-12).contains(&beta));
        let f = theory::f_rho(rho);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        // Monotone decreasing in ρ.
        let r2 = CorrelationRho::new((rho.get() + 0.01).min(1.0)).unwrap();
        prop_assert!(theory::f_rho(r2) <= f + 1e-12);
        prop_assert!(plackett_flip_energy(r2) <= beta + 1e-12);
    }

    #[test]
    fn transverse_ratio_decreases_with_flip_rate(p in 1e-6f64..0.48) {
        let c = theory::c_theory(p).unwrap();
        let c2 = theory::c_theory((p + 0.005).min(0.4999)).unwrap();
        prop_assert!(c > 0.0);
        prop_assert!(c2 <= c + 1e-12);
        prop_assert!(c <= core::f64::consts::PI / (core::f64::consts::PI - 2.0) + 1e-12);
    }

    #[test]
    fn gate_flip_rate_increases_with_amplitude(alpha in 0.0f64..0.99) {
        let g = theory::gate_flip_prob_alpha(alpha).unwrap();
        let g2 = theory::gate_flip_prob_alpha(alpha + 0.01).unwrap();
        prop_assert!((-1e-12..=1.0).contains(&g));
        prop_assert!(g2 >= g);
    }

    #[test]
    fn random_sign_alignment_decays(n in 1u64..4096) {
        let a = theory::prop2_exact(n).unwrap();
        let b = theory::prop2_exact(n + 1).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn sign_flips_preserve_magnitudes(seed in 0u64..1000, p in 0.0f64..0.49) {
        let w = gaussian_matrix_seeded(8, 16, Seed(seed)).unwrap();
        let mut rng = stream_rng(Seed(seed), 7, 0);
        let wp = apply_perturbation(&w, &PerturbationSpec::SignFlip { p }, &mut rng).unwrap();
        for (a, b) in w.as_slice().iter().zip(wp.as_slice()) {
            prop_assert!((a.abs() - b.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn magnitude_noise_preserves_signs(seed in 0u64..1000, p in 1e-4f64..0.49) {
        let w = gaussian_matrix_seeded(8, 16, Seed(seed)).unwrap();
        let mut rng = stream_rng(Seed(seed), 8, 0);
        let wp =
            apply_perturbation(&w, &PerturbationSpec::MagnitudeConstDelta { p }, &mut rng).unwrap();
        // δ = 2√(p/n) stays below the smallest |wᵢⱼ| often enough that signs
        // cannot flip: the perturbation adds δ·sign(w), pushing away from 0.
        for (a, b) in w.as_slice().iter().zip(wp.as_slice()) {
            prop_assert!(sgn(*a) == sgn(*b) || *a == 0.0);
            prop_assert!(b.abs() >= a.abs());
        }
    }

    #[test]
    fn ternary_rows_use_one_scale(seed in 0u64..1000) {
        let w = gaussian_matrix_seeded(6, 24, Seed(seed)).unwrap();
        let pair = ternary_quantize(&w, TernaryMode::PerRow).unwrap();
        for i in 0..6 {
            let s = pair.row_scales[i];
            prop_assert!(s > 0.0);
            for &q in pair.quantized.row(i) {
                prop_assert!(q == 0.0 || (q.abs() - s).abs() < 1e-15);
            }
        }
    }
}
