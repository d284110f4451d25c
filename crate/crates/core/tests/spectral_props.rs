use proptest::prelude::*;

use rpencil::algebra::{match_points, poly_roots, roots_of_unity_nodes};
use rpencil::sample;
use rpencil::spectral::{char_curve, char_curve_exact, curve_from_casimir_sweep, genus};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn curve_is_conjugation_invariant(seed in any::<u64>(), r in 1usize..4, n in 0usize..4) {
        let mut g = sample::rng(seed);
        let p = sample::phase_point(&mut g, r, n);
        let m = sample::matrix(&mut g, r);
        prop_assume!(m.determinant().norm() > 0.05);
        let q = p.conjugated(&m).unwrap();
        let (a, b) = (char_curve(&p), char_curve(&q));
        prop_assert!(a.max_difference(&b) <= 1e-9 * a.max_abs().max(1.0));
    }

    #[test]
    fn degree_profile(seed in any::<u64>(), r in 1usize..4, n in 0usize..4) {
        let p = sample::phase_point(&mut sample::rng(seed), r, n);
        let c = char_curve_exact(&p);
        for (&(j, k), v) in c.coeffs() {
            prop_assert!(j <= r);
            prop_assert!(k <= (r - j) * n || v.norm() == 0.0, "z^{} λ^{}", j, k);
        }
        prop_assert_eq!(c.coeff(r, 0).re, if r % 2 == 0 { 1.0 } else { -1.0 });
    }

    #[test]
    fn interpolated_and_exact_curves_agree(seed in any::<u64>(), r in 1usize..4, n in 0usize..5) {
        let p = sample::phase_point(&mut sample::rng(seed), r, n);
        let exact = char_curve_exact(&p);
        prop_assert!(char_curve(&p).max_difference(&exact) <= 1e-10 * exact.max_abs().max(1.0));
    }

    #[test]
    fn branch_points_are_discriminant_zeros(seed in any::<u64>(), n in 1usize..5) {
        let p = sample::phase_point(&mut sample::rng(seed), 2, n);
        let c = char_curve_exact(&p);
        let (c1, c0) = (c.z_coefficient(1), c.z_coefficient(0));
        let disc = &(&c1 * &c1) - &c0.scale(4.0.into());
        let want = poly_roots(&disc, 1e-12).unwrap();
        let got = c.branch_points(1e-12).unwrap();
        prop_assert!(match_points(&got, &want).unwrap() < 1e-7);
    }

    #[test]
    fn casimir_sweep_recovers_curve(seed in any::<u64>(), r in 1usize..4, n in 1usize..4) {
        let p = sample::phase_point(&mut sample::rng(seed), r, n);
        let pts = roots_of_unity_nodes(r * n + 1, 0.7, 0.2);
        let sweep = curve_from_casimir_sweep(&p, &pts, 1e-8).unwrap();
        let exact = char_curve_exact(&p);
        prop_assert!(sweep.max_difference(&exact) <= 1e-8 * exact.max_abs().max(1.0));
    }
}

#[test]
fn too_few_sweep_points_are_rejected() {
    let p = sample::phase_point(&mut sample::rng(1), 2, 2);
    assert!(curve_from_casimir_sweep(&p, &roots_of_unity_nodes(4, 0.7, 0.2), 1e-8).is_err());
}

#[test]
fn genus_is_not_clamped() {
    assert_eq!(genus(2, 1), -2);
    assert_eq!(genus(1, 5), 0);
}
