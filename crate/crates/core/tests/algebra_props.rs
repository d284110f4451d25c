use num_complex::Complex64;
use proptest::prelude::*;

use rpencil::algebra::{
    match_points, poly_from_samples, poly_roots, residue_infinity, roots_of_unity_nodes, LaurentPoly, Poly,
};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn laurent() -> impl Strategy<Value = LaurentPoly> {
    (-4i32..2, prop::collection::vec(complex(), 1..7)).prop_map(|(lo, c)| LaurentPoly::new(lo, c))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #[test]
    fn residue_is_bilinear_and_symmetric(f in laurent(), g in laurent(), h in laurent(), s in complex()) {
        let fg = residue_infinity(&(&f * &g));
        prop_assert!(close(fg, residue_infinity(&(&g * &f)), 1e-14));
        let lhs = residue_infinity(&(&(&f + &h.scale(s)) * &g));
        let rhs = fg + s * residue_infinity(&(&h * &g));
        prop_assert!(close(lhs, rhs, 1e-13));
    }

    #[test]
    fn truncated_products_associate_inside_the_window(f in laurent(), g in laurent(), h in laurent()) {
        let (lo, hi) = (-3, 3);
        let left = (&(&f * &g) * &h).truncate(lo, hi);
        let right = (&f * &(&g * &h)).truncate(lo, hi);
        for e in lo..=hi {
            prop_assert!(close(left.coeff(e), right.coeff(e), 1e-13));
        }
    }

    #[test]
    fn roots_invert_expansion(roots in prop::collection::vec(complex().prop_map(|z| z * 4.0), 1..10)) {
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[i + 1..] {
                prop_assume!((a - b).norm() > 1e-3);
            }
        }
        let found = poly_roots(&Poly::from_roots(&roots), 1e-14).unwrap();
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(match_points(&found, &roots).unwrap() < 1e-8 * scale);
    }

    #[test]
    fn interpolation_inverts_sampling(coeffs in prop::collection::vec(complex(), 1..31)) {
        let p = Poly::new(coeffs);
        let degree = p.coeffs().len().saturating_sub(1);
        let nodes = roots_of_unity_nodes(degree + 1, 1.0, 0.1);
        let samples: Vec<_> = nodes.iter().map(|&x| (x, p.eval(x))).collect();
        let q = poly_from_samples(&samples, degree, 1e-9).unwrap();
        let scale = p.coefficient_scale().max(f64::MIN_POSITIVE);
        for k in 0..=degree {
            prop_assert!((q.coeff(k) - p.coeff(k)).norm() <= 1e-9 * scale);
        }
    }
}
