//! Complex scalar and matrix polynomial arithmetic, Laurent polynomials,
//! residues, interpolation and root finding.

mod interp;
mod laurent;
mod matpoly;
mod poly;
mod roots;

pub use interp::{interpolate_fn, poly_from_samples, roots_of_unity_nodes};
pub use laurent::{expand_at_infinity, residue_infinity, LaurentPoly};
pub use matpoly::{matpoly_eval, max_abs, unit_matrix, CMat, LaurentMat, MatPoly};
pub use num_complex::Complex64;
pub use poly::Poly;
pub use roots::{backward_error, poly_roots};


/// Library-wide default relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Determinant of a small dense complex matrix (LU with partial pivoting).
pub fn det(m: &CMat) -> Complex64 {
    if m.nrows() == 0 {
        return c64(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Characteristic coefficients of a numeric matrix: returns `c` with
/// `det(M − zI) = Σ_j c[j] z^j`, via Faddeev–LeVerrier.
pub fn char_poly_coeffs(m: &CMat) -> Vec<Complex64> {
    let r = m.nrows();
    // det(zI − M) = Σ_k d_k z^{r−k}
    let mut d = vec![c64(1.0, 0.0)];
    let mut b = CMat::identity(r, r);
    for k in 1..=r {
        let mb = m * &b;
        let dk = -mb.trace() / k as f64;
        d.push(dk);
        b = mb + CMat::identity(r, r) * dk;
    }
    let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    (0..=r).map(|j| d[r - j] * sign).collect()
}

/// Optimal assignment distance between two equal-size point sets: the
/// largest pairwise distance under the best matching. Returns `None` when
/// the sizes differ. Exhaustive for up to 8 points, greedy beyond.
pub fn match_points(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    Some(match_by(a.len(), |i, j| (a[i] - b[j]).norm()))
}

/// Bottleneck assignment over an `n×n` distance function: the smallest
/// achievable largest distance. Exhaustive for `n ≤ 8`, greedy beyond.
pub fn match_by(n: usize, dist: impl Fn(usize, usize) -> f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let worst = p.iter().enumerate().map(|(i, &j)| dist(i, j)).fold(0.0, f64::max);
            best = best.min(worst);
        });
        return best;
    }
    let mut used = vec![false; n];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let (j, d) = (0..n)
            .filter(|j| !used[*j])
            .map(|j| (j, dist(i, j)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_diagonal() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(2.0, 0.0), c64(-1.0, 1.0)]));
        // (2 − z)(−1 + i − z) = z² − (1 + i) z + 2(−1 + i)
        let c = char_poly_coeffs(&m);
        assert!((c[2] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((c[1] - c64(-1.0, -1.0)).norm() < 1e-15);
        assert!((c[0] - c64(-2.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn char_poly_sign_for_odd_size() {
        let m = CMat::identity(3, 3) * c64(2.0, 0.0);
        // (2 − z)^3 = −z³ + 6z² − 12z + 8
        let c = char_poly_coeffs(&m);
        let want = [8.0, -12.0, 6.0, -1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((c[k] - c64(*w, 0.0)).norm() < 1e-13);
        }
    }
}
