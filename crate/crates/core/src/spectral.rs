//! Spectral curves `P(λ, z) = det(φ(λ) − zI)`, their coefficients as
//! Hamiltonians, analytic differentials through the adjugate, involutivity
//! and Casimir checks.
//!
//! Coefficients are keyed by `(j, k)`, the coefficient of `z^j λ^k`. The
//! `z^j` coefficient has λ-degree at most `(r − j)n`; the `z^r` coefficient
//! is the constant `(−1)^r`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    char_poly_coeffs, poly_from_samples, poly_roots, residue_infinity, roots_of_unity_nodes, LaurentPoly, MatPoly,
    Poly,
};
use crate::error::{Error, Result};
use crate::phasespace::{pairing, poisson_tensor_apply, BracketPencil, CoordinateFunction, CotangentElement, PhasePoint};

/// `−r² + (r−1)rn/2 + 1`, returned as is (negative for small cases).
pub fn genus(r: usize, n: usize) -> i64 {
    let (r, n) = (r as i64, n as i64);
    -r * r + (r - 1) * r * n / 2 + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::CurveJson", try_from = "crate::io::CurveJson")]
pub struct SpectralCurve {
    r: usize,
    n: usize,
    coeff: BTreeMap<(usize, usize), Complex64>,
    genus: i64,
}

impl SpectralCurve {
    /// Keys outside the degree profile are rejected.
    pub fn new(r: usize, n: usize, coeff: BTreeMap<(usize, usize), Complex64>) -> Result<Self> {
        for &(j, k) in coeff.keys() {
            if j > r || k > (r - j) * n {
                return Err(Error::InvalidInput(format!("coefficient z^{j} λ^{k} outside the degree profile")));
            }
        }
        Ok(SpectralCurve { r, n, coeff, genus: genus(r, n) })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn genus(&self) -> i64 {
        self.genus
    }

    pub fn coeffs(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.coeff
    }

    /// Coefficient of `z^j λ^k`.
    pub fn coeff(&self, j: usize, k: usize) -> Complex64 {
        self.coeff.get(&(j, k)).copied().unwrap_or_default()
    }

    /// The `z^j` coefficient as a polynomial in λ.
    pub fn z_coefficient(&self, j: usize) -> Poly {
        let top = if j > self.r { 0 } else { (self.r - j) * self.n };
        Poly::new((0..=top).map(|k| self.coeff(j, k)).collect())
    }

    /// `P(λ₀, ·)` as a polynomial in z.
    pub fn z_poly_at(&self, lambda: Complex64) -> Poly {
        Poly::new((0..=self.r).map(|j| self.z_coefficient(j).eval(lambda)).collect())
    }

    pub fn eval(&self, lambda: Complex64, z: Complex64) -> Complex64 {
        self.z_poly_at(lambda).eval(z)
    }

    /// `∂P/∂z`
    pub fn eval_dz(&self, lambda: Complex64, z: Complex64) -> Complex64 {
        self.z_poly_at(lambda).eval_with_derivative(z).1
    }

    /// `∂P/∂λ`
    pub fn eval_dlambda(&self, lambda: Complex64, z: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        let mut pw = Complex64::new(1.0, 0.0);
        for j in 0..=self.r {
            acc += self.z_coefficient(j).eval_with_derivative(lambda).1 * pw;
            pw *= z;
        }
        acc
    }

    /// The `r` sheets over λ₀.
    pub fn z_roots(&self, lambda: Complex64, tol: f64) -> Result<Vec<Complex64>> {
        poly_roots(&self.z_poly_at(lambda), tol)
    }

    /// `Σ_k |coefficient|·|λ|^k |z|^j`, the natural size of `P(λ, z)`.
    pub fn magnitude(&self, lambda: Complex64, z: Complex64) -> f64 {
        self.coeff
            .iter()
            .map(|(&(j, k), c)| c.norm() * lambda.norm().powi(k as i32) * z.norm().powi(j as i32))
            .sum()
    }

    /// Zeros of the z-discriminant, where sheets meet. The discriminant has
    /// λ-degree at most `r(r−1)n` and is interpolated from sheet differences.
    pub fn branch_points(&self, tol: f64) -> Result<Vec<Complex64>> {
        let degree = self.r * self.r.saturating_sub(1) * self.n;
        if degree == 0 {
            return Ok(Vec::new());
        }
        let mut samples = Vec::with_capacity(degree + 1);
        for x in roots_of_unity_nodes(degree + 1, 1.0, 0.0) {
            let z = self.z_roots(x, tol)?;
            let mut d = Complex64::new(1.0, 0.0);
            for i in 0..z.len() {
                for j in 0..i {
                    d *= (z[i] - z[j]).powi(2);
                }
            }
            samples.push((x, d));
        }
        let disc = poly_from_samples(&samples, degree, f64::INFINITY)?.trim_relative(1e-12);
        match disc.degree() {
            Some(d) if d > 0 => poly_roots(&disc, tol),
            _ => Ok(Vec::new()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeff.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficientwise difference over the union of keys.
    pub fn max_difference(&self, other: &SpectralCurve) -> f64 {
        self.coeff
            .keys()
            .chain(other.coeff.keys())
            .map(|&(j, k)| (self.coeff(j, k) - other.coeff(j, k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Curve of `φ` by evaluation at `rn + 1` unit roots of unity and
/// interpolation of each z-coefficient.
pub fn char_curve(at: &PhasePoint) -> SpectralCurve {
    let (r, n) = (at.r(), at.n());
    let count = r * n + 1;
    let nodes = roots_of_unity_nodes(count, 1.0, 0.0);
    let samples: Vec<Vec<Complex64>> = nodes.iter().map(|&x| char_poly_coeffs(&at.eval(x))).collect();
    let mut coeff = BTreeMap::new();
    for j in 0..r {
        let pts: Vec<_> = nodes.iter().zip(&samples).map(|(&x, s)| (x, s[j])).collect();
        let p = poly_from_samples(&pts, r * n, f64::INFINITY).expect("distinct nodes");
        for k in 0..=(r - j) * n {
            coeff.insert((j, k), p.coeff(k));
        }
    }
    let lead = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    coeff.insert((r, 0), Complex64::new(lead, 0.0));
    SpectralCurve { r, n, coeff, genus: genus(r, n) }
}

/// Matrix polynomials `A_j(λ)` with `adj(φ(λ) − zI) = Σ_j A_j(λ) z^j`, and
/// the char-poly coefficients, both by Faddeev–LeVerrier over `C[λ]`.
pub struct Adjugate {
    a: Vec<MatPoly>,
    p: Vec<Poly>,
}

impl Adjugate {
    pub fn new(at: &PhasePoint) -> Self {
        let r = at.r();
        let m = at.phi();
        // det(zI − M) = Σ_k c_k z^{r−k}, adj(zI − M) = Σ_{k<r} B_k z^{r−1−k}
        let mut b = vec![MatPoly::constant(crate::algebra::CMat::identity(r, r))];
        let mut c = vec![Poly::one()];
        for k in 1..=r {
            let mb = m.mul(&b[k - 1]);
            let ck = mb.trace().scale(Complex64::new(-1.0 / k as f64, 0.0));
            let next = mb.add(&MatPoly::scalar(r, &ck));
            c.push(ck);
            b.push(next);
        }
        let sign_adj = if r % 2 == 1 { 1.0 } else { -1.0 };
        let sign_det = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
        let a = (0..r).map(|j| b[r - 1 - j].scale(Complex64::new(sign_adj, 0.0))).collect();
        let p = (0..=r).map(|j| c[r - j].scale(Complex64::new(sign_det, 0.0))).collect();
        Adjugate { a, p }
    }

    /// `A_j(λ)`
    pub fn coefficient(&self, j: usize) -> &MatPoly {
        &self.a[j]
    }

    /// `z^j` coefficient of `det(φ − zI)` as an exact polynomial in λ.
    pub fn char_coefficient(&self, j: usize) -> &Poly {
        &self.p[j]
    }

    /// `dH_{(j,k)} = Σ_m A_{j,k−m} λ^{−m−1}`
    pub fn differential(&self, label: (usize, usize), n: usize) -> CotangentElement {
        let (j, k) = label;
        let r = self.a[0].r();
        let mut out = CotangentElement::zero(r, n);
        if j >= self.a.len() {
            return out;
        }
        for m in 0..=n.min(k) {
            let c = self.a[j].coeff(k - m);
            *out.slot_mut(m) = c;
        }
        out
    }
}

/// Curve from the exact polynomial Faddeev–LeVerrier recursion; an
/// independent route to [`char_curve`].
pub fn char_curve_exact(at: &PhasePoint) -> SpectralCurve {
    let (r, n) = (at.r(), at.n());
    let adj = Adjugate::new(at);
    let mut coeff = BTreeMap::new();
    for j in 0..=r {
        let p = adj.char_coefficient(j);
        for k in 0..=(r - j) * n {
            coeff.insert((j, k), p.coeff(k));
        }
    }
    SpectralCurve { r, n, coeff, genus: genus(r, n) }
}

/// Non-leading curve coefficients used as Hamiltonians.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantBasis {
    labels: Vec<(usize, usize)>,
}

impl InvariantBasis {
    /// Every `(j, k)` with `j < r`, `k ≤ (r − j)n`.
    pub fn full(r: usize, n: usize) -> Self {
        let labels = (0..r).flat_map(|j| (0..=(r - j) * n).map(move |k| (j, k))).collect();
        InvariantBasis { labels }
    }

    pub fn from_labels(labels: Vec<(usize, usize)>) -> Self {
        InvariantBasis { labels }
    }

    /// Labels whose Hamiltonian field is nonzero for `pencil` at `at`,
    /// relative to the largest field.
    pub fn dynamical(at: &PhasePoint, pencil: &BracketPencil, tol: f64) -> Result<Self> {
        let full = InvariantBasis::full(at.r(), at.n());
        let adj = Adjugate::new(at);
        let sizes = full
            .labels
            .iter()
            .map(|&l| Ok(poisson_tensor_apply(&adj.differential(l, at.n()), at, pencil)?.max_abs()))
            .collect::<Result<Vec<f64>>>()?;
        let top = sizes.iter().copied().fold(0.0, f64::max);
        let labels = full
            .labels
            .iter()
            .zip(&sizes)
            .filter(|(_, &s)| top > 0.0 && s > tol * top)
            .map(|(&l, _)| l)
            .collect();
        Ok(InvariantBasis { labels })
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<(usize, usize)> {
        self.labels.get(i).copied()
    }
}

/// `dH` for the curve coefficient `label = (j, k)`.
pub fn curve_coefficient_differential(label: (usize, usize), at: &PhasePoint) -> CotangentElement {
    Adjugate::new(at).differential(label, at.n())
}

/// Value of the curve coefficient `label = (j, k)`.
pub fn curve_coefficient_value(label: (usize, usize), at: &PhasePoint) -> Complex64 {
    Adjugate::new(at).char_coefficient(label.0).coeff(label.1)
}

/// `res(ω · tr φ^p)`
pub fn spectral_invariant(omega: &LaurentPoly, p: u32, at: &PhasePoint) -> Result<Complex64> {
    if p == 0 {
        return Err(Error::InvalidInput("power must be at least 1".into()));
    }
    let mut power = at.phi().clone();
    for _ in 1..p {
        power = power.mul(at.phi());
    }
    let tr = LaurentPoly::from_poly(&power.trace());
    Ok(residue_infinity(&(omega * &tr)))
}

/// `{H_a, H_b}` for every pair of labels, row `a`, column `b`.
pub fn commutation_matrix(at: &PhasePoint, pencil: &BracketPencil, basis: &InvariantBasis) -> Result<Vec<Vec<Complex64>>> {
    pencil.check_degree(at.n())?;
    let adj = Adjugate::new(at);
    let diffs: Vec<_> = basis.labels().iter().map(|&l| adj.differential(l, at.n())).collect();
    let fields = diffs.iter().map(|d| poisson_tensor_apply(d, at, pencil)).collect::<Result<Vec<_>>>()?;
    diffs
        .iter()
        .map(|da| fields.iter().map(|fb| pairing(da, fb)).collect())
        .collect()
}

/// `max |{H_a, H_b}|` over the basis.
pub fn commutation_table(at: &PhasePoint, pencil: &BracketPencil, basis: &InvariantBasis) -> Result<f64> {
    Ok(commutation_matrix(at, pencil, basis)?
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max))
}

/// Differentials of the `z^j` coefficients of `P(c₀, z)`, `j < r`.
pub fn casimir_differentials(c0: Complex64, at: &PhasePoint) -> Vec<CotangentElement> {
    let (r, n) = (at.r(), at.n());
    let adj = Adjugate::new(at);
    (0..r)
        .map(|j| {
            let mut acc = CotangentElement::zero(r, n);
            let mut pw = Complex64::new(1.0, 0.0);
            for k in 0..=(r - j) * n {
                acc = acc.axpy(pw, &adj.differential((j, k), n));
                pw *= c0;
            }
            acc
        })
        .collect()
}

/// Largest `|{C_j, f}|` over the z-coefficients `C_j` of `P(c₀, z)` and the
/// probes. Requires `b = 0` and `a(c₀) = 0` within `tol`.
pub fn casimir_defect(
    c0: Complex64,
    at: &PhasePoint,
    pencil: &BracketPencil,
    probes: &[CoordinateFunction],
    tol: f64,
) -> Result<f64> {
    match pencil.b() {
        Some(b) if b == Complex64::default() => {}
        Some(_) => return Err(Error::NonZeroB),
        None => return Err(Error::NonConstantB),
    }
    let a0 = pencil.a().eval(c0).norm();
    let scale = pencil.a().coeffs().iter().enumerate().map(|(k, c)| c.norm() * c0.norm().powi(k as i32)).sum::<f64>();
    if a0 > tol * scale.max(1.0) {
        return Err(Error::NotPencilZero(a0));
    }
    let fields = casimir_differentials(c0, at)
        .iter()
        .map(|d| poisson_tensor_apply(d, at, pencil))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for f in probes {
        let df = crate::phasespace::differential(f, at)?;
        for field in &fields {
            worst = worst.max(pairing(&df, field)?.norm());
        }
    }
    Ok(worst)
}

/// Rebuilds the curve from Casimir values `P(c₀, ·)` at the given points
/// (at least `rn + 1`, distinct); `tol` bounds the consistency residual of
/// the overdetermined lower-degree fits.
pub fn curve_from_casimir_sweep(at: &PhasePoint, points: &[Complex64], tol: f64) -> Result<SpectralCurve> {
    let (r, n) = (at.r(), at.n());
    if points.len() < r * n + 1 {
        return Err(Error::TooFewSamples { degree: r * n, needed: r * n + 1, got: points.len() });
    }
    let values: Vec<Vec<Complex64>> = points.iter().map(|&c| char_poly_coeffs(&at.eval(c))).collect();
    let mut coeff = BTreeMap::new();
    for j in 0..r {
        let pts: Vec<_> = points.iter().zip(&values).map(|(&x, v)| (x, v[j])).collect();
        let p = poly_from_samples(&pts, (r - j) * n, tol)?;
        for k in 0..=(r - j) * n {
            coeff.insert((j, k), p.coeff(k));
        }
    }
    let lead = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
    coeff.insert((r, 0), Complex64::new(lead, 0.0));
    Ok(SpectralCurve { r, n, coeff, genus: genus(r, n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c64, det, CMat};
    use crate::sample;

    #[test]
    fn genus_values() {
        assert_eq!(genus(2, 4), 1);
        assert_eq!(genus(2, 5), 2);
        assert_eq!(genus(3, 3), 1);
        assert_eq!(genus(2, 1), -2);
    }

    #[test]
    fn scalar_curve_is_phi_minus_z() {
        let p = PhasePoint::from_coeffs(vec![CMat::from_element(1, 1, c64(2.0, 1.0)), CMat::from_element(1, 1, c64(-1.0, 0.0))]).unwrap();
        let c = char_curve(&p);
        assert!((c.coeff(0, 0) - c64(2.0, 1.0)).norm() < 1e-14);
        assert!((c.coeff(0, 1) - c64(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(c.coeff(1, 0), c64(-1.0, 0.0));
    }

    #[test]
    fn diagonal_curve_factors() {
        // diag(1 + λ, 2 − λ): P = (1 + λ − z)(2 − λ − z)
        let d0 = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)]);
        let d1 = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)]);
        let c = char_curve(&PhasePoint::from_coeffs(vec![d0, d1]).unwrap());
        let expect = [((0, 0), 2.0), ((0, 1), 1.0), ((0, 2), -1.0), ((1, 0), -3.0), ((1, 1), 0.0), ((2, 0), 1.0)];
        for ((j, k), v) in expect {
            assert!((c.coeff(j, k) - c64(v, 0.0)).norm() < 1e-13, "({j},{k})");
        }
    }

    #[test]
    fn curve_matches_direct_determinant() {
        let mut g = sample::rng(3);
        let p = sample::phase_point(&mut g, 3, 2);
        let c = char_curve(&p);
        for _ in 0..20 {
            let (l, z) = (sample::complex(&mut g), sample::complex(&mut g));
            let direct = det(&(p.eval(l) - CMat::identity(3, 3) * z));
            assert!((c.eval(l, z) - direct).norm() < 1e-9);
        }
        assert!(c.max_difference(&char_curve_exact(&p)) < 1e-12);
    }

    #[test]
    fn differential_matches_finite_differences() {
        let mut g = sample::rng(8);
        let p = sample::phase_point(&mut g, 3, 2);
        for label in [(0, 3), (1, 2), (2, 1), (0, 0)] {
            let d = curve_coefficient_differential(label, &p);
            let fd = crate::phasespace::fd_differential(|q| curve_coefficient_value(label, q), &p, 1e-5);
            assert!(d.as_laurent().sub(fd.as_laurent()).max_abs() < 1e-8, "{label:?}");
        }
    }

    #[test]
    fn spectral_invariant_examples() {
        let a0 = CMat::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 1.0)]);
        let p = PhasePoint::from_coeffs(vec![a0]).unwrap();
        let v = spectral_invariant(&LaurentPoly::monomial(-1, c64(1.0, 0.0)), 1, &p).unwrap();
        assert!((v - c64(5.0, 1.0)).norm() < 1e-15);
        let v = spectral_invariant(&LaurentPoly::monomial(-2, c64(1.0, 0.0)), 1, &p).unwrap();
        assert_eq!(v, c64(0.0, 0.0));
    }

    #[test]
    fn involution_small_case() {
        let mut g = sample::rng(1);
        let p = sample::phase_point(&mut g, 2, 3);
        let basis = InvariantBasis::full(2, 3);
        for pencil in BracketPencil::spanning() {
            assert!(commutation_table(&p, &pencil, &basis).unwrap() < 1e-9);
        }
    }

    #[test]
    fn casimir_requires_zero() {
        let mut g = sample::rng(1);
        let p = sample::phase_point(&mut g, 2, 2);
        let pencil = BracketPencil::new(Poly::from_real(&[-1.0, 1.0]), c64(0.0, 0.0));
        let probes = CoordinateFunction::all_coefficients(2, 2);
        assert!(casimir_defect(c64(1.0, 0.0), &p, &pencil, &probes, 1e-10).unwrap() < 1e-10);
        assert!(matches!(
            casimir_defect(c64(2.0, 0.0), &p, &pencil, &probes, 1e-10),
            Err(Error::NotPencilZero(_))
        ));
    }

    #[test]
    fn sweep_rebuilds_curve() {
        let mut g = sample::rng(4);
        let p = sample::phase_point(&mut g, 3, 2);
        let pts = roots_of_unity_nodes(7, 1.0, 0.3);
        let c = curve_from_casimir_sweep(&p, &pts, 1e-9).unwrap();
        assert!(c.max_difference(&char_curve(&p)) < 1e-10);
    }
}
