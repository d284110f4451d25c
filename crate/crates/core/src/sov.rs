//! Divisor (separation) coordinates `(λ_μ, z_μ)` and their brackets.
//!
//! The λ_μ are the zeros of the Krylov determinant
//! `det(V, φV, …, φ^{r−1}V)`; at such a point the Krylov space `K` of `V`
//! is a φ-invariant hyperplane, `φ^{r−1}V = Σ c_i φ^i V` on it, and the
//! remaining eigenvalue is `z = tr φ − c_{r−2} = tr φ − R/P` with
//! `P = det(W, V, …, φ^{r−2}V)` and `R = det(W, V, …, φ^{r−3}V, φ^{r−1}V)`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{det, interpolate_fn, match_by, poly_roots, CMat, Poly};
use crate::error::{Error, Result};
use crate::phasespace::{pairing, poisson_tensor_apply, BracketPencil, CotangentElement, PhasePoint};
use crate::spectral::{char_curve, genus, SpectralCurve};

const W_RETRIES: usize = 8;

/// Distinguished section `V` and auxiliary vector `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionChoice {
    v: DVector<Complex64>,
    w: DVector<Complex64>,
}

impl SectionChoice {
    /// `V = e₁`, `W = e₂`.
    pub fn standard(r: usize) -> Self {
        let mut v = DVector::zeros(r);
        let mut w = DVector::zeros(r);
        v[0] = Complex64::new(1.0, 0.0);
        if r > 1 {
            w[1] = Complex64::new(1.0, 0.0);
        }
        SectionChoice { v, w }
    }

    pub fn new(v: DVector<Complex64>, w: DVector<Complex64>) -> Result<Self> {
        if v.len() != w.len() {
            return Err(Error::DimensionMismatch("V and W differ in length".into()));
        }
        if v.norm() == 0.0 {
            return Err(Error::InvalidInput("V must be nonzero".into()));
        }
        let proj = v.dotc(&w) / v.dotc(&v);
        if (&w - &v * proj).norm() <= 1e-12 * w.norm().max(1.0) {
            return Err(Error::InvalidInput("W must not be parallel to V".into()));
        }
        Ok(SectionChoice { v, w })
    }

    pub fn v(&self) -> &DVector<Complex64> {
        &self.v
    }

    pub fn w(&self) -> &DVector<Complex64> {
        &self.w
    }

    /// `(gV, gW)`
    pub fn transformed(&self, g: &CMat) -> Result<Self> {
        SectionChoice::new(g * &self.v, g * &self.w)
    }
}

/// Finite divisor points of `φ` for a section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorCoordinates {
    pub points: Vec<(Complex64, Complex64)>,
    /// Finite points predicted by the numerical degree of the Krylov determinant.
    pub expected_count: usize,
    pub genus: i64,
    pub warnings: Vec<String>,
}

impl DivisorCoordinates {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn is_generic(&self) -> bool {
        self.warnings.is_empty()
    }

    /// `max |P(λ_μ, z_μ)| / magnitude`
    pub fn curve_residual(&self, curve: &SpectralCurve) -> f64 {
        self.points
            .iter()
            .map(|&(l, z)| curve.eval(l, z).norm() / curve.magnitude(l, z).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Bottleneck distance between two divisors as point sets in C².
pub fn divisor_distance(a: &[(Complex64, Complex64)], b: &[(Complex64, Complex64)]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    Some(match_by(a.len(), |i, j| (a[i].0 - b[j].0).norm().max((a[i].1 - b[j].1).norm())))
}

fn krylov_columns(m: &CMat, v: &DVector<Complex64>, count: usize) -> Vec<DVector<Complex64>> {
    let mut cols = Vec::with_capacity(count);
    let mut x = v.clone();
    for _ in 0..count {
        cols.push(x.clone());
        x = m * &x;
    }
    cols
}

fn det_of_columns(cols: &[&DVector<Complex64>]) -> Complex64 {
    let r = cols.len();
    det(&CMat::from_fn(r, r, |i, j| cols[j][i]))
}

/// Degree bound `n r(r−1)/2` of the Krylov determinant.
pub fn krylov_degree_bound(r: usize, n: usize) -> usize {
    n * r * (r - 1) / 2
}

/// `det(V, φ(λ)V, …, φ(λ)^{r−1}V)` as a polynomial, by interpolation at
/// unit roots of unity. Identically zero (relative to the Hadamard bound)
/// is [`Error::DegenerateSection`].
pub fn krylov_polynomial(at: &PhasePoint, sec: &SectionChoice, tol: f64) -> Result<Poly> {
    let r = at.r();
    if r < 2 {
        return Err(Error::InvalidInput("divisor coordinates need r ≥ 2".into()));
    }
    if sec.v.len() != r {
        return Err(Error::DimensionMismatch(format!("section has length {}, r = {r}", sec.v.len())));
    }
    let degree = krylov_degree_bound(r, at.n());
    let p = interpolate_fn(degree, 1.0, |x| {
        let cols = krylov_columns(&at.eval(x), &sec.v, r);
        det_of_columns(&cols.iter().collect::<Vec<_>>())
    });
    let hadamard = crate::algebra::roots_of_unity_nodes(degree + 1, 1.0, 0.0)
        .into_iter()
        .map(|x| krylov_columns(&at.eval(x), &sec.v, r).iter().map(|c| c.norm()).product::<f64>())
        .fold(0.0, f64::max);
    if p.coeffs().iter().all(|c| c.norm() <= tol * hadamard) {
        return Err(Error::DegenerateSection);
    }
    Ok(p)
}

/// Leading coefficients below `tol` relative are points over infinity.
fn numerical_degree(p: &Poly, tol: f64) -> usize {
    p.trim_relative(tol).degree().unwrap_or(0)
}

/// Finite zeros of the Krylov determinant.
pub fn lambda_coordinates(at: &PhasePoint, sec: &SectionChoice, tol: f64) -> Result<Vec<Complex64>> {
    let p = krylov_polynomial(at, sec, tol)?;
    if numerical_degree(&p, tol) == 0 {
        return Ok(Vec::new());
    }
    let roots = poly_roots(&p, tol)?;
    let scale = roots.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for i in 0..roots.len() {
        for j in 0..i {
            if (roots[i] - roots[j]).norm() <= 1e-8 * scale {
                return Err(Error::RepeatedDivisorPoint(roots[i]));
            }
        }
    }
    Ok(roots)
}

fn bordered(w: &DVector<Complex64>, cols: &[DVector<Complex64>], last: usize) -> Complex64 {
    let r = cols.len();
    let mut sel: Vec<&DVector<Complex64>> = vec![w];
    sel.extend(cols.iter().take(r - 2));
    sel.push(&cols[last]);
    det_of_columns(&sel)
}

/// `z = tr φ(λ) − R(λ)/P(λ)` at each λ; a `W` with `P(λ) ≈ 0` is replaced by
/// seeded random choices.
pub fn z_coordinates(lambdas: &[Complex64], at: &PhasePoint, sec: &SectionChoice) -> Result<DivisorCoordinates> {
    let r = at.r();
    let mut rng = crate::sample::rng(0x5EC7);
    let mut points = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let m = at.eval(l);
        let cols = krylov_columns(&m, &sec.v, r);
        let mut w = sec.w.clone();
        let mut found = None;
        for _ in 0..=W_RETRIES {
            let p = bordered(&w, &cols, r - 2);
            let scale = w.norm() * cols.iter().take(r - 1).map(|c| c.norm()).product::<f64>();
            if p.norm() > 1e-8 * scale {
                let q = bordered(&w, &cols, r - 1);
                found = Some(m.trace() - q / p);
                break;
            }
            w = DVector::from_fn(r, |_, _| crate::sample::complex(&mut rng));
        }
        let z = found.ok_or(Error::NoAuxiliaryVector)?;
        points.push((l, z));
    }
    Ok(DivisorCoordinates {
        points,
        expected_count: lambdas.len(),
        genus: genus(r, at.n()),
        warnings: Vec::new(),
    })
}

/// Full pipeline: Krylov zeros, z from bordered determinants, expected
/// count from the Krylov degree, warnings on count mismatch.
pub fn divisor(at: &PhasePoint, sec: &SectionChoice, tol: f64) -> Result<DivisorCoordinates> {
    let p = krylov_polynomial(at, sec, tol)?;
    let expected = numerical_degree(&p, tol);
    let lambdas = lambda_coordinates(at, sec, tol)?;
    let mut out = z_coordinates(&lambdas, at, sec)?;
    out.expected_count = expected;
    if out.points.len() != expected {
        out.warnings.push(format!("found {} finite points, expected {expected}", out.points.len()));
    }
    Ok(out)
}

/// Independent route: λ from the resultant in z of two random combinations
/// of the components of `adj(φ(λ) − zI)V`, z from the sheets over each λ,
/// keeping only pairs where the whole vector vanishes.
pub fn divisor_via_adjugate(at: &PhasePoint, sec: &SectionChoice, tol: f64) -> Result<DivisorCoordinates> {
    let (r, n) = (at.r(), at.n());
    if r < 2 {
        return Err(Error::InvalidInput("divisor coordinates need r ≥ 2".into()));
    }
    let mut rng = crate::sample::rng(0xAD7);
    let xi1 = DVector::from_fn(r, |_, _| crate::sample::complex(&mut rng));
    let xi2 = DVector::from_fn(r, |_, _| crate::sample::complex(&mut rng));
    let adj = crate::spectral::Adjugate::new(at);
    // u(λ, z) = Σ_j <ξ, A_j(λ) V> z^j
    let component = |xi: &DVector<Complex64>, x: Complex64| -> Vec<Complex64> {
        (0..r).map(|j| xi.dot(&(adj.coefficient(j).eval(x) * &sec.v))).collect()
    };
    let m = r - 1;
    let degree = m * m * n;
    let res = interpolate_fn(degree, 1.0, |x| {
        let (f, g) = (component(&xi1, x), component(&xi2, x));
        sylvester_det(&f, &g)
    });
    if res.coeffs().iter().all(|c| c.norm() <= tol * res.coefficient_scale().max(f64::MIN_POSITIVE))
        || res.is_zero()
    {
        return Err(Error::DegenerateSection);
    }
    let curve = char_curve(at);
    let candidates = if numerical_degree(&res, tol) == 0 { Vec::new() } else { poly_roots(&res, tol)? };
    let mut points = Vec::new();
    for l in candidates {
        let mat = adj_matrices(&adj, l);
        for z in curve.z_roots(l, tol)? {
            let vec = eval_adj(&mat, z) * &sec.v;
            let size = mat.iter().enumerate().map(|(j, a)| a.norm() * z.norm().powi(j as i32)).sum::<f64>() * sec.v.norm();
            let seen = points.iter().any(|p: &(Complex64, Complex64)| {
                (p.0 - l).norm() <= 1e-6 * (1.0 + l.norm()) && (p.1 - z).norm() <= 1e-6 * (1.0 + z.norm())
            });
            if !seen && vec.norm() <= 1e-6 * size.max(f64::MIN_POSITIVE) {
                points.push((l, z));
            }
        }
    }
    let expected = points.len();
    Ok(DivisorCoordinates { points, expected_count: expected, genus: genus(r, n), warnings: Vec::new() })
}

fn adj_matrices(adj: &crate::spectral::Adjugate, l: Complex64) -> Vec<CMat> {
    (0..adj.coefficient(0).r()).map(|j| adj.coefficient(j).eval(l)).collect()
}

fn eval_adj(mats: &[CMat], z: Complex64) -> CMat {
    mats.iter().rev().fold(CMat::zeros(mats[0].nrows(), mats[0].ncols()), |acc, a| acc * z + a)
}

/// Sylvester resultant of two polynomials given by ascending coefficients,
/// both of formal degree `len − 1`.
fn sylvester_det(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let m = f.len() - 1;
    let k = g.len() - 1;
    let size = m + k;
    if size == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut s = CMat::zeros(size, size);
    for row in 0..k {
        for (i, c) in f.iter().rev().enumerate() {
            s[(row, row + i)] = *c;
        }
    }
    for row in 0..m {
        for (i, c) in g.iter().rev().enumerate() {
            s[(k + row, row + i)] = *c;
        }
    }
    det(&s)
}

/// Finite-difference differentials of the divisor coordinates, ordered as
/// the base divisor.
#[derive(Clone, Debug)]
pub struct DivisorJacobian {
    pub points: Vec<(Complex64, Complex64)>,
    pub d_lambda: Vec<CotangentElement>,
    pub d_z: Vec<CotangentElement>,
}

impl DivisorJacobian {
    /// Central differences of step `h` along every coefficient coordinate,
    /// matching perturbed points to base points by nearest neighbour.
    pub fn new(at: &PhasePoint, sec: &SectionChoice, h: f64, tol: f64) -> Result<Self> {
        let base = divisor(at, sec, tol)?;
        let pts = base.points.clone();
        let g = pts.len();
        for i in 0..g {
            for j in 0..i {
                let d = (pts[i].0 - pts[j].0).norm().max((pts[i].1 - pts[j].1).norm());
                if d <= 10.0 * h {
                    return Err(Error::DivisorCollision);
                }
            }
        }
        let perturbed = |q: &PhasePoint| -> Result<Vec<(Complex64, Complex64)>> {
            let d = divisor(q, sec, tol)?;
            if d.points.len() != g {
                return Err(Error::DivisorCollision);
            }
            let mut out = Vec::with_capacity(g);
            let mut used = vec![false; g];
            for p in &pts {
                let (idx, _) = d
                    .points
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !used[*k])
                    .map(|(k, x)| (k, (x.0 - p.0).norm() + (x.1 - p.1).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .ok_or(Error::DivisorCollision)?;
                used[idx] = true;
                out.push(d.points[idx]);
            }
            Ok(out)
        };
        let (r, n) = (at.r(), at.n());
        let mut d_lambda = vec![CotangentElement::zero(r, n); g];
        let mut d_z = vec![CotangentElement::zero(r, n); g];
        let step = Complex64::new(h, 0.0);
        for (i, j, k) in at.coordinate_indices() {
            let plus = perturbed(&at.perturbed(i, j, k, step))?;
            let minus = perturbed(&at.perturbed(i, j, k, -step))?;
            for mu in 0..g {
                d_lambda[mu].slot_mut(k)[(j, i)] = (plus[mu].0 - minus[mu].0) / (2.0 * h);
                d_z[mu].slot_mut(k)[(j, i)] = (plus[mu].1 - minus[mu].1) / (2.0 * h);
            }
        }
        Ok(DivisorJacobian { points: pts, d_lambda, d_z })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Differentials in the order `λ₁, z₁, λ₂, z₂, …`.
    pub fn ordered(&self) -> Vec<&CotangentElement> {
        self.d_lambda.iter().zip(&self.d_z).flat_map(|(a, b)| [a, b]).collect()
    }

    /// Measured brackets of the `2g` coordinates, ordered as [`Self::ordered`].
    pub fn bracket_matrix(&self, at: &PhasePoint, pencil: &BracketPencil) -> Result<CMat> {
        let ds = self.ordered();
        let fields = ds.iter().map(|d| poisson_tensor_apply(d, at, pencil)).collect::<Result<Vec<_>>>()?;
        let m = ds.len();
        let mut out = CMat::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] = pairing(ds[a], &fields[b])?;
            }
        }
        Ok(out)
    }
}

/// Maximum defects of the canonical relations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CanonicalDefects {
    pub lambda_lambda: f64,
    pub lambda_z_diag: f64,
    pub lambda_z_off: f64,
    pub z_z: f64,
}

impl CanonicalDefects {
    pub fn max(&self) -> f64 {
        self.lambda_lambda.max(self.lambda_z_diag).max(self.lambda_z_off).max(self.z_z)
    }
}

/// Compares a measured bracket matrix with `{λ_μ, z_ν} = δ_μν (a(λ_μ) + b z_μ)`.
pub fn canonical_defects_from(jac: &DivisorJacobian, brackets: &CMat, pencil: &BracketPencil) -> CanonicalDefects {
    let g = jac.len();
    let mut d = CanonicalDefects::default();
    for mu in 0..g {
        for nu in 0..g {
            let ll = brackets[(2 * mu, 2 * nu)].norm();
            let zz = brackets[(2 * mu + 1, 2 * nu + 1)].norm();
            let lz = brackets[(2 * mu, 2 * nu + 1)];
            d.lambda_lambda = d.lambda_lambda.max(ll);
            d.z_z = d.z_z.max(zz);
            if mu == nu {
                let (l, z) = jac.points[mu];
                d.lambda_z_diag = d.lambda_z_diag.max((lz - pencil.surface_coefficient(l, z)).norm());
            } else {
                d.lambda_z_off = d.lambda_z_off.max(lz.norm());
            }
        }
    }
    d
}

pub fn canonical_relations_defect(
    at: &PhasePoint,
    pencil: &BracketPencil,
    sec: &SectionChoice,
    h: f64,
    tol: f64,
) -> Result<CanonicalDefects> {
    let jac = DivisorJacobian::new(at, sec, h, tol)?;
    let brackets = jac.bracket_matrix(at, pencil)?;
    Ok(canonical_defects_from(&jac, &brackets, pencil))
}

/// Random auxiliary section, for section-independence checks.
pub fn random_section<R: Rng>(rng: &mut R, r: usize) -> SectionChoice {
    loop {
        let v = DVector::from_fn(r, |_, _| crate::sample::complex(rng));
        let w = DVector::from_fn(r, |_, _| crate::sample::complex(rng));
        if let Ok(s) = SectionChoice::new(v, w) {
            return s;
        }
    }
}
