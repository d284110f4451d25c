use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{LaurentPoly, Poly};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

pub(crate) fn zeros(r: usize) -> CMat {
    CMat::zeros(r, r)
}

/// Elementary matrix `E_ij` (0-based).
pub fn unit_matrix(r: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(r);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Polynomial `Σ_k A_k λ^k` with `r×r` complex coefficients.
///
/// The stored length is the degree bound plus one; high coefficients may be
/// zero matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatPoly {
    r: usize,
    coeffs: Vec<CMat>,
}

impl MatPoly {
    /// Panics if a coefficient is not `r×r`; callers validate foreign input
    /// before reaching here.
    pub fn new(r: usize, coeffs: Vec<CMat>) -> Self {
        assert!(r >= 1, "matrix size must be positive");
        for c in &coeffs {
            assert!(c.nrows() == r && c.ncols() == r, "coefficient is not {r}x{r}");
        }
        MatPoly { r, coeffs }
    }

    pub fn zero(r: usize, degree_bound: usize) -> Self {
        MatPoly { r, coeffs: vec![zeros(r); degree_bound + 1] }
    }

    pub fn constant(m: CMat) -> Self {
        MatPoly { r: m.nrows(), coeffs: vec![m] }
    }

    /// Scalar polynomial times the identity.
    pub fn scalar(r: usize, p: &Poly) -> Self {
        let coeffs = if p.is_zero() {
            vec![zeros(r)]
        } else {
            p.coeffs().iter().map(|&c| CMat::identity(r, r) * c).collect()
        };
        MatPoly { r, coeffs }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [CMat] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: usize) -> CMat {
        self.coeffs.get(k).cloned().unwrap_or_else(|| zeros(self.r))
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: Complex64) -> CMat {
        self.coeffs.iter().rev().fold(zeros(self.r), |acc, c| acc * x + c)
    }

    pub fn entry(&self, i: usize, j: usize) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c[(i, j)]).collect())
    }

    pub fn trace(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c.trace()).collect())
    }

    pub fn derivative(&self) -> MatPoly {
        if self.coeffs.len() <= 1 {
            return MatPoly::zero(self.r, 0);
        }
        MatPoly {
            r: self.r,
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * Complex64::new(k as f64, 0.0)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> MatPoly {
        MatPoly { r: self.r, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &MatPoly) -> MatPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        MatPoly { r: self.r, coeffs: (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect() }
    }

    pub fn sub(&self, other: &MatPoly) -> MatPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        MatPoly { r: self.r, coeffs: (0..len).map(|k| self.coeff(k) - other.coeff(k)).collect() }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: Complex64, other: &MatPoly) -> MatPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        MatPoly { r: self.r, coeffs: (0..len).map(|k| self.coeff(k) + other.coeff(k) * s).collect() }
    }

    pub fn mul(&self, other: &MatPoly) -> MatPoly {
        let mut coeffs = vec![zeros(self.r); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        MatPoly { r: self.r, coeffs }
    }

    pub fn mul_scalar_poly(&self, p: &Poly) -> MatPoly {
        if p.is_zero() {
            return MatPoly::zero(self.r, 0);
        }
        let mut coeffs = vec![zeros(self.r); self.coeffs.len() + p.coeffs().len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, &b) in p.coeffs().iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        MatPoly { r: self.r, coeffs }
    }

    /// Largest coefficient modulus over all entries.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(max_abs).fold(0.0, f64::max)
    }

    /// Pads or truncates the stored coefficient list to `degree_bound + 1`
    /// entries.
    pub fn with_degree_bound(&self, degree_bound: usize) -> MatPoly {
        MatPoly { r: self.r, coeffs: (0..=degree_bound).map(|k| self.coeff(k)).collect() }
    }
}

/// Horner evaluation of a matrix polynomial.
pub fn matpoly_eval(m: &MatPoly, x: Complex64) -> CMat {
    m.eval(x)
}

/// Matrix Laurent polynomial over the explicit exponent window
/// `lo ..= lo + coeffs.len() - 1`, with the same bookkeeping rules as
/// [`LaurentPoly`].
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMat {
    r: usize,
    lo: i32,
    coeffs: Vec<CMat>,
}

impl LaurentMat {
    pub fn new(r: usize, lo: i32, coeffs: Vec<CMat>) -> Self {
        for c in &coeffs {
            assert!(c.nrows() == r && c.ncols() == r, "coefficient is not {r}x{r}");
        }
        LaurentMat { r, lo, coeffs }
    }

    /// All-zero element over `lo ..= hi`.
    pub fn zeros(r: usize, lo: i32, hi: i32) -> Self {
        let len = (hi - lo + 1).max(0) as usize;
        LaurentMat { r, lo, coeffs: vec![zeros(r); len] }
    }

    pub fn monomial(e: i32, m: CMat) -> Self {
        LaurentMat { r: m.nrows(), lo: e, coeffs: vec![m] }
    }

    pub fn from_matpoly(p: &MatPoly) -> Self {
        LaurentMat { r: p.r, lo: 0, coeffs: p.coeffs.clone() }
    }

    pub fn from_scalar(r: usize, f: &LaurentPoly) -> Self {
        LaurentMat {
            r,
            lo: f.lo(),
            coeffs: f.coeffs().iter().map(|&c| CMat::identity(r, r) * c).collect(),
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    pub fn coeff(&self, e: i32) -> CMat {
        let idx = e - self.lo;
        if idx < 0 {
            return zeros(self.r);
        }
        self.coeffs.get(idx as usize).cloned().unwrap_or_else(|| zeros(self.r))
    }

    pub fn coeff_mut(&mut self, e: i32) -> &mut CMat {
        let idx = (e - self.lo) as usize;
        &mut self.coeffs[idx]
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        LaurentMat { r: self.r, lo: self.lo, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn combine(&self, other: &LaurentMat, s: Complex64) -> LaurentMat {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.scale(s);
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        LaurentMat {
            r: self.r,
            lo,
            coeffs: (lo..=hi).map(|e| self.coeff(e) + other.coeff(e) * s).collect(),
        }
    }

    pub fn add(&self, other: &LaurentMat) -> LaurentMat {
        self.combine(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &LaurentMat) -> LaurentMat {
        self.combine(other, Complex64::new(-1.0, 0.0))
    }

    pub fn mul(&self, other: &LaurentMat) -> LaurentMat {
        if self.is_empty() || other.is_empty() {
            return LaurentMat { r: self.r, lo: self.lo + other.lo, coeffs: Vec::new() };
        }
        let mut coeffs = vec![zeros(self.r); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentMat { r: self.r, lo: self.lo + other.lo, coeffs }
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &LaurentMat) -> LaurentMat {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn mul_scalar_poly(&self, p: &Poly) -> LaurentMat {
        self.mul_scalar_laurent(&LaurentPoly::from_poly(p))
    }

    pub fn mul_scalar_laurent(&self, f: &LaurentPoly) -> LaurentMat {
        if self.is_empty() || f.is_empty() {
            return LaurentMat { r: self.r, lo: self.lo + f.lo(), coeffs: Vec::new() };
        }
        let mut coeffs = vec![zeros(self.r); self.coeffs.len() + f.coeffs().len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, &b) in f.coeffs().iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentMat { r: self.r, lo: self.lo + f.lo(), coeffs }
    }

    pub fn trace(&self) -> LaurentPoly {
        LaurentPoly::new(self.lo, self.coeffs.iter().map(|c| c.trace()).collect())
    }

    /// Restriction to the exponents `lo ..= hi`.
    pub fn truncate(&self, lo: i32, hi: i32) -> LaurentMat {
        LaurentMat::new(self.r, lo, (lo..=hi).map(|e| self.coeff(e)).collect())
    }

    /// Nonnegative-exponent part as a matrix polynomial.
    pub fn p_plus(&self) -> MatPoly {
        let hi = self.hi();
        if hi < 0 {
            return MatPoly::zero(self.r, 0);
        }
        MatPoly::new(self.r, (0..=hi).map(|e| self.coeff(e)).collect())
    }

    /// Strictly negative-exponent part.
    pub fn p_minus(&self) -> LaurentMat {
        if self.lo >= 0 {
            return LaurentMat::zeros(self.r, -1, -1);
        }
        self.truncate(self.lo, -1)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(max_abs).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: Complex64) -> CMat {
        self.coeffs
            .iter()
            .enumerate()
            .fold(zeros(self.r), |acc, (k, c)| acc + c * x.powi(self.lo + k as i32))
    }
}
