use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::Poly;

/// Scalar Laurent polynomial `Σ c_e λ^e` over the explicit exponent window
/// `lo ..= lo + coeffs.len() - 1`.
///
/// Windows are never normalised away: sums take the union window and
/// products the Minkowski sum, so exponent bookkeeping stays exact.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    lo: i32,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    pub fn new(lo: i32, coeffs: Vec<Complex64>) -> Self {
        LaurentPoly { lo, coeffs }
    }

    pub fn zero() -> Self {
        LaurentPoly { lo: 0, coeffs: Vec::new() }
    }

    /// `c λ^e`
    pub fn monomial(e: i32, c: Complex64) -> Self {
        LaurentPoly { lo: e, coeffs: vec![c] }
    }

    pub fn from_poly(p: &Poly) -> Self {
        LaurentPoly { lo: 0, coeffs: p.coeffs().to_vec() }
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Highest exponent of the window, `lo - 1` for an empty window.
    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, e: i32) -> Complex64 {
        let idx = e - self.lo;
        if idx < 0 {
            return Complex64::default();
        }
        self.coeffs.get(idx as usize).copied().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        LaurentPoly { lo: self.lo, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// Restriction to the exponents `lo ..= hi`.
    pub fn truncate(&self, lo: i32, hi: i32) -> Self {
        if hi < lo {
            return LaurentPoly { lo, coeffs: Vec::new() };
        }
        LaurentPoly { lo, coeffs: (lo..=hi).map(|e| self.coeff(e)).collect() }
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * x.powi(self.lo + k as i32))
            .sum()
    }
}

/// Coefficient of `λ^{-1}`.
///
/// This is the residue at infinity *without* the customary extra minus sign;
/// the trace pairing and every bracket in the crate are built on this
/// convention.
pub fn residue_infinity(f: &LaurentPoly) -> Complex64 {
    f.coeff(-1)
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_empty() {
            return rhs.clone();
        }
        if rhs.is_empty() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = self.hi().max(rhs.hi());
        LaurentPoly { lo, coeffs: (lo..=hi).map(|e| self.coeff(e) + rhs.coeff(e)).collect() }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_empty() || rhs.is_empty() {
            return LaurentPoly { lo: self.lo + rhs.lo, coeffs: Vec::new() };
        }
        let mut out = vec![Complex64::default(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        LaurentPoly { lo: self.lo + rhs.lo, coeffs: out }
    }
}

/// Laurent expansion at infinity of `num / den`, keeping exponents down to
/// `lowest`.
///
/// Computed by long division of `num` by `den` followed by series
/// division of the remainder; `den` must be nonzero.
pub fn expand_at_infinity(num: &Poly, den: &Poly, lowest: i32) -> LaurentPoly {
    let dd = den.degree().expect("expansion of a rational function with zero denominator") as i32;
    let nd = num.degree().map_or(-1, |d| d as i32);
    let hi = (nd - dd).max(-1);
    if hi < lowest {
        return LaurentPoly::new(lowest, Vec::new());
    }
    // Work with x = 1/λ: num/den = λ^{nd-dd} · N(x)/D(x), N, D reversed coefficient lists.
    let lead = den.coeff(dd as usize);
    let terms = (hi - lowest + 1) as usize;
    let mut rem: Vec<Complex64> = (0..terms + dd as usize + 1)
        .map(|k| {
            let idx = hi + dd - k as i32;
            if idx >= 0 {
                num.coeff(idx as usize)
            } else {
                Complex64::default()
            }
        })
        .collect();
    let mut out = vec![Complex64::default(); terms];
    for k in 0..terms {
        let t = rem[k] / lead;
        out[k] = t;
        for i in 0..=dd as usize {
            if k + i < rem.len() {
                rem[k + i] -= t * den.coeff(dd as usize - i);
            }
        }
    }
    // out[k] is the coefficient of λ^{hi-k}
    out.reverse();
    LaurentPoly::new(lowest, out)
}
