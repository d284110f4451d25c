//! JSON wire formats. Complex numbers travel as `[re, im]`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, MatPoly, Poly};
use crate::error::{Error, Result};
use crate::phasespace::{BracketPencil, PhasePoint};
use crate::sov::DivisorCoordinates;
use crate::spectral::SpectralCurve;

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// `coeffs[k][i][j]` is entry `(i, j)` of the λ^k matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePointJson {
    pub r: usize,
    pub n: usize,
    pub coeffs: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<&PhasePoint> for PhasePointJson {
    fn from(p: &PhasePoint) -> Self {
        let r = p.r();
        let coeffs = p
            .phi()
            .coeffs()
            .iter()
            .map(|m| (0..r).map(|i| (0..r).map(|j| pair(m[(i, j)])).collect()).collect())
            .collect();
        PhasePointJson { r, n: p.n(), coeffs }
    }
}

impl TryFrom<PhasePointJson> for PhasePoint {
    type Error = Error;

    fn try_from(w: PhasePointJson) -> Result<Self> {
        let (r, n) = (w.r, w.n);
        if r == 0 {
            return Err(Error::InvalidInput("r must be at least 1".into()));
        }
        if w.coeffs.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!("coeffs has {} matrices, expected n+1 = {}", w.coeffs.len(), n + 1)));
        }
        let mut mats = Vec::with_capacity(n + 1);
        for (k, m) in w.coeffs.iter().enumerate() {
            if m.len() != r || m.iter().any(|row| row.len() != r) {
                return Err(Error::DimensionMismatch(format!("coeffs[{k}] is not {r}×{r}")));
            }
            if m.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("coeffs[{k}] has a non-finite entry")));
            }
            mats.push(CMat::from_fn(r, r, |i, j| complex(m[i][j])));
        }
        PhasePoint::new(MatPoly::new(r, mats), n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilJson {
    pub a: Vec<[f64; 2]>,
    pub b: [f64; 2],
}

impl TryFrom<&BracketPencil> for PencilJson {
    type Error = Error;

    fn try_from(p: &BracketPencil) -> Result<Self> {
        let b = p.b().ok_or(Error::NonConstantB)?;
        Ok(PencilJson { a: p.a().coeffs().iter().map(|&c| pair(c)).collect(), b: pair(b) })
    }
}

impl TryFrom<PencilJson> for BracketPencil {
    type Error = Error;

    fn try_from(w: PencilJson) -> Result<Self> {
        if w.a.iter().chain(std::iter::once(&w.b)).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("pencil has a non-finite coefficient".into()));
        }
        Ok(BracketPencil::new(Poly::new(w.a.into_iter().map(complex).collect()), complex(w.b)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub j: usize,
    pub k: usize,
    pub re: f64,
    pub im: f64,
}

/// Entries sorted by `(j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveJson {
    pub r: usize,
    pub n: usize,
    pub coeff: Vec<CurveEntry>,
    pub genus: i64,
}

impl From<&SpectralCurve> for CurveJson {
    fn from(c: &SpectralCurve) -> Self {
        let coeff = c.coeffs().iter().map(|(&(j, k), v)| CurveEntry { j, k, re: v.re, im: v.im }).collect();
        CurveJson { r: c.r(), n: c.n(), coeff, genus: c.genus() }
    }
}

impl From<SpectralCurve> for CurveJson {
    fn from(c: SpectralCurve) -> Self {
        CurveJson::from(&c)
    }
}

impl TryFrom<CurveJson> for SpectralCurve {
    type Error = Error;

    fn try_from(w: CurveJson) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in w.coeff {
            if map.insert((e.j, e.k), Complex64::new(e.re, e.im)).is_some() {
                return Err(Error::InvalidInput(format!("duplicate curve coefficient ({}, {})", e.j, e.k)));
            }
        }
        SpectralCurve::new(w.r, w.n, map)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorPointJson {
    pub lambda: [f64; 2],
    pub z: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorJson {
    pub points: Vec<DivisorPointJson>,
}

impl From<&DivisorCoordinates> for DivisorJson {
    fn from(d: &DivisorCoordinates) -> Self {
        DivisorJson {
            points: d.points.iter().map(|&(l, z)| DivisorPointJson { lambda: pair(l), z: pair(z) }).collect(),
        }
    }
}

impl DivisorJson {
    pub fn points(&self) -> Vec<(Complex64, Complex64)> {
        self.points.iter().map(|p| (complex(p.lambda), complex(p.z))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    #[test]
    fn phase_point_round_trip() {
        let p = sample::phase_point(&mut sample::rng(3), 3, 2);
        let s = serde_json::to_string(&PhasePointJson::from(&p)).unwrap();
        let back = PhasePoint::try_from(serde_json::from_str::<PhasePointJson>(&s).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn ragged_matrix_rejected() {
        let w = PhasePointJson { r: 2, n: 0, coeffs: vec![vec![vec![[1.0, 0.0]; 2], vec![[1.0, 0.0]; 1]]] };
        assert!(matches!(PhasePoint::try_from(w), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn pencil_round_trip() {
        let p = sample::pencil(&mut sample::rng(4), 2);
        let w = PencilJson::try_from(&p).unwrap();
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(BracketPencil::try_from(serde_json::from_str::<PencilJson>(&s).unwrap()).unwrap(), p);
    }

    #[test]
    fn curve_round_trip_is_sorted() {
        let p = sample::phase_point(&mut sample::rng(5), 2, 2);
        let c = crate::spectral::char_curve(&p);
        let w = CurveJson::from(&c);
        assert!(w.coeff.windows(2).all(|e| (e[0].j, e[0].k) < (e[1].j, e[1].k)));
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(SpectralCurve::try_from(serde_json::from_str::<CurveJson>(&s).unwrap()).unwrap(), c);
        assert_eq!(serde_json::to_string(&c).unwrap(), s);
    }
}
