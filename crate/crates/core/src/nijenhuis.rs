//! Recursion operators and normal forms in divisor coordinates.
//!
//! Coordinates are ordered `λ₁, z₁, λ₂, z₂, …`; a structure
//! `Σ_μ f(p_μ) ∂λ_μ ∧ ∂z_μ` is the block-diagonal matrix with blocks
//! `[[0, f_μ], [−f_μ, 0]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{max_abs, CMat};
use crate::error::{Error, Result};
use crate::phasespace::{BracketPencil, PhasePoint};
use crate::sov::{DivisorJacobian, SectionChoice};

const RHO_SEPARATION: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinatePencilTensor {
    points: Vec<(Complex64, Complex64)>,
    f_values: Vec<Complex64>,
}

impl CoordinatePencilTensor {
    pub fn new(points: Vec<(Complex64, Complex64)>, f_values: Vec<Complex64>) -> Result<Self> {
        if points.len() != f_values.len() {
            return Err(Error::DimensionMismatch(format!("{} points, {} values", points.len(), f_values.len())));
        }
        Ok(CoordinatePencilTensor { points, f_values })
    }

    /// `f(p_μ) = a(λ_μ) + b z_μ`
    pub fn from_pencil(points: &[(Complex64, Complex64)], pencil: &BracketPencil) -> Self {
        let f_values = points.iter().map(|&(l, z)| pencil.surface_coefficient(l, z)).collect();
        CoordinatePencilTensor { points: points.to_vec(), f_values }
    }

    pub fn points(&self) -> &[(Complex64, Complex64)] {
        &self.points
    }

    pub fn f_values(&self) -> &[Complex64] {
        &self.f_values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn matrix(&self) -> CMat {
        let g = self.len();
        let mut m = CMat::zeros(2 * g, 2 * g);
        for (mu, &f) in self.f_values.iter().enumerate() {
            m[(2 * mu, 2 * mu + 1)] = f;
            m[(2 * mu + 1, 2 * mu)] = -f;
        }
        m
    }
}

fn same_points(t1: &CoordinatePencilTensor, t2: &CoordinatePencilTensor) -> Result<()> {
    if t1.points != t2.points {
        return Err(Error::InvalidInput("structures live on different divisors".into()));
    }
    Ok(())
}

/// `ρ_μ = f₁(p_μ)/f₂(p_μ)`
pub fn eigenvalues(t1: &CoordinatePencilTensor, t2: &CoordinatePencilTensor) -> Result<Vec<Complex64>> {
    same_points(t1, t2)?;
    t1.f_values
        .iter()
        .zip(&t2.f_values)
        .enumerate()
        .map(|(mu, (&f1, &f2))| if f2.norm() == 0.0 { Err(Error::DegenerateStructure(mu)) } else { Ok(f1 / f2) })
        .collect()
}

/// `N = Λ₂^{-1} Λ₁` on covectors, by dense inversion of `Λ₂`.
pub fn recursion_matrix(t1: &CoordinatePencilTensor, t2: &CoordinatePencilTensor) -> Result<CMat> {
    same_points(t1, t2)?;
    if let Some(mu) = t2.f_values.iter().position(|f| f.norm() == 0.0) {
        return Err(Error::DegenerateStructure(mu));
    }
    let inv = t2.matrix().try_inverse().ok_or(Error::DegenerateStructure(0))?;
    Ok(inv * t1.matrix())
}

/// Eigenvalues of a square complex matrix through its Schur form.
pub fn spectrum(m: &CMat) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// `max |N e_i − ρ_{⌊i/2⌋} e_i|` over the coordinate covectors.
pub fn eigenvector_residual(n: &CMat, rho: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n.ncols() {
        let mut col = n.column(i).into_owned();
        col[i] -= rho[i / 2];
        worst = worst.max(col.norm());
    }
    worst
}

/// `(<ω_i, Λ₁ω_j>, <ω_i, Λ₂ω_j>)` for coordinate covectors, without the
/// eigenvalue guard.
pub fn raw_pairings(t1: &CoordinatePencilTensor, t2: &CoordinatePencilTensor, i: usize, j: usize) -> (Complex64, Complex64) {
    (t1.matrix()[(i, j)], t2.matrix()[(i, j)])
}

/// Orthogonality of eigenforms with distinct eigenvalues.
pub fn orthogonality_defect(t1: &CoordinatePencilTensor, t2: &CoordinatePencilTensor, i: usize, j: usize) -> Result<f64> {
    let rho = eigenvalues(t1, t2)?;
    let m = 2 * rho.len();
    if i >= m || j >= m {
        return Err(Error::DimensionMismatch(format!("eigenform index outside 0..{m}")));
    }
    let (ri, rj) = (rho[i / 2], rho[j / 2]);
    if (ri - rj).norm() <= RHO_SEPARATION * (1.0 + ri.norm().max(rj.norm())) {
        return Err(Error::SameEigenvalue);
    }
    let (a, b) = raw_pairings(t1, t2, i, j);
    Ok(a.norm().max(b.norm()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub lambda: Complex64,
    pub z: Complex64,
    /// Per pencil: predicted `a(λ) + b z`.
    pub predicted: Vec<Complex64>,
    /// Per pencil: measured `{λ_μ, z_μ}`.
    pub measured: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub rows: Vec<PointRow>,
    /// Largest deviation of any measured bracket matrix from its block form.
    pub block_defect: f64,
    /// Largest deviation of measured eigenvalue ratios from the closed form.
    pub ratio_defect: f64,
    /// Largest violation of antisymmetry within the diagonal 2×2 blocks.
    pub antisymmetry_defect: f64,
    /// Measured ratios near coincidence across points, reported only.
    pub near_coincidences: Vec<(usize, usize)>,
}

impl NormalFormReport {
    pub fn defect(&self) -> f64 {
        self.block_defect.max(self.ratio_defect).max(self.antisymmetry_defect)
    }
}

/// Measures every pencil's brackets in divisor coordinates and checks the
/// simultaneous block form and the eigenvalue ratios against the first pencil.
pub fn normal_form_check(
    at: &PhasePoint,
    pencils: &[BracketPencil],
    sec: &SectionChoice,
    h: f64,
    tol: f64,
) -> Result<NormalFormReport> {
    if pencils.len() < 2 {
        return Err(Error::InvalidInput("need at least two pencils".into()));
    }
    let jac = DivisorJacobian::new(at, sec, h, tol)?;
    let g = jac.len();
    let measured = pencils.iter().map(|p| jac.bracket_matrix(at, p)).collect::<Result<Vec<_>>>()?;
    let tensors: Vec<_> = pencils.iter().map(|p| CoordinatePencilTensor::from_pencil(&jac.points, p)).collect();

    let mut block_defect: f64 = 0.0;
    let mut antisymmetry_defect: f64 = 0.0;
    for (m, t) in measured.iter().zip(&tensors) {
        block_defect = block_defect.max(max_abs(&(m - t.matrix())));
        for mu in 0..g {
            let (a, b) = (2 * mu, 2 * mu + 1);
            antisymmetry_defect = antisymmetry_defect
                .max(m[(a, a)].norm())
                .max(m[(b, b)].norm())
                .max((m[(a, b)] + m[(b, a)]).norm());
        }
    }

    let mut ratio_defect: f64 = 0.0;
    let mut rows = Vec::with_capacity(g);
    let mut base_ratios = Vec::with_capacity(g);
    for mu in 0..g {
        let (lambda, z) = jac.points[mu];
        let meas: Vec<Complex64> = measured.iter().map(|m| m[(2 * mu, 2 * mu + 1)]).collect();
        let pred: Vec<Complex64> = tensors.iter().map(|t| t.f_values[mu]).collect();
        if pred[0].norm() > 0.0 && meas[0].norm() > 0.0 {
            for k in 1..pencils.len() {
                let dev = (meas[k] / meas[0] - pred[k] / pred[0]).norm();
                ratio_defect = ratio_defect.max(dev);
            }
            base_ratios.push(Some(meas[1] / meas[0]));
        } else {
            base_ratios.push(None);
        }
        rows.push(PointRow { lambda, z, predicted: pred, measured: meas });
    }
    let mut near_coincidences = Vec::new();
    for mu in 0..g {
        for nu in 0..mu {
            if let (Some(a), Some(b)) = (base_ratios[mu], base_ratios[nu]) {
                if (a - b).norm() <= RHO_SEPARATION * (1.0 + a.norm().max(b.norm())) {
                    near_coincidences.push((nu, mu));
                }
            }
        }
    }
    Ok(NormalFormReport { rows, block_defect, ratio_defect, antisymmetry_defect, near_coincidences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::c64;

    fn pts() -> Vec<(Complex64, Complex64)> {
        vec![(c64(0.5, 0.1), c64(1.0, -0.3)), (c64(-1.2, 0.4), c64(0.2, 0.9)), (c64(2.0, 0.0), c64(-0.7, 0.0))]
    }

    #[test]
    fn equal_structures_give_identity() {
        let t = CoordinatePencilTensor::from_pencil(&pts(), &BracketPencil::spanning()[2]);
        let n = recursion_matrix(&t, &t).unwrap();
        assert!(max_abs(&(n - CMat::identity(6, 6))) < 1e-15);
    }

    #[test]
    fn lambda_over_one_recovers_lambdas() {
        let [one, lam, _] = BracketPencil::spanning();
        let t1 = CoordinatePencilTensor::from_pencil(&pts(), &lam);
        let t2 = CoordinatePencilTensor::from_pencil(&pts(), &one);
        let n = recursion_matrix(&t1, &t2).unwrap();
        let mut spec = spectrum(&n);
        let mut want: Vec<Complex64> = pts().iter().flat_map(|p| [p.0, p.0]).collect();
        let key = |a: &Complex64, b: &Complex64| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap();
        spec.sort_by(key);
        want.sort_by(key);
        for (a, b) in spec.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_second_structure() {
        let zero_at_first = BracketPencil::new(crate::algebra::Poly::new(vec![-pts()[0].0, c64(1.0, 0.0)]), c64(0.0, 0.0));
        let t1 = CoordinatePencilTensor::from_pencil(&pts(), &BracketPencil::spanning()[0]);
        let t2 = CoordinatePencilTensor::from_pencil(&pts(), &zero_at_first);
        assert!(matches!(recursion_matrix(&t1, &t2), Err(Error::DegenerateStructure(0))));
    }

    #[test]
    fn distinct_eigenvalue_guard_and_same_block_pairing() {
        let [one, lam, _] = BracketPencil::spanning();
        let t1 = CoordinatePencilTensor::from_pencil(&pts(), &lam);
        let t2 = CoordinatePencilTensor::from_pencil(&pts(), &one);
        assert_eq!(orthogonality_defect(&t1, &t2, 0, 2).unwrap(), 0.0);
        assert_eq!(orthogonality_defect(&t1, &t2, 0, 3).unwrap(), 0.0);
        assert!(matches!(orthogonality_defect(&t1, &t2, 0, 1), Err(Error::SameEigenvalue)));
        let (a, _) = raw_pairings(&t1, &t2, 0, 1);
        assert_eq!(a, t1.f_values()[0]);
    }
}
