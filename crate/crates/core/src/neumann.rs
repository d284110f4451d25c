//! The Neumann oscillator: motion on the unit sphere `Σ x_i² = 1` under the
//! potential `½ Σ α_i x_i²`, packaged as a 2×2 matrix polynomial.
//!
//! With `a(λ) = Π(λ − α_i)` and `a_j(λ) = Π_{i≠j}(λ − α_i)`,
//!
//! ```text
//! φ(λ) = a(λ) [[0, −1], [0, 0]] + [[−Σ x_i y_i a_i, −Σ y_i² a_i], [Σ x_i² a_i, Σ x_i y_i a_i]]
//! B(λ) = [[Σ x_i y_i, λ + Σ y_i² − Σ α_i x_i²], [−Σ x_i², −Σ x_i y_i]]
//! ```
//!
//! and the equations of motion are equivalent to `dφ/dt = [B, φ]`. The full
//! `a(λ)` in the upper right corner and the `−Σ α_i x_i²` in `B` are what make
//! the λⁿ and λ⁰ parts of the Lax equation balance; with `a/2`, or without the
//! potential term, no field on `(x, y)` satisfies it.
//!
//! Two residue Hamiltonians are provided. [`hamiltonian`] is
//! `res_∞ λ² det φ / a²`, which equals `Σ α_i² F_i` for the Uhlenbeck integrals
//! `F_i`. [`hamiltonian_linear_reading`] is `res_∞ λ det φ / a²`, which equals
//! `Σ α_i F_i = 2E` with `E` the classical energy. Both are conserved.
//!
//! Under the pencil `(a(λ), 0)` the linear reading generates
//! `[B_H, φ]` with `B_H = B + Σ α_i x_i² E₁₂` (see [`hamiltonian_b`]). The two
//! flows differ by an infinitesimal conjugation with a constant matrix, so
//! they agree on the spectral curve and on the divisor.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{poly_roots, CMat, MatPoly, Poly};
use crate::error::{Error, Result};
use crate::phasespace::{BracketPencil, CotangentElement, PhasePoint};
use crate::spectral::{char_curve, genus, Adjugate, InvariantBasis};
use crate::flows::{linearizing_along, LinearizingOptions, QSeries, Trajectory};
use crate::sov::{DivisorCoordinates, SectionChoice};

/// Tolerance on the sphere and tangency constraints used by [`NeumannState::new`].
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct NeumannState {
    x: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
}

#[derive(Deserialize)]
struct RawState {
    x: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
}

impl TryFrom<RawState> for NeumannState {
    type Error = Error;

    fn try_from(s: RawState) -> Result<Self> {
        NeumannState::new(s.x, s.y, s.alpha)
    }
}

impl NeumannState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(x, y, alpha, CONSTRAINT_TOL)
    }

    pub fn with_tolerance(x: Vec<f64>, y: Vec<f64>, alpha: Vec<f64>, tol: f64) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || alpha.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "x, y, alpha have lengths {}, {}, {}; need equal lengths ≥ 2",
                x.len(),
                y.len(),
                alpha.len()
            )));
        }
        if x.iter().chain(&y).chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite state entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if alpha[i] == alpha[j] {
                    return Err(Error::RepeatedAlpha(alpha[i]));
                }
            }
        }
        let s = NeumannState { x, y, alpha };
        let (sphere, tangency) = s.constraint_defects();
        if sphere > tol {
            return Err(Error::ConstraintViolation(format!("|Σx² − 1| = {sphere:e}")));
        }
        if tangency > tol {
            return Err(Error::ConstraintViolation(format!("|Σxy| = {tangency:e}")));
        }
        Ok(s)
    }

    /// Gaussian directions projected onto the constraint surface.
    pub fn random<R: Rng>(rng: &mut R, alpha: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&x).for_each(|(v, xi)| *v -= dot * xi);
        Self::new(x, y, alpha)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `(|Σx² − 1|, |Σxy|)`
    pub fn constraint_defects(&self) -> (f64, f64) {
        ((dot(&self.x, &self.x) - 1.0).abs(), dot(&self.x, &self.y).abs())
    }

    fn moved(&self, dx: &[f64], dy: &[f64], s: f64) -> NeumannState {
        NeumannState {
            x: self.x.iter().zip(dx).map(|(a, b)| a + s * b).collect(),
            y: self.y.iter().zip(dy).map(|(a, b)| a + s * b).collect(),
            alpha: self.alpha.clone(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `a(λ) = Π(λ − α_i)`
pub fn a_poly(alpha: &[f64]) -> Poly {
    Poly::from_roots(&alpha.iter().map(|&v| re(v)).collect::<Vec<_>>())
}

/// `a_j(λ) = Π_{i≠j}(λ − α_i)`
pub fn a_j_poly(alpha: &[f64], j: usize) -> Poly {
    let roots: Vec<Complex64> = alpha.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| re(v)).collect();
    Poly::from_roots(&roots)
}

fn weighted(s: &NeumannState, w: impl Fn(usize) -> f64) -> Poly {
    let n = s.n();
    let mut c = vec![Complex64::default(); n];
    for i in 0..n {
        let wi = w(i);
        if wi != 0.0 {
            for (k, v) in a_j_poly(&s.alpha, i).coeffs().iter().enumerate() {
                c[k] += v * wi;
            }
        }
    }
    Poly::new(c)
}

/// `Σ x_i² a_i(λ)`, whose zeros are the ellipsoidal coordinates.
pub fn ellipsoidal_polynomial(s: &NeumannState) -> Poly {
    weighted(s, |i| s.x[i] * s.x[i])
}

/// `φ` as an `r = 2` phase point of degree `n`.
pub fn build_phi(s: &NeumannState) -> PhasePoint {
    let n = s.n();
    let a = a_poly(&s.alpha);
    let xy = weighted(s, |i| s.x[i] * s.y[i]);
    let yy = weighted(s, |i| s.y[i] * s.y[i]);
    let xx = ellipsoidal_polynomial(s);
    let coeffs = (0..=n)
        .map(|k| {
            CMat::from_row_slice(2, 2, &[-xy.coeff(k), -yy.coeff(k) - a.coeff(k), xx.coeff(k), xy.coeff(k)])
        })
        .collect();
    PhasePoint::new(MatPoly::new(2, coeffs), n).expect("entries have degree ≤ n")
}

/// Residue at infinity of `λ^p det φ(λ) / a(λ)²` for a 2×2 `φ`, as a
/// function on phase space.
fn residue_functional(at: &PhasePoint, alpha: &[f64], p: usize) -> Complex64 {
    let a = a_poly(alpha);
    let phi = at.phi();
    let det = &(&phi.entry(0, 0) * &phi.entry(1, 1)) - &(&phi.entry(0, 1) * &phi.entry(1, 0));
    let num = &det * &Poly::monomial(p, re(1.0));
    crate::algebra::expand_at_infinity(&num, &(&a * &a), -1).coeff(-1)
}

/// `res_∞ λ² det φ(λ) / a(λ)²`, the λ⁻¹ coefficient of the expansion at
/// infinity obtained by long division by `a²`.
pub fn hamiltonian(s: &NeumannState) -> f64 {
    residue_functional(&build_phi(s), &s.alpha, 2).re
}

/// `res_∞ λ det φ(λ) / a(λ)²`; equal to twice [`classical_energy`].
pub fn hamiltonian_linear_reading(s: &NeumannState) -> f64 {
    residue_functional(&build_phi(s), &s.alpha, 1).re
}

/// `½ Σ y_i² + ½ Σ α_i x_i²`
pub fn classical_energy(s: &NeumannState) -> f64 {
    0.5 * dot(&s.y, &s.y) + 0.5 * s.alpha.iter().zip(&s.x).map(|(a, x)| a * x * x).sum::<f64>()
}

/// Differential of `φ ↦ res_∞ λ^p det φ / a²` at any 2×2 phase point.
///
/// `det φ` is the `z⁰` curve coefficient, so this is a fixed combination of
/// the curve coefficient differentials `(0, k)`.
pub fn residue_differential(at: &PhasePoint, alpha: &[f64], p: usize) -> Result<CotangentElement> {
    if at.r() != 2 {
        return Err(Error::DimensionMismatch(format!("need r = 2, got {}", at.r())));
    }
    let n = at.n();
    let a = a_poly(alpha);
    let lowest = -(2 * n as i32 + 1);
    let e = crate::algebra::expand_at_infinity(&Poly::monomial(p, re(1.0)), &(&a * &a), lowest);
    let adj = Adjugate::new(at);
    let mut out = CotangentElement::zero(2, n);
    for k in 0..=2 * n {
        let w = e.coeff(-(k as i32) - 1);
        if w != Complex64::default() {
            out = out.axpy(w, &adj.differential((0, k), n));
        }
    }
    Ok(out)
}

/// `B(λ)` of the Lax pair.
pub fn lax_b(s: &NeumannState, lambda: Complex64) -> CMat {
    lax_b_poly(s).eval(lambda)
}

/// `[[Σ x_i y_i, λ + Σ y_i²], [−Σ x_i², −Σ x_i y_i]]`, the matrix of the
/// Hamiltonian flow of [`hamiltonian_linear_reading`] under [`flow_pencil`].
pub fn hamiltonian_b(s: &NeumannState, lambda: Complex64) -> CMat {
    b_poly(s, 0.0).eval(lambda)
}

fn b_poly(s: &NeumannState, shift: f64) -> MatPoly {
    let xy = dot(&s.x, &s.y);
    let yy = dot(&s.y, &s.y);
    let xx = dot(&s.x, &s.x);
    let b0 = CMat::from_row_slice(2, 2, &[re(xy), re(yy - shift), re(-xx), re(-xy)]);
    let b1 = CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)]);
    MatPoly::new(2, vec![b0, b1])
}

fn lax_b_poly(s: &NeumannState) -> MatPoly {
    b_poly(s, s.alpha.iter().zip(&s.x).map(|(a, x)| a * x * x).sum())
}

fn commutator(b: &MatPoly, s: &NeumannState) -> MatPoly {
    let phi = build_phi(s);
    b.mul(phi.phi()).sub(&phi.phi().mul(b)).with_degree_bound(s.n())
}

/// `[B, φ]` as a matrix polynomial of degree ≤ n.
pub fn lax_commutator(s: &NeumannState) -> MatPoly {
    commutator(&lax_b_poly(s), s)
}

/// `[B_H, φ]` with `B_H` from [`hamiltonian_b`].
pub fn hamiltonian_commutator(s: &NeumannState) -> MatPoly {
    commutator(&b_poly(s, 0.0), s)
}

/// `ẋ = y`, `ẏ = −α x + (Σ α_j x_j² − Σ y_j²) x`
pub fn eom_rhs(s: &NeumannState) -> (Vec<f64>, Vec<f64>) {
    let c = s.alpha.iter().zip(&s.x).map(|(a, x)| a * x * x).sum::<f64>() - dot(&s.y, &s.y);
    let ydot = s.x.iter().zip(&s.alpha).map(|(x, a)| (c - a) * x).collect();
    (s.y.clone(), ydot)
}

/// `max_λ |(φ(s + hv) − φ(s − hv))/2h − [B, φ]|` over the given λ, with `v`
/// from [`eom_rhs`].
pub fn lax_match_residual(s: &NeumannState, lambdas: &[Complex64], h: f64) -> f64 {
    let (dx, dy) = eom_rhs(s);
    let plus = build_phi(&s.moved(&dx, &dy, h));
    let minus = build_phi(&s.moved(&dx, &dy, -h));
    let comm = lax_commutator(s);
    lambdas
        .iter()
        .map(|&l| {
            let fd = (plus.eval(l) - minus.eval(l)) / re(2.0 * h);
            crate::algebra::max_abs(&(fd - comm.eval(l)))
        })
        .fold(0.0, f64::max)
}

/// `(a(λ), 0)`: the pencil member under which [`hamiltonian_linear_reading`]
/// generates `[B_H, φ]` at Neumann points.
pub fn flow_pencil(alpha: &[f64]) -> BracketPencil {
    BracketPencil::new(a_poly(alpha), Complex64::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<NeumannState>,
    pub step: f64,
}

/// Fixed-step RK4 of [`eom_rhs`] for `round(T/step)` steps. States are not
/// reprojected onto the constraints, so their drift measures the integrator.
pub fn integrate(from: &NeumannState, t_end: f64, step: f64) -> Result<NeumannTrajectory> {
    if step <= 0.0 || !step.is_finite() || !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::InvalidInput("need step > 0 and finite T ≥ 0".into()));
    }
    let steps = (t_end / step).round() as usize;
    let mut traj = NeumannTrajectory { times: vec![0.0], states: vec![from.clone()], step };
    let mut s = from.clone();
    for k in 0..steps {
        let (k1x, k1y) = eom_rhs(&s);
        let s2 = s.moved(&k1x, &k1y, step / 2.0);
        let (k2x, k2y) = eom_rhs(&s2);
        let s3 = s.moved(&k2x, &k2y, step / 2.0);
        let (k3x, k3y) = eom_rhs(&s3);
        let s4 = s.moved(&k3x, &k3y, step);
        let (k4x, k4y) = eom_rhs(&s4);
        let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..a.len()).map(|i| a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]).collect()
        };
        s = s.moved(&comb(&k1x, &k2x, &k3x, &k4x), &comb(&k1y, &k2y, &k3y, &k4y), step / 6.0);
        if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
            return Err(Error::IntegrationAborted { time: k as f64 * step, reason: "state left finite range".into() });
        }
        traj.times.push((k + 1) as f64 * step);
        traj.states.push(s.clone());
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannDrifts {
    pub sphere: f64,
    pub tangency: f64,
    pub energy: f64,
    /// Relative drift of the spectral curve of `φ`.
    pub isospectral: f64,
}

pub fn drifts(traj: &NeumannTrajectory) -> NeumannDrifts {
    let e0 = classical_energy(&traj.states[0]);
    let c0 = char_curve(&build_phi(&traj.states[0]));
    let scale = c0.max_abs().max(1.0);
    let mut d = NeumannDrifts { sphere: 0.0, tangency: 0.0, energy: 0.0, isospectral: 0.0 };
    for s in &traj.states {
        let (sp, ta) = s.constraint_defects();
        d.sphere = d.sphere.max(sp);
        d.tangency = d.tangency.max(ta);
        d.energy = d.energy.max((classical_energy(s) - e0).abs());
        d.isospectral = d.isospectral.max(char_curve(&build_phi(s)).max_difference(&c0) / scale);
    }
    d
}

/// λ from the zeros of `Σ x_i² a_i`, z = `Σ x_i y_i a_i(λ)`.
pub fn separation_coordinates(s: &NeumannState, tol: f64) -> Result<DivisorCoordinates> {
    let p = ellipsoidal_polynomial(s);
    let lambdas = poly_roots(&p, tol)?;
    let xy = weighted(s, |i| s.x[i] * s.y[i]);
    let points = lambdas.iter().map(|&l| (l, xy.eval(l))).collect();
    Ok(DivisorCoordinates { points, expected_count: s.n() - 1, genus: genus(2, s.n()), warnings: Vec::new() })
}

/// Whether the real parts of `lambdas` strictly interlace the sorted `α`
/// with one point in each gap.
pub fn interlaces(alpha: &[f64], lambdas: &[Complex64], tol: f64) -> bool {
    let mut a = alpha.to_vec();
    a.sort_by(f64::total_cmp);
    let mut l: Vec<f64> = lambdas.iter().map(|z| z.re).collect();
    if lambdas.iter().any(|z| z.im.abs() > tol) || l.len() + 1 != a.len() {
        return false;
    }
    l.sort_by(f64::total_cmp);
    l.iter().enumerate().all(|(i, &v)| a[i] < v && v < a[i + 1])
}

/// At Neumann points `det φ` vanishes at every `α_i`, so the curve is
/// `z² = a(λ)Q(λ)` of genus `n − 1` and the pencil differentials
/// `λ^k dλ / (a ∂P/∂z)` have poles over the `α_i`. The holomorphic ones are
/// the combinations with numerator `a(λ)λ^m`, `m < n − 1`. Returns the labels
/// `(0, k)`, `k ≤ 2n − 2`, and those combinations as columns.
pub fn holomorphic_combinations(alpha: &[f64]) -> (InvariantBasis, CMat) {
    let n = alpha.len();
    let basis = InvariantBasis::from_labels((0..=2 * n - 2).map(|k| (0, k)).collect());
    let a = a_poly(alpha);
    let e = CMat::from_fn(basis.len(), n - 1, |k, m| (&a * &Poly::monomial(m, Complex64::new(1.0, 0.0))).coeff(k));
    (basis, e)
}

impl NeumannTrajectory {
    /// The same motion as a trajectory of `φ` under [`flow_pencil`].
    pub fn lax_trajectory(&self) -> Trajectory {
        let alpha = self.states.first().map(|s| s.alpha().to_vec()).unwrap_or_default();
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(build_phi).collect(),
            label: None,
            pencil: flow_pencil(&alpha),
            step: self.step,
        }
    }
}

/// Abel sums of the holomorphic differentials along the motion, sampled
/// every `every` steps. They are affine in `t`.
pub fn linearizing_series(traj: &NeumannTrajectory, every: usize, opts: &LinearizingOptions) -> Result<QSeries> {
    let s0 = traj.states.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let (basis, e) = holomorphic_combinations(s0.alpha());
    let lax = traj.lax_trajectory();
    let q = linearizing_along(&lax, every, &SectionChoice::standard(2), &lax.pencil, &basis, None, opts)?;
    Ok(q.combined(&e))
}
