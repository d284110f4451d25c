//! Hamiltonian flows of the spectral invariants, RK4 trajectories, sheet
//! tracking on the spectral curve and the linearising coordinates.
//!
//! For a label `(j, k)` the linearising coordinate is
//! `Q = −Σ_μ ∫_{λ₀}^{λ_μ} λ^k z^j / (a(λ) ∂P/∂z) dλ`, the `H_{(j,k)}`-derivative
//! of `Σ_μ ∫ z(λ, H)/a(λ) dλ` (b = 0).

use std::cell::OnceCell;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, MatPoly};
use crate::error::{Error, Result};
use crate::phasespace::{poisson_tensor_apply, BracketPencil, PhasePoint};
use crate::sov::{divisor, DivisorCoordinates, SectionChoice};
use crate::spectral::{char_curve, curve_coefficient_differential, InvariantBasis, SpectralCurve};

/// `Λ_{a,b}(dH)` for the curve coefficient `label`; `ḟ = {f, H}` along it.
pub fn hamiltonian_vector_field(label: (usize, usize), at: &PhasePoint, pencil: &BracketPencil) -> Result<MatPoly> {
    poisson_tensor_apply(&curve_coefficient_differential(label, at), at, pencil)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub label: Option<(usize, usize)>,
    pub pencil: BracketPencil,
    pub step: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("trajectories hold the initial state")
    }
}

/// A failed integration keeps what was computed.
#[derive(Debug)]
pub struct Aborted {
    pub trajectory: Trajectory,
    pub error: Error,
}

impl From<Box<Aborted>> for Error {
    fn from(a: Box<Aborted>) -> Self {
        Error::IntegrationAborted { time: *a.trajectory.times.last().unwrap_or(&0.0), reason: a.error.to_string() }
    }
}

/// Fixed-step classical RK4 of an arbitrary field on the coefficients of
/// `φ`; `round(T/step)` steps.
pub fn integrate_field<F>(
    from: &PhasePoint,
    field: F,
    t_end: f64,
    step: f64,
    pencil: &BracketPencil,
    label: Option<(usize, usize)>,
) -> std::result::Result<Trajectory, Box<Aborted>>
where
    F: Fn(&PhasePoint) -> Result<MatPoly>,
{
    let mut traj = Trajectory { times: vec![0.0], states: vec![from.clone()], label, pencil: pencil.clone(), step };
    if step <= 0.0 || !step.is_finite() {
        return Err(Box::new(Aborted { trajectory: traj, error: Error::InvalidInput("step must be positive".into()) }));
    }
    let steps = (t_end / step).round() as usize;
    let h = Complex64::new(step, 0.0);
    let mut y = from.clone();
    for s in 0..steps {
        let rk = || -> Result<PhasePoint> {
            let k1 = field(&y)?;
            let k2 = field(&y.displaced(&k1, h * 0.5))?;
            let k3 = field(&y.displaced(&k2, h * 0.5))?;
            let k4 = field(&y.displaced(&k3, h))?;
            let incr = k1.add(&k2.scale(Complex64::new(2.0, 0.0))).add(&k3.scale(Complex64::new(2.0, 0.0))).add(&k4);
            Ok(y.displaced(&incr, h / 6.0))
        };
        match rk() {
            Ok(next) => {
                y = next;
                traj.times.push((s + 1) as f64 * step);
                traj.states.push(y.clone());
            }
            Err(error) => return Err(Box::new(Aborted { trajectory: traj, error })),
        }
    }
    Ok(traj)
}

/// Flow of the curve coefficient `label` under `pencil`.
pub fn integrate(
    label: (usize, usize),
    from: &PhasePoint,
    pencil: &BracketPencil,
    t_end: f64,
    step: f64,
) -> std::result::Result<Trajectory, Box<Aborted>> {
    integrate_field(from, |p| hamiltonian_vector_field(label, p, pencil), t_end, step, pencil, Some(label))
}

/// `max_t max_(j,k) |c(t) − c(0)| / max(1, max|c(0)|)`
pub fn isospectral_drift(traj: &Trajectory) -> f64 {
    let c0 = char_curve(&traj.states[0]);
    let scale = c0.max_abs().max(1.0);
    traj.states.iter().map(|s| char_curve(s).max_difference(&c0) / scale).fold(0.0, f64::max)
}

/// `|φ_{ij} − φ_{ji}|` after flowing `H_i` then `H_j` versus the reverse,
/// each for time `T`.
pub fn flow_commutativity(
    at: &PhasePoint,
    pencil: &BracketPencil,
    first: (usize, usize),
    second: (usize, usize),
    t_end: f64,
    step: f64,
) -> Result<f64> {
    let ij = integrate(second, integrate(first, at, pencil, t_end, step)?.last(), pencil, t_end, step)?;
    let ji = integrate(first, integrate(second, at, pencil, t_end, step)?.last(), pencil, t_end, step)?;
    Ok(ij.last().phi().sub(ji.last().phi()).max_abs())
}

/// Samples of one sheet `z(λ)` along a path.
#[derive(Clone, Debug)]
pub struct CurveBranch {
    pub curve: SpectralCurve,
    pub path: Vec<Complex64>,
    pub z_values: Vec<Complex64>,
}

const MAX_BISECTIONS: usize = 14;
const TRACK_TOL: f64 = 1e-10;

fn sheet_near(curve: &SpectralCurve, lambda: Complex64, prev: Complex64) -> Result<Option<Complex64>> {
    let roots = curve.z_roots(lambda, TRACK_TOL)?;
    if roots.len() == 1 {
        return Ok(Some(roots[0]));
    }
    let mut d: Vec<(f64, Complex64)> = roots.iter().map(|&z| ((z - prev).norm(), z)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = 1.0 + prev.norm();
    let sep = (0..roots.len())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (roots[i] - roots[j]).norm())
        .fold(f64::INFINITY, f64::min);
    if sep <= 1e-7 * scale {
        return Err(Error::BranchCollision(lambda));
    }
    // accept only an unambiguous continuation
    Ok((d[0].0 < 0.25 * d[1].0).then_some(d[0].1))
}

/// Continues the sheet through `z_from` over `λ_from` to `λ_to`, bisecting
/// the step until the continuation is unambiguous.
fn track_step(curve: &SpectralCurve, l_from: Complex64, z_from: Complex64, l_to: Complex64, depth: usize) -> Result<Complex64> {
    if let Some(z) = sheet_near(curve, l_to, z_from)? {
        return Ok(z);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::BranchCollision(l_to));
    }
    let mid = (l_from + l_to) * 0.5;
    let z_mid = track_step(curve, l_from, z_from, mid, depth + 1)?;
    track_step(curve, mid, z_mid, l_to, depth + 1)
}

fn check_on_curve(curve: &SpectralCurve, lambda: Complex64, z: Complex64, tol: f64) -> Result<()> {
    let res = curve.eval(lambda, z).norm();
    if res > tol * curve.magnitude(lambda, z).max(1.0) {
        return Err(Error::InvalidInput(format!("starting point is off the curve (residual {res:e})")));
    }
    Ok(())
}

/// Nearest-root continuation along a polyline of samples.
pub fn branch_track_path(curve: &SpectralCurve, path: &[Complex64], z0: Complex64, tol: f64) -> Result<CurveBranch> {
    let first = *path.first().ok_or_else(|| Error::InvalidInput("empty path".into()))?;
    check_on_curve(curve, first, z0, tol)?;
    let mut z_values = vec![z0];
    for w in path.windows(2) {
        let z = track_step(curve, w[0], *z_values.last().unwrap(), w[1], 0)?;
        z_values.push(z);
    }
    Ok(CurveBranch { curve: curve.clone(), path: path.to_vec(), z_values })
}

/// Straight path `λ₀ → λ₁` with `samples ≥ 2` equally spaced points.
pub fn branch_track(
    curve: &SpectralCurve,
    lambda0: Complex64,
    lambda1: Complex64,
    z0: Complex64,
    samples: usize,
    tol: f64,
) -> Result<CurveBranch> {
    let m = samples.max(2);
    let path: Vec<Complex64> = (0..m).map(|i| lambda0 + (lambda1 - lambda0) * (i as f64 / (m - 1) as f64)).collect();
    branch_track_path(curve, &path, z0, tol)
}

/// Composite Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    panels: usize,
    order: usize,
    nodes: Vec<(f64, f64)>,
}

impl QuadratureRule {
    pub fn new(panels: usize, order: usize) -> Self {
        let panels = panels.max(1);
        let order = order.max(1);
        let gl = GaussLegendre::new(NonZeroUsize::new(order).expect("positive order"));
        let mut base: Vec<(f64, f64)> = gl.as_node_weight_pairs().iter().map(|&(x, w)| (x, w)).collect();
        base.sort_by(|a, b| a.0.total_cmp(&b.0));
        let width = 1.0 / panels as f64;
        let nodes = (0..panels)
            .flat_map(|p| {
                let lo = p as f64 * width;
                base.iter().map(move |&(x, w)| (lo + (x + 1.0) * 0.5 * width, w * 0.5 * width))
            })
            .collect();
        QuadratureRule { panels, order, nodes }
    }

    /// Same panels, twice the nodes per panel.
    pub fn refined(&self) -> Self {
        QuadratureRule::new(self.panels, 2 * self.order)
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::new(8, 12)
    }
}

#[derive(Clone, Debug)]
pub struct LinearizingOptions {
    pub rule: QuadratureRule,
    pub tol: f64,
    /// Relative agreement between the rule and its refinement per segment.
    pub quad_tol: f64,
    pub seed: u64,
    pub max_detours: usize,
}

impl Default for LinearizingOptions {
    fn default() -> Self {
        LinearizingOptions { rule: QuadratureRule::default(), tol: 1e-8, quad_tol: 1e-11, seed: 17, max_detours: 8 }
    }
}

const MAX_QUAD_BISECTIONS: usize = 24;

fn integrand(
    curve: &SpectralCurve,
    a: &crate::algebra::Poly,
    labels: &[(usize, usize)],
    lambda: Complex64,
    z: Complex64,
) -> Result<Vec<Complex64>> {
    let av = a.eval(lambda);
    let scale = a.coeffs().iter().enumerate().map(|(k, c)| c.norm() * lambda.norm().powi(k as i32)).sum::<f64>();
    if av.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::PencilZeroOnPath(lambda));
    }
    let denom = av * curve.eval_dz(lambda, z);
    Ok(labels.iter().map(|&(j, k)| lambda.powu(k as u32) * z.powu(j as u32) / denom).collect())
}

fn integrate_segment_once(
    curve: &SpectralCurve,
    a: &crate::algebra::Poly,
    labels: &[(usize, usize)],
    (p, q): (Complex64, Complex64),
    z_start: Complex64,
    rule: &QuadratureRule,
) -> Result<(Vec<Complex64>, Complex64)> {
    let mut acc = vec![Complex64::default(); labels.len()];
    let dl = q - p;
    let mut z = z_start;
    let mut l_prev = p;
    for &(s, w) in rule.nodes() {
        let l = p + dl * s;
        z = track_step(curve, l_prev, z, l, 0)?;
        l_prev = l;
        for (acc_i, v) in acc.iter_mut().zip(integrand(curve, a, labels, l, z)?) {
            *acc_i += v * dl * w;
        }
    }
    Ok((acc, track_step(curve, l_prev, z, q, 0)?))
}

/// Bisects until the rule and its refinement agree to `tol`. Near a branch
/// point the integrand has an inverse square-root singularity, which a
/// fixed rule resolves poorly.
#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    curve: &SpectralCurve,
    a: &crate::algebra::Poly,
    labels: &[(usize, usize)],
    seg: (Complex64, Complex64),
    z_start: Complex64,
    rule: &QuadratureRule,
    fine: &QuadratureRule,
    tol: f64,
    depth: usize,
) -> Result<(Vec<Complex64>, Complex64)> {
    let (coarse, _) = integrate_segment_once(curve, a, labels, seg, z_start, rule)?;
    let (v, z_end) = integrate_segment_once(curve, a, labels, seg, z_start, fine)?;
    let err = coarse.iter().zip(&v).map(|(x, y)| (x - y).norm() / (1.0 + y.norm())).fold(0.0, f64::max);
    if err <= tol || depth == 0 {
        return Ok((v, z_end));
    }
    let mid = (seg.0 + seg.1) * 0.5;
    let (mut left, z_mid) = integrate_segment(curve, a, labels, (seg.0, mid), z_start, rule, fine, tol, depth - 1)?;
    let (right, z_end) = integrate_segment(curve, a, labels, (mid, seg.1), z_mid, rule, fine, tol, depth - 1)?;
    for (l, r) in left.iter_mut().zip(right) {
        *l += r;
    }
    Ok((left, z_end))
}

/// `∫ ω_label` along a polyline starting on sheet `z_start`; returns the
/// integrals and the sheet value at the end.
fn integrate_polyline(
    curve: &SpectralCurve,
    a: &crate::algebra::Poly,
    labels: &[(usize, usize)],
    vertices: &[Complex64],
    z_start: Complex64,
    opts: &LinearizingOptions,
) -> Result<(Vec<Complex64>, Complex64)> {
    let fine = opts.rule.refined();
    let mut acc = vec![Complex64::default(); labels.len()];
    let mut z = z_start;
    for seg in vertices.windows(2) {
        let (v, z_end) =
            integrate_segment(curve, a, labels, (seg[0], seg[1]), z, &opts.rule, &fine, opts.quad_tol, MAX_QUAD_BISECTIONS)?;
        for (acc_i, vi) in acc.iter_mut().zip(v) {
            *acc_i += vi;
        }
        z = z_end;
    }
    Ok((acc, z))
}

/// Branch points of the curve and zeros of the pencil polynomial, computed
/// on first use.
struct Singularities<'a> {
    curve: &'a SpectralCurve,
    a: &'a crate::algebra::Poly,
    branch: OnceCell<Vec<Complex64>>,
    all: OnceCell<Vec<Complex64>>,
}

impl<'a> Singularities<'a> {
    fn new(curve: &'a SpectralCurve, a: &'a crate::algebra::Poly) -> Self {
        Singularities { curve, a, branch: OnceCell::new(), all: OnceCell::new() }
    }

    fn init(&self) -> Result<(&[Complex64], &[Complex64])> {
        if self.all.get().is_none() {
            let branch = self.curve.branch_points(TRACK_TOL)?;
            let mut all = branch.clone();
            if self.a.degree().is_some_and(|d| d > 0) {
                all.extend(crate::algebra::poly_roots(self.a, TRACK_TOL)?);
            }
            let _ = self.branch.set(branch);
            let _ = self.all.set(all);
        }
        Ok((self.branch.get().expect("set above"), self.all.get().expect("set above")))
    }

    /// Polylines that leave `from`, circle one nearby branch point once and
    /// end at `to`; a divisor point that turned back at a branch point
    /// between samples changed sheet this way. The radius is half the
    /// distance to the next singular point, so no other one is enclosed.
    fn loops(&self, from: Complex64, to: Complex64) -> Result<Vec<Vec<Complex64>>> {
        let (branch, all) = self.init()?;
        let mid = (from + to) * 0.5;
        let mut near: Vec<Complex64> = branch.to_vec();
        near.sort_by(|x, y| (x - mid).norm().total_cmp(&(y - mid).norm()));
        let mut paths = Vec::new();
        for &b in near.iter().take(3) {
            let clearance = all
                .iter()
                .map(|&s| (s - b).norm())
                .filter(|&d| d > 1e-8 * (1.0 + b.norm()))
                .fold(f64::INFINITY, f64::min);
            let rho = if clearance.is_finite() { 0.5 * clearance } else { 1.0 };
            let away = b - mid;
            let u = if away.norm() > 0.0 { away / away.norm() } else { Complex64::new(1.0, 0.0) };
            let i = Complex64::i();
            paths.push(vec![from, b + i * u * rho, b + u * rho, b - i * u * rho, to]);
        }
        Ok(paths)
    }
}

/// `∫` from `(λ_a, z_a)` to `(λ_b, z_b)`: straight first, then loops around
/// nearby branch points, then random single-midpoint detours, until the
/// path lands on the sheet `z_b`.
#[allow(clippy::too_many_arguments)]
fn integrate_to_point<R: Rng>(
    sing: &Singularities,
    labels: &[(usize, usize)],
    from: (Complex64, Complex64),
    to: (Complex64, Complex64),
    opts: &LinearizingOptions,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let (curve, a) = (sing.curve, sing.a);
    let span = (to.0 - from.0).norm().max(1e-3);
    let mut last_err = Error::SheetMismatch(to.0);
    let attempt = |vertices: &[Complex64], last_err: &mut Error| -> Result<Option<Vec<Complex64>>> {
        match integrate_polyline(curve, a, labels, vertices, from.1, opts) {
            Ok((v, z_end)) if (z_end - to.1).norm() <= 1e-6 * (1.0 + to.1.norm()) => Ok(Some(v)),
            Ok(_) => {
                *last_err = Error::SheetMismatch(to.0);
                Ok(None)
            }
            Err(e @ (Error::BranchCollision(_) | Error::PencilZeroOnPath(_))) => {
                *last_err = e;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    if let Some(v) = attempt(&[from.0, to.0], &mut last_err)? {
        return Ok(v);
    }
    for path in sing.loops(from.0, to.0)? {
        if let Some(v) = attempt(&path, &mut last_err)? {
            return Ok(v);
        }
    }
    for _ in 0..opts.max_detours {
        let mid = (from.0 + to.0) * 0.5 + crate::sample::complex(rng) * span;
        if let Some(v) = attempt(&[from.0, mid, to.0], &mut last_err)? {
            return Ok(v);
        }
    }
    Err(last_err)
}

fn require_b_zero(pencil: &BracketPencil) -> Result<()> {
    match pencil.b() {
        Some(b) if b == Complex64::default() => Ok(()),
        Some(_) => Err(Error::NonZeroB),
        None => Err(Error::NonConstantB),
    }
}

/// `Q_i` for every label of `basis`, integrating from the base point
/// `(λ₀, z₀)` on the curve to each divisor point.
pub fn linearizing_coordinates(
    div: &DivisorCoordinates,
    curve: &SpectralCurve,
    pencil: &BracketPencil,
    basis: &InvariantBasis,
    base: (Complex64, Complex64),
    opts: &LinearizingOptions,
) -> Result<Vec<Complex64>> {
    require_b_zero(pencil)?;
    check_on_curve(curve, base.0, base.1, opts.tol)?;
    let mut rng = crate::sample::rng(opts.seed);
    let sing = Singularities::new(curve, pencil.a());
    let mut q = vec![Complex64::default(); basis.len()];
    for &p in &div.points {
        let v = integrate_to_point(&sing, basis.labels(), base, p, opts, &mut rng)?;
        for (qi, vi) in q.iter_mut().zip(v) {
            *qi -= vi;
        }
    }
    Ok(q)
}

/// Change of `Q` between two nearby divisors on the same curve, along
/// short paths between nearest-neighbour matched points.
pub fn linearizing_increment(
    from: &[(Complex64, Complex64)],
    to: &[(Complex64, Complex64)],
    curve: &SpectralCurve,
    pencil: &BracketPencil,
    basis: &InvariantBasis,
    opts: &LinearizingOptions,
) -> Result<Vec<Complex64>> {
    require_b_zero(pencil)?;
    if from.len() != to.len() {
        return Err(Error::DivisorCollision);
    }
    let mut rng = crate::sample::rng(opts.seed);
    let sing = Singularities::new(curve, pencil.a());
    let mut used = vec![false; to.len()];
    let mut dq = vec![Complex64::default(); basis.len()];
    for &p in from {
        let (idx, _) = to
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, x)| (k, (x.0 - p.0).norm() + (x.1 - p.1).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::DivisorCollision)?;
        used[idx] = true;
        let v = integrate_to_point(&sing, basis.labels(), p, to[idx], opts, &mut rng)?;
        for (qi, vi) in dq.iter_mut().zip(v) {
            *qi -= vi;
        }
    }
    Ok(dq)
}

/// `Q(t)` sampled along a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QSeries {
    pub times: Vec<f64>,
    /// `values[m][i]` is `Q_i(t_m)`.
    pub values: Vec<Vec<Complex64>>,
    pub divisors: Vec<Vec<(Complex64, Complex64)>>,
}

impl QSeries {
    pub fn component(&self, i: usize) -> Vec<Complex64> {
        self.values.iter().map(|v| v[i]).collect()
    }

    /// `Q·E` at every time.
    pub fn combined(&self, e: &CMat) -> QSeries {
        let values = self
            .values
            .iter()
            .map(|q| (0..e.ncols()).map(|s| (0..e.nrows()).map(|i| q[i] * e[(i, s)]).sum()).collect())
            .collect();
        QSeries { times: self.times.clone(), values, divisors: self.divisors.clone() }
    }
}

/// Columns spanning the label combinations that move on a symplectic leaf:
/// the row space of `[Λ(dH_1) … Λ(dH_L)]`. Along the flow of `H_j`,
/// `d/dt (Q·E)_s = E_{js}`, constant in time even when the Casimirs of
/// `pencil` mix several labels.
pub fn free_combinations(at: &PhasePoint, pencil: &BracketPencil, basis: &InvariantBasis, tol: f64) -> Result<CMat> {
    let fields = basis
        .labels()
        .iter()
        .map(|&l| hamiltonian_vector_field(l, at, pencil))
        .collect::<Result<Vec<_>>>()?;
    let rows: usize = fields.first().map(|f| f.coeffs().len() * at.r() * at.r()).unwrap_or(0);
    let ft = CMat::from_fn(basis.len(), rows, |l, idx| {
        let r2 = at.r() * at.r();
        let (k, e) = (idx / r2, idx % r2);
        fields[l].coeff(k)[(e / at.r(), e % at.r())]
    });
    let svd = ft.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::InvalidInput("singular value decomposition failed".into()))?;
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol * top).collect();
    Ok(CMat::from_fn(basis.len(), keep.len(), |i, s| u[(i, keep[s])]))
}

/// `Q(t)` by continuation: `Q(t₀)` from the base point (zero when `base` is
/// `None`), then increments along short paths between consecutive divisors
/// taken every `every` steps. The curve is that of the initial state.
pub fn linearizing_along(
    traj: &Trajectory,
    every: usize,
    sec: &SectionChoice,
    pencil: &BracketPencil,
    basis: &InvariantBasis,
    base: Option<(Complex64, Complex64)>,
    opts: &LinearizingOptions,
) -> Result<QSeries> {
    let curve = char_curve(&traj.states[0]);
    let every = every.max(1);
    let mut times = Vec::new();
    let mut values: Vec<Vec<Complex64>> = Vec::new();
    let mut divisors: Vec<Vec<(Complex64, Complex64)>> = Vec::new();
    for idx in (0..traj.states.len()).step_by(every) {
        let d = divisor(&traj.states[idx], sec, opts.tol)?;
        let q = match (values.last(), divisors.last()) {
            (Some(prev), Some(prev_d)) => {
                let dq = linearizing_increment(prev_d, &d.points, &curve, pencil, basis, opts)?;
                prev.iter().zip(dq).map(|(a, b)| a + b).collect()
            }
            _ => match base {
                Some(b) => linearizing_coordinates(&d, &curve, pencil, basis, b, opts)?,
                None => vec![Complex64::default(); basis.len()],
            },
        };
        times.push(traj.times[idx]);
        values.push(q);
        divisors.push(d.points);
    }
    Ok(QSeries { times, values, divisors })
}

/// Least-squares fit `v ≈ c₀ + c₁ t`; returns `(c₁, max |residual|)`.
pub fn linear_fit(times: &[f64], values: &[Complex64]) -> (Complex64, f64) {
    let m = times.len() as f64;
    if times.len() < 2 {
        return (Complex64::default(), 0.0);
    }
    let tm = times.iter().sum::<f64>() / m;
    let vm = values.iter().sum::<Complex64>() / m;
    let stt: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    let stv: Complex64 = times.iter().zip(values).map(|(t, v)| (v - vm) * (t - tm)).sum();
    let slope = if stt > 0.0 { stv / stt } else { Complex64::default() };
    let resid = times
        .iter()
        .zip(values)
        .map(|(t, v)| (v - (vm + slope * (t - tm))).norm())
        .fold(0.0, f64::max);
    (slope, resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::c64;
    use std::collections::BTreeMap;

    fn sqrt_curve() -> SpectralCurve {
        // z² − λ
        let mut c = BTreeMap::new();
        c.insert((2, 0), c64(1.0, 0.0));
        c.insert((0, 1), c64(-1.0, 0.0));
        SpectralCurve::new(2, 1, c).unwrap()
    }

    #[test]
    fn square_root_continuation() {
        let b = branch_track(&sqrt_curve(), c64(1.0, 0.0), c64(4.0, 0.0), c64(1.0, 0.0), 20, 1e-10).unwrap();
        assert!((b.z_values.last().unwrap() - c64(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn monodromy_flips_sign() {
        let path: Vec<Complex64> = (0..=64).map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0)).collect();
        let b = branch_track_path(&sqrt_curve(), &path, c64(1.0, 0.0), 1e-10).unwrap();
        assert!((b.z_values.last().unwrap() - c64(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn scalar_sheet_is_phi() {
        let p = PhasePoint::from_coeffs(vec![
            crate::algebra::CMat::from_element(1, 1, c64(0.5, 0.0)),
            crate::algebra::CMat::from_element(1, 1, c64(2.0, -1.0)),
        ])
        .unwrap();
        let c = char_curve(&p);
        let b = branch_track(&c, c64(0.0, 0.0), c64(1.0, 1.0), c64(0.5, 0.0), 5, 1e-10).unwrap();
        for (l, z) in b.path.iter().zip(&b.z_values) {
            assert!((p.eval(*l)[(0, 0)] - z).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        let s: f64 = QuadratureRule::new(3, 5).nodes().iter().map(|n| n.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_fit_exact_line() {
        let t = [0.0, 0.5, 1.0, 1.5];
        let v: Vec<Complex64> = t.iter().map(|&x| c64(1.0, 2.0) + c64(-0.5, 0.25) * x).collect();
        let (slope, res) = linear_fit(&t, &v);
        assert!((slope - c64(-0.5, 0.25)).norm() < 1e-14 && res < 1e-14);
    }

    #[test]
    fn casimir_flow_is_stationary() {
        let mut g = crate::sample::rng(3);
        let p = crate::sample::phase_point(&mut g, 2, 2);
        // trace coefficients are Casimirs of every structure
        let traj = integrate((1, 0), &p, &BracketPencil::spanning()[0], 0.1, 0.01).unwrap();
        assert!(traj.last().phi().sub(p.phi()).max_abs() < 1e-14);
    }
}
