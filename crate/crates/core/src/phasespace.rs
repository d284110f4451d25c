//! Matrix-polynomial phase space, its trace–residue dual, the splitting
//! `R = P₊ − P₋`, and the pencil of Poisson brackets in three computable
//! forms: the R-matrix form on differentials, the tensor form with the
//! rational r-matrix, and the Poisson tensor `Λ_{a,b}` acting on cocycles.
//!
//! Conventions. The pairing is `<c, v> = coefficient of λ^{-1} in tr(c·v)`.
//! All three forms are normalised to the same structure, the one whose
//! divisor coordinates satisfy `{λ_μ, z_μ} = a(λ_μ) + b z_μ`:
//!
//! * R-form: `½<φ, [R(a df), dg] + [df, R(a dg)]> − (b/2)(<R(Df), Dg> + <D'f, R(D'g)>)`
//!   with `Df = φ df`, `D'f = df φ`;
//! * tensor form: `{φ(λ) ⊗, φ(μ)} = [Π/(μ−λ), φ(λ)⊗(a(μ) + (b/2)φ(μ)) + (a(λ) + (b/2)φ(λ))⊗φ(μ)]`;
//! * Poisson tensor: `{f, g} = <df, Λ(dg)>` with
//!   `Λ(c) = a P₊[φ,c] + (b/2)(φ P₊[φ,c] + P₊[φ,c] φ) − [φ, P₊(a c + (b/2)(φc + cφ))]`.

use num_complex::Complex64;

use crate::algebra::{unit_matrix, CMat, LaurentMat, MatPoly, Poly};
use crate::error::{Error, Result};

/// A point `φ(λ) = Σ_{k≤n} φ_k λ^k` of the phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    phi: MatPoly,
    n: usize,
}

impl PhasePoint {
    /// Pads `phi` to exactly `n + 1` coefficients; coefficients above `n`
    /// must be exactly zero.
    pub fn new(phi: MatPoly, n: usize) -> Result<Self> {
        for k in n + 1..phi.coeffs().len() {
            if phi.coeffs()[k].iter().any(|c| *c != Complex64::default()) {
                return Err(Error::InvalidInput(format!(
                    "coefficient of λ^{k} is nonzero but the degree bound is {n}"
                )));
            }
        }
        Ok(PhasePoint { phi: phi.with_degree_bound(n), n })
    }

    pub fn from_coeffs(coeffs: Vec<CMat>) -> Result<Self> {
        let n = coeffs.len().checked_sub(1).ok_or_else(|| Error::InvalidInput("no coefficients".into()))?;
        let r = coeffs[0].nrows();
        if coeffs.iter().any(|c| c.nrows() != r || c.ncols() != r) {
            return Err(Error::DimensionMismatch("coefficient matrices must all be r×r".into()));
        }
        Ok(PhasePoint { phi: MatPoly::new(r, coeffs), n })
    }

    pub fn r(&self) -> usize {
        self.phi.r()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> &MatPoly {
        &self.phi
    }

    pub fn eval(&self, x: Complex64) -> CMat {
        self.phi.eval(x)
    }

    /// Complex dimension `r²(n+1)`.
    pub fn dimension(&self) -> usize {
        self.r() * self.r() * (self.n + 1)
    }

    /// `(φ_k)_{ij}`
    pub fn coordinate(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.phi.coeffs()[k][(i, j)]
    }

    /// `φ + s·E_ij λ^k`
    pub fn perturbed(&self, i: usize, j: usize, k: usize, s: Complex64) -> PhasePoint {
        let mut phi = self.phi.clone();
        phi.coeffs_mut()[k][(i, j)] += s;
        PhasePoint { phi, n: self.n }
    }

    /// `φ + s·v`, truncated to the degree bound.
    pub fn displaced(&self, v: &MatPoly, s: Complex64) -> PhasePoint {
        PhasePoint { phi: self.phi.axpy(s, v).with_degree_bound(self.n), n: self.n }
    }

    /// Constant conjugation `g φ g⁻¹`.
    pub fn conjugated(&self, g: &CMat) -> Result<PhasePoint> {
        let inv = g.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular conjugating matrix".into()))?;
        let coeffs = self.phi.coeffs().iter().map(|c| g * c * &inv).collect();
        Ok(PhasePoint { phi: MatPoly::new(self.r(), coeffs), n: self.n })
    }

    /// Iterates `(i, j, k)` over every coefficient coordinate.
    pub fn coordinate_indices(&self) -> impl Iterator<Item = (usize, usize, usize)> {
        let r = self.r();
        let n = self.n;
        (0..=n).flat_map(move |k| (0..r).flat_map(move |i| (0..r).map(move |j| (i, j, k))))
    }
}

/// A cotangent vector: matrix Laurent polynomial over exponents `−n−1 ..= −1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentElement {
    c: LaurentMat,
    n: usize,
}

impl CotangentElement {
    /// Restricts `x` to the window `−n−1 ..= −1`, which is all the pairing
    /// with degree-`n` polynomials can see.
    pub fn from_laurent(x: &LaurentMat, n: usize) -> Self {
        CotangentElement { c: x.truncate(-(n as i32) - 1, -1), n }
    }

    pub fn zero(r: usize, n: usize) -> Self {
        CotangentElement { c: LaurentMat::zeros(r, -(n as i32) - 1, -1), n }
    }

    pub fn as_laurent(&self) -> &LaurentMat {
        &self.c
    }

    pub fn r(&self) -> usize {
        self.c.r()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficient matrix of `λ^{-k-1}`, the slot dual to `φ_k`.
    pub fn slot(&self, k: usize) -> CMat {
        self.c.coeff(-(k as i32) - 1)
    }

    pub fn slot_mut(&mut self, k: usize) -> &mut CMat {
        self.c.coeff_mut(-(k as i32) - 1)
    }

    pub fn add(&self, other: &CotangentElement) -> CotangentElement {
        CotangentElement { c: self.c.add(&other.c), n: self.n }
    }

    pub fn scale(&self, s: Complex64) -> CotangentElement {
        CotangentElement { c: self.c.scale(s), n: self.n }
    }

    pub fn axpy(&self, s: Complex64, other: &CotangentElement) -> CotangentElement {
        CotangentElement { c: self.c.add(&other.c.scale(s)), n: self.n }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.max_abs()
    }
}

/// Pencil parameters `(a(λ), b)` selecting `Λ_{a,b}`.
///
/// Public constructors only admit constant `b`. A polynomial `b` exists
/// solely to reproduce the failure of the Jacobi identity outside that
/// family and is reachable through [`BracketPencil::with_polynomial_b_unchecked`].
#[derive(Clone, Debug, PartialEq)]
pub struct BracketPencil {
    a: Poly,
    b: Poly,
}

impl BracketPencil {
    pub fn new(a: Poly, b: Complex64) -> Self {
        BracketPencil { a, b: Poly::constant(b) }
    }

    /// `(1, 0)`, `(λ, 0)`, `(0, 1)`.
    pub fn spanning() -> [BracketPencil; 3] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        [
            BracketPencil::new(Poly::one(), zero),
            BracketPencil::new(Poly::monomial(1, one), zero),
            BracketPencil::new(Poly::zero(), one),
        ]
    }

    #[doc(hidden)]
    pub fn with_polynomial_b_unchecked(a: Poly, b: Poly) -> Self {
        BracketPencil { a, b }
    }

    pub fn a(&self) -> &Poly {
        &self.a
    }

    /// `Some(b)` for the admissible family.
    pub fn b(&self) -> Option<Complex64> {
        self.b.is_constant().then(|| self.b.coeff(0))
    }

    fn b_poly(&self) -> &Poly {
        &self.b
    }

    fn constant_b(&self) -> Result<Complex64> {
        self.b().ok_or(Error::NonConstantB)
    }

    /// `a(λ) + b z`, the coefficient of `∂_λ ∧ ∂_z` on the surface.
    pub fn surface_coefficient(&self, lambda: Complex64, z: Complex64) -> Complex64 {
        self.a.eval(lambda) + self.b.eval(lambda) * z
    }

    pub fn add(&self, other: &BracketPencil) -> BracketPencil {
        BracketPencil { a: &self.a + &other.a, b: &self.b + &other.b }
    }

    pub fn scale(&self, s: Complex64) -> BracketPencil {
        BracketPencil { a: self.a.scale(s), b: self.b.scale(s) }
    }

    /// Checks `deg a ≤ n + 1`.
    pub fn check_degree(&self, n: usize) -> Result<()> {
        match self.a.degree() {
            Some(d) if d > n + 1 => Err(Error::InvalidInput(format!(
                "pencil polynomial has degree {d}, above the bound n + 1 = {}",
                n + 1
            ))),
            _ => Ok(()),
        }
    }
}

/// Linear coordinate on the phase space (0-based matrix indices).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordinateFunction {
    /// `(φ_k)_{ij}`
    Coefficient { i: usize, j: usize, k: usize },
    /// `φ_{ij}(λ₀)`
    Evaluation { i: usize, j: usize, at: Complex64 },
}

impl CoordinateFunction {
    pub fn value(&self, p: &PhasePoint) -> Complex64 {
        match *self {
            CoordinateFunction::Coefficient { i, j, k } => p.coordinate(i, j, k),
            CoordinateFunction::Evaluation { i, j, at } => p.eval(at)[(i, j)],
        }
    }

    fn validate(&self, r: usize, n: usize) -> Result<()> {
        let (i, j) = match *self {
            CoordinateFunction::Coefficient { i, j, k } => {
                if k > n {
                    return Err(Error::InvalidInput(format!("coefficient index {k} above degree bound {n}")));
                }
                (i, j)
            }
            CoordinateFunction::Evaluation { i, j, .. } => (i, j),
        };
        if i >= r || j >= r {
            return Err(Error::DimensionMismatch(format!("entry ({i}, {j}) outside {r}×{r}")));
        }
        Ok(())
    }

    /// Every coefficient coordinate of an `(r, n)` point.
    pub fn all_coefficients(r: usize, n: usize) -> Vec<CoordinateFunction> {
        (0..=n)
            .flat_map(|k| (0..r).flat_map(move |i| (0..r).map(move |j| CoordinateFunction::Coefficient { i, j, k })))
            .collect()
    }
}

/// Σ over exponents of `tr(x_e y_{−1−e})`: the λ^{-1} coefficient of `tr(x·y)`
/// without forming the product.
fn residue_pairing(x: &LaurentMat, y: &LaurentMat) -> Complex64 {
    let mut acc = Complex64::default();
    for (idx, xe) in x.coeffs().iter().enumerate() {
        let e = x.lo() + idx as i32;
        let ye = y.coeff(-1 - e);
        // tr(A B) = Σ_ij A_ij B_ji
        for i in 0..xe.nrows() {
            for j in 0..xe.ncols() {
                acc += xe[(i, j)] * ye[(j, i)];
            }
        }
    }
    acc
}

/// `<c, v> = res tr(c v)`
pub fn pairing(c: &CotangentElement, v: &MatPoly) -> Result<Complex64> {
    if c.r() != v.r() {
        return Err(Error::DimensionMismatch(format!("cotangent r = {}, tangent r = {}", c.r(), v.r())));
    }
    if v.degree_bound() > c.n() && v.coeffs()[c.n() + 1..].iter().any(|m| m.iter().any(|x| x.norm() != 0.0)) {
        return Err(Error::DimensionMismatch(format!("tangent degree exceeds bound {}", c.n())));
    }
    Ok(residue_pairing(c.as_laurent(), &LaurentMat::from_matpoly(v)))
}

/// Differential of a linear coordinate; exact for every tangent direction.
///
/// `Coefficient(i,j,k) ↦ E_ji λ^{-k-1}`,
/// `Evaluation(i,j,λ₀) ↦ E_ji Σ_{k≤n} λ₀^k λ^{-k-1}`.
pub fn differential(f: &CoordinateFunction, at: &PhasePoint) -> Result<CotangentElement> {
    let (r, n) = (at.r(), at.n());
    f.validate(r, n)?;
    let mut out = CotangentElement::zero(r, n);
    match *f {
        CoordinateFunction::Coefficient { i, j, k } => {
            *out.slot_mut(k) = unit_matrix(r, j, i);
        }
        CoordinateFunction::Evaluation { i, j, at: x } => {
            let mut pw = Complex64::new(1.0, 0.0);
            for k in 0..=n {
                *out.slot_mut(k) = unit_matrix(r, j, i) * pw;
                pw *= x;
            }
        }
    }
    Ok(out)
}

/// `(P₊x, P₋x)`; `x = plus + minus` exactly.
pub fn split(x: &LaurentMat) -> (MatPoly, LaurentMat) {
    (x.p_plus(), x.p_minus())
}

/// `R = P₊ − P₋`
pub fn r_apply(x: &LaurentMat) -> LaurentMat {
    let (plus, minus) = split(x);
    LaurentMat::from_matpoly(&plus).sub(&minus)
}

/// Bracket of two cotangent vectors at `φ` through the R-matrix form.
///
/// Accepts a polynomial `b`, in which case `b` sits inside `R` as
/// `−½(<R(b Df), Dg> + <D'f, R(b D'g)>)`.
pub fn bracket_covectors(
    df: &CotangentElement,
    dg: &CotangentElement,
    at: &PhasePoint,
    pencil: &BracketPencil,
) -> Result<Complex64> {
    if df.r() != at.r() || dg.r() != at.r() {
        return Err(Error::DimensionMismatch("covector and point sizes differ".into()));
    }
    let phi = LaurentMat::from_matpoly(at.phi());
    let df = df.as_laurent();
    let dg = dg.as_laurent();
    let half = Complex64::new(0.5, 0.0);

    let mut total = Complex64::default();
    if !pencil.a().is_zero() {
        let adf = r_apply(&df.mul_scalar_poly(pencil.a()));
        let adg = r_apply(&dg.mul_scalar_poly(pencil.a()));
        let inner = adf.commutator(dg).add(&df.commutator(&adg));
        total += residue_pairing(&phi, &inner) * half;
    }
    if !pencil.b_poly().is_zero() {
        let b = pencil.b_poly();
        let df_left = phi.mul(df);
        let dg_left = phi.mul(dg);
        let df_right = df.mul(&phi);
        let dg_right = dg.mul(&phi);
        let left = residue_pairing(&r_apply(&df_left.mul_scalar_poly(b)), &dg_left);
        let right = residue_pairing(&df_right, &r_apply(&dg_right.mul_scalar_poly(b)));
        total -= (left + right) * half;
    }
    Ok(total)
}

/// `{f, g}(φ)` for linear coordinates, computed entirely in Laurent algebra.
pub fn bracket_r_form(
    f: &CoordinateFunction,
    g: &CoordinateFunction,
    at: &PhasePoint,
    pencil: &BracketPencil,
) -> Result<Complex64> {
    pencil.check_degree(at.n())?;
    let df = differential(f, at)?;
    let dg = differential(g, at)?;
    bracket_covectors(&df, &dg, at, pencil)
}

fn permutation_operator(r: usize) -> CMat {
    let mut p = CMat::zeros(r * r, r * r);
    for i in 0..r {
        for j in 0..r {
            p[(i * r + j, j * r + i)] = Complex64::new(1.0, 0.0);
        }
    }
    p
}

/// The full `r²×r²` matrix `{φ(λ₀) ⊗, φ(μ₀)}`; entry `(i r + k, j r + l)` is
/// `{φ_ij(λ₀), φ_kl(μ₀)}`.
pub fn tensor_bracket_matrix(
    lambda0: Complex64,
    mu0: Complex64,
    at: &PhasePoint,
    pencil: &BracketPencil,
    tol: f64,
) -> Result<CMat> {
    let b = pencil.constant_b()?;
    pencil.check_degree(at.n())?;
    let scale = 1.0 + lambda0.norm().max(mu0.norm());
    if (lambda0 - mu0).norm() < tol * scale {
        return Err(Error::CoincidentPoints);
    }
    let r = at.r();
    let id = CMat::identity(r, r);
    let pl = at.eval(lambda0);
    let pm = at.eval(mu0);
    let half_b = b * 0.5;
    let left = &pl.kronecker(&(&id * pencil.a().eval(mu0) + &pm * half_b));
    let right = (&id * pencil.a().eval(lambda0) + &pl * half_b).kronecker(&pm);
    let x = left + right;
    let p = permutation_operator(r);
    Ok((&p * &x - &x * &p) / (mu0 - lambda0))
}

/// `{φ_ij(λ₀), φ_kl(μ₀)}` from the tensor form (0-based indices). Coincident
/// evaluation points are rejected; the R-form handles them.
#[allow(clippy::too_many_arguments)]
pub fn bracket_tensor_form(
    i: usize,
    j: usize,
    lambda0: Complex64,
    k: usize,
    l: usize,
    mu0: Complex64,
    at: &PhasePoint,
    pencil: &BracketPencil,
    tol: f64,
) -> Result<Complex64> {
    let r = at.r();
    if i.max(j).max(k).max(l) >= r {
        return Err(Error::DimensionMismatch(format!("index outside {r}×{r}")));
    }
    let m = tensor_bracket_matrix(lambda0, mu0, at, pencil, tol)?;
    Ok(m[(i * r + k, j * r + l)])
}

/// `Λ_{a,b}(c)` as a tangent vector of degree ≤ n, from the `P₊` form.
pub fn poisson_tensor_apply(c: &CotangentElement, at: &PhasePoint, pencil: &BracketPencil) -> Result<MatPoly> {
    let (plus, _) = poisson_tensor_parts(c, at, pencil)?;
    Ok(plus)
}

/// Same tangent vector from the `P₋` form; agrees with
/// [`poisson_tensor_apply`] up to rounding.
pub fn poisson_tensor_apply_minus_form(
    c: &CotangentElement,
    at: &PhasePoint,
    pencil: &BracketPencil,
) -> Result<MatPoly> {
    let (_, minus) = poisson_tensor_parts(c, at, pencil)?;
    Ok(minus)
}

fn poisson_tensor_parts(c: &CotangentElement, at: &PhasePoint, pencil: &BracketPencil) -> Result<(MatPoly, MatPoly)> {
    if c.r() != at.r() {
        return Err(Error::DimensionMismatch("covector and point sizes differ".into()));
    }
    let b = pencil.constant_b()?;
    pencil.check_degree(at.n())?;
    let n = at.n();
    let half_b = b * 0.5;
    let phi = LaurentMat::from_matpoly(at.phi());
    let c = c.as_laurent();
    let comm = phi.commutator(c);
    let sym = phi.mul(c).add(&c.mul(&phi));
    let inner = c.mul_scalar_poly(pencil.a()).add(&sym.scale(half_b));

    let comm_plus = LaurentMat::from_matpoly(&comm.p_plus());
    let plus_form = comm_plus
        .mul_scalar_poly(pencil.a())
        .add(&phi.mul(&comm_plus).add(&comm_plus.mul(&phi)).scale(half_b))
        .sub(&phi.commutator(&LaurentMat::from_matpoly(&inner.p_plus())));

    let comm_minus = comm.p_minus();
    let minus_form = phi
        .commutator(&inner.p_minus())
        .sub(&comm_minus.mul_scalar_poly(pencil.a()))
        .sub(&phi.mul(&comm_minus).add(&comm_minus.mul(&phi)).scale(half_b));

    let window = |x: &LaurentMat| MatPoly::new(at.r(), (0..=n as i32).map(|e| x.coeff(e)).collect());
    Ok((window(&plus_form), window(&minus_form)))
}

/// `<df, Λ(dg)>`
pub fn bracket_via_tensor(
    df: &CotangentElement,
    dg: &CotangentElement,
    at: &PhasePoint,
    pencil: &BracketPencil,
) -> Result<Complex64> {
    pairing(df, &poisson_tensor_apply(dg, at, pencil)?)
}

/// Central finite-difference differential of an arbitrary holomorphic
/// function of `φ`, one real step `h` per coefficient coordinate.
pub fn fd_differential<F>(f: F, at: &PhasePoint, h: f64) -> CotangentElement
where
    F: Fn(&PhasePoint) -> Complex64,
{
    let mut out = CotangentElement::zero(at.r(), at.n());
    let step = Complex64::new(h, 0.0);
    for (i, j, k) in at.coordinate_indices() {
        let d = (f(&at.perturbed(i, j, k, step)) - f(&at.perturbed(i, j, k, -step))) / (2.0 * h);
        out.slot_mut(k)[(j, i)] += d;
    }
    out
}

/// Largest cyclic Jacobi sum `{f,{g,k}} + {g,{k,f}} + {k,{f,g}}` over the
/// given triples; outer brackets differentiate the inner bracket by central
/// finite differences with step `h`.
pub fn jacobi_check(
    at: &PhasePoint,
    pencil: &BracketPencil,
    triples: &[(CoordinateFunction, CoordinateFunction, CoordinateFunction)],
    h: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (f, g, k) in triples {
        let df = differential(f, at)?;
        let dg = differential(g, at)?;
        let dk = differential(k, at)?;
        let inner = |x: &CotangentElement, y: &CotangentElement| {
            fd_differential(|p| bracket_covectors(x, y, p, pencil).unwrap_or_default(), at, h)
        };
        let sum = bracket_covectors(&df, &inner(&dg, &dk), at, pencil)?
            + bracket_covectors(&dg, &inner(&dk, &df), at, pencil)?
            + bracket_covectors(&dk, &inner(&df, &dg), at, pencil)?;
        worst = worst.max(sum.norm());
    }
    Ok(worst)
}

/// `d(fg) = f dg + g df` for two linear coordinates.
pub fn product_differential(f: &CoordinateFunction, g: &CoordinateFunction, at: &PhasePoint) -> Result<CotangentElement> {
    let df = differential(f, at)?;
    let dg = differential(g, at)?;
    Ok(dg.scale(f.value(at)).axpy(g.value(at), &df))
}

/// Cyclic Jacobi sum for three functions given by their differentials as
/// functions of the point. Inner brackets are differentiated by central
/// finite differences with step `h`.
pub fn jacobi_defect<F>(at: &PhasePoint, pencil: &BracketPencil, d: [&F; 3], h: f64) -> Result<f64>
where
    F: Fn(&PhasePoint) -> Result<CotangentElement> + ?Sized,
{
    let base: Vec<CotangentElement> = d.iter().map(|f| f(at)).collect::<Result<_>>()?;
    let inner = |x: &F, y: &F| {
        fd_differential(
            |p| match (x(p), y(p)) {
                (Ok(dx), Ok(dy)) => bracket_covectors(&dx, &dy, p, pencil).unwrap_or_default(),
                _ => Complex64::default(),
            },
            at,
            h,
        )
    };
    let sum = bracket_covectors(&base[0], &inner(d[1], d[2]), at, pencil)?
        + bracket_covectors(&base[1], &inner(d[2], d[0]), at, pencil)?
        + bracket_covectors(&base[2], &inner(d[0], d[1]), at, pencil)?;
    Ok(sum.norm())
}
