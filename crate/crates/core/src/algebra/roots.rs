use std::f64::consts::TAU;

use num_complex::Complex64;

use super::Poly;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// All complex roots of `p`, with multiplicity, by Aberth–Ehrlich
/// simultaneous iteration.
///
/// Leading coefficients below `tol` relative to the largest coefficient are
/// stripped first. Every returned root has backward error
/// `|p(ρ)| / Σ|a_k||ρ|^k` below `tol`; otherwise the best iterate is carried
/// in [`Error::NoConvergence`].
pub fn poly_roots(p: &Poly, tol: f64) -> Result<Vec<Complex64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let p = p.trim_relative(tol);
    let degree = match p.degree() {
        Some(0) | None => return Err(Error::ConstantPolynomial),
        Some(d) => d,
    };
    // exact zero roots
    let zeros = p.coeffs().iter().take_while(|c| c.norm() == 0.0).count();
    let mut roots = vec![Complex64::default(); zeros];
    if zeros == degree {
        return Ok(roots);
    }
    let lead = p.coeff(degree);
    let monic = Poly::new(p.coeffs()[zeros..].iter().map(|&c| c / lead).collect());
    let found = aberth(&monic)?;
    let worst = found.iter().map(|&z| backward_error(&p, z)).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            backward_error: worst,
            best: found,
        });
    }
    roots.extend(found);
    Ok(roots)
}

/// `|p(z)| / Σ |a_k| |z|^k`
pub fn backward_error(p: &Poly, z: Complex64) -> f64 {
    let r = z.norm();
    let scale = p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
    if scale == 0.0 {
        return 0.0;
    }
    p.eval(z).norm() / scale
}

/// Fujiwara bound on the root moduli of a monic polynomial.
fn fujiwara_bound(monic: &Poly) -> f64 {
    let d = monic.degree().unwrap_or(0);
    (1..=d)
        .map(|k| {
            let c = monic.coeff(d - k).norm();
            let c = if k == d { c / 2.0 } else { c };
            c.powf(1.0 / k as f64)
        })
        .fold(0.0, f64::max)
        * 2.0
}

fn aberth(monic: &Poly) -> Result<Vec<Complex64>> {
    let d = monic.degree().expect("nonconstant");
    let radius = fujiwara_bound(monic).max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            // perturbed circle: irrational angular offset and a mild radial wobble
            let theta = TAU * k as f64 / d as f64 + 0.4;
            let rho = radius * (1.0 + 0.05 * ((k as f64) * 1.3).sin());
            Complex64::from_polar(rho, theta)
        })
        .collect();
    let mut done = vec![false; d];
    let eps = f64::EPSILON;
    for _ in 0..MAX_ITERATIONS {
        for k in 0..d {
            if done[k] {
                continue;
            }
            let (pv, dp) = monic.eval_with_derivative(z[k]);
            if pv.norm() == 0.0 {
                done[k] = true;
                continue;
            }
            let ratio = pv / dp;
            let sum: Complex64 = (0..d)
                .filter(|&j| j != k)
                .map(|j| {
                    let diff = z[k] - z[j];
                    if diff.norm() == 0.0 {
                        Complex64::default()
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            let w = if w.is_finite() { w } else { ratio };
            z[k] -= w;
            if w.norm() <= 4.0 * eps * z[k].norm().max(eps) || backward_error(monic, z[k]) <= 2.0 * eps {
                done[k] = true;
            }
        }
        if done.iter().all(|&b| b) {
            break;
        }
    }
    Ok(z)
}
