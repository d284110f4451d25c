use std::f64::consts::TAU;

use num_complex::Complex64;

use super::Poly;
use crate::error::{Error, Result};

/// `count` points `radius·e^{2πik/count + iφ}`.
pub fn roots_of_unity_nodes(count: usize, radius: f64, phase: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, TAU * k as f64 / count as f64 + phase))
        .collect()
}

/// Greedy Leja ordering: start at the point of largest modulus, then keep
/// picking the point maximising the product of distances to those chosen.
fn leja_order(xs: &[Complex64]) -> Vec<usize> {
    let m = xs.len();
    let mut order = Vec::with_capacity(m);
    let mut used = vec![false; m];
    let mut logprod = vec![0.0f64; m];
    let first = (0..m)
        .max_by(|&a, &b| xs[a].norm().total_cmp(&xs[b].norm()))
        .unwrap_or(0);
    if m == 0 {
        return order;
    }
    order.push(first);
    used[first] = true;
    for _ in 1..m {
        let last = xs[*order.last().unwrap()];
        let mut best = None;
        for k in 0..m {
            if used[k] {
                continue;
            }
            logprod[k] += (xs[k] - last).norm().ln();
            if best.is_none_or(|b: usize| logprod[k] > logprod[b]) {
                best = Some(k);
            }
        }
        let b = best.unwrap();
        used[b] = true;
        order.push(b);
    }
    order
}

/// Unique polynomial of degree ≤ `degree` through the samples.
///
/// Uses Newton divided differences on `degree + 1` Leja-ordered samples;
/// any further samples are checked against the interpolant and a relative
/// residual above `tol` is reported as [`Error::InconsistentSamples`] (the
/// usual symptom of a wrong degree bound).
pub fn poly_from_samples(points: &[(Complex64, Complex64)], degree: usize, tol: f64) -> Result<Poly> {
    let needed = degree + 1;
    if points.len() < needed {
        return Err(Error::TooFewSamples { degree, needed, got: points.len() });
    }
    let xs: Vec<Complex64> = points.iter().map(|p| p.0).collect();
    let xscale = xs.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for i in 0..xs.len() {
        for j in 0..i {
            if (xs[i] - xs[j]).norm() <= 1e-14 * xscale {
                return Err(Error::RepeatedAbscissa(xs[i]));
            }
        }
    }
    let order = leja_order(&xs);
    let (used, rest) = order.split_at(needed);
    let nx: Vec<Complex64> = used.iter().map(|&i| points[i].0).collect();
    let mut dd: Vec<Complex64> = used.iter().map(|&i| points[i].1).collect();
    for level in 1..needed {
        for k in (level..needed).rev() {
            dd[k] = (dd[k] - dd[k - 1]) / (nx[k] - nx[k - level]);
        }
    }
    // nested multiplication of the Newton form into monomial coefficients
    let mut coeffs = vec![Complex64::default(); needed];
    coeffs[0] = dd[needed - 1];
    for (len, k) in (1..).zip((0..needed - 1).rev()) {
        // coeffs ← coeffs·(λ − x_k) + dd[k]
        for i in (0..len).rev() {
            let c = coeffs[i];
            coeffs[i + 1] += c;
            coeffs[i] = -c * nx[k];
        }
        coeffs[0] += dd[k];
    }
    let p = Poly::new(coeffs);
    if !rest.is_empty() {
        let yscale = points.iter().map(|p| p.1.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let residual = rest
            .iter()
            .map(|&i| (p.eval(points[i].0) - points[i].1).norm() / yscale)
            .fold(0.0, f64::max);
        if residual > tol {
            return Err(Error::InconsistentSamples { degree, residual });
        }
    }
    Ok(p)
}

/// Samples `f` at `degree + 1` scaled roots of unity and interpolates.
pub fn interpolate_fn<F>(degree: usize, radius: f64, f: F) -> Poly
where
    F: Fn(Complex64) -> Complex64,
{
    let nodes = roots_of_unity_nodes(degree + 1, radius, 0.0);
    let samples: Vec<_> = nodes.into_iter().map(|x| (x, f(x))).collect();
    poly_from_samples(&samples, degree, f64::INFINITY).expect("distinct nodes by construction")
}
