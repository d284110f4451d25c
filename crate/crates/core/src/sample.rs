//! Seeded random test data.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{CMat, MatPoly, Poly};
use crate::phasespace::{BracketPencil, PhasePoint};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real and imaginary parts uniform in `[-1, 1]`.
pub fn complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

pub fn matrix<R: Rng>(rng: &mut R, r: usize) -> CMat {
    CMat::from_fn(r, r, |_, _| complex(rng))
}

/// `φ` with `r²(n+1)` independent entries.
pub fn phase_point<R: Rng>(rng: &mut R, r: usize, n: usize) -> PhasePoint {
    let coeffs = (0..=n).map(|_| matrix(rng, r)).collect();
    PhasePoint::new(MatPoly::new(r, coeffs), n).expect("degree bound respected")
}

/// Real entries, for real flows.
pub fn real_phase_point<R: Rng>(rng: &mut R, r: usize, n: usize) -> PhasePoint {
    let coeffs = (0..=n)
        .map(|_| CMat::from_fn(r, r, |_, _| Complex64::new(rng.gen_range(-1.0..=1.0), 0.0)))
        .collect();
    PhasePoint::new(MatPoly::new(r, coeffs), n).expect("degree bound respected")
}

/// `deg a ≤ max_degree`, constant `b`.
pub fn pencil<R: Rng>(rng: &mut R, max_degree: usize) -> BracketPencil {
    let a = Poly::new((0..=max_degree).map(|_| complex(rng)).collect());
    BracketPencil::new(a, complex(rng))
}

/// A point of the unit disc shifted away from the origin.
pub fn spectral_parameter<R: Rng>(rng: &mut R) -> Complex64 {
    complex(rng) * 0.8
}
