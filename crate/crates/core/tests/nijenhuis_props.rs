use num_complex::Complex64;
use proptest::prelude::*;

use rpencil::algebra::match_points;
use rpencil::nijenhuis::{eigenvalues, recursion_matrix, spectrum, CoordinatePencilTensor};
use rpencil::phasespace::BracketPencil;
use rpencil::sample;
use rpencil::sov::{divisor, SectionChoice};

fn points(seed: u64, n: usize) -> Vec<(Complex64, Complex64)> {
    let p = sample::phase_point(&mut sample::rng(seed), 2, n);
    divisor(&p, &SectionChoice::standard(2), 1e-10).unwrap().points
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectrum_comes_in_pairs(seed in any::<u64>(), n in 2usize..6) {
        let pts = points(seed, n);
        let mut g = sample::rng(seed ^ 7);
        let t1 = CoordinatePencilTensor::from_pencil(&pts, &sample::pencil(&mut g, n));
        let t2 = CoordinatePencilTensor::from_pencil(&pts, &BracketPencil::spanning()[0]);
        let rho = eigenvalues(&t1, &t2).unwrap();
        let doubled: Vec<Complex64> = rho.iter().flat_map(|&x| [x, x]).collect();
        let scale = doubled.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let m = recursion_matrix(&t1, &t2).unwrap();
        prop_assert!(match_points(&spectrum(&m), &doubled).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn eigenvalues_are_linear_in_the_pencil(seed in any::<u64>(), n in 2usize..6) {
        let pts = points(seed, n);
        let mut g = sample::rng(seed ^ 9);
        let (p1, p2) = (sample::pencil(&mut g, n), sample::pencil(&mut g, n));
        let t2 = CoordinatePencilTensor::from_pencil(&pts, &sample::pencil(&mut g, n));
        let rho = |p: &BracketPencil| eigenvalues(&CoordinatePencilTensor::from_pencil(&pts, p), &t2).unwrap();
        let (a, b, s) = (rho(&p1), rho(&p2), rho(&p1.add(&p2)));
        for k in 0..s.len() {
            prop_assert!((s[k] - a[k] - b[k]).norm() <= 1e-10 * (1.0 + s[k].norm()));
        }
    }
}
