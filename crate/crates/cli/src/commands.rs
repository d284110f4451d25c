use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use num_complex::Complex64;
use rand::Rng;

use rpencil::algebra::{c64, match_points, poly_roots, roots_of_unity_nodes, Poly};
use rpencil::flows::{self, free_combinations, linear_fit, linearizing_along, LinearizingOptions, Trajectory};
use rpencil::io::{CurveJson, DivisorJson};
use rpencil::neumann::{self, NeumannState, NeumannTrajectory};
use rpencil::nijenhuis::{
    eigenvalues, eigenvector_residual, normal_form_check, orthogonality_defect, recursion_matrix, spectrum,
    CoordinatePencilTensor,
};
use rpencil::phasespace::{
    bracket_r_form, jacobi_check as fd_jacobi, jacobi_defect, product_differential, tensor_bracket_matrix,
    BracketPencil, CotangentElement, CoordinateFunction, PhasePoint,
};
use rpencil::sample;
use rpencil::sov::{divisor as sov_divisor, divisor_distance, divisor_via_adjugate, SectionChoice};
use rpencil::spectral::{
    casimir_defect, char_curve, char_curve_exact, curve_from_casimir_sweep, InvariantBasis,
};

use crate::input;
use crate::report::Report;
use crate::{Failure, Opts};

type Outcome = Result<Vec<String>, Failure>;

/// Root tolerance for the divisor pipeline.
const ROOT_TOL: f64 = 1e-10;

fn numerical(e: rpencil::Error) -> Failure {
    Failure::Numerical(e.into())
}

fn point(opts: &Opts) -> Result<PhasePoint, Failure> {
    match &opts.input {
        Some(path) => Ok(input::phase_point(path)?),
        None if opts.r == 0 => Err(anyhow!("--r must be at least 1").into()),
        None => Ok(sample::phase_point(&mut sample::rng(opts.seed), opts.r, opts.n)),
    }
}

fn spanning() -> Vec<(String, BracketPencil)> {
    let names = ["a=1", "a=lambda", "b=1"];
    names.iter().map(|s| s.to_string()).zip(BracketPencil::spanning()).collect()
}

fn pencils(opts: &Opts) -> Result<Vec<(String, BracketPencil)>, Failure> {
    match &opts.pencil {
        Some(spec) => Ok(vec![("pencil".into(), input::pencil(spec)?)]),
        None => Ok(spanning()),
    }
}

fn single_pencil(opts: &Opts) -> Result<BracketPencil, Failure> {
    match &opts.pencil {
        Some(spec) => Ok(input::pencil(spec)?),
        None => Ok(BracketPencil::spanning()[0].clone()),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::Input)
}

fn finish(opts: &Opts, mut report: Report, to_stdout: bool) -> Outcome {
    let json = report.sorted_json();
    match &opts.out {
        Some(path) => write(path, &json)?,
        None if to_stdout => print!("{json}"),
        None => {}
    }
    Ok(report.failures().into_iter().map(String::from).collect())
}

fn csv_path(opts: &Opts) -> Option<PathBuf> {
    opts.artifact.clone().or_else(|| opts.out.as_ref().map(|p| p.with_extension("csv")))
}

fn num(s: &mut String, v: f64) {
    let _ = write!(s, ",{v:.16e}");
}

/// JSON artifacts go to `--artifact`, or to stdout when there is none.
fn emit_json<T: serde::Serialize>(opts: &Opts, value: &T) -> Result<bool, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.into()))?;
    s.push('\n');
    match &opts.artifact {
        Some(path) => write(path, &s).map(|_| true),
        None => {
            print!("{s}");
            Ok(false)
        }
    }
}

pub fn curve(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-9);
    let c = char_curve(&p);
    let exact = char_curve_exact(&p);
    let mut report = Report::new(opts.seed);
    report.push("curve.interpolation_vs_adjugate", c.max_difference(&exact) / exact.max_abs().max(1.0), tol);
    let report_to_stdout = emit_json(opts, &CurveJson::from(&exact))?;
    finish(opts, report, report_to_stdout)
}

pub fn divisor(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-8);
    let sec = SectionChoice::standard(p.r());
    let d = sov_divisor(&p, &sec, ROOT_TOL).map_err(numerical)?;
    let mut report = Report::new(opts.seed);
    report.push("divisor.curve_residual", d.curve_residual(&char_curve(&p)), tol);
    report.measure("divisor.adjugate_match", tol, || {
        let a = divisor_via_adjugate(&p, &sec, ROOT_TOL)?;
        Ok(divisor_distance(&d.points, &a.points).unwrap_or(f64::INFINITY))
    });
    let report_to_stdout = emit_json(opts, &DivisorJson::from(&d))?;
    finish(opts, report, report_to_stdout)
}

pub fn bracket_check(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-9);
    let r = p.r();
    let mut g = sample::rng(opts.seed.wrapping_add(1));
    let mut pairs = Vec::new();
    while pairs.len() < 4 {
        let (l0, m0) = (sample::spectral_parameter(&mut g), sample::spectral_parameter(&mut g));
        if (l0 - m0).norm() > 0.1 {
            pairs.push((l0, m0));
        }
    }
    let mut report = Report::new(opts.seed);
    for (name, pencil) in pencils(opts)? {
        report.measure(format!("bracket.{name}"), tol, || {
            let mut worst: f64 = 0.0;
            for &(l0, m0) in &pairs {
                let t = tensor_bracket_matrix(l0, m0, &p, &pencil, 1e-12)?;
                let scale = t.iter().map(|c| c.norm()).fold(f64::MIN_POSITIVE, f64::max);
                for (i, j, k, l) in quads(r) {
                    let f = CoordinateFunction::Evaluation { i, j, at: l0 };
                    let h = CoordinateFunction::Evaluation { i: k, j: l, at: m0 };
                    let v = bracket_r_form(&f, &h, &p, &pencil)?;
                    worst = worst.max((v - t[(i * r + k, j * r + l)]).norm() / scale);
                }
            }
            Ok(worst)
        });
    }
    finish(opts, report, true)
}

fn quads(r: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..r * r * r * r).map(move |x| (x / (r * r * r), (x / (r * r)) % r, (x / r) % r, x % r))
}

type Diff = dyn Fn(&PhasePoint) -> rpencil::Result<CotangentElement>;

pub fn jacobi_check(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-6);
    let h = opts.h.unwrap_or(1e-5);
    let (r, n) = (p.r(), p.n());
    let mut g = sample::rng(opts.seed.wrapping_add(2));
    let coords = CoordinateFunction::all_coefficients(r, n);
    let triples: Vec<_> = (0..8)
        .map(|_| {
            let mut pick = || coords[g.gen_range(0..coords.len())];
            (pick(), pick(), pick())
        })
        .collect();
    let mut ev = || CoordinateFunction::Evaluation {
        i: g.gen_range(0..r),
        j: g.gen_range(0..r),
        at: sample::spectral_parameter(&mut g),
    };
    let prods: Vec<_> = (0..3).map(|_| (ev(), ev())).collect();
    let d: Vec<Box<Diff>> = prods
        .iter()
        .map(|&(a, b)| Box::new(move |q: &PhasePoint| product_differential(&a, &b, q)) as Box<Diff>)
        .collect();
    let mut report = Report::new(opts.seed);
    for (name, pencil) in pencils(opts)? {
        report.measure(format!("jacobi.{name}.coordinates"), tol, || fd_jacobi(&p, &pencil, &triples, h));
        report.measure(format!("jacobi.{name}.products"), tol, || jacobi_defect(&p, &pencil, [&*d[0], &*d[1], &*d[2]], h));
    }
    finish(opts, report, true)
}

pub fn casimir_check(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-8);
    let pencil = match &opts.pencil {
        Some(spec) => input::pencil(spec)?,
        None => {
            let mut g = sample::rng(opts.seed.wrapping_add(3));
            let roots = [sample::spectral_parameter(&mut g), sample::spectral_parameter(&mut g)];
            BracketPencil::new(Poly::from_roots(&roots), c64(0.0, 0.0))
        }
    };
    let zeros = match pencil.a().degree() {
        Some(d) if d > 0 => poly_roots(pencil.a(), 1e-13).map_err(numerical)?,
        _ => Vec::new(),
    };
    let mut report = Report::new(opts.seed);
    let probes = CoordinateFunction::all_coefficients(p.r(), p.n());
    let scale = pencil.a().coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
    for (k, &c0) in zeros.iter().enumerate() {
        report.measure(format!("casimir.zero{k}"), tol, || casimir_defect(c0, &p, &pencil, &probes, 1e-9 * scale));
    }
    report.measure("casimir.sweep", tol, || {
        let pts = roots_of_unity_nodes(p.r() * p.n() + 1, 0.9, 0.3);
        let sw = curve_from_casimir_sweep(&p, &pts, tol)?;
        let exact = char_curve_exact(&p);
        Ok(sw.max_difference(&exact) / exact.max_abs().max(1.0))
    });
    finish(opts, report, true)
}

pub fn nijenhuis_check(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-5);
    let h = opts.h.unwrap_or(1e-6);
    let sec = SectionChoice::standard(p.r());
    let d = sov_divisor(&p, &sec, ROOT_TOL).map_err(numerical)?;
    let [one, lam, b] = BracketPencil::spanning();
    let mut pairs = vec![("lambda/1".to_string(), lam.clone(), one.clone()), ("b/1".into(), b.clone(), one.clone())];
    let mut family = vec![lam, one.clone(), b];
    if let Some(spec) = &opts.pencil {
        let extra = input::pencil(spec)?;
        pairs.push(("pencil/1".into(), extra.clone(), one));
        family.push(extra);
    }
    let mut report = Report::new(opts.seed);
    for (name, p1, p2) in &pairs {
        let t1 = CoordinatePencilTensor::from_pencil(&d.points, p1);
        let t2 = CoordinatePencilTensor::from_pencil(&d.points, p2);
        let (nm, rho) = match (recursion_matrix(&t1, &t2), eigenvalues(&t1, &t2)) {
            (Ok(nm), Ok(rho)) => (nm, rho),
            (Err(e), _) | (_, Err(e)) => {
                report.measure(format!("nijenhuis.{name}.spectrum"), tol, || Err(e));
                continue;
            }
        };
        let doubled: Vec<Complex64> = rho.iter().flat_map(|&x| [x, x]).collect();
        let scale = doubled.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let spec_err = match_points(&spectrum(&nm), &doubled).unwrap_or(f64::INFINITY) / scale;
        report.push(format!("nijenhuis.{name}.spectrum"), spec_err, tol);
        report.push(format!("nijenhuis.{name}.eigenvectors"), eigenvector_residual(&nm, &rho) / scale, tol);
        report.measure(format!("nijenhuis.{name}.orthogonality"), tol, || {
            let mut worst: f64 = 0.0;
            for i in 0..nm.nrows() {
                for j in 0..nm.nrows() {
                    if i / 2 != j / 2 {
                        match orthogonality_defect(&t1, &t2, i, j) {
                            Ok(v) => worst = worst.max(v),
                            Err(rpencil::Error::SameEigenvalue) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
            Ok(worst)
        });
    }
    report.measure("nijenhuis.normal_form", tol, || Ok(normal_form_check(&p, &family, &sec, h, ROOT_TOL)?.defect()));
    finish(opts, report, true)
}

fn flow_label(opts: &Opts, p: &PhasePoint, pencil: &BracketPencil) -> Result<(InvariantBasis, (usize, usize)), Failure> {
    let basis = InvariantBasis::dynamical(p, pencil, 1e-9).map_err(numerical)?;
    let label = match opts.label.or_else(|| basis.get(0)) {
        Some(l) => l,
        None => return Err(Failure::Numerical(anyhow!("no dynamical invariant for this pencil"))),
    };
    Ok((basis, label))
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let (r, n) = (traj.states[0].r(), traj.states[0].n());
    let mut s = String::from("t");
    for k in 0..=n {
        for i in 0..r {
            for j in 0..r {
                let _ = write!(s, ",re(phi[{k}][{i}][{j}]),im(phi[{k}][{i}][{j}])");
            }
        }
    }
    s.push('\n');
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let _ = write!(s, "{t:.16e}");
        for k in 0..=n {
            for i in 0..r {
                for j in 0..r {
                    let c = st.coordinate(i, j, k);
                    num(&mut s, c.re);
                    num(&mut s, c.im);
                }
            }
        }
        s.push('\n');
    }
    s
}

fn run_flow(opts: &Opts, label: (usize, usize), p: &PhasePoint, pencil: &BracketPencil, t_end: f64) -> Result<Trajectory, Failure> {
    match flows::integrate(label, p, pencil, t_end, opts.step) {
        Ok(t) => Ok(t),
        Err(aborted) => {
            if let Some(path) = csv_path(opts) {
                write(&path, &trajectory_csv(&aborted.trajectory))?;
            }
            Err(numerical(aborted.into()))
        }
    }
}

pub fn flow(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-8);
    let t_end = opts.t_end.unwrap_or(1.0);
    let pencil = single_pencil(opts)?;
    let (basis, label) = flow_label(opts, &p, &pencil)?;
    let traj = run_flow(opts, label, &p, &pencil, t_end)?;
    if let Some(path) = csv_path(opts) {
        write(&path, &trajectory_csv(&traj))?;
    }
    let mut report = Report::new(opts.seed);
    report.push("flow.isospectral", flows::isospectral_drift(&traj), tol);
    if let Some(&other) = basis.labels().iter().rev().find(|&&l| l != label) {
        report.measure("flow.commutativity", tol, || flows::flow_commutativity(&p, &pencil, label, other, t_end, opts.step));
    }
    finish(opts, report, true)
}

pub fn linearize(opts: &Opts) -> Outcome {
    let p = point(opts)?;
    let tol = opts.tol.unwrap_or(1e-6);
    let t_end = opts.t_end.unwrap_or(2.0);
    let pencil = single_pencil(opts)?;
    let (basis, label) = flow_label(opts, &p, &pencil)?;
    let traj = run_flow(opts, label, &p, &pencil, t_end)?;
    let sec = SectionChoice::standard(p.r());
    let lin = LinearizingOptions { seed: opts.seed, ..LinearizingOptions::default() };
    let qs = linearizing_along(&traj, opts.every, &sec, &pencil, &basis, None, &lin).map_err(numerical)?;
    let e = free_combinations(&p, &pencil, &basis, 1e-9).map_err(numerical)?;
    let qc = qs.combined(&e);
    let m = e.ncols();
    if let Some(path) = csv_path(opts) {
        let mut s = String::from("t");
        for i in 0..m {
            let _ = write!(s, ",re(q[{i}]),im(q[{i}])");
        }
        s.push('\n');
        for (row, t) in qc.times.iter().enumerate() {
            let _ = write!(s, "{t:.16e}");
            for i in 0..m {
                let v = qc.values[row][i];
                num(&mut s, v.re);
                num(&mut s, v.im);
            }
            s.push('\n');
        }
        write(&path, &s)?;
    }
    let mut report = Report::new(opts.seed);
    for i in 0..m {
        report.push(format!("linearize.fit{i}"), linear_fit(&qc.times, &qc.component(i)).1, tol);
    }
    finish(opts, report, true)
}

fn neumann_csv(traj: &NeumannTrajectory) -> String {
    let n = traj.states[0].n();
    let mut s = String::from("t");
    for i in 0..n {
        let _ = write!(s, ",x[{i}]");
    }
    for i in 0..n {
        let _ = write!(s, ",y[{i}]");
    }
    s.push_str(",energy\n");
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let _ = write!(s, "{t:.16e}");
        for &v in st.x().iter().chain(st.y()) {
            num(&mut s, v);
        }
        num(&mut s, neumann::classical_energy(st));
        s.push('\n');
    }
    s
}

pub fn neumann(opts: &Opts) -> Outcome {
    let tol = opts.tol.unwrap_or(1e-8);
    let t_end = opts.t_end.unwrap_or(10.0);
    let s0 = match &opts.input {
        Some(path) => input::neumann_state(path)?,
        None => {
            let mut g = sample::rng(opts.seed);
            let alpha = match &opts.alpha {
                Some(a) => a.clone(),
                None => {
                    let mut a: Vec<f64> = (0..opts.n).map(|_| g.gen_range(-2.0..2.0)).collect();
                    a.sort_by(f64::total_cmp);
                    a
                }
            };
            NeumannState::random(&mut g, alpha).map_err(|e| Failure::Input(e.into()))?
        }
    };
    let traj = neumann::integrate(&s0, t_end, opts.step).map_err(|e| Failure::Input(e.into()))?;
    if let Some(path) = csv_path(opts) {
        write(&path, &neumann_csv(&traj))?;
    }
    let d = neumann::drifts(&traj);
    let mut report = Report::new(opts.seed);
    report.push("neumann.sphere", d.sphere, tol);
    report.push("neumann.tangency", d.tangency, tol);
    report.push("neumann.energy", d.energy, tol);
    report.push("neumann.isospectral", d.isospectral, tol);
    let last = traj.states.last().expect("trajectory starts with the initial state");
    let lams = [c64(0.4, 0.0), c64(1.3, 0.2), c64(-2.0, 0.5)];
    report.push("neumann.lax_match", neumann::lax_match_residual(last, &lams, opts.h.unwrap_or(1e-3)), tol);
    let mut interlaced = None;
    report.measure("neumann.separation", tol, || {
        let a = neumann::separation_coordinates(&s0, ROOT_TOL)?;
        let b = sov_divisor(&neumann::build_phi(&s0), &SectionChoice::standard(2), ROOT_TOL)?;
        interlaced = Some(neumann::interlaces(s0.alpha(), &a.lambdas(), 1e-9));
        Ok(divisor_distance(&a.points, &b.points).unwrap_or(f64::INFINITY))
    });
    if let Some(ok) = interlaced {
        report.push("neumann.interlacing", if ok { 0.0 } else { 1.0 }, tol);
    }
    finish(opts, report, true)
}
