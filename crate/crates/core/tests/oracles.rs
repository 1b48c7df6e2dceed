//! Frozen reference values: closed forms first, then cross-solver values
//! computed once by exact transfer matrices and bisection.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use hicontrast::exact1d::*;
use hicontrast::limitspec::{LimitBranch, LimitProblem};
use hicontrast::radial3d::{ball_eigenvalue, radial_operator, sphere_limit_spectrum, sphere_mode};
use hicontrast::*;

// roots of 2cot(√λ/2) = √λ, then the S₁ values 4π²·n², interleaved
const DIRICHLET_S2: [f64; 3] = [2.960695537579868, 46.93944731976788, 165.75523139028184];
const NEUMANN_S2: [f64; 3] = [16.46343346, 96.55736812, 254.63642620];
const SPHERE_1: f64 = 10.7107065794;

fn sym() -> Geometry1D {
    Geometry1D::single(-0.5, 0.5).unwrap()
}

#[test]
fn dirichlet_s2_roots() {
    let r = char_roots(&CharacteristicFunction::DirichletS2 { a: -0.5, b: 0.5 }, 200.0).unwrap();
    assert_eq!(r.len(), 3);
    assert_relative_eq!(r[0], DIRICHLET_S2[0], max_relative = 1e-12);
    assert_relative_eq!(r[1], DIRICHLET_S2[1], max_relative = 1e-12);
    assert_relative_eq!(r[2], DIRICHLET_S2[2], max_relative = 1e-12);
    for l in r {
        let s = l.sqrt();
        assert!((2.0 / (s / 2.0).tan() - s).abs() < 1e-9);
    }
}

#[test]
fn dirichlet_s1_is_4pi2_multiples() {
    let s = limit_spectrum_1d(&sym(), &BoundaryKind::Dirichlet, 200.0).unwrap();
    let s1: Vec<f64> = s.s1.iter().map(|m| m.lambda).collect();
    assert_eq!(s1.len(), 2);
    assert_relative_eq!(s1[0], 4.0 * PI * PI, max_relative = 1e-14);
    assert_relative_eq!(s1[1], 16.0 * PI * PI, max_relative = 1e-14);
    assert_eq!(s.certificate, Rationality::Rational { n0: 1, m0: 1 });
    for m in &s.s1 {
        assert!(interface_flux(&m.eigenfunction, -0.5, 0.5).abs() < 1e-10);
        assert!(m.eigenfunction.eval(0.0).abs() < 1e-15);
    }
    for m in &s.s2 {
        // constant on the inclusion
        let c = m.eigenfunction.eval(0.0);
        assert!(c.abs() > 1e-3);
        assert_relative_eq!(m.eigenfunction.eval(0.3), c, max_relative = 1e-12);
        assert_relative_eq!(m.eigenfunction.eval(-0.45), c, max_relative = 1e-12);
    }
}

#[test]
fn rigid_transfer_is_the_union_of_both_branches() {
    let v = limit_transfer_eigenvalues(&sym(), &BoundaryKind::Dirichlet, 170.0).unwrap();
    let want = [DIRICHLET_S2[0], 4.0 * PI * PI, DIRICHLET_S2[1], 16.0 * PI * PI, DIRICHLET_S2[2]];
    assert_eq!(v.len(), want.len());
    for (a, b) in v.iter().zip(want) {
        assert_relative_eq!(*a, b, max_relative = 1e-8);
    }
}

#[test]
fn small_contrast_transfer_values() {
    let s = transfer_spectrum_1d(&sym(), 1e-3, &BoundaryKind::Dirichlet, 47.0).unwrap();
    // one inclusion-dominated branch (≈ 39.4) sits between the bounded ones
    assert_eq!(s.eigenvalues.len(), 3);
    assert!((s.eigenvalues[0] - 2.96016).abs() < 1e-5);
    assert!((s.eigenvalues[1] - 39.399).abs() < 1e-3);
    assert!((s.eigenvalues[2] - 46.9127).abs() < 1e-4);
}

#[test]
fn neumann_roots() {
    let r = char_roots(&CharacteristicFunction::NeumannS2 { a: -0.5, b: 0.5 }, 300.0).unwrap();
    for (a, b) in r.iter().zip(NEUMANN_S2) {
        assert_relative_eq!(*a, b, max_relative = 1e-9);
    }
    // the characteristic function at λ = π²/4 (tan(π/4)·2 + π/2)
    let v = eval_char(&CharacteristicFunction::NeumannS2 { a: -0.5, b: 0.5 }, PI * PI / 4.0).unwrap();
    assert_relative_eq!(v, 2.0 + PI / 2.0, max_relative = 1e-14);
}

#[test]
fn neumann_zero_flux_modes_on_the_grid() {
    let med = ContrastMedium::new(Geometry::Line(sym()), 0.0, BoundaryKind::Neumann, 1e-3).unwrap();
    let s = LimitProblem::<f64>::new(&med).unwrap().spectrum(260.0).unwrap();
    let zf: Vec<f64> = s.branch(LimitBranch::ZeroFlux).iter().map(|p| p.lambda).collect();
    assert!(zf.len() >= 3);
    // second-order scheme: relative error ≈ λh²/12
    for (n, l) in [1.0, 3.0, 5.0].iter().zip(&zf) {
        let exact = (n * PI).powi(2);
        assert_relative_eq!(*l, exact, max_relative = exact * 1e-6 / 12.0 * 1.5 + 1e-7);
    }
}

#[test]
fn bloch_limit_curve_table() {
    let table: [(f64, &[f64]); 5] = [
        (0.3, &[0.178621, 15.88685, 40.16845]),
        (1.0, &[1.78344, 11.94539, 44.79612]),
        (1.5, &[2.93541, 9.90951, 46.90234]),
        (PI / 2.0, &[2.96070, 9.86960, 46.93945, 88.82644, 165.75523]),
        (1.2, &[2.36867, 10.85388, 45.97108, 89.86828, 164.73044]),
    ];
    for (k, want) in table {
        let got: Vec<f64> = bloch_limit_curve(0.5, &[k], 170.0).unwrap().iter().map(|p| p.lambda).collect();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-5 * w.max(1.0), "k={k}: {g} vs {w}");
        }
    }
}

#[test]
fn sphere_root_and_mode() {
    let s = sphere_limit_spectrum(0.5, 40.0, 11).unwrap();
    assert!(s.s1.is_empty());
    let l = s.modes[0].0;
    assert_relative_eq!(l, SPHERE_1, max_relative = 1e-10);
    assert!(l > 3.2f64.powi(2) && l < 3.464f64.powi(2));
    assert_eq!(sphere_mode(0.5, l, 0.5), 1.0);
    assert!(sphere_mode(0.5, l, 1.0).abs() < 1e-15);
    // λ → 0⁺: LHS − RHS → 1 − (−1) = 2
    let v = CharacteristicFunction::Sphere { a: 0.5 }.value(1e-10);
    assert!((v - 2.0).abs() < 1e-8);
}

#[test]
fn homogeneous_ball() {
    let op = radial_operator(0.5, 1.0, 2000, BoundaryKind::Dirichlet).unwrap();
    let s = fdm::smallest_eigenpairs(&op, 3).unwrap();
    for (n, l) in s.eigenvalues.iter().enumerate() {
        assert_relative_eq!(*l, ball_eigenvalue(n + 1), max_relative = 1e-5);
    }
}

#[test]
fn effective_constant_is_a_quarter() {
    let med = ContrastMedium::new(Geometry::Line(sym()), 0.0, BoundaryKind::Dirichlet, 1e-2).unwrap();
    let sys = dtn::DtnSystem::<f64>::new(&med).unwrap();
    let f = fdm::SourceField::from_fn(&sys.split.mesh, |c| if c.region.is_some() { 1.0 } else { 0.0 });
    let tr = sys.solve_block_system(0.0, &f).unwrap();
    assert_relative_eq!(tr.constants[0], 0.25, max_relative = 1e-12);
    assert_relative_eq!(sys.n_plus_11[(0, 0)], -4.0, max_relative = 1e-12);
}
