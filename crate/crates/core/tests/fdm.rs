use std::f64::consts::PI;

use approx::assert_relative_eq;
use hicontrast::fdm::*;
use hicontrast::*;

fn line(eps: f64, bc: BoundaryKind, h: f64) -> ContrastMedium {
    ContrastMedium::new(Geometry::Line(Geometry1D::single(-0.5, 0.5).unwrap()), eps, bc, h).unwrap()
}

#[test]
fn homogeneous_line_is_the_laplacian() {
    // ε = 1 removes the contrast: λ_n = (πn/2)² on (−1, 1)
    let op = assemble::<f64>(&line(1.0, BoundaryKind::Dirichlet, 1e-3)).unwrap();
    let s = smallest_eigenpairs(&op, 4).unwrap();
    for (n, l) in s.eigenvalues.iter().enumerate() {
        let exact = (PI * (n + 1) as f64 / 2.0).powi(2);
        assert_relative_eq!(*l, exact, max_relative = 1e-5);
    }
    assert!(s.residuals.iter().all(|r| *r < 1e-10));
    assert!(orthonormality_defect(&op.mass, &s.eigenvectors) < 1e-10);
}

#[test]
fn eigenvalues_increase_toward_the_limit_as_eps_drops() {
    // stiffer inclusion, larger Rayleigh quotient
    let l = |e| smallest_eigenpairs(&assemble::<f64>(&line(e, BoundaryKind::Dirichlet, 1e-2)).unwrap(), 1).unwrap().eigenvalues[0];
    let (a, b, c) = (l(0.1), l(0.01), l(0.001));
    assert!(a < b && b < c && c < 2.960695537579868);
}

#[test]
fn neumann_reports_the_constant_mode_separately() {
    let op = assemble::<f64>(&line(0.01, BoundaryKind::Neumann, 1e-2)).unwrap();
    let s = smallest_eigenpairs(&op, 2).unwrap();
    let c = s.constant_mode.expect("constant mode");
    assert!(flatness(&op.mesh, &c) < 1e-12);
    assert!(s.eigenvalues[0] > 1.0);
}

#[test]
fn solve_meets_its_residual_bound() {
    let op = assemble::<f64>(&line(0.01, BoundaryKind::Dirichlet, 1e-2)).unwrap();
    let f = SourceField::from_fn(&op.mesh, |c| (3.0 * c.center[0]).sin() + 1.0);
    let u = solve(&op, &f).unwrap();
    assert!(solve_residual(&op, &u, &f) <= 1e-10);
}

#[test]
fn neumann_solve_needs_a_mean_zero_source() {
    let op = assemble::<f64>(&line(0.01, BoundaryKind::Neumann, 1e-2)).unwrap();
    let f = SourceField::from_fn(&op.mesh, |_| 1.0);
    assert!(matches!(solve(&op, &f), Err(Error::Solvability { .. })));
}

#[test]
fn zero_epsilon_is_rejected_by_the_discrete_operator() {
    assert!(assemble::<f64>(&line(0.0, BoundaryKind::Dirichlet, 1e-2)).is_err());
}

#[test]
fn bloch_operator_is_hermitian_and_even_in_k() {
    let l = |k: f64| {
        let m = ContrastMedium::new(Geometry::Line(Geometry1D::cell(0.5).unwrap()), 0.01, BoundaryKind::Bloch(vec![k]), 1e-2).unwrap();
        smallest_eigenpairs(&assemble::<C64>(&m).unwrap(), 3).unwrap().eigenvalues
    };
    for (a, b) in l(0.7).iter().zip(l(-0.7)) {
        assert_relative_eq!(*a, b, max_relative = 1e-10);
    }
}

#[test]
fn spectrum_csv_header() {
    let op = assemble::<f64>(&line(0.01, BoundaryKind::Dirichlet, 5e-2)).unwrap();
    let s = smallest_eigenpairs(&op, 2).unwrap();
    let mut buf = vec![];
    write_spectrum_csv(&s, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.lines().next().unwrap(), "j,lambda,residual");
}
