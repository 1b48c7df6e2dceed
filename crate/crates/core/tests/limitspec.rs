use std::f64::consts::PI;

use approx::assert_relative_eq;
use hicontrast::limitspec::*;
use hicontrast::*;

fn line(inc: Vec<(f64, f64)>, bc: BoundaryKind, h: f64) -> ContrastMedium {
    ContrastMedium::new(Geometry::Line(Geometry1D::new(-1.0, 1.0, inc).unwrap()), 0.0, bc, h).unwrap()
}

#[test]
fn symmetric_dirichlet_spectrum_has_both_branches() {
    let p = LimitProblem::<f64>::new(&line(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet, 1e-3)).unwrap();
    let s = p.spectrum(50.0).unwrap();
    let roots: Vec<f64> = s.branch(LimitBranch::ConstantTrace).iter().map(|q| q.lambda).collect();
    let zf: Vec<f64> = s.branch(LimitBranch::ZeroFlux).iter().map(|q| q.lambda).collect();
    assert_eq!(roots.len(), 2);
    assert_relative_eq!(roots[0], 2.960695537579868, max_relative = 1e-5);
    assert_relative_eq!(roots[1], 46.93944731976788, max_relative = 1e-4);
    assert_eq!(zf.len(), 1);
    assert_relative_eq!(zf[0], 4.0 * PI * PI, max_relative = 1e-5);
    for q in &s.pairs {
        assert!(q.pde_residual < 1e-8, "{}", q.pde_residual);
    }
    assert!(s.unresolved.iter().all(|(l, _)| (l - 4.0 * PI * PI).abs() < 1e-3 * l));
}

#[test]
fn count_is_monotone() {
    let p = LimitProblem::<f64>::new(&line(vec![(-0.3, 0.6)], BoundaryKind::Dirichlet, 1e-2)).unwrap();
    let mut prev = 0;
    for i in 1..60 {
        let c = p.limit_count(i as f64 * 3.0 + 0.123).unwrap();
        assert!(c >= prev);
        prev = c;
    }
    assert!(prev > 0);
}

#[test]
fn limit_roots_match_the_transfer_solver() {
    let g = Geometry1D::new(-1.0, 1.0, vec![(-0.3, 0.6)]).unwrap();
    let want = exact1d::limit_transfer_eigenvalues(&g, &BoundaryKind::Dirichlet, 100.0).unwrap();
    let med = ContrastMedium::new(Geometry::Line(g), 0.0, BoundaryKind::Dirichlet, 1e-3).unwrap();
    let got = LimitProblem::<f64>::new(&med).unwrap().spectrum(100.0).unwrap().eigenvalues();
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(&want) {
        assert_relative_eq!(*a, *b, max_relative = 1e-4);
    }
}

#[test]
fn t_matrix_refuses_poles() {
    let p = LimitProblem::<f64>::new(&line(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet, 1e-2)).unwrap();
    let pole = p.poles(50.0).unwrap()[0];
    let r = p.t_matrix(pole);
    assert!(matches!(r, Err(Error::PoleProximity { .. })), "{r:?}");
    assert!(p.t_matrix(1.0).is_ok());
}

#[test]
fn neumann_source_problem_is_mean_zero() {
    let med = line(vec![(-0.5, 0.5)], BoundaryKind::Neumann, 1e-2);
    let mesh = hicontrast::mesh::Mesh::build(&med).unwrap();
    let f: Vec<f64> = mesh.cells.iter().map(|c| c.center[0]).collect();
    assert!(solve_limit_neumann(&med, &f).is_ok());
    let one = vec![1.0; mesh.len()];
    assert!(matches!(solve_limit_neumann(&med, &one), Err(Error::Solvability { .. })));
}

#[test]
fn limit_csv_header() {
    let p = LimitProblem::<f64>::new(&line(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet, 5e-2)).unwrap();
    let s = p.spectrum(10.0).unwrap();
    let mut buf = vec![];
    write_limit_csv(&s.pairs, 1, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), s.pairs.len() + 1);
}
