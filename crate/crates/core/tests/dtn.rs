use std::sync::Arc;

use approx::assert_relative_eq;
use hicontrast::dtn::*;
use hicontrast::fdm::SourceField;
use hicontrast::mesh::Mesh;
use hicontrast::*;

fn medium(inc: Vec<(f64, f64)>, bc: BoundaryKind) -> ContrastMedium {
    ContrastMedium::new(Geometry::Line(Geometry1D::new(-1.0, 1.0, inc).unwrap()), 0.0, bc, 1e-2).unwrap()
}

#[test]
fn blocks_are_symmetric_and_annihilate_constants() {
    let sys = DtnSystem::<f64>::new(&medium(vec![(-0.7, -0.2), (0.1, 0.6)], BoundaryKind::Dirichlet)).unwrap();
    assert_eq!(sys.inclusion_count(), 2);
    assert!(sys.symmetry_defect() < 1e-12);
    assert!(sys.constants_defect() < 1e-10);
    assert!(sys.eps0 > 0.0);
}

#[test]
fn n_plus_11_is_minus_the_exterior_energy() {
    // one inclusion (−0.3, 0.6): exterior pieces of length 0.7 and 0.4
    let sys = DtnSystem::<f64>::new(&medium(vec![(-0.3, 0.6)], BoundaryKind::Dirichlet)).unwrap();
    assert_relative_eq!(sys.n_plus_11[(0, 0)], -(1.0 / 0.7 + 1.0 / 0.4), max_relative = 1e-10);
    let u = sys.unit_extension(0).unwrap();
    assert_relative_eq!(sys.dirichlet_energy(&u), -sys.n_plus_11[(0, 0)], max_relative = 1e-10);
}

#[test]
fn epsilon_beyond_eps0_is_rejected() {
    let med = medium(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet);
    let mesh = Arc::new(Mesh::build(&med).unwrap());
    let sys = DtnSystem::<f64>::on_mesh(mesh.clone(), &BoundaryKind::Dirichlet).unwrap();
    let f = SourceField::from_fn(&mesh, |_| 1.0);
    assert!(matches!(sys.solve_block_system(2.0 * sys.eps0, &f), Err(Error::Parameter(_))));
}

#[test]
fn neumann_closure_is_rejected() {
    assert!(DtnSystem::<f64>::new(&medium(vec![(-0.5, 0.5)], BoundaryKind::Neumann)).is_err());
}

#[test]
fn trace_is_analytic_in_epsilon() {
    let med = medium(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet);
    let mesh = Arc::new(Mesh::build(&med).unwrap());
    let sys = DtnSystem::<f64>::on_mesh(mesh.clone(), &BoundaryKind::Dirichlet).unwrap();
    let f = SourceField::from_fn(&mesh, |c| 1.0 + c.center[0]);
    let e = sys.eps0 * 0.5;
    let r = analyticity_probe(&sys, &f, &[e, e / 2.0, e / 4.0, e / 8.0, e / 16.0], 2).unwrap();
    // polynomial fits improve geometrically with degree
    assert!(r.residuals.windows(2).all(|w| w[1] < w[0]), "{r:?}");
    assert!(r.ratio < 0.1, "{r:?}");
}

#[test]
fn blocks_csv_is_written() {
    let sys = DtnSystem::<f64>::new(&medium(vec![(-0.5, 0.5)], BoundaryKind::Dirichlet)).unwrap();
    let mut buf = vec![];
    sys.write_blocks(&mut buf).unwrap();
    assert!(!buf.is_empty());
}
