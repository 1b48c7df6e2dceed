use approx::assert_relative_eq;
use hicontrast::fdm::smallest_eigenpairs;
use hicontrast::radial3d::*;
use hicontrast::BoundaryKind;

#[test]
fn grid_converges_to_the_sphere_root() {
    let want = sphere_limit_spectrum(0.5, 40.0, 2).unwrap().modes[0].0;
    let l = |e| smallest_eigenpairs(&radial_operator(0.5, e, 1000, BoundaryKind::Dirichlet).unwrap(), 1).unwrap().eigenvalues[0];
    let (a, b) = (l(2e-3), l(1e-3));
    assert!((b - want).abs() < (a - want).abs());
    // affine extrapolation in ε
    assert_relative_eq!(2.0 * b - a, want, max_relative = 1e-4);
}

#[test]
fn modes_are_continuous_at_the_interface() {
    let s = sphere_limit_spectrum(0.3, 200.0, 101).unwrap();
    assert!(!s.modes.is_empty());
    for (l, f) in &s.modes {
        assert_relative_eq!(sphere_mode(0.3, *l, 0.3 + 1e-9), 1.0, epsilon = 1e-6);
        assert_eq!(f.r.len(), 101);
        assert_eq!(*f.u.last().unwrap(), sphere_mode(0.3, *l, 1.0));
    }
}

#[test]
fn bad_inputs() {
    assert!(radial_operator(1.2, 0.1, 100, BoundaryKind::Dirichlet).is_err());
    assert!(radial_operator(0.5, 0.1, 1, BoundaryKind::Dirichlet).is_err());
    assert!(radial_operator(0.5, 0.1, 100, BoundaryKind::Bloch(vec![0.3])).is_err());
    assert!(sphere_limit_spectrum(0.5, -1.0, 10).is_err());
}
