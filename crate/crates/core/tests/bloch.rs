use std::f64::consts::PI;

use approx::assert_relative_eq;
use hicontrast::bloch::*;
use hicontrast::*;

fn cell(a: f64, h: f64) -> ContrastMedium {
    ContrastMedium::new(Geometry::Line(Geometry1D::cell(a).unwrap()), 0.01, BoundaryKind::Bloch(vec![0.3]), h).unwrap()
}

fn ks() -> Vec<Vec<f64>> {
    [0.2, 0.6, 1.0, 1.4, PI / 2.0].iter().map(|k| vec![*k]).collect()
}

#[test]
fn exact_and_grid_agree() {
    let eps = [0.01, 0.0];
    let ex = dispersion_sweep(&cell(0.5, 1e-3), &ks(), 3, &eps, Solver::Exact).unwrap();
    let gr = dispersion_sweep(&cell(0.5, 1e-3), &ks(), 3, &eps, Solver::Grid).unwrap();
    for (a, b) in ex.points.iter().zip(&gr.points) {
        assert_eq!((a.branch, a.epsilon), (b.branch, b.epsilon));
        assert_relative_eq!(a.lambda, b.lambda, max_relative = 1e-3);
        assert_relative_eq!(a.omega, a.lambda.sqrt(), max_relative = 1e-14);
    }
}

#[test]
fn limit_bands_are_gapped() {
    let b = dispersion_sweep(&cell(0.5, 1e-2), &ks(), 3, &[0.0], Solver::Exact).unwrap();
    let gaps = gap_report(&b, 0.0);
    assert!(!gaps.is_empty());
    for (lo, hi) in gaps {
        assert!(hi > lo);
    }
}

#[test]
fn degenerate_cell_has_no_gaps() {
    // no inclusion: free bands (k + πn)² touch at the zone centre and edge
    let b = dispersion_sweep(&cell(0.0, 1e-2), &ks(), 3, &[0.01], Solver::Exact).unwrap();
    assert!(gap_report(&b, 0.01).is_empty());
}

#[test]
fn integer_bloch_vectors_are_rejected() {
    let r = dispersion_sweep(&cell(0.5, 1e-2), &[vec![PI]], 2, &[0.01], Solver::Exact);
    assert!(matches!(r, Err(Error::IntegerBlochVector(_))));
    let r = dispersion_sweep(&cell(0.5, 1e-2), &[vec![0.0]], 2, &[0.01], Solver::Exact);
    assert!(matches!(r, Err(Error::IntegerBlochVector(_))));
}

#[test]
fn csv_headers() {
    let b = dispersion_sweep(&cell(0.5, 1e-2), &ks(), 2, &[0.0], Solver::Exact).unwrap();
    let mut bands = vec![];
    write_bands_csv(&b, &mut bands).unwrap();
    let bands = String::from_utf8(bands).unwrap();
    assert_eq!(bands.lines().next().unwrap(), "k,epsilon,branch,lambda,omega");
    assert_eq!(bands.lines().count(), 1 + ks().len() * 2);
    let mut gaps = vec![];
    write_gaps_csv(&b, &mut gaps).unwrap();
    assert_eq!(String::from_utf8(gaps).unwrap().lines().next().unwrap(), "epsilon,gap_lo,gap_hi");
}
