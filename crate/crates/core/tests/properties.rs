use std::sync::Arc;

use hicontrast::dtn::{DtnSystem, TraceFunction};
use hicontrast::exact1d::{bloch_limit_curve, monodromy, Contrast};
use hicontrast::fdm::{assemble_on, solve, SourceField};
use hicontrast::mesh::Mesh;
use hicontrast::roots::rational_approx;
use hicontrast::studies::affine_fit;
use hicontrast::*;
use proptest::prelude::*;

fn line_medium(a: f64, b: f64, eps: f64) -> ContrastMedium {
    let g = Geometry1D::new(-1.0, 1.0, vec![(a, b)]).unwrap();
    ContrastMedium::new(Geometry::Line(g), eps, BoundaryKind::Dirichlet, 0.02).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transfer_matrix_is_unimodular(lambda in 0.01f64..400.0, a in -0.8f64..-0.1, w in 0.1f64..0.8, eps in 1e-4f64..1.0) {
        let g = Geometry1D::new(-1.0, 1.0, vec![(a, a + w)]).unwrap();
        for c in [Contrast::Eps(eps), Contrast::Rigid] {
            let m = monodromy(&g, lambda, c);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let scale = m.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max).powi(2);
            prop_assert!((det - 1.0).abs() <= 1e-10 * scale, "det = {det}");
        }
    }

    #[test]
    fn perp_has_zero_weighted_mean(vals in prop::collection::vec(-10.0f64..10.0, 2..30), seed in 0u64..1000) {
        let n = vals.len();
        let w: Vec<f64> = (0..n).map(|i| 0.1 + ((i as u64 * 7919 + seed) % 97) as f64 / 50.0).collect();
        let incl: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let t = TraceFunction::decompose(vals.clone(), &w, &incl, 2);
        for k in 0..2 {
            let s: f64 = t.perp.iter().zip(&w).zip(&incl).filter(|(_, &i)| i == k).map(|((p, w), _)| p * w).sum();
            prop_assert!(s.abs() <= 1e-12 * vals.iter().map(|v| v.abs()).sum::<f64>().max(1.0));
        }
        for ((v, p), &i) in vals.iter().zip(&t.perp).zip(&incl) {
            prop_assert!((v - p - t.constants[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_approx_recovers_small_fractions(p in 1u64..500, q in 1u64..500) {
        let (a, b) = rational_approx(p as f64 / q as f64, 1000, 1e-12).unwrap();
        prop_assert_eq!(a * q, b * p);
        let g = gcd(p, q);
        prop_assert_eq!((a, b), (p / g, q / g));
    }

    #[test]
    fn dtn_reconstruction_matches_direct_solve(eps in 1e-3f64..0.1, a in -0.7f64..-0.2, w in 0.2f64..0.6, fx in -3.0f64..3.0) {
        let med = line_medium(a, a + w, eps);
        let mesh = Arc::new(Mesh::build(&med).unwrap());
        let sys = DtnSystem::<f64>::on_mesh(mesh.clone(), &BoundaryKind::Dirichlet).unwrap();
        prop_assume!(eps <= sys.eps0);
        let f = SourceField::from_fn(&mesh, |c| 1.0 + fx * c.center[0]);
        let (_, u) = sys.apply_bhat(eps, &f).unwrap();
        let v = solve(&assemble_on::<f64>(mesh.clone(), &med).unwrap(), &f).unwrap();
        let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let diff = u.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-9 * scale, "diff {diff:e}");
    }

    #[test]
    fn affine_fit_is_exact_on_lines(c in -50.0f64..50.0, s in -1e3f64..1e3) {
        let eps = [0.008, 0.004, 0.002, 0.001];
        let y: Vec<f64> = eps.iter().map(|e| c + s * e).collect();
        let fit = affine_fit(&eps, &y);
        prop_assert!((fit.intercept - c).abs() <= 1e-9 * (1.0 + c.abs() + s.abs() * 0.01));
        prop_assert!((fit.slope - s).abs() <= 1e-7 * (1.0 + s.abs() + c.abs()));
        prop_assert!(fit.residual <= 1e-9 * (1.0 + c.abs() + s.abs() * 0.01));
    }

    #[test]
    fn bloch_limit_curve_is_even_in_k(k in 0.05f64..1.5) {
        let p = bloch_limit_curve(0.5, &[k], 60.0).unwrap();
        let m = bloch_limit_curve(0.5, &[-k], 60.0).unwrap();
        prop_assert_eq!(p.len(), m.len());
        for (x, y) in p.iter().zip(&m) {
            prop_assert!((x.lambda - y.lambda).abs() <= 1e-10 * x.lambda.max(1.0));
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}
