//! Concentric spheres in ℝ³, spherically symmetric sector: the closed-form
//! limit equation a√λ cot(√λ(1−a)) = λa²/3 − 1 and the shell FV operator.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exact1d::{char_roots, CharacteristicFunction};
use crate::fdm::{assemble, DiscreteOperator};
use crate::medium::{BoundaryKind, ContrastMedium, Geometry, RadialGeometry};
use crate::mesh::Mesh;

/// u(r) on a radial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialField {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl RadialField {
    pub fn from_mesh(mesh: &Mesh, u: &[f64]) -> Self {
        RadialField { r: mesh.cells.iter().map(|c| c.center[0]).collect(), u: u.to_vec() }
    }
}

/// Limit eigenfunction: 1 for r ≤ a, a sin(√λ(1−r)) / (r sin(√λ(1−a))) outside.
pub fn sphere_mode(a: f64, lambda: f64, r: f64) -> f64 {
    if r <= a {
        return 1.0;
    }
    let s = lambda.sqrt();
    a * (s * (1.0 - r)).sin() / (r * (s * (1.0 - a)).sin())
}

#[derive(Clone, Debug)]
pub struct SphereSpectrum {
    pub modes: Vec<(f64, RadialField)>,
    /// Always empty: no zero-flux eigenfunctions in this sector.
    pub s1: Vec<f64>,
}

/// All roots in (0, λ_max], eigenfunctions sampled at `samples` points.
pub fn sphere_limit_spectrum(a: f64, lambda_max: f64, samples: usize) -> Result<SphereSpectrum> {
    RadialGeometry::new(a)?;
    if !(lambda_max > 0.0) {
        return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let roots = char_roots(&CharacteristicFunction::Sphere { a }, lambda_max)?;
    let n = samples.max(2);
    let modes = roots
        .into_iter()
        .map(|l| {
            let r: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let u = r.iter().map(|&x| sphere_mode(a, l, x)).collect();
            (l, RadialField { r, u })
        })
        .collect();
    Ok(SphereSpectrum { modes, s1: vec![] })
}

/// Shell operator −r⁻²(r²σu′)′ on n cells, Dirichlet at r = 1 (or Neumann).
pub fn radial_operator(a: f64, eps: f64, n_grid: usize, bc: BoundaryKind) -> Result<DiscreteOperator<f64>> {
    if n_grid < 2 {
        return Err(Error::Parameter("radial grid needs at least 2 cells".into()));
    }
    if matches!(bc, BoundaryKind::Bloch(_)) {
        return Err(Error::Unsupported("Bloch closure on the radial geometry".into()));
    }
    let med = ContrastMedium::new(Geometry::Radial(RadialGeometry::new(a)?), eps, bc, 1.0 / n_grid as f64)?;
    assemble(&med)
}

/// Homogeneous ball: λ_n = (πn)².
pub fn ball_eigenvalue(n: usize) -> f64 {
    (PI * n as f64).powi(2)
}
