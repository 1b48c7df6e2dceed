//! Band structures: Bloch spectra over a k grid for a list of contrasts,
//! ε = 0 included, and band-gap extraction.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact1d::{limit_transfer_eigenvalues, transfer_spectrum_1d};
use crate::fdm::{assemble_on, smallest_eigenpairs};
use crate::limitspec::LimitProblem;
use crate::medium::{is_integer_vector, BoundaryKind, ContrastMedium, Geometry};
use crate::mesh::Mesh;
use crate::scalar::C64;

/// Crossing flag threshold between neighbouring branches.
pub const CROSSING_TOL: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionPoint {
    pub k: Vec<f64>,
    pub branch: usize,
    pub lambda: f64,
    pub omega: f64,
    pub epsilon: f64,
}

/// Exact transfer matrices (1D only) or the FV grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Grid,
    Exact,
}

#[derive(Clone, Debug)]
pub struct BandStructure {
    pub k_grid: Vec<Vec<f64>>,
    pub epsilons: Vec<f64>,
    pub branch_count: usize,
    /// Cell period per axis.
    pub period: Vec<f64>,
    /// Ordered by (ε, k, branch) following the input order.
    pub points: Vec<DispersionPoint>,
    /// (ε, k, n): branches n and n+1 closer than CROSSING_TOL.
    pub crossings: Vec<(f64, Vec<f64>, usize)>,
}

impl BandStructure {
    pub fn lambda(&self, e: usize, k: usize, n: usize) -> f64 {
        let nk = self.k_grid.len();
        self.points[(e * nk + k) * self.branch_count + (n - 1)].lambda
    }

    /// λ_n over the k grid at contrast index e.
    pub fn branch(&self, e: usize, n: usize) -> Vec<f64> {
        (0..self.k_grid.len()).map(|k| self.lambda(e, k, n)).collect()
    }
}

fn first_n(mut grow: impl FnMut(f64) -> Result<Vec<f64>>, n: usize, start: f64) -> Result<Vec<f64>> {
    let mut lmax = start;
    for _ in 0..40 {
        let v = grow(lmax)?;
        if v.len() >= n {
            return Ok(v[..n].to_vec());
        }
        lmax *= 2.0;
    }
    Err(Error::Parameter(format!("could not find {n} branches")))
}

/// Dispersion over `k_grid` × `eps_list` (ε = 0 allowed).
pub fn dispersion_sweep(
    med: &ContrastMedium,
    k_grid: &[Vec<f64>],
    branch_count: usize,
    eps_list: &[f64],
    solver: Solver,
) -> Result<BandStructure> {
    if branch_count == 0 {
        return Err(Error::Parameter("branch_count must be >= 1".into()));
    }
    if k_grid.is_empty() || eps_list.is_empty() {
        return Err(Error::Parameter("k grid and epsilon list must be nonempty".into()));
    }
    let period = med.period()?;
    for k in k_grid {
        if k.len() != period.len() {
            return Err(Error::Parameter(format!("Bloch vector needs {} components", period.len())));
        }
        if is_integer_vector(k, &period) {
            return Err(Error::IntegerBlochVector(k.clone()));
        }
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::Parameter(format!("epsilon must be >= 0, got {e}")));
    }
    let pmin = period.iter().cloned().fold(f64::INFINITY, f64::min);
    let start = (std::f64::consts::PI * (branch_count + 1) as f64 / pmin).powi(2) * 4.0;
    let mesh = match solver {
        Solver::Grid => {
            let any_k = BoundaryKind::Bloch(k_grid[0].clone());
            Some(Arc::new(Mesh::build(&med.with_bc(any_k))?))
        }
        Solver::Exact => {
            if !matches!(med.geometry, Geometry::Line(_)) {
                return Err(Error::Unsupported("exact dispersion is 1D only".into()));
            }
            None
        }
    };
    let tasks: Vec<(usize, usize)> =
        (0..eps_list.len()).flat_map(|e| (0..k_grid.len()).map(move |k| (e, k))).collect();
    let rows: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(e, ki)| {
            let eps = eps_list[e];
            let bc = BoundaryKind::Bloch(k_grid[ki].clone());
            match (solver, &med.geometry) {
                (Solver::Exact, Geometry::Line(g)) => {
                    if eps > 0.0 {
                        first_n(|l| Ok(transfer_spectrum_1d(g, eps, &bc, l)?.eigenvalues), branch_count, start)
                    } else {
                        first_n(|l| limit_transfer_eigenvalues(g, &bc, l), branch_count, start)
                    }
                }
                _ => {
                    let mesh = mesh.clone().unwrap();
                    if eps > 0.0 {
                        let m = med.with_epsilon(eps).with_bc(bc);
                        let op = assemble_on::<C64>(mesh, &m)?;
                        Ok(smallest_eigenpairs(&op, branch_count)?.eigenvalues)
                    } else {
                        let p = LimitProblem::<C64>::on_mesh(mesh, &bc)?;
                        first_n(|l| Ok(p.spectrum(l)?.eigenvalues()), branch_count, start)
                    }
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut points = vec![];
    let mut crossings = vec![];
    for (&(e, ki), row) in tasks.iter().zip(&rows) {
        for (n, &l) in row.iter().enumerate() {
            points.push(DispersionPoint {
                k: k_grid[ki].clone(),
                branch: n + 1,
                lambda: l,
                omega: l.sqrt(),
                epsilon: eps_list[e],
            });
            if n + 1 < row.len() && row[n + 1] - l < CROSSING_TOL {
                crossings.push((eps_list[e], k_grid[ki].clone(), n + 1));
            }
        }
    }
    Ok(BandStructure { k_grid: k_grid.to_vec(), epsilons: eps_list.to_vec(), branch_count, period, points, crossings })
}

/// Band gaps (max_k λ_n, min_k λ_{n+1}) at contrast `eps`. In 1D the
/// branch values at the zone centre and edge are also estimated by
/// linear extrapolation from the two nearest k samples, so bands that
/// touch at an excluded k (the integer vector k = 0) are not reported as
/// gapped.
pub fn gap_report(bands: &BandStructure, eps: f64) -> Vec<(f64, f64)> {
    let Some(e) = bands.epsilons.iter().position(|&x| x == eps) else {
        return vec![];
    };
    if bands.branch_count < 2 {
        return vec![];
    }
    let one_d = bands.k_grid.iter().all(|k| k.len() == 1);
    let mut order: Vec<usize> = (0..bands.k_grid.len()).collect();
    order.sort_by(|&a, &b| bands.k_grid[a][0].abs().total_cmp(&bands.k_grid[b][0].abs()));
    let extrap = |vals: &[f64]| -> Vec<f64> {
        if !one_d || order.len() < 2 {
            return vec![];
        }
        let x = |i: usize| bands.k_grid[i][0].abs();
        let lin = |i: usize, j: usize, at: f64| {
            let (x0, x1) = (x(i), x(j));
            if (x1 - x0).abs() < 1e-14 {
                return vals[i];
            }
            vals[i] + (vals[j] - vals[i]) * (at - x0) / (x1 - x0)
        };
        let n = order.len();
        let edge = std::f64::consts::PI / bands.period[0];
        let mut out = vec![];
        if x(order[0]) > 1e-12 {
            out.push(lin(order[0], order[1], 0.0));
        }
        if (x(order[n - 1]) - edge).abs() > 1e-12 && x(order[n - 1]) < edge {
            out.push(lin(order[n - 2], order[n - 1], edge));
        }
        out
    };
    let mut gaps = vec![];
    for n in 1..bands.branch_count {
        let lo_b = bands.branch(e, n);
        let hi_b = bands.branch(e, n + 1);
        let top = lo_b.iter().chain(&extrap(&lo_b)).cloned().fold(f64::NEG_INFINITY, f64::max);
        let bottom = hi_b.iter().chain(&extrap(&hi_b)).cloned().fold(f64::INFINITY, f64::min);
        if bottom - top > 1e-8 * bottom.abs().max(1.0) {
            gaps.push((top, bottom));
        }
    }
    gaps
}

fn k_text(k: &[f64]) -> String {
    k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// `k,epsilon,branch,lambda,omega` (multi-axis k joined by ';').
pub fn write_bands_csv<W: Write>(b: &BandStructure, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["k", "epsilon", "branch", "lambda", "omega"])?;
    for p in &b.points {
        wr.write_record([k_text(&p.k), p.epsilon.to_string(), p.branch.to_string(), p.lambda.to_string(), p.omega.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// `epsilon,gap_lo,gap_hi`.
pub fn write_gaps_csv<W: Write>(b: &BandStructure, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["epsilon", "gap_lo", "gap_hi"])?;
    for &e in &b.epsilons {
        for (lo, hi) in gap_report(b, e) {
            wr.write_record([e.to_string(), lo.to_string(), hi.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}
