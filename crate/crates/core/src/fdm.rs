//! Finite-volume assembly of −∇·σ∇ (σ = 1 outside, 1/ε inside), the
//! small-eigenpair solver and linear solves.
//!
//! Link conductance is measure / (d_a/σ_a + d_b/σ_b), i.e. the harmonic
//! mean of σ on faces that cross Γ. Dirichlet rows use a ghost value at
//! the face, Neumann simply has no outer flux, Bloch wraps pick up the
//! phase e^{−ik·p} so that u(x + p) = e^{−ik·p} u(x).

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{eigenpairs, Banded, EigenOptions, Symmetry};
use crate::medium::{BoundaryKind, ContrastMedium};
use crate::mesh::Mesh;
use crate::scalar::{fmt_scalar, mdot, mnorm, Scalar, C64};

#[derive(Clone, Debug)]
pub struct DiscreteOperator<T> {
    pub mesh: Arc<Mesh>,
    pub epsilon: f64,
    pub bc: BoundaryKind,
    /// Stiffness K; the operator is M⁻¹K.
    pub matrix: Banded<T>,
    /// Cell volumes (diagonal mass).
    pub mass: Vec<f64>,
    pub geometry_hash: u64,
}

/// f on every cell; `zero_mean` marks Neumann-mode data.
#[derive(Clone, Debug)]
pub struct SourceField<T> {
    pub values: Vec<T>,
    pub zero_mean: bool,
}

impl<T: Scalar> SourceField<T> {
    pub fn new(values: Vec<T>) -> Self {
        SourceField { values, zero_mean: false }
    }

    pub fn from_fn<F: Fn(&crate::mesh::Cell) -> f64>(mesh: &Mesh, f: F) -> Self {
        SourceField::new(mesh.cells.iter().map(|c| T::of(f(c))).collect())
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult<T> {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<T>>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub epsilon: f64,
    pub geometry_hash: u64,
    /// Neumann: the (M-normalised) constant mode, reported separately.
    pub constant_mode: Option<Vec<T>>,
}

/// Bloch phase e^{−i Σ k_d s_d p_d} for a link crossing `shift` periods.
pub(crate) fn bloch_phase(bc: &BoundaryKind, period: [f64; 2], shift: [i32; 2]) -> C64 {
    match bc {
        BoundaryKind::Bloch(k) if shift != [0, 0] => {
            let theta: f64 = k.iter().enumerate().map(|(d, kd)| kd * shift[d] as f64 * period[d]).sum();
            C64::new(theta.cos(), -theta.sin())
        }
        _ => C64::new(1.0, 0.0),
    }
}

/// Stiffness on a subset of cells. Links leaving the subset become
/// Dirichlet faces (zero data) with conductance σ_in·measure/d_in.
pub(crate) fn assemble_block<T: Scalar>(
    mesh: &Mesh,
    cells: &[usize],
    sigma: &dyn Fn(usize) -> f64,
    bc: &BoundaryKind,
) -> Result<(Banded<T>, Vec<f64>, Vec<usize>)> {
    let mut pos = vec![usize::MAX; mesh.len()];
    for (p, &c) in cells.iter().enumerate() {
        pos[c] = p;
    }
    let mut bw = 0;
    for l in &mesh.links {
        if pos[l.a] != usize::MAX && pos[l.b] != usize::MAX {
            bw = bw.max(pos[l.a].abs_diff(pos[l.b]));
        }
    }
    let mut k = Banded::<T>::zeros(cells.len(), bw);
    for l in &mesh.links {
        let (pa, pb) = (pos[l.a], pos[l.b]);
        match (pa != usize::MAX, pb != usize::MAX) {
            (true, true) => {
                let g = l.measure / (l.da / sigma(l.a) + l.db / sigma(l.b));
                let ph = bloch_phase(bc, mesh.period, l.shift);
                let off = T::try_from_c64(ph * (-g)).ok_or_else(|| {
                    Error::Unsupported("a complex Bloch phase needs complex scalars".into())
                })?;
                k.add(pa, pa, T::of(g));
                k.add(pb, pb, T::of(g));
                k.add(pa, pb, off);
            }
            (true, false) => k.add(pa, pa, T::of(sigma(l.a) * l.measure / l.da)),
            (false, true) => k.add(pb, pb, T::of(sigma(l.b) * l.measure / l.db)),
            _ => {}
        }
    }
    if *bc == BoundaryKind::Dirichlet {
        for f in &mesh.outer {
            if pos[f.cell] != usize::MAX {
                k.add(pos[f.cell], pos[f.cell], T::of(sigma(f.cell) * f.measure / f.dist));
            }
        }
    }
    let mass = cells.iter().map(|&c| mesh.cells[c].volume).collect();
    Ok((k, mass, pos))
}

pub(crate) fn geometry_hash(med: &ContrastMedium) -> u64 {
    let mut h = DefaultHasher::new();
    format!("{:?}|{:?}|{}", med.geometry, med.bc, med.h).hash(&mut h);
    h.finish()
}

/// Assemble A_ε for the medium (ε > 0).
pub fn assemble<T: Scalar>(med: &ContrastMedium) -> Result<DiscreteOperator<T>> {
    med.require_positive_epsilon()?;
    let mesh = Arc::new(Mesh::build(med)?);
    assemble_on(mesh, med)
}

/// Assemble on an existing mesh (ε sweeps share the mesh).
pub fn assemble_on<T: Scalar>(mesh: Arc<Mesh>, med: &ContrastMedium) -> Result<DiscreteOperator<T>> {
    med.require_positive_epsilon()?;
    let eps = med.epsilon;
    let all: Vec<usize> = (0..mesh.len()).collect();
    let sigma = |c: usize| if mesh.cells[c].region.is_some() { 1.0 / eps } else { 1.0 };
    let (matrix, mass, _) = assemble_block::<T>(&mesh, &all, &sigma, &med.bc)?;
    Ok(DiscreteOperator { mesh, epsilon: eps, bc: med.bc.clone(), matrix, mass, geometry_hash: geometry_hash(med) })
}

impl<T: Scalar> DiscreteOperator<T> {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn sigma(&self, c: usize) -> f64 {
        if self.mesh.cells[c].region.is_some() {
            1.0 / self.epsilon
        } else {
            1.0
        }
    }

    /// Inclusion-side cells adjacent to Γ_i.
    pub fn interface_dofs(&self, i: usize) -> Result<Vec<usize>> {
        let faces = self.mesh.interface.get(i).ok_or(Error::IndexOutOfRange { index: i, count: self.mesh.inclusion_count })?;
        let mut d: Vec<usize> = faces.iter().map(|f| f.inside).collect();
        d.sort();
        d.dedup();
        Ok(d)
    }

    pub fn is_neumann(&self) -> bool {
        self.bc == BoundaryKind::Neumann
    }

    /// A u = M⁻¹K u.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let ku = self.matrix.matvec(u);
        ku.iter().zip(&self.mass).map(|(x, m)| *x / T::of(*m)).collect()
    }

    fn constant_mode(&self) -> Vec<T> {
        let vol: f64 = self.mass.iter().sum();
        vec![T::of(1.0 / vol.sqrt()); self.dim()]
    }

    /// ‖A‖ bound used to scale residuals.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.matrix.gershgorin(&self.mass);
        lo.abs().max(hi.abs())
    }
}

/// The `count` smallest eigenpairs (Neumann: smallest nonzero ones, with
/// the constant mode reported separately).
pub fn smallest_eigenpairs<T: Scalar>(opr: &DiscreteOperator<T>, count: usize) -> Result<SpectrumResult<T>> {
    smallest_eigenpairs_with(opr, count, &EigenOptions::default())
}

pub fn smallest_eigenpairs_with<T: Scalar>(
    opr: &DiscreteOperator<T>,
    count: usize,
    opts: &EigenOptions,
) -> Result<SpectrumResult<T>> {
    if count == 0 {
        return Err(Error::Parameter("count must be >= 1".into()));
    }
    let (first, deflate) = if opr.is_neumann() { (1, vec![opr.constant_mode()]) } else { (0, vec![]) };
    if first + count > opr.dim() {
        return Err(Error::Parameter(format!("count {count} too large for dimension {}", opr.dim())));
    }
    let ep = eigenpairs(&opr.matrix, &opr.mass, first, count, &deflate, opts)?;
    Ok(SpectrumResult {
        eigenvalues: ep.values,
        eigenvectors: ep.vectors,
        residuals: ep.residuals,
        iterations: ep.iterations,
        epsilon: opr.epsilon,
        geometry_hash: opr.geometry_hash,
        constant_mode: deflate.into_iter().next(),
    })
}

/// Solve A u = f. Neumann data must have mesh-mean zero; the solution is
/// the mesh-mean-zero representative.
pub fn solve<T: Scalar>(opr: &DiscreteOperator<T>, f: &SourceField<T>) -> Result<Vec<T>> {
    let n = opr.dim();
    if f.values.len() != n {
        return Err(Error::Parameter(format!("source has {} values, operator has {n}", f.values.len())));
    }
    let rhs: Vec<T> = f.values.iter().zip(&opr.mass).map(|(v, m)| *v * T::of(*m)).collect();
    if !opr.is_neumann() {
        return Ok(opr.matrix.factor(T::zero(), None, Symmetry::Hermitian)?.solve(&rhs));
    }
    let total = rhs.iter().fold(T::zero(), |a, b| a + *b).modulus();
    let scale: f64 = rhs.iter().map(|x| x.modulus()).sum::<f64>().max(1e-300);
    if total > 1e-12 * scale.max(1.0) {
        return Err(Error::Solvability { mean: total / opr.mass.iter().sum::<f64>() });
    }
    // pin cell 0 (its equation is implied by the others), then shift
    let rest: Vec<usize> = (1..n).collect();
    let k1 = opr.matrix.restrict(&rest);
    let u1 = k1.factor(T::zero(), None, Symmetry::Hermitian)?.solve(&rhs[1..]);
    let mut u = Vec::with_capacity(n);
    u.push(T::zero());
    u.extend(u1);
    Ok(mean_zero(&opr.mass, u))
}

/// Solve (A − z) u = f for z off the spectrum (complex z needs a
/// complex-symmetric operator, i.e. not a Bloch closure).
pub fn resolvent_solve(opr: &DiscreteOperator<C64>, z: C64, f: &SourceField<C64>) -> Result<Vec<C64>> {
    let n = opr.dim();
    if f.values.len() != n {
        return Err(Error::Parameter(format!("source has {} values, operator has {n}", f.values.len())));
    }
    let sym = if z.im == 0.0 {
        Symmetry::Hermitian
    } else if matches!(opr.bc, BoundaryKind::Bloch(_)) {
        return Err(Error::Unsupported("complex spectral parameter with a Bloch closure".into()));
    } else {
        Symmetry::Symmetric
    };
    let rhs: Vec<C64> = f.values.iter().zip(&opr.mass).map(|(v, m)| *v * *m).collect();
    Ok(opr.matrix.factor(z, Some(&opr.mass), sym)?.solve(&rhs))
}

/// Subtract the mesh mean.
pub fn mean_zero<T: Scalar>(mass: &[f64], mut u: Vec<T>) -> Vec<T> {
    let vol: f64 = mass.iter().sum();
    let mean = u.iter().zip(mass).fold(T::zero(), |a, (x, m)| a + *x * T::of(*m)) / T::of(vol);
    for x in u.iter_mut() {
        *x -= mean;
    }
    u
}

/// ‖K u − M f‖ / ‖M f‖.
pub fn solve_residual<T: Scalar>(opr: &DiscreteOperator<T>, u: &[T], f: &SourceField<T>) -> f64 {
    let ku = opr.matrix.matvec(u);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        let mf = f.values[i] * T::of(opr.mass[i]);
        num += (ku[i] - mf).abs2();
        den += mf.abs2();
    }
    (num / den.max(1e-300)).sqrt()
}

/// Discrete trace on each interface face, inclusion by inclusion: the
/// value at the face that balances σ-weighted fluxes from both sides.
pub fn interface_trace<T: Scalar>(opr: &DiscreteOperator<T>, u: &[T]) -> Vec<T> {
    let s_in = 1.0 / opr.epsilon;
    opr.mesh
        .interface_faces()
        .iter()
        .map(|f| {
            let (a, b) = (s_in * f.c_in, f.c_out);
            (u[f.inside] * T::of(a) + u[f.outside] * T::of(b)) / T::of(a + b)
        })
        .collect()
}

/// ∫_{Γ_i} ∂u⁺/∂n with n pointing out of the inclusion, from exterior
/// one-sided differences against the discrete trace.
pub fn flux_on_interface<T: Scalar>(opr: &DiscreteOperator<T>, u: &[T], i: usize) -> Result<T> {
    let faces = opr.mesh.interface.get(i).ok_or(Error::IndexOutOfRange { index: i, count: opr.mesh.inclusion_count })?;
    let s_in = 1.0 / opr.epsilon;
    Ok(faces.iter().fold(T::zero(), |acc, f| {
        let (a, b) = (s_in * f.c_in, f.c_out);
        let phi = (u[f.inside] * T::of(a) + u[f.outside] * T::of(b)) / T::of(a + b);
        acc + (u[f.outside] - phi) * T::of(f.c_out)
    }))
}

/// Same flux with an explicitly given trace on Γ_i (limit fields).
pub fn flux_with_trace<T: Scalar>(mesh: &Mesh, u: &[T], trace: T, i: usize) -> T {
    mesh.interface[i]
        .iter()
        .fold(T::zero(), |acc, f| acc + (u[f.outside] - trace) * T::of(f.c_out))
}

/// sup over inclusion cells |u − mean(u)| (volume-weighted mean).
pub fn flatness<T: Scalar>(mesh: &Mesh, u: &[T]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..mesh.inclusion_count {
        let cells: Vec<usize> = (0..mesh.len()).filter(|&c| mesh.cells[c].region == Some(i)).collect();
        let vol: f64 = cells.iter().map(|&c| mesh.cells[c].volume).sum();
        let mean = cells.iter().fold(T::zero(), |a, &c| a + u[c] * T::of(mesh.cells[c].volume)) / T::of(vol);
        for &c in &cells {
            worst = worst.max((u[c] - mean).modulus());
        }
    }
    worst
}

/// Coordinate dump `i j value`, both triangles, nonzeros only.
pub fn write_matrix<T: Scalar, W: Write>(opr: &DiscreteOperator<T>, mut w: W) -> Result<()> {
    let n = opr.dim();
    let bw = opr.matrix.bandwidth();
    for i in 0..n {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            let v = opr.matrix.get(i, j);
            if v != T::zero() {
                writeln!(w, "{i} {j} {}", fmt_scalar(v))?;
            }
        }
    }
    Ok(())
}

/// `j,lambda,residual` rows (j from 1).
pub fn write_spectrum_csv<T: Scalar, W: Write>(s: &SpectrumResult<T>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["j", "lambda", "residual"])?;
    for (j, (l, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
        wr.write_record([(j + 1).to_string(), l.to_string(), r.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// M-orthonormality defect max |⟨v_a, v_b⟩_M − δ_ab|.
pub fn orthonormality_defect<T: Scalar>(mass: &[f64], vs: &[Vec<T>]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..vs.len() {
        for b in 0..vs.len() {
            let d = mdot(mass, &vs[a], &vs[b]);
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((d - T::of(want)).modulus());
        }
    }
    worst
}

/// Rescale to sup-norm 1 (sign/phase of the largest entry made positive).
pub fn sup_normalize<T: Scalar>(u: &[T]) -> Vec<T> {
    let (mut best, mut bv) = (0, 0.0);
    for (i, x) in u.iter().enumerate() {
        if x.modulus() > bv {
            bv = x.modulus();
            best = i;
        }
    }
    if bv == 0.0 {
        return u.to_vec();
    }
    let s = u[best].conjugate() / T::of(bv * bv);
    u.iter().map(|x| *x * s).collect()
}

#[allow(dead_code)]
pub(crate) fn mass_norm<T: Scalar>(opr: &DiscreteOperator<T>, u: &[T]) -> f64 {
    mnorm(&opr.mass, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{Geometry, Geometry1D};
    use std::f64::consts::PI;

    fn line(a: f64, b: f64, eps: f64, h: f64, bc: BoundaryKind) -> ContrastMedium {
        ContrastMedium::new(Geometry::Line(Geometry1D::single(a, b).unwrap()), eps, bc, h).unwrap()
    }

    #[test]
    fn harmonic_mean_on_interface_link() {
        // σ = 1 and 100 on either side of a face, unit spacing
        let med = line(-0.5, 0.5, 0.01, 0.5, BoundaryKind::Dirichlet);
        let opr = assemble::<f64>(&med).unwrap();
        let f = opr.mesh.interface[0][0];
        let lk = opr.mesh.links[f.link];
        let g = -opr.matrix.get(lk.a, lk.b);
        // cells of width 0.5: g = (2/h)·harmonic... = 1/(0.25/1 + 0.25/100)
        let hm = 2.0 * 100.0 / 101.0;
        assert!((g - hm / 0.5).abs() < 1e-12);
    }

    #[test]
    fn neumann_constant_in_kernel() {
        let med = line(-0.5, 0.5, 0.01, 0.01, BoundaryKind::Neumann);
        let opr = assemble::<f64>(&med).unwrap();
        let r = opr.apply(&vec![1.0; opr.dim()]);
        let nrm = opr.norm_bound();
        assert!(r.iter().all(|x| x.abs() <= 1e-12 * nrm));
    }

    #[test]
    fn homogeneous_dirichlet_first_eigenvalue() {
        let med = line(0.0, 0.0, 1.0, 2.0 / 2000.0, BoundaryKind::Dirichlet);
        let s = smallest_eigenpairs(&assemble::<f64>(&med).unwrap(), 3).unwrap();
        let ex = (PI / 2.0).powi(2);
        assert!((s.eigenvalues[0] - ex).abs() < 1e-5 * ex);
    }
}
