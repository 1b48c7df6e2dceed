//! ε → 0 limit spectrum on FV meshes.
//!
//! Constant-trace branch: u⁺ solves −Δu⁺ = λu⁺ in the matrix with the
//! outer closure and u⁺ = c_i on Γ_i; the constants are closed by
//! ∫_{Γ_i} ∂u⁺/∂n + c_i λ |Ω₋^i| = 0, i.e. T(λ)c = 0. Between two
//! exterior Dirichlet eigenvalues (the poles) every eigenvalue of T(λ)
//! is strictly increasing in λ, so the number of roots below λ is a
//! difference of negative-eigenvalue counts of T — bisection on that
//! count brackets every root, multiple ones included.
//!
//! Zero-flux branch: exterior Dirichlet eigenvectors (zero on Γ) whose
//! flux through every Γ_i vanishes.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::dense::herm_eig;
use crate::linalg::{eigenpairs_below, eigenvalues_below, EigenOptions, Ldl, Symmetry};
use crate::medium::{BoundaryKind, ContrastMedium};
use crate::mesh::Mesh;
use crate::scalar::{fmt_scalar, max_abs, mdot, Scalar, C64};
use crate::split::Split;

/// Root tolerance in λ (relative).
pub const TOL_ROOT: f64 = 1e-10;
/// Roots closer than this (relative) are flagged as a cluster.
pub const TOL_CLUSTER: f64 = 1e-6;
/// Zero-flux acceptance: |flux| / (sup|u|·|Γ_i|·max(1, √λ)) ≤ TOL_FLUX·h.
pub const TOL_FLUX: f64 = 1e-3;
/// Pole proximity in √λ units.
pub const TOL_POLE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitBranch {
    /// c ≠ 0: roots of det T(λ).
    ConstantTrace,
    /// c = 0: exterior Dirichlet eigenfunctions with zero interface flux.
    ZeroFlux,
}

impl LimitBranch {
    pub fn name(self) -> &'static str {
        match self {
            LimitBranch::ConstantTrace => "constant_trace",
            LimitBranch::ZeroFlux => "zero_flux",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LimitEigenpair<T> {
    pub lambda: f64,
    pub c: Vec<T>,
    /// Mesh field: u⁺ on matrix cells, c_i on inclusion cells.
    pub u_plus: Vec<T>,
    pub branch: LimitBranch,
    /// max_i |∫_{Γ_i} ∂u⁺/∂n + c_i λ |Ω₋^i||, u normalised as emitted.
    pub flux_residual: f64,
    /// ‖(K₊ − λM₊)u − B₊c‖ / ‖u‖ (relative to the operator scale).
    pub pde_residual: f64,
}

/// Output of the determinant scan.
#[derive(Clone, Debug)]
pub struct DetScan<T> {
    pub pairs: Vec<LimitEigenpair<T>>,
    pub poles: Vec<f64>,
    /// Consecutive roots closer than TOL_CLUSTER.
    pub clusters: Vec<(f64, f64)>,
    /// (λ, pole): count jumps on an exterior eigenvalue, i.e. zero-flux
    /// candidates rather than roots of det T.
    pub unresolved: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct ZeroFluxReport<T> {
    pub accepted: Vec<LimitEigenpair<T>>,
    /// (λ, relative flux) of exterior eigenfunctions that are not limit
    /// eigenfunctions.
    pub excluded: Vec<(f64, f64)>,
}

/// The exterior problem of a medium (ε plays no role).
#[derive(Clone, Debug)]
pub struct LimitProblem<T> {
    pub split: Split<T>,
    pub h: f64,
    opts: EigenOptions,
}

impl<T: Scalar> LimitProblem<T> {
    pub fn new(med: &ContrastMedium) -> Result<Self> {
        let mesh = Arc::new(Mesh::build(med)?);
        Self::on_mesh(mesh, &med.bc)
    }

    pub fn on_mesh(mesh: Arc<Mesh>, bc: &BoundaryKind) -> Result<Self> {
        let h = mesh.h_max();
        let split = Split::new(mesh, bc)?;
        Ok(LimitProblem { split, h, opts: EigenOptions::default() })
    }

    pub fn inclusion_count(&self) -> usize {
        self.split.inclusion_count()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.split.mesh
    }

    fn resonance_check(&self, lambda: f64, piv: &[T]) -> Result<()> {
        let scale = self.split.exterior.k.gershgorin(&self.split.exterior.mass).1.max(1.0);
        let m_min = self.split.exterior.mass.iter().cloned().fold(f64::INFINITY, f64::min);
        let dmin = piv.iter().map(|d| d.modulus()).fold(f64::INFINITY, f64::min);
        if dmin <= 1e-13 * scale * m_min {
            return Err(Error::PoleProximity { lambda, distance: dmin / m_min });
        }
        // an exterior eigenvalue within TOL_POLE (in √λ) shows up as an inertia jump
        let s = lambda.sqrt();
        let (lo, hi) = ((s - TOL_POLE).max(0.0).powi(2), (s + TOL_POLE).powi(2));
        let ext = &self.split.exterior;
        if ext.factor(lo)?.negative_count() != ext.factor(hi)?.negative_count() {
            return Err(Error::PoleProximity { lambda, distance: TOL_POLE * 2.0 * s });
        }
        Ok(())
    }

    /// Exterior solve with u⁺ = c_i on Γ_i (mesh field, inclusions = c_i).
    pub fn exterior_helmholtz_solve(&self, lambda: f64, c: &[T]) -> Result<Vec<T>> {
        let s = &self.split;
        if c.len() != s.inclusion_count() {
            return Err(Error::Parameter(format!("need {} constants, got {}", s.inclusion_count(), c.len())));
        }
        let ldl = s.exterior.factor(lambda)?;
        self.resonance_check(lambda, ldl.pivots())?;
        let u = ldl.solve(&s.lift_exterior(&s.constant_trace(c)));
        Ok(s.scatter(&u, &s.interior_constants(c)))
    }

    /// ∫_{Γ_i} ∂u⁺/∂n for a mesh field whose inclusion cells carry c_i.
    pub fn fluxes(&self, u: &[T]) -> Vec<T> {
        let s = &self.split;
        let ue = s.exterior.gather(u);
        let phi: Vec<T> = s.faces.iter().map(|f| u[f.inside]).collect();
        s.per_inclusion(&s.exterior_flux(&ue, &phi))
    }

    /// T(λ)_{ij} = ∫_{Γ_i} ∂u_j⁺/∂n + δ_ij λ|Ω₋^i|.
    pub fn t_matrix(&self, lambda: f64) -> Result<DMatrix<T>> {
        let ldl = self.split.exterior.factor(lambda)?;
        self.resonance_check(lambda, ldl.pivots())?;
        Ok(self.t_with(&ldl, lambda))
    }

    fn t_with(&self, ldl: &Ldl<T>, lambda: f64) -> DMatrix<T> {
        let s = &self.split;
        let m = s.inclusion_count();
        let mut t = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut e = vec![T::zero(); m];
            e[j] = T::one();
            let phi = s.constant_trace(&e);
            let u = ldl.solve(&s.lift_exterior(&phi));
            let fl = s.per_inclusion(&s.exterior_flux(&u, &phi));
            for i in 0..m {
                t[(i, j)] = fl[i];
            }
            t[(j, j)] += T::of(lambda * s.volumes[j]);
        }
        t
    }

    /// Eigenvalues of the full limit pencil (exterior field plus one
    /// constant per inclusion) strictly below λ. By Haynsworth this is
    /// neg(K₊ − λM₊) + pos(T(λ)): T is minus the Schur complement. The
    /// count is monotone in λ and does not jump at poles of T, so no
    /// evaluation ever has to be placed on the correct side of a pole.
    pub fn limit_count(&self, lambda: f64) -> Result<usize> {
        let mut l = lambda;
        for _ in 0..8 {
            // only the inertia matters here, so a near-resonant factor is
            // fine as long as the solves stay finite
            let ldl = self.split.exterior.factor(l)?;
            let t = self.t_with(&ldl, l);
            if t.iter().all(|x| x.modulus().is_finite()) {
                return Ok(ldl.negative_count() + herm_eig(&t).0.iter().filter(|&&x| x > 0.0).count());
            }
            l += 1e-12 * l.abs().max(1.0);
        }
        Err(Error::PoleProximity { lambda, distance: 0.0 })
    }

    /// Exterior Dirichlet eigenvalues below λ_max (poles of T), merged
    /// when they coincide to rounding.
    pub fn poles(&self, lambda_max: f64) -> Result<Vec<f64>> {
        let mut p = eigenvalues_below(&self.split.exterior.k, &self.split.exterior.mass, lambda_max, &self.opts)?;
        p.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs());
        Ok(p)
    }

    /// All roots of det T in (0, λ_max], completed to eigenpairs.
    pub fn det_scan(&self, lambda_max: f64) -> Result<DetScan<T>> {
        if !(lambda_max > 0.0) {
            return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
        }
        let poles = self.poles(lambda_max)?;
        // Neumann closure: T(0) = 0 (the constant mode) is not a limit
        // eigenvalue, so the scan starts just above 0
        let a = 1e-8 * lambda_max.max(1.0);
        let (na, nb) = (self.limit_count(a)?, self.limit_count(lambda_max)?);
        let mut roots: Vec<f64> = vec![];
        let mut unresolved = vec![];
        let mut lo = a;
        for j in 0..nb.saturating_sub(na) {
            // smallest λ with count ≥ na + j + 1
            let want = na + j + 1;
            let (mut l, mut r) = (lo, lambda_max);
            while r - l > TOL_ROOT * 1e-3 * r.max(1.0) {
                let mid = 0.5 * (l + r);
                if mid <= l || mid >= r {
                    break;
                }
                if self.limit_count(mid)? >= want {
                    r = mid;
                } else {
                    l = mid;
                }
            }
            let x = 0.5 * (l + r);
            lo = l;
            // a jump sitting on an exterior eigenvalue is a zero-flux
            // mode (T stays finite there); zero_flux_branch owns those
            match poles.iter().find(|&&p| (p - x).abs() <= 1e-9 * x) {
                Some(&p) => unresolved.push((x, p)),
                None => roots.push(x),
            }
        }
        let clusters = roots
            .windows(2)
            .filter(|w| w[1] - w[0] < TOL_CLUSTER * w[1])
            .map(|w| (w[0], w[1]))
            .collect();
        let mut pairs: Vec<LimitEigenpair<T>> = vec![];
        for (idx, &l) in roots.iter().enumerate() {
            // repeated roots take successive null vectors
            let rank = roots[..idx].iter().rev().take_while(|&&p| (l - p).abs() < TOL_CLUSTER * l).count();
            pairs.push(self.complete(l, rank)?);
        }
        Ok(DetScan { pairs, poles, clusters, unresolved })
    }

    fn complete(&self, lambda: f64, rank: usize) -> Result<LimitEigenpair<T>> {
        let t = self.t_matrix(lambda)?;
        let (vals, vecs) = herm_eig(&t);
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&i, &j| vals[i].abs().total_cmp(&vals[j].abs()));
        let col = order[rank.min(order.len() - 1)];
        let mut c: Vec<T> = vecs.column(col).iter().copied().collect();
        normalize_constants(&mut c);
        let u = self.exterior_helmholtz_solve(lambda, &c)?;
        let fl = self.fluxes(&u);
        let flux_residual =
            (0..c.len()).map(|i| (fl[i] + c[i] * T::of(lambda * self.split.volumes[i])).modulus()).fold(0.0, f64::max);
        let pde_residual = self.pde_residual(lambda, &u, &c);
        Ok(LimitEigenpair { lambda, c, u_plus: u, branch: LimitBranch::ConstantTrace, flux_residual, pde_residual })
    }

    fn pde_residual(&self, lambda: f64, u: &[T], c: &[T]) -> f64 {
        let s = &self.split;
        let ue = s.exterior.gather(u);
        let ku = s.exterior.k.matvec(&ue);
        let b = s.lift_exterior(&s.constant_trace(c));
        let num: f64 = ku
            .iter()
            .zip(&ue)
            .zip(&s.exterior.mass)
            .zip(&b)
            .map(|(((k, x), m), b)| (*k - *x * T::of(lambda * m) - *b).abs2() / m)
            .sum::<f64>()
            .sqrt();
        let den = s.exterior.k.gershgorin(&s.exterior.mass).1.max(1.0) * max_abs(&ue).max(1e-300);
        num / den
    }

    /// Exterior Dirichlet eigenfunctions below λ_max with zero flux
    /// through every Γ_i. Near-degenerate eigenvalues (within the O(h²)
    /// discretisation spread) are treated as one eigenspace and the
    /// zero-flux subspace is extracted from it.
    pub fn zero_flux_branch(&self, lambda_max: f64) -> Result<ZeroFluxReport<T>> {
        if !(lambda_max > 0.0) {
            return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
        }
        let s = &self.split;
        let ep = eigenpairs_below(&s.exterior.k, &s.exterior.mass, lambda_max, &self.opts)?;
        let m = s.inclusion_count();
        let gamma: Vec<f64> = s.ranges.iter().map(|r| s.faces[r.clone()].iter().map(|f| f.measure).sum()).collect();
        let mut accepted = vec![];
        let mut excluded = vec![];
        let mut start = 0;
        while start < ep.values.len() {
            let l0 = ep.values[start];
            let spread = (1e-9 * l0).max(l0 * l0 * self.h * self.h);
            let mut end = start + 1;
            while end < ep.values.len() && ep.values[end] - ep.values[end - 1] <= spread {
                end += 1;
            }
            let vs = &ep.vectors[start..end];
            let d = vs.len();
            // F_{il} = flux of v_l through Γ_i (zero trace)
            let zero = vec![T::zero(); s.face_count()];
            let f = DMatrix::from_fn(m, d, |i, l| {
                let ue = &vs[l];
                s.per_inclusion(&s.exterior_flux(ue, &zero))[i]
            });
            let (sv, w) = herm_eig(&(f.adjoint() * &f));
            for q in 0..d {
                let coef: Vec<T> = w.column(q).iter().copied().collect();
                let mut ue = vec![T::zero(); s.exterior.len()];
                for (l, cf) in coef.iter().enumerate() {
                    for (x, v) in ue.iter_mut().zip(&vs[l]) {
                        *x += *cf * *v;
                    }
                }
                let kv = s.exterior.k.matvec(&ue);
                let lam = mdot(&vec![1.0; ue.len()], &ue, &kv).re() / mdot(&s.exterior.mass, &ue, &ue).re();
                let sup = max_abs(&ue);
                let fl = s.per_inclusion(&s.exterior_flux(&ue, &zero));
                let rel = (0..m)
                    .map(|i| fl[i].modulus() / (sup * gamma[i] * lam.sqrt().max(1.0)))
                    .fold(0.0, f64::max);
                let _ = sv[q];
                if rel <= TOL_FLUX * self.h {
                    let ue = crate::fdm::sup_normalize(&ue);
                    let u = s.scatter(&ue, &vec![T::zero(); s.interior.len()]);
                    let flux_residual = self.fluxes(&u).iter().map(|x| x.modulus()).fold(0.0, f64::max);
                    let pde_residual = self.pde_residual(lam, &u, &vec![T::zero(); m]);
                    accepted.push(LimitEigenpair {
                        lambda: lam,
                        c: vec![T::zero(); m],
                        u_plus: u,
                        branch: LimitBranch::ZeroFlux,
                        flux_residual,
                        pde_residual,
                    });
                } else {
                    excluded.push((lam, rel));
                }
            }
            start = end;
        }
        accepted.sort_by(|a: &LimitEigenpair<T>, b| a.lambda.total_cmp(&b.lambda));
        Ok(ZeroFluxReport { accepted, excluded })
    }

    /// Both branches, ascending.
    pub fn spectrum(&self, lambda_max: f64) -> Result<LimitSpectrum<T>> {
        let scan = self.det_scan(lambda_max)?;
        let zf = self.zero_flux_branch(lambda_max)?;
        let mut pairs: Vec<LimitEigenpair<T>> = scan.pairs.into_iter().chain(zf.accepted).collect();
        pairs.retain(|p| p.lambda > 0.0);
        pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        Ok(LimitSpectrum {
            pairs,
            poles: scan.poles,
            clusters: scan.clusters,
            unresolved: scan.unresolved,
            excluded: zf.excluded,
        })
    }

    /// ε = 0 source problem at a (complex) spectral parameter z:
    /// u⁻ = c_i on Ω₋^i, (−Δ − z)u⁺ = f₊ with u⁺ = c_i on Γ_i, closed by
    /// ∫_{Γ_i} ∂u⁺/∂n + z c_i|Ω₋^i| + ∫_{Ω₋^i} f₋ = 0.
    pub fn effective_solve(&self, z: C64, f: &[T]) -> Result<(Vec<C64>, Vec<C64>)> {
        let s = &self.split;
        let m = s.inclusion_count();
        let kc = to_complex(&s.exterior.k);
        let ldl = kc.factor(z, Some(&s.exterior.mass), Symmetry::Symmetric)?;
        if ldl.tiny_pivots() > 0 {
            return Err(Error::PoleProximity { lambda: z.re, distance: 0.0 });
        }
        let fc: Vec<C64> = f.iter().map(|x| x.to_c64()).collect();
        let rhs: Vec<C64> = s.exterior.cells.iter().zip(&s.exterior.mass).map(|(&c, w)| fc[c] * *w).collect();
        let u0 = ldl.solve(&rhs);
        let faces = &s.faces;
        let ext_pos = &s.exterior.pos;
        let flux_of = |u: &[C64], c: &[C64]| -> Vec<C64> {
            let mut out = vec![C64::new(0.0, 0.0); m];
            for fc in faces {
                out[fc.inclusion] += (u[ext_pos[fc.outside]] - c[fc.inclusion]) * fc.c_out;
            }
            out
        };
        let zero = vec![C64::new(0.0, 0.0); m];
        let mut src = vec![C64::new(0.0, 0.0); m];
        for (cell, cc) in s.mesh.cells.iter().enumerate() {
            if let Some(i) = cc.region {
                src[i] += fc[cell] * cc.volume;
            }
        }
        let base = flux_of(&u0, &zero);
        let mut a = DMatrix::<C64>::zeros(m, m);
        let mut ws = vec![];
        for j in 0..m {
            let mut e = zero.clone();
            e[j] = C64::new(1.0, 0.0);
            let mut b = vec![C64::new(0.0, 0.0); s.exterior.len()];
            for fcj in faces.iter().filter(|x| x.inclusion == j) {
                b[ext_pos[fcj.outside]] += C64::new(fcj.c_out, 0.0);
            }
            let w = ldl.solve(&b);
            let fl = flux_of(&w, &e);
            for i in 0..m {
                a[(i, j)] = fl[i];
            }
            a[(j, j)] += z * s.volumes[j];
            ws.push(w);
        }
        let rhs = nalgebra::DVector::from_fn(m, |i, _| -(base[i] + src[i]));
        let det = a.determinant();
        if det.norm() <= 1e-13 * a.norm().powi(m as i32) {
            return Err(Error::SingularReduced { det: det.norm() });
        }
        let c = a.lu().solve(&rhs).ok_or(Error::SingularReduced { det: det.norm() })?;
        let c: Vec<C64> = c.iter().copied().collect();
        let mut ue = u0;
        for (j, w) in ws.iter().enumerate() {
            for (x, y) in ue.iter_mut().zip(w) {
                *x += c[j] * *y;
            }
        }
        let mut u = vec![C64::new(0.0, 0.0); s.mesh.len()];
        for (&cell, v) in s.exterior.cells.iter().zip(&ue) {
            u[cell] = *v;
        }
        for (cell, cc) in s.mesh.cells.iter().enumerate() {
            if let Some(i) = cc.region {
                u[cell] = c[i];
            }
        }
        Ok((u, c))
    }
}

/// Both limit branches with scan diagnostics.
#[derive(Clone, Debug)]
pub struct LimitSpectrum<T> {
    pub pairs: Vec<LimitEigenpair<T>>,
    pub poles: Vec<f64>,
    pub clusters: Vec<(f64, f64)>,
    pub unresolved: Vec<(f64, f64)>,
    pub excluded: Vec<(f64, f64)>,
}

impl<T: Scalar> LimitSpectrum<T> {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn branch(&self, b: LimitBranch) -> Vec<&LimitEigenpair<T>> {
        self.pairs.iter().filter(|p| p.branch == b).collect()
    }
}

fn to_complex<T: Scalar>(k: &crate::linalg::Banded<T>) -> crate::linalg::Banded<C64> {
    let n = k.dim();
    let bw = k.bandwidth();
    let mut out = crate::linalg::Banded::<C64>::zeros(n, bw);
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            let v = k.get(i, j);
            if v != T::zero() {
                out.add(i, j, v.to_c64());
            }
        }
    }
    out
}

/// Euclidean norm 1, first nonzero entry real positive.
fn normalize_constants<T: Scalar>(c: &mut [T]) {
    let n = c.iter().map(|x| x.abs2()).sum::<f64>().sqrt();
    if n == 0.0 {
        return;
    }
    let first = c.iter().find(|x| x.modulus() > 1e-12 * n).copied().unwrap_or(T::one());
    let ph = first.conjugate() / T::of(first.modulus());
    for x in c.iter_mut() {
        *x = *x * ph / T::of(n);
    }
}

// ------------------------------------------------------------ wrappers

pub fn exterior_helmholtz_solve<T: Scalar>(med: &ContrastMedium, lambda: f64, c: &[T]) -> Result<Vec<T>> {
    LimitProblem::<T>::new(med)?.exterior_helmholtz_solve(lambda, c)
}

pub fn det_scan<T: Scalar>(med: &ContrastMedium, lambda_max: f64) -> Result<DetScan<T>> {
    LimitProblem::<T>::new(med)?.det_scan(lambda_max)
}

pub fn zero_flux_branch<T: Scalar>(med: &ContrastMedium, lambda_max: f64) -> Result<ZeroFluxReport<T>> {
    LimitProblem::<T>::new(med)?.zero_flux_branch(lambda_max)
}

/// Limit spectrum with the Neumann outer closure (positive part).
pub fn limit_spectrum_neumann(med: &ContrastMedium, lambda_max: f64) -> Result<LimitSpectrum<f64>> {
    let med = med.with_bc(BoundaryKind::Neumann);
    LimitProblem::<f64>::new(&med)?.spectrum(lambda_max)
}

/// Mean-zero ε = 0 solution of the Neumann source problem.
#[derive(Clone, Debug)]
pub struct NeumannLimitSolution {
    /// Mesh field: u₀⁺ outside, c_i inside.
    pub u: Vec<f64>,
    pub c: Vec<f64>,
    /// ∫_{Γ_i} ∂u⁺/∂n per inclusion.
    pub flux: Vec<f64>,
}

/// Neumann outer closure, zero-mean f: solve with zero inclusion
/// constants, then fix the constants by the flux balance of each
/// inclusion and the global mean-zero condition (least squares on the
/// consistent, rank-deficient system).
pub fn solve_limit_neumann(med: &ContrastMedium, f: &[f64]) -> Result<NeumannLimitSolution> {
    let med = med.with_bc(BoundaryKind::Neumann);
    let p = LimitProblem::<f64>::new(&med)?;
    let s = &p.split;
    let mesh = &s.mesh;
    if f.len() != mesh.len() {
        return Err(Error::Parameter(format!("source has {} values, mesh has {}", f.len(), mesh.len())));
    }
    let vol: f64 = mesh.volumes().iter().sum();
    let total: f64 = f.iter().zip(&mesh.cells).map(|(v, c)| v * c.volume).sum();
    let scale: f64 = f.iter().zip(&mesh.cells).map(|(v, c)| (v * c.volume).abs()).sum::<f64>().max(1.0);
    if total.abs() > 1e-12 * scale {
        return Err(Error::Solvability { mean: total / vol });
    }
    let m = s.inclusion_count();
    let ldl = s.exterior.factor(0.0)?;
    let u0 = ldl.solve(&s.exterior.mass_times(f));
    let zero = vec![0.0; m];
    let base = s.per_inclusion(&s.exterior_flux(&u0, &s.constant_trace(&zero)));
    let mut src = vec![0.0; m];
    for (cell, cc) in mesh.cells.iter().enumerate() {
        if let Some(i) = cc.region {
            src[i] += f[cell] * cc.volume;
        }
    }
    let mut ws = vec![];
    let mut a = DMatrix::<f64>::zeros(m + 1, m);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m + 1);
    for j in 0..m {
        let mut e = zero.clone();
        e[j] = 1.0;
        let phi = s.constant_trace(&e);
        let w = ldl.solve(&s.lift_exterior(&phi));
        let fl = s.per_inclusion(&s.exterior_flux(&w, &phi));
        for i in 0..m {
            a[(i, j)] = fl[i];
        }
        a[(m, j)] = mdot(&s.exterior.mass, &vec![1.0; w.len()], &w) + s.volumes[j];
        ws.push(w);
    }
    for i in 0..m {
        rhs[i] = -(base[i] + src[i]);
    }
    rhs[m] = -mdot(&s.exterior.mass, &vec![1.0; u0.len()], &u0);
    let c = a.clone().svd(true, true).solve(&rhs, 1e-12).map_err(|e| Error::Unsupported(e.to_string()))?;
    let c: Vec<f64> = c.iter().copied().collect();
    let mut ue = u0;
    for (j, w) in ws.iter().enumerate() {
        for (x, y) in ue.iter_mut().zip(w) {
            *x += c[j] * y;
        }
    }
    let u = s.scatter(&ue, &s.interior_constants(&c));
    let flux = s.per_inclusion(&s.exterior_flux(&ue, &s.constant_trace(&c)));
    Ok(NeumannLimitSolution { u, c, flux })
}

/// The ε = 0 resolvent R_z f on the medium's mesh.
pub fn effective_resolvent(med: &ContrastMedium, z: C64, f: &[f64]) -> Result<Vec<C64>> {
    Ok(LimitProblem::<f64>::new(med)?.effective_solve(z, f)?.0)
}

/// `branch,lambda,c_1..c_m,flux_residual,pde_residual`.
pub fn write_limit_csv<T: Scalar, W: Write>(pairs: &[LimitEigenpair<T>], m: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut head = vec!["branch".to_string(), "lambda".to_string()];
    head.extend((1..=m).map(|i| format!("c_{i}")));
    head.push("flux_residual".into());
    head.push("pde_residual".into());
    wr.write_record(&head)?;
    for p in pairs {
        let mut row = vec![p.branch.name().to_string(), p.lambda.to_string()];
        row.extend(p.c.iter().map(|x| fmt_scalar(*x)));
        row.push(p.flux_residual.to_string());
        row.push(p.pde_residual.to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
