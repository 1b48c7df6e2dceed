//! Discrete Dirichlet-to-Neumann reduction onto interface face values.
//!
//! With face values φ as unknowns, A_ε u = f is equivalent to
//!   (N⁻ − εN⁺)φ = ε M⁺f₊ − ε M⁻f₋,
//! N⁻ = C_in − B₋ᵀK₋⁻¹B₋ (interior flux out of Ω₋ for data φ),
//! N⁺ = B₊ᵀK₊⁻¹B₊ − C_out (exterior ∂u⁺/∂n, n out of Ω₋),
//! M⁺f₊ = B₊ᵀK₊⁻¹M₊f₊, M⁻f₋ = −B₋ᵀK₋⁻¹M₋f₋.
//! Traces split into per-inclusion constants ⊕ face-measure-weighted
//! zero-mean parts; N⁻ kills the constants, which is what makes the
//! system solvable uniformly down to ε = 0.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fdm::SourceField;
use crate::linalg::dense::{complement, max_asymmetry, polyfit, power_norm};
use crate::linalg::Ldl;
use crate::medium::{BoundaryKind, ContrastMedium};
use crate::mesh::Mesh;
use crate::scalar::{fmt_scalar, Scalar};
use crate::split::Split;

/// Trace on the interface faces and its constants ⊕ zero-mean split.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFunction<T> {
    pub values: Vec<T>,
    /// φ^c: weighted mean per inclusion.
    pub constants: Vec<T>,
    /// φ^⊥ = φ − φ^c (zero weighted mean on each Γ_i).
    pub perp: Vec<T>,
}

impl<T: Scalar> TraceFunction<T> {
    pub fn decompose(values: Vec<T>, weights: &[f64], incl: &[usize], m: usize) -> Self {
        let mut num = vec![T::zero(); m];
        let mut den = vec![0.0; m];
        for ((v, w), &i) in values.iter().zip(weights).zip(incl) {
            num[i] += *v * T::of(*w);
            den[i] += w;
        }
        let constants: Vec<T> = num.iter().zip(&den).map(|(n, d)| *n / T::of(*d)).collect();
        let perp = values.iter().zip(incl).map(|(v, &i)| *v - constants[i]).collect();
        TraceFunction { values, constants, perp }
    }
}

#[derive(Clone, Debug)]
pub struct DtnSystem<T> {
    pub split: Split<T>,
    pub n_minus: DMatrix<T>,
    pub n_plus: DMatrix<T>,
    /// Constants basis (face indicators, nΓ × m) and zero-mean basis.
    pub e_s: DMatrix<T>,
    pub e_perp: DMatrix<T>,
    pub n_minus_22: DMatrix<T>,
    pub n_plus_11: DMatrix<T>,
    pub n_plus_12: DMatrix<T>,
    pub n_plus_21: DMatrix<T>,
    pub n_plus_22: DMatrix<T>,
    /// Diagonal of N⁺₁₁ (Remark-type constants a_i).
    pub a: Vec<f64>,
    /// Admissible contrast bound 0.5 / ‖(N⁻₂₂)⁻¹N⁺₂₂‖.
    pub eps0: f64,
    ext: Ldl<T>,
    int: Ldl<T>,
    face_incl: Vec<usize>,
}

fn columns<T: Scalar>(ldl: &Ldl<T>, rhs: Vec<Vec<T>>) -> Vec<Vec<T>> {
    rhs.into_par_iter().map(|b| ldl.solve(&b)).collect()
}

impl<T: Scalar> DtnSystem<T> {
    pub fn new(med: &ContrastMedium) -> Result<Self> {
        if med.bc == BoundaryKind::Neumann {
            return Err(Error::Unsupported(
                "Neumann outer closure: use limitspec::solve_limit_neumann (no constants block)".into(),
            ));
        }
        let mesh = Arc::new(Mesh::build(med)?);
        Self::on_mesh(mesh, &med.bc)
    }

    pub fn on_mesh(mesh: Arc<Mesh>, bc: &BoundaryKind) -> Result<Self> {
        let split = Split::<T>::new(mesh, bc)?;
        let nf = split.face_count();
        let m = split.inclusion_count();
        let ext = split.exterior.factor(0.0)?;
        if ext.tiny_pivots() > 0 {
            return Err(Error::Factorization { pivot: 0, value: 0.0 });
        }
        let int = split.interior.factor(0.0)?;
        let unit = |f: usize| {
            let mut e = vec![T::zero(); nf];
            e[f] = T::one();
            e
        };
        let ue = columns(&ext, (0..nf).map(|f| split.lift_exterior(&unit(f))).collect());
        let ui = columns(&int, (0..nf).map(|f| split.lift_interior(&unit(f))).collect());
        let mut n_plus = DMatrix::zeros(nf, nf);
        let mut n_minus = DMatrix::zeros(nf, nf);
        for f in 0..nf {
            let e = unit(f);
            let fp = split.exterior_flux(&ue[f], &e);
            let fm = split.interior_flux(&ui[f], &e);
            for g in 0..nf {
                n_plus[(g, f)] = fp[g];
                n_minus[(g, f)] = fm[g];
            }
        }
        let face_incl: Vec<usize> = split.faces.iter().map(|f| f.inclusion).collect();
        let w = split.weights();
        let e_s = DMatrix::from_fn(nf, m, |f, i| if face_incl[f] == i { T::one() } else { T::zero() });
        let mut perp_cols: Vec<Vec<f64>> = vec![];
        for r in &split.ranges {
            for c in complement(&w[r.clone()]) {
                let mut full = vec![0.0; nf];
                full[r.clone()].copy_from_slice(&c);
                perp_cols.push(full);
            }
        }
        let e_perp = DMatrix::from_fn(nf, perp_cols.len(), |f, j| T::of(perp_cols[j][f]));
        let tr = |a: &DMatrix<T>| a.transpose();
        let n_minus_22 = tr(&e_perp) * &n_minus * &e_perp;
        let n_plus_11 = tr(&e_s) * &n_plus * &e_s;
        let n_plus_12 = tr(&e_s) * &n_plus * &e_perp;
        let n_plus_21 = tr(&e_perp) * &n_plus * &e_s;
        let n_plus_22 = tr(&e_perp) * &n_plus * &e_perp;
        let a = (0..m).map(|i| n_plus_11[(i, i)].re()).collect();
        let eps0 = if n_minus_22.nrows() == 0 {
            f64::INFINITY
        } else {
            let inv = n_minus_22.clone().lu().try_inverse().ok_or(Error::SingularReduced { det: 0.0 })?;
            let nrm = power_norm(&(inv * &n_plus_22), 200);
            if nrm > 0.0 {
                0.5 / nrm
            } else {
                f64::INFINITY
            }
        };
        Ok(DtnSystem {
            split,
            n_minus,
            n_plus,
            e_s,
            e_perp,
            n_minus_22,
            n_plus_11,
            n_plus_12,
            n_plus_21,
            n_plus_22,
            a,
            eps0,
            ext,
            int,
            face_incl,
        })
    }

    pub fn inclusion_count(&self) -> usize {
        self.split.inclusion_count()
    }

    /// M⁺f₊: exterior flux of the zero-trace exterior solve.
    pub fn m_plus(&self, f: &[T]) -> Vec<T> {
        let u = self.ext.solve(&self.split.exterior.mass_times(f));
        let zero = vec![T::zero(); self.split.face_count()];
        self.split.exterior_flux(&u, &zero)
    }

    /// M⁻f₋: interior flux (out of Ω₋) of the zero-trace interior solve.
    pub fn m_minus(&self, f: &[T]) -> Vec<T> {
        let u = self.int.solve(&self.split.interior.mass_times(f));
        let zero = vec![T::zero(); self.split.face_count()];
        self.split.interior_flux(&u, &zero)
    }

    /// Largest |X − Xᴴ| over N⁻ and N⁺.
    pub fn symmetry_defect(&self) -> f64 {
        max_asymmetry(&self.n_minus).max(max_asymmetry(&self.n_plus))
    }

    /// Per-inclusion total flux of N⁻ applied to each indicator trace.
    pub fn constants_defect(&self) -> f64 {
        let r = &self.n_minus * &self.e_s;
        let mut worst: f64 = 0.0;
        for j in 0..r.ncols() {
            let col: Vec<T> = r.column(j).iter().copied().collect();
            for v in self.split.per_inclusion(&col) {
                worst = worst.max(v.modulus());
            }
        }
        worst
    }

    fn check_eps(&self, eps: f64) -> Result<()> {
        if !(eps.abs() <= self.eps0) {
            return Err(Error::Parameter(format!("|epsilon| = {} exceeds eps0 = {}", eps.abs(), self.eps0)));
        }
        Ok(())
    }

    /// Two-step elimination: zero-mean block first, then the m×m system
    /// for the constants.
    pub fn solve_block_system(&self, eps: f64, f: &SourceField<T>) -> Result<TraceFunction<T>> {
        self.check_eps(eps)?;
        if f.values.len() != self.split.mesh.len() {
            return Err(Error::Parameter(format!("source has {} values, mesh has {}", f.values.len(), self.split.mesh.len())));
        }
        let mp = self.m_plus(&f.values);
        let mm = self.m_minus(&f.values);
        let r = DVector::from_iterator(mp.len(), mp.iter().zip(&mm).map(|(p, q)| *p - *q));
        let r_s = self.e_s.transpose() * &r;
        let r_p = self.e_perp.transpose() * &r;
        let e = T::of(eps);
        let (c, p) = if eps == 0.0 || self.e_perp.ncols() == 0 {
            let c = self.reduced_solve(&self.n_plus_11, &(-&r_s))?;
            (c, DVector::zeros(self.e_perp.ncols()))
        } else {
            let a22 = &self.n_minus_22 - &self.n_plus_22 * e;
            let lu = a22.lu();
            let g = lu.solve(&self.n_plus_21).ok_or(Error::SingularReduced { det: 0.0 })?;
            let hh = lu.solve(&r_p).ok_or(Error::SingularReduced { det: 0.0 })?;
            let red = &self.n_plus_11 + &self.n_plus_12 * &g * e;
            let rhs = -&r_s - &self.n_plus_12 * &hh * e;
            let c = self.reduced_solve(&red, &rhs)?;
            let p = (&g * &c + hh) * e;
            (c, p)
        };
        let phi = &self.e_s * &c + &self.e_perp * &p;
        let m = self.inclusion_count();
        Ok(TraceFunction::decompose(phi.iter().copied().collect(), &self.split.weights(), &self.face_incl, m))
    }

    fn reduced_solve(&self, a: &DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
        let det = a.clone().determinant().modulus();
        let scale = a.iter().map(|x| x.modulus()).fold(0.0, f64::max).powi(a.nrows() as i32);
        if !(det > 1e-12 * scale) {
            return Err(Error::SingularReduced { det });
        }
        a.clone().lu().solve(b).ok_or(Error::SingularReduced { det })
    }

    /// B̂_ε f: the mesh field (u⁺ outside, u⁻ inside) rebuilt from the
    /// trace by the two Dirichlet solves; at ε = 0 u⁻ is set to c₀.
    pub fn apply_bhat(&self, eps: f64, f: &SourceField<T>) -> Result<(TraceFunction<T>, Vec<T>)> {
        let tr = self.solve_block_system(eps, f)?;
        let s = &self.split;
        let mut be = s.lift_exterior(&tr.values);
        for (x, y) in be.iter_mut().zip(s.exterior.mass_times(&f.values)) {
            *x += y;
        }
        let ue = self.ext.solve(&be);
        let ui = if eps == 0.0 {
            s.interior_constants(&tr.constants)
        } else {
            let mut bi = s.lift_interior(&tr.values);
            for (x, y) in bi.iter_mut().zip(s.interior.mass_times(&f.values)) {
                *x += y * T::of(eps);
            }
            self.int.solve(&bi)
        };
        Ok((tr, s.scatter(&ue, &ui)))
    }

    /// Exterior harmonic extension of the indicator of Γ_i (mesh field).
    pub fn unit_extension(&self, i: usize) -> Result<Vec<T>> {
        let m = self.inclusion_count();
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, count: m });
        }
        let mut c = vec![T::zero(); m];
        c[i] = T::one();
        let phi = self.split.constant_trace(&c);
        let ue = self.ext.solve(&self.split.lift_exterior(&phi));
        Ok(self.split.scatter(&ue, &self.split.interior_constants(&c)))
    }

    /// ∫_{Ω₊}|∇u|² by the link-graph quadrature: Σ g (u_a − u_b)² over
    /// matrix links, plus the half-links to Γ (trace = inclusion value)
    /// and to a Dirichlet outer boundary.
    pub fn dirichlet_energy(&self, u: &[T]) -> f64 {
        let mesh = &self.split.mesh;
        let ext = |c: usize| mesh.cells[c].region.is_none();
        let mut e = 0.0;
        for l in &mesh.links {
            if ext(l.a) && ext(l.b) {
                let g = l.measure / (l.da + l.db);
                let ph = crate::fdm::bloch_phase(&self.split.bc, mesh.period, l.shift);
                let ub = T::try_from_c64(ph * u[l.b].to_c64()).unwrap_or(u[l.b]);
                e += g * (u[l.a] - ub).abs2();
            }
        }
        for f in &self.split.faces {
            e += f.c_out * (u[f.outside] - u[f.inside]).abs2();
        }
        if self.split.bc == BoundaryKind::Dirichlet {
            for o in &mesh.outer {
                if ext(o.cell) {
                    e += o.measure / o.dist * u[o.cell].abs2();
                }
            }
        }
        e
    }

    /// Dense CSV dumps of N⁻, N⁺ and (columns over cells) M⁺, M⁻.
    pub fn write_blocks<W: Write>(&self, mut w: W) -> Result<()> {
        let dump = |w: &mut W, name: &str, a: &DMatrix<T>| -> Result<()> {
            writeln!(w, "# {name} {}x{}", a.nrows(), a.ncols())?;
            for r in 0..a.nrows() {
                let row: Vec<String> = (0..a.ncols()).map(|c| fmt_scalar(a[(r, c)])).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        };
        dump(&mut w, "N_minus", &self.n_minus)?;
        dump(&mut w, "N_plus", &self.n_plus)?;
        let n = self.split.mesh.len();
        let nf = self.split.face_count();
        let cols = |minus: bool| {
            let mut a = DMatrix::zeros(nf, n);
            for c in 0..n {
                let mut f = vec![T::zero(); n];
                f[c] = T::one();
                let v = if minus { self.m_minus(&f) } else { self.m_plus(&f) };
                for (g, x) in v.into_iter().enumerate() {
                    a[(g, c)] = x;
                }
            }
            a
        };
        dump(&mut w, "M_plus", &cols(false))?;
        dump(&mut w, "M_minus", &cols(true))?;
        Ok(())
    }
}

pub fn build_dtn<T: Scalar>(med: &ContrastMedium) -> Result<DtnSystem<T>> {
    DtnSystem::new(med)
}

pub fn solve_block_system<T: Scalar>(sys: &DtnSystem<T>, eps: f64, f: &SourceField<T>) -> Result<TraceFunction<T>> {
    sys.solve_block_system(eps, f)
}

pub fn apply_bhat<T: Scalar>(sys: &DtnSystem<T>, eps: f64, f: &SourceField<T>) -> Result<Vec<T>> {
    Ok(sys.apply_bhat(eps, f)?.1)
}

/// Polynomial fits of the trace entries in ε.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub degree: usize,
    /// Max over entries of the relative fit residual, for degrees 0..=degree.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// residual(degree) / residual(degree − 1).
    pub ratio: f64,
    /// Fit coefficients (ascending powers) of the constants c_i(ε), real parts.
    pub constant_coefficients: Vec<Vec<f64>>,
}

/// Fit φ(ε) over a geometric ε list with polynomials up to `degree`.
pub fn analyticity_probe<T: Scalar>(sys: &DtnSystem<T>, f: &SourceField<T>, eps_list: &[f64], degree: usize) -> Result<ProbeReport> {
    if degree == 0 || eps_list.len() < degree + 2 {
        return Err(Error::Parameter(format!("need degree >= 1 and >= {} epsilon values", degree + 2)));
    }
    let traces: Vec<TraceFunction<T>> =
        eps_list.iter().map(|&e| sys.solve_block_system(e, f)).collect::<Result<_>>()?;
    let nf = traces[0].values.len();
    let mut series: Vec<Vec<f64>> = vec![];
    for f in 0..nf {
        series.push(traces.iter().map(|t| t.values[f].to_c64().re).collect());
        if T::COMPLEX {
            series.push(traces.iter().map(|t| t.values[f].to_c64().im).collect());
        }
    }
    let ones = vec![1.0; eps_list.len()];
    let mut residuals = vec![];
    for d in 0..=degree {
        let mut worst: f64 = 0.0;
        for y in &series {
            let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            let (_, r) = polyfit(eps_list, y, &ones, d);
            worst = worst.max(r / scale);
        }
        residuals.push(worst);
    }
    let m = sys.inclusion_count();
    let constant_coefficients = (0..m)
        .map(|i| {
            let y: Vec<f64> = traces.iter().map(|t| t.constants[i].to_c64().re).collect();
            polyfit(eps_list, &y, &ones, degree).0
        })
        .collect();
    let max_residual = residuals[degree];
    let prev = residuals[degree - 1];
    let ratio = if prev > 0.0 { max_residual / prev } else { 0.0 };
    Ok(ProbeReport { degree, residuals, max_residual, ratio, constant_coefficients })
}
