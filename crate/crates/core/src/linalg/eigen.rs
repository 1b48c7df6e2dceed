//! Generalised eigenproblem K v = λ M v, M diagonal positive.
//!
//! Eigenvalues come from bisection on the Sturm count (negative pivots of
//! K − σM, Sylvester), vectors from shift-invert inverse iteration with
//! deflation against already accepted vectors of the same cluster.

use super::banded::{Banded, Symmetry};
use crate::error::{Error, Result};
use crate::scalar::{mdot, mnorm, Scalar};

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Residual tolerance relative to the Gershgorin bound of M⁻¹K.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative width at which bisection stops.
    pub bisect_rtol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-8, max_iter: 500, bisect_rtol: 2e-15 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs<T> {
    pub values: Vec<f64>,
    /// M-orthonormal.
    pub vectors: Vec<Vec<T>>,
    /// ‖M⁻¹(Kv − λMv)‖_M / ‖M⁻¹K‖.
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Bisection state for one pencil; remembers every count it evaluated.
pub struct Sturm<'a, T: Scalar> {
    k: &'a Banded<T>,
    m: &'a [f64],
    samples: Vec<(f64, usize)>,
    lo: f64,
    hi: f64,
    pub evaluations: usize,
}

impl<'a, T: Scalar> Sturm<'a, T> {
    pub fn new(k: &'a Banded<T>, m: &'a [f64]) -> Self {
        let (gl, gh) = k.gershgorin(m);
        let lo = gl.min(0.0) - 1e-12 * gh.abs() - 1e-300;
        let hi = gh * (1.0 + 1e-10) + 1e-300;
        Sturm { k, m, samples: vec![(lo, 0), (hi, k.dim())], lo, hi, evaluations: 0 }
    }

    /// Upper bound on the spectrum of M⁻¹K.
    pub fn norm_bound(&self) -> f64 {
        self.hi.abs().max(self.lo.abs())
    }

    /// Number of eigenvalues strictly below σ.
    pub fn count(&mut self, sigma: f64) -> Result<usize> {
        if let Some(&(_, c)) = self.samples.iter().find(|(s, _)| *s == sigma) {
            return Ok(c);
        }
        if sigma <= self.lo {
            return Ok(0);
        }
        if sigma >= self.hi {
            return Ok(self.k.dim());
        }
        self.evaluations += 1;
        let c = self
            .k
            .factor(T::of(sigma), Some(self.m), Symmetry::Hermitian)?
            .negative_count();
        let at = self.samples.partition_point(|(s, _)| *s < sigma);
        self.samples.insert(at, (sigma, c));
        Ok(c)
    }

    /// Tightest cached bracket [lo, hi] with count(lo) <= j < count(hi).
    fn bracket(&self, j: usize) -> (f64, f64) {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for &(s, c) in &self.samples {
            if c <= j {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        (lo, hi)
    }

    /// j-th (0-based) eigenvalue by bisection, with its final bracket.
    pub fn eigenvalue(&mut self, j: usize, rtol: f64) -> Result<(f64, f64, f64)> {
        if j >= self.k.dim() {
            return Err(Error::Parameter(format!("eigenvalue index {j} >= dimension {}", self.k.dim())));
        }
        let atol = 1e-15 * self.norm_bound();
        // walk upward in doubling steps first: Gershgorin upper bounds are
        // huge at high contrast, bisecting from there wastes ~40 steps
        let (mut lo, mut hi) = self.bracket(j);
        if hi > 4.0 * lo.max(1.0) {
            let mut probe = lo.max(0.0).max(1.0);
            while probe < hi {
                if self.count(probe)? > j {
                    break;
                }
                probe *= 2.0;
            }
            let b = self.bracket(j);
            lo = b.0;
            hi = b.1;
        }
        for _ in 0..400 {
            if hi - lo <= rtol * lo.abs().max(hi.abs()) || hi - lo <= atol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count(mid)? > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((0.5 * (lo + hi), lo, hi))
    }
}

fn start_vector<T: Scalar>(n: usize, j: usize) -> Vec<T> {
    // fixed, deterministic, rich in all modes
    (0..n)
        .map(|i| {
            let x = i as f64 + 1.0;
            let y = j as f64 + 1.0;
            T::of((0.7548776662 * x * y).sin() + 0.5 * (1.3247179572 * x + y).cos() + 0.1)
        })
        .collect()
}

fn project_out<T: Scalar>(m: &[f64], v: &mut [T], basis: &[&Vec<T>]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = mdot(m, b, v);
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= c * *bi;
            }
        }
    }
}

fn normalize_phase<T: Scalar>(v: &mut [T]) {
    // largest entry (first one on ties) made real positive
    let mut best = 0;
    let mut bv = -1.0;
    for (i, x) in v.iter().enumerate() {
        let a = x.modulus();
        if a > bv * (1.0 + 1e-12) {
            bv = a;
            best = i;
        }
    }
    if bv > 0.0 {
        let ph = v[best] / T::of(bv);
        let ph = ph.conjugate();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

/// Residual ‖M⁻¹(Kv − λMv)‖_M for an M-normalised v.
pub fn residual<T: Scalar>(k: &Banded<T>, m: &[f64], lambda: f64, v: &[T]) -> f64 {
    let kv = k.matvec(v);
    kv.iter()
        .zip(v)
        .zip(m)
        .map(|((a, b), w)| (*a - *b * T::of(lambda * w)).abs2() / w)
        .sum::<f64>()
        .sqrt()
}

/// Eigenpairs with 0-based indices `first..first+count` of the pencil,
/// M-orthogonal to `deflate` (which must itself be M-orthonormal and
/// spanned by eigenvectors, e.g. the Neumann constant).
pub fn eigenpairs<T: Scalar>(
    k: &Banded<T>,
    m: &[f64],
    first: usize,
    count: usize,
    deflate: &[Vec<T>],
    opts: &EigenOptions,
) -> Result<Eigenpairs<T>> {
    let n = k.dim();
    if first + count > n {
        return Err(Error::Parameter(format!("asked for {} eigenpairs of a {n}-dimensional problem", first + count)));
    }
    let mut st = Sturm::new(k, m);
    let scale = st.norm_bound().max(1e-300);
    let mut out = Eigenpairs { values: vec![], vectors: vec![], residuals: vec![], iterations: vec![] };
    for j in first..first + count {
        let (lam, _, _) = st.eigenvalue(j, opts.bisect_rtol)?;
        let (v, res, it) = inverse_iteration(k, m, lam, j, &out, deflate, scale, opts)?;
        out.values.push(lam);
        out.vectors.push(v);
        out.residuals.push(res);
        out.iterations.push(it);
    }
    Ok(out)
}

/// All eigenvalues strictly below `lambda_max` (values only).
pub fn eigenvalues_below<T: Scalar>(k: &Banded<T>, m: &[f64], lambda_max: f64, opts: &EigenOptions) -> Result<Vec<f64>> {
    let mut st = Sturm::new(k, m);
    let n = st.count(lambda_max)?;
    (0..n).map(|j| st.eigenvalue(j, opts.bisect_rtol).map(|r| r.0)).collect()
}

/// Eigenpairs for every eigenvalue strictly below `lambda_max`.
pub fn eigenpairs_below<T: Scalar>(k: &Banded<T>, m: &[f64], lambda_max: f64, opts: &EigenOptions) -> Result<Eigenpairs<T>> {
    let n = Sturm::new(k, m).count(lambda_max)?;
    eigenpairs(k, m, 0, n, &[], opts)
}

#[allow(clippy::too_many_arguments)]
fn inverse_iteration<T: Scalar>(
    k: &Banded<T>,
    m: &[f64],
    lam: f64,
    j: usize,
    done: &Eigenpairs<T>,
    deflate: &[Vec<T>],
    scale: f64,
    opts: &EigenOptions,
) -> Result<(Vec<T>, f64, usize)> {
    let n = k.dim();
    let fac = k.factor(T::of(lam), Some(m), Symmetry::Hermitian)?;
    let cluster_tol = 1e-6 * lam.abs().max(1e-9 * scale);
    let mut basis: Vec<&Vec<T>> = deflate.iter().collect();
    for (v, &l) in done.vectors.iter().zip(&done.values) {
        if (l - lam).abs() <= cluster_tol {
            basis.push(v);
        }
    }
    let mut v: Vec<T> = start_vector(n, j);
    project_out(m, &mut v, &basis);
    let nv = mnorm(m, &v);
    for x in v.iter_mut() {
        *x /= T::of(nv);
    }
    let mut res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let rhs: Vec<T> = v.iter().zip(m).map(|(x, w)| *x * T::of(*w)).collect();
        let mut w = fac.solve(&rhs);
        project_out(m, &mut w, &basis);
        let nw = mnorm(m, &w);
        if !(nw.is_finite() && nw > 0.0) {
            return Err(Error::NonConvergence { iterations: it, residual: f64::NAN });
        }
        for (x, y) in v.iter_mut().zip(&w) {
            *x = *y / T::of(nw);
        }
        res = residual(k, m, lam, &v) / scale;
        if it >= 2 && res <= opts.tol {
            normalize_phase(&mut v);
            return Ok((v, res, it));
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let h = 1.0 / (n as f64 + 1.0);
        let mut k = Banded::<f64>::zeros(n, 1);
        for i in 0..n {
            k.add(i, i, 2.0 / h);
            if i > 0 {
                k.add(i, i - 1, -1.0 / h);
            }
        }
        let m = vec![h; n];
        let ep = eigenpairs(&k, &m, 0, 4, &[], &EigenOptions::default()).unwrap();
        for (j, &l) in ep.values.iter().enumerate() {
            let exact = (2.0 - 2.0 * ((j + 1) as f64 * PI * h).cos()) / (h * h);
            assert!((l - exact).abs() < 1e-10 * exact, "{l} vs {exact}");
            assert!(ep.residuals[j] < 1e-8);
        }
        // M-orthonormal
        for a in 0..4 {
            for b in 0..4 {
                let d = mdot(&m, &ep.vectors[a], &ep.vectors[b]);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_pair_gets_orthogonal_vectors() {
        // two decoupled identical blocks: every eigenvalue is double
        let n = 20;
        let mut k = Banded::<f64>::zeros(2 * n, 1);
        for b in 0..2 {
            for i in 0..n {
                let g = b * n + i;
                k.add(g, g, 2.0);
                if i > 0 {
                    k.add(g, g - 1, -1.0);
                }
            }
        }
        let m = vec![1.0; 2 * n];
        let ep = eigenpairs(&k, &m, 0, 4, &[], &EigenOptions::default()).unwrap();
        assert!((ep.values[0] - ep.values[1]).abs() < 1e-12);
        let d = mdot(&m, &ep.vectors[0], &ep.vectors[1]);
        assert!(d.abs() < 1e-9);
    }
}
