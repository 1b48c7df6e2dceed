//! Small dense helpers on top of nalgebra (DtN blocks, T(λ), fits).

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Hermitian eigen-decomposition, eigenvalues ascending.
pub fn herm_eig<T: Scalar>(a: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let sym = hermitian_part(a);
    let e = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn hermitian_part<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.adjoint()) * T::of(0.5)
}

pub fn max_asymmetry<T: Scalar>(a: &DMatrix<T>) -> f64 {
    let d = a - a.adjoint();
    d.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

pub fn negative_count<T: Scalar>(a: &DMatrix<T>) -> usize {
    herm_eig(a).0.iter().filter(|&&x| x < 0.0).count()
}

/// Orthonormal basis (columns) of the orthogonal complement of span(v)
/// in Rⁿ, by Gram-Schmidt on the unit vectors.
pub fn complement(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![v.iter().map(|x| x / nv).collect()];
    for e in 0..n {
        let mut w = vec![0.0; n];
        w[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = b.iter().zip(&w).map(|(p, q)| p * q).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw > 1e-8 {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Largest singular value estimate of a square matrix by power iteration
/// on AᴴA from a fixed start vector.
pub fn power_norm<T: Scalar>(a: &DMatrix<T>, iters: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| T::of(1.0 + 0.1 * ((i as f64) * 0.618).sin()));
    let mut s = 0.0;
    for _ in 0..iters {
        let y = a.adjoint() * (a * &x);
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        s = ny.sqrt();
        x = y / T::of(ny);
    }
    // s² ≈ ‖AᴴA x‖ with ‖x‖ = 1 on the last step
    let _ = s;
    (a * &x).norm()
}

/// Weighted least-squares polynomial fit y ≈ Σ c_p x^p, p = 0..=deg.
/// Returns (coefficients, weighted residual norm).
pub fn polyfit(x: &[f64], y: &[f64], w: &[f64], deg: usize) -> (Vec<f64>, f64) {
    let n = x.len();
    let a = DMatrix::from_fn(n, deg + 1, |i, p| w[i] * x[i].powi(p as i32));
    let b = DVector::from_fn(n, |i, _| w[i] * y[i]);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("svd solve");
    let r = &a * &c - &b;
    (c.iter().copied().collect(), r.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let v = [1.0, 2.0, 2.0];
        let c = complement(&v);
        assert_eq!(c.len(), 2);
        for a in &c {
            let d: f64 = a.iter().zip(&v).map(|(p, q)| p * q).sum();
            assert!(d.abs() < 1e-14);
            let n: f64 = a.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn polyfit_recovers_line() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * t).collect();
        let (c, r) = polyfit(&x, &y, &[1.0; 4], 1);
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn power_norm_diag() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert!((power_norm(&a, 200) - 3.0).abs() < 1e-8);
    }
}
