//! Hermitian band storage and an unpivoted LDLᴴ (or complex-symmetric LDLᵀ)
//! factorization. The pivot signs give the inertia, which is what the
//! eigen solver bisects on.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// A = Aᴴ; pivots are real and count eigenvalues.
    Hermitian,
    /// A = Aᵀ with complex entries allowed on the shift (resolvents).
    Symmetric,
}

/// Lower band of a Hermitian matrix, row major:
/// entry (i, j), i - bw <= j <= i, lives at `i*(bw+1) + j + bw - i`.
#[derive(Clone, Debug)]
pub struct Banded<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> Banded<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Banded { n, bw, data: vec![T::zero(); n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + j + self.bw - i
    }

    /// Accumulate `v` into A[i][j] (and its mirror).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c, v) = if i >= j { (i, j, v) } else { (j, i, v.conjugate()) };
        assert!(r - c <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        let k = self.at(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i >= j {
            if i - j > self.bw {
                T::zero()
            } else {
                self.data[self.at(i, j)]
            }
        } else {
            self.get(j, i).conjugate()
        }
    }

    pub fn diag(&self, i: usize) -> T {
        self.data[self.at(i, i)]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = row[self.bw] * x[i];
            for j in j0..i {
                let a = row[j + self.bw - i];
                acc += a * x[j];
                y[j] += a.conjugate() * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// Largest deviation from Hermitian symmetry of the diagonal (the only
    /// place a lower-band store can break it).
    pub fn diag_imag_max(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).to_c64().im.abs()).fold(0.0, f64::max)
    }

    /// Gershgorin bounds for the pencil (K, diag(m)): every eigenvalue of
    /// M⁻¹K lies in [lo, hi].
    pub fn gershgorin(&self, m: &[f64]) -> (f64, f64) {
        let mut off = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..i {
                let a = self.data[self.at(i, j)].modulus();
                off[i] += a;
                off[j] += a;
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let d = self.diag(i).re();
            lo = lo.min((d - off[i]) / m[i]);
            hi = hi.max((d + off[i]) / m[i]);
        }
        (lo, hi)
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Banded<T> {
        let mut pos = vec![usize::MAX; self.n];
        for (p, &i) in keep.iter().enumerate() {
            pos[i] = p;
        }
        let mut bw = 0;
        for &i in keep {
            for j in i.saturating_sub(self.bw)..i {
                if pos[j] != usize::MAX && self.data[self.at(i, j)] != T::zero() {
                    bw = bw.max(pos[i] - pos[j]);
                }
            }
        }
        let mut out = Banded::zeros(keep.len(), bw);
        for &i in keep {
            for j in i.saturating_sub(self.bw)..=i {
                if pos[j] != usize::MAX {
                    let v = self.data[self.at(i, j)];
                    if v != T::zero() {
                        out.add(pos[i], pos[j], v);
                    }
                }
            }
        }
        out
    }

    /// Factor A − shift·diag(m) (m = identity when `None`).
    pub fn factor(&self, shift: T, m: Option<&[f64]>, sym: Symmetry) -> Result<Ldl<T>> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = vec![T::zero(); n * w];
        let mut d = vec![T::zero(); n];
        let cj = |x: T| match sym {
            Symmetry::Hermitian => x.conjugate(),
            Symmetry::Symmetric => x,
        };
        let scale = (0..n).map(|i| self.diag(i).modulus()).fold(0.0, f64::max).max(1e-300);
        let mut tiny = 0;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                let mut s = self.data[i * w + j + bw - i];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + k + bw - i] * d[k] * cj(l[j * w + k + bw - j]);
                }
                l[i * w + j + bw - i] = s / d[j];
            }
            let mi = m.map_or(1.0, |m| m[i]);
            let mut s = self.data[i * w + bw] - shift * T::of(mi);
            for k in j0..i {
                let lik = l[i * w + k + bw - i];
                s -= lik * d[k] * cj(lik);
            }
            if sym == Symmetry::Hermitian {
                s = T::of(s.re());
            }
            if !s.modulus().is_finite() {
                return Err(Error::Factorization { pivot: i, value: s.modulus() });
            }
            if s.modulus() <= f64::EPSILON * 1e-6 * scale {
                // exact singularity: nudge so solves stay finite
                tiny += 1;
                s = T::of(f64::EPSILON * scale);
            }
            d[i] = s;
        }
        Ok(Ldl { n, bw, l, d, sym, tiny })
    }
}

/// A = L D Lᴴ (Hermitian) or L D Lᵀ (symmetric).
#[derive(Clone, Debug)]
pub struct Ldl<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
    d: Vec<T>,
    sym: Symmetry,
    tiny: usize,
}

impl<T: Scalar> Ldl<T> {
    /// Number of negative pivots (Hermitian mode only meaningful).
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|d| d.re() < 0.0).count()
    }

    /// Pivots that were exactly singular and got nudged.
    pub fn tiny_pivots(&self) -> usize {
        self.tiny
    }

    pub fn pivots(&self) -> &[T] {
        &self.d
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + k + bw - i] * y[k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for r in (i + 1)..n.min(i + bw + 1) {
                let lri = self.l[r * w + i + bw - r];
                let lri = match self.sym {
                    Symmetry::Hermitian => lri.conjugate(),
                    Symmetry::Symmetric => lri,
                };
                s -= lri * y[r];
            }
            y[i] = s;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;

    fn lap(n: usize) -> Banded<f64> {
        let mut a = Banded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn solve_tridiagonal() {
        let a = lap(6);
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.3 - 1.0).collect();
        let b = a.matvec(&x);
        let f = a.factor(0.0, None, Symmetry::Hermitian).unwrap();
        let y = f.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
        assert_eq!(f.negative_count(), 0);
    }

    #[test]
    fn inertia_counts_eigenvalues() {
        // eigenvalues of the n=5 stencil: 2 - 2cos(jπ/6)
        let a = lap(5);
        let ev: Vec<f64> = (1..=5).map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / 6.0).cos()).collect();
        for (j, &e) in ev.iter().enumerate() {
            let below = a.factor(e - 1e-9, None, Symmetry::Hermitian).unwrap().negative_count();
            let above = a.factor(e + 1e-9, None, Symmetry::Hermitian).unwrap().negative_count();
            assert_eq!(below, j);
            assert_eq!(above, j + 1);
        }
    }

    #[test]
    fn hermitian_complex_wider_band() {
        let n = 7;
        let mut a = Banded::<C64>::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, C64::new(5.0, 0.0));
            if i >= 1 {
                a.add(i, i - 1, C64::new(-1.0, 0.5));
            }
            if i >= 2 {
                a.add(i, i - 2, C64::new(0.2, -0.3));
            }
        }
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x);
        // dense check of the matvec against get()
        for i in 0..n {
            let s: C64 = (0..n).map(|j| a.get(i, j) * x[j]).sum();
            assert!((s - b[i]).norm() < 1e-12);
        }
        let y = a.factor(C64::new(0.0, 0.0), None, Symmetry::Hermitian).unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_symmetric_shift() {
        let a = lap(8);
        let ac: Banded<C64> = {
            let mut c = Banded::zeros(8, 1);
            for i in 0..8usize {
                for j in i.saturating_sub(1)..=i {
                    c.add(i, j, C64::new(a.get(i, j), 0.0));
                }
            }
            c
        };
        let z = C64::new(1.0, 0.5);
        let x: Vec<C64> = (0..8).map(|i| C64::new(1.0, i as f64)).collect();
        let mut b = ac.matvec(&x);
        for i in 0..8 {
            b[i] -= z * x[i];
        }
        let y = ac.factor(z, None, Symmetry::Symmetric).unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn restrict_keeps_entries() {
        let a = lap(6);
        let r = a.restrict(&[1, 2, 4, 5]);
        assert_eq!(r.dim(), 4);
        assert_eq!(r.get(0, 1), -1.0);
        assert_eq!(r.get(1, 2), 0.0);
        assert_eq!(r.get(2, 3), -1.0);
        assert_eq!(r.get(3, 3), 2.0);
    }
}
