//! Real/complex scalar abstraction. Real for Dirichlet/Neumann, complex
//! (Hermitian) once a Bloch phase enters.

use nalgebra::{ComplexField, Complex};

pub type C64 = Complex<f64>;

pub trait Scalar: ComplexField<RealField = f64> + Copy + Default + Send + Sync {
    const COMPLEX: bool;
    /// Narrow a complex number; `None` when the type cannot hold it.
    fn try_from_c64(c: C64) -> Option<Self>;
    fn to_c64(self) -> C64;
    fn re(self) -> f64 {
        self.to_c64().re
    }
    fn abs2(self) -> f64 {
        self.modulus_squared()
    }
    fn of(x: f64) -> Self {
        Self::from_real(x)
    }
}

impl Scalar for f64 {
    const COMPLEX: bool = false;
    fn try_from_c64(c: C64) -> Option<Self> {
        if c.im.abs() <= 1e-14 * (1.0 + c.re.abs()) {
            Some(c.re)
        } else {
            None
        }
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    const COMPLEX: bool = true;
    fn try_from_c64(c: C64) -> Option<Self> {
        Some(c)
    }
    fn to_c64(self) -> C64 {
        self
    }
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    // <x, y> = sum conj(x_i) y_i
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
}

/// Mass-weighted inner product sum m_i conj(x_i) y_i.
pub fn mdot<T: Scalar>(m: &[f64], x: &[T], y: &[T]) -> T {
    m.iter()
        .zip(x.iter().zip(y))
        .fold(T::zero(), |acc, (w, (a, b))| acc + a.conjugate() * *b * T::of(*w))
}

pub fn mnorm<T: Scalar>(m: &[f64], x: &[T]) -> f64 {
    m.iter()
        .zip(x)
        .map(|(w, a)| w * a.abs2())
        .sum::<f64>()
        .sqrt()
}

pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|a| a.abs2()).sum::<f64>().sqrt()
}

pub fn max_abs<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|a| a.modulus()).fold(0.0, f64::max)
}

/// Text form used in CSV output: plain real, or `re+imi` when complex.
pub fn fmt_scalar<T: Scalar>(x: T) -> String {
    let c = x.to_c64();
    if T::COMPLEX {
        format!("{}{:+}i", c.re, c.im)
    } else {
        format!("{}", c.re)
    }
}
