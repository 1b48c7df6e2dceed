//! Scalar root finding: bracketed bisection with a guarded Newton polish,
//! scan-and-bracket between known poles, and the continued-fraction
//! rationality test used for the S₁ arithmetic condition.

use crate::error::{Error, Result};

/// Bisect a sign change of `f` on [lo, hi] until the bracket is below
/// `tol` (absolute) or stops shrinking.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.signum() != fhi.signum()) || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Bracket { lo, hi, reason: format!("no sign change (f = {flo:e}, {fhi:e})") });
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One Newton step from `x` with a central-difference derivative, kept
/// only if it stays in [lo, hi] and lowers |f|.
pub fn newton_polish<F: Fn(f64) -> f64>(f: &F, x: f64, lo: f64, hi: f64) -> f64 {
    let fx = f(x);
    let d = 1e-7 * x.abs().max(1e-7);
    let df = (f(x + d) - f(x - d)) / (2.0 * d);
    if !(df.is_finite() && df != 0.0) {
        return x;
    }
    let y = x - fx / df;
    if y >= lo && y <= hi && f(y).abs() < fx.abs() {
        y
    } else {
        x
    }
}

/// All sign-change roots of `f` on (lo, hi) found by scanning `n` equal
/// cells; the endpoints are pulled in by `guard` (poles live there).
pub fn scan_roots<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize, guard: f64, tol: f64) -> Result<Vec<f64>> {
    let (a, b) = (lo + guard, hi - guard);
    if b <= a {
        return Ok(vec![]);
    }
    let mut out = vec![];
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = a + (b - a) * i as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum() && f1 != 0.0 {
            let r = bisect(f, x0, x1, tol * x1.abs().max(1.0))?;
            out.push(newton_polish(f, r, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        out.push(x0);
    }
    Ok(out)
}

/// Best rational p/q (q ≤ `max_den`) with |x − p/q| ≤ `tol`, from the
/// continued-fraction convergents of x > 0.
pub fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    if !(x > 0.0 && x.is_finite()) {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            return None;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol {
            return Some((p2, q2));
        }
        let frac = r - a as f64;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_cos() {
        let r = bisect(&|x: f64| x.cos(), 1.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
        assert!(bisect(&|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(rational_approx(1.0, 1_000_000, 1e-12), Some((1, 1)));
        assert_eq!(rational_approx(0.75, 1_000_000, 1e-12), Some((3, 4)));
        assert_eq!(rational_approx(1.4 / 0.6, 1_000_000, 1e-12), Some((7, 3)));
        assert_eq!(rational_approx(2f64.sqrt(), 1_000_000, 1e-12), None);
    }

    #[test]
    fn scan_finds_all_sine_roots() {
        let r = scan_roots(&|x: f64| x.sin(), 0.0, 10.0, 50, 1e-9, 1e-14).unwrap();
        assert_eq!(r.len(), 3);
        for (i, x) in r.iter().enumerate() {
            assert!((x - std::f64::consts::PI * (i + 1) as f64).abs() < 1e-12);
        }
    }
}
