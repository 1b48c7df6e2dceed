//! Exact 1D machinery.
//!
//! ε > 0: 2×2 transfer matrices in the state (u, q = σu′) per segment,
//! eigenvalues located by the Prüfer angle (which counts them exactly),
//! Bloch bands bracketed between consecutive Dirichlet eigenvalues of the
//! cell. ε = 0: inclusions become rigid, with the transfer
//! [[1, 0], [−λL, 1]] (q jumps by −λL·u); closed-form characteristic
//! functions for the single-inclusion and sphere examples.

use std::f64::consts::PI;
use std::io::Write;

use crate::bloch::DispersionPoint;
use crate::error::{Error, Result};
use crate::medium::{is_integer_vector, BoundaryKind, Geometry1D, Segment};
use crate::roots::{bisect, newton_polish, rational_approx, scan_roots};

/// Bisection stop for roots (absolute, in √λ or λ units as noted).
pub const TOL_ROOT: f64 = 1e-12;
/// Minimum distance from a pole, in √λ units.
pub const TOL_POLE: f64 = 1e-8;
/// Roots closer than this are reported as a cluster.
pub const TOL_CLUSTER: f64 = 1e-6;
/// Rationality test: largest denominator and residual.
pub const MAX_DENOMINATOR: u64 = 1_000_000;
pub const RATIONAL_TOL: f64 = 1e-12;

type Mat2 = [[f64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// How inclusions behave.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Contrast {
    /// σ = 1/ε inside.
    Eps(f64),
    /// ε = 0: constant inside, flux balance −λ·L·u.
    Rigid,
}

/// Wavenumber κ = √(λ/σ) and impedance Z = σκ = √(λσ) of a segment.
fn wave(seg: &Segment, lambda: f64, c: Contrast) -> (f64, f64) {
    match (seg.region, c) {
        (None, _) => (lambda.sqrt(), lambda.sqrt()),
        (Some(_), Contrast::Eps(e)) => ((e * lambda).sqrt(), (lambda / e).sqrt()),
        (Some(_), Contrast::Rigid) => (0.0, f64::INFINITY),
    }
}

fn segment_matrix(seg: &Segment, lambda: f64, c: Contrast) -> Mat2 {
    let l = seg.len();
    match (seg.region, c) {
        (Some(_), Contrast::Rigid) => [[1.0, 0.0], [-lambda * l, 1.0]],
        _ => {
            let (k, z) = wave(seg, lambda, c);
            let (s, co) = (k * l).sin_cos();
            [[co, s / z], [-z * s, co]]
        }
    }
}

/// Product of segment transfers, left to right: (u, q)(x_hi) = M (u, q)(x_lo).
pub fn monodromy(geom: &Geometry1D, lambda: f64, c: Contrast) -> [[f64; 2]; 2] {
    geom.segments()
        .iter()
        .fold([[1.0, 0.0], [0.0, 1.0]], |acc, s| mul(&segment_matrix(s, lambda, c), &acc))
}

/// Continuous Prüfer angle at x_hi, tan θ = Z u / q, started at θ₀.
pub fn prufer_end(geom: &Geometry1D, lambda: f64, c: Contrast, theta0: f64) -> f64 {
    let mut theta = theta0;
    let mut z_prev: Option<f64> = None;
    for seg in geom.segments() {
        let rigid = seg.region.is_some() && c == Contrast::Rigid;
        if rigid {
            // shear: cot φ' = cot φ − √λ·L  (exterior impedance on both sides)
            let base = (theta / PI).floor() * PI;
            let phi = theta - base;
            let (s, co) = phi.sin_cos();
            let phi2 = s.atan2(co - lambda.sqrt() * seg.len() * s);
            theta = base + phi2;
            continue;
        }
        let (k, z) = wave(&seg, lambda, c);
        if let Some(zp) = z_prev {
            if zp != z {
                let base = (theta / PI).floor() * PI;
                let phi = theta - base;
                let (s, co) = phi.sin_cos();
                theta = base + (z * s).atan2(zp * co);
            }
        }
        theta += k * seg.len();
        z_prev = Some(z);
    }
    theta
}

/// Dirichlet/Neumann start angle.
fn theta0(bc: &BoundaryKind) -> f64 {
    match bc {
        BoundaryKind::Neumann => PI / 2.0,
        _ => 0.0,
    }
}

/// Exact eigenvalue count in (0, λ) (positive eigenvalues only).
pub fn count_below(geom: &Geometry1D, lambda: f64, c: Contrast, bc: &BoundaryKind) -> usize {
    let t0 = theta0(bc);
    ((prufer_end(geom, lambda, c, t0) - t0) / PI).floor().max(0.0) as usize
}

/// j-th (1-based) positive Dirichlet/Neumann eigenvalue below `hi`.
fn prufer_root(geom: &Geometry1D, c: Contrast, bc: &BoundaryKind, j: usize, hi: f64) -> Result<f64> {
    let t0 = theta0(bc);
    let target = t0 + j as f64 * PI;
    let g = |l: f64| prufer_end(geom, l, c, t0) - target;
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * hi || mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dirichlet/Neumann eigenvalues of the exact 1D problem in (0, λ_max].
pub fn prufer_eigenvalues(geom: &Geometry1D, c: Contrast, bc: &BoundaryKind, lambda_max: f64) -> Result<Vec<f64>> {
    if !(lambda_max > 0.0) {
        return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let n = count_below(geom, lambda_max, c, bc);
    (1..=n).map(|j| prufer_root(geom, c, bc, j, lambda_max)).collect()
}

/// One piece of a piecewise eigenfunction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Const { x0: f64, x1: f64, value: f64 },
    /// u = a cos(κ(x − x0)) + b sin(κ(x − x0)).
    Wave { x0: f64, x1: f64, kappa: f64, a: f64, b: f64 },
}

impl Piece {
    fn range(&self) -> (f64, f64) {
        match *self {
            Piece::Const { x0, x1, .. } | Piece::Wave { x0, x1, .. } => (x0, x1),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match *self {
            Piece::Const { value, .. } => value,
            Piece::Wave { x0, kappa, a, b, .. } => {
                let (s, c) = (kappa * (x - x0)).sin_cos();
                a * c + b * s
            }
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Piece::Const { value, .. } => value.abs(),
            Piece::Wave { x0, x1, kappa, a, b } => {
                // u = R sin(κt + ψ): a crest inside wins, else the endpoints
                let r = a.hypot(b);
                let psi = a.atan2(b);
                let t1 = kappa * (x1 - x0);
                let m = ((t1 + psi - PI / 2.0) / PI).floor();
                let crest = PI / 2.0 + m * PI - psi;
                let end = self.eval(x0).abs().max(self.eval(x1).abs());
                if crest >= 0.0 && crest <= t1 {
                    r.max(end)
                } else {
                    end
                }
            }
        }
    }

    fn scale(&mut self, f: f64) {
        match self {
            Piece::Const { value, .. } => *value *= f,
            Piece::Wave { a, b, .. } => {
                *a *= f;
                *b *= f;
            }
        }
    }

    /// (amplitude, phase) with u = amplitude·sin(κ(x − x0) + phase).
    pub fn amplitude_phase(&self) -> (f64, f64) {
        match *self {
            Piece::Const { value, .. } => (value.abs(), if value >= 0.0 { PI / 2.0 } else { -PI / 2.0 }),
            Piece::Wave { a, b, .. } => (a.hypot(b), a.atan2(b)),
        }
    }
}

/// Piecewise closed-form eigenfunction.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenfunction {
    pub pieces: Vec<Piece>,
}

impl Eigenfunction {
    pub fn eval(&self, x: f64) -> f64 {
        let p = self
            .pieces
            .iter()
            .find(|p| {
                let (a, b) = p.range();
                x >= a && x <= b
            })
            .unwrap_or_else(|| self.pieces.last().unwrap());
        p.eval(x)
    }

    /// Left/right limits at x (they differ only at a broken continuity).
    pub fn one_sided(&self, x: f64) -> (f64, f64) {
        let mut l = f64::NAN;
        let mut r = f64::NAN;
        for p in &self.pieces {
            let (a, b) = p.range();
            if (b - x).abs() < 1e-14 {
                l = p.eval(x);
            }
            if (a - x).abs() < 1e-14 {
                r = p.eval(x);
            }
        }
        (l, r)
    }

    pub fn sup(&self) -> f64 {
        self.pieces.iter().map(|p| p.sup()).fold(0.0, f64::max)
    }

    fn scale(&mut self, f: f64) {
        for p in &mut self.pieces {
            p.scale(f);
        }
    }

    /// `n` equally spaced samples (x, u) over the whole interval.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let x0 = self.pieces.first().unwrap().range().0;
        let x1 = self.pieces.last().unwrap().range().1;
        (0..n)
            .map(|i| {
                let x = x0 + (x1 - x0) * i as f64 / (n.max(2) - 1) as f64;
                (x, self.eval(x))
            })
            .collect()
    }
}

fn transfer_eigenfunction(geom: &Geometry1D, lambda: f64, eps: f64, bc: &BoundaryKind) -> Eigenfunction {
    let c = Contrast::Eps(eps);
    let (mut u, mut q) = match bc {
        BoundaryKind::Neumann => (1.0, 0.0),
        _ => (0.0, 1.0),
    };
    let mut pieces = vec![];
    for seg in geom.segments() {
        let (k, z) = wave(&seg, lambda, c);
        pieces.push(Piece::Wave { x0: seg.x0, x1: seg.x1, kappa: k, a: u, b: q / z });
        let m = segment_matrix(&seg, lambda, c);
        (u, q) = (m[0][0] * u + m[0][1] * q, m[1][0] * u + m[1][1] * q);
    }
    let mut ef = Eigenfunction { pieces };
    // gauge: sup-norm 1, first inclusion value positive when visible
    let mut s = 1.0 / ef.sup();
    if let Some(&(a, b)) = geom.inclusions.first() {
        let v = ef.eval(0.5 * (a + b));
        if v.abs() * s > 1e-6 && v < 0.0 {
            s = -s;
        }
    }
    ef.scale(s);
    ef
}

/// Eigenvalues of the exact ε > 0 problem.
#[derive(Clone, Debug)]
pub struct TransferSpectrum {
    pub eigenvalues: Vec<f64>,
    /// |characteristic function| at each eigenvalue.
    pub residuals: Vec<f64>,
    /// Dirichlet/Neumann only (Bloch eigenfunctions are complex).
    pub eigenfunctions: Vec<Eigenfunction>,
    pub epsilon: f64,
    pub bc: BoundaryKind,
}

/// All eigenvalues in (0, λ_max] of −(σu′)′ = λu, σ = 1/ε on inclusions.
pub fn transfer_spectrum_1d(geom: &Geometry1D, eps: f64, bc: &BoundaryKind, lambda_max: f64) -> Result<TransferSpectrum> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    if !(lambda_max > 0.0) {
        return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let c = Contrast::Eps(eps);
    let cf = CharacteristicFunction::Transfer { geom: geom.clone(), contrast: c, bc: bc.clone() };
    let (eigenvalues, eigenfunctions) = match bc {
        BoundaryKind::Bloch(k) => (bloch_roots(geom, c, k, lambda_max)?, vec![]),
        _ => {
            let ev = prufer_eigenvalues(geom, c, bc, lambda_max)?;
            let ef = ev.iter().map(|&l| transfer_eigenfunction(geom, l, eps, bc)).collect();
            (ev, ef)
        }
    };
    let residuals = eigenvalues.iter().map(|&l| cf.value(l).abs()).collect();
    Ok(TransferSpectrum { eigenvalues, residuals, eigenfunctions, epsilon: eps, bc: bc.clone() })
}

/// Same count/root machinery for the rigid (ε = 0) limit on any number of
/// inclusions; S₁ and S₂ members both appear.
pub fn limit_transfer_eigenvalues(geom: &Geometry1D, bc: &BoundaryKind, lambda_max: f64) -> Result<Vec<f64>> {
    match bc {
        BoundaryKind::Bloch(k) => bloch_roots(geom, Contrast::Rigid, k, lambda_max),
        _ => prufer_eigenvalues(geom, Contrast::Rigid, bc, lambda_max),
    }
}

/// Bloch eigenvalues: D(λ) = tr M/2 = cos(k·p), one root between each
/// pair of consecutive Dirichlet eigenvalues of the cell.
fn bloch_roots(geom: &Geometry1D, c: Contrast, k: &[f64], lambda_max: f64) -> Result<Vec<f64>> {
    let &[k] = k else {
        return Err(Error::Parameter("1D Bloch vector has one component".into()));
    };
    let p = geom.len();
    if is_integer_vector(&[k], &[p]) {
        return Err(Error::IntegerBlochVector(vec![k]));
    }
    let target = (k * p).cos();
    let f = |l: f64| {
        let m = monodromy(geom, l, c);
        0.5 * (m[0][0] + m[1][1]) - target
    };
    let mut seps = vec![0.0];
    seps.extend(prufer_eigenvalues(geom, c, &BoundaryKind::Dirichlet, lambda_max)?);
    seps.push(lambda_max);
    band_roots(&f, &seps)
}

/// One root of f per bracket [s_j, s_{j+1}]; a root sitting on a bracket
/// end (closed gap or band edge at k with cos(kp) = ±1) is taken there.
fn band_roots<F: Fn(f64) -> f64>(f: &F, seps: &[f64]) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = vec![];
    let last = seps.len() - 2;
    for j in 0..=last {
        let (lo, hi) = (seps[j], seps[j + 1]);
        if hi <= lo {
            // degenerate bracket (λ_max coincides with a separator)
            continue;
        }
        let d = 1e-10 * (hi - lo);
        let (a, b) = (lo + d.max(1e-300), hi - d);
        let (fa, fb) = (f(a), f(b));
        if fa.signum() != fb.signum() {
            let r = bisect(f, a, b, 1e-15 * hi)?;
            out.push(newton_polish(f, r, a, b));
        } else if j < last && f(hi).abs() <= 1e-8 {
            out.push(hi);
        } else if j > 0 && f(lo).abs() <= 1e-8 {
            // already taken as the previous bracket's end: only a double
            // root (closed gap, no sign change) counts twice
            let taken = out.last() == Some(&lo);
            let e = 1e-7 * lo;
            if !taken || f(lo - e).signum() == f(lo + e).signum() {
                out.push(lo);
            }
        } else if j < last {
            return Err(Error::Bracket { lo, hi, reason: "no band root between consecutive Dirichlet eigenvalues".into() });
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Characteristic functions F(λ) = 0 of the examples.
#[derive(Clone, Debug, PartialEq)]
pub enum CharacteristicFunction {
    /// cot(√λ(1+a)) + cot(√λ(1−b)) − √λ(b−a) on (−1, 1).
    DirichletS2 { a: f64, b: f64 },
    /// tan(√λ(1+a)) + tan(√λ(1−b)) + √λ(b−a).
    NeumannS2 { a: f64, b: f64 },
    /// cos(2√λ(1−a)) − a√λ sin(2√λ(1−a)) − cos 2k, period-2 cell.
    Bloch { a: f64, k: f64 },
    /// a√λ cot(√λ(1−a)) − (λa²/3 − 1), concentric spheres.
    Sphere { a: f64 },
    /// Transfer-matrix determinant: M₁₂ (Dirichlet), M₂₁ (Neumann),
    /// tr M/2 − cos(kp) (Bloch).
    Transfer { geom: Geometry1D, contrast: Contrast, bc: BoundaryKind },
}

impl CharacteristicFunction {
    /// Poles in √λ units up to s_max, ascending.
    pub fn poles(&self, s_max: f64) -> Vec<f64> {
        let mut out = vec![];
        let mut push_multiples = |len: f64, offset: f64| {
            if len <= 0.0 {
                return;
            }
            let mut j = 0.0;
            loop {
                let s = (j + offset) * PI / len;
                if s > s_max {
                    break;
                }
                if s > 0.0 {
                    out.push(s);
                }
                j += 1.0;
            }
        };
        match *self {
            CharacteristicFunction::DirichletS2 { a, b } => {
                push_multiples(1.0 + a, 0.0);
                push_multiples(1.0 - b, 0.0);
            }
            CharacteristicFunction::NeumannS2 { a, b } => {
                push_multiples(1.0 + a, 0.5);
                push_multiples(1.0 - b, 0.5);
            }
            CharacteristicFunction::Sphere { a } => push_multiples(1.0 - a, 0.0),
            _ => {}
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs());
        out
    }

    /// Unchecked value (inf/NaN at poles).
    pub fn value(&self, lambda: f64) -> f64 {
        let s = lambda.sqrt();
        match self {
            CharacteristicFunction::DirichletS2 { a, b } => {
                1.0 / (s * (1.0 + a)).tan() + 1.0 / (s * (1.0 - b)).tan() - s * (b - a)
            }
            CharacteristicFunction::NeumannS2 { a, b } => (s * (1.0 + a)).tan() + (s * (1.0 - b)).tan() + s * (b - a),
            CharacteristicFunction::Bloch { a, k } => {
                let t = 2.0 * s * (1.0 - a);
                t.cos() - a * s * t.sin() - (2.0 * k).cos()
            }
            CharacteristicFunction::Sphere { a } => a * s / (s * (1.0 - a)).tan() - (lambda * a * a / 3.0 - 1.0),
            CharacteristicFunction::Transfer { geom, contrast, bc } => {
                let m = monodromy(geom, lambda, *contrast);
                match bc {
                    BoundaryKind::Dirichlet => m[0][1],
                    BoundaryKind::Neumann => m[1][0],
                    BoundaryKind::Bloch(k) => 0.5 * (m[0][0] + m[1][1]) - (k[0] * geom.len()).cos(),
                }
            }
        }
    }
}

/// F(λ) with the pole guard.
pub fn eval_char(cf: &CharacteristicFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let s = lambda.sqrt();
    for p in cf.poles(s + 1.0) {
        if (p - s).abs() < TOL_POLE {
            return Err(Error::PoleProximity { lambda, distance: (p - s).abs() });
        }
    }
    Ok(cf.value(lambda))
}

/// Roots of a pole-separated characteristic function in (0, λ_max]:
/// scan each pole-free √λ interval, bisect sign changes, polish.
pub fn char_roots(cf: &CharacteristicFunction, lambda_max: f64) -> Result<Vec<f64>> {
    let s_max = lambda_max.sqrt();
    let mut edges = vec![0.0];
    edges.extend(cf.poles(s_max));
    edges.push(s_max);
    let g = |s: f64| cf.value(s * s);
    let mut out = vec![];
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 2.0 * TOL_POLE {
            continue;
        }
        let guard = TOL_POLE.min(0.25 * (hi - lo));
        for s in scan_roots(&g, lo, hi, 64, guard, TOL_ROOT)? {
            out.push(s * s);
        }
    }
    // the right end of the last window is λ_max itself, not a pole
    out.retain(|&l| l <= lambda_max);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// c = 0 on the inclusion, zero interface flux.
    S1,
    /// constant nonzero inclusion value.
    S2,
}

#[derive(Clone, Debug)]
pub struct LimitMode {
    pub lambda: f64,
    pub branch: Branch,
    pub residual: f64,
    pub eigenfunction: Eigenfunction,
}

/// Outcome of the rationality test on (1+a)/(1−b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rationality {
    /// (1+a)/(1−b) = n₀/m₀ in lowest terms.
    Rational { n0: u64, m0: u64 },
    IrrationalWithinTolerance,
}

#[derive(Clone, Debug)]
pub struct BranchedSpectrum {
    pub s1: Vec<LimitMode>,
    pub s2: Vec<LimitMode>,
    pub certificate: Rationality,
    /// Pairs of limit eigenvalues closer than TOL_CLUSTER.
    pub clusters: Vec<(f64, f64)>,
}

impl BranchedSpectrum {
    /// S₁ ∪ S₂ sorted ascending.
    pub fn all(&self) -> Vec<&LimitMode> {
        let mut v: Vec<&LimitMode> = self.s1.iter().chain(&self.s2).collect();
        v.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        v
    }
}

fn s2_eigenfunction(geom: &Geometry1D, s: f64, neumann: bool) -> Eigenfunction {
    let (a, b) = geom.inclusions[0];
    let (ll, lr) = (a - geom.x_lo, geom.x_hi - b);
    let left = if neumann {
        Piece::Wave { x0: geom.x_lo, x1: a, kappa: s, a: 1.0 / (s * ll).cos(), b: 0.0 }
    } else {
        Piece::Wave { x0: geom.x_lo, x1: a, kappa: s, a: 0.0, b: 1.0 / (s * ll).sin() }
    };
    let right = if neumann {
        Piece::Wave { x0: b, x1: geom.x_hi, kappa: s, a: 1.0, b: (s * lr).tan() }
    } else {
        Piece::Wave { x0: b, x1: geom.x_hi, kappa: s, a: 1.0, b: -1.0 / (s * lr).tan() }
    };
    let mut ef = Eigenfunction { pieces: vec![left, Piece::Const { x0: a, x1: b, value: 1.0 }, right] };
    let sup = ef.sup();
    ef.scale(1.0 / sup);
    ef
}

fn s1_eigenfunction(geom: &Geometry1D, s: f64, neumann: bool) -> Eigenfunction {
    let (a, b) = geom.inclusions[0];
    let (ll, lr) = (a - geom.x_lo, geom.x_hi - b);
    // left A·w(s(x − x_lo)), right B·w(s(x_hi − x)); B from zero total flux
    let (left, right) = if neumann {
        let bb = -(s * ll).sin() / (s * lr).sin();
        (
            Piece::Wave { x0: geom.x_lo, x1: a, kappa: s, a: 1.0, b: 0.0 },
            Piece::Wave { x0: b, x1: geom.x_hi, kappa: s, a: bb * (s * lr).cos(), b: bb * (s * lr).sin() },
        )
    } else {
        let bb = -(s * ll).cos() / (s * lr).cos();
        (
            Piece::Wave { x0: geom.x_lo, x1: a, kappa: s, a: 0.0, b: 1.0 },
            Piece::Wave { x0: b, x1: geom.x_hi, kappa: s, a: bb * (s * lr).sin(), b: -bb * (s * lr).cos() },
        )
    };
    let mut ef = Eigenfunction { pieces: vec![left, Piece::Const { x0: a, x1: b, value: 0.0 }, right] };
    let sup = ef.sup();
    ef.scale(1.0 / sup);
    ef
}

/// ∫_Γ ∂u/∂n (n out of the inclusion) for a limit eigenfunction on a
/// single-inclusion geometry: −u′(a⁻) + u′(b⁺).
pub fn interface_flux(ef: &Eigenfunction, a: f64, b: f64) -> f64 {
    let d = |x: f64, left: bool| {
        for p in &ef.pieces {
            if let Piece::Wave { x0, x1, kappa, a: ca, b: cb } = *p {
                let hit = if left { (x1 - x).abs() < 1e-14 } else { (x0 - x).abs() < 1e-14 };
                if hit {
                    let t = kappa * (x - x0);
                    return kappa * (-ca * t.sin() + cb * t.cos());
                }
            }
        }
        0.0
    };
    -d(a, true) + d(b, false)
}

/// ε → 0 spectrum of the single-inclusion problem on (x_lo, x_hi) =
/// (−1, 1): S₂ from the closed-form characteristic function, S₁ from the
/// arithmetic of (1+a)/(1−b).
pub fn limit_spectrum_1d(geom: &Geometry1D, bc: &BoundaryKind, lambda_max: f64) -> Result<BranchedSpectrum> {
    if !(lambda_max > 0.0) {
        return Err(Error::Parameter(format!("lambda_max must be positive, got {lambda_max}")));
    }
    let &[(a, b)] = &geom.inclusions[..] else {
        return Err(Error::Geometry("closed forms need exactly one inclusion".into()));
    };
    if geom.x_lo != -1.0 || geom.x_hi != 1.0 {
        return Err(Error::Geometry("closed forms are written on (−1, 1)".into()));
    }
    let neumann = match bc {
        BoundaryKind::Dirichlet => false,
        BoundaryKind::Neumann => true,
        BoundaryKind::Bloch(_) => return Err(Error::Unsupported("use bloch_limit_curve for the Bloch cell".into())),
    };
    let cf = if neumann {
        CharacteristicFunction::NeumannS2 { a, b }
    } else {
        CharacteristicFunction::DirichletS2 { a, b }
    };
    let s2: Vec<LimitMode> = char_roots(&cf, lambda_max)?
        .into_iter()
        .map(|l| LimitMode {
            lambda: l,
            branch: Branch::S2,
            residual: cf.value(l).abs(),
            eigenfunction: s2_eigenfunction(geom, l.sqrt(), neumann),
        })
        .collect();

    let (ll, lr) = (1.0 + a, 1.0 - b);
    let certificate = match rational_approx(ll / lr, MAX_DENOMINATOR, RATIONAL_TOL) {
        Some((n0, m0)) => Rationality::Rational { n0, m0 },
        None => Rationality::IrrationalWithinTolerance,
    };
    let mut s1 = vec![];
    if let Rationality::Rational { n0, m0 } = certificate {
        let odd = n0 % 2 == 1 && m0 % 2 == 1;
        for n in 0u64.. {
            let s = if neumann {
                if !odd {
                    break;
                }
                PI * (n0 * (2 * n + 1)) as f64 / (2.0 * ll)
            } else {
                if n == 0 {
                    continue;
                }
                PI * (m0 * n) as f64 / lr
            };
            let l = s * s;
            if l > lambda_max {
                break;
            }
            let ef = s1_eigenfunction(geom, s, neumann);
            // residual: the exterior Dirichlet condition at Γ on both sides
            let residual = if neumann {
                (s * ll).cos().abs().max((s * lr).cos().abs())
            } else {
                (s * ll).sin().abs().max((s * lr).sin().abs())
            };
            s1.push(LimitMode { lambda: l, branch: Branch::S1, residual, eigenfunction: ef });
        }
    }
    let mut all: Vec<f64> = s1.iter().chain(&s2).map(|m| m.lambda).collect();
    all.sort_by(f64::total_cmp);
    let clusters = all.windows(2).filter(|w| w[1] - w[0] < TOL_CLUSTER).map(|w| (w[0], w[1])).collect();
    Ok(BranchedSpectrum { s1, s2, certificate, clusters })
}

/// ε = 0 dispersion of the period-2 cell with inclusion |x| < a from the
/// closed-form Bloch equation, bracketed by the cell's limit Dirichlet
/// eigenvalues.
pub fn bloch_limit_curve(a: f64, k_grid: &[f64], lambda_max: f64) -> Result<Vec<DispersionPoint>> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::Parameter(format!("need 0 <= a < 1, got {a}")));
    }
    let geom = Geometry1D::cell(a)?;
    let mut seps = vec![0.0];
    seps.extend(prufer_eigenvalues(&geom, Contrast::Rigid, &BoundaryKind::Dirichlet, lambda_max)?);
    seps.push(lambda_max);
    let mut out = vec![];
    for &k in k_grid {
        if !(k > -PI / 2.0 && k <= PI / 2.0) {
            return Err(Error::Parameter(format!("k = {k} outside (−π/2, π/2]")));
        }
        if is_integer_vector(&[k], &[2.0]) {
            return Err(Error::IntegerBlochVector(vec![k]));
        }
        let cf = CharacteristicFunction::Bloch { a, k };
        let f = |l: f64| cf.value(l);
        for (n, l) in band_roots(&f, &seps)?.into_iter().enumerate() {
            out.push(DispersionPoint { k: vec![k], branch: n + 1, lambda: l, omega: l.sqrt(), epsilon: 0.0 });
        }
    }
    Ok(out)
}

/// `branch,index,lambda,omega,residual` rows.
pub fn write_branched_csv<W: Write>(s: &BranchedSpectrum, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["branch", "index", "lambda", "omega", "residual"])?;
    for (name, list) in [("S1", &s.s1), ("S2", &s.s2)] {
        for (i, m) in list.iter().enumerate() {
            wr.write_record([
                name.to_string(),
                (i + 1).to_string(),
                m.lambda.to_string(),
                m.lambda.sqrt().to_string(),
                m.residual.to_string(),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Same shape for an ε > 0 transfer spectrum (branch column "eps").
pub fn write_transfer_csv<W: Write>(s: &TransferSpectrum, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["branch", "index", "lambda", "omega", "residual"])?;
    for (i, (l, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
        wr.write_record(["eps".to_string(), (i + 1).to_string(), l.to_string(), l.sqrt().to_string(), r.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// `x,u` trace of an eigenfunction.
pub fn write_trace_csv<W: Write>(ef: &Eigenfunction, n: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "u"])?;
    for (x, u) in ef.sample(n) {
        wr.write_record([x.to_string(), u.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prufer_counts_homogeneous_string() {
        let g = Geometry1D::single(0.0, 0.0).unwrap();
        let ev = prufer_eigenvalues(&g, Contrast::Eps(1.0), &BoundaryKind::Dirichlet, 30.0).unwrap();
        let ex: Vec<f64> = (1..).map(|n| (PI * n as f64 / 2.0).powi(2)).take_while(|&l| l <= 30.0).collect();
        assert_eq!(ev.len(), ex.len());
        for (a, b) in ev.iter().zip(&ex) {
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn sup_of_wave_piece() {
        let p = Piece::Wave { x0: 0.0, x1: 1.0, kappa: PI, a: 0.0, b: 2.0 };
        assert!((p.sup() - 2.0).abs() < 1e-15);
        let q = Piece::Wave { x0: 0.0, x1: 0.25, kappa: PI, a: 0.0, b: 2.0 };
        assert!((q.sup() - 2.0 * (PI / 4.0).sin()).abs() < 1e-15);
    }
}
