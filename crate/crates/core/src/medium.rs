//! Geometries, the contrast parameter and the coefficient σ ∈ {1, 1/ε}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval (x_lo, x_hi) with disjoint interior inclusions (a_i, b_i).
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub inclusions: Vec<(f64, f64)>,
}

/// One piece of the interval where σ is constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    /// `Some(i)` inside inclusion i.
    pub region: Option<usize>,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.x1 - self.x0
    }
    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

impl Geometry1D {
    pub fn new(x_lo: f64, x_hi: f64, inclusions: Vec<(f64, f64)>) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(Error::Geometry(format!("need x_lo < x_hi, got ({x_lo}, {x_hi})")));
        }
        let mut prev = x_lo;
        for (i, &(a, b)) in inclusions.iter().enumerate() {
            if !(a > prev && b > a) {
                return Err(Error::Geometry(format!(
                    "inclusion {i} = ({a}, {b}) must be nonempty, ordered and strictly inside"
                )));
            }
            prev = b;
        }
        if prev >= x_hi {
            return Err(Error::Geometry("last inclusion touches x_hi".into()));
        }
        Ok(Geometry1D { x_lo, x_hi, inclusions })
    }

    /// (−1, 1) with the single inclusion (a, b); a == b means no inclusion.
    pub fn single(a: f64, b: f64) -> Result<Self> {
        if a == b {
            Geometry1D::new(-1.0, 1.0, vec![])
        } else {
            Geometry1D::new(-1.0, 1.0, vec![(a, b)])
        }
    }

    /// The period-2 Bloch cell (−1, 1) with inclusion |x| < a.
    pub fn cell(a: f64) -> Result<Self> {
        Geometry1D::single(-a, a)
    }

    pub fn len(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut out = vec![];
        let mut x = self.x_lo;
        for (i, &(a, b)) in self.inclusions.iter().enumerate() {
            out.push(Segment { x0: x, x1: a, region: None });
            out.push(Segment { x0: a, x1: b, region: Some(i) });
            x = b;
        }
        out.push(Segment { x0: x, x1: self.x_hi, region: None });
        out
    }

    pub fn region_of(&self, x: f64) -> Option<usize> {
        self.inclusions.iter().position(|&(a, b)| x > a && x < b)
    }
}

/// A grid edge crossing Γ_i: (inside cell, outside cell) as (ix, iy).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub inside: (usize, usize),
    pub outside: (usize, usize),
}

/// Rectangle [0, Lx] × [0, Ly] on a uniform grid, inclusions as cell masks.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry2D {
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major (iy * nx + ix), `Some(i)` for inclusion i.
    pub mask: Vec<Option<usize>>,
    pub interface_edges: Vec<Vec<Edge>>,
}

/// Shapes rasterised by cell centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, x1, y0, y1 } => x > x0 && x < x1 && y > y0 && y < y1,
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
        }
    }
}

impl Geometry2D {
    /// `labels` row-major, 0 = exterior, i ≥ 1 = inclusion i.
    pub fn from_labels(lx: f64, ly: f64, h: f64, labels: &[usize]) -> Result<Self> {
        if !(h > 0.0 && lx > 0.0 && ly > 0.0) {
            return Err(Error::Geometry("extents and h must be positive".into()));
        }
        let nx = (lx / h).round() as usize;
        let ny = (ly / h).round() as usize;
        if (nx as f64 * h - lx).abs() > 1e-9 * lx || (ny as f64 * h - ly).abs() > 1e-9 * ly {
            return Err(Error::Geometry(format!("h = {h} does not divide the rectangle {lx} x {ly}")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::Geometry("degenerate grid".into()));
        }
        if labels.len() != nx * ny {
            return Err(Error::Geometry(format!("mask has {} cells, grid has {}", labels.len(), nx * ny)));
        }
        let m = labels.iter().copied().max().unwrap_or(0);
        let mask: Vec<Option<usize>> = labels.iter().map(|&l| if l == 0 { None } else { Some(l - 1) }).collect();
        let mut g = Geometry2D { lx, ly, h, nx, ny, mask, interface_edges: vec![] };
        g.validate(m)?;
        g.interface_edges = g.regenerate_edges();
        Ok(g)
    }

    pub fn from_shapes(lx: f64, ly: f64, h: f64, shapes: &[Shape]) -> Result<Self> {
        let nx = (lx / h).round() as usize;
        let ny = (ly / h).round() as usize;
        let mut labels = vec![0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = ((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h);
                for (s, shape) in shapes.iter().enumerate() {
                    if shape.contains(x, y) {
                        if labels[iy * nx + ix] != 0 {
                            return Err(Error::Geometry(format!("shapes {} and {s} overlap", labels[iy * nx + ix] - 1)));
                        }
                        labels[iy * nx + ix] = s + 1;
                    }
                }
            }
        }
        for s in 0..shapes.len() {
            if !labels.contains(&(s + 1)) {
                return Err(Error::Geometry(format!("shape {s} covers no cell centre at h = {h}")));
            }
        }
        Geometry2D::from_labels(lx, ly, h, &labels)
    }

    pub fn label(&self, ix: usize, iy: usize) -> Option<usize> {
        self.mask[iy * self.nx + ix]
    }

    pub fn inclusion_count(&self) -> usize {
        self.interface_edges.len().max(self.mask.iter().flatten().map(|&i| i + 1).max().unwrap_or(0))
    }

    fn validate(&self, m: usize) -> Result<()> {
        let (nx, ny) = (self.nx, self.ny);
        for i in 0..m {
            let cells: Vec<(usize, usize)> = (0..ny)
                .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
                .filter(|&(ix, iy)| self.label(ix, iy) == Some(i))
                .collect();
            if cells.is_empty() {
                return Err(Error::Geometry(format!("inclusion {} has no cells", i + 1)));
            }
            for &(ix, iy) in &cells {
                if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                    return Err(Error::Geometry(format!("inclusion {} touches the outer boundary", i + 1)));
                }
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let l = self.label((ix as i64 + dx) as usize, (iy as i64 + dy) as usize);
                        if let Some(o) = l {
                            if o != i {
                                return Err(Error::Geometry(format!("inclusions {} and {} touch", i + 1, o + 1)));
                            }
                        }
                    }
                }
            }
            // 4-connectivity by flood fill
            let mut seen = vec![false; nx * ny];
            let mut stack = vec![cells[0]];
            seen[cells[0].1 * nx + cells[0].0] = true;
            let mut reached = 0;
            while let Some((ix, iy)) = stack.pop() {
                reached += 1;
                for (jx, jy) in [(ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)] {
                    if self.label(jx, jy) == Some(i) && !seen[jy * nx + jx] {
                        seen[jy * nx + jx] = true;
                        stack.push((jx, jy));
                    }
                }
            }
            if reached != cells.len() {
                return Err(Error::Geometry(format!("inclusion {} is not connected", i + 1)));
            }
        }
        Ok(())
    }

    /// Edges with one side in inclusion i and the other exterior, sorted.
    pub fn regenerate_edges(&self) -> Vec<Vec<Edge>> {
        let m = self.mask.iter().flatten().map(|&i| i + 1).max().unwrap_or(0);
        let mut out = vec![vec![]; m];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if let Some(i) = self.label(ix, iy) {
                    for (jx, jy) in [(ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)] {
                        if self.label(jx, jy).is_none() {
                            out[i].push(Edge { inside: (ix, iy), outside: (jx, jy) });
                        }
                    }
                }
            }
        }
        for e in &mut out {
            e.sort();
        }
        out
    }
}

/// Unit ball with the concentric inclusion r < a.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGeometry {
    pub a: f64,
}

impl RadialGeometry {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Geometry(format!("radial inclusion radius must lie in (0, 1), got {a}")));
        }
        Ok(RadialGeometry { a })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Line(Geometry1D),
    Grid(Geometry2D),
    Radial(RadialGeometry),
}

impl Geometry {
    pub fn inclusion_count(&self) -> usize {
        match self {
            Geometry::Line(g) => g.inclusions.len(),
            Geometry::Grid(g) => g.inclusion_count(),
            Geometry::Radial(_) => 1,
        }
    }

    pub fn measure_inclusion(&self, i: usize) -> Result<f64> {
        let count = self.inclusion_count();
        if i >= count {
            return Err(Error::IndexOutOfRange { index: i, count });
        }
        Ok(match self {
            Geometry::Line(g) => g.inclusions[i].1 - g.inclusions[i].0,
            Geometry::Grid(g) => g.mask.iter().filter(|&&l| l == Some(i)).count() as f64 * g.h * g.h,
            Geometry::Radial(r) => 4.0 / 3.0 * std::f64::consts::PI * r.a.powi(3),
        })
    }

    /// Inclusion containing the point, `None` on the matrix region.
    pub fn region_at(&self, p: &[f64]) -> Result<Option<usize>> {
        let outside = || Error::OutsideDomain(p.to_vec());
        match self {
            Geometry::Line(g) => {
                let &[x] = p else { return Err(outside()) };
                if !(x >= g.x_lo && x <= g.x_hi) {
                    return Err(outside());
                }
                Ok(g.region_of(x))
            }
            Geometry::Grid(g) => {
                let &[x, y] = p else { return Err(outside()) };
                if !(x >= 0.0 && x <= g.lx && y >= 0.0 && y <= g.ly) {
                    return Err(outside());
                }
                let ix = ((x / g.h) as usize).min(g.nx - 1);
                let iy = ((y / g.h) as usize).min(g.ny - 1);
                Ok(g.label(ix, iy))
            }
            Geometry::Radial(r) => {
                let rad = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if p.is_empty() || p.len() > 3 || !(rad <= 1.0) {
                    return Err(outside());
                }
                Ok(if rad < r.a { Some(0) } else { None })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    /// Bloch vector (one entry per periodic axis).
    Bloch(Vec<f64>),
}

/// δ_k: Bloch vectors closer than this to an integer vector are rejected.
pub const BLOCH_DELTA: f64 = 1e-3;

/// Geometry + contrast + outer closure + grid spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastMedium {
    pub geometry: Geometry,
    pub epsilon: f64,
    pub bc: BoundaryKind,
    /// Target grid spacing for discretisations.
    pub h: f64,
}

impl ContrastMedium {
    pub fn new(geometry: Geometry, epsilon: f64, bc: BoundaryKind, h: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(h > 0.0) {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        let med = ContrastMedium { geometry, epsilon, bc, h };
        if let BoundaryKind::Bloch(k) = &med.bc {
            let period = med.period()?;
            if k.len() != period.len() {
                return Err(Error::Parameter(format!("Bloch vector needs {} components", period.len())));
            }
            if is_integer_vector(k, &period) {
                return Err(Error::IntegerBlochVector(k.clone()));
            }
        }
        Ok(med)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ContrastMedium { epsilon, ..self.clone() }
    }

    pub fn with_bc(&self, bc: BoundaryKind) -> Self {
        ContrastMedium { bc, ..self.clone() }
    }

    pub fn require_positive_epsilon(&self) -> Result<()> {
        if self.epsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveEpsilon(self.epsilon))
        }
    }

    /// σ at a point: 1 on the matrix, 1/ε on inclusions.
    pub fn coefficient_at(&self, p: &[f64]) -> Result<f64> {
        self.require_positive_epsilon()?;
        Ok(match self.geometry.region_at(p)? {
            Some(_) => 1.0 / self.epsilon,
            None => 1.0,
        })
    }

    /// Cell period per axis (Bloch closure).
    pub fn period(&self) -> Result<Vec<f64>> {
        match &self.geometry {
            Geometry::Line(g) => Ok(vec![g.len()]),
            Geometry::Grid(g) => Ok(vec![g.lx, g.ly]),
            Geometry::Radial(_) => Err(Error::Unsupported("Bloch closure on the radial geometry".into())),
        }
    }
}

/// k·p/(2π) within δ_k (in k units) of ℤ on every axis ⇔ the phase is 1.
pub fn is_integer_vector(k: &[f64], period: &[f64]) -> bool {
    k.iter().zip(period).all(|(&k, &p)| {
        let unit = 2.0 * std::f64::consts::PI / p;
        let t = k / unit;
        (t - t.round()).abs() * unit < BLOCH_DELTA
    })
}

// ---------------------------------------------------------------- JSON

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Number(u32),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InclusionSpec {
    /// radial radius a
    Radius(f64),
    /// 1D interval [a, b] or 2D rectangle [x0, x1, y0, y1]
    Bounds(Vec<f64>),
    Disk { disk: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlochSpec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Name(String),
    Bloch {
        bloch: BlochSpec,
    },
}

fn default_bc() -> BcSpec {
    BcSpec::Name("dirichlet".into())
}

/// The medium block of a configuration document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub dim: DimSpec,
    #[serde(default)]
    pub domain: Vec<f64>,
    #[serde(default)]
    pub inclusions: Vec<InclusionSpec>,
    pub h: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_bc")]
    pub bc: BcSpec,
}

impl MediumSpec {
    pub fn build(&self) -> Result<ContrastMedium> {
        let bad = |m: String| Error::Config(m);
        let bc = match &self.bc {
            BcSpec::Name(s) => match s.to_ascii_lowercase().as_str() {
                "dirichlet" => BoundaryKind::Dirichlet,
                "neumann" => BoundaryKind::Neumann,
                other => return Err(bad(format!("unknown bc {other:?}"))),
            },
            BcSpec::Bloch { bloch: BlochSpec::Scalar(k) } => BoundaryKind::Bloch(vec![*k]),
            BcSpec::Bloch { bloch: BlochSpec::Vector(k) } => BoundaryKind::Bloch(k.clone()),
        };
        let geometry = match &self.dim {
            DimSpec::Number(1) => {
                let [lo, hi] = self.domain[..] else {
                    return Err(bad("1D domain must be [x_lo, x_hi]".into()));
                };
                let mut inc = vec![];
                for s in &self.inclusions {
                    match s {
                        InclusionSpec::Bounds(v) if v.len() == 2 => inc.push((v[0], v[1])),
                        _ => return Err(bad("1D inclusions must be [a, b] pairs".into())),
                    }
                }
                Geometry::Line(Geometry1D::new(lo, hi, inc)?)
            }
            DimSpec::Number(2) => {
                let [lx, ly] = self.domain[..] else {
                    return Err(bad("2D domain must be [Lx, Ly]".into()));
                };
                let mut shapes = vec![];
                for s in &self.inclusions {
                    shapes.push(match s {
                        InclusionSpec::Bounds(v) if v.len() == 4 => Shape::Rect { x0: v[0], x1: v[1], y0: v[2], y1: v[3] },
                        InclusionSpec::Disk { disk } => Shape::Disk { cx: disk[0], cy: disk[1], r: disk[2] },
                        _ => return Err(bad("2D inclusions are [x0, x1, y0, y1] or {\"disk\": [cx, cy, r]}".into())),
                    });
                }
                Geometry::Grid(Geometry2D::from_shapes(lx, ly, self.h, &shapes)?)
            }
            DimSpec::Name(s) if s == "radial" => {
                if !(self.domain.is_empty() || self.domain == [1.0]) {
                    return Err(bad("radial domain is the unit ball: omit it or give [1]".into()));
                }
                let [InclusionSpec::Radius(a)] = self.inclusions[..] else {
                    return Err(bad("radial geometry takes exactly one inclusion radius".into()));
                };
                Geometry::Radial(RadialGeometry::new(a)?)
            }
            other => return Err(bad(format!("unsupported dim {other:?}"))),
        };
        ContrastMedium::new(geometry, self.epsilon, bc, self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_intervals() {
        assert!(Geometry1D::new(-1.0, 1.0, vec![(-1.0, 0.0)]).is_err());
        assert!(Geometry1D::new(-1.0, 1.0, vec![(0.2, 0.1)]).is_err());
        assert!(Geometry1D::new(-1.0, 1.0, vec![(-0.5, 0.1), (0.0, 0.5)]).is_err());
        assert!(Geometry1D::new(-1.0, 1.0, vec![(-0.5, 0.1), (0.2, 0.5)]).is_ok());
    }

    #[test]
    fn integer_bloch_vectors() {
        assert!(is_integer_vector(&[0.0], &[2.0]));
        assert!(is_integer_vector(&[std::f64::consts::PI + 1e-4], &[2.0]));
        assert!(!is_integer_vector(&[std::f64::consts::FRAC_PI_2], &[2.0]));
        assert!(!is_integer_vector(&[0.0, 0.3], &[1.0, 1.0]));
    }

    #[test]
    fn medium_json_round_trip() {
        let s = r#"{"dim": 1, "domain": [-1, 1], "inclusions": [[-0.5, 0.5]], "h": 0.01, "epsilon": 0.001, "bc": {"bloch": 0.3}}"#;
        let spec: MediumSpec = serde_json::from_str(s).unwrap();
        let med = spec.build().unwrap();
        assert_eq!(med.bc, BoundaryKind::Bloch(vec![0.3]));
        assert!(serde_json::from_str::<MediumSpec>(r#"{"dim": 1, "h": 0.1, "colour": 2}"#).is_err());
    }
}
