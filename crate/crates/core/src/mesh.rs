//! Cell-centred finite-volume graph shared by the 1D, 2D and radial
//! discretisations: cells with volumes, internal links with a face
//! measure and the two centre-to-face distances, and outer faces.
//!
//! Cells are numbered so that the stiffness matrix is banded: natural
//! order in 1D, fast index along the shorter grid axis in 2D, and a
//! zig-zag along the wrapped axis for Bloch closures so periodic links
//! stay within the band.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::medium::{BoundaryKind, ContrastMedium, Geometry, Geometry1D, Geometry2D, RadialGeometry};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub volume: f64,
    /// x (1D, 2D) or r (radial) in slot 0; y in slot 1.
    pub center: [f64; 2],
    pub region: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub measure: f64,
    pub da: f64,
    pub db: f64,
    /// Number of periods crossed going from a to b's image (Bloch wraps).
    pub shift: [i32; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterFace {
    pub cell: usize,
    pub measure: f64,
    pub dist: f64,
}

/// An interface link seen from inclusion `inclusion`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceFace {
    pub link: usize,
    pub inclusion: usize,
    pub inside: usize,
    pub outside: usize,
    pub measure: f64,
    /// measure / (centre-to-face distance) on each side, σ = 1.
    pub c_in: f64,
    pub c_out: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Line,
    Grid { nx: usize, ny: usize },
    Radial,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub kind: MeshKind,
    pub cells: Vec<Cell>,
    pub links: Vec<Link>,
    pub outer: Vec<OuterFace>,
    pub period: [f64; 2],
    pub inclusion_count: usize,
    /// Grid only: row-major (iy*nx + ix) → cell index.
    pub grid_index: Vec<usize>,
    /// Interface faces, grouped per inclusion.
    pub interface: Vec<Vec<InterfaceFace>>,
}

impl Mesh {
    /// Mesh for the medium's geometry, grid spacing and outer closure.
    pub fn build(med: &ContrastMedium) -> Result<Mesh> {
        let periodic = matches!(med.bc, BoundaryKind::Bloch(_));
        match &med.geometry {
            Geometry::Line(g) => {
                let n = (g.len() / med.h).round().max(1.0) as usize;
                Mesh::line(g, n, periodic)
            }
            Geometry::Grid(g) => {
                if (g.h - med.h).abs() > 1e-12 * g.h {
                    return Err(Error::Geometry(format!("2D mask spacing {} differs from h = {}", g.h, med.h)));
                }
                Ok(Mesh::grid(g, periodic))
            }
            Geometry::Radial(r) => {
                if periodic {
                    return Err(Error::Unsupported("Bloch closure on the radial geometry".into()));
                }
                Ok(Mesh::radial(r, (1.0 / med.h).round().max(2.0) as usize))
            }
        }
    }

    /// Piecewise-uniform 1D mesh with about `n` cells; every segment gets
    /// round(len·n/L) ≥ 1 cells so interfaces fall on faces.
    pub fn line(g: &Geometry1D, n: usize, periodic: bool) -> Result<Mesh> {
        if n < 2 {
            return Err(Error::Geometry("need at least 2 cells".into()));
        }
        let hh = g.len() / n as f64;
        let mut nat: Vec<Cell> = vec![];
        for s in g.segments() {
            let k = (s.len() / hh).round().max(1.0) as usize;
            let w = s.len() / k as f64;
            for c in 0..k {
                let x = s.x0 + (c as f64 + 0.5) * w;
                nat.push(Cell { volume: w, center: [x, 0.0], region: s.region });
            }
        }
        let n = nat.len();
        // position of natural cell i in the band order
        let pos: Vec<usize> = if periodic { zigzag(n) } else { (0..n).collect() };
        let mut cells = vec![nat[0]; n];
        for i in 0..n {
            cells[pos[i]] = nat[i];
        }
        let mut links = vec![];
        for i in 0..n - 1 {
            links.push(Link {
                a: pos[i],
                b: pos[i + 1],
                measure: 1.0,
                da: nat[i].volume / 2.0,
                db: nat[i + 1].volume / 2.0,
                shift: [0, 0],
            });
        }
        let mut outer = vec![];
        if periodic {
            links.push(Link {
                a: pos[n - 1],
                b: pos[0],
                measure: 1.0,
                da: nat[n - 1].volume / 2.0,
                db: nat[0].volume / 2.0,
                shift: [1, 0],
            });
        } else {
            outer.push(OuterFace { cell: pos[0], measure: 1.0, dist: nat[0].volume / 2.0 });
            outer.push(OuterFace { cell: pos[n - 1], measure: 1.0, dist: nat[n - 1].volume / 2.0 });
        }
        Ok(Mesh::finish(MeshKind::Line, cells, links, outer, [g.len(), 0.0], g.inclusions.len(), vec![]))
    }

    pub fn grid(g: &Geometry2D, periodic: bool) -> Mesh {
        let (nx, ny, h) = (g.nx, g.ny, g.h);
        // fast axis = shorter one
        let x_fast = nx <= ny;
        let (nf, ns) = if x_fast { (nx, ny) } else { (ny, nx) };
        let rank: Vec<usize> = if periodic { zigzag(ns) } else { (0..ns).collect() };
        let idx = |ix: usize, iy: usize| {
            let (f, s) = if x_fast { (ix, iy) } else { (iy, ix) };
            rank[s] * nf + f
        };
        let mut cells = vec![Cell { volume: h * h, center: [0.0, 0.0], region: None }; nx * ny];
        let mut grid_index = vec![0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let c = idx(ix, iy);
                grid_index[iy * nx + ix] = c;
                cells[c] = Cell {
                    volume: h * h,
                    center: [(ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h],
                    region: g.label(ix, iy),
                };
            }
        }
        let half = h / 2.0;
        let mut links = vec![];
        let mut outer = vec![];
        for iy in 0..ny {
            for ix in 0..nx {
                let here = idx(ix, iy);
                // +x neighbour
                if ix + 1 < nx {
                    links.push(Link { a: here, b: idx(ix + 1, iy), measure: h, da: half, db: half, shift: [0, 0] });
                } else if periodic {
                    links.push(Link { a: here, b: idx(0, iy), measure: h, da: half, db: half, shift: [1, 0] });
                }
                if iy + 1 < ny {
                    links.push(Link { a: here, b: idx(ix, iy + 1), measure: h, da: half, db: half, shift: [0, 0] });
                } else if periodic {
                    links.push(Link { a: here, b: idx(ix, 0), measure: h, da: half, db: half, shift: [0, 1] });
                }
                if !periodic {
                    let sides = (ix == 0) as usize + (ix == nx - 1) as usize + (iy == 0) as usize + (iy == ny - 1) as usize;
                    for _ in 0..sides {
                        outer.push(OuterFace { cell: here, measure: h, dist: half });
                    }
                }
            }
        }
        Mesh::finish(MeshKind::Grid { nx, ny }, cells, links, outer, [g.lx, g.ly], g.inclusion_count(), grid_index)
    }

    /// Spherical shells on [0, a] ∪ [a, 1], about n cells in total. The
    /// face at r = 0 has zero measure, so no closure is needed there.
    pub fn radial(g: &RadialGeometry, n: usize) -> Mesh {
        let n_in = ((g.a * n as f64).round() as usize).max(1);
        let n_out = (((1.0 - g.a) * n as f64).round() as usize).max(1);
        let mut faces = vec![];
        for c in 0..=n_in {
            faces.push(g.a * c as f64 / n_in as f64);
        }
        for c in 1..=n_out {
            faces.push(g.a + (1.0 - g.a) * c as f64 / n_out as f64);
        }
        let shell = |r0: f64, r1: f64| 4.0 / 3.0 * PI * (r1.powi(3) - r0.powi(3));
        let mut cells = vec![];
        for c in 0..faces.len() - 1 {
            let (r0, r1) = (faces[c], faces[c + 1]);
            cells.push(Cell {
                volume: shell(r0, r1),
                center: [0.5 * (r0 + r1), 0.0],
                region: if c < n_in { Some(0) } else { None },
            });
        }
        let mut links = vec![];
        for c in 0..cells.len() - 1 {
            let rf = faces[c + 1];
            links.push(Link {
                a: c,
                b: c + 1,
                measure: 4.0 * PI * rf * rf,
                da: rf - cells[c].center[0],
                db: cells[c + 1].center[0] - rf,
                shift: [0, 0],
            });
        }
        let last = cells.len() - 1;
        let outer = vec![OuterFace { cell: last, measure: 4.0 * PI, dist: 1.0 - cells[last].center[0] }];
        Mesh::finish(MeshKind::Radial, cells, links, outer, [0.0, 0.0], 1, vec![])
    }

    fn finish(
        kind: MeshKind,
        cells: Vec<Cell>,
        links: Vec<Link>,
        outer: Vec<OuterFace>,
        period: [f64; 2],
        inclusion_count: usize,
        grid_index: Vec<usize>,
    ) -> Mesh {
        let mut interface = vec![vec![]; inclusion_count];
        for (l, lk) in links.iter().enumerate() {
            let (ra, rb) = (cells[lk.a].region, cells[lk.b].region);
            let face = match (ra, rb) {
                (Some(i), None) => Some(InterfaceFace {
                    link: l,
                    inclusion: i,
                    inside: lk.a,
                    outside: lk.b,
                    measure: lk.measure,
                    c_in: lk.measure / lk.da,
                    c_out: lk.measure / lk.db,
                }),
                (None, Some(i)) => Some(InterfaceFace {
                    link: l,
                    inclusion: i,
                    inside: lk.b,
                    outside: lk.a,
                    measure: lk.measure,
                    c_in: lk.measure / lk.db,
                    c_out: lk.measure / lk.da,
                }),
                _ => None,
            };
            if let Some(f) = face {
                interface[f.inclusion].push(f);
            }
        }
        Mesh { kind, cells, links, outer, period, inclusion_count, grid_index, interface }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.volume).collect()
    }

    /// Cells of the matrix region (in band order).
    pub fn exterior_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.cells[c].region.is_none()).collect()
    }

    pub fn interior_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.cells[c].region.is_some()).collect()
    }

    /// All interface faces, inclusion by inclusion.
    pub fn interface_faces(&self) -> Vec<InterfaceFace> {
        self.interface.iter().flatten().copied().collect()
    }

    /// Sample a function of the cell centre.
    pub fn sample<F: Fn(&Cell) -> f64>(&self, f: F) -> Vec<f64> {
        self.cells.iter().map(f).collect()
    }

    /// Smallest cell width (h for uniform meshes).
    pub fn h_max(&self) -> f64 {
        match self.kind {
            MeshKind::Line => self.cells.iter().map(|c| c.volume).fold(0.0, f64::max),
            MeshKind::Grid { .. } => self.cells[0].volume.sqrt(),
            MeshKind::Radial => self.links.iter().map(|l| l.da + l.db).fold(0.0, f64::max),
        }
    }

    /// Cells ordered by position (1D and radial: natural left-to-right).
    pub fn order_by_position(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            let (p, q) = (self.cells[a].center, self.cells[b].center);
            (p[1], p[0]).partial_cmp(&(q[1], q[0])).unwrap()
        });
        idx
    }
}

/// Ring positions 0, n−1, 1, n−2, … so ring neighbours are ≤ 2 apart.
fn zigzag(n: usize) -> Vec<usize> {
    let mut pos = vec![0; n];
    let (mut lo, mut hi) = (0, n);
    let mut p = 0;
    while lo < hi {
        pos[lo] = p;
        p += 1;
        lo += 1;
        if lo < hi {
            hi -= 1;
            pos[hi] = p;
            p += 1;
        }
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_keeps_ring_neighbours_close() {
        for n in [2, 3, 7, 10] {
            let p = zigzag(n);
            let mut seen = p.clone();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            for i in 0..n {
                let j = (i + 1) % n;
                assert!((p[i] as i64 - p[j] as i64).abs() <= 2);
            }
        }
    }

    #[test]
    fn line_mesh_aligns_interfaces() {
        let g = Geometry1D::single(-0.5, 0.5).unwrap();
        let m = Mesh::line(&g, 4000, false).unwrap();
        assert_eq!(m.len(), 4000);
        assert_eq!(m.interior_cells().len(), 2000);
        assert_eq!(m.interface[0].len(), 2);
    }

    #[test]
    fn radial_volumes_sum_to_ball() {
        let m = Mesh::radial(&RadialGeometry::new(0.5).unwrap(), 100);
        let v: f64 = m.volumes().iter().sum();
        assert!((v - 4.0 / 3.0 * PI).abs() < 1e-12);
        assert_eq!(m.interface[0].len(), 1);
    }
}
