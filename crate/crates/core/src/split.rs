//! Interior/exterior splitting of the FV graph at Γ, with face values as
//! the coupling unknowns. Eliminating the faces again reproduces the
//! harmonic-mean interface links exactly, so everything built here is an
//! exact rewrite of the assembled operator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fdm::assemble_block;
use crate::linalg::{Banded, Ldl, Symmetry};
use crate::medium::BoundaryKind;
use crate::mesh::{InterfaceFace, Mesh};
use crate::scalar::Scalar;

/// A subset of cells with its own stiffness (σ = 1) and zero Dirichlet
/// data on every face leaving the subset.
#[derive(Clone, Debug)]
pub struct Block<T> {
    pub cells: Vec<usize>,
    /// mesh cell → position in the block (usize::MAX if absent)
    pub pos: Vec<usize>,
    pub k: Banded<T>,
    pub mass: Vec<f64>,
}

impl<T: Scalar> Block<T> {
    fn new(mesh: &Mesh, cells: Vec<usize>, bc: &BoundaryKind) -> Result<Self> {
        let (k, mass, pos) = assemble_block::<T>(mesh, &cells, &|_| 1.0, bc)?;
        Ok(Block { cells, pos, k, mass })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Restrict a mesh field to the block.
    pub fn gather(&self, u: &[T]) -> Vec<T> {
        self.cells.iter().map(|&c| u[c]).collect()
    }

    /// M·f restricted to the block.
    pub fn mass_times(&self, f: &[T]) -> Vec<T> {
        self.cells.iter().zip(&self.mass).map(|(&c, m)| f[c] * T::of(*m)).collect()
    }

    /// Factor K − shift·M (Hermitian for real shifts).
    pub fn factor(&self, shift: f64) -> Result<Ldl<T>> {
        self.k.factor(T::of(shift), Some(&self.mass), Symmetry::Hermitian)
    }
}

#[derive(Clone, Debug)]
pub struct Split<T> {
    pub mesh: Arc<Mesh>,
    pub bc: BoundaryKind,
    /// All interface faces, grouped by inclusion.
    pub faces: Vec<InterfaceFace>,
    /// Face index ranges per inclusion.
    pub ranges: Vec<std::ops::Range<usize>>,
    pub interior: Block<T>,
    pub exterior: Block<T>,
    /// |Ω₋^i| on the mesh.
    pub volumes: Vec<f64>,
}

impl<T: Scalar> Split<T> {
    pub fn new(mesh: Arc<Mesh>, bc: &BoundaryKind) -> Result<Self> {
        if mesh.inclusion_count == 0 {
            return Err(Error::Geometry("no inclusions: nothing to split".into()));
        }
        let mut faces = vec![];
        let mut ranges = vec![];
        for list in &mesh.interface {
            let s = faces.len();
            faces.extend_from_slice(list);
            ranges.push(s..faces.len());
        }
        let interior = Block::new(&mesh, mesh.interior_cells(), &BoundaryKind::Dirichlet)?;
        let exterior = Block::new(&mesh, mesh.exterior_cells(), bc)?;
        let mut volumes = vec![0.0; mesh.inclusion_count];
        for c in &mesh.cells {
            if let Some(i) = c.region {
                volumes[i] += c.volume;
            }
        }
        Ok(Split { mesh, bc: bc.clone(), faces, ranges, interior, exterior, volumes })
    }

    pub fn inclusion_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Face measures (the discrete L₂(Γ) weights).
    pub fn weights(&self) -> Vec<f64> {
        self.faces.iter().map(|f| f.measure).collect()
    }

    pub fn inclusion_of_face(&self, f: usize) -> usize {
        self.faces[f].inclusion
    }

    /// Exterior right-hand side B₊φ for face values φ.
    pub fn lift_exterior(&self, phi: &[T]) -> Vec<T> {
        let mut b = vec![T::zero(); self.exterior.len()];
        for (f, p) in self.faces.iter().zip(phi) {
            b[self.exterior.pos[f.outside]] += *p * T::of(f.c_out);
        }
        b
    }

    /// Interior right-hand side B₋φ.
    pub fn lift_interior(&self, phi: &[T]) -> Vec<T> {
        let mut b = vec![T::zero(); self.interior.len()];
        for (f, p) in self.faces.iter().zip(phi) {
            b[self.interior.pos[f.inside]] += *p * T::of(f.c_in);
        }
        b
    }

    /// Exterior flux per face, n out of the inclusion: c_out (u_out − φ).
    pub fn exterior_flux(&self, u_ext: &[T], phi: &[T]) -> Vec<T> {
        self.faces
            .iter()
            .zip(phi)
            .map(|(f, p)| (u_ext[self.exterior.pos[f.outside]] - *p) * T::of(f.c_out))
            .collect()
    }

    /// Interior flux per face, n out of the inclusion: c_in (φ − u_in).
    pub fn interior_flux(&self, u_int: &[T], phi: &[T]) -> Vec<T> {
        self.faces
            .iter()
            .zip(phi)
            .map(|(f, p)| (*p - u_int[self.interior.pos[f.inside]]) * T::of(f.c_in))
            .collect()
    }

    /// Per-inclusion sums of a per-face quantity.
    pub fn per_inclusion(&self, v: &[T]) -> Vec<T> {
        self.ranges.iter().map(|r| v[r.clone()].iter().fold(T::zero(), |a, b| a + *b)).collect()
    }

    /// Face values equal to c_i on Γ_i.
    pub fn constant_trace(&self, c: &[T]) -> Vec<T> {
        self.faces.iter().map(|f| c[f.inclusion]).collect()
    }

    /// Mesh field from block fields.
    pub fn scatter(&self, u_ext: &[T], u_int: &[T]) -> Vec<T> {
        let mut u = vec![T::zero(); self.mesh.len()];
        for (&c, v) in self.exterior.cells.iter().zip(u_ext) {
            u[c] = *v;
        }
        for (&c, v) in self.interior.cells.iter().zip(u_int) {
            u[c] = *v;
        }
        u
    }

    /// Interior field equal to c_i on inclusion i.
    pub fn interior_constants(&self, c: &[T]) -> Vec<T> {
        self.interior.cells.iter().map(|&cell| c[self.mesh.cells[cell].region.unwrap()]).collect()
    }
}
