//! Band solvers and the Sturm/inverse-iteration eigen solver.

pub mod banded;
pub mod dense;
pub mod eigen;

pub use banded::{Banded, Ldl, Symmetry};
pub use eigen::{eigenpairs, eigenpairs_below, eigenvalues_below, EigenOptions, Eigenpairs, Sturm};
