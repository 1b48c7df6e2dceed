//! High-contrast media: exact 1D spectra, finite-volume operators, the
//! DtN reduction and the ε → 0 limit spectrum.

pub mod bloch;
pub mod config;
pub mod dtn;
pub mod error;
pub mod exact1d;
pub mod fdm;
pub mod limitspec;
pub mod linalg;
pub mod medium;
pub mod mesh;
pub mod radial3d;
pub mod roots;
pub mod scalar;
pub mod split;
pub mod studies;

pub use error::{Error, Result};
pub use medium::{BoundaryKind, ContrastMedium, Geometry, Geometry1D, Geometry2D, RadialGeometry};
pub use scalar::{Scalar, C64};
