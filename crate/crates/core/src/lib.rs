//! Two-level finite elements with adapted bubbles for the 2D Helmholtz
//! equation `-Δu - c²u = f`.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: structured generators, the mesh text format, per-element geometry
//!   and VTK export.
//! - [`linalg`]: complex dense LU for element-level systems and the sparse
//!   direct solver for the global system.
//! - [`bubble`]: element sub-meshes, bubble sub-problem solves and the
//!   condensation integrals each element contributes.
//! - [`mu_table`]: calibrated bubble scaling constants and the sub-mesh
//!   resolution policy.
//! - [`assembly`]: global Galerkin / RFB / AB systems and boundary conditions.
//! - [`fdstencil`]: the closed-form finite-difference companions in 1D and on
//!   equilateral lattices.
//! - [`analysis`]: truncation-error coefficients of the seven-point family.
//! - [`verify`]: exact solutions, error norms, reference solves and pollution
//!   sweeps.

pub mod analysis;
pub mod assembly;
pub mod bubble;
mod error;
mod fe;
pub mod fdstencil;
pub mod linalg;
pub mod mesh;
pub mod mu_table;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use assembly::{DirichletData, Method, ProblemSpec, Solution, Source};
pub use mesh::{BoundaryMarker, ElementGeometry, ElementKind, Mesh};
pub use mu_table::{MuLookup, MuTable};
