use thiserror::Error;

use crate::bubble::BubbleError;
use crate::fdstencil::StencilError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::mu_table::MuTableError;

/// Crate-level error: every module error converts into this.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Bubble(#[from] BubbleError),
    #[error(transparent)]
    MuTable(#[from] MuTableError),
    #[error(transparent)]
    Stencil(#[from] StencilError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("problem too large: {unknowns} unknowns exceeds the limit of {limit}")]
    TooLarge { unknowns: usize, limit: usize },
}

impl Error {
    /// True when the failure is a calibration-range problem rather than a
    /// numerical or input failure.
    pub fn is_out_of_calibration(&self) -> bool {
        matches!(
            self,
            Error::MuTable(MuTableError::OutOfCalibration { .. })
                | Error::Bubble(BubbleError::MuTable(MuTableError::OutOfCalibration { .. }))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
