//! False-discovery-rate controlled variable selection for complex-valued
//! high-dimensional linear models.
//!
//! The crate is organised bottom-up:
//!
//! * [`cnum`]: dense complex matrices, Hermitian solves, complex Gaussian sampling.
//! * [`lars`]: the complex terminating LARS forward selector with warm restarts.
//! * [`trex`]: dummy-based random experiments, relative occurrences, FDP
//!   calibration and the final selection.
//! * [`bench`]: sparse-regression and single-snapshot DOA scenario generators,
//!   per-trial metrics and a seeded Monte-Carlo driver.

pub mod bench;
pub mod cnum;
pub mod lars;
pub mod trex;

pub use num_complex::Complex64;

pub use cnum::ComplexMatrix;
pub use lars::{CandidateSet, LarsState};
pub use trex::{select, select_with, SelectionResult, TRexConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {column} is constant")]
    ConstantColumn { column: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("active set is numerically collinear after adding column {column}")]
    SingularActiveSet { column: usize },

    #[error("forward selection path is saturated")]
    PathSaturated,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid resolution {0} does not divide 180 degrees")]
    InvalidGrid(f64),

    #[error("source at {0} degrees is not on the angular grid")]
    OffGridSource(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
