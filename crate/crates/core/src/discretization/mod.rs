//! Grids, stencils and the two semi-discrete operators: the 8-field
//! time-domain operator `L_h` and the 5-field generator `A_h`.

mod generator;
mod grid;
pub mod stencil;
mod timedomain;

pub use generator::{assemble_generator, assemble_generator_capped, GeneratorMatrix, SemigroupState, DEFAULT_MAX_DENSE_NODES};
pub use grid::{build_grid, Grid};
pub use timedomain::{assemble_time_domain, Field, SemiDiscreteSystem};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("grid too coarse: n_cells = {0} (need at least 8)")]
    TooCoarse(usize),
    #[error("invalid domain length {0}")]
    InvalidLength(f64),
    #[error("grid length {grid} does not match parameter length {params}")]
    LengthMismatch { grid: f64, params: f64 },
    #[error("generator too large for dense work: {nodes} nodes exceeds cap {cap}")]
    DimensionOverflow { nodes: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("energy Gram matrix is not positive definite: {0}")]
    Gram(String),
}
