//! Vector fields, trajectories with their tangent cocycle, and singularities.

mod field;
pub mod integrate;
mod orbit;
mod singularity;

pub use field::{PolyTerm, VectorFieldSpec};
pub use orbit::{finite_difference_top_exponent, flow_map, integrate, OrbitSegment};
pub use singularity::{
    analyze_singularity, find_singularities, SingularityReport, SingularitySearch,
};

use thiserror::Error;

/// Largest dimension for which the variational equation is integrated.
pub const MAX_FLOW_DIM: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("trajectory left the ball of radius 1e8 at t = {t}")]
    Escape { t: f64 },
    #[error("step size underflow at t = {t}")]
    StiffnessError { t: f64 },
    #[error("{0}")]
    Domain(String),
}
