//! Numerical tools for singular and sectional hyperbolicity of flows.
//!
//! The crate is organised bottom-up:
//!
//! - [`exterior`]: exterior powers `∧^p` of vectors and operators, their
//!   generators, Plücker coordinates and induced splittings.
//! - [`pseudo_euclidean`]: indefinite quadratic forms `J`, cones, separation
//!   and monotonicity tests, the `J`-polar decomposition `L = RU` and the
//!   singular `J`-values `r^±`.
//! - [`flow`]: vector fields, adaptive integration of trajectories together
//!   with the variational equation, and singularity analysis.
//! - [`lyapunov`]: Lyapunov exponents, `p`-sectional exponents, the
//!   domination functional and Wojtkowski-type averages.
//! - [`verify`]: splitting estimation and the certificates for dominated,
//!   partially hyperbolic and `p`-singular hyperbolic behaviour.
//!
//! All linear algebra is dense `f64` through `nalgebra`.

pub mod cocycle;
pub mod exterior;
pub mod flow;
pub mod linalg;
pub mod lyapunov;
pub mod pseudo_euclidean;
mod verdict;
pub mod verify;

pub use cocycle::{Cocycle, CocycleSeq, ScaledMatrix, Subbundle};
pub use linalg::{Matrix, Vector};
pub use verdict::Verdict;
