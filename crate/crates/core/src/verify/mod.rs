//! Splitting estimation and hyperbolicity certificates on sampled orbits.
//!
//! Every certificate searches a uniform time `T` on a fixed grid and compares
//! the worst sample against a threshold with a 10% margin. Nothing is claimed
//! beyond the samples that were examined.

mod chain;
mod checks;
mod cone;
mod poincare;
mod splitting;

pub use chain::{certify_orbit, certify_splitting, ChainOptions, ChainReport, Stage};
pub use checks::{
    check_dominated, check_p_singular_hyperbolic, check_partial_hyperbolic, flow_in_f_check,
    singularity_compatibility,
};
pub use cone::{adapted_forms, cone_certificate, cone_certificate_with_forms, AdaptedForms};
pub use poincare::{linear_poincare_flow, poincare_monotonicity, PoincareStep};
pub use splitting::{estimate_splitting, SplittingField, DEFAULT_WINDOW};

use serde::Serialize;
use thiserror::Error;

use crate::exterior::ExteriorError;
use crate::flow::FlowError;
use crate::lyapunov::LyapunovError;
use crate::pseudo_euclidean::PseudoEuclideanError;
use crate::Verdict;

/// Uniform times tried by the certificates.
pub const T_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 20.0];
/// Contraction threshold `1/2` shrunk by the 10% margin.
pub const CONTRACTION_PASS: f64 = 0.45;
/// Expansion threshold `2` enlarged by the 10% margin.
pub const EXPANSION_PASS: f64 = 2.2;
/// Target number of sample starts per grid time.
pub const SAMPLE_BUDGET: usize = 2000;
pub const INVARIANCE_TOL: f64 = 1e-3;
pub const TRANSVERSALITY_TOL: f64 = 1e-3;
pub const FLOW_ANGLE_TOL: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("{0}")]
    Domain(String),
    #[error("no exponent gap at the cut (gap {0:e} per unit time)")]
    NoGap(f64),
    #[error("J(X(x)) <= 0 at sample {0}")]
    FieldNotNonNegative(usize),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Form(#[from] PseudoEuclideanError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name")]
pub enum Property {
    Dominated,
    PartiallyHyperbolic,
    PSingularHyperbolic { p: usize },
    SectionalHyperbolic,
    ConeCriterion { p: usize, tau: f64 },
    FlowInCentre,
    SingularityCompatibility,
    PoincareMonotonicity { t: f64 },
}

/// Worst sampled value at one grid time.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub t: f64,
    pub log_value: f64,
    /// Time of the worst sample.
    pub worst_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    /// Smallest grid time at which every sample clears the threshold.
    pub uniform_t: Option<f64>,
    /// Relative margin of the worst sample at `uniform_t`.
    pub margin: Option<f64>,
    pub threshold: f64,
    pub grid: Vec<GridPoint>,
    /// `(K, λ)` from a log-linear fit of the worst value against `T`.
    pub fitted_k: Option<f64>,
    pub fitted_rate: Option<f64>,
    /// Growth rates on `E` and `F` at the worst sample of the largest grid time.
    pub e_rate: Option<f64>,
    pub f_rate: Option<f64>,
    pub samples: usize,
    pub violation: Option<String>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(property: Property, threshold: f64) -> Self {
        Self {
            property,
            verdict: Verdict::Indeterminate,
            uniform_t: None,
            margin: None,
            threshold,
            grid: Vec::new(),
            fitted_k: None,
            fitted_rate: None,
            e_rate: None,
            f_rate: None,
            samples: 0,
            violation: None,
            notes: Vec::new(),
        }
    }

    /// An `Indeterminate` certificate recording why a stage could not run.
    pub fn indeterminate(property: Property, stage: &str, why: impl std::fmt::Display) -> Self {
        let mut c = Self::new(property, f64::NAN);
        c.notes.push(format!("{stage}: {why}"));
        c
    }

    pub fn fail(property: Property, threshold: f64, violation: String) -> Self {
        let mut c = Self::new(property, threshold);
        c.verdict = Verdict::Fail;
        c.violation = Some(violation);
        c
    }
}
