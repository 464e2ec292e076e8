use serde::Serialize;

use super::{
    check_dominated, check_p_singular_hyperbolic, check_partial_hyperbolic, cone_certificate,
    estimate_splitting, flow_in_f_check, poincare_monotonicity, singularity_compatibility,
    Certificate, Property, SplittingField, DEFAULT_WINDOW,
};
use crate::flow::{OrbitSegment, SingularityReport};
use crate::Verdict;

#[derive(Debug, Clone, Serialize)]
pub struct ChainOptions {
    pub d_e: usize,
    pub p: usize,
    pub tau: f64,
    pub window: f64,
    /// Lower bound on the index of singularities; `d_e` when absent.
    pub index_bound: Option<usize>,
    /// Time of the linear Poincaré flow step; skipped when absent.
    pub poincare_t: Option<f64>,
}

impl ChainOptions {
    pub fn new(d_e: usize, p: usize, tau: f64) -> Self {
        Self {
            d_e,
            p,
            tau,
            window: DEFAULT_WINDOW,
            index_bound: None,
            poincare_t: Some(tau),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub stage: String,
    pub certificate: Certificate,
    /// Whether the stage enters the aggregated verdict.
    pub counted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub splitting: Option<SplittingField>,
    pub stages: Vec<Stage>,
    pub verdict: Verdict,
}

impl ChainReport {
    pub fn stage(&self, name: &str) -> Option<&Certificate> {
        self.stages
            .iter()
            .find(|s| s.stage == name)
            .map(|s| &s.certificate)
    }
}

/// Estimates the splitting of `orbit` and runs every certificate on it.
pub fn certify_orbit(
    orbit: &OrbitSegment,
    singularities: &[SingularityReport],
    opts: &ChainOptions,
) -> ChainReport {
    match estimate_splitting(orbit, opts.d_e, opts.window) {
        Ok(split) => certify_splitting(orbit, split, singularities, opts),
        Err(e) => {
            let cert = Certificate::indeterminate(Property::Dominated, "splitting", e);
            ChainReport {
                splitting: None,
                stages: vec![Stage {
                    stage: "splitting".into(),
                    certificate: cert,
                    counted: true,
                }],
                verdict: Verdict::Indeterminate,
            }
        }
    }
}

/// Runs the certificate chain on a given splitting.
///
/// Stage errors become `Indeterminate` certificates tagged with the stage.
/// The Poincaré monotonicity step is reported but not aggregated.
pub fn certify_splitting(
    orbit: &OrbitSegment,
    split: SplittingField,
    singularities: &[SingularityReport],
    opts: &ChainOptions,
) -> ChainReport {
    let mut stages = Vec::new();
    let mut push = |name: &str, cert: Certificate, counted: bool| {
        stages.push(Stage {
            stage: name.into(),
            certificate: cert,
            counted,
        });
    };
    push("dominated", check_dominated(&split, orbit), true);
    push(
        "partially_hyperbolic",
        check_partial_hyperbolic(&split, orbit),
        true,
    );
    let p_prop = Property::PSingularHyperbolic { p: opts.p };
    let cert = check_p_singular_hyperbolic(&split, orbit, opts.p, singularities)
        .unwrap_or_else(|e| Certificate::indeterminate(p_prop, "p_singular_hyperbolic", e));
    push("p_singular_hyperbolic", cert, true);
    push("flow_in_f", flow_in_f_check(&split, orbit), true);
    let index_bound = opts.index_bound.unwrap_or(opts.d_e);
    push(
        "singularities",
        singularity_compatibility(singularities, split.d_e(), index_bound),
        true,
    );
    let cone_prop = Property::ConeCriterion {
        p: opts.p,
        tau: opts.tau,
    };
    let cert = cone_certificate(orbit, &split, opts.tau, opts.p)
        .unwrap_or_else(|e| Certificate::indeterminate(cone_prop, "cone", e));
    push("cone", cert, true);
    if let Some(t) = opts.poincare_t {
        let cert = poincare_monotonicity(orbit, &split, t).unwrap_or_else(|e| {
            Certificate::indeterminate(Property::PoincareMonotonicity { t }, "poincare", e)
        });
        push("poincare", cert, false);
    }
    let verdict = Verdict::all(
        stages
            .iter()
            .filter(|s| s.counted)
            .map(|s| s.certificate.verdict),
    );
    ChainReport {
        splitting: Some(split),
        stages,
        verdict,
    }
}
