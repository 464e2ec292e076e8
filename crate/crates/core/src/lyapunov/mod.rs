//! Lyapunov exponents, `p`-sectional exponents and the domination functional.
//!
//! Growth rates come from QR re-orthonormalisation of an identity frame
//! along the cocycle. Exponents are per unit flow time.

mod oseledets;
mod wojtkowski;

pub use oseledets::oseledets_directions;
pub use wojtkowski::{wojtkowski_check, WojtkowskiReport};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::cocycle::{
    log_p_conorm, qr_growth, wedge, Cocycle, CocycleSeq, ScaledMatrix, Subbundle,
};
use crate::exterior::ExteriorError;
use crate::flow::OrbitSegment;
use crate::linalg::{binomial, linear_fit, min_principal_angle};
use crate::pseudo_euclidean::PseudoEuclideanError;

/// Minimum horizon for an exponent estimate on an orbit.
pub const MIN_HORIZON: f64 = 10.0;
/// Last-quartile drift above which an estimate is flagged.
pub const DRIFT_LIMIT: f64 = 0.05;
/// Largest invariance angle tolerated for a subbundle.
pub const INVARIANCE_TOL: f64 = 1e-3;
const SERIES_POINTS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("{0}")]
    Domain(String),
    #[error("horizon {0} is shorter than the minimum of 10")]
    HorizonTooShort(f64),
    #[error("subbundle is not invariant (angle {0:e})")]
    NonInvariantSubbundle(f64),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error(transparent)]
    Form(#[from] PseudoEuclideanError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

pub type Result<T> = std::result::Result<T, LyapunovError>;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// `χ_1 ≥ … ≥ χ_n`.
    pub exponents: Vec<f64>,
    /// Running estimates `(t, sorted exponents)`.
    pub series: Vec<(f64, Vec<f64>)>,
    pub horizon: f64,
    /// Largest spread of any running estimate over the last quartile.
    pub error_estimate: f64,
    pub low_confidence: bool,
    /// Time average of `tr DX`, when known.
    pub trace_average: Option<f64>,
    /// Order `p` to the sorted `p`-sectional exponents along a chosen subbundle.
    pub p_sectional: BTreeMap<usize, Vec<f64>>,
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Largest range of `values[m].1[i]` over the last quarter of the samples.
fn last_quartile_drift(times: &[f64], values: &[Vec<f64>]) -> f64 {
    let m = values.len();
    let start = (3 * m) / 4;
    let t_end = times[m - 1];
    let d = values[0].len();
    (0..d)
        .map(|i| {
            let it = (start..m).filter(|&k| times[k] >= 0.75 * t_end && times[k] > 0.0);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in it {
                lo = lo.min(values[k][i]);
                hi = hi.max(values[k][i]);
            }
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Exponents of a cocycle over the samples `i..=j`.
pub fn cocycle_spectrum<C: Cocycle + ?Sized>(c: &C, i: usize, j: usize) -> Result<SpectrumReport> {
    if i >= j || j > c.steps() {
        return Err(LyapunovError::Domain(format!(
            "sample range {i}..{j} is empty or out of bounds"
        )));
    }
    let growth = qr_growth(c, i, j);
    let dt = c.step_time();
    let times: Vec<f64> = (0..growth.len()).map(|m| m as f64 * dt).collect();
    let running: Vec<Vec<f64>> = growth
        .iter()
        .zip(&times)
        .map(|(g, &t)| {
            if t > 0.0 {
                sorted_desc(g.iter().map(|v| v / t).collect())
            } else {
                vec![0.0; g.len()]
            }
        })
        .collect();
    let horizon = *times.last().unwrap();
    let error_estimate = last_quartile_drift(&times, &running);
    let stride = (running.len() / SERIES_POINTS).max(1);
    let mut series: Vec<(f64, Vec<f64>)> = (1..running.len())
        .step_by(stride)
        .map(|m| (times[m], running[m].clone()))
        .collect();
    if series.last().map(|s| s.0) != Some(horizon) {
        series.push((horizon, running.last().unwrap().clone()));
    }
    Ok(SpectrumReport {
        exponents: running.last().unwrap().clone(),
        series,
        horizon,
        error_estimate,
        low_confidence: error_estimate > DRIFT_LIMIT,
        trace_average: None,
        p_sectional: BTreeMap::new(),
    })
}

/// Lyapunov spectrum of an orbit over its full horizon.
pub fn lyapunov_exponents(orbit: &OrbitSegment) -> Result<SpectrumReport> {
    let horizon = orbit.horizon();
    if horizon < MIN_HORIZON {
        return Err(LyapunovError::HorizonTooShort(horizon));
    }
    let mut report = cocycle_spectrum(orbit, 0, orbit.steps())?;
    report.trace_average = Some(orbit.trace_integral.last().unwrap() / horizon);
    Ok(report)
}

fn restrict_checked<C: Cocycle + ?Sized>(c: &C, bundle: &Subbundle) -> Result<CocycleSeq> {
    if bundle.ambient_dim() != c.dim() || bundle.last() > c.steps() {
        return Err(LyapunovError::Domain(
            "subbundle does not fit the cocycle".into(),
        ));
    }
    let r = bundle.restrict(c);
    if r.max_residual > INVARIANCE_TOL {
        return Err(LyapunovError::NonInvariantSubbundle(r.max_residual));
    }
    Ok(r.cocycle)
}

/// Growth rates of `∧^p Φ` on `∧^p F`, sorted descending.
pub fn p_sectional_exponents<C: Cocycle + ?Sized>(
    c: &C,
    f: &Subbundle,
    p: usize,
) -> Result<Vec<f64>> {
    if p < 2 || p > f.dim() {
        return Err(LyapunovError::Domain(format!(
            "order {p} outside 2..={}",
            f.dim()
        )));
    }
    let restricted = restrict_checked(c, f)?;
    let induced = CocycleSeq::exterior_power(&restricted, p)?;
    let steps = induced.steps();
    if steps == 0 {
        return Err(LyapunovError::Domain(
            "subbundle spans a single sample".into(),
        ));
    }
    let growth = qr_growth(&induced, 0, steps);
    let t = steps as f64 * c.step_time();
    Ok(sorted_desc(growth[steps].iter().map(|g| g / t).collect()))
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    /// Least-squares slope of `f_t` over the second half of the horizon.
    pub slope: f64,
    /// `(t, f_t)` with `f_t = log ‖Φ_t|E‖ - log m(Φ_t|F)`.
    pub series: Vec<(f64, f64)>,
    /// Range of `f_t / t` over the last quartile.
    pub drift: f64,
    pub subadditivity_checks: usize,
    pub subadditivity_violations: usize,
}

fn log_norm_range(c: &CocycleSeq, i: usize, j: usize) -> f64 {
    c.product(i, j).log_norm()
}

/// The functional whose negative slope characterises domination of `E ⊕ F`.
pub fn domination_functional<C: Cocycle + ?Sized>(
    c: &C,
    e: &Subbundle,
    f: &Subbundle,
) -> Result<DominationReport> {
    let n = c.dim();
    if e.dim() + f.dim() != n || e.first != f.first || e.last() != f.last() {
        return Err(LyapunovError::Domain(
            "E and F must be complementary over the same samples".into(),
        ));
    }
    let angle = min_principal_angle(e.basis(e.first), f.basis(f.first));
    if angle < INVARIANCE_TOL {
        return Err(LyapunovError::Domain(format!(
            "E and F are not transversal (angle {angle:e})"
        )));
    }
    let ce = restrict_checked(c, e)?;
    let cf = restrict_checked(c, f)?;
    let steps = ce.steps();
    if steps < 4 {
        return Err(LyapunovError::Domain("too few samples".into()));
    }
    let dt = c.step_time();
    let d_f = f.dim();

    let mut pe = ScaledMatrix::identity(e.dim());
    let mut pf = ScaledMatrix::identity(d_f);
    // `∧^{d_F - 1}` products give the top singular values of the product on F accurately.
    let mut pf_top = ScaledMatrix::identity(binomial(d_f, d_f - 1));
    let mut log_det_f = 0.0;
    let mut series = Vec::with_capacity(steps);
    for m in 0..steps {
        pe.push(ce.factor(m));
        pf.push(cf.factor(m));
        log_det_f += cf.factor(m).determinant().abs().ln();
        let top = match d_f {
            1 => 0.0,
            2 => pf.log_norm(),
            _ => {
                pf_top.push(&wedge(cf.factor(m), d_f - 1));
                pf_top.log_norm()
            }
        };
        let fm = pe.log_norm() - (log_det_f - top);
        series.push(((m + 1) as f64 * dt, fm));
    }

    let half: Vec<&(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= 0.5 * series[steps - 1].0)
        .collect();
    let xs: Vec<f64> = half.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = half.iter().map(|p| p.1).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    let t_end = series[steps - 1].0;
    let ratios: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= 0.75 * t_end)
        .map(|(t, v)| v / t)
        .collect();
    let drift = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - ratios.iter().copied().fold(f64::INFINITY, f64::min);

    // f_{s+t}(x) ≤ f_s(x) + f_t(X_s x) on a few splits of the horizon.
    let f_range = |i: usize, j: usize| log_norm_range(&ce, i, j) - log_p_conorm(&cf, i, j, 1);
    let cuts = [1, steps / 10, steps / 4, steps / 2];
    let mut checks = 0;
    let mut violations = 0;
    for &s in &cuts {
        for &t in &cuts {
            if s == 0 || t == 0 || s + t > steps {
                continue;
            }
            checks += 1;
            if f_range(0, s + t) > f_range(0, s) + f_range(s, s + t) + 1e-6 {
                violations += 1;
            }
        }
    }
    Ok(DominationReport {
        slope,
        series,
        drift,
        subadditivity_checks: checks,
        subadditivity_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, VectorFieldSpec};
    use crate::linalg::{diag, Matrix, Vector};

    fn example_orbit(t: f64) -> OrbitSegment {
        let field = VectorFieldSpec::linear(&diag(&[-3.0, 2.0, 4.0, 10.0]));
        integrate(&field, &Vector::zeros(4), t, 0.1).unwrap()
    }

    fn axes(idx: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(4, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            m[(i, c)] = 1.0;
        }
        m
    }

    #[test]
    fn diagonal_spectrum_is_exact() {
        let orbit = example_orbit(20.0);
        let r = lyapunov_exponents(&orbit).unwrap();
        for (x, w) in r.exponents.iter().zip([10.0, 4.0, 2.0, -3.0]) {
            assert!((x - w).abs() < 1e-6, "{x} vs {w}");
        }
        assert!((r.trace_average.unwrap() - 13.0).abs() < 1e-8);
        assert!(!r.low_confidence);
    }

    #[test]
    fn short_horizons_are_rejected() {
        let orbit = example_orbit(2.0);
        assert_eq!(
            lyapunov_exponents(&orbit).unwrap_err(),
            LyapunovError::HorizonTooShort(orbit.horizon())
        );
    }

    #[test]
    fn sectional_sums() {
        let orbit = example_orbit(12.0);
        let f = Subbundle::constant(&axes(&[1, 2, 3]), 0, orbit.steps());
        let two = p_sectional_exponents(&orbit, &f, 2).unwrap();
        for (x, w) in two.iter().zip([14.0, 12.0, 6.0]) {
            assert!((x - w).abs() < 1e-6);
        }
        let three = p_sectional_exponents(&orbit, &f, 3).unwrap();
        assert!((three[0] - 16.0).abs() < 1e-6);
    }

    #[test]
    fn tilted_bundle_is_not_invariant() {
        let orbit = example_orbit(12.0);
        let mut b = axes(&[1, 2]);
        b[(0, 0)] = 0.5;
        let f = Subbundle::constant(&b, 0, orbit.steps());
        assert!(matches!(
            p_sectional_exponents(&orbit, &f, 2),
            Err(LyapunovError::NonInvariantSubbundle(_))
        ));
    }

    #[test]
    fn domination_slopes() {
        let orbit = example_orbit(12.0);
        let e = Subbundle::constant(&axes(&[0]), 0, orbit.steps());
        let f = Subbundle::constant(&axes(&[1, 2, 3]), 0, orbit.steps());
        let r = domination_functional(&orbit, &e, &f).unwrap();
        assert!((r.slope + 5.0).abs() < 1e-6);
        assert_eq!(r.subadditivity_violations, 0);
        let e2 = Subbundle::constant(&axes(&[1, 2, 3]), 0, orbit.steps());
        let f2 = Subbundle::constant(&axes(&[0]), 0, orbit.steps());
        let r = domination_functional(&orbit, &e2, &f2).unwrap();
        assert!((r.slope - 13.0).abs() < 1e-6);
        assert!(domination_functional(&orbit, &e, &e).is_err());
    }
}
