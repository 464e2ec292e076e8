use super::{
    Certificate, GridPoint, Property, Result, SplittingField, VerifyError, CONTRACTION_PASS,
    EXPANSION_PASS, FLOW_ANGLE_TOL, INVARIANCE_TOL, SAMPLE_BUDGET, TRANSVERSALITY_TOL, T_GRID,
};
use crate::cocycle::{log_p_conorm, Cocycle, CocycleSeq};
use crate::flow::{OrbitSegment, SingularityReport};
use crate::linalg::linear_fit;
use crate::Verdict;

/// Direction of the comparison against the threshold.
#[derive(Clone, Copy, PartialEq)]
enum Sense {
    /// Worst sample is the largest value; pass when it is below the threshold.
    Below,
    /// Worst sample is the smallest value; pass when it is above the threshold.
    Above,
}

/// Worst `log_value(i, i + s)` over strided sample starts, for each grid time.
fn scan_grid(
    split: &SplittingField,
    cert: &mut Certificate,
    sense: Sense,
    mut log_value: impl FnMut(usize, usize) -> f64,
) -> Vec<(usize, usize)> {
    let dt = split.dt;
    let mut worst_ranges = Vec::new();
    for &t in &T_GRID {
        let s = (t / dt).round() as usize;
        if s == 0 || (s as f64 * dt - t).abs() > 1e-9 * t {
            cert.notes.push(format!(
                "T = {t} skipped: not a multiple of the sample step {dt}"
            ));
            continue;
        }
        if split.first + s > split.last {
            cert.notes
                .push(format!("T = {t} skipped: longer than the splitting"));
            continue;
        }
        let starts = split.last - s - split.first + 1;
        let stride = starts.div_ceil(SAMPLE_BUDGET).max(1);
        let mut worst = match sense {
            Sense::Below => f64::NEG_INFINITY,
            Sense::Above => f64::INFINITY,
        };
        let mut worst_at = split.first;
        let mut count = 0;
        for i in (split.first..=split.last - s).step_by(stride) {
            let v = log_value(i, i + s);
            count += 1;
            let worse = match sense {
                Sense::Below => v > worst || v.is_nan(),
                Sense::Above => v < worst || v.is_nan(),
            };
            if worse {
                worst = v;
                worst_at = i;
            }
        }
        cert.samples = cert.samples.max(count);
        cert.grid.push(GridPoint {
            t,
            log_value: worst,
            worst_time: worst_at as f64 * dt,
        });
        worst_ranges.push((worst_at, worst_at + s));
    }
    worst_ranges
}

/// Picks the uniform time, margin and fitted rate from a filled grid.
fn conclude(cert: &mut Certificate, sense: Sense) {
    let thr = cert.threshold.ln();
    let ok = |v: f64| match sense {
        Sense::Below => v <= thr,
        Sense::Above => v >= thr,
    };
    if cert.grid.is_empty() {
        cert.verdict = Verdict::Indeterminate;
        cert.notes
            .push("no grid time fits inside the sampled range".into());
        return;
    }
    if let Some(g) = cert.grid.iter().find(|g| ok(g.log_value)) {
        cert.verdict = Verdict::Pass;
        cert.uniform_t = Some(g.t);
        let value = g.log_value.exp();
        cert.margin = Some(match sense {
            Sense::Below => 1.0 - value / (cert.threshold / 0.9),
            Sense::Above => value / (cert.threshold / 1.1) - 1.0,
        });
    } else if cert.grid.len() < T_GRID.len() {
        cert.verdict = Verdict::Indeterminate;
        cert.notes.push(
            "no tested grid time clears the threshold and longer ones were not tested".into(),
        );
    } else {
        let g = cert.grid.last().unwrap();
        cert.verdict = Verdict::Fail;
        cert.violation = Some(format!(
            "no grid time clears the threshold; at T = {} the worst sample (t = {}) has value e^{:.6}",
            g.t, g.worst_time, g.log_value
        ));
    }
    let finite: Vec<&GridPoint> = cert
        .grid
        .iter()
        .filter(|g| g.log_value.is_finite())
        .collect();
    if finite.len() >= 2 {
        let xs: Vec<f64> = finite.iter().map(|g| g.t).collect();
        let ys: Vec<f64> = finite.iter().map(|g| g.log_value).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        cert.fitted_rate = Some(match sense {
            Sense::Below => -slope,
            Sense::Above => slope,
        });
        cert.fitted_k = Some(intercept.exp());
    }
}

fn restricted(split: &SplittingField, c: &(impl Cocycle + ?Sized)) -> (CocycleSeq, CocycleSeq) {
    (split.e.restrict(c).cocycle, split.f.restrict(c).cocycle)
}

fn invariance_failure(
    split: &SplittingField,
    property: Property,
    threshold: f64,
) -> Option<Certificate> {
    if split.max_residual() > INVARIANCE_TOL {
        return Some(Certificate::fail(
            property,
            threshold,
            format!(
                "splitting is not invariant: residual E {:.3e}, F {:.3e} (tolerance {INVARIANCE_TOL:e})",
                split.e_residual, split.f_residual
            ),
        ));
    }
    if split.min_angle < TRANSVERSALITY_TOL {
        return Some(Certificate::fail(
            property,
            threshold,
            format!(
                "E and F are not transversal (angle {:.3e})",
                split.min_angle
            ),
        ));
    }
    None
}

/// Uniform `T` with `‖Φ_T|E‖ · ‖Φ_{-T}|F‖ ≤ 0.45` at every sample.
pub fn check_dominated<C: Cocycle + ?Sized>(split: &SplittingField, c: &C) -> Certificate {
    let property = Property::Dominated;
    if let Some(cert) = invariance_failure(split, property, CONTRACTION_PASS) {
        return cert;
    }
    let (ce, cf) = restricted(split, c);
    let off = split.first;
    let mut cert = Certificate::new(property, CONTRACTION_PASS);
    let worst = scan_grid(split, &mut cert, Sense::Below, |i, j| {
        ce.product(i - off, j - off).log_norm() - log_p_conorm(&cf, i - off, j - off, 1)
    });
    conclude(&mut cert, Sense::Below);
    if let (Some(&(i, j)), Some(g)) = (worst.last(), cert.grid.last()) {
        cert.e_rate = Some(ce.product(i - off, j - off).log_norm() / g.t);
        cert.f_rate = Some(log_p_conorm(&cf, i - off, j - off, 1) / g.t);
    }
    cert
}

/// Uniform `T` with `‖Φ_T|E‖ ≤ 0.45` at every sample.
pub fn check_partial_hyperbolic<C: Cocycle + ?Sized>(split: &SplittingField, c: &C) -> Certificate {
    let property = Property::PartiallyHyperbolic;
    if let Some(cert) = invariance_failure(split, property, CONTRACTION_PASS) {
        return cert;
    }
    let ce = split.e.restrict(c).cocycle;
    let off = split.first;
    let mut cert = Certificate::new(property, CONTRACTION_PASS);
    let worst = scan_grid(split, &mut cert, Sense::Below, |i, j| {
        ce.product(i - off, j - off).log_norm()
    });
    conclude(&mut cert, Sense::Below);
    if let (Some(&(i, j)), Some(g)) = (worst.last(), cert.grid.last()) {
        cert.e_rate = Some(ce.product(i - off, j - off).log_norm() / g.t);
    }
    cert
}

/// Uniform `T` with the co-norm of `∧^p Φ_T|F` at least 2.2 at every sample,
/// and hyperbolic singularities.
pub fn check_p_singular_hyperbolic<C: Cocycle + ?Sized>(
    split: &SplittingField,
    c: &C,
    p: usize,
    singularities: &[SingularityReport],
) -> Result<Certificate> {
    if p < 2 || p > split.d_f() {
        return Err(VerifyError::Domain(format!(
            "order {p} outside 2..={}",
            split.d_f()
        )));
    }
    let property = Property::PSingularHyperbolic { p };
    if let Some(cert) = invariance_failure(split, property, EXPANSION_PASS) {
        return Ok(cert);
    }
    let cf = split.f.restrict(c).cocycle;
    let off = split.first;
    let mut cert = Certificate::new(property, EXPANSION_PASS);
    let worst = scan_grid(split, &mut cert, Sense::Above, |i, j| {
        log_p_conorm(&cf, i - off, j - off, p)
    });
    conclude(&mut cert, Sense::Above);
    if let (Some(&(i, j)), Some(g)) = (worst.last(), cert.grid.last()) {
        cert.f_rate = Some(log_p_conorm(&cf, i - off, j - off, p) / g.t);
    }
    if let Some(bad) = singularities.iter().find(|s| !s.hyperbolic) {
        cert.verdict = Verdict::Fail;
        cert.violation = Some(format!(
            "singularity at {:?} is not hyperbolic",
            bad.location
        ));
    }
    cert.notes.push(format!(
        "{} singularities in the ensemble",
        singularities.len()
    ));
    Ok(cert)
}

/// Largest angle between the field direction and `F` stays below `1e-2`.
pub fn flow_in_f_check(split: &SplittingField, orbit: &OrbitSegment) -> Certificate {
    let mut cert = Certificate::new(Property::FlowInCentre, FLOW_ANGLE_TOL);
    let mut worst: f64 = 0.0;
    let mut worst_at = split.first;
    let mut skipped = 0;
    let stride = (split.last - split.first + 1)
        .div_ceil(4 * SAMPLE_BUDGET)
        .max(1);
    for k in (split.first..=split.last).step_by(stride) {
        let x = orbit.velocity(k);
        let nrm = x.norm();
        if nrm < 1e-10 {
            skipped += 1;
            continue;
        }
        cert.samples += 1;
        let q = split.f.basis(k);
        let sine = ((&x - q * (q.transpose() * &x)).norm() / nrm).min(1.0);
        let angle = sine.asin();
        if angle > worst {
            worst = angle;
            worst_at = k;
        }
    }
    if skipped > 0 {
        cert.notes
            .push(format!("{skipped} samples at singularities skipped"));
    }
    cert.margin = Some(FLOW_ANGLE_TOL - worst);
    if worst <= FLOW_ANGLE_TOL {
        cert.verdict = Verdict::Pass;
    } else {
        cert.verdict = Verdict::Fail;
        cert.violation = Some(format!(
            "angle between X and F is {worst:.3e} at t = {}",
            worst_at as f64 * orbit.dt
        ));
    }
    cert
}

/// Hyperbolicity, index and eigenvalue domination at each singularity.
///
/// At `σ` the cut puts the `d_e` eigenvalues with the most negative real
/// parts in `E_σ`; the margin is the real-part gap across the cut.
pub fn singularity_compatibility(
    singularities: &[SingularityReport],
    d_e: usize,
    index_bound: usize,
) -> Certificate {
    let mut cert = Certificate::new(Property::SingularityCompatibility, 0.0);
    cert.verdict = Verdict::Pass;
    if singularities.is_empty() {
        cert.notes.push("no singularities in the ensemble".into());
    }
    let mut margin = f64::INFINITY;
    for s in singularities {
        cert.samples += 1;
        if s.min_abs_real() <= 1e-8 {
            cert.verdict = cert.verdict.and(Verdict::Indeterminate);
            cert.notes.push(format!(
                "singularity at {:?} has an eigenvalue on the imaginary axis",
                s.location
            ));
            continue;
        }
        if s.index < index_bound {
            cert.verdict = Verdict::Fail;
            cert.violation = Some(format!(
                "index {} at {:?} is below {index_bound}",
                s.index, s.location
            ));
        }
        if d_e == 0 || d_e >= s.eigenvalues.len() {
            cert.verdict = Verdict::Fail;
            cert.violation = Some(format!(
                "cut d_E = {d_e} does not fit dimension {}",
                s.eigenvalues.len()
            ));
            continue;
        }
        let gap = s.eigenvalues[d_e].0 - s.eigenvalues[d_e - 1].0;
        margin = margin.min(gap);
        if gap <= 0.0 {
            cert.verdict = Verdict::Fail;
            cert.violation = Some(format!("no real-part gap at the cut for {:?}", s.location));
        }
    }
    if margin.is_finite() {
        cert.margin = Some(margin);
        cert.fitted_rate = Some(margin);
    }
    cert
}
