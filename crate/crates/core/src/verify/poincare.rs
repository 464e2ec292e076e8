use serde::Serialize;

use super::{Certificate, GridPoint, Property, Result, SplittingField, VerifyError, SAMPLE_BUDGET};
use crate::cocycle::Cocycle;
use crate::flow::OrbitSegment;
use crate::linalg::{null_space, Matrix, Vector};
use crate::pseudo_euclidean::{
    lagrange_diagonalize, monotonicity_test, FormField, MonotonicityResult, MonotonicityVerdict,
    QuadForm,
};
use crate::Verdict;

/// Samples with a slower field are treated as singular.
const REGULAR_SPEED: f64 = 1e-8;

/// One step `P^t = Π ∘ Φ_t` of the linear Poincaré flow.
#[derive(Debug, Clone, Serialize)]
pub struct PoincareStep {
    pub sample: usize,
    pub t: f64,
    /// Index of `J` restricted to `N_x`.
    pub index: usize,
    /// `‖Π² - Π‖` at the start point.
    pub idempotency: f64,
    /// `‖Π X‖ / ‖X‖` at the start point.
    pub flow_residual: f64,
    /// `‖Π|_N - I‖` at the start point.
    pub identity_residual: f64,
    /// `P^t` from `N_x` to `N_{X_t(x)}` in the adapted frames of `J|N`.
    #[serde(skip)]
    pub map: Matrix,
    pub strict: Option<MonotonicityResult>,
    pub weak: Option<MonotonicityResult>,
    pub error: Option<String>,
}

struct Normal {
    projection: Matrix,
    basis: Matrix,
    form: QuadForm,
    flow_residual: f64,
}

fn normal_space(j: &QuadForm, x: &Vector, sample: usize) -> Result<Normal> {
    let n = x.len();
    let speed = x.norm();
    if speed <= REGULAR_SPEED {
        return Err(VerifyError::Domain(format!(
            "sample {sample} is not regular (|X| = {speed:.3e})"
        )));
    }
    let g = j.gram();
    let gx = &g * x;
    let jx = x.dot(&gx);
    if jx <= 0.0 {
        return Err(VerifyError::FieldNotNonNegative(sample));
    }
    let projection = Matrix::identity(n, n) - x * gx.transpose() / jx;
    let basis = null_space(&Matrix::from_row_slice(1, n, gx.as_slice()), n - 1);
    let form = lagrange_diagonalize(&(basis.transpose() * &g * &basis))?;
    let flow_residual = (&projection * x).norm() / speed;
    Ok(Normal {
        projection,
        basis,
        form,
        flow_residual,
    })
}

/// The linear Poincaré flow over time `t` at strided samples of the orbit.
///
/// `N_x` is the `J`-orthogonal complement of `X(x)` and `Π` the projection
/// onto it along `X(x)`. Each step reports the projection contract and the
/// strict and weak `J|N`-monotonicity of `P^t`.
pub fn linear_poincare_flow(
    orbit: &OrbitSegment,
    forms: &FormField,
    t: f64,
) -> Result<Vec<PoincareStep>> {
    let dt = orbit.dt;
    let s = (t / dt).round() as usize;
    if t < 0.0 || (s as f64 * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(VerifyError::Domain(format!(
            "t = {t} is not a non-negative multiple of the sample step {dt}"
        )));
    }
    let (first, last) = (forms.first, forms.last().min(orbit.steps()));
    if first + s > last {
        return Err(VerifyError::Domain(
            "form field shorter than the Poincaré time".into(),
        ));
    }
    let starts = last - s - first + 1;
    let stride = starts.div_ceil(SAMPLE_BUDGET).max(1);
    let mut steps = Vec::new();
    for k in (first..=last - s).step_by(stride) {
        let n0 = normal_space(forms.form(k), &orbit.velocity(k), k)?;
        let n1 = normal_space(forms.form(k + s), &orbit.velocity(k + s), k + s)?;
        let phi = orbit.product(k, k + s).value();
        let coords = n1.basis.transpose() * &n1.projection * phi * &n0.basis;
        let map = QuadForm::transfer(&n0.form, &n1.form, &coords);
        let pi = &n0.projection;
        let mut step = PoincareStep {
            sample: k,
            t,
            index: n0.form.index(),
            idempotency: (pi * pi - pi).norm(),
            flow_residual: n0.flow_residual,
            identity_residual: (pi * &n0.basis - &n0.basis).norm(),
            map,
            strict: None,
            weak: None,
            error: None,
        };
        match (
            monotonicity_test(&n0.form, &step.map, true),
            monotonicity_test(&n0.form, &step.map, false),
        ) {
            (Ok(a), Ok(b)) => {
                step.strict = Some(a);
                step.weak = Some(b);
            }
            (Err(e), _) | (_, Err(e)) => step.error = Some(e.to_string()),
        }
        steps.push(step);
    }
    Ok(steps)
}

/// Strict `J|N`-monotonicity of the linear Poincaré flow with `J` built from
/// the splitting. The margin is the smallest of `log r_1^+` and `-log r_1^-`.
pub fn poincare_monotonicity(
    orbit: &OrbitSegment,
    split: &SplittingField,
    t: f64,
) -> Result<Certificate> {
    let forms = FormField::from_splitting(&split.e, &split.f)?;
    let steps = linear_poincare_flow(orbit, &forms, t)?;
    let property = Property::PoincareMonotonicity { t };
    let mut cert = Certificate::new(property, 1.0);
    let mut verdict = Verdict::Pass;
    let mut worst = f64::INFINITY;
    let mut worst_at = split.first;
    for step in &steps {
        cert.samples += 1;
        let Some(m) = &step.strict else {
            verdict = verdict.and(Verdict::Indeterminate);
            cert.notes.push(format!(
                "sample {}: {}",
                step.sample,
                step.error.as_deref().unwrap_or("no result")
            ));
            continue;
        };
        let margin = m.r1_plus.ln().min(-m.r1_minus.ln());
        if margin < worst {
            worst = margin;
            worst_at = step.sample;
        }
        match m.verdict {
            MonotonicityVerdict::StrictlyMonotone => {}
            MonotonicityVerdict::NotMonotone | MonotonicityVerdict::Monotone => {
                if verdict != Verdict::Fail {
                    cert.violation = Some(format!(
                        "at t = {}: r_1^- = {:.6}, r_1^+ = {:.6}",
                        step.sample as f64 * orbit.dt,
                        m.r1_minus,
                        m.r1_plus
                    ));
                }
                verdict = Verdict::Fail;
            }
            MonotonicityVerdict::Indeterminate => verdict = verdict.and(Verdict::Indeterminate),
        }
    }
    if worst.is_finite() {
        cert.margin = Some(worst);
        cert.grid.push(GridPoint {
            t,
            log_value: worst,
            worst_time: worst_at as f64 * orbit.dt,
        });
    }
    cert.verdict = verdict;
    if verdict == Verdict::Pass {
        cert.uniform_t = Some(t);
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, VectorFieldSpec};
    use crate::linalg::diag;

    fn run(t: f64) -> Vec<PoincareStep> {
        let field = VectorFieldSpec::linear(&diag(&[-1.0, 0.5, 2.0]));
        let x0 = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let orbit = integrate(&field, &x0, 4.0, 0.5).unwrap();
        let j = QuadForm::standard(1, 3).unwrap();
        linear_poincare_flow(&orbit, &FormField::constant(&j, 0, orbit.steps()), t).unwrap()
    }

    #[test]
    fn projection_contract() {
        for step in run(1.0) {
            assert_eq!(step.index, 1);
            assert!(step.idempotency < 1e-12);
            assert!(step.flow_residual < 1e-12);
            assert!(step.identity_residual < 1e-12);
            let m = step.strict.unwrap();
            assert_eq!(m.verdict, MonotonicityVerdict::StrictlyMonotone);
            assert!((m.r1_minus - (-1.0f64).exp()).abs() < 1e-8);
            assert!((m.r1_plus - 0.5f64.exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_time_is_the_projection() {
        for step in run(0.0) {
            assert!((&step.map - Matrix::identity(2, 2)).norm() < 1e-12);
            assert_eq!(step.weak.unwrap().verdict, MonotonicityVerdict::Monotone);
        }
    }

    #[test]
    fn negative_field_is_rejected() {
        let field = VectorFieldSpec::linear(&diag(&[-1.0, 0.5, 2.0]));
        let orbit = integrate(
            &field,
            &Vector::from_column_slice(&[1.0, 0.0, 0.0]),
            2.0,
            0.5,
        )
        .unwrap();
        let j = QuadForm::standard(1, 3).unwrap();
        let r = linear_poincare_flow(&orbit, &FormField::constant(&j, 0, orbit.steps()), 0.5);
        assert!(matches!(r, Err(VerifyError::FieldNotNonNegative(0))));
    }
}
