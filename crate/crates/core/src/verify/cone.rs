use super::{Certificate, GridPoint, Property, Result, SplittingField, VerifyError, T_GRID};
use crate::cocycle::Cocycle;
use crate::flow::OrbitSegment;
use crate::linalg::Matrix;
use crate::pseudo_euclidean::{
    polar_decompose, separation_test, FormField, QuadForm, SeparationVerdict,
};
use crate::Verdict;

/// Smallest accepted `-log r_1^-` and `Σ log r_i^+`; keeps isometries out of `Pass`.
const STRICT_TOL: f64 = 1e-9;

/// Candidate `J` field `-1` on `E`, `+1` on `F`, rescaled by an adapted volume weight.
#[derive(Debug, Clone)]
pub struct AdaptedForms {
    pub forms: FormField,
    /// Horizon `H` over which the volume of `F` grows at every sample.
    pub horizon: Option<f64>,
    /// Uniform volume growth rate `λ` of `F` over that horizon.
    pub rate: Option<f64>,
}

/// Builds the candidate `J` field from a splitting.
///
/// In the frame `[E | F]` at sample `k` the form is `(-|y_E|² + |y_F|²) h_k^{2/d_F}`
/// with `h_k = Σ_{i<M} e^{-iλΔt} vol_F(k, k+i)`, where `vol_F` is the volume
/// growth of `F` and `λ` its smallest growth rate over the horizon `H = MΔt`.
/// The cones are those of the orthonormal frame; the weight makes the
/// volume of `F` grow by at least `e^{λΔt}` at every step. The field ends
/// `M` samples before the splitting. Without a horizon on which the volume
/// of `F` grows everywhere, the unweighted field is returned.
pub fn adapted_forms<C: Cocycle + ?Sized>(split: &SplittingField, c: &C) -> Result<AdaptedForms> {
    let dt = split.dt;
    let cf = split.f.restrict(c).cocycle;
    let m = cf.steps();
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    for k in 0..m {
        let det = cf.factor(k).clone().lu().determinant().abs();
        prefix.push(prefix[k] + det.ln());
    }
    let mut choice = None;
    for &h in &T_GRID {
        let steps = (h / dt).round() as usize;
        if steps == 0 || steps >= m {
            break;
        }
        let rate = (0..=m - steps)
            .map(|k| prefix[k + steps] - prefix[k])
            .fold(f64::INFINITY, f64::min)
            / h;
        if rate > 0.0 {
            choice = Some((h, steps, rate));
            break;
        }
    }
    let d_f = split.d_f() as f64;
    let frame = |k: usize, scale: f64| -> Result<QuadForm> {
        let (be, bf) = (split.e.basis(k), split.f.basis(k));
        let mut frame = Matrix::zeros(be.nrows(), be.ncols() + bf.ncols());
        frame.columns_mut(0, be.ncols()).copy_from(be);
        frame.columns_mut(be.ncols(), bf.ncols()).copy_from(bf);
        Ok(QuadForm::from_frame(frame * scale, be.ncols())?)
    };
    let Some((horizon, steps, rate)) = choice else {
        let forms = FormField::from_splitting(&split.e, &split.f)?;
        return Ok(AdaptedForms {
            forms,
            horizon: None,
            rate: None,
        });
    };
    let forms = (0..=m - steps)
        .map(|k| {
            let logs: Vec<f64> = (0..steps)
                .map(|i| prefix[k + i] - prefix[k] - i as f64 * rate * dt)
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_h = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            frame(split.first + k, (-log_h / d_f).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptedForms {
        forms: FormField {
            first: split.first,
            forms,
        },
        horizon: Some(horizon),
        rate: Some(rate),
    })
}

/// Cone criterion on the adapted candidate field of [`adapted_forms`].
pub fn cone_certificate(
    orbit: &OrbitSegment,
    split: &SplittingField,
    tau: f64,
    p: usize,
) -> Result<Certificate> {
    let d_f = split.d_f();
    if p == 0 || p > d_f {
        return Err(VerifyError::Domain(format!("order {p} outside 1..={d_f}")));
    }
    let adapted = adapted_forms(split, orbit)?;
    let mut cert = cone_certificate_with_forms(orbit, &adapted.forms, tau, p)?;
    cert.notes.push(format!("index of J is {}", split.d_e()));
    match (adapted.horizon, adapted.rate) {
        (Some(h), Some(rate)) => cert.notes.push(format!(
            "volume weight over horizon {h} with rate {rate:.6}"
        )),
        _ => cert
            .notes
            .push("no horizon with uniform volume growth on F; unweighted J".into()),
    }
    Ok(cert)
}

/// Cone criterion for a given `J` field.
///
/// The time-`τ` map from every sample, written in the adapted frames at its two
/// ends, must be strictly J-separated with `r_1^- < 1` and the product of the
/// `p` smallest `r^+` above 1. The field must be J-non-negative at every
/// sample. The margin is the smallest of `-log r_1^-` and `Σ log r_i^+`.
pub fn cone_certificate_with_forms(
    orbit: &OrbitSegment,
    forms: &FormField,
    tau: f64,
    p: usize,
) -> Result<Certificate> {
    let dt = orbit.dt;
    let s = (tau / dt).round() as usize;
    if s == 0 || (s as f64 * dt - tau).abs() > 1e-9 * tau {
        return Err(VerifyError::Domain(format!(
            "tau = {tau} is not a multiple of the sample step {dt}"
        )));
    }
    let (first, last) = (forms.first, forms.last().min(orbit.steps()));
    if first + s > last {
        return Err(VerifyError::Domain(
            "form field shorter than one time-tau map".into(),
        ));
    }
    let p_max = forms.form(first).positive_dim();
    if p == 0 || p > p_max {
        return Err(VerifyError::Domain(format!(
            "order {p} outside 1..={p_max}"
        )));
    }
    let property = Property::ConeCriterion { p, tau };
    let mut cert = Certificate::new(property, 1.0);

    for k in first..=last {
        let x = orbit.velocity(k);
        let jx = forms.form(k).evaluate(&x);
        if jx < 0.0 {
            return Ok(Certificate::fail(
                property,
                1.0,
                format!("J(X) = {jx:.3e} < 0 at t = {}", k as f64 * dt),
            ));
        }
    }

    let mut worst_minus = f64::NEG_INFINITY;
    let mut worst_plus = f64::INFINITY;
    let mut worst_margin = f64::INFINITY;
    let mut worst_at = first;
    let mut verdict = Verdict::Pass;
    for k in first..=last - s {
        cert.samples += 1;
        let t = k as f64 * dt;
        let l = orbit.product(k, k + s).value();
        let j0: &QuadForm = forms.form(k);
        let adapted = QuadForm::transfer(j0, forms.form(k + s), &l);
        let sep = match separation_test(j0, &adapted, true) {
            Ok(sep) => sep,
            Err(e) => {
                verdict = verdict.and(Verdict::Indeterminate);
                cert.notes.push(format!("separation test at t = {t}: {e}"));
                continue;
            }
        };
        match sep.verdict {
            SeparationVerdict::StrictlySeparated => {}
            SeparationVerdict::Indeterminate => {
                verdict = verdict.and(Verdict::Indeterminate);
                cert.notes
                    .push(format!("separation test indeterminate at t = {t}"));
                continue;
            }
            v => {
                cert.verdict = Verdict::Fail;
                cert.violation = Some(format!(
                    "time-tau map at t = {t} is not strictly J-separated ({v:?}, min eig {:.3e})",
                    sep.min_eig
                ));
                return Ok(cert);
            }
        }
        let pair = match polar_decompose(j0, &adapted) {
            Ok(pair) => pair,
            Err(e) => {
                verdict = verdict.and(Verdict::Indeterminate);
                cert.notes
                    .push(format!("polar decomposition at t = {t}: {e}"));
                continue;
            }
        };
        let log_minus = pair.r1_minus().ln();
        let log_plus: f64 = pair.r_plus.iter().take(p).map(|r| r.ln()).sum();
        worst_minus = worst_minus.max(log_minus);
        worst_plus = worst_plus.min(log_plus);
        let margin = (-log_minus).min(log_plus);
        if margin < worst_margin {
            worst_margin = margin;
            worst_at = k;
        }
        if -log_minus <= STRICT_TOL || log_plus <= STRICT_TOL {
            cert.verdict = Verdict::Fail;
            cert.violation = Some(format!(
                "at t = {t}: r_1^- = {:.6}, product of {p} smallest r^+ = {:.6}",
                log_minus.exp(),
                log_plus.exp()
            ));
            cert.margin = Some(margin);
            return Ok(cert);
        }
    }
    if worst_margin.is_finite() {
        cert.margin = Some(worst_margin);
        cert.grid.push(GridPoint {
            t: tau,
            log_value: worst_margin,
            worst_time: worst_at as f64 * dt,
        });
        cert.e_rate = Some(worst_minus / tau);
        cert.f_rate = Some(worst_plus / tau);
    }
    cert.verdict = verdict;
    if verdict == Verdict::Pass {
        cert.uniform_t = Some(tau);
    }
    Ok(cert)
}
