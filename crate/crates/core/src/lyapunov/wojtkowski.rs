use serde::Serialize;

use super::{oseledets_directions, LyapunovError, Result};
use crate::cocycle::{qr_growth, Cocycle};
use crate::pseudo_euclidean::{polar_decompose, separation_test, ConeLabel, FormField, QuadForm};
use crate::Verdict;

/// Exponent gap below which the cone-type cross-check is skipped.
const TYPE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct WojtkowskiReport {
    pub tau: f64,
    pub k1: usize,
    pub k2: usize,
    /// Number of consecutive time-τ maps averaged.
    pub maps: usize,
    /// Average of `Σ_{i ≤ k1} log r_i^-`.
    pub avg_log_r_minus: f64,
    /// Average of `Σ_{i ≤ k2} log r_i^+`.
    pub avg_log_r_plus: f64,
    /// `τ · Σ_{i ≤ k1} χ_i^-`.
    pub chi_minus: f64,
    /// `τ · Σ_{i ≤ k2} χ_i^+`.
    pub chi_plus: f64,
    pub slack: f64,
    /// `avg_log_r_minus + slack - chi_minus`; non-negative when the bound holds.
    pub minus_margin: f64,
    /// `chi_plus - avg_log_r_plus + slack`; non-negative when the bound holds.
    pub plus_margin: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Compares sums of exponents with Birkhoff averages of singular J-values of
/// the time-τ maps along the samples covered by `forms`.
///
/// The `q` smallest exponents are the negative-type ones; `χ_1^-` is the
/// largest of them and `χ_1^+` the smallest positive-type exponent.
/// The assignment is cross-checked against the cone types of finite-time
/// Oseledets directions at the middle sample.
pub fn wojtkowski_check<C: Cocycle + ?Sized>(
    c: &C,
    forms: &FormField,
    tau: f64,
    k1: usize,
    k2: usize,
) -> Result<WojtkowskiReport> {
    let n = c.dim();
    let j0: &QuadForm = forms.form(forms.first);
    let (q, p) = (j0.index(), j0.positive_dim());
    if k1 == 0 || k1 > q || k2 == 0 || k2 > p {
        return Err(LyapunovError::Domain(format!(
            "need 1 <= k1 <= {q} and 1 <= k2 <= {p}"
        )));
    }
    let dt = c.step_time();
    let s = (tau / dt).round() as usize;
    if s == 0 || (s as f64 * dt - tau).abs() > 1e-9 * tau {
        return Err(LyapunovError::Domain(format!(
            "tau = {tau} is not a multiple of the sample step {dt}"
        )));
    }
    let (first, last) = (forms.first, forms.last().min(c.steps()));
    if last < first + s {
        return Err(LyapunovError::Domain(
            "orbit shorter than one time-tau map".into(),
        ));
    }

    let mut sum_minus = 0.0;
    let mut sum_plus = 0.0;
    let mut maps = 0usize;
    let mut k = first;
    while k + s <= last {
        let l = c.product(k, k + s).value();
        let adapted = QuadForm::transfer(forms.form(k), forms.form(k + s), &l);
        let sep = separation_test(j0, &adapted, false)?;
        if !sep.holds {
            return Err(LyapunovError::PreconditionFailed(format!(
                "time-tau map at sample {k} is not J-separated (verdict {:?})",
                sep.verdict
            )));
        }
        let pair = polar_decompose(j0, &adapted)?;
        sum_minus += pair
            .r_minus
            .iter()
            .rev()
            .take(k1)
            .map(|r| r.ln())
            .sum::<f64>();
        sum_plus += pair.r_plus.iter().take(k2).map(|r| r.ln()).sum::<f64>();
        maps += 1;
        k += s;
    }
    let span = maps * s;
    let growth = qr_growth(c, first, first + span);
    let horizon = span as f64 * dt;
    let mut exps: Vec<f64> = growth[span].iter().map(|g| g / horizon).collect();
    exps.sort_by(|a, b| b.total_cmp(a));

    let chi_minus: f64 = exps[n - q..n - q + k1].iter().sum::<f64>() * tau;
    let chi_plus: f64 = (0..k2).map(|i| exps[p - 1 - i]).sum::<f64>() * tau;
    let avg_log_r_minus = sum_minus / maps as f64;
    let avg_log_r_plus = sum_plus / maps as f64;
    let slack = 0.05 * tau;
    let minus_margin = avg_log_r_minus + slack - chi_minus;
    let plus_margin = chi_plus - avg_log_r_plus + slack;

    let mut notes = Vec::new();
    let mut verdict = Verdict::from_bool(minus_margin >= 0.0 && plus_margin >= 0.0);
    if exps[p - 1] - exps[p] > TYPE_GAP {
        let mid = first + span / 2;
        let window = ((5.0 / dt).round() as usize).min(span / 2).max(1);
        match oseledets_directions(c, mid, window) {
            Ok(dirs) => {
                let j_mid = forms.form(mid);
                for (i, v) in dirs.iter().enumerate() {
                    let want = if i < p {
                        ConeLabel::Positive
                    } else {
                        ConeLabel::Negative
                    };
                    let got = j_mid.cone_of(v);
                    if got == ConeLabel::Zero {
                        notes.push(format!("Oseledets direction {i} lies on the zero cone"));
                        verdict = verdict.and(Verdict::Indeterminate);
                    } else if got != want {
                        notes.push(format!(
                            "Oseledets direction {i} has cone type {got:?}, expected {want:?}"
                        ));
                        verdict = verdict.and(Verdict::Indeterminate);
                    }
                }
            }
            Err(e) => notes.push(format!("cone-type cross-check skipped: {e}")),
        }
    } else {
        notes.push(
            "no gap between positive- and negative-type exponents; cone-type cross-check skipped"
                .into(),
        );
    }
    Ok(WojtkowskiReport {
        tau,
        k1,
        k2,
        maps,
        avg_log_r_minus,
        avg_log_r_plus,
        chi_minus,
        chi_plus,
        slack,
        minus_margin,
        plus_margin,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, VectorFieldSpec};
    use crate::linalg::{diag, Matrix, Vector};

    #[test]
    fn stationary_diagonal_orbit_attains_equality() {
        let field = VectorFieldSpec::linear(&diag(&[-3.0, 2.0, 4.0, 10.0]));
        let orbit = integrate(&field, &Vector::zeros(4), 20.0, 0.25).unwrap();
        let j = QuadForm::standard(1, 4).unwrap();
        let forms = FormField::constant(&j, 0, orbit.steps());
        let r = wojtkowski_check(&orbit, &forms, 1.0, 1, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.avg_log_r_minus + 3.0).abs() < 1e-9 && (r.chi_minus + 3.0).abs() < 1e-9);
        assert!((r.avg_log_r_plus - 2.0).abs() < 1e-9 && (r.chi_plus - 2.0).abs() < 1e-9);
        let r = wojtkowski_check(&orbit, &forms, 1.0, 1, 2).unwrap();
        assert!((r.avg_log_r_plus - 6.0).abs() < 1e-9 && (r.chi_plus - 6.0).abs() < 1e-9);
        assert!(r.notes.is_empty());
    }

    #[test]
    fn isometric_cocycle_gives_zeros() {
        let a = Matrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let orbit = integrate(&VectorFieldSpec::linear(&a), &Vector::zeros(3), 12.0, 0.5).unwrap();
        let j = QuadForm::standard(1, 3).unwrap();
        let forms = FormField::constant(&j, 0, orbit.steps());
        let r = wojtkowski_check(&orbit, &forms, 1.0, 1, 2).unwrap();
        assert!(r.avg_log_r_minus.abs() < 1e-9 && r.avg_log_r_plus.abs() < 1e-9);
        assert!(r.chi_minus.abs() < 1e-9 && r.chi_plus.abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
