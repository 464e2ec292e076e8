use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{Result, VerifyError};
use crate::cocycle::{qr_growth, Cocycle, Subbundle};
use crate::linalg::{min_principal_angle, orthonormalize, Matrix};

/// Flow time discarded at each end of the orbit while the sweeps converge.
pub const DEFAULT_WINDOW: f64 = 5.0;
const MIN_HORIZON: f64 = 20.0;
/// Smallest exponent gap per unit time at the cut.
const GAP_TOL: f64 = 1e-3;

/// An estimated splitting `E ⊕ F` at the samples `first..=last`.
#[derive(Debug, Clone, Serialize)]
pub struct SplittingField {
    #[serde(skip)]
    pub e: Subbundle,
    #[serde(skip)]
    pub f: Subbundle,
    pub dt: f64,
    pub method: String,
    pub first: usize,
    pub last: usize,
    pub e_residual: f64,
    pub f_residual: f64,
    /// Smallest principal angle between `E` and `F` over the samples.
    pub min_angle: f64,
    /// Exponent gap per unit time at the cut, when estimated.
    pub gap: Option<f64>,
}

impl SplittingField {
    /// Wraps given bundles, measuring invariance and transversality against `c`.
    pub fn from_bundles<C: Cocycle + ?Sized>(
        c: &C,
        e: Subbundle,
        f: Subbundle,
        method: &str,
    ) -> Result<Self> {
        if e.first != f.first || e.last() != f.last() {
            return Err(VerifyError::Domain(
                "E and F cover different samples".into(),
            ));
        }
        if e.ambient_dim() != c.dim() || f.ambient_dim() != c.dim() || e.dim() + f.dim() != c.dim()
        {
            return Err(VerifyError::Domain(
                "E and F must be complementary in the fibre".into(),
            ));
        }
        if e.last() > c.steps() {
            return Err(VerifyError::Domain(
                "splitting extends beyond the cocycle".into(),
            ));
        }
        let min_angle = (e.first..=e.last())
            .map(|k| min_principal_angle(e.basis(k), f.basis(k)))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            e_residual: e.invariance_residual(c),
            f_residual: f.invariance_residual(c),
            dt: c.step_time(),
            method: method.to_string(),
            first: e.first,
            last: e.last(),
            min_angle,
            gap: None,
            e,
            f,
        })
    }

    /// The same pair of subspaces at every sample of the cocycle.
    pub fn constant<C: Cocycle + ?Sized>(c: &C, e: &Matrix, f: &Matrix) -> Result<Self> {
        let steps = c.steps();
        Self::from_bundles(
            c,
            Subbundle::constant(e, 0, steps),
            Subbundle::constant(f, 0, steps),
            "constant",
        )
    }

    pub fn d_e(&self) -> usize {
        self.e.dim()
    }

    pub fn d_f(&self) -> usize {
        self.f.dim()
    }

    pub fn max_residual(&self) -> f64 {
        self.e_residual.max(self.f_residual)
    }
}

fn generic_frame(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    orthonormalize(&Matrix::from_fn(n, d, |_, _| {
        StandardNormal.sample(&mut rng)
    }))
}

/// Finite-time splitting with `dim E = d_e`.
///
/// `F` is the limit of a generic `d_F`-frame pushed forward by the cocycle
/// (the most expanded directions of the past) and `E` the limit of a generic
/// `d_E`-frame pulled back by the inverse cocycle (the least expanded
/// directions of the future). Samples within `window` of either end are
/// dropped.
pub fn estimate_splitting<C: Cocycle + ?Sized>(
    c: &C,
    d_e: usize,
    window: f64,
) -> Result<SplittingField> {
    let n = c.dim();
    if d_e == 0 || d_e >= n {
        return Err(VerifyError::Domain(format!(
            "d_E = {d_e} outside 1..={}",
            n - 1
        )));
    }
    let dt = c.step_time();
    let steps = c.steps();
    if (steps as f64) * dt < MIN_HORIZON {
        return Err(VerifyError::Domain(format!(
            "horizon {} below {MIN_HORIZON}",
            steps as f64 * dt
        )));
    }
    let w = (window / dt).round() as usize;
    if 2 * w >= steps {
        return Err(VerifyError::Domain(
            "window leaves no interior samples".into(),
        ));
    }
    let d_f = n - d_e;

    let growth = qr_growth(c, 0, steps);
    let mut exps: Vec<f64> = growth[steps]
        .iter()
        .map(|g| g / (steps as f64 * dt))
        .collect();
    exps.sort_by(|a, b| b.total_cmp(a));
    let gap = exps[d_f - 1] - exps[d_f];
    if gap < GAP_TOL {
        return Err(VerifyError::NoGap(gap));
    }

    let mut f_bases = Vec::with_capacity(steps - 2 * w + 1);
    let mut z = generic_frame(n, d_f, 0x5eed_f);
    for k in 0..steps - w {
        z = orthonormalize(&(c.factor(k) * &z));
        if k + 1 >= w {
            f_bases.push(z.clone());
        }
    }
    let mut e_rev = Vec::with_capacity(steps - 2 * w + 1);
    let mut z = generic_frame(n, d_e, 0x5eed_e);
    for k in (w..steps).rev() {
        let lu = c.factor(k).clone().lu();
        let pulled = lu
            .solve(&z)
            .ok_or_else(|| VerifyError::Domain(format!("singular cocycle factor at sample {k}")))?;
        z = orthonormalize(&pulled);
        if k <= steps - w {
            e_rev.push(z.clone());
        }
    }
    e_rev.reverse();
    let e = Subbundle {
        first: w,
        bases: e_rev,
    };
    let f = Subbundle {
        first: w,
        bases: f_bases,
    };
    let mut field = SplittingField::from_bundles(c, e, f, &format!("sweep, window {window}"))?;
    field.gap = Some(gap);
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, VectorFieldSpec};
    use crate::linalg::{diag, subspace_gap, Vector};

    #[test]
    fn diagonal_splitting_is_recovered() {
        let field = VectorFieldSpec::linear(&diag(&[-3.0, 2.0, 4.0, 10.0]));
        let orbit = integrate(&field, &Vector::zeros(4), 30.0, 0.1).unwrap();
        let s = estimate_splitting(&orbit, 1, DEFAULT_WINDOW).unwrap();
        assert_eq!((s.first, s.last), (50, 250));
        let e_axis = Matrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let f_axes = Matrix::from_fn(4, 3, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
        for k in s.first..=s.last {
            assert!(subspace_gap(s.e.basis(k), &e_axis) < 1e-8);
            assert!(subspace_gap(s.f.basis(k), &f_axes) < 1e-8);
        }
        assert!(s.max_residual() < 1e-8);
        assert!(estimate_splitting(&orbit, 4, DEFAULT_WINDOW).is_err());
    }

    #[test]
    fn equal_rates_have_no_gap() {
        let field = VectorFieldSpec::linear(&diag(&[1.0, 1.0]));
        let orbit = integrate(&field, &Vector::zeros(2), 30.0, 0.1).unwrap();
        assert!(matches!(
            estimate_splitting(&orbit, 1, DEFAULT_WINDOW),
            Err(VerifyError::NoGap(_))
        ));
    }
}
