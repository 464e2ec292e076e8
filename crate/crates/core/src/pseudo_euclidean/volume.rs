//! J-volume expansion on positive subspaces and the value `σ_d`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Serialize;

use super::{polar_decompose, PseudoEuclideanError, QuadForm, Result};
use crate::linalg::{min_sym_eigenvalue, orthonormalize, spectral_norm, symmetrize, Matrix};

const MAX_RESAMPLES: usize = 100;

/// J-Gram determinant of the columns of `v`, required positive definite.
fn positive_gram_det(d: &Matrix, v: &Matrix) -> Option<f64> {
    let g = symmetrize(&(v.transpose() * d * v));
    let scale = v.norm_squared().max(f64::MIN_POSITIVE);
    if min_sym_eigenvalue(&g) <= 1e-12 * scale {
        return None;
    }
    Some(g.determinant())
}

/// `α_d(L; V) = sqrt(det G_J(LV) / det G_J(V))` for a positive subspace `span(V)`.
pub fn j_volume_expansion(j: &QuadForm, l: &Matrix, v: &Matrix) -> Result<f64> {
    let d = j.signature_matrix();
    let den = positive_gram_det(&d, v).ok_or(PseudoEuclideanError::SamplingError)?;
    let num = positive_gram_det(&d, &(l * v)).ok_or(PseudoEuclideanError::NotSeparated)?;
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaDReport {
    /// Product of the `d` smallest positive-type singular J-values.
    pub formula: f64,
    /// Smallest sampled expansion over random positive `d`-subspaces.
    pub mc_infimum: f64,
    /// Expansion on the subspace where the infimum is attained.
    pub extremal: f64,
    pub samples: usize,
}

/// Random `d`-dimensional subspace of the positive cone, as a graph `(Kw, w)` with `‖K‖ < 1`.
fn random_positive_subspace(rng: &mut ChaCha8Rng, q: usize, p: usize, d: usize) -> Matrix {
    let w = orthonormalize(&Matrix::from_fn(p, d, |_, _| StandardNormal.sample(rng)));
    let k = Matrix::from_fn(q, p, |_, _| StandardNormal.sample(rng));
    let rho: f64 = Uniform::new(0.0, 0.999).expect("valid range").sample(rng);
    let k = &k * (rho / spectral_norm(&k).max(f64::MIN_POSITIVE));
    let top = &k * &w;
    let mut v = Matrix::zeros(q + p, d);
    v.view_mut((0, 0), (q, d)).copy_from(&top);
    v.view_mut((q, 0), (p, d)).copy_from(&w);
    v
}

/// `σ_d(L)`: closed form from the polar decomposition plus a seeded Monte-Carlo infimum.
pub fn sigma_d(
    j: &QuadForm,
    l: &Matrix,
    d: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<SigmaDReport> {
    let (q, p) = (j.index(), j.positive_dim());
    if d == 0 || d > p {
        return Err(PseudoEuclideanError::DimensionMismatch(format!(
            "d = {d} outside 1..={p}"
        )));
    }
    let pair = polar_decompose(j, l)?;
    let formula: f64 = pair.r_plus[..d].iter().product();

    // L U^{-1} = R, so U^{-1} maps R's eigen-subspace to the extremal one for L.
    let eig = pair.plus_vectors.columns(0, d).into_owned();
    let u_inv = pair
        .u
        .clone()
        .try_inverse()
        .ok_or(PseudoEuclideanError::NotInvertible)?;
    let extremal = j_volume_expansion(j, l, &(u_inv * eig))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mc_infimum = f64::INFINITY;
    for _ in 0..mc_samples {
        let mut tries = 0;
        let alpha = loop {
            let v = random_positive_subspace(&mut rng, q, p, d);
            match j_volume_expansion(j, l, &v) {
                Ok(a) => break a,
                Err(PseudoEuclideanError::SamplingError) if tries < MAX_RESAMPLES => tries += 1,
                Err(PseudoEuclideanError::SamplingError) => {
                    return Err(PseudoEuclideanError::SamplingError)
                }
                Err(e) => return Err(e),
            }
        };
        mc_infimum = mc_infimum.min(alpha);
    }
    Ok(SigmaDReport {
        formula,
        mc_infimum,
        extremal,
        samples: mc_samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub r1_plus_composed: f64,
    pub r1_plus_product: f64,
    pub r1_minus_composed: f64,
    pub r1_minus_product: f64,
    /// `r_1^+(L₁L₂) - r_1^+(L₁) r_1^+(L₂)`; should be `≥ 0`.
    pub plus_margin: f64,
    /// `r_1^-(L₁) r_1^-(L₂) - r_1^-(L₁L₂)`; should be `≥ 0`.
    pub minus_margin: f64,
    pub holds: bool,
}

/// Checks super-multiplicativity of `r_1^+` and sub-multiplicativity of `r_1^-`.
pub fn composition_check(j: &QuadForm, l1: &Matrix, l2: &Matrix) -> Result<CompositionReport> {
    let a = polar_decompose(j, l1)?;
    let b = polar_decompose(j, l2)?;
    let c = polar_decompose(j, &(l1 * l2))?;
    let r1_plus_product = a.r1_plus() * b.r1_plus();
    let r1_minus_product = a.r1_minus() * b.r1_minus();
    let plus_margin = c.r1_plus() - r1_plus_product;
    let minus_margin = r1_minus_product - c.r1_minus();
    let slack = 1e-9;
    Ok(CompositionReport {
        r1_plus_composed: c.r1_plus(),
        r1_plus_product,
        r1_minus_composed: c.r1_minus(),
        r1_minus_product,
        plus_margin,
        minus_margin,
        holds: plus_margin >= -slack * r1_plus_product.max(1.0)
            && minus_margin >= -slack * r1_minus_product.max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    #[test]
    fn diagonal_sigma() {
        let j = QuadForm::standard(1, 3).unwrap();
        let r = sigma_d(&j, &diag(&[0.5, 2.0, 5.0]), 2, 500, 1).unwrap();
        assert!((r.formula - 10.0).abs() < 1e-12);
        assert!(r.mc_infimum >= r.formula - 1e-6);
        assert!((r.extremal - 10.0).abs() < 1e-9);
    }

    #[test]
    fn isometry_preserves_volume() {
        let j = QuadForm::standard(1, 3).unwrap();
        let (c, s) = (0.9f64.cosh(), 0.9f64.sinh());
        let l = Matrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]);
        for d in 1..=2 {
            let r = sigma_d(&j, &l, d, 300, 2).unwrap();
            assert!((r.formula - 1.0).abs() < 1e-9);
            assert!(r.mc_infimum >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn squares_of_diagonal_compose_exactly() {
        let j = QuadForm::standard(1, 2).unwrap();
        let l = diag(&[0.5, 3.0]);
        let r = composition_check(&j, &l, &l).unwrap();
        assert!((r.r1_plus_composed - 9.0).abs() < 1e-10);
        assert!(r.holds);
        let r = composition_check(&j, &l, &Matrix::identity(2, 2)).unwrap();
        assert!(r.plus_margin.abs() < 1e-10 && r.minus_margin.abs() < 1e-10);
    }
}
