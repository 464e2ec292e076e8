//! Discrete linear cocycles over a sampled orbit.
//!
//! A cocycle is a sequence of factor matrices `Φ_k` mapping the fibre at
//! sample `k` to the fibre at sample `k + 1`, all samples spaced by the same
//! flow time. Long products are carried as a [`ScaledMatrix`] so that
//! exponential growth never overflows.

use crate::exterior::{self, ExteriorError};
use crate::linalg::{orthonormalize, singular_values, subspace_gap, Matrix};

/// A matrix together with a separated natural-log scale: `value = e^{log_scale} · mat`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix {
    pub mat: Matrix,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            mat: Matrix::identity(n, n),
            log_scale: 0.0,
        }
    }

    pub fn new(mat: Matrix) -> Self {
        let mut s = Self {
            mat,
            log_scale: 0.0,
        };
        s.rebalance();
        s
    }

    /// Left-multiplies by `factor` (the next step of the cocycle).
    pub fn push(&mut self, factor: &Matrix) {
        self.mat = factor * &self.mat;
        self.rebalance();
    }

    fn rebalance(&mut self) {
        let s = self.mat.amax();
        if s > 0.0 && s.is_finite() {
            self.mat /= s;
            self.log_scale += s.ln();
        }
    }

    /// The unscaled matrix; may overflow for large `log_scale`.
    pub fn value(&self) -> Matrix {
        &self.mat * self.log_scale.exp()
    }

    /// Natural log of the spectral norm.
    pub fn log_norm(&self) -> f64 {
        crate::linalg::spectral_norm(&self.mat).ln() + self.log_scale
    }

    /// Natural logs of the singular values, descending.
    pub fn log_singular_values(&self) -> Vec<f64> {
        crate::linalg::singular_values(&self.mat)
            .into_iter()
            .map(|s| s.ln() + self.log_scale)
            .collect()
    }
}

/// Common interface of orbit cocycles and derived (restricted, exterior) cocycles.
pub trait Cocycle {
    /// Fibre dimension.
    fn dim(&self) -> usize;
    /// Number of factors; samples are indexed `0..=steps()`.
    fn steps(&self) -> usize;
    /// Factor mapping sample `k` to sample `k + 1`.
    fn factor(&self, k: usize) -> &Matrix;
    /// Flow time between consecutive samples.
    fn step_time(&self) -> f64;

    /// Product `Φ(i → j) = Φ_{j-1} ⋯ Φ_i`, with `i == j` giving the identity.
    fn product(&self, i: usize, j: usize) -> ScaledMatrix {
        assert!(
            i <= j && j <= self.steps(),
            "cocycle range {i}..{j} out of bounds"
        );
        let mut acc = ScaledMatrix::identity(self.dim());
        for k in i..j {
            acc.push(self.factor(k));
        }
        acc
    }
}

/// An owned sequence of factors.
#[derive(Debug, Clone)]
pub struct CocycleSeq {
    pub step_time: f64,
    pub factors: Vec<Matrix>,
}

impl CocycleSeq {
    pub fn new(step_time: f64, factors: Vec<Matrix>) -> Self {
        Self { step_time, factors }
    }

    /// Copies the factors of any cocycle.
    pub fn from_cocycle<C: Cocycle + ?Sized>(c: &C) -> Self {
        Self {
            step_time: c.step_time(),
            factors: (0..c.steps()).map(|k| c.factor(k).clone()).collect(),
        }
    }

    /// The induced cocycle `∧^p Φ_k` on the `p`-th exterior power.
    pub fn exterior_power<C: Cocycle + ?Sized>(c: &C, p: usize) -> Result<Self, ExteriorError> {
        let factors = (0..c.steps())
            .map(|k| exterior::exterior_power(c.factor(k), p).map(|op| op.matrix))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            step_time: c.step_time(),
            factors,
        })
    }
}

impl Cocycle for CocycleSeq {
    fn dim(&self) -> usize {
        self.factors.first().map_or(0, |f| f.nrows())
    }
    fn steps(&self) -> usize {
        self.factors.len()
    }
    fn factor(&self, k: usize) -> &Matrix {
        &self.factors[k]
    }
    fn step_time(&self) -> f64 {
        self.step_time
    }
}

/// `Σ log |det Φ_k|` over `i..j`: the log-volume growth of the product.
pub fn log_abs_det<C: Cocycle + ?Sized>(c: &C, i: usize, j: usize) -> f64 {
    (i..j).map(|k| c.factor(k).determinant().abs().ln()).sum()
}

/// Log of the product of the `p` smallest singular values of `Φ(i → j)`.
///
/// Computed as the log-determinant minus the top `d - p` log singular values,
/// which stay accurate when the product is badly conditioned.
pub fn log_p_conorm<C: Cocycle + ?Sized>(c: &C, i: usize, j: usize, p: usize) -> f64 {
    let d = c.dim();
    assert!(p >= 1 && p <= d, "order {p} outside 1..={d}");
    log_abs_det(c, i, j) - log_top_sum(c, i, j, d - p)
}

/// Sum of the `k` largest log singular values of `Φ(i → j)`.
///
/// Taken as the log-norm of `∧^k Φ_{j-1} ⋯ ∧^k Φ_i`: only a leading singular
/// value is needed, so a wide spread of the spectrum costs no accuracy.
pub fn log_top_sum<C: Cocycle + ?Sized>(c: &C, i: usize, j: usize, k: usize) -> f64 {
    let d = c.dim();
    match k {
        0 => 0.0,
        1 => c.product(i, j).log_norm(),
        k if k == d => log_abs_det(c, i, j),
        k => {
            let mut acc = ScaledMatrix::identity(crate::linalg::binomial(d, k));
            for m in i..j {
                acc.push(&wedge(c.factor(m), k));
            }
            acc.log_norm()
        }
    }
}

/// `∧^k a` for `1 ≤ k ≤ dim`, which cannot fail.
pub(crate) fn wedge(a: &Matrix, k: usize) -> Matrix {
    exterior::exterior_power(a, k)
        .expect("order within the dimension")
        .matrix
}

/// Natural logs of the diagonal of `R` from re-orthonormalising an identity
/// frame along `Φ_i, …, Φ_{j-1}`, accumulated per sample.
///
/// Entry `m` of the result holds the cumulative logs after `m` factors.
pub fn qr_growth<C: Cocycle + ?Sized>(c: &C, i: usize, j: usize) -> Vec<Vec<f64>> {
    let d = c.dim();
    let mut frame = Matrix::identity(d, d);
    let mut acc = vec![0.0; d];
    let mut out = Vec::with_capacity(j - i + 1);
    out.push(acc.clone());
    for k in i..j {
        let (q, r) = (c.factor(k) * &frame).qr().unpack();
        for (m, a) in acc.iter_mut().enumerate() {
            *a += r[(m, m)].abs().ln();
        }
        frame = q;
        out.push(acc.clone());
    }
    out
}

/// A field of subspaces along a cocycle: orthonormal bases at the samples
/// `first..=last`.
#[derive(Debug, Clone)]
pub struct Subbundle {
    pub first: usize,
    pub bases: Vec<Matrix>,
}

/// A cocycle restricted to an invariant subbundle, in its orthonormal bases.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub cocycle: CocycleSeq,
    /// Largest sine of the angle between `Φ_k B(k)` and `B(k+1)`.
    pub max_residual: f64,
}

impl Subbundle {
    /// Orthonormalises the given bases.
    pub fn new(first: usize, bases: Vec<Matrix>) -> Self {
        assert!(!bases.is_empty(), "subbundle without samples");
        let bases = bases.iter().map(orthonormalize).collect();
        Self { first, bases }
    }

    /// The same subspace at every sample of `first..=last`.
    pub fn constant(basis: &Matrix, first: usize, last: usize) -> Self {
        let q = orthonormalize(basis);
        Self {
            first,
            bases: vec![q; last - first + 1],
        }
    }

    pub fn last(&self) -> usize {
        self.first + self.bases.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.bases[0].ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.bases[0].nrows()
    }

    /// Basis at sample `k` (absolute index).
    pub fn basis(&self, k: usize) -> &Matrix {
        &self.bases[k - self.first]
    }

    /// Largest invariance residual `sin ∠(Φ_k B(k), B(k+1))` along the bundle.
    pub fn invariance_residual<C: Cocycle + ?Sized>(&self, c: &C) -> f64 {
        (self.first..self.last())
            .map(|k| subspace_gap(&(c.factor(k) * self.basis(k)), self.basis(k + 1)))
            .fold(0.0, f64::max)
    }

    /// Factors `B(k+1)^T Φ_k B(k)`; restricted sample `m` is sample `first + m`.
    pub fn restrict<C: Cocycle + ?Sized>(&self, c: &C) -> Restriction {
        let factors = (self.first..self.last())
            .map(|k| self.basis(k + 1).transpose() * c.factor(k) * self.basis(k))
            .collect();
        Restriction {
            cocycle: CocycleSeq::new(c.step_time(), factors),
            max_residual: self.invariance_residual(c),
        }
    }
}

/// Singular values in descending order, natural log.
pub fn log_singular_values(m: &Matrix) -> Vec<f64> {
    singular_values(m).into_iter().map(f64::ln).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    #[test]
    fn scaled_product_survives_overflow() {
        let f = diag(&[1e200, 1.0]);
        let seq = CocycleSeq::new(1.0, vec![f.clone(), f.clone(), f]);
        let p = seq.product(0, 3);
        assert!((p.log_norm() - 600.0 * 10f64.ln()).abs() < 1e-9);
        assert!(p.mat.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn empty_range_is_identity() {
        let seq = CocycleSeq::new(0.5, vec![diag(&[2.0, 3.0])]);
        let p = seq.product(1, 1);
        assert_eq!(p.mat, Matrix::identity(2, 2));
        assert_eq!(p.log_scale, 0.0);
    }

    #[test]
    fn conorm_of_ill_conditioned_products() {
        let f = diag(&[1e-3, 10.0, 1e3]);
        let seq = CocycleSeq::new(1.0, vec![f; 8]);
        let ln10 = 10f64.ln();
        assert!((log_p_conorm(&seq, 0, 8, 1) + 24.0 * ln10).abs() < 1e-9);
        assert!((log_p_conorm(&seq, 0, 8, 2) + 16.0 * ln10).abs() < 1e-9);
        let g = qr_growth(&seq, 0, 8);
        assert!((g[8][0] + 24.0 * ln10).abs() < 1e-9 && (g[8][2] - 24.0 * ln10).abs() < 1e-9);
    }

    #[test]
    fn conorm_survives_spread_in_a_rotated_frame() {
        let rot = |a: f64| {
            let (s, c) = a.sin_cos();
            Matrix::from_row_slice(3, 3, &[c, -s, 0.0, s * c, c * c, -s, s * s, s * c, c])
        };
        let b = rot(0.7);
        let f = &b * diag(&[1e-3, 10.0, 1e3]) * b.clone().try_inverse().unwrap();
        let seq = CocycleSeq::new(1.0, vec![f; 8]);
        let ln10 = 10f64.ln();
        // Growth of the least expanded vector, up to the conditioning of the frame.
        let cond = crate::linalg::singular_values(&b);
        let slack = (cond[0] / cond[2]).ln() + 1e-9;
        assert!((log_p_conorm(&seq, 0, 8, 1) + 24.0 * ln10).abs() <= slack);
        assert!((log_top_sum(&seq, 0, 8, 2) - 32.0 * ln10).abs() <= 2.0 * slack);
    }

    #[test]
    fn restriction_to_invariant_plane() {
        let seq = CocycleSeq::new(1.0, vec![diag(&[2.0, 3.0, 5.0]); 3]);
        let b = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let r = Subbundle::constant(&b, 0, 3).restrict(&seq);
        assert!(r.max_residual > 0.1);
        let b = Matrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let r = Subbundle::constant(&b, 0, 3).restrict(&seq);
        assert!(r.max_residual < 1e-14);
        assert!((r.cocycle.factor(0) - diag(&[3.0, 5.0])).norm() < 1e-14);
    }
}
