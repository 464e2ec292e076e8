//! Indefinite quadratic forms and the linear algebra they induce.
//!
//! A [`QuadForm`] stores a non-degenerate form `J` of index `q` through an
//! adapted frame: in adapted coordinates `y = P x` the form reads
//! `J(x) = -y_1² - ⋯ - y_q² + y_{q+1}² + ⋯ + y_n²`. Every routine that takes
//! an operator expects it in adapted coordinates, where `J = diag(signs)`
//! satisfies `J² = I` and `J^T = J`; use [`QuadForm::adapt_operator`] or
//! [`QuadForm::transfer`] to get there.

mod pencil;
mod polar;
pub mod random;
mod volume;

pub use pencil::{
    cone_ratio_extrema, kuhne_bounds, separation_form, separation_test, KuhneInterval,
    SeparationResult, SeparationVerdict,
};
pub use polar::{
    monotonicity_test, polar_decompose, MonotonicityResult, MonotonicityVerdict, PolarPair,
};
pub use volume::{composition_check, j_volume_expansion, sigma_d, CompositionReport, SigmaDReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cocycle::Subbundle;
use crate::linalg::{symmetrize, Matrix, Vector};

/// Cone membership tolerance, relative to `‖v‖²`.
pub const TOL_CONE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseudoEuclideanError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("quadratic form is degenerate")]
    DegenerateForm,
    #[error("quadratic form is definite, index must satisfy 1 <= q <= n-1")]
    NotIndefinite,
    #[error("operator is not invertible")]
    NotInvertible,
    #[error("operator is not J-separated")]
    NotSeparated,
    #[error("L L^+ has non-real or non-positive spectrum")]
    NotSeparatedSpectrum,
    #[error("eigenvector of R lies on the zero cone")]
    DegenerateEigenvector,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("could not sample a subspace inside the positive cone")]
    SamplingError,
}

pub type Result<T> = std::result::Result<T, PseudoEuclideanError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeLabel {
    Positive,
    Zero,
    Negative,
}

/// Non-degenerate indefinite quadratic form in an adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadForm {
    q: usize,
    signs: Vec<f64>,
    /// `P`: original coordinates to adapted coordinates.
    adapt: Matrix,
    /// `P^{-1}`: columns are the adapted basis vectors, negative ones first.
    frame: Matrix,
}

impl QuadForm {
    /// `diag(-1,…,-1, 1,…,1)` with `q` negative entries, already adapted.
    pub fn standard(q: usize, n: usize) -> Result<Self> {
        if q == 0 || q >= n {
            return Err(PseudoEuclideanError::NotIndefinite);
        }
        Ok(Self {
            q,
            signs: (0..n).map(|i| if i < q { -1.0 } else { 1.0 }).collect(),
            adapt: Matrix::identity(n, n),
            frame: Matrix::identity(n, n),
        })
    }

    /// Form that is `-1` on the first `q` frame columns and `+1` on the rest.
    pub fn from_frame(frame: Matrix, q: usize) -> Result<Self> {
        let n = frame.nrows();
        if frame.ncols() != n {
            return Err(PseudoEuclideanError::DimensionMismatch(
                "frame must be square".into(),
            ));
        }
        let adapt = frame
            .clone()
            .try_inverse()
            .ok_or(PseudoEuclideanError::DegenerateForm)?;
        let mut form = Self::standard(q, n)?;
        form.adapt = adapt;
        form.frame = frame;
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    /// Index `q`: the number of negative squares.
    pub fn index(&self) -> usize {
        self.q
    }

    /// Dimension `n - q` of a maximal positive subspace.
    pub fn positive_dim(&self) -> usize {
        self.dim() - self.q
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn adapt_basis(&self) -> &Matrix {
        &self.adapt
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    /// `J` in adapted coordinates.
    pub fn signature_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(&self.signs))
    }

    /// Symmetric matrix `G` of the form in original coordinates.
    pub fn gram(&self) -> Matrix {
        symmetrize(&(self.adapt.transpose() * self.signature_matrix() * &self.adapt))
    }

    pub fn evaluate(&self, v: &Vector) -> f64 {
        let y = &self.adapt * v;
        y.iter().zip(&self.signs).map(|(yi, s)| s * yi * yi).sum()
    }

    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        let (a, b) = (&self.adapt * u, &self.adapt * v);
        a.iter()
            .zip(b.iter())
            .zip(&self.signs)
            .map(|((x, y), s)| s * x * y)
            .sum()
    }

    pub fn cone_of(&self, v: &Vector) -> ConeLabel {
        let j = self.evaluate(v);
        let band = TOL_CONE * v.norm_squared();
        if j > band {
            ConeLabel::Positive
        } else if j < -band {
            ConeLabel::Negative
        } else {
            ConeLabel::Zero
        }
    }

    /// Operator on the same space, rewritten in adapted coordinates: `P L P^{-1}`.
    pub fn adapt_operator(&self, l: &Matrix) -> Matrix {
        &self.adapt * l * &self.frame
    }

    /// Map between two fibres with their own forms, in adapted coordinates.
    pub fn transfer(from: &QuadForm, to: &QuadForm, l: &Matrix) -> Matrix {
        &to.adapt * l * &from.frame
    }

    /// The form `-J`, re-ordered so that its negative directions come first.
    pub fn negated(&self) -> Self {
        let n = self.dim();
        let order: Vec<usize> = (self.q..n).chain(0..self.q).collect();
        let frame = self.frame.select_columns(order.iter());
        let adapt = self.adapt.select_rows(order.iter());
        Self {
            q: n - self.q,
            signs: (0..n)
                .map(|i| if i < n - self.q { -1.0 } else { 1.0 })
                .collect(),
            adapt,
            frame,
        }
    }
}

/// A form at each sample `first..=last` of a cocycle.
#[derive(Debug, Clone)]
pub struct FormField {
    pub first: usize,
    pub forms: Vec<QuadForm>,
}

impl FormField {
    pub fn constant(j: &QuadForm, first: usize, last: usize) -> Self {
        Self {
            first,
            forms: vec![j.clone(); last - first + 1],
        }
    }

    /// `J = -1` on `E` and `+1` on `F`, in the frame `[E | F]` at each sample.
    pub fn from_splitting(e: &Subbundle, f: &Subbundle) -> Result<Self> {
        if e.first != f.first || e.last() != f.last() {
            return Err(PseudoEuclideanError::DimensionMismatch(
                "E and F cover different samples".into(),
            ));
        }
        let forms = (e.first..=e.last())
            .map(|k| {
                let (be, bf) = (e.basis(k), f.basis(k));
                let mut frame = Matrix::zeros(be.nrows(), be.ncols() + bf.ncols());
                frame.columns_mut(0, be.ncols()).copy_from(be);
                frame.columns_mut(be.ncols(), bf.ncols()).copy_from(bf);
                QuadForm::from_frame(frame, be.ncols())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            first: e.first,
            forms,
        })
    }

    pub fn last(&self) -> usize {
        self.first + self.forms.len() - 1
    }

    pub fn form(&self, k: usize) -> &QuadForm {
        &self.forms[k - self.first]
    }
}

/// Diagonalises a symmetric form by completing squares (Lagrange's method).
///
/// Returns the adapted form with `P^T diag(signs) P = G`.
pub fn lagrange_diagonalize(g: &Matrix) -> Result<QuadForm> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(PseudoEuclideanError::DimensionMismatch(
            "form must be square".into(),
        ));
    }
    let scale = g.amax().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut a = symmetrize(g);
    // Congruence C with C^T G C diagonal.
    let mut c = Matrix::identity(n, n);
    for k in 0..n {
        let (mut piv, mut best) = (k, a[(k, k)].abs());
        for i in k + 1..n {
            if a[(i, i)].abs() > best {
                piv = i;
                best = a[(i, i)].abs();
            }
        }
        if best <= tol {
            // No usable square: pair two variables through a cross term.
            let mut cross = None;
            let mut cbest = tol;
            for i in k..n {
                for j in i + 1..n {
                    if a[(i, j)].abs() > cbest {
                        cbest = a[(i, j)].abs();
                        cross = Some((i, j));
                    }
                }
            }
            let (i, j) = cross.ok_or(PseudoEuclideanError::DegenerateForm)?;
            // x_i -> y_i + y_j
            add_column_congruence(&mut a, &mut c, j, i, 1.0);
            piv = i;
        }
        if piv != k {
            a.swap_rows(k, piv);
            a.swap_columns(k, piv);
            c.swap_columns(k, piv);
        }
        let pivot = a[(k, k)];
        for j in k + 1..n {
            let f = a[(k, j)] / pivot;
            if f != 0.0 {
                add_column_congruence(&mut a, &mut c, k, j, -f);
            }
        }
    }
    let lambdas: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    if lambdas.iter().any(|l| l.abs() <= tol) {
        return Err(PseudoEuclideanError::DegenerateForm);
    }
    for (j, l) in lambdas.iter().enumerate() {
        let s = l.abs().sqrt();
        c.column_mut(j).scale_mut(1.0 / s);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| if lambdas[i] < 0.0 { 0 } else { 1 });
    let q = lambdas.iter().filter(|l| **l < 0.0).count();
    if q == 0 || q == n {
        return Err(PseudoEuclideanError::NotIndefinite);
    }
    QuadForm::from_frame(c.select_columns(order.iter()), q)
}

/// `col_dst += f · col_src` applied as a congruence `A ← E^T A E`, `C ← C E`.
fn add_column_congruence(a: &mut Matrix, c: &mut Matrix, src: usize, dst: usize, f: f64) {
    let col = a.column(src).clone_owned();
    let mut dcol = a.column_mut(dst);
    dcol.axpy(f, &col, 1.0);
    let row = a.row(src).clone_owned();
    let mut drow = a.row_mut(dst);
    drow += row * f;
    let ccol = c.column(src).clone_owned();
    c.column_mut(dst).axpy(f, &ccol, 1.0);
}

/// Pseudo-adjoint `L^+ = J L^T J` in adapted coordinates.
pub fn pseudo_adjoint(j: &QuadForm, l: &Matrix) -> Matrix {
    let d = j.signature_matrix();
    &d * l.transpose() * &d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adapted_form_is_returned_unchanged() {
        let j = lagrange_diagonalize(&diag(&[-1.0, 1.0, 1.0])).unwrap();
        assert_eq!(j.signs(), &[-1.0, 1.0, 1.0]);
        assert_eq!(j.adapt_basis(), &Matrix::identity(3, 3));
    }

    #[test]
    fn hyperbolic_plane_has_signature_minus_plus() {
        let g = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let j = lagrange_diagonalize(&g).unwrap();
        assert_eq!(j.signs(), &[-1.0, 1.0]);
        assert!((j.gram() - g).norm() < 1e-14);
    }

    #[test]
    fn degenerate_and_definite_forms_are_rejected() {
        assert_eq!(
            lagrange_diagonalize(&diag(&[1.0, 0.0, -1.0])),
            Err(PseudoEuclideanError::DegenerateForm)
        );
        assert_eq!(
            lagrange_diagonalize(&diag(&[1.0, 2.0])),
            Err(PseudoEuclideanError::NotIndefinite)
        );
        assert_eq!(
            QuadForm::standard(0, 3),
            Err(PseudoEuclideanError::NotIndefinite)
        );
    }

    #[test]
    fn index_matches_negative_eigenvalue_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(2..=6);
            let q = rng.random_range(1..n);
            let raw = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let orth = raw.qr().q();
            let values: Vec<f64> = (0..n)
                .map(|i| {
                    let m = rng.random_range(0.2..3.0);
                    if i < q {
                        -m
                    } else {
                        m
                    }
                })
                .collect();
            let g = &orth * diag(&values) * orth.transpose();
            let j = lagrange_diagonalize(&g).unwrap();
            let oracle = SymmetricEigen::new(g.clone())
                .eigenvalues
                .iter()
                .filter(|e| **e < 0.0)
                .count();
            assert_eq!(j.index(), oracle);
            assert!((j.gram() - &g).norm() < 1e-10 * g.norm());
        }
    }

    #[test]
    fn evaluation_and_cones() {
        let j = QuadForm::standard(1, 2).unwrap();
        let v = Vector::from_vec(vec![0.0, 1.0]);
        assert_eq!((j.evaluate(&v), j.cone_of(&v)), (1.0, ConeLabel::Positive));
        let v = Vector::from_vec(vec![1.0, 1.0]);
        assert_eq!((j.evaluate(&v), j.cone_of(&v)), (0.0, ConeLabel::Zero));
        let j3 = QuadForm::standard(1, 3).unwrap();
        let v = Vector::from_vec(vec![2.0, 1.0, 1.0]);
        assert_eq!(
            (j3.evaluate(&v), j3.cone_of(&v)),
            (-2.0, ConeLabel::Negative)
        );
        assert_eq!(j3.cone_of(&Vector::zeros(3)), ConeLabel::Zero);
    }

    #[test]
    fn pseudo_adjoint_examples() {
        let j = QuadForm::standard(1, 2).unwrap();
        let l = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            pseudo_adjoint(&j, &l),
            Matrix::from_row_slice(2, 2, &[1.0, -3.0, -2.0, 4.0])
        );
        assert_eq!(
            pseudo_adjoint(&j, &Matrix::identity(2, 2)),
            Matrix::identity(2, 2)
        );
        let d = j.signature_matrix();
        assert_eq!(pseudo_adjoint(&j, &d), d);
    }

    #[test]
    fn pseudo_adjoint_defining_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let j = QuadForm::standard(2, 4).unwrap();
        let d = j.signature_matrix();
        for _ in 0..100 {
            let l = Matrix::from_fn(4, 4, |_, _| rng.random_range(-2.0..2.0));
            let v = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let w = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let lhs = (&d * &l * &v).dot(&w);
            let rhs = (&d * &v).dot(&(pseudo_adjoint(&j, &l) * &w));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn negation_swaps_cones() {
        let g = Matrix::from_row_slice(3, 3, &[-2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let j = lagrange_diagonalize(&g).unwrap();
        let m = j.negated();
        assert_eq!(m.index(), 2);
        assert!((m.gram() + j.gram()).norm() < 1e-12);
    }
}
