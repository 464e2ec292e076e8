//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Orthonormal basis of the column span (columns assumed independent).
///
/// Modified Gram–Schmidt with one re-orthogonalisation pass; coordinate
/// axes come back exactly.
pub fn orthonormalize(basis: &Matrix) -> Matrix {
    let mut q = basis.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let r = q.column(i).dot(&q.column(j));
                if r != 0.0 {
                    let qi = q.column(i).clone_owned();
                    q.column_mut(j).axpy(-r, &qi, 1.0);
                }
            }
        }
        let nrm = q.column(j).norm();
        if nrm > 0.0 {
            q.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    q
}

/// Descending singular values.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Smallest singular value (the co-norm of a square or tall map).
pub fn co_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    *singular_values(m).last().unwrap()
}

pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m));
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Sine of the largest principal angle from `span(a)` to `span(b)`.
///
/// `b` need not be orthonormal; `a` need not be either.
pub fn subspace_gap(a: &Matrix, b: &Matrix) -> f64 {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let resid = &qa - &qb * (qb.transpose() * &qa);
    spectral_norm(&resid).min(1.0)
}

/// Smallest principal angle (radians) between two subspaces.
pub fn min_principal_angle(a: &Matrix, b: &Matrix) -> f64 {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let c = spectral_norm(&(qa.transpose() * qb)).min(1.0);
    c.acos()
}

/// Right singular vectors belonging to the `k` smallest singular values.
pub fn null_space(m: &Matrix, k: usize) -> Matrix {
    let n = m.ncols();
    // Pad to square so that the SVD returns a full right basis.
    let mut padded = Matrix::zeros(n.max(m.nrows()), n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut out = Matrix::zeros(n, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(values))
}

pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(nr, nc, |i, j| rows[i][j])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn gap_of_identical_spans_is_zero() {
        let a = Matrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        let b = Matrix::from_row_slice(3, 1, &[-2.0, -2.0, 0.0]);
        assert!(subspace_gap(&a, &b) < 1e-14);
        let c = Matrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
        assert!((subspace_gap(&a, &c) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let k = null_space(&m, 1);
        assert!((&m * &k).norm() < 1e-14);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| -5.0 * t + 2.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s + 5.0).abs() < 1e-12 && (c - 2.0).abs() < 1e-12);
    }
}
