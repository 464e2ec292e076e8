//! Exterior powers of `R^n` and of linear operators.
//!
//! `∧^p R^n` is indexed by the strictly increasing `p`-tuples of `0..n` in
//! lexicographic order. A linear map `A` acts on it through its `p × p`
//! minors: the entry at `(I, J)` of `∧^p A` is `det A[I, J]`.

use itertools::Itertools;
use thiserror::Error;

use crate::linalg::{binomial, orthonormalize, Matrix, Vector};

/// Largest ambient dimension accepted by the dense routines.
pub const MAX_DIM: usize = 12;

/// Relative tolerance for rank decisions on minors.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("domain error: {0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> ExteriorError {
    ExteriorError::Domain(msg.into())
}

/// Ordered basis of `∧^p R^n`. Tuples are 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexBasis {
    pub n: usize,
    pub p: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl MultiIndexBasis {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn position(&self, tuple: &[usize]) -> Option<usize> {
        self.tuples
            .binary_search_by(|t| t.as_slice().cmp(tuple))
            .ok()
    }
}

/// `∧^p A` together with the basis that indexes its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorOperator {
    pub basis: MultiIndexBasis,
    pub matrix: Matrix,
}

pub fn multi_indices(n: usize, p: usize) -> Result<MultiIndexBasis, ExteriorError> {
    if p < 1 || p > n {
        return Err(domain(format!("order p = {p} outside 1..={n}")));
    }
    if n > MAX_DIM {
        return Err(domain(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let tuples: Vec<Vec<usize>> = (0..n).combinations(p).collect();
    debug_assert_eq!(tuples.len(), binomial(n, p));
    Ok(MultiIndexBasis { n, p, tuples })
}

fn check_square(a: &Matrix) -> Result<usize, ExteriorError> {
    if a.nrows() != a.ncols() {
        return Err(domain(format!(
            "operator is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

fn minor(a: &Matrix, rows: &[usize], cols: &[usize]) -> f64 {
    let sub = Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
    match rows.len() {
        1 => sub[(0, 0)],
        2 => sub[(0, 0)] * sub[(1, 1)] - sub[(0, 1)] * sub[(1, 0)],
        _ => sub.lu().determinant(),
    }
}

pub fn exterior_power(a: &Matrix, p: usize) -> Result<ExteriorOperator, ExteriorError> {
    let n = check_square(a)?;
    let basis = multi_indices(n, p)?;
    if p == 1 {
        return Ok(ExteriorOperator {
            basis,
            matrix: a.clone(),
        });
    }
    let m = basis.len();
    let matrix = Matrix::from_fn(m, m, |i, j| minor(a, &basis.tuples[i], &basis.tuples[j]));
    Ok(ExteriorOperator { basis, matrix })
}

/// Generator `L_p(A) = d/dt|_{t=0} ∧^p e^{tA}`, built entrywise.
///
/// Diagonal entries are `Σ_{i∈I} a_ii`; when `I = K ∪ {i}` and `J = K ∪ {j}`
/// differ in one index the entry is `(-1)^{pos_I(i) + pos_J(j)} a_ij`;
/// every other entry vanishes.
pub fn exterior_generator(a: &Matrix, p: usize) -> Result<ExteriorOperator, ExteriorError> {
    let n = check_square(a)?;
    let basis = multi_indices(n, p)?;
    let m = basis.len();
    let mut out = Matrix::zeros(m, m);
    for (r, row) in basis.tuples.iter().enumerate() {
        for (c, col) in basis.tuples.iter().enumerate() {
            if r == c {
                out[(r, c)] = row.iter().map(|&i| a[(i, i)]).sum();
                continue;
            }
            let only_row: Vec<usize> = (0..p)
                .filter(|&k| col.binary_search(&row[k]).is_err())
                .collect();
            if only_row.len() != 1 {
                continue;
            }
            let pr = only_row[0];
            let pc = (0..p)
                .find(|&k| row.binary_search(&col[k]).is_err())
                .unwrap();
            let sign = if (pr + pc) % 2 == 0 { 1.0 } else { -1.0 };
            out[(r, c)] = sign * a[(row[pr], col[pc])];
        }
    }
    Ok(ExteriorOperator { basis, matrix: out })
}

/// Plücker coordinates of the plane spanned by the columns of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PVector {
    pub basis: MultiIndexBasis,
    pub coords: Vector,
    /// Set when the spanning vectors are linearly dependent; `coords` is then zero.
    pub degenerate: bool,
}

/// Coordinates of `v_1 ∧ ⋯ ∧ v_p` for the columns `v_i` of `vectors` (`n × p`).
pub fn plane_to_pvector(vectors: &Matrix) -> Result<PVector, ExteriorError> {
    let (n, p) = vectors.shape();
    let basis = multi_indices(n, p)?;
    let cols: Vec<usize> = (0..p).collect();
    let mut coords = Vector::from_iterator(
        basis.len(),
        basis.tuples.iter().map(|t| minor(vectors, t, &cols)),
    );
    let scale: f64 = vectors.column_iter().map(|c| c.norm()).product();
    let degenerate = scale == 0.0 || coords.norm() <= RANK_TOL * scale;
    if degenerate {
        coords.fill(0.0);
    }
    Ok(PVector {
        basis,
        coords,
        degenerate,
    })
}

/// Bases of the induced splitting `Ẽ ⊕ F̃` of `∧^k R^n`.
#[derive(Debug, Clone)]
pub struct InducedSplitting {
    pub basis: MultiIndexBasis,
    /// Columns: wedges with at least one factor from `E`.
    pub e_tilde: Matrix,
    /// Columns: `k`-fold wedges of `F` vectors.
    pub f_tilde: Matrix,
}

impl InducedSplitting {
    /// Same splitting with orthonormalised column blocks.
    pub fn orthonormal(&self) -> (Matrix, Matrix) {
        let on = |m: &Matrix| {
            if m.ncols() == 0 {
                m.clone()
            } else {
                orthonormalize(m)
            }
        };
        (on(&self.e_tilde), on(&self.f_tilde))
    }
}

pub fn induced_splitting(
    e_basis: &Matrix,
    f_basis: &Matrix,
    k: usize,
) -> Result<InducedSplitting, ExteriorError> {
    let n = e_basis.nrows();
    if f_basis.nrows() != n || e_basis.ncols() + f_basis.ncols() != n {
        return Err(domain("E and F bases do not have complementary dimensions"));
    }
    let full = Matrix::from_fn(n, n, |i, j| {
        if j < e_basis.ncols() {
            e_basis[(i, j)]
        } else {
            f_basis[(i, j - e_basis.ncols())]
        }
    });
    let col_scale: f64 = full.column_iter().map(|c| c.norm()).product();
    if col_scale == 0.0 || full.clone().lu().determinant().abs() <= RANK_TOL * col_scale {
        return Err(domain("E ∪ F is not a basis"));
    }
    let basis = multi_indices(n, k)?;
    let d_e = e_basis.ncols();
    let mut e_cols = Vec::new();
    let mut f_cols = Vec::new();
    for subset in (0..n).combinations(k) {
        let sel = full.select_columns(subset.iter());
        let w = plane_to_pvector(&sel)?.coords;
        if subset.iter().all(|&j| j >= d_e) {
            f_cols.push(w);
        } else {
            e_cols.push(w);
        }
    }
    let stack = |cols: &[Vector]| {
        let mut m = Matrix::zeros(basis.len(), cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        m
    };
    Ok(InducedSplitting {
        e_tilde: stack(&e_cols),
        f_tilde: stack(&f_cols),
        basis,
    })
}
