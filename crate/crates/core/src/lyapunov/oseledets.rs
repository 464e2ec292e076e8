use super::{LyapunovError, Result};
use crate::cocycle::Cocycle;
use crate::linalg::{null_space, Matrix, Vector};

/// Singular vectors sorted by decreasing singular value: `(left, right)`.
fn sorted_singular_vectors(m: &Matrix) -> (Matrix, Matrix) {
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let left = u.select_columns(order.iter());
    let right = v_t.transpose().select_columns(order.iter());
    (left, right)
}

/// Finite-time Oseledets directions at sample `k`, ordered by decreasing exponent.
///
/// Direction `i` is the intersection of the `i + 1` most expanded directions
/// of the backward window `Φ(k - w → k)` with the `n - i` least expanded
/// directions of the forward window `Φ(k → k + w)`.
pub fn oseledets_directions<C: Cocycle + ?Sized>(
    c: &C,
    k: usize,
    window: usize,
) -> Result<Vec<Vector>> {
    if window == 0 || k < window || k + window > c.steps() {
        return Err(LyapunovError::Domain(format!(
            "window {window} around sample {k} leaves the orbit"
        )));
    }
    let n = c.dim();
    let (fast, _) = sorted_singular_vectors(&c.product(k - window, k).mat);
    let (_, slow) = sorted_singular_vectors(&c.product(k, k + window).mat);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let ui = fast.columns(0, i + 1).into_owned();
        let v = if i == 0 {
            ui.column(0).into_owned()
        } else {
            let constraint = slow.columns(0, i).transpose() * &ui;
            let coeff = null_space(&constraint, 1);
            &ui * coeff.column(0)
        };
        out.push(v.normalize());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::CocycleSeq;

    #[test]
    fn triangular_cocycle_directions() {
        // Upper triangular: e_1 expands fastest; the slow directions are tilted.
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let seq = CocycleSeq::new(1.0, vec![a.clone(); 40]);
        let dirs = oseledets_directions(&seq, 20, 15).unwrap();
        assert!(dirs[0][1].abs() < 1e-8);
        // Eigenvector of 0.5: (1, -1.5) normalised.
        let w = Vector::from_vec(vec![1.0, -1.5]).normalize();
        assert!((dirs[1].dot(&w).abs() - 1.0).abs() < 1e-8);
    }
}
