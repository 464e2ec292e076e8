//! Seeded generators of J-isometries, strictly J-separated maps and forms on cones.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::QuadForm;
use crate::linalg::{diag, Matrix};

/// `exp(J A)` with `A` antisymmetric; entries of `A` have standard deviation `spread`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, j: &QuadForm, spread: f64) -> Matrix {
    let n = j.dim();
    let mut a = Matrix::zeros(n, n);
    for r in 0..n {
        for c in r + 1..n {
            let x: f64 = StandardNormal.sample(rng);
            a[(r, c)] = spread * x;
            a[(c, r)] = -spread * x;
        }
    }
    (j.signature_matrix() * a).exp()
}

/// `L = W diag(r) W^{-1} U` with `W`, `U` J-isometries and `max r^- < min r^+`.
///
/// Returns the map together with the prescribed values `(r^-, r^+)`, each ascending.
pub fn random_strictly_separated<R: Rng + ?Sized>(
    rng: &mut R,
    j: &QuadForm,
) -> (Matrix, Vec<f64>, Vec<f64>) {
    let (q, n) = (j.index(), j.dim());
    let centre: f64 = rng.random_range(-1.0..1.0);
    let mut minus: Vec<f64> = (0..q)
        .map(|_| (centre - rng.random_range(0.05..1.5)).exp())
        .collect();
    let mut plus: Vec<f64> = (q..n)
        .map(|_| (centre + rng.random_range(0.05..1.5)).exp())
        .collect();
    minus.sort_by(f64::total_cmp);
    plus.sort_by(f64::total_cmp);
    let values: Vec<f64> = minus.iter().chain(&plus).copied().collect();
    let w = random_isometry(rng, j, 0.4);
    let d = j.signature_matrix();
    let w_inv = &d * w.transpose() * &d;
    let u = random_isometry(rng, j, 0.4);
    (w * diag(&values) * w_inv * u, minus, plus)
}

/// `F = A A^T + cJ`, non-negative on the zero cone for any `c`.
pub fn random_form_nonnegative_on_zero_cone<R: Rng + ?Sized>(rng: &mut R, j: &QuadForm) -> Matrix {
    let n = j.dim();
    let a = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let c: f64 = rng.random_range(-2.0..2.0);
    &a * a.transpose() + j.signature_matrix() * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isometries_preserve_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = QuadForm::standard(2, 4).unwrap();
        let d = j.signature_matrix();
        for _ in 0..50 {
            let u = random_isometry(&mut rng, &j, 0.7);
            assert!((u.transpose() * &d * &u - &d).norm() < 1e-10);
        }
    }
}
