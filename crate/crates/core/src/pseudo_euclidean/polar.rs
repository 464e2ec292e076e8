//! Pseudo-Euclidean polar decomposition `L = RU` and singular J-values.

use nalgebra::{Schur, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{pseudo_adjoint, PseudoEuclideanError, QuadForm, Result, TOL_CONE};
use crate::linalg::{null_space, spectral_norm, Matrix, Vector};

/// Relative width of an eigenvalue cluster of `R`.
const CLUSTER_TOL: f64 = 1e-8;
/// Band around 1 inside which monotonicity is undecided.
const MONO_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PolarPair {
    /// J-symmetric factor with positive spectrum.
    pub r: Matrix,
    /// J-isometry.
    pub u: Matrix,
    /// Negative-type eigenvalues of `R`, ascending (`r_1^-` is the last).
    pub r_minus: Vec<f64>,
    /// Positive-type eigenvalues of `R`, ascending (`r_1^+` is the first).
    pub r_plus: Vec<f64>,
    /// Eigenvectors of `R` matching `r_minus`, J-orthogonal, `J(v) = -1`.
    pub minus_vectors: Matrix,
    /// Eigenvectors of `R` matching `r_plus`, J-orthogonal, `J(v) = 1`.
    pub plus_vectors: Matrix,
}

impl PolarPair {
    /// `r_1^-`, the largest negative-type value.
    pub fn r1_minus(&self) -> f64 {
        *self.r_minus.last().expect("index q >= 1")
    }

    /// `r_1^+`, the smallest positive-type value.
    pub fn r1_plus(&self) -> f64 {
        self.r_plus[0]
    }
}

/// Principal square root of a matrix with real positive spectrum.
fn principal_sqrt(s: &Matrix) -> Result<Matrix> {
    let n = s.nrows();
    let scale = spectral_norm(s).max(f64::MIN_POSITIVE);
    let (mut q, mut t) = Schur::new(s.clone()).unpack();
    // Split any leftover 2x2 block with real eigenvalues.
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)].abs() > 1e-14 * scale {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half = 0.5 * (a - d);
            let disc = half * half + b * c;
            if disc < 0.0 {
                return Err(PseudoEuclideanError::NotSeparatedSpectrum);
            }
            let lam = 0.5 * (a + d) + disc.sqrt();
            let (x, y) = if (lam - d).abs() > c.abs() {
                (lam - d, c)
            } else {
                (b, lam - a)
            };
            let h = x.hypot(y);
            let (cs, sn) = (x / h, y / h);
            let mut g = Matrix::identity(n, n);
            g[(i, i)] = cs;
            g[(i + 1, i)] = sn;
            g[(i, i + 1)] = -sn;
            g[(i + 1, i + 1)] = cs;
            t = g.transpose() * &t * &g;
            t[(i + 1, i)] = 0.0;
            q = &q * &g;
        }
        i += 1;
    }
    let mut u = Matrix::zeros(n, n);
    for k in 0..n {
        let d = t[(k, k)];
        if !(d > 0.0) {
            return Err(PseudoEuclideanError::NotSeparatedSpectrum);
        }
        u[(k, k)] = d.sqrt();
    }
    for j in 1..n {
        for i in (0..j).rev() {
            let mut acc = t[(i, j)];
            for k in i + 1..j {
                acc -= u[(i, k)] * u[(k, j)];
            }
            u[(i, j)] = acc / (u[(i, i)] + u[(j, j)]);
        }
    }
    Ok(&q * u * q.transpose())
}

/// Decomposes `L = RU` with `R` J-symmetric (positive spectrum) and `U` a J-isometry.
///
/// `L` must be at least (non-strictly) J-separated in adapted coordinates.
pub fn polar_decompose(j: &QuadForm, l: &Matrix) -> Result<PolarPair> {
    let n = j.dim();
    if l.nrows() != n || l.ncols() != n {
        return Err(PseudoEuclideanError::DimensionMismatch(format!(
            "{}x{} operator against form of dimension {n}",
            l.nrows(),
            l.ncols()
        )));
    }
    let s = l * pseudo_adjoint(j, l);
    let ev = s.complex_eigenvalues();
    let rho = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho == 0.0 || ev.iter().any(|z| z.im.abs() > 1e-9 * rho || !(z.re > 0.0)) {
        return Err(PseudoEuclideanError::NotSeparatedSpectrum);
    }
    let r = principal_sqrt(&s)?;
    let u = r
        .clone()
        .lu()
        .solve(l)
        .ok_or(PseudoEuclideanError::NotInvertible)?;

    let d = j.signature_matrix();
    let mut values: Vec<f64> = ev.iter().map(|z| z.re.sqrt()).collect();
    values.sort_by(f64::total_cmp);
    let mut minus: Vec<(f64, Vector)> = Vec::new();
    let mut plus: Vec<(f64, Vector)> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= CLUSTER_TOL * values[end] {
            end += 1;
        }
        let mult = end - start;
        let mu = values[start..end].iter().sum::<f64>() / mult as f64;
        let shifted = &r - Matrix::identity(n, n) * mu;
        let basis = null_space(&shifted, mult);
        let gram = basis.transpose() * &d * &basis;
        let eig = SymmetricEigen::new(gram);
        for (k, g) in eig.eigenvalues.iter().enumerate() {
            if g.abs() <= TOL_CONE {
                return Err(PseudoEuclideanError::DegenerateEigenvector);
            }
            let v = &basis * eig.eigenvectors.column(k) / g.abs().sqrt();
            if *g < 0.0 {
                minus.push((mu, v));
            } else {
                plus.push((mu, v));
            }
        }
        start = end;
    }
    if minus.len() != j.index() {
        return Err(PseudoEuclideanError::NotSeparatedSpectrum);
    }
    let pack = |items: &[(f64, Vector)]| {
        let cols: Vec<Vector> = items.iter().map(|(_, v)| v.clone()).collect();
        (
            items.iter().map(|(x, _)| *x).collect::<Vec<_>>(),
            Matrix::from_columns(&cols),
        )
    };
    let (r_minus, minus_vectors) = pack(&minus);
    let (r_plus, plus_vectors) = pack(&plus);
    Ok(PolarPair {
        r,
        u,
        r_minus,
        r_plus,
        minus_vectors,
        plus_vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MonotonicityVerdict {
    StrictlyMonotone,
    Monotone,
    NotMonotone,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityResult {
    pub verdict: MonotonicityVerdict,
    pub holds: bool,
    pub r1_minus: f64,
    pub r1_plus: f64,
    /// Smallest sampled `(J(Lv) - J(v)) / ‖v‖²`.
    pub sampled_margin: f64,
    /// Whether the sampled definition agrees with the spectral verdict.
    pub consistent: bool,
}

/// J-monotonicity of `L` from its singular J-values: `r_1^- ≤ 1 ≤ r_1^+`.
///
/// With `strict`, a deciding value within `1e-10` of 1 gives
/// [`MonotonicityVerdict::Indeterminate`]; without it that band counts as equality.
pub fn monotonicity_test(j: &QuadForm, l: &Matrix, strict: bool) -> Result<MonotonicityResult> {
    let pair = polar_decompose(j, l)?;
    let (rm, rp) = (pair.r1_minus(), pair.r1_plus());
    let strict_ok = rm < 1.0 - MONO_TOL && rp > 1.0 + MONO_TOL;
    let weak_ok = rm <= 1.0 + MONO_TOL && rp >= 1.0 - MONO_TOL;
    let verdict = if strict_ok {
        MonotonicityVerdict::StrictlyMonotone
    } else if !weak_ok {
        MonotonicityVerdict::NotMonotone
    } else if strict {
        MonotonicityVerdict::Indeterminate
    } else {
        MonotonicityVerdict::Monotone
    };
    let holds = match verdict {
        MonotonicityVerdict::StrictlyMonotone => true,
        MonotonicityVerdict::Monotone => !strict,
        _ => false,
    };

    let d = j.signature_matrix();
    let gap = l.transpose() * &d * l - &d;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6e6f);
    let mut sampled_margin = f64::INFINITY;
    for _ in 0..2000 {
        let v = Vector::from_fn(j.dim(), |_, _| StandardNormal.sample(&mut rng));
        sampled_margin = sampled_margin.min(v.dot(&(&gap * &v)) / v.norm_squared());
    }
    let band = 1e-8 * spectral_norm(&gap).max(1.0);
    let consistent = match verdict {
        MonotonicityVerdict::StrictlyMonotone | MonotonicityVerdict::Monotone => {
            sampled_margin >= -band
        }
        _ => true,
    };
    Ok(MonotonicityResult {
        verdict,
        holds,
        r1_minus: rm,
        r1_plus: rp,
        sampled_margin,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    fn boost(s: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[s.cosh(), s.sinh(), s.sinh(), s.cosh()])
    }

    #[test]
    fn diagonal_is_its_own_r() {
        let j = QuadForm::standard(1, 2).unwrap();
        let l = diag(&[0.5, 3.0]);
        let p = polar_decompose(&j, &l).unwrap();
        assert!((&p.r - &l).norm() < 1e-12);
        assert!((&p.u - Matrix::identity(2, 2)).norm() < 1e-12);
        assert!((p.r_minus[0] - 0.5).abs() < 1e-12 && (p.r_plus[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn isometry_has_unit_values() {
        let j = QuadForm::standard(1, 2).unwrap();
        let p = polar_decompose(&j, &boost(0.8)).unwrap();
        assert!((&p.r - Matrix::identity(2, 2)).norm() < 1e-10);
        assert!((&p.u - boost(0.8)).norm() < 1e-10);
        assert!(p
            .r_minus
            .iter()
            .chain(&p.r_plus)
            .all(|r| (r - 1.0).abs() < 1e-10));
    }

    #[test]
    fn rotation_factor_is_recovered() {
        let j = QuadForm::standard(1, 2).unwrap();
        let l = diag(&[0.5, 3.0]) * boost(1.0);
        let p = polar_decompose(&j, &l).unwrap();
        assert!((&p.r * &p.u - &l).norm() < 1e-10);
        assert!((&p.u - boost(1.0)).norm() < 1e-10);
        assert!((p.r1_minus() - 0.5).abs() < 1e-10 && (p.r1_plus() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn swapping_map_has_no_real_root() {
        let j = QuadForm::standard(1, 2).unwrap();
        let l = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(polar_decompose(&j, &l).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let j = QuadForm::standard(1, 2).unwrap();
        let m = monotonicity_test(&j, &diag(&[0.5, 3.0]), true).unwrap();
        assert_eq!(m.verdict, MonotonicityVerdict::StrictlyMonotone);
        assert!(m.consistent);
        let m = monotonicity_test(&j, &boost(0.3), false).unwrap();
        assert_eq!(m.verdict, MonotonicityVerdict::Monotone);
        assert!(m.holds);
        assert!(!monotonicity_test(&j, &boost(0.3), true).unwrap().holds);
        let m = monotonicity_test(&j, &diag(&[2.0, 3.0]), false).unwrap();
        assert_eq!(m.verdict, MonotonicityVerdict::NotMonotone);
        assert!(m.sampled_margin < 0.0);
    }
}
