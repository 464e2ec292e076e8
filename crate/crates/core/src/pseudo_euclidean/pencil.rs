//! The pencil `F - rJ`: separation tests and the interval of admissible `r`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{PseudoEuclideanError, QuadForm, Result};
use crate::linalg::{
    min_sym_eigenvalue, singular_values, spectral_norm, symmetrize, Matrix, Vector,
};

/// Band around zero in which the optimal minimal eigenvalue counts as zero,
/// relative to `max(1, ‖Q‖)`.
const PENCIL_TOL: f64 = 1e-10;

const GOLDEN_ITERS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeparationVerdict {
    StrictlySeparated,
    /// Cone invariance holds but the zero cone is only mapped into its closure.
    Separated,
    NotSeparated,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationResult {
    pub verdict: SeparationVerdict,
    /// Scalar `a > 0` maximising `λ_min(Q₁ - aJ)`.
    pub witness: f64,
    /// `λ_min(Q₁ - aJ)` at the witness.
    pub min_eig: f64,
    /// Whether the requested property (strict or not) holds.
    pub holds: bool,
}

/// `Q₁ = L^T J L`, the matrix of `v ↦ J(Lv)`.
pub fn separation_form(j: &QuadForm, l: &Matrix) -> Matrix {
    symmetrize(&(l.transpose() * j.signature_matrix() * l))
}

fn check_dims(j: &QuadForm, m: &Matrix) -> Result<()> {
    if m.nrows() != j.dim() || m.ncols() != j.dim() {
        return Err(PseudoEuclideanError::DimensionMismatch(format!(
            "{}x{} matrix against form of dimension {}",
            m.nrows(),
            m.ncols(),
            j.dim()
        )));
    }
    Ok(())
}

fn pencil_min_eig(f: &Matrix, d: &Matrix, r: f64) -> f64 {
    min_sym_eigenvalue(&(f - d * r))
}

/// Real eigenvalues of `J F`, i.e. of the pencil `(F, J)`.
fn real_pencil_eigenvalues(f: &Matrix, d: &Matrix) -> Vec<f64> {
    let m = d * f;
    let ev = m.complex_eigenvalues();
    let rho = ev
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    ev.iter()
        .filter(|z| z.im.abs() <= 1e-9 * rho)
        .map(|z| z.re)
        .collect()
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if (hi - lo).abs() <= 1e-15 * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Searches `a > 0` with `Q₁ - aJ ⪰ 0` (strict: `≻ 0`) for `Q₁ = L^T J L`.
///
/// The search maximises the concave function `a ↦ λ_min(Q₁ - aJ)` over
/// `log a`, bracketed by the positive real eigenvalues of the pencil.
/// An optimum within the tolerance band of zero is reported as
/// [`SeparationVerdict::Separated`].
pub fn separation_test(j: &QuadForm, l: &Matrix, strict: bool) -> Result<SeparationResult> {
    check_dims(j, l)?;
    let sv = singular_values(l);
    let (smin, smax) = (
        sv.iter().copied().fold(f64::INFINITY, f64::min),
        sv.iter().copied().fold(0.0, f64::max),
    );
    if !(smin > 1e-14 * smax) {
        return Err(PseudoEuclideanError::NotInvertible);
    }
    let q1 = separation_form(j, l);
    let d = j.signature_matrix();
    let scale = spectral_norm(&q1).max(1.0);
    let tol = PENCIL_TOL * scale;

    let pos: Vec<f64> = real_pencil_eigenvalues(&q1, &d)
        .into_iter()
        .filter(|x| *x > 0.0)
        .collect();
    let (lo, hi) = if pos.is_empty() {
        (1e-8 * scale, 1e8 * scale)
    } else {
        let mn = pos.iter().copied().fold(f64::INFINITY, f64::min);
        let mx = pos.iter().copied().fold(0.0, f64::max);
        (mn / 4.0, mx * 4.0)
    };
    let g = |u: f64| pencil_min_eig(&q1, &d, u.exp());
    let (u_best, m_best) = golden_max(g, lo.ln(), hi.ln());
    let witness = u_best.exp();
    if !m_best.is_finite() || !witness.is_finite() {
        return Ok(SeparationResult {
            verdict: SeparationVerdict::Indeterminate,
            witness,
            min_eig: m_best,
            holds: false,
        });
    }
    let verdict = if m_best > tol {
        SeparationVerdict::StrictlySeparated
    } else if m_best >= -tol {
        SeparationVerdict::Separated
    } else {
        SeparationVerdict::NotSeparated
    };
    let holds = match verdict {
        SeparationVerdict::StrictlySeparated => true,
        SeparationVerdict::Separated => !strict,
        _ => false,
    };
    Ok(SeparationResult {
        verdict,
        witness,
        min_eig: m_best,
        holds,
    })
}

/// Interval `[r₋, r₊] = {r : F - rJ ⪰ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KuhneInterval {
    pub lower: f64,
    pub upper: f64,
    /// Smallest sampled value of `F` on unit zero-cone vectors.
    pub zero_cone_min: f64,
}

impl KuhneInterval {
    pub fn contains(&self, r: f64) -> bool {
        self.lower <= r && r <= self.upper
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, k: usize) -> Vector {
    loop {
        let v = Vector::from_fn(k, |_, _| StandardNormal.sample(rng));
        let nrm = v.norm();
        if nrm > 1e-8 {
            return v / nrm;
        }
    }
}

/// Unit-norm-per-block vectors `(u, w)` on the zero cone of `diag(-I_q, I_p)`.
fn zero_cone_mesh(q: usize, p: usize, samples: usize, seed: u64) -> Vec<Vector> {
    let n = q + p;
    let mut out = Vec::with_capacity(samples + 2 * q * p);
    for i in 0..q {
        for j in q..n {
            for s in [1.0, -1.0] {
                let mut v = Vector::zeros(n);
                v[i] = 1.0;
                v[j] = s;
                out.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let u = unit_gaussian(&mut rng, q);
        let w = unit_gaussian(&mut rng, p);
        out.push(Vector::from_iterator(n, u.iter().chain(w.iter()).copied()));
    }
    out
}

/// Bounds of Kühne's lemma for a symmetric `F` (adapted coordinates).
///
/// Requires `F ≥ 0` on the zero cone (checked on a mesh); the endpoints are
/// located by bisection on `λ_min(F - rJ)` from an interior maximiser.
pub fn kuhne_bounds(j: &QuadForm, f: &Matrix) -> Result<KuhneInterval> {
    check_dims(j, f)?;
    let f = symmetrize(f);
    let d = j.signature_matrix();
    let scale = spectral_norm(&f).max(1.0);
    let tol = PENCIL_TOL * scale;

    let zero_cone_min = zero_cone_mesh(j.index(), j.positive_dim(), 4096, 0x6b75_686e_65)
        .iter()
        .map(|v| v.dot(&(&f * v)) / v.norm_squared())
        .fold(f64::INFINITY, f64::min);
    if zero_cone_min < -tol {
        return Err(PseudoEuclideanError::PreconditionFailed(format!(
            "F is negative on the zero cone (min {zero_cone_min:e})"
        )));
    }

    let ev = real_pencil_eigenvalues(&f, &d);
    let (lo, hi) = if ev.is_empty() {
        (-scale, scale)
    } else {
        let mn = ev.iter().copied().fold(f64::INFINITY, f64::min);
        let mx = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = (mx - mn).max(1.0);
        (mn - pad, mx + pad)
    };
    let g = |r: f64| pencil_min_eig(&f, &d, r);
    let (r0, m0) = golden_max(g, lo, hi);
    if m0 < -tol {
        return Err(PseudoEuclideanError::PreconditionFailed(format!(
            "no r with F - rJ positive semidefinite (best min-eig {m0:e})"
        )));
    }
    let feasible = |r: f64| g(r) >= -1e-13 * scale;
    let endpoint = |dir: f64| -> f64 {
        let mut step = 1e-6 * scale;
        let mut inside = r0;
        let mut outside = r0 + dir * step;
        while feasible(outside) {
            inside = outside;
            step *= 2.0;
            outside = r0 + dir * step;
            if step > 1e12 * scale {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if feasible(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lower = endpoint(-1.0);
    let upper = endpoint(1.0);
    Ok(KuhneInterval {
        lower,
        upper,
        zero_cone_min,
    })
}

/// Monte-Carlo `(sup_{C₋} F/J, inf_{C₊} F/J)` over Gaussian samples.
pub fn cone_ratio_extrema(j: &QuadForm, f: &Matrix, samples: usize, seed: u64) -> (f64, f64) {
    let n = j.dim();
    let d = j.signature_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sup_minus, mut inf_plus) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..samples {
        let v = unit_gaussian(&mut rng, n);
        let jv = v.dot(&(&d * &v));
        if jv.abs() <= 1e-6 {
            continue;
        }
        let ratio = v.dot(&(f * &v)) / jv;
        if jv > 0.0 {
            inf_plus = inf_plus.min(ratio);
        } else {
            sup_minus = sup_minus.max(ratio);
        }
    }
    (sup_minus, inf_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    fn j2() -> QuadForm {
        QuadForm::standard(1, 2).unwrap()
    }

    #[test]
    fn diagonal_map_is_strictly_separated() {
        let r = separation_test(&j2(), &diag(&[0.5, 3.0]), true).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::StrictlySeparated);
        assert!(r.holds);
        assert!(r.witness > 0.25 && r.witness < 9.0);
    }

    #[test]
    fn hyperbolic_rotation_is_separated_not_strict() {
        let s: f64 = 0.7;
        let l = Matrix::from_row_slice(2, 2, &[s.cosh(), s.sinh(), s.sinh(), s.cosh()]);
        let r = separation_test(&j2(), &l, false).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::Separated);
        assert!(r.holds);
        assert!(!separation_test(&j2(), &l, true).unwrap().holds);
    }

    #[test]
    fn quarter_turn_swaps_cones() {
        let l = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = separation_test(&j2(), &l, false).unwrap();
        assert_eq!(r.verdict, SeparationVerdict::NotSeparated);
    }

    #[test]
    fn singular_map_is_an_error() {
        let l = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(
            separation_test(&j2(), &l, true).unwrap_err(),
            PseudoEuclideanError::NotInvertible
        );
    }

    #[test]
    fn kuhne_examples() {
        let j = j2();
        let k = kuhne_bounds(&j, &j.signature_matrix()).unwrap();
        assert!((k.lower - 1.0).abs() < 1e-9 && (k.upper - 1.0).abs() < 1e-9);
        let k = kuhne_bounds(&j, &Matrix::identity(2, 2)).unwrap();
        assert!((k.lower + 1.0).abs() < 1e-9 && (k.upper - 1.0).abs() < 1e-9);
        let q1 = separation_form(&j, &diag(&[0.5, 3.0]));
        let k = kuhne_bounds(&j, &q1).unwrap();
        assert!((k.lower - 0.25).abs() < 1e-9 && (k.upper - 9.0).abs() < 1e-9);
    }

    #[test]
    fn kuhne_rejects_forms_negative_on_zero_cone() {
        let j = j2();
        let f = -Matrix::identity(2, 2);
        assert!(matches!(
            kuhne_bounds(&j, &f),
            Err(PseudoEuclideanError::PreconditionFailed(_))
        ));
    }
}
