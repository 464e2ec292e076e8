use serde::Serialize;

use super::{FlowError, VectorFieldSpec};
use crate::linalg::Vector;

const NEWTON_STEPS: usize = 100;
const DEDUP_TOL: f64 = 1e-8;
const HYPERBOLIC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct SingularityReport {
    pub location: Vec<f64>,
    /// Eigenvalues `(re, im)` of `DX(σ)`, sorted by real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub hyperbolic: bool,
    /// Number of eigenvalues with negative real part.
    pub index: usize,
}

impl SingularityReport {
    pub fn min_abs_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| e.0.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularitySearch {
    pub found: Vec<SingularityReport>,
    /// One line per skipped seed.
    pub notes: Vec<String>,
}

/// Spectral data of `DX` at a zero `sigma` of the field.
pub fn analyze_singularity(field: &VectorFieldSpec, sigma: &Vector) -> SingularityReport {
    let jac = field.jacobian(sigma);
    let mut eigenvalues: Vec<(f64, f64)> = jac
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let hyperbolic = eigenvalues.iter().all(|e| e.0.abs() > HYPERBOLIC_TOL);
    let index = eigenvalues.iter().filter(|e| e.0 < 0.0).count();
    SingularityReport {
        location: sigma.iter().copied().collect(),
        eigenvalues,
        hyperbolic,
        index,
    }
}

fn newton(field: &VectorFieldSpec, seed: &Vector) -> Result<Vector, String> {
    let mut x = seed.clone();
    let mut fx = field.eval(&x);
    for _ in 0..NEWTON_STEPS {
        let res = fx.norm();
        if res <= 1e-12 * (1.0 + x.norm()) {
            return Ok(x);
        }
        let step = field
            .jacobian(&x)
            .lu()
            .solve(&fx)
            .ok_or_else(|| format!("singular Jacobian at {:?}", x.as_slice()))?;
        let mut alpha = 1.0;
        loop {
            let cand = &x - &step * alpha;
            let fc = field.eval(&cand);
            if fc.norm() < res || alpha < 1e-6 {
                x = cand;
                fx = fc;
                break;
            }
            alpha *= 0.5;
        }
        if (&step * alpha).norm() <= 1e-15 * (1.0 + x.norm()) && fx.norm() > 1e-8 {
            return Err("Newton stalled".into());
        }
    }
    if fx.norm() <= 1e-10 * (1.0 + x.norm()) {
        Ok(x)
    } else {
        Err(format!("no convergence in {NEWTON_STEPS} steps"))
    }
}

/// Damped Newton from each seed; converged points are de-duplicated.
pub fn find_singularities(
    field: &VectorFieldSpec,
    seeds: &[Vector],
) -> Result<SingularitySearch, FlowError> {
    field.validate()?;
    let mut found: Vec<SingularityReport> = Vec::new();
    let mut notes = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        if seed.len() != field.dim() {
            return Err(FlowError::Domain(format!("seed {i} has wrong dimension")));
        }
        match newton(field, seed) {
            Ok(x) => {
                let dup = found.iter().any(|s| {
                    (Vector::from_column_slice(&s.location) - &x).norm()
                        <= DEDUP_TOL * (1.0 + x.norm())
                });
                if !dup {
                    found.push(analyze_singularity(field, &x));
                }
            }
            Err(why) => notes.push(format!("seed {i} skipped: {why}")),
        }
    }
    Ok(SingularitySearch { found, notes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::PolyTerm;
    use crate::linalg::{diag, Matrix};

    #[test]
    fn lorenz_origin_and_wings() {
        let f = VectorFieldSpec::lorenz_classic();
        let seeds = [
            Vector::from_vec(vec![0.1, -0.1, 0.2]),
            Vector::from_vec(vec![1e-3, 0.0, 0.0]),
            Vector::from_vec(vec![8.0, 8.0, 27.0]),
        ];
        let s = find_singularities(&f, &seeds).unwrap();
        assert_eq!(s.found.len(), 2);
        let origin = &s.found[0];
        assert!(origin.location.iter().all(|v| v.abs() < 1e-10));
        let disc = 1201f64.sqrt();
        let want = [(-11.0 - disc) / 2.0, -8.0 / 3.0, (-11.0 + disc) / 2.0];
        for (e, w) in origin.eigenvalues.iter().zip(want) {
            assert!((e.0 - w).abs() < 1e-9 && e.1.abs() < 1e-12);
        }
        assert!(origin.hyperbolic);
        assert_eq!(origin.index, 2);
    }

    #[test]
    fn linear_field_reports_its_spectrum() {
        let f = VectorFieldSpec::linear(&diag(&[-3.0, 2.0, 4.0, 10.0]));
        let s = find_singularities(&f, &[Vector::from_vec(vec![1.0, 1.0, 1.0, 1.0])]).unwrap();
        let r = &s.found[0];
        let re: Vec<f64> = r.eigenvalues.iter().map(|e| e.0).collect();
        assert_eq!(re, vec![-3.0, 2.0, 4.0, 10.0]);
        assert_eq!(r.index, 1);
    }

    #[test]
    fn constant_field_has_no_zeros() {
        let f = VectorFieldSpec::Polynomial {
            dim: 2,
            terms: vec![PolyTerm {
                component: 0,
                coeff: 1.0,
                powers: vec![0, 0],
            }],
        };
        let s = find_singularities(&f, &[Vector::from_vec(vec![0.0, 0.0])]).unwrap();
        assert!(s.found.is_empty());
        assert_eq!(s.notes.len(), 1);
    }

    #[test]
    fn centre_is_not_hyperbolic() {
        let f = VectorFieldSpec::linear(&Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let r = analyze_singularity(&f, &Vector::zeros(2));
        assert!(!r.hyperbolic);
    }
}
