use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::linalg::{from_rows, Matrix, Vector};

/// Monomial `coeff · ∏ x_i^{powers[i]}` contributing to one component of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub component: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// A smooth vector field on `R^n` with analytic Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorFieldSpec {
    /// `ẋ = A x`, with a fixed point at the origin.
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    Polynomial {
        dim: usize,
        terms: Vec<PolyTerm>,
    },
}

impl VectorFieldSpec {
    pub fn linear(a: &Matrix) -> Self {
        VectorFieldSpec::Linear {
            matrix: crate::linalg::to_rows(a),
        }
    }

    pub fn lorenz_classic() -> Self {
        VectorFieldSpec::Lorenz {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorFieldSpec::Linear { matrix } => matrix.len(),
            VectorFieldSpec::Lorenz { .. } => 3,
            VectorFieldSpec::Polynomial { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        match self {
            VectorFieldSpec::Linear { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(FlowError::Domain(
                        "linear field needs a non-empty square matrix".into(),
                    ));
                }
            }
            VectorFieldSpec::Lorenz { sigma, rho, beta } => {
                if ![sigma, rho, beta].iter().all(|v| v.is_finite()) {
                    return Err(FlowError::Domain("Lorenz parameters must be finite".into()));
                }
            }
            VectorFieldSpec::Polynomial { dim, terms } => {
                if *dim == 0 {
                    return Err(FlowError::Domain("polynomial field of dimension 0".into()));
                }
                for t in terms {
                    if t.component >= *dim || t.powers.len() != *dim {
                        return Err(FlowError::Domain(format!(
                            "polynomial term {t:?} does not match dimension {dim}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes `X(x)` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            VectorFieldSpec::Linear { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            VectorFieldSpec::Lorenz { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
            VectorFieldSpec::Polynomial { terms, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for t in terms {
                    out[t.component] += t.coeff * monomial(x, &t.powers);
                }
            }
        }
    }

    /// Writes `DX(x)` row-major into `out` (length `n²`).
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        match self {
            VectorFieldSpec::Linear { matrix } => {
                for (i, row) in matrix.iter().enumerate() {
                    out[i * n..(i + 1) * n].copy_from_slice(row);
                }
            }
            VectorFieldSpec::Lorenz { sigma, rho, beta } => {
                out.copy_from_slice(&[
                    -sigma,
                    *sigma,
                    0.0,
                    rho - x[2],
                    -1.0,
                    -x[0],
                    x[1],
                    x[0],
                    -beta,
                ]);
            }
            VectorFieldSpec::Polynomial { terms, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut pw = Vec::new();
                for t in terms {
                    for k in 0..n {
                        let e = t.powers[k];
                        if e == 0 {
                            continue;
                        }
                        pw.clear();
                        pw.extend_from_slice(&t.powers);
                        pw[k] -= 1;
                        out[t.component * n + k] += t.coeff * f64::from(e) * monomial(x, &pw);
                    }
                }
            }
        }
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        self.eval_into(x.as_slice(), out.as_mut_slice());
        out
    }

    pub fn jacobian(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        let mut buf = vec![0.0; n * n];
        self.jacobian_into(x.as_slice(), &mut buf);
        Matrix::from_row_slice(n, n, &buf)
    }

    /// `tr DX(x)`.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        match self {
            VectorFieldSpec::Linear { matrix } => (0..n).map(|i| matrix[i][i]).sum(),
            VectorFieldSpec::Lorenz { sigma, beta, .. } => -(sigma + 1.0 + beta),
            VectorFieldSpec::Polynomial { .. } => {
                let mut buf = vec![0.0; n * n];
                self.jacobian_into(x, &mut buf);
                (0..n).map(|i| buf[i * n + i]).sum()
            }
        }
    }

    /// The matrix of a linear field.
    pub fn linear_matrix(&self) -> Option<Matrix> {
        match self {
            VectorFieldSpec::Linear { matrix } => Some(from_rows(matrix)),
            _ => None,
        }
    }
}

fn monomial(x: &[f64], powers: &[u32]) -> f64 {
    x.iter()
        .zip(powers)
        .map(|(xi, &e)| xi.powi(e as i32))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(f: &VectorFieldSpec, x: &Vector) -> Matrix {
        let n = f.dim();
        let h = 1e-6;
        let mut m = Matrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            m.set_column(k, &((f.eval(&xp) - f.eval(&xm)) / (2.0 * h)));
        }
        m
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let poly = VectorFieldSpec::Polynomial {
            dim: 2,
            terms: vec![
                PolyTerm {
                    component: 0,
                    coeff: 1.5,
                    powers: vec![2, 1],
                },
                PolyTerm {
                    component: 0,
                    coeff: -1.0,
                    powers: vec![0, 0],
                },
                PolyTerm {
                    component: 1,
                    coeff: 0.3,
                    powers: vec![1, 3],
                },
            ],
        };
        let fields = [
            VectorFieldSpec::lorenz_classic(),
            VectorFieldSpec::linear(&Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5])),
            poly,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in &fields {
            for _ in 0..20 {
                let x = Vector::from_fn(f.dim(), |_, _| rng.random_range(-3.0..3.0));
                let j = f.jacobian(&x);
                assert!((&j - fd_jacobian(f, &x)).amax() < 1e-6 * (1.0 + j.amax()));
                let tr: f64 = j.diagonal().sum();
                assert!((tr - f.divergence(x.as_slice())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation_rejects_ragged_matrices() {
        assert!(VectorFieldSpec::lorenz_classic().validate().is_ok());
        let bad = VectorFieldSpec::Linear {
            matrix: vec![vec![1.0, 2.0]],
        };
        assert!(bad.validate().is_err());
    }
}
