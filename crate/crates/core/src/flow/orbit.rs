use super::integrate::{DormandPrince, MAP_ATOL, MAP_RTOL};
use super::{FlowError, VectorFieldSpec, MAX_FLOW_DIM};
use crate::cocycle::{Cocycle, ScaledMatrix};
use crate::linalg::{Matrix, Vector};

/// A sampled trajectory with the tangent maps between consecutive samples.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    pub field: VectorFieldSpec,
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    /// `factors[k] = DX_dt(x(t_k))`.
    pub factors: Vec<Matrix>,
    /// Cumulative `log |R_ii|` of the QR re-orthonormalisation of an
    /// identity frame carried along the orbit, one entry per sample.
    pub renorm_log: Vec<Vec<f64>>,
    /// `∫_0^{t_k} tr DX(x(s)) ds`.
    pub trace_integral: Vec<f64>,
}

impl OrbitSegment {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times[0]
    }

    /// `Φ(t_i → t_j)` with a separated log-scale.
    pub fn cocycle(&self, i: usize, j: usize) -> Result<ScaledMatrix, FlowError> {
        if i > j || j >= self.times.len() {
            return Err(FlowError::Domain(format!(
                "cocycle range {i}..{j} outside 0..{}",
                self.times.len() - 1
            )));
        }
        Ok(self.product(i, j))
    }

    /// Field vector `X(x(t_k))`.
    pub fn velocity(&self, k: usize) -> Vector {
        self.field.eval(&self.states[k])
    }

    /// Number of samples spanning flow time `t` (rounded to the grid).
    pub fn samples_for(&self, t: f64) -> usize {
        (t / self.dt).round().max(0.0) as usize
    }
}

impl Cocycle for OrbitSegment {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn steps(&self) -> usize {
        self.factors.len()
    }
    fn factor(&self, k: usize) -> &Matrix {
        &self.factors[k]
    }
    fn step_time(&self) -> f64 {
        self.dt
    }
}

fn check_field(field: &VectorFieldSpec, x0: &Vector) -> Result<usize, FlowError> {
    field.validate()?;
    let n = field.dim();
    if x0.len() != n {
        return Err(FlowError::Domain(format!(
            "initial point has length {}, field dimension {n}",
            x0.len()
        )));
    }
    if n > MAX_FLOW_DIM {
        return Err(FlowError::Domain(format!(
            "dimension {n} exceeds {MAX_FLOW_DIM}"
        )));
    }
    Ok(n)
}

/// `X_t(x0)`; negative `t` flows backward.
pub fn flow_map(field: &VectorFieldSpec, x0: &Vector, t: f64) -> Result<Vector, FlowError> {
    let n = check_field(field, x0)?;
    let mut dp = DormandPrince::new(n, n, |y: &[f64], out: &mut [f64]| field.eval_into(y, out))
        .with_tolerances(MAP_RTOL, MAP_ATOL);
    let mut y = x0.as_slice().to_vec();
    dp.advance(&mut y, 0.0, t)?;
    Ok(Vector::from_vec(y))
}

fn grid_steps(t_total: f64, dt: f64) -> Result<usize, FlowError> {
    if !(t_total > 0.0 && dt > 0.0) {
        return Err(FlowError::Domain(
            "horizon and step must be positive".into(),
        ));
    }
    Ok(((t_total / dt) - 1e-9).ceil() as usize)
}

/// Integrates the orbit of `x0` over `[0, t_total]` together with the
/// variational equation, sampling every `dt`.
pub fn integrate(
    field: &VectorFieldSpec,
    x0: &Vector,
    t_total: f64,
    dt: f64,
) -> Result<OrbitSegment, FlowError> {
    let n = check_field(field, x0)?;
    let steps = grid_steps(t_total, dt)?;
    let nn = n * n;
    let rhs = |y: &[f64], out: &mut [f64]| {
        let (x, rest) = y.split_at(n);
        let phi = &rest[..nn];
        field.eval_into(x, &mut out[..n]);
        let mut jac = [0.0; MAX_FLOW_DIM * MAX_FLOW_DIM];
        field.jacobian_into(x, &mut jac[..nn]);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += jac[i * n + k] * phi[k * n + j];
                }
                out[n + i * n + j] = acc;
            }
        }
        out[n + nn] = (0..n).map(|i| jac[i * n + i]).sum();
    };
    let mut dp = DormandPrince::new(n + nn + 1, n, rhs);
    let mut y = vec![0.0; n + nn + 1];
    y[..n].copy_from_slice(x0.as_slice());

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut factors = Vec::with_capacity(steps);
    let mut renorm_log = Vec::with_capacity(steps + 1);
    let mut trace_integral = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    renorm_log.push(vec![0.0; n]);
    trace_integral.push(0.0);

    let mut frame = Matrix::identity(n, n);
    let mut logs = vec![0.0; n];
    let mut trace_acc = 0.0;
    for k in 0..steps {
        let t = k as f64 * dt;
        y[n..n + nn].fill(0.0);
        for i in 0..n {
            y[n + i * n + i] = 1.0;
        }
        y[n + nn] = 0.0;
        dp.advance(&mut y, t, dt)?;
        let phi = Matrix::from_row_slice(n, n, &y[n..n + nn]);
        let (q, r) = (&phi * &frame).qr().unpack();
        for i in 0..n {
            logs[i] += r[(i, i)].abs().ln();
        }
        frame = q;
        trace_acc += y[n + nn];
        times.push((k + 1) as f64 * dt);
        states.push(Vector::from_column_slice(&y[..n]));
        factors.push(phi);
        renorm_log.push(logs.clone());
        trace_integral.push(trace_acc);
    }
    Ok(OrbitSegment {
        field: field.clone(),
        dt,
        times,
        states,
        factors,
        renorm_log,
        trace_integral,
    })
}

/// Top Lyapunov exponent from two nearby trajectories integrated side by side,
/// with the separation renormalised to `delta` every `dt`.
pub fn finite_difference_top_exponent(
    field: &VectorFieldSpec,
    x0: &Vector,
    t_total: f64,
    dt: f64,
    delta: f64,
) -> Result<f64, FlowError> {
    let n = check_field(field, x0)?;
    let steps = grid_steps(t_total, dt)?;
    let rhs = |y: &[f64], out: &mut [f64]| {
        let (a, b) = y.split_at(n);
        let (oa, ob) = out.split_at_mut(n);
        field.eval_into(a, oa);
        field.eval_into(b, ob);
    };
    let mut dp = DormandPrince::new(2 * n, n, rhs);
    let mut y = vec![0.0; 2 * n];
    let dir = 1.0 / (n as f64).sqrt();
    for i in 0..n {
        y[i] = x0[i];
        y[n + i] = x0[i] + delta * dir;
    }
    let mut sum = 0.0;
    for k in 0..steps {
        dp.advance(&mut y, k as f64 * dt, dt)?;
        let sep: f64 = (0..n)
            .map(|i| (y[n + i] - y[i]).powi(2))
            .sum::<f64>()
            .sqrt();
        if sep == 0.0 {
            return Err(FlowError::Domain("trajectories collapsed".into()));
        }
        sum += (sep / delta).ln();
        for i in 0..n {
            y[n + i] = y[i] + (y[n + i] - y[i]) * delta / sep;
        }
    }
    Ok(sum / (steps as f64 * dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;

    #[test]
    fn linear_factors_are_matrix_exponentials() {
        let a = Matrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -2.0, -1.0, 0.5, 0.0, 0.3, 0.4]);
        let orbit = integrate(&VectorFieldSpec::linear(&a), &Vector::zeros(3), 2.0, 0.1).unwrap();
        assert_eq!(orbit.factors.len(), 20);
        let full = orbit.cocycle(0, 20).unwrap().value();
        let oracle = (&a * 2.0).exp();
        assert!((full - &oracle).norm() < 1e-8 * oracle.norm());
        assert!(orbit.states.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn zero_field_is_trivial() {
        let field = VectorFieldSpec::linear(&Matrix::zeros(2, 2));
        let x0 = Vector::from_vec(vec![0.3, -1.0]);
        let orbit = integrate(&field, &x0, 1.0, 0.25).unwrap();
        assert!(orbit.states.iter().all(|x| (x - &x0).norm() == 0.0));
        assert!(orbit
            .factors
            .iter()
            .all(|f| (f - Matrix::identity(2, 2)).norm() == 0.0));
    }

    #[test]
    fn identity_range_and_bounds() {
        let orbit = integrate(
            &VectorFieldSpec::linear(&diag(&[1.0, -1.0])),
            &Vector::zeros(2),
            1.0,
            0.5,
        )
        .unwrap();
        let p = orbit.cocycle(1, 1).unwrap();
        assert_eq!((p.mat, p.log_scale), (Matrix::identity(2, 2), 0.0));
        assert!(orbit.cocycle(1, 5).is_err());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let f = VectorFieldSpec::lorenz_classic();
        assert!(integrate(&f, &Vector::zeros(2), 1.0, 0.1).is_err());
        assert!(integrate(&f, &Vector::zeros(3), -1.0, 0.1).is_err());
    }
}
