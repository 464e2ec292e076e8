//! Dormand–Prince 5(4) with step control, stepping exactly onto requested times.

use super::FlowError;

pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-12;
/// Tolerances for single point maps, which carry no variational block.
pub const MAP_RTOL: f64 = 1e-13;
pub const MAP_ATOL: f64 = 1e-14;
pub const ESCAPE_RADIUS: f64 = 1e8;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integrator for an autonomous system `ẏ = f(y)`.
///
/// Only the first `watch` components are checked against the escape radius.
pub struct DormandPrince<F: Fn(&[f64], &mut [f64])> {
    rhs: F,
    watch: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y5: Vec<f64>,
    rtol: f64,
    atol: f64,
    /// Last accepted step size, reused as the next trial.
    pub h: f64,
}

impl<F: Fn(&[f64], &mut [f64])> DormandPrince<F> {
    pub fn new(dim: usize, watch: usize, rhs: F) -> Self {
        Self {
            rhs,
            watch,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y5: vec![0.0; dim],
            rtol: RTOL,
            atol: ATOL,
            h: 0.0,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    /// Advances `y` from time `t` by `span` (negative spans run backward).
    pub fn advance(&mut self, y: &mut [f64], t: f64, span: f64) -> Result<(), FlowError> {
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let target = t + span;
        let mut now = t;
        if self.h <= 0.0 || !self.h.is_finite() {
            self.h = (span.abs() * 0.1).min(1e-2);
        }
        (self.rhs)(y, &mut self.k[0]);
        loop {
            let remaining = (target - now) * dir;
            if remaining <= 1e-14 * target.abs().max(1.0) {
                return Ok(());
            }
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let min_h = 1e-13 * now.abs().max(1.0);
            if h < min_h && !last {
                return Err(FlowError::StiffnessError { t: now });
            }
            let err = self.trial(y, h * dir);
            if err <= 1.0 && err.is_finite() {
                y.copy_from_slice(&self.y5);
                now = if last { target } else { now + h * dir };
                // FSAL: the last stage is f(y_{n+1}).
                let (first, rest) = self.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                if y[..self.watch].iter().map(|v| v * v).sum::<f64>().sqrt() > ESCAPE_RADIUS {
                    return Err(FlowError::Escape { t: now });
                }
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
            } else {
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                self.h = h * fac;
                if self.h < min_h {
                    return Err(FlowError::StiffnessError { t: now });
                }
            }
        }
    }

    /// One trial step of signed size `h`; fills `y5` and returns the scaled error norm.
    fn trial(&mut self, y: &[f64], h: f64) -> f64 {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (_, todo) = self.k.split_at_mut(s);
            (self.rhs)(&self.tmp, &mut todo[0]);
        }
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut y5 = 0.0;
            let mut e = 0.0;
            for s in 0..7 {
                y5 += B5[s] * self.k[s][i];
                e += (B5[s] - B4[s]) * self.k[s][i];
            }
            self.y5[i] = y[i] + h * y5;
            let sc = self.atol + self.rtol * y[i].abs().max(self.y5[i].abs());
            let r = h * e / sc;
            err_sq += r * r;
        }
        (err_sq / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let mut dp = DormandPrince::new(1, 1, |y: &[f64], out: &mut [f64]| out[0] = -2.0 * y[0]);
        let mut y = [1.0];
        dp.advance(&mut y, 0.0, 3.0).unwrap();
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-11);
        dp.advance(&mut y, 3.0, -3.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn blow_up_escapes() {
        let mut dp = DormandPrince::new(1, 1, |y: &[f64], out: &mut [f64]| out[0] = y[0] * y[0]);
        let mut y = [1.0];
        assert!(matches!(
            dp.advance(&mut y, 0.0, 2.0),
            Err(FlowError::Escape { .. })
        ));
    }
}
