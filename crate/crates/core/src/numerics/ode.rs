//! Dormand–Prince 5(4) integrator and quintic Hermite dense output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Right-hand side `dy = f(t, y)`; may fail when the state leaves the model.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeSystem for (usize, F)
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn dim(&self) -> usize {
        self.0
    }
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.1)(t, y, dy)
    }
}

/// Outcome of a single trial step.
#[derive(Debug, Clone)]
pub struct Trial {
    pub y: Vec<f64>,
    /// Derivative at the end of the step (first-same-as-last stage).
    pub dy: Vec<f64>,
    /// Scaled error norm; the step is acceptable when `err <= 1`.
    pub err: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_max: f64,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 1_000_000,
            h_init: 1e-3,
            h_max: f64::INFINITY,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// One Dormand–Prince step of size `h` from `(t, y)` with `dy = f(t, y)`.
    pub fn attempt<S: OdeSystem>(
        &self,
        sys: &mut S,
        t: f64,
        y: &[f64],
        dy: &[f64],
        h: f64,
    ) -> Result<Trial> {
        let n = y.len();
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let k1 = dy;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, &tmp, &mut k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, &tmp, &mut k5)?;
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, &tmp, &mut k6)?;
        let mut y_new = vec![0.0; n];
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, &y_new, &mut k7)?;

        let mut acc = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        let err = (acc / n as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Ok(Trial {
                y: y_new,
                dy: k7,
                err: f64::INFINITY,
            });
        }
        Ok(Trial {
            y: y_new,
            dy: k7,
            err,
        })
    }

    /// Step-size update after a trial with scaled error `err`.
    pub fn next_h(&self, h: f64, err: f64) -> f64 {
        let fac = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.1
        };
        let h_new = h * fac;
        h_new.signum() * h_new.abs().min(self.h_max)
    }

    /// Integrate from `t0` to `t1` (either direction), calling `observe` at
    /// every accepted step including the initial point with `(t, y, dy)`.
    pub fn integrate<S, O>(
        &self,
        sys: &mut S,
        t0: f64,
        y0: &[f64],
        t1: f64,
        mut observe: O,
    ) -> Result<Vec<f64>>
    where
        S: OdeSystem,
        O: FnMut(f64, &[f64], &[f64]),
    {
        let n = sys.dim();
        let mut y = y0.to_vec();
        let mut dy = vec![0.0; n];
        sys.rhs(t0, &y, &mut dy)?;
        observe(t0, &y, &dy);
        if t1 == t0 {
            return Ok(y);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut h = dir * self.h_init.min(span).min(self.h_max);
        let mut t = t0;
        let mut steps = 0usize;
        while (t1 - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(Error::NonConvergence(format!(
                    "step limit {} reached at t = {t}",
                    self.max_steps
                )));
            }
            steps += 1;
            let last = (t + h - t1) * dir >= 0.0;
            let h_try = if last { t1 - t } else { h };
            if h_try.abs() < 1e-15 * t.abs().max(1.0) && !last {
                return Err(Error::NonConvergence(format!(
                    "step size underflow at t = {t}"
                )));
            }
            let trial = self.attempt(sys, t, &y, &dy, h_try)?;
            if trial.err <= 1.0 {
                t = if last { t1 } else { t + h_try };
                y = trial.y;
                dy = trial.dy;
                observe(t, &y, &dy);
                h = self.next_h(h_try, trial.err);
            } else {
                h = self.next_h(h_try, trial.err);
                if h.abs() < 1e-15 * t.abs().max(1.0) {
                    return Err(Error::NonConvergence(format!(
                        "step size underflow at t = {t}"
                    )));
                }
            }
        }
        Ok(y)
    }
}

/// A node of a dense trajectory: state with its first two derivatives.
#[derive(Debug, Clone)]
pub struct Node {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    pub ddy: Vec<f64>,
}

/// Piecewise quintic Hermite interpolant through [`Node`]s sorted by `t`.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    nodes: Vec<Node>,
}

impl DenseTrajectory {
    pub fn new(mut nodes: Vec<Node>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(
                "dense trajectory needs two nodes".into(),
            ));
        }
        nodes.sort_by(|a, b| a.t.total_cmp(&b.t));
        nodes.dedup_by(|a, b| a.t == b.t);
        Ok(Self { nodes })
    }

    pub fn t_min(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn t_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn segment(&self, t: f64) -> usize {
        let idx = self.nodes.partition_point(|nd| nd.t <= t);
        idx.clamp(1, self.nodes.len() - 1) - 1
    }

    /// Interpolated value and first derivative of component `i` at `t`.
    /// Outside the node range the end segment polynomial is used.
    pub fn eval(&self, i: usize, t: f64) -> (f64, f64) {
        let k = self.segment(t);
        let a = &self.nodes[k];
        let b = &self.nodes[k + 1];
        hermite5(
            a.t,
            b.t,
            [a.y[i], a.dy[i], a.ddy[i]],
            [b.y[i], b.dy[i], b.ddy[i]],
            t,
        )
    }
}

/// Quintic Hermite interpolation on `[t0, t1]` from `(p, p', p'')` at both
/// ends; returns the value and first derivative at `t`.
pub fn hermite5(t0: f64, t1: f64, left: [f64; 3], right: [f64; 3], t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let x = (t - t0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    let x5 = x4 * x;
    let h0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
    let h1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
    let h2 = 0.5 * x2 - 1.5 * x3 + 1.5 * x4 - 0.5 * x5;
    let h3 = 0.5 * x3 - x4 + 0.5 * x5;
    let h4 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
    let h5 = 10.0 * x3 - 15.0 * x4 + 6.0 * x5;
    let d0 = -30.0 * x2 + 60.0 * x3 - 30.0 * x4;
    let d1 = 1.0 - 18.0 * x2 + 32.0 * x3 - 15.0 * x4;
    let d2 = x - 4.5 * x2 + 6.0 * x3 - 2.5 * x4;
    let d3 = 1.5 * x2 - 4.0 * x3 + 2.5 * x4;
    let d4 = -12.0 * x2 + 28.0 * x3 - 15.0 * x4;
    let d5 = 30.0 * x2 - 60.0 * x3 + 30.0 * x4;
    let [p0, v0, a0] = left;
    let [p1, v1, a1] = right;
    let value = p0 * h0 + h * v0 * h1 + h * h * a0 * h2 + h * h * a1 * h3 + h * v1 * h4 + p1 * h5;
    let deriv =
        (p0 * d0 + h * v0 * d1 + h * h * a0 * d2 + h * h * a1 * d3 + h * v1 * d4 + p1 * d5) / h;
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let solver = Dopri5::new(1e-12, 1e-14);
        let mut sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        });
        let end = solver
            .integrate(
                &mut sys,
                0.0,
                &[1.0, 0.0],
                2.0 * std::f64::consts::PI,
                |_, _, _| {},
            )
            .unwrap();
        assert!((end[0] - 1.0).abs() < 1e-10);
        assert!(end[1].abs() < 1e-10);
    }

    #[test]
    fn backwards_integration() {
        let solver = Dopri5::new(1e-12, 1e-14);
        let mut sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0];
            Ok(())
        });
        let end = solver
            .integrate(&mut sys, 0.0, &[1.0], -1.0, |_, _, _| {})
            .unwrap();
        assert!((end[0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn hermite_reproduces_quintic() {
        let p = |t: f64| 1.0 + 2.0 * t - t.powi(3) + 0.5 * t.powi(5);
        let dp = |t: f64| 2.0 - 3.0 * t * t + 2.5 * t.powi(4);
        let ddp = |t: f64| -6.0 * t + 10.0 * t.powi(3);
        let (t0, t1) = (0.3, 1.1);
        for &t in &[0.3, 0.5, 0.77, 1.1] {
            let (v, d) = hermite5(
                t0,
                t1,
                [p(t0), dp(t0), ddp(t0)],
                [p(t1), dp(t1), ddp(t1)],
                t,
            );
            assert!((v - p(t)).abs() < 1e-13);
            assert!((d - dp(t)).abs() < 1e-12);
        }
    }
}
