//! Deformation gauges `(u, v, w)` as functions of `B = b^2`.
//!
//! A gauge solves
//!
//! ```text
//! u' = (v - k1 u) / p
//! v' = (u (k2 u - k3 v - 2 k1 v) + 2 v^2) / (u p)
//! w' = w (3 v - k3 u - 2 k1 u) / (2 u p),        p(B) = 1 + (k1+k3) B + k2 B^2
//! ```
//!
//! and turns `(alpha, beta)` into navigation data via
//! `h^2 = u alpha^2 + v beta^2`, `rho = w beta`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{roots, DenseTrajectory, Dopri5, Node, Quadrature};
use crate::phi::{regularity_range, MetricParams, Sign, PHI_POSITIVITY_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeKind {
    /// `u = e^{2 sigma}`, `v = (k1+k3+k2 B) u`, `w = sqrt(p) e^sigma`.
    Canonical,
    /// `u = (1 ∓ B)^2`, `v = 0`, `w = sqrt(1 ∓ B)` for the square families.
    Square { sign: Sign },
    /// Numerical solution from `(u0, v0, w0)` at `B = 0`.
    NumericIvp { u0: f64, v0: f64, w0: f64 },
}

/// Gauge functions and their `B`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeValues {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub du: f64,
    pub dv: f64,
    pub dw: f64,
}

#[derive(Debug, Clone)]
enum Repr {
    Closed,
    Point(GaugeValues),
    Table(DenseTrajectory),
}

/// A gauge on `[0, t_max]`. When `t_max` equals the regularity supremum the
/// right end is excluded.
#[derive(Debug, Clone)]
pub struct Gauge {
    params: MetricParams,
    kind: GaugeKind,
    t_max: f64,
    b_sq_sup: f64,
    repr: Repr,
}

/// Right-hand side of the gauge ODEs at `B`.
pub fn gauge_rhs(params: &MetricParams, b_sq: f64, u: f64, v: f64, w: f64) -> [f64; 3] {
    let MetricParams { k1, k2, k3, .. } = *params;
    let p = params.denominator(b_sq);
    [
        (v - k1 * u) / p,
        (u * (k2 * u - k3 * v - 2.0 * k1 * v) + 2.0 * v * v) / (u * p),
        w * (3.0 * v - k3 * u - 2.0 * k1 * u) / (2.0 * u * p),
    ]
}

fn check_range(params: &MetricParams, t_max: f64) -> Result<f64> {
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_max must be finite and non-negative, got {t_max}"
        )));
    }
    let sup = regularity_range(params)?;
    if t_max > sup {
        return Err(Error::OutOfRegularRange {
            value: t_max,
            limit: sup,
        });
    }
    Ok(sup)
}

impl Gauge {
    /// The canonical gauge.
    pub fn canonical(params: MetricParams, t_max: f64) -> Result<Self> {
        let sup = check_range(&params, t_max)?;
        let (min_den, at) = params.min_denominator(t_max);
        if min_den <= 0.0 && t_max < sup {
            return Err(Error::DenominatorVanishes { at });
        }
        Ok(Self {
            params,
            kind: GaugeKind::Canonical,
            t_max,
            b_sq_sup: sup,
            repr: Repr::Closed,
        })
    }

    /// The canonical gauge on the whole regular range, capped at
    /// `PHI_POSITIVITY_CAP^2` when the range is unbounded.
    pub fn canonical_regular(params: MetricParams) -> Result<Self> {
        let sup = regularity_range(&params)?;
        Self::canonical(params, sup.min(PHI_POSITIVITY_CAP * PHI_POSITIVITY_CAP))
    }

    /// The square-family gauge `u = (1 ∓ B)^2, v = 0, w = sqrt(1 ∓ B)`.
    pub fn square(sign: Sign, epsilon: f64, t_max: f64) -> Result<Self> {
        let params = MetricParams::square(sign, epsilon);
        let sup = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => 0.5,
        };
        if !(t_max >= 0.0) || t_max > sup {
            return Err(Error::OutOfRegularRange {
                value: t_max,
                limit: sup,
            });
        }
        Ok(Self {
            params,
            kind: GaugeKind::Square { sign },
            t_max,
            b_sq_sup: sup,
            repr: Repr::Closed,
        })
    }

    /// Integrate the gauge ODEs from `(u0, v0, w0)` at `B = 0` up to `t_max`.
    pub fn solve_ivp(
        params: MetricParams,
        u0: f64,
        v0: f64,
        w0: f64,
        t_max: f64,
        tol: f64,
    ) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if !(u0 > 0.0) || w0 == 0.0 || !w0.is_finite() || !v0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "initial triple needs u0 > 0 and w0 != 0, got ({u0}, {v0}, {w0})"
            )));
        }
        let sup = check_range(&params, t_max)?;
        let kind = GaugeKind::NumericIvp { u0, v0, w0 };
        if t_max == 0.0 {
            let [du, dv, dw] = gauge_rhs(&params, 0.0, u0, v0, w0);
            let point = GaugeValues {
                u: u0,
                v: v0,
                w: w0,
                du,
                dv,
                dw,
            };
            return Ok(Self {
                params,
                kind,
                t_max,
                b_sq_sup: sup,
                repr: Repr::Point(point),
            });
        }
        let (min_den, at) = params.min_denominator(t_max);
        if min_den <= 0.0 {
            return Err(Error::DenominatorVanishes { at });
        }
        let mut worst = f64::NAN;
        for rtol in [1e-12, 1e-13, 1e-14] {
            let table = integrate_gauge(&params, [u0, v0, w0], t_max, rtol)?;
            let gauge = Self {
                params,
                kind,
                t_max,
                b_sq_sup: sup,
                repr: Repr::Table(table),
            };
            worst = (0..=400)
                .map(|i| {
                    let r = gauge
                        .residuals(t_max * i as f64 / 400.0)
                        .unwrap_or([f64::INFINITY; 3]);
                    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                })
                .fold(0.0, f64::max);
            if worst < tol {
                return Ok(gauge);
            }
        }
        Err(Error::NonConvergence(format!(
            "gauge residual {worst:e} above tolerance {tol:e}"
        )))
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    pub fn kind(&self) -> GaugeKind {
        self.kind
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Supremum of `B` over which the underlying metric is regular.
    pub fn regular_sup(&self) -> f64 {
        self.b_sq_sup
    }

    fn open_end(&self) -> bool {
        self.t_max >= self.b_sq_sup
    }

    fn contains(&self, b_sq: f64) -> bool {
        b_sq >= 0.0 && (b_sq < self.t_max || (b_sq == self.t_max && !self.open_end()))
    }

    /// `(u, v, w)` and derivatives at `B`.
    pub fn eval(&self, b_sq: f64) -> Result<GaugeValues> {
        if !self.contains(b_sq) {
            return Err(Error::OutOfRegularRange {
                value: b_sq,
                limit: self.t_max,
            });
        }
        self.eval_unchecked(b_sq)
    }

    fn eval_unchecked(&self, b_sq: f64) -> Result<GaugeValues> {
        let p = &self.params;
        match (&self.repr, self.kind) {
            (Repr::Point(g), _) => Ok(*g),
            (Repr::Table(t), _) => {
                let (u, du) = t.eval(0, b_sq);
                let (v, dv) = t.eval(1, b_sq);
                let (w, dw) = t.eval(2, b_sq);
                Ok(GaugeValues {
                    u,
                    v,
                    w,
                    du,
                    dv,
                    dw,
                })
            }
            (Repr::Closed, GaugeKind::Square { sign }) => {
                let one_m = 1.0 - sign.value() * b_sq;
                let sq = one_m.sqrt();
                Ok(GaugeValues {
                    u: one_m * one_m,
                    v: 0.0,
                    w: sq,
                    du: -2.0 * sign.value() * one_m,
                    dv: 0.0,
                    dw: -sign.value() / (2.0 * sq),
                })
            }
            (Repr::Closed, _) => {
                let sigma = canonical_sigma(p, b_sq)?;
                let den = p.denominator(b_sq);
                let dsigma = 0.5 * (p.k2 * b_sq + p.k3) / den;
                let e = sigma.exp();
                let u = e * e;
                let du = 2.0 * dsigma * u;
                let lin = p.k1 + p.k3 + p.k2 * b_sq;
                let sq = den.sqrt();
                let dden = p.k1 + p.k3 + 2.0 * p.k2 * b_sq;
                Ok(GaugeValues {
                    u,
                    v: lin * u,
                    w: sq * e,
                    du,
                    dv: p.k2 * u + lin * du,
                    dw: (0.5 * dden / sq + sq * dsigma) * e,
                })
            }
        }
    }

    /// Residuals `(u' - rhs_u, v' - rhs_v, w' - rhs_w)` at `B`.
    pub fn residuals(&self, b_sq: f64) -> Result<[f64; 3]> {
        let g = self.eval(b_sq)?;
        let r = gauge_rhs(&self.params, b_sq, g.u, g.v, g.w);
        Ok([g.du - r[0], g.dv - r[1], g.dw - r[2]])
    }

    /// `(alpha^2, beta) -> (h^2, rho)` at `B`.
    pub fn transform(&self, alpha_sq: f64, beta: f64, b_sq: f64) -> Result<(f64, f64)> {
        if !(alpha_sq > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha^2 must be positive, got {alpha_sq}"
            )));
        }
        let g = self.eval(b_sq)?;
        let h_sq = g.u * alpha_sq + g.v * beta * beta;
        if !(h_sq > 0.0) {
            return Err(Error::NonPositiveResult(h_sq));
        }
        Ok((h_sq, g.w * beta))
    }

    /// `(h^2, rho) -> (alpha^2, beta)` at `B`.
    pub fn inverse_transform(&self, h_sq: f64, rho: f64, b_sq: f64) -> Result<(f64, f64)> {
        let g = self.eval(b_sq)?;
        let alpha_sq = (h_sq - g.v / (g.w * g.w) * rho * rho) / g.u;
        if !(alpha_sq > 0.0) {
            return Err(Error::NonPositiveResult(alpha_sq));
        }
        Ok((alpha_sq, rho / g.w))
    }

    /// `N(B) = w^2 B / (u + v B)`, the squared `h`-norm of `rho` as a function of `B`.
    pub fn norm_relation(&self, b_sq: f64) -> Result<f64> {
        let g = self.eval(b_sq)?;
        Ok(g.w * g.w * b_sq / (g.u + g.v * b_sq))
    }

    /// `dN/dB` from the identity `w^2 / (u p)`.
    pub fn norm_relation_derivative(&self, b_sq: f64) -> Result<f64> {
        let g = self.eval(b_sq)?;
        Ok(g.w * g.w / (g.u * self.params.denominator(b_sq)))
    }

    /// Supremum of `N` over the gauge range (attained iff the end is closed).
    pub fn norm_sup(&self) -> f64 {
        match self.kind {
            GaugeKind::Square { sign } => {
                let one_m = 1.0 - sign.value() * self.t_max;
                if one_m <= 0.0 {
                    f64::INFINITY
                } else {
                    self.t_max / one_m
                }
            }
            GaugeKind::Canonical if self.open_end() => self.t_max,
            _ => {
                let t = if self.open_end() {
                    self.t_max * (1.0 - 1e-14)
                } else {
                    self.t_max
                };
                self.eval_unchecked(t)
                    .map(|g| g.w * g.w * t / (g.u + g.v * t))
                    .unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Solve `N(B) = target` by bisection.
    pub fn invert_norm_relation(&self, target: f64) -> Result<f64> {
        let sup = self.norm_sup();
        let attainable = if self.open_end() {
            target < sup
        } else {
            target <= sup
        };
        if !(target >= 0.0) || !attainable {
            return Err(Error::TargetOutOfRange { target, sup });
        }
        if target == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.t_max;
        if self.open_end() {
            // walk towards the excluded end until the bracket closes over target
            let mut gap = 0.5 * self.t_max;
            loop {
                hi = self.t_max - gap;
                match self.norm_relation(hi) {
                    Ok(n) if n.is_finite() && n >= target => break,
                    _ if gap < 1e-15 * self.t_max => {
                        return Err(Error::TargetOutOfRange { target, sup });
                    }
                    _ => gap *= 0.5,
                }
            }
        }
        let b = roots::invert_increasing(
            |b| self.norm_relation(b).unwrap_or(f64::NAN),
            target,
            0.0,
            hi,
            1e-16 * hi.max(1.0),
        )?;
        Ok(b)
    }
}

/// `sigma(B) = 1/2 ∫_0^B (k2 t + k3) / p(t) dt`.
pub fn canonical_sigma(params: &MetricParams, b_sq: f64) -> Result<f64> {
    let p = *params;
    let q = Quadrature {
        abs_tol: 1e-13,
        rel_tol: 1e-15,
        ..Quadrature::default()
    };
    Ok(0.5
        * q.integrate(|t| (p.k2 * t + p.k3) / p.denominator(t), 0.0, b_sq)?
            .value)
}

fn integrate_gauge(
    params: &MetricParams,
    y0: [f64; 3],
    t_max: f64,
    rtol: f64,
) -> Result<DenseTrajectory> {
    let p = *params;
    let rhs = move |t: f64, y: &[f64]| -> Result<[f64; 3]> {
        if !(y[0] > 0.0) || y[2] == 0.0 || !y[2].is_finite() {
            return Err(Error::SolutionLeavesAdmissibleRegion { at: t });
        }
        Ok(gauge_rhs(&p, t, y[0], y[1], y[2]))
    };
    let mut sys = (3usize, |t: f64, y: &[f64], dy: &mut [f64]| {
        dy.copy_from_slice(&rhs(t, y)?);
        Ok(())
    });
    let mut nodes = Vec::new();
    let mut failure = None;
    let solver = Dopri5::new(rtol, 1e-14).with_h_max(t_max / 16.0);
    solver.integrate(&mut sys, 0.0, &y0, t_max, |t, y, dy| {
        if y[0] <= 0.0 || y[2].signum() != y0[2].signum() {
            failure.get_or_insert(t);
        }
        // second derivative by a central difference along the flow
        let eta = 1e-5 * t_max.max(1e-3);
        let ddy = match (
            rhs(
                t + eta,
                &[y[0] + eta * dy[0], y[1] + eta * dy[1], y[2] + eta * dy[2]],
            ),
            rhs(
                t - eta,
                &[y[0] - eta * dy[0], y[1] - eta * dy[1], y[2] - eta * dy[2]],
            ),
        ) {
            (Ok(a), Ok(b)) => (0..3).map(|i| (a[i] - b[i]) / (2.0 * eta)).collect(),
            _ => vec![0.0; 3],
        };
        nodes.push(Node {
            t,
            y: y.to_vec(),
            dy: dy.to_vec(),
            ddy,
        });
    })?;
    if let Some(at) = failure {
        return Err(Error::SolutionLeavesAdmissibleRegion { at });
    }
    DenseTrajectory::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_at_origin() {
        let p = MetricParams::new(0.7, 1.3, -0.2, 0.1).unwrap();
        let g = Gauge::canonical(p, 0.5).unwrap().eval(0.0).unwrap();
        assert_eq!((g.u, g.w), (1.0, 1.0));
        assert!((g.v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_values() {
        let g = Gauge::square(Sign::Minus, 0.0, 0.45)
            .unwrap()
            .eval(0.3)
            .unwrap();
        assert!((g.u - 1.69).abs() < 1e-15);
        assert_eq!(g.v, 0.0);
        assert!((g.w - 1.3f64.sqrt()).abs() < 1e-15);
        assert!(Gauge::square(Sign::Plus, 0.0, 1.2).is_err());
    }

    #[test]
    fn open_end_excluded() {
        let g = Gauge::square(Sign::Minus, 0.0, 0.5).unwrap();
        assert!(g.eval(0.5).is_err());
        assert!((g.norm_sup() - 1.0 / 3.0).abs() < 1e-15);
        assert!(g.invert_norm_relation(1.0 / 3.0).is_err());
        let b = g.invert_norm_relation(0.3).unwrap();
        assert!((b - 0.3 / 0.7).abs() < 1e-14);
    }

    #[test]
    fn ivp_rejects_bad_start() {
        let p = MetricParams::square(Sign::Plus, 0.0);
        assert!(Gauge::solve_ivp(p, 0.0, 0.0, 1.0, 0.3, 1e-9).is_err());
        assert!(Gauge::solve_ivp(p, 1.0, 0.0, 0.0, 0.3, 1e-9).is_err());
    }

    #[test]
    fn ivp_zero_range_is_initial_triple() {
        let p = MetricParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let g = Gauge::solve_ivp(p, 2.0, 0.5, -1.0, 0.0, 1e-9)
            .unwrap()
            .eval(0.0)
            .unwrap();
        assert_eq!((g.u, g.v, g.w), (2.0, 0.5, -1.0));
    }
}
