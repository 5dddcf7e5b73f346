//! The profile function `phi(s)` of an (alpha, beta)-metric `F = alpha * phi(beta/alpha)`.
//!
//! `phi` is the solution of the linear second-order problem
//!
//! ```text
//! (1 + (k1+k3) s^2 + k2 s^4) phi''(s) = (k1 + k2 s^2) (phi - s phi'),   phi(0) = 1, phi'(0) = eps
//! ```
//!
//! which characterises projectively flat (alpha, beta)-metrics of non-Randers
//! type. For `(k1, k2, k3) = (±2, 0, ∓3)` the solution is the general square
//! profile `1 + eps s ± s^2`, which is used in closed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{ode, DenseTrajectory, Dopri5, Node, Quadrature};

/// Relative tolerance of the φ integrator.
pub const PHI_RTOL: f64 = 1e-12;
/// Absolute tolerance of the φ integrator.
pub const PHI_ATOL: f64 = 1e-14;
/// Number of uniformly spaced points at which a solution's residual is checked.
pub const RESIDUAL_SAMPLES: usize = 1000;
/// Largest `b` probed when the algebraic regularity conditions never fail.
pub const PHI_POSITIVITY_CAP: f64 = 100.0;

/// Sign selecting the `F^+` or `F^-` square family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Constants `(k1, k2, k3)` of the defining ODE plus the initial slope
/// `epsilon = phi'(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub epsilon: f64,
}

impl MetricParams {
    /// Validated constructor; rejects the Randers case `k2 = k1 k3`.
    pub fn new(k1: f64, k2: f64, k3: f64, epsilon: f64) -> Result<Self> {
        if ![k1, k2, k3, epsilon].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "metric constants must be finite".into(),
            ));
        }
        let scale = 1.0 + k2.abs() + (k1 * k3).abs();
        if (k2 - k1 * k3).abs() <= 1e-14 * scale {
            return Err(Error::RandersType { k1, k2, k3 });
        }
        Ok(Self {
            k1,
            k2,
            k3,
            epsilon,
        })
    }

    /// The general square family `phi = 1 + eps s ± s^2`.
    pub fn square(sign: Sign, epsilon: f64) -> Self {
        let sg = sign.value();
        Self {
            k1: 2.0 * sg,
            k2: 0.0,
            k3: -3.0 * sg,
            epsilon,
        }
    }

    /// `1 + (k1+k3) θ + k2 θ^2`, evaluated at `θ = s^2` or `θ = b^2`.
    pub fn denominator(&self, theta: f64) -> f64 {
        1.0 + (self.k1 + self.k3) * theta + self.k2 * theta * theta
    }

    /// `Some(sign)` when the constants are exactly those of a square family.
    pub fn square_sign(&self) -> Option<Sign> {
        if self.k2 != 0.0 {
            return None;
        }
        if self.k1 == 2.0 && self.k3 == -3.0 {
            Some(Sign::Plus)
        } else if self.k1 == -2.0 && self.k3 == 3.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    /// Same constants, different slope.
    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    /// Minimum of the denominator over `θ ∈ [0, theta_max]`.
    pub(crate) fn min_denominator(&self, theta_max: f64) -> (f64, f64) {
        let mut best = (self.denominator(0.0), 0.0);
        let end = self.denominator(theta_max);
        if end < best.0 {
            best = (end, theta_max);
        }
        if self.k2 != 0.0 {
            let vertex = -(self.k1 + self.k3) / (2.0 * self.k2);
            if vertex > 0.0 && vertex < theta_max {
                let v = self.denominator(vertex);
                if v < best.0 {
                    best = (v, vertex);
                }
            }
        }
        best
    }

    /// Smallest positive root of `1 + (k1+k3) θ + k2 θ^2`, or +∞.
    pub(crate) fn denominator_first_root(&self) -> f64 {
        let (a, b) = (self.k2, self.k1 + self.k3);
        if a == 0.0 {
            return if b < 0.0 { -1.0 / b } else { f64::INFINITY };
        }
        let disc = b * b - 4.0 * a;
        if disc < 0.0 {
            return f64::INFINITY;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let mut roots = Vec::with_capacity(2);
        if q != 0.0 {
            roots.push(q / a);
            roots.push(1.0 / q);
        }
        roots
            .into_iter()
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `phi`, `phi'` and `phi''` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiValues {
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

impl PhiValues {
    /// `phi - s phi'`
    pub fn gap(&self, s: f64) -> f64 {
        self.phi - s * self.dphi
    }
}

#[derive(Debug, Clone)]
enum Representation {
    Closed(Sign),
    Numeric(DenseTrajectory),
}

/// An evaluable solution of the φ problem on `[-s_max, s_max]`.
#[derive(Debug, Clone)]
pub struct PhiSolution {
    params: MetricParams,
    s_max: f64,
    repr: Representation,
}

impl PhiSolution {
    /// Closed-form square profile `1 + eps s ± s^2` on `[-s_max, s_max]`.
    pub fn square(sign: Sign, epsilon: f64, s_max: f64) -> Self {
        Self {
            params: MetricParams::square(sign, epsilon),
            s_max,
            repr: Representation::Closed(sign),
        }
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Representation::Closed(_))
    }

    pub fn eval(&self, s: f64) -> Result<PhiValues> {
        if !(s.abs() <= self.s_max * (1.0 + 1e-9) + 1e-14) {
            return Err(Error::OutOfRegularRange {
                value: s,
                limit: self.s_max,
            });
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> PhiValues {
        match &self.repr {
            Representation::Closed(sign) => {
                let sg = sign.value();
                let eps = self.params.epsilon;
                PhiValues {
                    phi: 1.0 + eps * s + sg * s * s,
                    dphi: eps + 2.0 * sg * s,
                    ddphi: 2.0 * sg,
                }
            }
            Representation::Numeric(traj) => {
                let (phi, _) = traj.eval(0, s);
                let (dphi, ddphi) = traj.eval(1, s);
                PhiValues { phi, dphi, ddphi }
            }
        }
    }

    /// `|(1+(k1+k3)s^2+k2 s^4) phi'' - (k1 + k2 s^2)(phi - s phi')|` at `s`.
    pub fn residual(&self, s: f64) -> f64 {
        let v = self.eval_unchecked(s);
        ode_residual(&self.params, s, v)
    }

    /// Largest residual over `RESIDUAL_SAMPLES` uniform points.
    pub fn max_residual(&self) -> f64 {
        (0..RESIDUAL_SAMPLES)
            .map(|i| {
                let s = -self.s_max + 2.0 * self.s_max * i as f64 / (RESIDUAL_SAMPLES - 1) as f64;
                self.residual(s)
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn ode_residual(p: &MetricParams, s: f64, v: PhiValues) -> f64 {
    let s2 = s * s;
    (p.denominator(s2) * v.ddphi - (p.k1 + p.k2 * s2) * v.gap(s)).abs()
}

/// `phi''` and `phi'''` from `(phi, phi')` via the ODE and its derivative.
fn phi_higher(p: &MetricParams, s: f64, phi: f64, dphi: f64) -> (f64, f64) {
    let s2 = s * s;
    let f = p.denominator(s2);
    let df = 2.0 * (p.k1 + p.k3) * s + 4.0 * p.k2 * s2 * s;
    let g = p.k1 + p.k2 * s2;
    let dg = 2.0 * p.k2 * s;
    let m = phi - s * dphi;
    let dd = g * m / f;
    let ddd = (dg * m - g * s * dd - df * dd) / f;
    (dd, ddd)
}

fn integrate_half(params: &MetricParams, s_end: f64, rtol: f64, atol: f64) -> Result<Vec<Node>> {
    let p = *params;
    let mut sys = (2usize, move |s: f64, y: &[f64], dy: &mut [f64]| {
        let f = p.denominator(s * s);
        if f <= 0.0 {
            return Err(Error::DenominatorVanishes { at: s * s });
        }
        dy[0] = y[1];
        dy[1] = (p.k1 + p.k2 * s * s) * (y[0] - s * y[1]) / f;
        Ok(())
    });
    let mut nodes = Vec::new();
    let solver = Dopri5::new(rtol, atol).with_h_max((s_end.abs() / 16.0).max(1e-6));
    solver.integrate(&mut sys, 0.0, &[1.0, params.epsilon], s_end, |s, y, dy| {
        let (_, ddd) = phi_higher(&p, s, y[0], y[1]);
        nodes.push(Node {
            t: s,
            y: y.to_vec(),
            dy: dy.to_vec(),
            ddy: vec![dy[1], ddd],
        });
    })?;
    Ok(nodes)
}

fn numeric_solution(params: &MetricParams, s_max: f64, rtol: f64) -> Result<PhiSolution> {
    let mut nodes = integrate_half(params, s_max, rtol, PHI_ATOL)?;
    let neg = integrate_half(params, -s_max, rtol, PHI_ATOL)?;
    nodes.extend(neg.into_iter().skip(1));
    Ok(PhiSolution {
        params: *params,
        s_max,
        repr: Representation::Numeric(DenseTrajectory::new(nodes)?),
    })
}

/// `phi - s phi' = exp(-1/2 ∫_0^{s^2} (k1 + k2 θ)/(1 + (k1+k3)θ + k2 θ^2) dθ)`.
pub fn phi_gap_closed(params: &MetricParams, s: f64) -> Result<f64> {
    let q = Quadrature::with_tolerance(1e-14);
    let p = *params;
    let integral = q.integrate(|th| (p.k1 + p.k2 * th) / p.denominator(th), 0.0, s * s)?;
    Ok((-0.5 * integral.value).exp())
}

/// Solve the φ problem on `[-s_max, s_max]` with ODE residual below `tol`.
pub fn solve_phi(params: MetricParams, s_max: f64, tol: f64) -> Result<PhiSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "s_max must be positive, got {s_max}"
        )));
    }
    let (min_den, at) = params.min_denominator(s_max * s_max);
    if min_den <= 0.0 {
        return Err(Error::DenominatorVanishes { at });
    }
    if let Some(sign) = params.square_sign() {
        return Ok(PhiSolution::square(sign, params.epsilon, s_max));
    }

    let mut last_residual = f64::NAN;
    for rtol in [PHI_RTOL, PHI_RTOL * 1e-1, PHI_RTOL * 1e-2] {
        let sol = numeric_solution(&params, s_max, rtol)?;
        last_residual = sol.max_residual();
        if last_residual < tol {
            check_gap_identity(&sol)?;
            return Ok(sol);
        }
    }
    Err(Error::NonConvergence(format!(
        "phi residual {last_residual:e} above tolerance {tol:e}"
    )))
}

fn check_gap_identity(sol: &PhiSolution) -> Result<()> {
    for i in 0..=8 {
        let s = -sol.s_max + 2.0 * sol.s_max * i as f64 / 8.0;
        let v = sol.eval_unchecked(s);
        let gap = v.gap(s);
        let closed = phi_gap_closed(&sol.params, s)?;
        if gap <= 0.0 || ((gap - closed) / closed).abs() > 1e-8 {
            return Err(Error::NonConvergence(format!(
                "phi - s phi' = {gap} disagrees with closed form {closed} at s = {s}"
            )));
        }
    }
    Ok(())
}

/// Taylor coefficients `(c0, .., c4)` of `phi` at `s = 0`.
pub fn taylor_phi(params: &MetricParams) -> [f64; 5] {
    let MetricParams {
        k1,
        k2,
        k3,
        epsilon,
    } = *params;
    [
        1.0,
        epsilon,
        0.5 * k1,
        0.0,
        k2 / 12.0 - k1 * k1 / 8.0 - k1 * k3 / 12.0,
    ]
}

/// Supremum of `b^2` for which `F` is regular (possibly `+∞`).
///
/// Combines the algebraic conditions `1 + k1 b^2 > 0` and
/// `1 + (k1+k3)θ + k2 θ^2 > 0` on `[0, b^2]` with a positivity check of `phi`
/// on `|s| <= b`. A value of `+∞` means no violation was found for
/// `b <= PHI_POSITIVITY_CAP`.
pub fn regularity_range(params: &MetricParams) -> Result<f64> {
    let mut sup = params.denominator_first_root();
    if params.k1 < 0.0 {
        sup = sup.min(-1.0 / params.k1);
    }
    if !(sup > 0.0) {
        return Err(Error::NotRegularAtZero);
    }
    let b_check = if sup.is_finite() {
        sup.sqrt() * (1.0 - 1e-9)
    } else {
        PHI_POSITIVITY_CAP
    };
    if let Some(zero) = first_phi_zero(params, b_check)? {
        sup = sup.min(zero * zero);
    }
    Ok(sup)
}

/// Smallest `|s| <= b` with `phi(s) = 0`, if any.
fn first_phi_zero(params: &MetricParams, b: f64) -> Result<Option<f64>> {
    if let Some(sign) = params.square_sign() {
        return Ok(square_zero(sign.value(), params.epsilon).filter(|r| *r <= b));
    }
    let mut best: Option<f64> = None;
    for dir in [1.0, -1.0] {
        let nodes = match integrate_half(params, dir * b, 1e-11, 1e-13) {
            Ok(n) => n,
            Err(Error::DenominatorVanishes { .. }) => continue,
            Err(e) => return Err(e),
        };
        for pair in nodes.windows(2) {
            let (a, c) = (&pair[0], &pair[1]);
            if c.y[0] <= 0.0 {
                let left = [a.y[0], a.dy[0], a.ddy[0]];
                let right = [c.y[0], c.dy[0], c.ddy[0]];
                let root = crate::numerics::roots::bisect(
                    |s| ode::hermite5(a.t, c.t, left, right, s).0,
                    a.t,
                    c.t,
                    1e-14,
                )
                .unwrap_or(c.t);
                let r = root.abs();
                best = Some(best.map_or(r, |x: f64| x.min(r)));
                break;
            }
        }
    }
    Ok(best)
}

/// Smallest `|s|` with `1 + eps s + sg s^2 = 0`.
fn square_zero(sg: f64, eps: f64) -> Option<f64> {
    let disc = eps * eps - 4.0 * sg;
    if disc < 0.0 {
        return None;
    }
    // roots of sg s^2 + eps s + 1, via the cancellation-free form
    let q = -0.5
        * (eps
            + if eps >= 0.0 {
                disc.sqrt()
            } else {
                -disc.sqrt()
            });
    let mut best: Option<f64> = None;
    for r in [q / sg, if q != 0.0 { 1.0 / q } else { f64::INFINITY }] {
        if r.is_finite() {
            best = Some(best.map_or(r.abs(), |x: f64| x.min(r.abs())));
        }
    }
    best
}

/// The constant `b̂` below which every `(alpha, beta)` pair yields a regular
/// metric: `sqrt` of [`regularity_range`].
pub fn b_hat(phi: &PhiSolution) -> Result<f64> {
    Ok(regularity_range(&phi.params)?.sqrt())
}

/// Whether `phi > 0`, `phi - s phi' > 0` and
/// `phi - s phi' + (b^2 - s^2) phi'' > 0` hold on a grid of `|s| <= b`.
pub fn regular_at<F: Fn(f64) -> PhiValues>(profile: &F, b: f64) -> bool {
    const N: usize = 400;
    (0..=N).chain(std::iter::once(N / 2)).all(|i| {
        let s = -b + 2.0 * b * i as f64 / N as f64;
        let s = if i == N / 2 { 0.0 } else { s };
        let v = profile(s);
        v.phi > 0.0 && v.gap(s) > 0.0 && v.gap(s) + (b * b - s * s) * v.ddphi > 0.0
    })
}

/// `b̂` for an arbitrary profile, found from the three pointwise regularity
/// inequalities directly (no ODE structure assumed). Scans `b` upward in steps
/// of `1e-3` up to `b_cap` and bisects the first failure.
pub fn regularity_radius_direct<F: Fn(f64) -> PhiValues>(profile: &F, b_cap: f64) -> f64 {
    const STEP: f64 = 1e-3;
    let mut prev = 0.0;
    let mut b = STEP;
    while b <= b_cap {
        if !regular_at(profile, b) {
            let (mut lo, mut hi) = (prev, b);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if regular_at(profile, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev = b;
        b += STEP;
    }
    f64::INFINITY
}
