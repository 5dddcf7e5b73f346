//! Sprays, geodesics and closed-geodesic lengths.
//!
//! In the gnomonic chart the metric `F` is projectively flat: its spray is
//! `G^i = P y^i` with the projective factor `P` of [`projective_factor`], so
//! `F`-geodesics are great circles traversed at a non-uniform speed.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::canonical_sigma;
use crate::numerics::{Dopri5, OdeSystem, Quadrature};
use crate::phi::{regularity_range, solve_phi, MetricParams, PhiValues, Sign};
use crate::sphere::{Frame, NavigationBundle, PointMetric, SphereData};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The scalar functions of `(s, b^2)` entering the spray of an (alpha, beta)-metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SprayData {
    pub q: f64,
    pub dq: f64,
    pub theta: f64,
    pub psi: f64,
    pub delta: f64,
}

impl SprayData {
    pub fn new(s: f64, b_sq: f64, v: PhiValues) -> Self {
        let gap = v.gap(s);
        let q = v.dphi / gap;
        let dq = v.phi * v.ddphi / (gap * gap);
        let delta = 1.0 + s * q + (b_sq - s * s) * dq;
        Self {
            q,
            dq,
            theta: (q - s * dq) / (2.0 * delta),
            psi: dq / (2.0 * delta),
            delta,
        }
    }
}

/// The scalar `tau` with `b_{i|j} = tau {(1 + k1 b^2) a_ij + (k2 b^2 + k3) b_i b_j}`.
pub fn tau(bundle: &NavigationBundle, x: &[f64], m: &PointMetric) -> f64 {
    let sp = bundle.sphere();
    (sp.k - sp.mu * dot(&sp.xi, x)) / sp.q(x).sqrt() * m.gauge.u / m.gauge.w
}

/// The 1-form `theta` evaluated on `y`.
pub fn theta_value(bundle: &NavigationBundle, x: &[f64], y: &[f64], m: &PointMetric) -> f64 {
    let sp = bundle.sphere();
    let k1 = bundle.params().k1;
    let g = m.gauge;
    (k1 * g.u - g.v) * tau(bundle, x, m) * m.beta / g.u - sp.mu * dot(x, y) / sp.q(x)
}

/// `P(x, y)` with `G^i = P y^i`.
pub fn projective_factor(bundle: &NavigationBundle, x: &[f64], y: &[f64]) -> Result<f64> {
    let m = bundle.reconstruct(x, y)?;
    Ok(projective_factor_at(bundle, x, y, &m))
}

pub(crate) fn projective_factor_at(
    bundle: &NavigationBundle,
    x: &[f64],
    y: &[f64],
    m: &PointMetric,
) -> f64 {
    let p = bundle.params();
    let s = m.s;
    let s2 = s * s;
    let bracket = p.denominator(s2) * m.phi.dphi / m.phi.phi - (p.k1 + p.k2 * s2) * s;
    theta_value(bundle, x, y, m) + 0.5 * tau(bundle, x, m) * bracket * m.alpha
}

/// Spray coefficients assembled term by term from the spray of `alpha`, the
/// functions of [`SprayData`] and `r_00`; equals `P y` for these metrics.
pub fn spray_assembled(bundle: &NavigationBundle, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = bundle.reconstruct(x, y)?;
    let p = bundle.params();
    let t = tau(bundle, x, &m);
    let th = theta_value(bundle, x, y, &m);
    let a = bundle.alpha_matrix(x)?;
    let b = DVector::from_vec(bundle.beta_form(x)?);
    let b_up = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NonConvergence("alpha matrix is singular".into()))?;
    let (al, be) = (m.alpha, m.beta);
    let sd = SprayData::new(m.s, m.b_sq, m.phi);
    let r00 = t * ((1.0 + p.k1 * m.b_sq) * al * al + (p.k2 * m.b_sq + p.k3) * be * be);
    let half_b = 0.5 * t * (p.k1 * al * al + p.k2 * be * be);
    Ok((0..y.len())
        .map(|i| th * y[i] - half_b * b_up[i] + sd.theta * r00 * y[i] / al + sd.psi * r00 * b_up[i])
        .collect())
}

/// Which metric a geodesic follows; the parameter is that metric's arclength.
#[derive(Debug, Clone)]
pub enum GeodesicMetric {
    Finsler(NavigationBundle),
    Riemannian(SphereData),
}

impl GeodesicMetric {
    fn sphere(&self) -> &SphereData {
        match self {
            GeodesicMetric::Finsler(b) => b.sphere(),
            GeodesicMetric::Riemannian(s) => s,
        }
    }

    fn in_frame(&self, frame: &Frame) -> Self {
        match self {
            GeodesicMetric::Finsler(b) => GeodesicMetric::Finsler(b.in_frame(frame)),
            GeodesicMetric::Riemannian(s) => GeodesicMetric::Riemannian(frame.localize(s)),
        }
    }

    /// Speed of `(x, y)` in this metric.
    pub fn speed(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            GeodesicMetric::Finsler(b) => b.metric(x, y),
            GeodesicMetric::Riemannian(s) => Ok(s.h(x, y)),
        }
    }

    /// The projective factor: `x'' = -2 P x'`.
    fn factor(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            GeodesicMetric::Finsler(b) => projective_factor(b, x, y),
            GeodesicMetric::Riemannian(s) => Ok(-s.mu * dot(x, y) / s.q(x)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    HArclength,
    FArclength,
}

/// A point of a geodesic in the embedding of the sphere as the round sphere of
/// radius `1/sqrt(mu)` in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicPath {
    pub parameter: Parameter,
    pub samples: Vec<GeodesicSample>,
    /// Parameter value of the first return to the start, when requested.
    pub period: Option<f64>,
    /// Ambient distance between start and return point.
    pub closure_error: Option<f64>,
    pub chart_switches: usize,
}

/// Default integration tolerance for geodesics.
pub const GEODESIC_TOL: f64 = 1e-10;

/// Integrate the geodesic from `(x0, y0)` for parameter length `t_end`.
pub fn integrate_geodesic(
    metric: &GeodesicMetric,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    tol: f64,
) -> Result<GeodesicPath> {
    trace(metric, x0, y0, t_end, tol, false)
}

/// Integrate until the geodesic first returns to `x0` (at most `t_cap`).
pub fn closed_geodesic(
    metric: &GeodesicMetric,
    x0: &[f64],
    y0: &[f64],
    t_cap: f64,
    tol: f64,
) -> Result<GeodesicPath> {
    let path = trace(metric, x0, y0, t_cap, tol, true)?;
    if path.period.is_none() {
        return Err(Error::NonConvergence(format!(
            "geodesic did not return within parameter length {t_cap}"
        )));
    }
    Ok(path)
}

struct Chart {
    frame: Frame,
    metric: GeodesicMetric,
}

impl Chart {
    fn sample(&self, t: f64, state: &[f64], mu: f64) -> GeodesicSample {
        let n = state.len() / 2;
        let (p, dp) = self.frame.to_ambient(&state[..n], &state[n..]);
        let r = mu.sqrt();
        GeodesicSample {
            t,
            position: p.iter().map(|v| v / r).collect(),
            velocity: dp.iter().map(|v| v / r).collect(),
        }
    }
}

fn rhs_for(metric: &GeodesicMetric) -> impl OdeSystem + '_ {
    let n = metric.sphere().dim();
    (2 * n, move |_t: f64, st: &[f64], d: &mut [f64]| {
        let (x, y) = st.split_at(n);
        let p = metric.factor(x, y)?;
        for i in 0..n {
            d[i] = y[i];
            d[n + i] = -2.0 * p * y[i];
        }
        Ok(())
    })
}

fn trace(
    metric: &GeodesicMetric,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    tol: f64,
    detect_closure: bool,
) -> Result<GeodesicPath> {
    let sphere = metric.sphere();
    let n = sphere.dim();
    let mu = sphere.mu;
    if x0.len() != n || y0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "point and vector must have dimension {n}"
        )));
    }
    if y0.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidArgument(
            "initial vector must be non-zero".into(),
        ));
    }
    if !(tol > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(
            "tolerance and parameter length must be positive".into(),
        ));
    }
    let parameter = match metric {
        GeodesicMetric::Finsler(_) => Parameter::FArclength,
        GeodesicMetric::Riemannian(_) => Parameter::HArclength,
    };
    let speed = metric.speed(x0, y0)?;
    let mut chart = Chart {
        frame: Frame::identity(n, mu),
        metric: metric.clone(),
    };
    let mut state: Vec<f64> = x0.to_vec();
    state.extend(y0.iter().map(|v| v / speed));
    if sphere.q(x0) > 2.0 {
        // start in a chart centred at x0
        chart = recentre(&chart, metric, &mut state, mu)?;
    }
    let start = chart.sample(0.0, &state, mu);
    let x_start = DVector::from_vec(start.position.clone());
    let t_dir = {
        let v = DVector::from_vec(start.velocity.clone());
        v.normalize()
    };
    let event = |s: &GeodesicSample| (DVector::from_vec(s.position.clone()) - &x_start).dot(&t_dir);

    let solver = Dopri5::new(tol, tol * 1e-2).with_h_max(0.05 / mu.sqrt());
    let mut samples = vec![start.clone()];
    let mut t = 0.0;
    let mut h = 1e-3 / mu.sqrt();
    let mut switches = 0usize;
    let mut armed = false;
    let mut period = None;
    let mut closure_error = None;
    let mut dy = vec![0.0; 2 * n];
    rhs_for(&chart.metric).rhs(t, &state, &mut dy)?;
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > solver.max_steps {
            return Err(Error::NonConvergence(format!(
                "geodesic step limit reached at t = {t}"
            )));
        }
        let h_try = h.min(t_end - t);
        let mut sys = rhs_for(&chart.metric);
        let trial = match solver.attempt(&mut sys, t, &state, &dy, h_try) {
            Ok(tr) => tr,
            Err(Error::OutOfRegularRange { .. }) | Err(Error::NonPositiveResult(_)) => {
                // a stage point strayed too far; retry with a smaller step
                h = 0.25 * h_try;
                if h < 1e-14 {
                    return Err(Error::ChartExit(format!("step collapsed at t = {t}")));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if trial.err > 1.0 {
            h = solver.next_h(h_try, trial.err);
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(Error::NonConvergence(format!(
                    "step size underflow at t = {t}"
                )));
            }
            continue;
        }
        let next = chart.sample(t + h_try, &trial.y, mu);
        if detect_closure {
            let dist = (DVector::from_vec(next.position.clone()) - &x_start).norm();
            if !armed && dist * mu.sqrt() > 1.0 {
                armed = true;
            }
            let g_prev = event(samples.last().unwrap());
            let g_next = event(&next);
            if armed && g_prev < 0.0 && g_next >= 0.0 {
                // bisect on the sub-step length from the last accepted state
                let (mut lo, mut hi) = (0.0, h_try);
                let mut best = trial.y.clone();
                for _ in 0..200 {
                    if hi - lo <= 1e-15 * (t + h_try).max(1.0) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let sub = solver.attempt(&mut sys, t, &state, &dy, mid)?;
                    let g = event(&chart.sample(t + mid, &sub.y, mu));
                    if g < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                        best = sub.y;
                    }
                }
                let end = chart.sample(t + hi, &best, mu);
                closure_error = Some((DVector::from_vec(end.position.clone()) - &x_start).norm());
                period = Some(t + hi);
                samples.push(end);
                return Ok(GeodesicPath {
                    parameter,
                    samples,
                    period,
                    closure_error,
                    chart_switches: switches,
                });
            }
        }
        drop(sys);
        t += h_try;
        state = trial.y;
        dy = trial.dy;
        samples.push(next);
        h = solver.next_h(h_try, trial.err);
        if sphere.mu * dot(&state[..n], &state[..n]) > 1.0 {
            chart = recentre(&chart, metric, &mut state, mu)?;
            rhs_for(&chart.metric).rhs(t, &state, &mut dy)?;
            switches += 1;
        }
    }
    Ok(GeodesicPath {
        parameter,
        samples,
        period,
        closure_error,
        chart_switches: switches,
    })
}

/// Move to the chart centred at the current point.
fn recentre(chart: &Chart, base: &GeodesicMetric, state: &mut [f64], mu: f64) -> Result<Chart> {
    let n = state.len() / 2;
    let (p, dp) = chart.frame.to_ambient(&state[..n], &state[n..]);
    let frame = Frame::centered_at(&p, mu);
    let (x, y) = frame
        .from_ambient(&p, &dp)
        .ok_or_else(|| Error::ChartExit("recentred chart does not contain the point".into()))?;
    state[..n].copy_from_slice(&x);
    state[n..].copy_from_slice(&y);
    Ok(Chart {
        metric: base.in_frame(&frame),
        frame,
    })
}

/// A `delta` together with the gauge that normalises it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugedDelta {
    pub value: f64,
    pub gauge: DeltaGauge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaGauge {
    Canonical,
    Square,
}

impl GaugedDelta {
    pub fn canonical(value: f64) -> Self {
        Self {
            value,
            gauge: DeltaGauge::Canonical,
        }
    }

    pub fn square(value: f64) -> Self {
        Self {
            value,
            gauge: DeltaGauge::Square,
        }
    }

    fn expect(self, gauge: DeltaGauge) -> Result<f64> {
        if self.gauge != gauge {
            return Err(Error::GaugeMismatch(format!(
                "expected a {gauge:?} delta, got a {:?} delta",
                self.gauge
            )));
        }
        if !(self.value >= 0.0) || !self.value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta must be non-negative, got {}",
                self.value
            )));
        }
        Ok(self.value)
    }

    /// Difference of two deltas of the same gauge.
    pub fn difference(self, other: GaugedDelta) -> Result<f64> {
        Ok(self.value - other.expect(self.gauge)?)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    Ok(())
}

fn canonical_b_sq_max(params: &MetricParams, mu: f64, delta: f64) -> Result<f64> {
    let b_sq = 4.0 * delta * delta / (mu * mu);
    let sup = regularity_range(params)?;
    if b_sq >= sup {
        return Err(Error::OutOfRegularRange {
            value: b_sq,
            limit: sup,
        });
    }
    Ok(b_sq)
}

/// Length of the closed geodesic through the poles, as the integral of
/// `F` along the great circle in the canonical gauge.
pub fn length_l1(params: &MetricParams, mu: f64, delta: GaugedDelta, tol: f64) -> Result<f64> {
    check_mu(mu)?;
    let delta = delta.expect(DeltaGauge::Canonical)?;
    let b_sq_max = canonical_b_sq_max(params, mu, delta)?;
    let period = 2.0 * std::f64::consts::PI / mu.sqrt();
    if delta == 0.0 {
        return Ok(period);
    }
    let s_max = b_sq_max.sqrt();
    let phi = solve_phi(*params, s_max, 1e-10)?;
    let rm = mu.sqrt();
    let q = Quadrature::with_tolerance(tol);
    let mut failure = None;
    let value = q
        .integrate(
            |t| {
                let sn = (rm * t).sin();
                let s = (-2.0 * delta * sn / mu).clamp(-s_max, s_max);
                let b_sq = (4.0 * delta * delta * sn * sn / (mu * mu)).min(b_sq_max);
                let sigma = match canonical_sigma(params, b_sq) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                };
                let ph = phi.eval_unchecked(s).phi;
                ph / (params.denominator(b_sq).sqrt() * sigma.exp())
            },
            0.0,
            period,
        )?
        .value;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value)
}

/// Closed form of the same length: `(2 pi/sqrt(mu)) exp(-sigma(4 delta^2/mu^2))`.
pub fn length_l2(params: &MetricParams, mu: f64, delta: GaugedDelta) -> Result<f64> {
    check_mu(mu)?;
    let delta = delta.expect(DeltaGauge::Canonical)?;
    let b_sq = canonical_b_sq_max(params, mu, delta)?;
    let sigma = canonical_sigma(params, b_sq)?;
    Ok(2.0 * std::f64::consts::PI / mu.sqrt() * (-sigma).exp())
}

/// Expansion of the closed-geodesic length through `delta^4`.
pub fn series_l(params: &MetricParams, mu: f64, delta: GaugedDelta) -> Result<f64> {
    check_mu(mu)?;
    let d = delta.expect(DeltaGauge::Canonical)?;
    let MetricParams { k1, k2, k3, .. } = *params;
    let pi = std::f64::consts::PI;
    let rm = mu.sqrt();
    let d2 = d * d;
    Ok(2.0 * pi / rm - 4.0 * k3 * pi * d2 / (mu * mu * rm)
        + 4.0 * (3.0 * k3 * k3 + 2.0 * k1 * k3 - 2.0 * k2) * pi * d2 * d2 / (mu.powi(4) * rm))
}

/// Closed-geodesic length of the square families in the square gauge:
/// `2 pi/sqrt(mu) ± 8 pi delta^2 / (mu^2 sqrt(mu))`.
pub fn length_square(sign: Sign, mu: f64, delta: GaugedDelta) -> Result<f64> {
    check_mu(mu)?;
    let d = delta.expect(DeltaGauge::Square)?;
    if sign == Sign::Minus && mu * mu <= 12.0 * d * d {
        return Err(Error::OutOfRegularRange {
            value: 4.0 * d * d / (mu * mu),
            limit: 1.0 / 3.0,
        });
    }
    let pi = std::f64::consts::PI;
    Ok(2.0 * pi / mu.sqrt() + sign.value() * 8.0 * pi * d * d / (mu * mu * mu.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Gauge;

    #[test]
    fn gauge_tags_are_enforced() {
        let p = MetricParams::square(Sign::Plus, 0.0);
        assert!(matches!(
            length_l2(&p, 1.0, GaugedDelta::square(0.1)),
            Err(Error::GaugeMismatch(_))
        ));
        assert!(matches!(
            length_square(Sign::Plus, 1.0, GaugedDelta::canonical(0.1)),
            Err(Error::GaugeMismatch(_))
        ));
        assert!(GaugedDelta::canonical(0.1)
            .difference(GaugedDelta::square(0.1))
            .is_err());
    }

    #[test]
    fn square_length_formula() {
        let l = length_square(Sign::Plus, 1.0, GaugedDelta::square(0.1)).unwrap();
        assert!((l - (2.0 + 0.08) * std::f64::consts::PI).abs() < 1e-14);
        assert!(length_square(Sign::Minus, 1.0, GaugedDelta::square(0.3)).is_err());
    }

    #[test]
    fn riemannian_factor_without_field() {
        let sphere = SphereData::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let gauge = Gauge::square(Sign::Plus, 0.0, 1.0).unwrap();
        let bundle = NavigationBundle::new(sphere, gauge).unwrap();
        let (x, y) = ([0.3, -0.2], [0.5, 0.7]);
        let p = projective_factor(&bundle, &x, &y).unwrap();
        let q = 1.0 + 0.09 + 0.04;
        assert!((p + (0.15 - 0.14) / q).abs() < 1e-15);
    }

    #[test]
    fn great_circle_closes() {
        let sphere = SphereData::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        let path = closed_geodesic(
            &GeodesicMetric::Riemannian(sphere),
            &[0.0, 0.0],
            &[1.0, 0.0],
            10.0,
            1e-10,
        )
        .unwrap();
        assert!((path.period.unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-8);
        assert!(path.chart_switches > 0);
    }
}
