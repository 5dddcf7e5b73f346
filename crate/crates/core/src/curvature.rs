//! Scalar flag curvature.
//!
//! Three evaluation routes are provided:
//!
//! * pointwise from the projective factor, `K = (P^2 - P_{x^k} y^k) / F^2`
//!   ([`flag_curvature`]), with `P_{x^k} y^k` in closed form and checked
//!   against a finite difference of `P`;
//! * the reduced function `R(s, t)` with `K = R(beta/alpha, c^2)` on the
//!   domain `D`, and its reparametrisation `R~(s, t)` on `D~`
//!   ([`CurvatureModel`]);
//! * the closed form for the square families ([`square_curvature`]).
//!
//! [`extrema`] searches a domain for the extreme values of `R` or `R~`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{Gauge, GaugeValues};
use crate::geodesic::{projective_factor, projective_factor_at, tau, theta_value};
use crate::numerics::optimize::{golden_min, nelder_mead_box, stationary_point};
use crate::phi::{solve_phi, MetricParams, PhiSolution, PhiValues, Sign};
use crate::sphere::NavigationBundle;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tolerance above which the two pointwise routes are reported as disagreeing.
pub const ROUTE_TOL: f64 = 1e-4;

/// Value of `K` at `(x, y)` from the closed-form derivative of `P`, and the
/// finite-difference cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagCurvature {
    pub k: f64,
    pub k_finite_difference: f64,
    /// `(s, t) = (beta/alpha, c^2)` of the point.
    pub s: f64,
    pub t: f64,
}

/// `(4 f1 - f2^2) / s^2` as an exact polynomial.
fn reduced_discriminant(p: &MetricParams, s2: f64) -> f64 {
    let MetricParams { k1, k2, k3, .. } = *p;
    4.0 * k3 + (8.0 * k2 - k1 * k1) * s2 + 2.0 * k1 * k2 * s2 * s2 - k2 * k2 * s2 * s2 * s2
}

/// The reduced curvature function at `s` with gauge values `g`, weight `t`
/// (which is `c^2` on `D` and `A` on `D~`) and profile values `v = phi(s)`.
pub fn r_formula(
    p: &MetricParams,
    mu: f64,
    s: f64,
    weight: f64,
    g: &GaugeValues,
    v: &PhiValues,
) -> f64 {
    let s2 = s * s;
    let f1 = p.denominator(s2);
    let f2 = p.k2 * s2 * s2 - p.k1 * s2 - 2.0;
    let f3 = 3.0 * p.k2 * s2 + p.k1 + 3.0 * p.k3;
    let (ph, dph) = (v.phi, v.dphi);
    let ratio = f1 * dph / ph;
    let brace = 3.0 * g.u * (ratio * ratio + reduced_discriminant(p, s2))
        + 2.0 * (g.u * f3 - g.v) * (f2 - ratio * s);
    g.u / (ph * ph * g.w * g.w) * brace * weight
        + mu * g.u * (f1 * s * dph - f2 * ph) / (2.0 * ph * ph * ph)
}

/// Closed-form curvature of the square families `1 + eps s ± s^2` in the
/// square gauge, as a function of `s = beta/alpha` and `c^2`.
pub fn square_curvature(sign: Sign, epsilon: f64, mu: f64, delta: f64, s: f64, c_sq: f64) -> f64 {
    let sg = sign.value();
    let e = epsilon;
    let s2 = s * s;
    let phi = 1.0 + e * s + sg * s2;
    let one = 1.0 - sg * s2;
    let num = 6.0 * mu * (e * e - 4.0 * sg) * one * one * c_sq
        + (mu * mu + sg * 4.0 * delta * delta)
            * (sg * e * s2 * s + sg * 6.0 * s2 + 3.0 * e * s + 2.0)
            * phi;
    let base = mu / 4.0 + sg * delta * delta / mu - sg * c_sq;
    num / (128.0 / (mu * mu) * base.powi(3) * phi.powi(4))
}

/// Curvature at `(x, y)` from the projective factor.
pub fn flag_curvature(bundle: &NavigationBundle, x: &[f64], y: &[f64]) -> Result<FlagCurvature> {
    let sphere = bundle.sphere();
    let p = bundle.params();
    let mu = sphere.mu;
    let m = bundle.reconstruct(x, y)?;
    let (al, be, s) = (m.alpha, m.beta, m.s);
    let s2 = s * s;
    let g = m.gauge;
    let (u, v, w) = (g.u, g.v, g.w);
    let tau = tau(bundle, x, &m);
    let theta = theta_value(bundle, x, y, &m);
    let q = sphere.q(x);
    let sq = q.sqrt();
    let xy = dot(x, y);
    let lin = sphere.k - mu * dot(&sphere.xi, x);
    let tau_dot = tau * tau * (p.k3 * u - v) * be / u
        - mu * u / (w * sq) * (lin * xy / q + dot(&sphere.xi, y));
    let theta_dot = (p.k1 * u - v) / u
        * (tau * tau * al * al + tau_dot * be + 2.0 * tau * theta * be)
        + (p.k1 * p.k3 - 2.0 * p.k2 + (p.k3 + 2.0 * p.k1) * v / u - 2.0 * v * v / (u * u))
            * tau
            * tau
            * be
            * be
        - mu * (q * dot(y, y) - 2.0 * mu * xy * xy) / (q * q);
    let (ph, dph) = (m.phi.phi, m.phi.dphi);
    let f1 = p.denominator(s2);
    let k = (theta * theta - theta_dot) / (al * al * ph * ph)
        + ((p.k1 + p.k2 * s2) * s - f1 * dph / ph) * tau_dot / (2.0 * ph * ph * al)
        - f1 * (p.k1 + 2.0 * p.k3 + 3.0 * p.k2 * s2) * s * tau * tau * dph / (2.0 * ph.powi(3))
        + f1 * f1 * 3.0 * tau * tau * dph * dph / (4.0 * ph.powi(4))
        + (4.0 * p.k2 - p.k1 * p.k1
            + 2.0 * p.k2 * (p.k1 + 2.0 * p.k3) * s2
            + 3.0 * p.k2 * p.k2 * s2 * s2)
            * s2
            * tau
            * tau
            / (4.0 * ph * ph);

    // P_{x^k} y^k by a fourth-order central difference along y
    let scale = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let eta = 1e-4 / (scale * mu.sqrt());
    let shifted = |e: f64| -> Result<f64> {
        let xe: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi + e * yi).collect();
        projective_factor(bundle, &xe, y)
    };
    let dp = (-shifted(2.0 * eta)? + 8.0 * shifted(eta)? - 8.0 * shifted(-eta)?
        + shifted(-2.0 * eta)?)
        / (12.0 * eta);
    let pp = projective_factor_at(bundle, x, y, &m);
    let k_fd = (pp * pp - dp) / (m.f * m.f);
    if (k - k_fd).abs() > ROUTE_TOL * k.abs().max(1.0) {
        return Err(Error::RouteDisagreement {
            route_a: "closed-form derivative of P",
            a: k,
            route_b: "finite difference of P",
            b: k_fd,
        });
    }
    Ok(FlagCurvature {
        k,
        k_finite_difference: k_fd,
        s,
        t: m.c * m.c,
    })
}

/// Which of the two parametrisations of the curvature domain is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `{0 <= t <= delta^2/mu, s^2 <= B(t)}` with `t = c^2`.
    D,
    /// `{0 <= t <= t_o, |s| <= t}` with `t = b`.
    DTilde,
}

/// The reduced curvature function of a metric on a sphere.
#[derive(Debug, Clone)]
pub struct CurvatureModel {
    gauge: Arc<Gauge>,
    phi: Arc<PhiSolution>,
    mu: f64,
    delta: f64,
    t_o: f64,
}

/// Gauge data at one value of `t`, shared by every `s` of that row.
#[derive(Debug, Clone, Copy)]
struct Row {
    t: f64,
    bound: f64,
    weight: f64,
    g: GaugeValues,
}

impl CurvatureModel {
    pub fn new(gauge: Gauge, mu: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0) || !(delta >= 0.0) || !mu.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need mu > 0 and delta >= 0, got ({mu}, {delta})"
            )));
        }
        let target = 4.0 * delta * delta / (mu * mu);
        let b_sq_max = gauge.invert_norm_relation(target).map_err(|e| match e {
            Error::TargetOutOfRange { target, sup } => Error::RegularityViolated(format!(
                "4 delta^2/mu^2 = {target} is not below the norm-relation supremum {sup}"
            )),
            other => other,
        })?;
        let params = *gauge.params();
        let t_o = b_sq_max.sqrt();
        let s_max = (t_o * (1.0 + 1e-9))
            .max(1e-3)
            .min(gauge.regular_sup().sqrt());
        let phi = match params.square_sign() {
            Some(sign) => PhiSolution::square(sign, params.epsilon, s_max),
            None => solve_phi(params, s_max, 1e-9)?,
        };
        Ok(Self {
            gauge: Arc::new(gauge),
            phi: Arc::new(phi),
            mu,
            delta,
            t_o,
        })
    }

    pub fn from_bundle(bundle: &NavigationBundle) -> Result<Self> {
        Self::new(bundle.gauge().clone(), bundle.sphere().mu, bundle.delta())
    }

    pub fn params(&self) -> &MetricParams {
        self.gauge.params()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `t_o` with `N(t_o^2) = 4 delta^2 / mu^2`.
    pub fn t_o(&self) -> f64 {
        self.t_o
    }

    /// Upper end of the `t` range of a domain.
    pub fn t_max(&self, kind: DomainKind) -> f64 {
        match kind {
            DomainKind::D => self.delta * self.delta / self.mu,
            DomainKind::DTilde => self.t_o,
        }
    }

    /// `B(t)` on `D`: the solution of `N(B) = 4 (delta^2 - mu t) / mu^2`.
    pub fn b_of_t(&self, t: f64) -> Result<f64> {
        let target = (4.0 * (self.delta * self.delta - self.mu * t) / (self.mu * self.mu)).max(0.0);
        self.gauge.invert_norm_relation(target)
    }

    fn row(&self, kind: DomainKind, t: f64) -> Result<Row> {
        let t_max = self.t_max(kind);
        if !(t >= -1e-15) || t > t_max * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideDomain { s: f64::NAN, t });
        }
        let t = t.clamp(0.0, t_max);
        match kind {
            DomainKind::D => {
                let b_sq = self.b_of_t(t)?;
                Ok(Row {
                    t,
                    bound: b_sq.sqrt(),
                    weight: t,
                    g: self.gauge.eval(b_sq)?,
                })
            }
            DomainKind::DTilde => {
                let b_sq = t * t;
                let g = self.gauge.eval(b_sq)?;
                let n = g.w * g.w * b_sq / (g.u + g.v * b_sq);
                let weight =
                    ((self.delta * self.delta - self.mu * self.mu / 4.0 * n) / self.mu).max(0.0);
                Ok(Row {
                    t,
                    bound: t,
                    weight,
                    g,
                })
            }
        }
    }

    fn eval_row(&self, row: &Row, s: f64) -> f64 {
        let v = self.phi.eval_unchecked(s);
        r_formula(self.params(), self.mu, s, row.weight, &row.g, &v)
    }

    fn eval_in(&self, kind: DomainKind, s: f64, t: f64) -> Result<f64> {
        let row = self.row(kind, t)?;
        if s.abs() > row.bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideDomain { s, t });
        }
        Ok(self.eval_row(&row, s))
    }

    /// `R(s, t)` on `D`.
    pub fn r_eval(&self, s: f64, t: f64) -> Result<f64> {
        self.eval_in(DomainKind::D, s, t)
    }

    /// `R~(s, t)` on `D~`.
    pub fn r_tilde_eval(&self, s: f64, t: f64) -> Result<f64> {
        self.eval_in(DomainKind::DTilde, s, t)
    }

    /// Evaluate at normalised coordinates `sigma = s / bound(t)`.
    fn eval_normalised(&self, kind: DomainKind, sigma: f64, t: f64) -> f64 {
        match self.row(kind, t) {
            Ok(row) => self.eval_row(&row, sigma.clamp(-1.0, 1.0) * row.bound),
            Err(_) => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremaMethod {
    GridRefine,
    ClosedForm,
}

/// A critical point of the curvature restricted to a boundary piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCritical {
    pub piece: &'static str,
    pub s: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagCurvatureReport {
    pub min: f64,
    pub max: f64,
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
    pub method: ExtremaMethod,
    /// The function that produced the values: `R` (on `D`) or `R~` (on `D~`).
    pub route: &'static str,
    pub boundary_diagnostics: Vec<BoundaryCritical>,
}

/// Resolution of the extrema search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExtremaOptions {
    /// Grid points per axis of the interior scan (odd keeps `s = 0` on it).
    pub grid: usize,
    /// Samples per boundary piece before refinement.
    pub boundary_samples: usize,
}

impl Default for ExtremaOptions {
    fn default() -> Self {
        Self {
            grid: 801,
            boundary_samples: 2001,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    s: f64,
    t: f64,
}

fn better(a: &Candidate, b: &Candidate, sign: f64) -> bool {
    let (va, vb) = (sign * a.value, sign * b.value);
    if va != vb {
        return va < vb;
    }
    (a.s, a.t) < (b.s, b.t)
}

/// Extrema of `R` on `D` or of `R~` on `D~`.
pub fn extrema(model: &CurvatureModel, kind: DomainKind) -> Result<FlagCurvatureReport> {
    extrema_with(model, kind, ExtremaOptions::default())
}

/// [`extrema`] at a chosen resolution.
pub fn extrema_with(
    model: &CurvatureModel,
    kind: DomainKind,
    opts: ExtremaOptions,
) -> Result<FlagCurvatureReport> {
    if opts.grid < 3 || opts.boundary_samples < 3 {
        return Err(Error::InvalidArgument(
            "extrema search needs at least 3 samples per axis".into(),
        ));
    }
    let grid_n = opts.grid;
    let samples = opts.boundary_samples;
    let t_max = model.t_max(kind);
    let route = match kind {
        DomainKind::D => "R",
        DomainKind::DTilde => "R_tilde",
    };
    if !(model.delta > 0.0) || !(t_max > 0.0) {
        return Err(Error::EmptyDomain);
    }
    // interior grid in normalised coordinates (sigma, t)
    let ts: Vec<f64> = (0..grid_n)
        .map(|j| t_max * j as f64 / (grid_n - 1) as f64)
        .collect();
    let rows: Vec<Row> = ts
        .par_iter()
        .map(|&t| model.row(kind, t))
        .collect::<Result<_>>()?;
    let grid: Vec<Candidate> = rows
        .par_iter()
        .flat_map_iter(|row| {
            (0..grid_n).map(move |i| {
                let sigma = -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64;
                let s = sigma * row.bound;
                Candidate {
                    value: model.eval_row(row, s),
                    s,
                    t: row.t,
                }
            })
        })
        .collect();
    if grid.iter().any(|c| !c.value.is_finite()) {
        return Err(Error::NonConvergence(
            "non-finite curvature value on the grid".into(),
        ));
    }

    let mut diagnostics = Vec::new();
    let mut candidates_min = Vec::new();
    let mut candidates_max = Vec::new();
    for sign in [1.0, -1.0] {
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&grid[a], &grid[b]);
            (sign * ca.value)
                .total_cmp(&(sign * cb.value))
                .then(ca.s.total_cmp(&cb.s))
                .then(ca.t.total_cmp(&cb.t))
        });
        let mut cands: Vec<Candidate> = order.iter().take(1).map(|&i| grid[i]).collect();
        for &idx in order.iter().take(5) {
            let (j, i) = (idx / grid_n, idx % grid_n);
            let sigma0 = -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64;
            let f = |p: [f64; 2]| {
                let v = model.eval_normalised(kind, p[0], p[1]);
                if v.is_finite() {
                    sign * v
                } else {
                    f64::INFINITY
                }
            };
            let step = [2.0 / (grid_n - 1) as f64, t_max / (grid_n - 1) as f64];
            let (p, v) = nelder_mead_box(
                f,
                [sigma0, ts[j]],
                step,
                [-1.0, 0.0],
                [1.0, t_max],
                1e-12,
                4000,
            );
            let row = model.row(kind, p[1])?;
            cands.push(Candidate {
                value: sign * v,
                s: p[0] * row.bound,
                t: p[1],
            });
        }
        let target = if sign > 0.0 {
            &mut candidates_min
        } else {
            &mut candidates_max
        };
        target.extend(cands);
    }

    // boundary pieces: s = ± bound(t), and the t-end where the bound is widest
    let wide_t = match kind {
        DomainKind::D => 0.0,
        DomainKind::DTilde => t_max,
    };
    let pieces: [(
        &'static str,
        Box<dyn Fn(f64) -> (f64, f64) + Sync + '_>,
        f64,
        f64,
    ); 3] = [
        ("s=+bound", Box::new(move |t: f64| (1.0, t)), 0.0, t_max),
        ("s=-bound", Box::new(move |t: f64| (-1.0, t)), 0.0, t_max),
        (
            "t=end",
            Box::new(move |sigma: f64| (sigma, wide_t)),
            -1.0,
            1.0,
        ),
    ];
    for (name, param, a, b) in pieces.iter() {
        let eval = |r: f64| {
            let (sigma, t) = param(r);
            model.eval_normalised(kind, sigma, t)
        };
        let to_candidate = |r: f64, value: f64| {
            let (sigma, t) = param(r);
            let bound = model.row(kind, t).map(|row| row.bound).unwrap_or(0.0);
            Candidate {
                value,
                s: sigma * bound,
                t,
            }
        };
        let rs: Vec<f64> = (0..samples)
            .map(|i| a + (b - a) * i as f64 / (samples - 1) as f64)
            .collect();
        let vals: Vec<f64> = rs.par_iter().map(|&r| eval(r)).collect();
        let mut located = Vec::new();
        // critical points: sign changes of the sampled slope
        for i in 1..samples - 1 {
            let left = vals[i] - vals[i - 1];
            let right = vals[i + 1] - vals[i];
            if left * right < 0.0 || (left != 0.0 && right == 0.0) {
                let eta = 5e-2 * (b - a).abs();
                let lo = (rs[i] - eta).max(*a + eta);
                let hi = (rs[i] + eta).min(*b - eta);
                if lo >= hi {
                    continue;
                }
                if let Some(r) = stationary_point(eval, lo, hi, eta, 1e-15 * (b - a).abs().max(1.0))
                {
                    if located.iter().any(|q: &f64| (q - r).abs() < 1e-3 * eta) {
                        continue;
                    }
                    located.push(r);
                    let c = to_candidate(r, eval(r));
                    diagnostics.push(BoundaryCritical {
                        piece: name,
                        s: c.s,
                        t: c.t,
                        value: c.value,
                    });
                    candidates_min.push(c);
                    candidates_max.push(c);
                }
            }
        }
        // endpoints and golden-section refinement of the sampled extremes
        for (r, v) in [(rs[0], vals[0]), (rs[samples - 1], vals[samples - 1])] {
            candidates_min.push(to_candidate(r, v));
            candidates_max.push(to_candidate(r, v));
        }
        for sign in [1.0, -1.0] {
            let best = (0..samples)
                .min_by(|&i, &j| (sign * vals[i]).total_cmp(&(sign * vals[j])))
                .unwrap();
            let lo = rs[best.saturating_sub(1)];
            let hi = rs[(best + 1).min(samples - 1)];
            let (r, v) = golden_min(|r| sign * eval(r), lo, hi, 1e-13);
            let c = to_candidate(r, sign * v);
            if sign > 0.0 {
                candidates_min.push(c);
            } else {
                candidates_max.push(c);
            }
        }
    }

    let pick = |cands: &[Candidate], sign: f64| -> Candidate {
        let mut best = cands[0];
        for c in &cands[1..] {
            if c.value.is_finite() && better(c, &best, sign) {
                best = *c;
            }
        }
        best
    };
    let lo = pick(&candidates_min, 1.0);
    let hi = pick(&candidates_max, -1.0);
    Ok(FlagCurvatureReport {
        min: lo.value,
        max: hi.value,
        argmin: (lo.s, lo.t),
        argmax: (hi.s, hi.t),
        method: ExtremaMethod::GridRefine,
        route,
        boundary_diagnostics: diagnostics,
    })
}

/// The three square-family cases with closed-form extrema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquareVariant {
    /// `phi = (1 + s)^2`
    SquarePlus,
    /// `phi = 1 + s^2`
    ZeroPlus,
    /// `phi = 1 - s^2`
    ZeroMinus,
}

impl SquareVariant {
    pub fn sign(self) -> Sign {
        match self {
            SquareVariant::ZeroMinus => Sign::Minus,
            _ => Sign::Plus,
        }
    }

    pub fn epsilon(self) -> f64 {
        match self {
            SquareVariant::SquarePlus => 2.0,
            _ => 0.0,
        }
    }

    pub fn params(self) -> MetricParams {
        MetricParams::square(self.sign(), self.epsilon())
    }

    /// The square gauge over the full regular range.
    pub fn gauge(self) -> Gauge {
        let sup = match self.sign() {
            Sign::Plus => 1.0,
            Sign::Minus => 0.5,
        };
        Gauge::square(self.sign(), self.epsilon(), sup).expect("square gauge on its regular range")
    }

    fn check(self, mu: f64, delta: f64) -> Result<()> {
        if !(mu > 0.0) || !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need mu > 0 and delta >= 0, got ({mu}, {delta})"
            )));
        }
        if self == SquareVariant::ZeroMinus && mu * mu <= 12.0 * delta * delta {
            return Err(Error::RegularityViolated(format!(
                "1 - s^2 needs mu^2 > 12 delta^2 (mu = {mu}, delta = {delta})"
            )));
        }
        Ok(())
    }

    /// Location `t_1` of the interior critical point of `R~(±t, t)`.
    pub fn boundary_critical_t(self, mu: f64, delta: f64) -> Result<Option<f64>> {
        self.check(mu, delta)?;
        Ok(match self {
            SquareVariant::SquarePlus => None,
            SquareVariant::ZeroPlus => {
                Some(2f64.sqrt() * delta / (mu * mu + 6.0 * delta * delta).sqrt())
            }
            SquareVariant::ZeroMinus => {
                Some(2f64.sqrt() * delta / (mu * mu - 6.0 * delta * delta).sqrt())
            }
        })
    }
}

/// Closed-form `(min, max)` of the flag curvature of a square variant.
pub fn closed_form_extrema(variant: SquareVariant, mu: f64, delta: f64) -> Result<(f64, f64)> {
    variant.check(mu, delta)?;
    let (m2, d2) = (mu * mu, delta * delta);
    Ok(match variant {
        SquareVariant::SquarePlus => {
            let r = (4.0 * d2 + m2).sqrt();
            let lo = (r - 2.0 * delta).powi(3) / (mu * r);
            let hi = (r + 2.0 * delta).powi(3) / (mu * r);
            (lo, hi)
        }
        SquareVariant::ZeroPlus => (
            (m2 - 8.0 * d2) / mu,
            (m2 + 4.0 * d2).powi(4) / (mu * (m2 + 8.0 * d2).powi(3)),
        ),
        SquareVariant::ZeroMinus => (
            mu.powi(5) * (m2 - 16.0 * d2) / (m2 - 8.0 * d2).powi(3),
            (m2 - 4.0 * d2).powi(4) / (mu * (m2 - 8.0 * d2).powi(3)),
        ),
    })
}

/// Closed-form report in the same shape as [`extrema`].
pub fn closed_form_report(
    variant: SquareVariant,
    mu: f64,
    delta: f64,
) -> Result<FlagCurvatureReport> {
    let (min, max) = closed_form_extrema(variant, mu, delta)?;
    Ok(FlagCurvatureReport {
        min,
        max,
        argmin: (f64::NAN, f64::NAN),
        argmax: (f64::NAN, f64::NAN),
        method: ExtremaMethod::ClosedForm,
        route: "closed_form",
        boundary_diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminant_polynomial_matches_division() {
        let p = MetricParams::new(1.3, -0.7, 0.4, 0.0).unwrap();
        for s in [0.1, 0.37, 0.9] {
            let s2: f64 = s * s;
            let f1 = p.denominator(s2);
            let f2 = p.k2 * s2 * s2 - p.k1 * s2 - 2.0;
            let direct = (4.0 * f1 - f2 * f2) / s2;
            assert!((direct - reduced_discriminant(&p, s2)).abs() < 1e-12);
        }
    }

    #[test]
    fn riemannian_limit_of_r() {
        let p = MetricParams::new(0.5, 1.0, 0.2, 0.3).unwrap();
        let g = GaugeValues {
            u: 1.0,
            v: 0.7,
            w: 1.0,
            du: 0.0,
            dv: 0.0,
            dw: 0.0,
        };
        let v = PhiValues {
            phi: 1.0,
            dphi: 0.3,
            ddphi: 0.5,
        };
        assert!((r_formula(&p, 1.7, 0.0, 0.0, &g, &v) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn zero_minus_needs_small_delta() {
        assert!(matches!(
            closed_form_extrema(SquareVariant::ZeroMinus, 1.0, 0.3),
            Err(Error::RegularityViolated(_))
        ));
        assert!(closed_form_extrema(SquareVariant::ZeroMinus, 1.0, 0.28).is_ok());
    }

    #[test]
    fn square_plus_closed_values() {
        let (lo, hi) = closed_form_extrema(SquareVariant::SquarePlus, 1.0, 0.1).unwrap();
        assert!((lo - 0.540_273_013).abs() < 1e-9);
        assert!((hi - 1.779_726_987).abs() < 1e-9);
    }
}
