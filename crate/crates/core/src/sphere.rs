//! Navigation data on a sphere of constant curvature `mu`.
//!
//! Points are written in the gnomonic chart `x -> (sqrt(mu) x, 1)/sqrt(1+mu|x|^2)`
//! of the upper hemisphere. In that chart
//!
//! ```text
//! h^2 = ((1+mu|x|^2)|y|^2 - mu<x,y>^2) / (1+mu|x|^2)^2
//! c   = (-k + mu<xi,x>) / (2 sqrt(1+mu|x|^2))
//! ```
//!
//! Other hemispheres are reached through rotated charts ([`Frame`]); the
//! formulas keep their shape with chart-local `(k, xi)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::{Gauge, GaugeValues};
use crate::numerics::roots;
use crate::phi::{solve_phi, MetricParams, PhiSolution, PhiValues};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Chart radius (in units of `1/sqrt(mu)`) searched for poles of `c`.
pub const POLE_SEARCH_RADIUS: f64 = 1e3;

/// Curvature `mu` and the conformal field data `(k, xi)`; the dimension is `xi.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereData {
    pub mu: f64,
    pub k: f64,
    pub xi: Vec<f64>,
}

/// A zero of `grad c`. The two zeros are antipodal on the sphere, so a
/// gnomonic chart (which covers one open hemisphere) shows at most one of
/// them; the other is reported as `AtInfinity`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    Finite(Vec<f64>),
    AtInfinity,
}

impl SphereData {
    pub fn new(mu: f64, k: f64, xi: Vec<f64>) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if xi.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension must be at least 2, got {}",
                xi.len()
            )));
        }
        if !k.is_finite() || xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("k and xi must be finite".into()));
        }
        Ok(Self { mu, k, xi })
    }

    /// Data whose invariant `delta` has the given value, with `c = -delta/sqrt(mu)`
    /// at the chart origin (the origin is the minimum of `c`).
    pub fn with_delta_at_origin(mu: f64, delta: f64, n: usize) -> Result<Self> {
        Self::new(mu, 2.0 * delta / mu.sqrt(), vec![0.0; n])
    }

    /// Data with `c = 0` at the origin and `delta` as given, field pointing along `x^1`.
    pub fn with_delta_equatorial(mu: f64, delta: f64, n: usize) -> Result<Self> {
        let mut xi = vec![0.0; n];
        xi[0] = 2.0 * delta / mu;
        Self::new(mu, 0.0, xi)
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// `1 + mu |x|^2`
    pub fn q(&self, x: &[f64]) -> f64 {
        1.0 + self.mu * dot(x, x)
    }

    pub fn h_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        let q = self.q(x);
        let xy = dot(x, y);
        (q * dot(y, y) - self.mu * xy * xy) / (q * q)
    }

    pub fn h(&self, x: &[f64], y: &[f64]) -> f64 {
        self.h_sq(x, y).sqrt()
    }

    /// Components `h_ij`.
    pub fn h_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let q = self.q(x);
        DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { q } else { 0.0 };
            (d - self.mu * x[i] * x[j]) / (q * q)
        })
    }

    /// Components `h^ij`.
    pub fn h_inverse(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let q = self.q(x);
        DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            q * (d + self.mu * x[i] * x[j])
        })
    }

    pub fn c(&self, x: &[f64]) -> f64 {
        (-self.k + self.mu * dot(&self.xi, x)) / (2.0 * self.q(x).sqrt())
    }

    /// `dc` in chart components.
    pub fn grad_c(&self, x: &[f64]) -> Vec<f64> {
        let q = self.q(x);
        let sq = q.sqrt();
        let num = -self.k + self.mu * dot(&self.xi, x);
        (0..self.dim())
            .map(|i| self.mu * self.xi[i] / (2.0 * sq) - num * self.mu * x[i] / (2.0 * q * sq))
            .collect()
    }

    /// `c_0 = c_i y^i`
    pub fn c0(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.grad_c(x), y)
    }

    /// `|dc|_h^2 = h^ij c_i c_j`
    pub fn grad_norm_sq(&self, x: &[f64]) -> f64 {
        let g = self.grad_c(x);
        let gx = dot(&g, x);
        self.q(x) * (dot(&g, &g) + self.mu * gx * gx)
    }

    /// `sqrt(|dc|_h^2 + mu c^2)` evaluated at `x`.
    pub fn delta_at(&self, x: &[f64]) -> f64 {
        let c = self.c(x);
        (self.grad_norm_sq(x) + self.mu * c * c).sqrt()
    }

    /// The invariant `delta`, evaluated at the chart origin.
    pub fn delta(&self) -> f64 {
        self.delta_at(&vec![0.0; self.dim()])
    }

    /// The two zeros of `grad c`. Critical points of `c` lie on the line
    /// through the origin spanned by `xi`, so the search is one-dimensional
    /// along the great circle `theta -> tan(theta) xi/|xi| / sqrt(mu)`.
    /// Zeros farther than `POLE_SEARCH_RADIUS / sqrt(mu)` from the origin are
    /// reported as [`Pole::AtInfinity`]; beyond that radius the chart
    /// gradient is dominated by rounding.
    pub fn find_c_poles(&self) -> Result<(Pole, Pole)> {
        let n = self.dim();
        if self.delta() <= 1e-300 {
            return Err(Error::DegenerateField);
        }
        let norm = dot(&self.xi, &self.xi).sqrt();
        let dir: Vec<f64> = if norm > 0.0 {
            self.xi.iter().map(|v| v / norm).collect()
        } else {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        };
        let point = |theta: f64| -> Vec<f64> {
            let r = theta.tan() / self.mu.sqrt();
            dir.iter().map(|d| d * r).collect()
        };
        // derivative of c along the circle (up to the positive factor sec^2/sqrt(mu))
        let slope = |theta: f64| dot(&self.grad_c(&point(theta)), &dir);

        const N: usize = 2000;
        let half = POLE_SEARCH_RADIUS.atan();
        let mut found = Vec::new();
        let mut prev = -half;
        let mut f_prev = slope(prev);
        for i in 1..=N {
            let th = -half + 2.0 * half * i as f64 / N as f64;
            let f = slope(th);
            if f_prev != 0.0 && (f == 0.0 || f.signum() != f_prev.signum()) {
                let root = roots::bisect(slope, prev, th, 1e-15)?;
                found.push(Pole::Finite(point(root)));
            }
            prev = th;
            f_prev = f;
        }
        found.truncate(2);
        while found.len() < 2 {
            found.push(Pole::AtInfinity);
        }
        let second = found.pop().unwrap();
        let first = found.pop().unwrap();
        Ok((first, second))
    }

    /// Unit ambient vector of the chart point `x` (curvature scaled out).
    pub fn ambient(&self, x: &[f64]) -> DVector<f64> {
        let n = self.dim();
        let sq = self.q(x).sqrt();
        let rm = self.mu.sqrt();
        DVector::from_fn(n + 1, |i, _| if i < n { rm * x[i] / sq } else { 1.0 / sq })
    }

    /// Ambient vector `a` with `c(P) = <a, P>` on the unit sphere.
    pub fn field_vector(&self) -> DVector<f64> {
        let n = self.dim();
        let rm = self.mu.sqrt();
        DVector::from_fn(n + 1, |i, _| {
            if i < n {
                0.5 * rm * self.xi[i]
            } else {
                -0.5 * self.k
            }
        })
    }
}

/// An orthonormal frame of the ambient space; the gnomonic chart of the frame
/// is centred at its last column.
#[derive(Debug, Clone)]
pub struct Frame {
    m: DMatrix<f64>,
    mu: f64,
}

impl Frame {
    pub fn identity(n: usize, mu: f64) -> Self {
        Self {
            m: DMatrix::identity(n + 1, n + 1),
            mu,
        }
    }

    /// A frame whose chart is centred at the unit ambient vector `p`.
    pub fn centered_at(p: &DVector<f64>, mu: f64) -> Self {
        let dim = p.len();
        let mut v = -p.clone();
        v[dim - 1] += 1.0;
        let vv = v.dot(&v);
        let m = if vv < 1e-30 {
            DMatrix::identity(dim, dim)
        } else {
            // Householder reflection exchanging e_last and p
            DMatrix::identity(dim, dim) - (&v * v.transpose()) * (2.0 / vv)
        };
        Self { m, mu }
    }

    /// Chart-local copy of `sphere`: the same field written in this frame's chart.
    pub fn localize(&self, sphere: &SphereData) -> SphereData {
        let n = sphere.dim();
        let a = self.m.transpose() * sphere.field_vector();
        let rm = self.mu.sqrt();
        SphereData {
            mu: self.mu,
            k: -2.0 * a[n],
            xi: (0..n).map(|i| 2.0 * a[i] / rm).collect(),
        }
    }

    /// Chart point and velocity to ambient position and velocity.
    pub fn to_ambient(&self, x: &[f64], y: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let n = x.len();
        let rm = self.mu.sqrt();
        let q = 1.0 + self.mu * dot(x, x);
        let sq = q.sqrt();
        let xy = dot(x, y);
        let p = DVector::from_fn(n + 1, |i, _| if i < n { rm * x[i] / sq } else { 1.0 / sq });
        let dp = DVector::from_fn(n + 1, |i, _| {
            let lead = if i < n { rm * y[i] / sq } else { 0.0 };
            let base = if i < n { rm * x[i] } else { 1.0 };
            lead - base * self.mu * xy / (q * sq)
        });
        (&self.m * p, &self.m * dp)
    }

    /// Ambient position and velocity to chart coordinates; `None` outside the
    /// open hemisphere of the chart.
    pub fn from_ambient(
        &self,
        p: &DVector<f64>,
        dp: &DVector<f64>,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let lp = self.m.transpose() * p;
        let ldp = self.m.transpose() * dp;
        let n = lp.len() - 1;
        let last = lp[n];
        if last <= 0.0 {
            return None;
        }
        let rm = self.mu.sqrt();
        let x = (0..n).map(|i| lp[i] / (rm * last)).collect();
        let y = (0..n)
            .map(|i| (ldp[i] * last - lp[i] * ldp[n]) / (rm * last * last))
            .collect();
        Some((x, y))
    }
}

/// Everything needed to evaluate `F` on the sphere: the navigation data, the
/// metric family and a gauge.
#[derive(Debug, Clone)]
pub struct NavigationBundle {
    sphere: SphereData,
    gauge: Arc<Gauge>,
    phi: Arc<PhiSolution>,
    delta: f64,
    b_sq_max: f64,
}

/// Reconstructed metric data at a point `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMetric {
    pub c: f64,
    pub c0: f64,
    pub b_sq: f64,
    pub gauge: GaugeValues,
    pub h_sq: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub phi: PhiValues,
    pub f: f64,
}

impl NavigationBundle {
    /// Validates that every point of the sphere maps into the regular range.
    pub fn new(sphere: SphereData, gauge: Gauge) -> Result<Self> {
        let delta = sphere.delta();
        let mu = sphere.mu;
        let target = 4.0 * delta * delta / (mu * mu);
        let b_sq_max = match gauge.invert_norm_relation(target) {
            Ok(b) => b,
            Err(Error::TargetOutOfRange { target, sup }) => {
                return Err(Error::RegularityViolated(format!(
                    "4 delta^2/mu^2 = {target} is not below the norm-relation supremum {sup}"
                )))
            }
            Err(e) => return Err(e),
        };
        if b_sq_max >= gauge.regular_sup() {
            return Err(Error::RegularityViolated(format!(
                "b^2 reaches {b_sq_max}, regular only below {}",
                gauge.regular_sup()
            )));
        }
        let params = *gauge.params();
        let s_max = (b_sq_max.sqrt() * (1.0 + 1e-9))
            .max(1e-3)
            .min(gauge.regular_sup().sqrt());
        let phi = match params.square_sign() {
            Some(sign) => PhiSolution::square(sign, params.epsilon, s_max),
            None => solve_phi(params, s_max, 1e-9)?,
        };
        Ok(Self {
            sphere,
            gauge: Arc::new(gauge),
            phi: Arc::new(phi),
            delta,
            b_sq_max,
        })
    }

    pub fn sphere(&self) -> &SphereData {
        &self.sphere
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn params(&self) -> &MetricParams {
        self.gauge.params()
    }

    pub fn phi(&self) -> &PhiSolution {
        &self.phi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest `b^2` over the sphere (attained at the poles of `c`).
    pub fn b_sq_max(&self) -> f64 {
        self.b_sq_max
    }

    /// The same metric written in the chart of `frame`.
    pub fn in_frame(&self, frame: &Frame) -> Self {
        Self {
            sphere: frame.localize(&self.sphere),
            ..self.clone()
        }
    }

    /// `B(x)` from the norm relation `N(B) = 4 (delta^2 - mu c^2) / mu^2`.
    pub fn b_sq_at(&self, x: &[f64]) -> Result<f64> {
        let c = self.sphere.c(x);
        self.b_sq_for_c(c)
    }

    pub fn b_sq_for_c(&self, c: f64) -> Result<f64> {
        let mu = self.sphere.mu;
        let target = (4.0 * (self.delta * self.delta - mu * c * c) / (mu * mu)).max(0.0);
        self.gauge.invert_norm_relation(target)
    }

    /// `alpha`, `beta` and `F` at `(x, y)`.
    pub fn reconstruct(&self, x: &[f64], y: &[f64]) -> Result<PointMetric> {
        let sphere = &self.sphere;
        let mu = sphere.mu;
        let c = sphere.c(x);
        let c0 = sphere.c0(x, y);
        let b_sq = self.b_sq_for_c(c)?;
        let g = self.gauge.eval(b_sq)?;
        let h_sq = sphere.h_sq(x, y);
        let beta = 2.0 * c0 / (mu * g.w);
        let alpha_sq = (h_sq - g.v * beta * beta) / g.u;
        if !(alpha_sq > 0.0) {
            return Err(Error::NonPositiveResult(alpha_sq));
        }
        let alpha = alpha_sq.sqrt();
        let s = beta / alpha;
        let phi = self.phi.eval(s)?;
        Ok(PointMetric {
            c,
            c0,
            b_sq,
            gauge: g,
            h_sq,
            alpha,
            beta,
            s,
            phi,
            f: alpha * phi.phi,
        })
    }

    /// `F(x, y)`
    pub fn metric(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.reconstruct(x, y)?.f)
    }

    /// The 1-form `beta` in chart components, `2 c_i / (mu w)`.
    pub fn beta_form(&self, x: &[f64]) -> Result<Vec<f64>> {
        let b_sq = self.b_sq_at(x)?;
        let g = self.gauge.eval(b_sq)?;
        let mu = self.sphere.mu;
        Ok(self
            .sphere
            .grad_c(x)
            .iter()
            .map(|ci| 2.0 * ci / (mu * g.w))
            .collect())
    }

    /// Components `a_ij = (h_ij - v b_i b_j) / u` of `alpha`.
    pub fn alpha_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let b_sq = self.b_sq_at(x)?;
        let g = self.gauge.eval(b_sq)?;
        let b = DVector::from_vec(self.beta_form(x)?);
        Ok((self.sphere.h_matrix(x) - (&b * b.transpose()) * g.v) / g.u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_at_origin_is_euclidean() {
        let s = SphereData::new(1.7, 0.3, vec![0.2, -0.1]).unwrap();
        assert!((s.h(&[0.0, 0.0], &[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let s = SphereData::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        assert!((s.h(&[1.0, 0.0], &[0.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn c_at_origin() {
        let s = SphereData::new(2.0, 0.6, vec![1.0, 2.0, 3.0]).unwrap();
        assert!((s.c(&[0.0; 3]) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_field_has_no_poles() {
        let s = SphereData::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(s.find_c_poles(), Err(Error::DegenerateField));
    }

    #[test]
    fn equatorial_field_has_poles_at_infinity() {
        let s = SphereData::new(1.0, 0.0, vec![1.0, 0.0]).unwrap();
        let (p, q) = s.find_c_poles().unwrap();
        assert_eq!((p, q), (Pole::AtInfinity, Pole::AtInfinity));
    }

    #[test]
    fn frame_round_trip() {
        let s = SphereData::new(1.3, 0.4, vec![0.1, 0.7, -0.2]).unwrap();
        let x0 = [0.3, -0.2, 0.5];
        let frame = Frame::centered_at(&s.ambient(&x0), s.mu);
        let (p, dp) = frame.to_ambient(&[0.0; 3], &[1.0, 0.5, -0.25]);
        assert!((&p - s.ambient(&x0)).norm() < 1e-14);
        let (x, _) = Frame::identity(3, s.mu).from_ambient(&p, &dp).unwrap();
        for i in 0..3 {
            assert!((x[i] - x0[i]).abs() < 1e-13);
        }
        // the field is the same function on the sphere in both charts
        let local = frame.localize(&s);
        assert!((local.c(&[0.0; 3]) - s.c(&x0)).abs() < 1e-14);
        assert!((local.delta() - s.delta()).abs() < 1e-14);
    }
}
