//! Python bindings: `import absphere`.

use engine::curvature::{
    closed_form_extrema, extrema_with, flag_curvature, CurvatureModel, DomainKind, ExtremaOptions,
    SquareVariant,
};
use engine::gauge::Gauge;
use engine::geodesic::{
    closed_geodesic, integrate_geodesic, length_l1, length_l2, length_square, projective_factor,
    series_l, GaugedDelta, GeodesicMetric,
};
use engine::phi::{regularity_range, solve_phi, taylor_phi};
use engine::sphere::{NavigationBundle, SphereData};
use engine::verify::{run_check, VerifyOptions, CHECKS};
use engine::{MetricParams, PhiSolution, Sign};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(absphere, ValidationError, PyValueError);
create_exception!(absphere, NumericalError, PyRuntimeError);

/// Which Python exception an engine error maps to.
pub fn exception_name(e: &engine::Error) -> &'static str {
    if e.is_validation() {
        "ValidationError"
    } else {
        "NumericalError"
    }
}

fn to_py(e: engine::Error) -> PyErr {
    if e.is_validation() {
        ValidationError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for engine::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

pub fn parse_sign(s: &str) -> Option<Sign> {
    match s {
        "+" | "plus" => Some(Sign::Plus),
        "-" | "minus" => Some(Sign::Minus),
        _ => None,
    }
}

pub fn parse_variant(s: &str) -> Option<SquareVariant> {
    match s.replace('_', "-").as_str() {
        "square-plus" => Some(SquareVariant::SquarePlus),
        "zero-plus" => Some(SquareVariant::ZeroPlus),
        "zero-minus" => Some(SquareVariant::ZeroMinus),
        _ => None,
    }
}

fn to_sign(s: &str) -> PyResult<Sign> {
    parse_sign(s)
        .ok_or_else(|| ValidationError::new_err(format!("sign must be '+' or '-', got {s:?}")))
}

fn variant(s: &str) -> PyResult<SquareVariant> {
    parse_variant(s).ok_or_else(|| {
        ValidationError::new_err(format!(
            "variant must be square-plus, zero-plus or zero-minus, got {s:?}"
        ))
    })
}

/// Coefficients `(k1, k2, k3, epsilon)` of the profile equation.
#[pyclass(name = "MetricParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMetricParams {
    inner: MetricParams,
}

#[pymethods]
impl PyMetricParams {
    #[new]
    #[pyo3(signature = (k1, k2, k3, epsilon = 0.0))]
    fn new(k1: f64, k2: f64, k3: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self {
            inner: MetricParams::new(k1, k2, k3, epsilon).or_raise()?,
        })
    }

    /// `phi = 1 + epsilon s ± s^2`.
    #[staticmethod]
    fn square(sign: &str, epsilon: f64) -> PyResult<Self> {
        Ok(Self {
            inner: MetricParams::square(to_sign(sign)?, epsilon),
        })
    }

    #[staticmethod]
    fn from_variant(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: variant(name)?.params(),
        })
    }

    #[getter]
    fn k1(&self) -> f64 {
        self.inner.k1
    }

    #[getter]
    fn k2(&self) -> f64 {
        self.inner.k2
    }

    #[getter]
    fn k3(&self) -> f64 {
        self.inner.k3
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    /// Supremum of `b^2` with a regular metric (may be `inf`).
    fn regularity_range(&self) -> PyResult<f64> {
        regularity_range(&self.inner).or_raise()
    }

    fn taylor(&self) -> Vec<f64> {
        taylor_phi(&self.inner).to_vec()
    }

    #[pyo3(signature = (s_max, tol = 1e-10))]
    fn solve_phi(&self, s_max: f64, tol: f64) -> PyResult<PyPhiSolution> {
        Ok(PyPhiSolution {
            inner: solve_phi(self.inner, s_max, tol).or_raise()?,
        })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "MetricParams(k1={}, k2={}, k3={}, epsilon={})",
            p.k1, p.k2, p.k3, p.epsilon
        )
    }
}

#[pyclass(name = "PhiSolution", frozen)]
struct PyPhiSolution {
    inner: PhiSolution,
}

#[pymethods]
impl PyPhiSolution {
    /// `(phi, phi', phi'')` at `s`.
    fn eval(&self, s: f64) -> PyResult<(f64, f64, f64)> {
        let v = self.inner.eval(s).or_raise()?;
        Ok((v.phi, v.dphi, v.ddphi))
    }

    #[getter]
    fn s_max(&self) -> f64 {
        self.inner.s_max()
    }

    fn max_residual(&self) -> f64 {
        self.inner.max_residual()
    }
}

/// A gauge triple `(u, v, w)` as a function of `B = b^2`.
#[pyclass(name = "Gauge", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGauge {
    inner: Gauge,
}

#[pymethods]
impl PyGauge {
    #[staticmethod]
    fn canonical(params: &PyMetricParams, t_max: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Gauge::canonical(params.inner, t_max).or_raise()?,
        })
    }

    #[staticmethod]
    fn canonical_regular(params: &PyMetricParams) -> PyResult<Self> {
        Ok(Self {
            inner: Gauge::canonical_regular(params.inner).or_raise()?,
        })
    }

    #[staticmethod]
    fn square(sign: &str, epsilon: f64, t_max: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Gauge::square(to_sign(sign)?, epsilon, t_max).or_raise()?,
        })
    }

    /// The square gauge of a named variant over its full regular range.
    #[staticmethod]
    fn for_variant(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: variant(name)?.gauge(),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (params, u0, v0, w0, t_max, tol = 1e-10))]
    fn solve_ivp(
        params: &PyMetricParams,
        u0: f64,
        v0: f64,
        w0: f64,
        t_max: f64,
        tol: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: Gauge::solve_ivp(params.inner, u0, v0, w0, t_max, tol).or_raise()?,
        })
    }

    #[getter]
    fn t_max(&self) -> f64 {
        self.inner.t_max()
    }

    #[getter]
    fn params(&self) -> PyMetricParams {
        PyMetricParams {
            inner: *self.inner.params(),
        }
    }

    /// `(u, v, w)` at `b_sq`.
    fn eval(&self, b_sq: f64) -> PyResult<(f64, f64, f64)> {
        let g = self.inner.eval(b_sq).or_raise()?;
        Ok((g.u, g.v, g.w))
    }

    fn norm_relation(&self, b_sq: f64) -> PyResult<f64> {
        self.inner.norm_relation(b_sq).or_raise()
    }

    fn invert_norm_relation(&self, target: f64) -> PyResult<f64> {
        self.inner.invert_norm_relation(target).or_raise()
    }

    fn norm_sup(&self) -> f64 {
        self.inner.norm_sup()
    }

    /// `(h^2, rho)` from `(alpha^2, beta, b^2)`.
    fn transform(&self, alpha_sq: f64, beta: f64, b_sq: f64) -> PyResult<(f64, f64)> {
        self.inner.transform(alpha_sq, beta, b_sq).or_raise()
    }

    fn inverse_transform(&self, h_sq: f64, rho: f64, b_sq: f64) -> PyResult<(f64, f64)> {
        self.inner.inverse_transform(h_sq, rho, b_sq).or_raise()
    }
}

/// Navigation data on the sphere of curvature `mu` in a gnomonic chart.
#[pyclass(name = "Sphere", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySphere {
    inner: SphereData,
}

#[pymethods]
impl PySphere {
    #[new]
    fn new(mu: f64, k: f64, xi: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: SphereData::new(mu, k, xi).or_raise()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (mu, delta, n = 2))]
    fn with_delta_at_origin(mu: f64, delta: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SphereData::with_delta_at_origin(mu, delta, n).or_raise()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (mu, delta, n = 2))]
    fn with_delta_equatorial(mu: f64, delta: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SphereData::with_delta_equatorial(mu, delta, n).or_raise()?,
        })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    fn c(&self, x: Vec<f64>) -> f64 {
        self.inner.c(&x)
    }

    fn h(&self, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.inner.h(&x, &y)
    }
}

/// `(t, position, velocity)` of one geodesic sample.
type Sample = (f64, Vec<f64>, Vec<f64>);

/// The Finsler metric built from a sphere and a gauge.
#[pyclass(name = "Bundle", frozen)]
struct PyBundle {
    inner: NavigationBundle,
}

#[pymethods]
impl PyBundle {
    #[new]
    fn new(sphere: &PySphere, gauge: &PyGauge) -> PyResult<Self> {
        Ok(Self {
            inner: NavigationBundle::new(sphere.inner.clone(), gauge.inner.clone()).or_raise()?,
        })
    }

    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    /// `F(x, y)`.
    fn metric(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.metric(&x, &y).or_raise()
    }

    fn projective_factor(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        projective_factor(&self.inner, &x, &y).or_raise()
    }

    /// `(K, K by finite differences)` at the flag `(x, y)`.
    fn flag_curvature(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
        let k = flag_curvature(&self.inner, &x, &y).or_raise()?;
        Ok((k.k, k.k_finite_difference))
    }

    /// Samples `(t, position, velocity)` of the geodesic from `(x0, y0)`.
    #[pyo3(signature = (x0, y0, t_end, tol = 1e-10))]
    fn trace(
        &self,
        py: Python<'_>,
        x0: Vec<f64>,
        y0: Vec<f64>,
        t_end: f64,
        tol: f64,
    ) -> PyResult<Vec<Sample>> {
        let metric = GeodesicMetric::Finsler(self.inner.clone());
        let path = py
            .detach(|| integrate_geodesic(&metric, &x0, &y0, t_end, tol))
            .or_raise()?;
        Ok(path
            .samples
            .into_iter()
            .map(|s| (s.t, s.position, s.velocity))
            .collect())
    }

    /// `(period, closure error)` of the geodesic from `(x0, y0)`.
    #[pyo3(signature = (x0, y0, t_cap, tol = 1e-10))]
    fn closed_geodesic(
        &self,
        py: Python<'_>,
        x0: Vec<f64>,
        y0: Vec<f64>,
        t_cap: f64,
        tol: f64,
    ) -> PyResult<(f64, f64)> {
        let metric = GeodesicMetric::Finsler(self.inner.clone());
        let path = py
            .detach(|| closed_geodesic(&metric, &x0, &y0, t_cap, tol))
            .or_raise()?;
        Ok((
            path.period.unwrap_or(f64::NAN),
            path.closure_error.unwrap_or(f64::NAN),
        ))
    }
}

/// Reduced flag curvature `R(s, t)` on `D` and `R~(s, t)` on `D~`.
#[pyclass(name = "CurvatureModel", frozen)]
struct PyCurvatureModel {
    inner: CurvatureModel,
}

fn to_domain(name: &str) -> PyResult<DomainKind> {
    match name {
        "d" => Ok(DomainKind::D),
        "d_tilde" | "d-tilde" => Ok(DomainKind::DTilde),
        _ => Err(ValidationError::new_err(format!(
            "domain must be 'd' or 'd_tilde', got {name:?}"
        ))),
    }
}

#[pymethods]
impl PyCurvatureModel {
    #[new]
    fn new(gauge: &PyGauge, mu: f64, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CurvatureModel::new(gauge.inner.clone(), mu, delta).or_raise()?,
        })
    }

    #[getter]
    fn t_o(&self) -> f64 {
        self.inner.t_o()
    }

    fn r(&self, s: f64, t: f64) -> PyResult<f64> {
        self.inner.r_eval(s, t).or_raise()
    }

    fn r_tilde(&self, s: f64, t: f64) -> PyResult<f64> {
        self.inner.r_tilde_eval(s, t).or_raise()
    }

    /// Minimum and maximum with their locations.
    #[pyo3(signature = (domain = "d_tilde", grid = 801, boundary_samples = 2001))]
    fn extrema<'py>(
        &self,
        py: Python<'py>,
        domain: &str,
        grid: usize,
        boundary_samples: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind = to_domain(domain)?;
        let opts = ExtremaOptions {
            grid,
            boundary_samples,
        };
        let rep = py
            .detach(|| extrema_with(&self.inner, kind, opts))
            .or_raise()?;
        let d = PyDict::new(py);
        d.set_item("min", rep.min)?;
        d.set_item("max", rep.max)?;
        d.set_item("argmin", rep.argmin)?;
        d.set_item("argmax", rep.argmax)?;
        d.set_item("route", rep.route)?;
        Ok(d)
    }
}

/// Closed-form `(min, max)` flag curvature of a square variant.
#[pyfunction]
fn square_extrema(name: &str, mu: f64, delta: f64) -> PyResult<(f64, f64)> {
    closed_form_extrema(variant(name)?, mu, delta).or_raise()
}

/// Closed-geodesic length as an integral (canonical-gauge delta).
#[pyfunction(name = "length_l1")]
#[pyo3(signature = (params, mu, delta, tol = 1e-12))]
fn py_length_l1(params: &PyMetricParams, mu: f64, delta: f64, tol: f64) -> PyResult<f64> {
    length_l1(&params.inner, mu, GaugedDelta::canonical(delta), tol).or_raise()
}

/// Closed-geodesic length in closed form (canonical-gauge delta).
#[pyfunction(name = "length_l2")]
fn py_length_l2(params: &PyMetricParams, mu: f64, delta: f64) -> PyResult<f64> {
    length_l2(&params.inner, mu, GaugedDelta::canonical(delta)).or_raise()
}

#[pyfunction(name = "series_length")]
fn py_series_l(params: &PyMetricParams, mu: f64, delta: f64) -> PyResult<f64> {
    series_l(&params.inner, mu, GaugedDelta::canonical(delta)).or_raise()
}

/// Closed-geodesic length of a square metric (square-gauge delta).
#[pyfunction(name = "length_square")]
fn py_length_square(sign: &str, mu: f64, delta: f64) -> PyResult<f64> {
    length_square(to_sign(sign)?, mu, GaugedDelta::square(delta)).or_raise()
}

/// Run acceptance checks; returns one dict per check.
#[pyfunction]
#[pyo3(signature = (checks = None, seed = None))]
fn verify<'py>(
    py: Python<'py>,
    checks: Option<Vec<u32>>,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut opts = VerifyOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let ids = checks.unwrap_or_else(|| CHECKS.iter().map(|c| c.0).collect());
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let c = py.detach(|| run_check(id, &opts)).or_raise()?;
        let d = PyDict::new(py);
        d.set_item("id", c.id)?;
        d.set_item("name", c.name)?;
        d.set_item("passed", c.passed)?;
        d.set_item("worst", c.worst)?;
        d.set_item("tolerance", c.tolerance)?;
        d.set_item("detail", c.detail)?;
        out.push(d);
    }
    Ok(out)
}

#[pymodule]
fn absphere(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyMetricParams>()?;
    m.add_class::<PyPhiSolution>()?;
    m.add_class::<PyGauge>()?;
    m.add_class::<PySphere>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PyCurvatureModel>()?;
    m.add_function(wrap_pyfunction!(square_extrema, m)?)?;
    m.add_function(wrap_pyfunction!(py_length_l1, m)?)?;
    m.add_function(wrap_pyfunction!(py_length_l2, m)?)?;
    m.add_function(wrap_pyfunction!(py_series_l, m)?)?;
    m.add_function(wrap_pyfunction!(py_length_square, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
