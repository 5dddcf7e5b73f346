use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants are split into two families: input validation (the caller asked
/// for something outside the model) and numerical failure (the model is fine
/// but a solver could not deliver the requested accuracy). The CLI maps the
/// two families onto different exit codes, see [`Error::is_validation`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("k2 = k1*k3 ({k2} = {k1}*{k3}) defines a Randers-type metric")]
    RandersType { k1: f64, k2: f64, k3: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("1 + (k1+k3)s^2 + k2 s^4 vanishes or turns negative at s^2 = {at}")]
    DenominatorVanishes { at: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("metric is not regular for any positive b^2")]
    NotRegularAtZero,

    #[error("value {value} lies outside the regular range (limit {limit})")]
    OutOfRegularRange { value: f64, limit: f64 },

    #[error("gauge solution leaves the admissible region (u > 0, w != 0) at b^2 = {at}")]
    SolutionLeavesAdmissibleRegion { at: f64 },

    #[error("transformed metric is not positive (h^2 = {0})")]
    NonPositiveResult(f64),

    #[error("norm relation target {target} not attainable (supremum {sup})")]
    TargetOutOfRange { target: f64, sup: f64 },

    #[error("conformal field c is constant (delta = 0); poles are undefined")]
    DegenerateField,

    #[error("geodesic left the chart and could not be continued: {0}")]
    ChartExit(String),

    #[error("point (s, t) = ({s}, {t}) lies outside the curvature domain")]
    OutsideDomain { s: f64, t: f64 },

    #[error("curvature domain is empty")]
    EmptyDomain,

    #[error("regularity violated: {0}")]
    RegularityViolated(String),

    #[error("gauge mismatch: {0}")]
    GaugeMismatch(String),

    #[error("routes disagree: {route_a} = {a}, {route_b} = {b}")]
    RouteDisagreement {
        route_a: &'static str,
        a: f64,
        route_b: &'static str,
        b: f64,
    },
}

impl Error {
    /// True when the error stems from invalid input rather than from a
    /// numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonConvergence(_) | Error::ChartExit(_) | Error::RouteDisagreement { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
