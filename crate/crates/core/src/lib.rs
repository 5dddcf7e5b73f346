//! Projectively flat (alpha, beta)-Finsler metrics on spheres.
//!
//! The crate solves the profile ODE for `phi`, builds the deformation gauges
//! `(u, v, w)`, reconstructs metrics from navigation data on a constant
//! curvature sphere, integrates geodesics, computes closed-geodesic lengths
//! and locates extrema of the scalar flag curvature.

pub mod curvature;
pub mod error;
pub mod gauge;
pub mod geodesic;
pub mod numerics;
pub mod phi;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
pub use gauge::{Gauge, GaugeKind};
pub use phi::{MetricParams, PhiSolution, PhiValues, Sign};
