//! Numerical building blocks shared by the engines.

pub mod ode;
pub mod optimize;
pub mod quadrature;
pub mod roots;

pub use ode::{DenseTrajectory, Dopri5, Node, OdeSystem};
pub use quadrature::{Integral, Quadrature};
