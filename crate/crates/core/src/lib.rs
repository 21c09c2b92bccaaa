//! Numerical verification toolkit for the stationary linearized Boltzmann
//! equation on bounded, smooth, strictly convex domains with incoming
//! boundary data.

pub mod error;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod seminorm;
pub mod suite;
pub mod transport;

pub use error::{Error, Result};
pub use exec::Execution;
