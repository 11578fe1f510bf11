//! Laplace-domain model order reduction for the second-order wave equation
//! with Ricker wavelet forcing on the unit square.
//!
//! The pipeline: solve the damped Helmholtz problem (s²M + K)û = ℬ(s)·b at
//! sinc-quadrature points on a vertical line in the right half plane, compress
//! the real parts of the solutions into a weighted POD basis, then march the
//! Galerkin-reduced system in time with Newmark-beta and compare against the
//! full finite element solution.

pub mod assembly;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod newmark;
pub mod pod;
pub mod sampling;
pub mod snapshots;
pub mod wavelet;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
