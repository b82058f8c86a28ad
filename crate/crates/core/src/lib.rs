//! Numerical machinery for the Choquard problem on the Poincare ball.
//!
//! The crate is organized bottom-up: [`geometry`] supplies exact ball
//! geometry, [`heat_kernel`] and [`green_kernel`] evaluate the hyperbolic
//! heat and fractional Green kernels, [`radial_field`] discretizes radial
//! functions, [`choquard_energy`] and [`solver`] compute ground states, and
//! [`symmetry`] provides polarization and rearrangement checks.

pub mod choquard_energy;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod green_kernel;
pub mod heat_kernel;
pub mod io;
pub mod quadrature;
pub mod radial_field;
pub mod solver;
pub mod special;
pub mod symmetry;

pub use error::{Error, Result};

/// Library version string embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
