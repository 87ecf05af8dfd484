//! Invariant metrics and geodesic-orbit checks on real flag manifolds of classical type.

pub mod cli;
pub mod error;
pub mod flag_manifold;
pub mod go_checker;
pub mod invariant_metric;
pub mod lie_algebra;
pub mod matrix;
pub mod scalar;

pub use error::{Error, Result};
