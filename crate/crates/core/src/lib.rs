//! Discrete lorentzian varifolds in flat Minkowski spacetime R^{1+N}.
//!
//! Atoms carry either a timelike projection matrix or a null boundary point
//! of the compactified grassmannian model. On top of this data model the
//! crate evaluates first variations, stationarity residuals, conserved
//! quantities on time slices, closed relativistic strings and
//! one-dimensional junction networks.

pub mod conservation;
pub mod error;
pub mod experiments;
pub mod junctions;
pub mod minkowski;
pub mod strings;
pub mod variation;
pub mod varifold;

pub use error::{Error, Result};
