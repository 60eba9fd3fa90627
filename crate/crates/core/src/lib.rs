//! Certification of regression designs through the distortion of their kernel,
//! lasso and Dantzig solvers, and evaluation of the resulting oracle inequalities.

pub mod bounds;
pub mod conditions;
pub mod distortion;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::DesignMatrix;
