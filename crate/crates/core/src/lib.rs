pub mod adaptivity;
pub mod benchmark;
pub mod error;
pub mod estimator;
pub mod coupling;
pub mod fem;
pub mod geometry;
pub mod intersection;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod study;

pub use error::{FdlmError, Result};
