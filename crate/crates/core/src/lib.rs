//! Dual-feasible learning proxies for conic optimization.
//!
//! A network predicts the multipliers of the "hard" constraints, a radial
//! projection moves them into the dual cone, and a closed-form optimal dual
//! completion recovers the remaining multipliers. The resulting pair is dual
//! feasible by construction, so its Lagrangian value is a certified lower
//! bound on the primal optimum.

pub mod completion;
pub mod cones;
pub mod error;
pub mod linalg;
pub mod neural;
pub mod problems;
pub mod refsolve;
pub mod training;

pub use error::{Error, Result};
