//! Variance-based Shapley and Shapley-Owen attributions for fairness auditing.

pub mod error;
pub mod fairness;
pub mod basis;
pub mod game;
pub mod model;
pub mod pce;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
