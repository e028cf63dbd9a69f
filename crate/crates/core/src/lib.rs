//! Portfolio optimization via binary quadratic penalty models.
//!
//! The pipeline: a [`model::Problem`] (assets, covariance, linear
//! constraints, volatility target) is discretized onto a fixed-width bit
//! layout ([`encoding`]), compiled into a quadratic penalty model or a
//! natural-form constrained model ([`compiler`]), minimized by classical
//! samplers ([`solvers`]), and the resulting bit strings are decoded and
//! scored against every constraint ([`analysis`]).

pub mod analysis;
pub mod compiler;
pub mod encoding;
pub mod error;
pub mod model;
pub mod seed;
pub mod solvers;

pub use error::{Error, Result};
