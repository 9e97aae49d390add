//! Parametric mode regression for responses on the unit interval.
//!
//! The conditional mode `θ(x) = g(β₀ + βᵀx)` is modelled directly, with
//! either a mode-parameterized beta or a generalized biparabolic (GBP)
//! response distribution. A mean-parameterized beta regression is included
//! as a comparison model.

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod links;
pub mod numerics;
pub mod prediction;
pub mod regression;
pub mod simharness;

pub use error::{Error, Result};
