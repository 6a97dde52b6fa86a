//! Solution fields of Brownian-time Brownian-sheet and Kuramoto-Sivashinsky
//! sheet PDE systems, computed from their probabilistic and integral
//! representations, together with the residual checks that verify them.
//!
//! Axis indices are 0-based in this library.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fields;
pub mod kernels;
pub mod model;
pub mod quadrature;
pub mod sampler;
pub mod verify;

pub use error::{Error, Result};

/// Library version embedded in exported files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
