//! Hypocoercive decay of the kinetic Ornstein-Uhlenbeck equation on the torus
//! with generalized equilibria `exp(-<v>^alpha)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod constants;
pub mod equilibria;
pub mod error;
pub mod hypo_compare;
pub mod quadrature;
pub mod solver;
pub mod velocity;

pub use error::{Error, Result};
