//! Membership inference against models trained on augmented data.

pub mod attacks;
pub mod augment;
pub mod bayes_oracle;
pub mod cli;
pub mod config;
pub mod data;
pub mod dp_bound;
pub mod error;
pub mod harness;
pub mod loss;
pub mod nn;
pub mod records;
pub mod rng;
pub mod target;

pub use error::{Error, Result};
