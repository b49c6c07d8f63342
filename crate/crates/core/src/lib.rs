//! Multi-agent debate simulation for measuring conformity under majority
//! pressure: protocol engine, model backends, metrics, experiment runner
//! and analysis.

pub mod analysis;
pub mod backends;
pub mod config;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod prompts;
pub mod protocol;
pub mod runner;

pub use error::{CoreError, Result};
