//! Small-signal stability lab for a single machine on an infinite bus.
//!
//! Pipeline: [`smib`] linearizes the plant, [`controllers`] and [`fuzzy`]
//! provide conventional and fuzzy stabilizers, [`sim`] runs fixed-step
//! closed-loop responses, [`ga`] and [`tuning`] search stabilizer settings,
//! and [`bench`] drives the three-loading comparison.

pub mod bench;
pub mod config;
pub mod controllers;
pub mod eigen;
pub mod error;
pub mod fuzzy;
pub mod ga;
pub mod params;
pub mod sim;
pub mod smib;
pub mod tuning;

pub use error::{BenchError, ConfigError, FuzzyError, GaError, ModelError, SimError};
