//! Post-hoc calibration of recommender predictions with a focus on the
//! top-N recommended items.

pub mod bundle;
pub mod calibrators;
pub mod dataset;
pub mod error;
pub mod math;
pub mod metrics;
pub mod recommenders;
pub mod runner;
pub mod strategy;

pub use error::{Error, Result};
