//! Temporal employment networks, network feature propagation and walk-forward
//! turnover prediction.

pub mod charts;
pub mod contagion;
pub mod error;
pub mod features;
pub mod graphs;
pub mod learners;
pub mod propagation;
pub mod registry;
pub mod synth;
pub mod walkforward;

pub use error::{Error, Result, RowError};
