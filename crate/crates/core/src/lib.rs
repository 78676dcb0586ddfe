//! Admission prediction with anomaly cleaning, five classifiers, fairness
//! audits, feature explanations and optional statement scoring.
//!
//! Every stage is a plain function over [`data::DataTable`] or
//! [`features::FeatureMatrix`]; [`pipeline::run_pipeline`] chains them.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod fairness;
pub mod features;
pub mod llm;
pub mod models;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
