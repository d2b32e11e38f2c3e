//! Good/bad-news polarity pipeline for stock movement prediction.
//!
//! The crate covers the full path from raw inputs to evaluated models:
//! corpus ingestion, PMI-based polarity lexicon induction, daily histogram
//! features, a two-branch recurrent predictor, linear hinge baselines, and
//! experiment orchestration with deterministic reports.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which every shipped entry point uses.

pub mod baseline;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiment;
pub mod features;
pub mod lexicon;
pub mod model;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision matrix.
pub type Mat64 = model::linalg::Mat<f64>;
/// Default-precision network parameters.
pub type RnnParams64 = model::RnnParams<f64>;
/// Default-precision forward trace.
pub type ForwardTrace64 = model::ForwardTrace<f64>;
/// Default-precision training input.
pub type TrainSequence64 = model::TrainSequence<f64>;
/// Default-precision training result.
pub type TrainOutcome64 = model::TrainOutcome<f64>;
