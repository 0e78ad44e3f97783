//! Dynamic network link prediction toolkit.
//!
//! Pipeline: ingest timestamped edge lists ([`graph`]), build snapshot
//! sequences and sliding windows, train an encoder / stacked-LSTM / decoder
//! model ([`model`], [`train`]) that predicts the next snapshot, and score
//! predictions with AUC, GMAUC and Error Rate ([`metrics`]). The
//! [`experiment`] module ties everything together behind the `elstmd` CLI.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
