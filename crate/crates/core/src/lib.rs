//! Desk-scale toolkit for utterance-level neural confidence measures over a
//! toy joint CTC-attention decoder.
//!
//! The pipeline: [`synthgen`] builds labeled synthetic corpora and drives the
//! [`toy_asr`] beam-search decoder to produce decode records; [`features`]
//! turns each record into a named predictor-feature vector; [`ncm`] trains a
//! residual feed-forward confidence classifier (weighted focal loss, optional
//! fusion-weight and adaptive-temperature heads); [`eval`] scores the result
//! with EER, AUC, CER/SER, and filtered-CER curves.

pub mod error;
pub mod eval;
pub mod features;
pub mod jsonfmt;
pub mod logsum;
pub mod ncm;
pub mod rng;
pub mod synthgen;
pub mod toy_asr;

pub use error::CoreError;

pub type Result<T> = std::result::Result<T, CoreError>;
