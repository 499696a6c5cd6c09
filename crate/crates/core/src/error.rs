use thiserror::Error;

/// Errors surfaced by the library. Variants map to the failure classes the
/// operations distinguish: bad inputs, bad weight/config constraints, empty
/// decode results, extraction gaps, and numeric blow-ups.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no complete hypothesis within the length bound")]
    EmptyResult,

    #[error("decode failed for utterance {utt_id}: {source}")]
    UttDecode {
        utt_id: String,
        #[source]
        source: Box<CoreError>,
    },

    #[error("feature extraction: {0}")]
    Extraction(String),

    #[error("model/spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("numeric failure in {block}: {detail}")]
    NumericFailure { block: String, detail: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("undefined CER: empty reference")]
    UndefinedCer,

    #[error("invalid call: {0}")]
    InvalidCall(String),

    #[error("model file: {0}")]
    ModelFormat(String),
}
