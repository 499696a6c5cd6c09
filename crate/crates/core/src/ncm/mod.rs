//! The confidence classifier: a residual feed-forward network trained under
//! weighted focal loss, with optional learnable fusion-weight heads (fixed
//! and adaptive) and an adaptive per-step temperature head conditioned on
//! decoder embeddings. Gradients are exact reverse-mode derivatives of the
//! full pipeline, including the temperature-scaled entropy/probability
//! features and the fused score features.

mod ffn;
mod heads;
mod io;
mod loss;
mod pipeline;
mod train;

pub use ffn::{Mat, ResidualFfn, LOGIT_CLAMP};
pub use heads::{
    adaptive_temperature, fused_lambda, FusionHead, Mlp, TempHead, TAU_EPSILON,
};
pub use io::{model_from_json, model_to_json, ModelFile, MODEL_FORMAT_VERSION};
pub use loss::{focal_loss_dp, weighted_focal_loss};
pub use pipeline::{compute_gradients, FusionMode, Grads, NcmModel, TempMode};
pub use train::{train, TrainConfig, TrainOutcome};
