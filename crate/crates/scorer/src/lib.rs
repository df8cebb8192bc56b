//! Neural scoring for pointer-based dependency graph parsing: a BiLSTM
//! encoder over character, word, lemma, and tag embeddings, an LSTM decoder
//! advanced once per transition, and biaffine scorers that point at head
//! positions and name arc labels. Training is teacher-forced Adam with
//! hand-written gradients; everything is deterministic given a seed.

mod config;
mod error;
mod external;
mod layers;
mod model;
mod params;
mod train;
mod vocab;

pub use config::ModelConfig;
pub use error::ScorerError;
pub use external::{
    load_external_embeddings, read_external_embeddings, validate_external, ExternalEmbeddings,
};
pub use model::{DecoderState, DecoderStep, EncoderStates, Model, ScoringContext};
pub use train::{train, DevMetric, EpochHook, TrainMetrics};
pub use vocab::Vocab;
