use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("config: {0}")]
    Config(String),

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("non-finite loss at epoch {epoch}; training aborted (try a lower learning rate)")]
    NonFinite { epoch: usize },

    #[error("gold graph is cyclic; no oracle sequence exists")]
    CyclicGold,

    #[error("label {0:?} is not in the model vocabulary")]
    UnknownLabel(String),

    #[error("external embeddings: {0}")]
    External(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
