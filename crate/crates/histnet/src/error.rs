use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Core(#[from] spadsr_core::CoreError),

    #[error("shape mismatch in {site}: {detail}")]
    Shape { site: &'static str, detail: String },

    #[error("training aborted at step {step}: loss became non-finite ({loss})")]
    NanLoss { step: usize, loss: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NetError>;
