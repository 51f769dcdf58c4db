//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments or input data; names the offending field or file.
    #[error("validation: {0}")]
    Validation(String),

    /// Input is structurally valid but numerically unusable
    /// (constant image, empty ROI, zero-power background).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A pipeline stage was invoked before its inputs exist.
    #[error("missing stage output: {missing}; run `{run_first}` first")]
    MissingStage { missing: String, run_first: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Training loss became non-finite; the loss history up to the
    /// failing step is preserved for inspection.
    #[error("training diverged at step {step}: loss is not finite")]
    Diverged { step: usize, history: Vec<f64> },

    #[error("pfm: {0}")]
    Pfm(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for validation-class errors,
    /// 3 for stage-ordering errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Degenerate(_)
            | Error::ShapeMismatch(_)
            | Error::NonFinite(_)
            | Error::Pfm(_)
            | Error::Checkpoint(_)
            | Error::Json(_) => 2,
            Error::MissingStage { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
