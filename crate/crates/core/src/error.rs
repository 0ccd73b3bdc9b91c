use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KshsError>;

#[derive(Debug, Error)]
pub enum KshsError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("unsupported scattering depth {0} (expected 1 or 2)")]
    UnsupportedDepth(usize),

    #[error("scattering maps are already normalized")]
    AlreadyNormalized,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("rank deficiency: needed {needed} eigenvalues above tolerance, found {found}")]
    RankDeficient { needed: usize, found: usize },

    #[error("support size {support} exceeds available columns {available}")]
    SupportTooLarge { support: usize, available: usize },

    #[error("calibration fingerprint mismatch ({expected} vs {found})")]
    FingerprintMismatch { expected: String, found: String },

    #[error("basis is not orthogonal (residual {0:.3e})")]
    NotOrthogonal(f64),

    #[error("oracle supports subspace dimension 1 or 2, got {0}")]
    OracleDimension(usize),

    #[error("leave-one-out evaluation needs at least two descriptors")]
    SingletonSet,

    #[error("class {0:?} has a single member")]
    SingletonClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
