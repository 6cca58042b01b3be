use std::path::PathBuf;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("constraint conflict on dof {dof}: {reason}")]
    ConstraintConflict { dof: usize, reason: String },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("factorization failed ({unknowns} unknowns, {nonzeros} nonzeros): {reason}")]
    Factorization {
        unknowns: usize,
        nonzeros: usize,
        reason: String,
    },

    #[error("solver residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },

    #[error("evaluation line y = {y} is not aligned with mesh faces: {reason}")]
    LineNotAligned { y: f64, reason: String },

    #[error("mesh mismatch: field was computed on mesh {expected}, got {found}")]
    MeshMismatch { expected: String, found: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
