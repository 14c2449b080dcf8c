use std::path::PathBuf;

/// Errors surfaced by data handling and the numeric entry points that accept
/// untrusted input. Shape mismatches inside the math kernels are programming
/// errors and panic instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("labels not present in the hierarchy: {}", .0.join(", "))]
    UnknownLabels(Vec<String>),

    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
