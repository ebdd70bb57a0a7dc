use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operator data contains NaN/inf samples or is otherwise malformed.
    #[error("invalid operator data: {0}")]
    InvalidData(String),

    /// A grid or step size could not resolve the problem.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A propagated quantity left its invariant region (e.g. a Schur value
    /// escaped the closed unit disk).
    #[error("instability: {0}")]
    Instability(String),

    /// Propagated transfer matrix violates a conserved identity.
    #[error("propagation accuracy: {0}")]
    PropagationAccuracy(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Martin model construction or evaluation failed.
    #[error("model error: {0}")]
    Model(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// An error raised inside a named report stage.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by numerics (grids, steps, accuracy) rather
    /// than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Resolution(_)
                | Error::Instability(_)
                | Error::PropagationAccuracy(_)
                | Error::Model(_)
        )
    }
}
