use thiserror::Error;

/// Where an error was raised: module and operation name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub module: &'static str,
    pub op: &'static str,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}::{}", self.module, self.op)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (wrong dimension, bad parameters, bad JSON).
    #[error("{origin}: invalid input: {msg}")]
    Input { origin: Origin, msg: String },

    /// The requested integral or bracket does not converge.
    #[error("{origin}: divergent: {msg}")]
    Divergence { origin: Origin, msg: String },

    /// The germ falls outside the supported regimes, or the case does not apply.
    #[error("{origin}: refused: {msg}")]
    Refused { origin: Origin, msg: String },

    /// A numerical procedure failed (rank deficiency, non-convergent extrapolation, ...).
    #[error("{origin}: numerical failure: {msg}")]
    Numerical { origin: Origin, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(module: &'static str, op: &'static str, msg: impl Into<String>) -> Self {
        Error::Input {
            origin: Origin { module, op },
            msg: msg.into(),
        }
    }

    pub fn divergence(module: &'static str, op: &'static str, msg: impl Into<String>) -> Self {
        Error::Divergence {
            origin: Origin { module, op },
            msg: msg.into(),
        }
    }

    pub fn refused(module: &'static str, op: &'static str, msg: impl Into<String>) -> Self {
        Error::Refused {
            origin: Origin { module, op },
            msg: msg.into(),
        }
    }

    pub fn numerical(module: &'static str, op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical {
            origin: Origin { module, op },
            msg: msg.into(),
        }
    }

    pub fn origin(&self) -> Option<Origin> {
        match self {
            Error::Input { origin, .. }
            | Error::Divergence { origin, .. }
            | Error::Refused { origin, .. }
            | Error::Numerical { origin, .. } => Some(*origin),
            Error::Io(_) => None,
        }
    }

    /// Process exit code: 1 for input errors, 2 for numerical refusals.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input { .. } | Error::Io(_) => 1,
            Error::Divergence { .. } | Error::Refused { .. } | Error::Numerical { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
