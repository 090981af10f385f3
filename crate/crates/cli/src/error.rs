use std::path::Path;

use thiserror::Error;

/// Failures of a command-line run.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource bound exceeded: {0}")]
    Resource(String),

    #[error("{context}: {source}")]
    Check {
        context: String,
        #[source]
        source: loopq::Error,
    },

    #[error(transparent)]
    Core(#[from] loopq::Error),

    #[error("i/o error at {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn check(context: impl Into<String>) -> impl FnOnce(loopq::Error) -> Self {
        let context = context.into();
        move |source| Self::Check { context, source }
    }
}
