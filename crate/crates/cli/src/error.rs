use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Model(#[from] amalfree::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown preset `{0}`; see `list-presets`")]
    UnknownPreset(String),
}

impl CliError {
    /// JSON pointer of a config error.
    pub fn pointer(&self) -> Option<&str> {
        match self {
            CliError::Config { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}
