use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("unknown sensitive attribute `{0}`")]
    UnknownAttribute(String),

    #[error("duplicate lexicon entry for `{surface}` under {attribute}")]
    DuplicateEntry { surface: String, attribute: String },

    #[error("lexicon entry `{0}` lists itself as a perturbation")]
    SelfPerturbation(String),

    #[error("lexicon entry `{0}` has an empty perturbation list")]
    EmptyPerturbations(String),

    #[error("malformed CoNLL-U at line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("CoNLL-U does not align with the document: {0}")]
    Alignment(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("explanation error: {0}")]
    Explain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }
}
