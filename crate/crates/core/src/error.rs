use std::path::PathBuf;

use thiserror::Error;

use crate::transport::TransportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("query text is empty")]
    EmptyQuery,

    #[error("no documents")]
    NoDocuments,

    #[error("document `{0}` has no text")]
    EmptyDocument(String),

    #[error("invalid thresholds: need -1 <= lower ({lower}) < upper ({upper}) <= 1")]
    InvalidThresholds { upper: f64, lower: f64 },

    #[error("relevance score {0} is outside [-1, 1]")]
    ScoreOutOfRange(f64),

    #[error("scorer unavailable: {0}")]
    ScorerUnavailable(#[source] TransportError),

    #[error("scorer returned an unusable reply: {0}")]
    InvalidScoreReply(String),

    #[error("search unavailable: {0}")]
    SearchUnavailable(String),

    #[error("failed to fetch {url}: {source}")]
    Fetch {
        url: String,
        #[source]
        source: TransportError,
    },

    #[error("query rewriting failed: {0}")]
    Rewrite(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown {family} strategy `{name}` (available: {available})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        available: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    Dataset {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot read {}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("instance `{0}` has no relevance labels")]
    MissingRelevanceLabels(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether this error comes from bad input or configuration rather than a
    /// runtime or network failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyQuery
                | Error::NoDocuments
                | Error::EmptyDocument(_)
                | Error::InvalidThresholds { .. }
                | Error::Config(_)
                | Error::UnknownStrategy { .. }
                | Error::Dataset { .. }
                | Error::Input { .. }
                | Error::MissingRelevanceLabels(_)
        )
    }
}
