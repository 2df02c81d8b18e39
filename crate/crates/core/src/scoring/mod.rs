//! Relevance scoring of query/document pairs.
//!
//! Every scorer maps a pair to a [`RelevanceScore`] in `[-1, 1]`. Three
//! strategies ship with the crate:
//!
//! - [`LexicalScorer`]: deterministic token-overlap oracle, `2·H/|U| − 1`.
//! - [`RemoteScorer`]: JSON-over-HTTP client for a served evaluator model.
//! - [`LlmScorer`]: prompts a completion endpoint with a yes/no question.

mod lexical;
mod llm;
mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};
use crate::text::{DocumentText, QueryText};

pub use lexical::LexicalScorer;
pub use llm::{EvaluatorPrompt, LlmScorer};
pub use remote::RemoteScorer;

/// A relevance value in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RelevanceScore(f64);

impl RelevanceScore {
    pub const MIN: RelevanceScore = RelevanceScore(-1.0);
    pub const MAX: RelevanceScore = RelevanceScore(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&value) {
            Ok(RelevanceScore(value))
        } else {
            Err(Error::ScoreOutOfRange(value))
        }
    }

    /// Clamps a finite value into range. `None` for NaN.
    pub fn clamped(value: f64) -> Option<Self> {
        if value.is_nan() {
            None
        } else {
            Some(RelevanceScore(value.clamp(-1.0, 1.0)))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RelevanceScore {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        RelevanceScore::new(value)
    }
}

impl From<RelevanceScore> for f64 {
    fn from(s: RelevanceScore) -> f64 {
        s.0
    }
}

impl fmt::Display for RelevanceScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, query: &QueryText, doc: &DocumentText) -> Result<RelevanceScore>;

    /// Scores every document; element `i` equals `score(query, &docs[i])`.
    fn score_batch(&self, query: &QueryText, docs: &[DocumentText]) -> Result<Vec<RelevanceScore>> {
        docs.iter().map(|doc| self.score(query, doc)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    /// Registered strategy name: `lexical`, `remote` or `llm`.
    pub kind: String,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    /// Prompt template for the `llm` kind.
    pub prompt: EvaluatorPrompt,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: "lexical".into(),
            endpoint: None,
            timeout_ms: 10_000,
            retries: 2,
            max_in_flight: 8,
            prompt: EvaluatorPrompt::Direct,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        let needs_endpoint = matches!(self.kind.as_str(), "remote" | "llm");
        match (&self.endpoint, needs_endpoint) {
            (None, true) => {
                return Err(Error::Config(format!(
                    "scorer.endpoint is required for kind `{}`",
                    self.kind
                )))
            }
            (Some(_), false) if self.kind == "lexical" => {
                return Err(Error::Config(
                    "scorer.endpoint must not be set for kind `lexical`".into(),
                ))
            }
            _ => {}
        }
        if let Some(endpoint) = &self.endpoint {
            parse_endpoint("scorer.endpoint", endpoint)?;
        }
        if self.max_in_flight == 0 {
            return Err(Error::Config("scorer.max_in_flight must be at least 1".into()));
        }
        Ok(())
    }
}

pub(crate) fn parse_endpoint(field: &str, value: &str) -> Result<Url> {
    Url::parse(value).map_err(|err| Error::Config(format!("{field} `{value}`: {err}")))
}
