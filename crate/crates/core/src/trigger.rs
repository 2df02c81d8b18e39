//! Three-way action trigger over per-document relevance scores.
//!
//! A retrieval is `Correct` when at least one document scores strictly above
//! the upper threshold, `Incorrect` when every document scores strictly below
//! the lower threshold, and `Ambiguous` otherwise. Both conditions only
//! depend on the maximum score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::RelevanceScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Correct,
    Incorrect,
    Ambiguous,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Correct, Action::Incorrect, Action::Ambiguous];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Correct => "Correct",
            Action::Incorrect => "Incorrect",
            Action::Ambiguous => "Ambiguous",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown action `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds", into = "RawThresholds")]
pub struct Thresholds {
    upper: f64,
    lower: f64,
}

#[derive(Serialize, Deserialize)]
struct RawThresholds {
    upper: f64,
    lower: f64,
}

impl TryFrom<RawThresholds> for Thresholds {
    type Error = Error;

    fn try_from(raw: RawThresholds) -> Result<Self> {
        Thresholds::new(raw.upper, raw.lower)
    }
}

impl From<Thresholds> for RawThresholds {
    fn from(t: Thresholds) -> Self {
        RawThresholds {
            upper: t.upper,
            lower: t.lower,
        }
    }
}

impl Thresholds {
    /// Requires `-1 <= lower < upper <= 1`.
    pub fn new(upper: f64, lower: f64) -> Result<Self> {
        let ordered = -1.0 <= lower && lower < upper && upper <= 1.0;
        if !ordered {
            return Err(Error::InvalidThresholds { upper, lower });
        }
        Ok(Thresholds { upper, lower })
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    fn classify(&self, max: f64) -> Action {
        if max > self.upper {
            Action::Correct
        } else if max < self.lower {
            Action::Incorrect
        } else {
            Action::Ambiguous
        }
    }
}

/// Per-task threshold defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdPreset {
    PopQa,
    PubHealth,
    ArcChallenge,
    Biography,
}

impl ThresholdPreset {
    pub const NAMES: [&'static str; 4] = ["popqa", "pubhealth", "arc", "biography"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "popqa" => Ok(ThresholdPreset::PopQa),
            "pubhealth" | "pubqa" => Ok(ThresholdPreset::PubHealth),
            "arc" | "arc_challenge" | "arc-challenge" => Ok(ThresholdPreset::ArcChallenge),
            "biography" | "bio" => Ok(ThresholdPreset::Biography),
            other => Err(Error::Config(format!(
                "unknown threshold preset `{other}` (expected one of {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn thresholds(self) -> Thresholds {
        let (upper, lower) = match self {
            ThresholdPreset::PopQa => (0.59, -0.99),
            ThresholdPreset::PubHealth | ThresholdPreset::ArcChallenge => (0.5, -0.91),
            ThresholdPreset::Biography => (0.95, -0.91),
        };
        Thresholds { upper, lower }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionJudgment {
    pub action: Action,
    pub max_score: RelevanceScore,
    pub scores: Vec<RelevanceScore>,
}

pub(crate) fn max_score(scores: &[RelevanceScore]) -> Result<RelevanceScore> {
    scores
        .iter()
        .copied()
        .reduce(|a, b| if b > a { b } else { a })
        .ok_or(Error::NoDocuments)
}

pub fn judge(scores: &[RelevanceScore], thresholds: Thresholds) -> Result<ActionJudgment> {
    let max = max_score(scores)?;
    Ok(ActionJudgment {
        action: thresholds.classify(max.value()),
        max_score: max,
        scores: scores.to_vec(),
    })
}
