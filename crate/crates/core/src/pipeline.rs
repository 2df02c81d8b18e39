//! Corrective retrieval-augmented generation for one question.
//!
//! Score every retrieved document, turn the scores into an action, then
//! assemble knowledge accordingly:
//!
//! | action      | knowledge                                   |
//! |-------------|---------------------------------------------|
//! | `Correct`   | refined internal strips                     |
//! | `Incorrect` | selected web paragraphs                     |
//! | `Ambiguous` | internal strips followed by web paragraphs  |
//!
//! and hand the question plus knowledge to the generator.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{assemble_prompt, generate, Generator};
use crate::refinement::{KnowledgeBundle, KnowledgeKind, RawDocuments, Refiner};
use crate::scoring::{RelevanceScore, Scorer};
use crate::text::{DocumentText, QueryText};
use crate::trigger::{judge, Action, ActionJudgment, Thresholds};
use crate::websearch::WebSearch;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    /// Folds this action into its neighbours (see [`decide`]).
    pub disable_action: Option<Action>,
    /// Sends every query down this branch.
    pub only_action: Option<Action>,
    /// Feed raw documents instead of refined strips.
    pub no_refinement: bool,
    /// Search with the raw question instead of keywords.
    pub no_rewriting: bool,
    /// Keep every fetched paragraph instead of selecting.
    pub no_selection: bool,
}

impl AblationFlags {
    pub fn validate(&self) -> Result<()> {
        if self.disable_action.is_some() && self.only_action.is_some() {
            return Err(Error::Config(
                "ablations.disable_action and ablations.only_action are mutually exclusive".into(),
            ));
        }
        Ok(())
    }
}

/// The action for `scores` after applying ablations.
///
/// Disabling `Correct` or `Incorrect` turns those cases into `Ambiguous`.
/// Disabling `Ambiguous` leaves the single upper threshold: above it is
/// `Correct`, everything else `Incorrect`.
pub fn decide(scores: &[RelevanceScore], thresholds: Thresholds, flags: &AblationFlags) -> Result<ActionJudgment> {
    let mut judgment = judge(scores, thresholds)?;
    if let Some(only) = flags.only_action {
        judgment.action = only;
        return Ok(judgment);
    }
    judgment.action = match (flags.disable_action, judgment.action) {
        (Some(Action::Correct), Action::Correct) | (Some(Action::Incorrect), Action::Incorrect) => Action::Ambiguous,
        (Some(Action::Ambiguous), _) => {
            if judgment.max_score.value() > thresholds.upper() {
                Action::Correct
            } else {
                Action::Incorrect
            }
        }
        (_, action) => action,
    };
    Ok(judgment)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub scoring_ms: f64,
    pub refinement_ms: f64,
    pub web_search_ms: f64,
    pub generation_ms: f64,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub question: QueryText,
    pub doc_scores: Vec<RelevanceScore>,
    /// Absent for baselines that skip the evaluator.
    pub judgment: Option<ActionJudgment>,
    pub knowledge: KnowledgeBundle,
    pub search_query: Option<String>,
    pub searched_urls: Vec<String>,
    pub answer: String,
    pub generation_error: Option<String>,
    /// Notable events: rewriter fallbacks, skipped pages, search outages.
    pub log: Vec<String>,
    pub timings: StageTimings,
}

impl RunRecord {
    pub fn action(&self) -> Option<Action> {
        self.judgment.as_ref().map(|j| j.action)
    }
}

pub struct Pipeline {
    pub thresholds: Thresholds,
    pub ablations: AblationFlags,
    pub scorer: Arc<dyn Scorer>,
    pub refiner: Arc<dyn Refiner>,
    pub web: WebSearch,
    pub generator: Arc<dyn Generator>,
}

struct Draft {
    knowledge: KnowledgeBundle,
    search_query: Option<String>,
    searched_urls: Vec<String>,
    log: Vec<String>,
    timings: StageTimings,
}

impl Draft {
    fn new() -> Self {
        Draft {
            knowledge: KnowledgeBundle::empty(KnowledgeKind::Internal),
            search_query: None,
            searched_urls: Vec::new(),
            log: Vec::new(),
            timings: StageTimings::default(),
        }
    }
}

impl Pipeline {
    pub fn run(&self, question: &QueryText, docs: &[DocumentText]) -> Result<RunRecord> {
        if docs.is_empty() {
            return Err(Error::NoDocuments);
        }
        let mut draft = Draft::new();

        let started = Instant::now();
        let scores = self.scorer.score_batch(question, docs)?;
        draft.timings.scoring_ms = millis(started.elapsed());
        let judgment = decide(&scores, self.thresholds, &self.ablations)?;

        draft.knowledge = match judgment.action {
            Action::Correct => self.internal(question, docs, &mut draft)?,
            Action::Incorrect => self.external(question, &mut draft)?,
            Action::Ambiguous => {
                let internal = self.internal(question, docs, &mut draft)?;
                let external = self.external(question, &mut draft)?;
                KnowledgeBundle::combine(internal, external)
            }
        };
        Ok(self.finish(question, scores, Some(judgment), draft))
    }

    /// Standard RAG: raw documents straight to the generator.
    pub fn run_plain(&self, question: &QueryText, docs: &[DocumentText]) -> Result<RunRecord> {
        let mut draft = Draft::new();
        draft.knowledge = RawDocuments::bundle(docs);
        Ok(self.finish(question, Vec::new(), None, draft))
    }

    /// Raw documents always supplemented with web knowledge.
    pub fn run_with_web(&self, question: &QueryText, docs: &[DocumentText]) -> Result<RunRecord> {
        let mut draft = Draft::new();
        let external = self.external(question, &mut draft)?;
        draft.knowledge = KnowledgeBundle::combine(RawDocuments::bundle(docs), external);
        Ok(self.finish(question, Vec::new(), None, draft))
    }

    fn internal(&self, question: &QueryText, docs: &[DocumentText], draft: &mut Draft) -> Result<KnowledgeBundle> {
        let started = Instant::now();
        let bundle = self.refiner.refine(question, docs, self.scorer.as_ref())?;
        draft.timings.refinement_ms += millis(started.elapsed());
        Ok(bundle)
    }

    /// Search outages degrade to empty external knowledge; scorer failures
    /// still abort.
    fn external(&self, question: &QueryText, draft: &mut Draft) -> Result<KnowledgeBundle> {
        let started = Instant::now();
        let outcome = self.web.external_knowledge(question, self.scorer.as_ref(), &mut draft.log);
        draft.timings.web_search_ms += millis(started.elapsed());
        match outcome {
            Ok(found) => {
                draft.search_query = Some(found.query);
                draft.searched_urls = found.urls;
                Ok(found.bundle)
            }
            Err(Error::SearchUnavailable(why)) => {
                log::warn!("web search unavailable for `{question}`, continuing without external knowledge: {why}");
                draft.log.push(format!("search unavailable: {why}"));
                Ok(KnowledgeBundle::empty(KnowledgeKind::External))
            }
            Err(err) => Err(err),
        }
    }

    fn finish(
        &self,
        question: &QueryText,
        doc_scores: Vec<RelevanceScore>,
        judgment: Option<ActionJudgment>,
        mut draft: Draft,
    ) -> RunRecord {
        let prompt = assemble_prompt(question, &draft.knowledge);
        let started = Instant::now();
        let (answer, generation_error) = match generate(&prompt, self.generator.as_ref()) {
            Ok(answer) => (answer, None),
            Err(err) => {
                log::warn!("generation failed for `{question}`: {err}");
                (String::new(), Some(err.to_string()))
            }
        };
        draft.timings.generation_ms = millis(started.elapsed());
        RunRecord {
            question: question.clone(),
            doc_scores,
            judgment,
            knowledge: draft.knowledge,
            search_query: draft.search_query,
            searched_urls: draft.searched_urls,
            answer,
            generation_error,
            log: draft.log,
            timings: draft.timings,
        }
    }
}
