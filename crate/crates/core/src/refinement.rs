//! Decompose-then-recompose knowledge refinement.
//!
//! Documents are cut into strips of a few sentences, every strip is scored
//! against the query, weak strips are dropped and the survivors are joined
//! back together in their original order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{RelevanceScore, Scorer};
use crate::text::{DocumentText, QueryText};

pub const STRIP_SEPARATOR: &str = "\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeStrip {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<RelevanceScore>,
}

impl KnowledgeStrip {
    pub fn new(doc_id: impl Into<String>, index: usize, text: impl Into<String>) -> Self {
        KnowledgeStrip {
            doc_id: doc_id.into(),
            index,
            text: text.into(),
            score: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Sentences per strip for documents longer than two sentences.
    pub strip_sentences: usize,
    pub top_k: usize,
    /// Strips must score strictly above this to survive.
    pub strip_threshold: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            strip_sentences: 3,
            top_k: 5,
            strip_threshold: -0.5,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strip_sentences == 0 {
            return Err(Error::Config("refine.strip_sentences must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("refine.top_k must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.strip_threshold) {
            return Err(Error::Config("refine.strip_threshold must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnowledgeKind {
    Internal,
    External,
    Combined,
}

/// Knowledge handed to the generator. `text` is always the strips' texts
/// joined by [`STRIP_SEPARATOR`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBundle {
    pub kind: KnowledgeKind,
    pub text: String,
    pub strips: Vec<KnowledgeStrip>,
}

impl KnowledgeBundle {
    pub fn from_strips(kind: KnowledgeKind, strips: Vec<KnowledgeStrip>) -> Self {
        let text = strips
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(STRIP_SEPARATOR);
        KnowledgeBundle { kind, text, strips }
    }

    pub fn empty(kind: KnowledgeKind) -> Self {
        KnowledgeBundle::from_strips(kind, Vec::new())
    }

    /// Internal strips first, then external ones.
    pub fn combine(internal: KnowledgeBundle, external: KnowledgeBundle) -> Self {
        let mut strips = internal.strips;
        strips.extend(external.strips);
        KnowledgeBundle::from_strips(KnowledgeKind::Combined, strips)
    }

    pub fn is_empty(&self) -> bool {
        self.strips.is_empty()
    }
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text. Returned
/// sentences are trimmed and never empty.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if boundary {
            let end = i + c.len_utf8();
            let sentence = text[start..end].trim();
            if !sentence.is_empty() {
                sentences.push(sentence);
            }
            start = end;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        sentences.push(rest);
    }
    sentences
}

pub fn segment(doc: &DocumentText, cfg: &RefineConfig) -> Result<Vec<KnowledgeStrip>> {
    let sentences = split_sentences(&doc.text);
    if sentences.is_empty() {
        return Err(Error::EmptyDocument(doc.id.clone()));
    }
    if sentences.len() <= 2 {
        return Ok(vec![KnowledgeStrip::new(doc.id.clone(), 0, doc.text.trim())]);
    }
    Ok(sentences
        .chunks(cfg.strip_sentences.max(1))
        .enumerate()
        .map(|(i, window)| KnowledgeStrip::new(doc.id.clone(), i, window.join(" ")))
        .collect())
}

/// Indices of the strips to keep, in position order.
///
/// Strips scoring above the threshold compete for `top_k` slots by score,
/// earlier position winning ties. When none passes, the single best strip is
/// kept so there is always something to recompose.
pub fn select_indices(scores: &[f64], cfg: &RefineConfig) -> Vec<usize> {
    let by_rank = |&a: &usize, &b: &usize| scores[b].total_cmp(&scores[a]).then(a.cmp(&b));
    let mut passing: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i] > cfg.strip_threshold)
        .collect();
    if passing.is_empty() {
        return (0..scores.len()).min_by(by_rank).into_iter().collect();
    }
    passing.sort_by(by_rank);
    passing.truncate(cfg.top_k);
    passing.sort_unstable();
    passing
}

/// Scores `strips` (given in position order) and keeps the selected ones.
pub fn filter_strips(
    query: &QueryText,
    strips: Vec<KnowledgeStrip>,
    scorer: &dyn Scorer,
    cfg: &RefineConfig,
) -> Result<Vec<KnowledgeStrip>> {
    let as_docs: Vec<DocumentText> = strips
        .iter()
        .map(|s| DocumentText::new(format!("{}#{}", s.doc_id, s.index), s.text.clone()))
        .collect();
    let scores = scorer.score_batch(query, &as_docs)?;
    let raw: Vec<f64> = scores.iter().map(|s| s.value()).collect();
    let keep = select_indices(&raw, cfg);
    let mut strips: Vec<Option<KnowledgeStrip>> = strips.into_iter().map(Some).collect();
    Ok(keep
        .into_iter()
        .map(|i| {
            let mut strip = strips[i].take().expect("indices are unique");
            strip.score = Some(scores[i]);
            strip
        })
        .collect())
}

/// Segments every document, pools the strips in (document, strip) order and
/// filters the pool as a whole. Blank documents contribute nothing.
pub fn refine(
    query: &QueryText,
    docs: &[DocumentText],
    scorer: &dyn Scorer,
    cfg: &RefineConfig,
) -> Result<KnowledgeBundle> {
    let mut pool = Vec::new();
    for doc in docs {
        match segment(doc, cfg) {
            Ok(strips) => pool.extend(strips),
            Err(Error::EmptyDocument(id)) => log::debug!("skipping blank document `{id}`"),
            Err(err) => return Err(err),
        }
    }
    if pool.is_empty() {
        return Ok(KnowledgeBundle::empty(KnowledgeKind::Internal));
    }
    let selected = filter_strips(query, pool, scorer, cfg)?;
    Ok(KnowledgeBundle::from_strips(KnowledgeKind::Internal, selected))
}

/// Turns retrieved documents into internal knowledge.
pub trait Refiner: Send + Sync {
    fn refine(
        &self,
        query: &QueryText,
        docs: &[DocumentText],
        scorer: &dyn Scorer,
    ) -> Result<KnowledgeBundle>;
}

/// The full decompose, filter, recompose procedure.
#[derive(Debug, Clone, Default)]
pub struct DecomposeRecompose {
    pub config: RefineConfig,
}

impl Refiner for DecomposeRecompose {
    fn refine(
        &self,
        query: &QueryText,
        docs: &[DocumentText],
        scorer: &dyn Scorer,
    ) -> Result<KnowledgeBundle> {
        refine(query, docs, scorer, &self.config)
    }
}

/// Passes the retrieved documents through untouched, one strip per document.
#[derive(Debug, Clone, Copy, Default)]
pub struct RawDocuments;

impl RawDocuments {
    pub fn bundle(docs: &[DocumentText]) -> KnowledgeBundle {
        let strips = docs
            .iter()
            .filter(|d| !d.text.trim().is_empty())
            .map(|d| KnowledgeStrip::new(d.id.clone(), 0, d.text.trim()))
            .collect();
        KnowledgeBundle::from_strips(KnowledgeKind::Internal, strips)
    }
}

impl Refiner for RawDocuments {
    fn refine(&self, _: &QueryText, docs: &[DocumentText], _: &dyn Scorer) -> Result<KnowledgeBundle> {
        Ok(Self::bundle(docs))
    }
}
