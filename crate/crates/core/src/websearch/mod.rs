//! External knowledge from web search.
//!
//! The question is rewritten into keywords, sent to a search backend, the
//! top pages (Wikipedia first) are fetched and split into `<p>` paragraphs,
//! and the paragraphs are filtered with the same evaluator-driven selection
//! used for internal knowledge.

pub mod extract;
pub mod fetch;
pub mod rewrite;
pub mod search;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::refinement::{filter_strips, KnowledgeBundle, KnowledgeKind, KnowledgeStrip, RefineConfig};
use crate::scoring::{parse_endpoint, Scorer};
use crate::text::QueryText;

pub use fetch::{PageContent, PageFetcher};
pub use rewrite::{KeywordRewriter, LlmRewriter, Rewriter, SearchQuery};
pub use search::{HttpSearchClient, NoSearch, SearchClient, SearchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Registered backend name: `none` or `http`.
    pub kind: String,
    pub endpoint: Option<String>,
    pub top_k_urls: usize,
    /// Hits requested from the backend before Wikipedia promotion.
    pub request_results: usize,
    pub prefer_wikipedia: bool,
    pub timeout_ms: u64,
    pub fetch_timeout_ms: u64,
    pub retries: u32,
    pub cache_dir: Option<PathBuf>,
    /// When set, pages are fetched through `GET {fetch_proxy}?url=...`.
    pub fetch_proxy: Option<String>,
    pub fetch_concurrency: usize,
    /// Environment variable holding the search backend API key.
    pub api_key_env: String,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            kind: "none".into(),
            endpoint: None,
            top_k_urls: 5,
            request_results: 10,
            prefer_wikipedia: true,
            timeout_ms: 10_000,
            fetch_timeout_ms: 10_000,
            retries: 2,
            cache_dir: Some(PathBuf::from(".crag-cache")),
            fetch_proxy: None,
            fetch_concurrency: 4,
            api_key_env: "CRAG_SEARCH_API_KEY".into(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k_urls == 0 {
            return Err(Error::Config("search.top_k_urls must be at least 1".into()));
        }
        if self.fetch_concurrency == 0 {
            return Err(Error::Config("search.fetch_concurrency must be at least 1".into()));
        }
        if self.kind == "http" && self.endpoint.is_none() {
            return Err(Error::Config("search.endpoint is required for kind `http`".into()));
        }
        if let Some(endpoint) = &self.endpoint {
            parse_endpoint("search.endpoint", endpoint)?;
        }
        if let Some(proxy) = &self.fetch_proxy {
            parse_endpoint("search.fetch_proxy", proxy)?;
        }
        Ok(())
    }
}

/// Paragraphs are strips already; they are filtered with the internal
/// selection rule, ordered by (page, paragraph).
pub fn select_external(
    question: &QueryText,
    pages: &[PageContent],
    scorer: &dyn Scorer,
    cfg: &RefineConfig,
) -> Result<KnowledgeBundle> {
    let strips = page_strips(pages);
    if strips.is_empty() {
        return Ok(KnowledgeBundle::empty(KnowledgeKind::External));
    }
    let selected = filter_strips(question, strips, scorer, cfg)?;
    Ok(KnowledgeBundle::from_strips(KnowledgeKind::External, selected))
}

fn page_strips(pages: &[PageContent]) -> Vec<KnowledgeStrip> {
    pages
        .iter()
        .flat_map(|page| {
            page.paragraphs
                .iter()
                .enumerate()
                .map(|(i, p)| KnowledgeStrip::new(page.url.clone(), i, p.clone()))
        })
        .collect()
}

/// Turns fetched pages into external knowledge.
pub trait Selector: Send + Sync {
    fn select(&self, question: &QueryText, pages: &[PageContent], scorer: &dyn Scorer) -> Result<KnowledgeBundle>;
}

#[derive(Debug, Clone, Default)]
pub struct EvaluatorSelection {
    pub config: RefineConfig,
}

impl Selector for EvaluatorSelection {
    fn select(&self, question: &QueryText, pages: &[PageContent], scorer: &dyn Scorer) -> Result<KnowledgeBundle> {
        select_external(question, pages, scorer, &self.config)
    }
}

/// Keeps every paragraph of every page, unscored.
#[derive(Debug, Clone, Copy, Default)]
pub struct AllParagraphs;

impl Selector for AllParagraphs {
    fn select(&self, _: &QueryText, pages: &[PageContent], _: &dyn Scorer) -> Result<KnowledgeBundle> {
        Ok(KnowledgeBundle::from_strips(KnowledgeKind::External, page_strips(pages)))
    }
}

/// Everything the external path produced for one question.
#[derive(Debug, Clone)]
pub struct ExternalKnowledge {
    pub query: String,
    pub urls: Vec<String>,
    pub bundle: KnowledgeBundle,
}

/// Rewrite, search, fetch and select, wired together.
pub struct WebSearch {
    pub rewriter: Arc<dyn Rewriter>,
    pub client: Arc<dyn SearchClient>,
    pub fetcher: PageFetcher,
    pub selector: Arc<dyn Selector>,
    pub config: SearchConfig,
    /// When false the raw question is searched verbatim.
    pub rewrite_queries: bool,
}

impl WebSearch {
    /// The search string for `question`. A failing rewriter falls back to
    /// [`KeywordRewriter`]; the fallback is noted in `log`.
    pub fn query_for(&self, question: &QueryText, log: &mut Vec<String>) -> String {
        if !self.rewrite_queries {
            return question.as_str().to_string();
        }
        match self.rewriter.rewrite(question) {
            Ok(q) => q.to_query_string(),
            Err(err) => {
                log::warn!("rewriter `{}` failed, using keyword fallback: {err}", self.rewriter.name());
                log.push(format!("rewriter fallback: {err}"));
                KeywordRewriter
                    .rewrite(question)
                    .map(|q| q.to_query_string())
                    .unwrap_or_else(|_| question.as_str().to_string())
            }
        }
    }

    /// Errors with [`Error::SearchUnavailable`] when the backend fails, and
    /// propagates scorer errors. Pages that fail to fetch are skipped.
    pub fn external_knowledge(
        &self,
        question: &QueryText,
        scorer: &dyn Scorer,
        log: &mut Vec<String>,
    ) -> Result<ExternalKnowledge> {
        let query = self.query_for(question, log);
        let results = search::search(&query, self.client.as_ref(), &self.config)?;
        let mut pages = Vec::with_capacity(results.len());
        for (result, page) in results.iter().zip(self.fetcher.fetch_all(&results)) {
            match page {
                Ok(page) => pages.push(page),
                Err(err) => {
                    log::warn!("skipping {}: {err}", result.url);
                    log.push(format!("fetch skipped: {err}"));
                }
            }
        }
        let bundle = self.selector.select(question, &pages, scorer)?;
        Ok(ExternalKnowledge {
            query,
            urls: results.into_iter().map(|r| r.url).collect(),
            bundle,
        })
    }
}
