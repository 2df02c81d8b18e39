#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crag::harness::{load_dataset, DatasetInstance};
use crag::mock_server::{MockFixtures, MockServer};
use crag::refinement::{KnowledgeBundle, Refiner};
use crag::scoring::{RelevanceScore, Scorer};
use crag::websearch::{SearchClient, SearchResult};
use crag::{DocumentText, PipelineConfig, QueryText, Result};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/popqa20")
}

pub fn fixture_dataset() -> Vec<DatasetInstance> {
    load_dataset(&fixture_dir().join("dataset.jsonl")).expect("fixture dataset loads")
}

pub fn start_mock() -> MockServer {
    let fixtures = MockFixtures::load(&fixture_dir().join("web")).expect("web fixtures load");
    MockServer::start(0, fixtures).expect("mock server starts")
}

/// Lexical scorer, stub generator, mock search through `server`, offline.
pub fn fixture_config(server: &MockServer, cache_dir: &Path) -> PipelineConfig {
    PipelineConfig::load(
        None,
        &[
            "offline=true".into(),
            "search.kind=http".into(),
            format!("search.endpoint={}", server.url("search")),
            format!("search.fetch_proxy={}", server.url("page")),
            format!("search.cache_dir={}", serde_json::to_string(cache_dir).unwrap()),
        ],
    )
    .expect("fixture config is valid")
}

/// Scores documents from a fixed table keyed by document text; unknown
/// texts score -1.
pub struct TableScorer(pub Vec<(String, f64)>);

impl Scorer for TableScorer {
    fn name(&self) -> &str {
        "table"
    }

    fn score(&self, _: &QueryText, doc: &DocumentText) -> Result<RelevanceScore> {
        let value = self.0.iter().find(|(t, _)| *t == doc.text).map_or(-1.0, |(_, s)| *s);
        RelevanceScore::new(value)
    }
}

pub struct CountingSearch {
    pub inner: Arc<dyn SearchClient>,
    pub calls: AtomicUsize,
}

impl CountingSearch {
    pub fn new(inner: impl SearchClient + 'static) -> Self {
        CountingSearch {
            inner: Arc::new(inner),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl SearchClient for CountingSearch {
    fn name(&self) -> &str {
        "counting"
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchResult>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.search(query, limit)
    }
}

pub struct CountingRefiner<R> {
    pub inner: R,
    pub calls: AtomicUsize,
}

impl<R> CountingRefiner<R> {
    pub fn new(inner: R) -> Self {
        CountingRefiner {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<R: Refiner> Refiner for CountingRefiner<R> {
    fn refine(&self, query: &QueryText, docs: &[DocumentText], scorer: &dyn Scorer) -> Result<KnowledgeBundle> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.refine(query, docs, scorer)
    }
}

/// A search backend that always returns the same URLs.
pub struct FixedSearch(pub Vec<&'static str>);

impl SearchClient for FixedSearch {
    fn name(&self) -> &str {
        "fixed"
    }

    fn search(&self, _: &str, limit: usize) -> Result<Vec<SearchResult>> {
        Ok(self
            .0
            .iter()
            .take(limit)
            .enumerate()
            .map(|(i, url)| SearchResult {
                url: url.to_string(),
                title: None,
                rank: i + 1,
            })
            .collect())
    }
}

pub fn arc<T>(value: T) -> Arc<T> {
    Arc::new(value)
}
