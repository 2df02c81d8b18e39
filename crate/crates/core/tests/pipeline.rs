mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{CountingRefiner, CountingSearch, FixedSearch};
use crag::generator::{Generator, StubGenerator, UNKNOWN_ANSWER};
use crag::pipeline::{AblationFlags, Pipeline, RunRecord, StageTimings};
use crag::refinement::{DecomposeRecompose, KnowledgeKind, Refiner};
use crag::scoring::{LexicalScorer, RemoteScorer, Scorer};
use crag::transport::{HttpResponse, MockTransport};
use crag::trigger::{judge, Action, ThresholdPreset};
use crag::websearch::{
    AllParagraphs, EvaluatorSelection, KeywordRewriter, NoSearch, PageFetcher, SearchConfig, Selector, WebSearch,
};
use crag::{DocumentText, Error, QueryText, Result};

const WIKI: &str = "https://en.wikipedia.org/wiki/France";
const OTHER: &str = "https://travel.example.com/france";

fn pages() -> Arc<MockTransport> {
    Arc::new(MockTransport::new(|req| {
        let body = match req.url.as_str() {
            WIKI => "<p>Paris is the capital city of France.</p><p>France borders Spain.</p>",
            OTHER => "<p>Cheap flights every day.</p>",
            _ => return Ok(HttpResponse::with_status(404)),
        };
        Ok(HttpResponse::ok(body))
    }))
}

struct Parts {
    scorer: Arc<dyn Scorer>,
    refiner: Arc<CountingRefiner<DecomposeRecompose>>,
    search: Arc<CountingSearch>,
    selector: Arc<dyn Selector>,
    generator: Arc<dyn Generator>,
    flags: AblationFlags,
}

impl Parts {
    fn new() -> Self {
        Parts {
            scorer: Arc::new(LexicalScorer),
            refiner: Arc::new(CountingRefiner::new(DecomposeRecompose::default())),
            search: Arc::new(CountingSearch::new(FixedSearch(vec![OTHER, WIKI]))),
            selector: Arc::new(EvaluatorSelection::default()),
            generator: Arc::new(StubGenerator),
            flags: AblationFlags::default(),
        }
    }

    fn build(&self) -> Pipeline {
        Pipeline {
            thresholds: ThresholdPreset::PopQa.thresholds(),
            ablations: self.flags.clone(),
            scorer: self.scorer.clone(),
            refiner: self.refiner.clone(),
            web: WebSearch {
                rewriter: Arc::new(KeywordRewriter),
                client: self.search.clone(),
                fetcher: PageFetcher::new(pages(), Duration::from_secs(1), 0),
                selector: self.selector.clone(),
                config: SearchConfig {
                    cache_dir: None,
                    ..SearchConfig::default()
                },
                rewrite_queries: !self.flags.no_rewriting,
            },
            generator: self.generator.clone(),
        }
    }
}

fn q(text: &str) -> QueryText {
    QueryText::new(text).unwrap()
}

fn doc(id: &str, text: &str) -> DocumentText {
    DocumentText::new(id, text)
}

#[test]
fn correct_branch_stays_internal() {
    let parts = Parts::new();
    let record = parts
        .build()
        .run(&q("capital of France"), &[doc("a", "Paris is the capital of France."), doc("b", "Rain.")])
        .unwrap();
    assert_eq!(record.action(), Some(Action::Correct));
    assert_eq!(parts.search.calls(), 0);
    assert_eq!(parts.refiner.calls(), 1);
    assert_eq!(record.knowledge.kind, KnowledgeKind::Internal);
    assert_eq!(record.answer, "Paris is the capital of France.");
    assert!(record.searched_urls.is_empty());
    assert_eq!(record.search_query, None);
}

#[test]
fn incorrect_branch_goes_to_the_web() {
    let parts = Parts::new();
    let record = parts
        .build()
        .run(&q("What is the capital city of France?"), &[doc("a", "Bananas are yellow.")])
        .unwrap();
    assert_eq!(record.action(), Some(Action::Incorrect));
    assert_eq!(parts.refiner.calls(), 0);
    assert_eq!(parts.search.calls(), 1);
    assert_eq!(record.knowledge.kind, KnowledgeKind::External);
    assert!(record.answer.contains("Paris"), "{}", record.answer);
    assert_eq!(record.searched_urls, [WIKI, OTHER]);
    assert_eq!(record.search_query.as_deref(), Some("capital city France"));
}

#[test]
fn ambiguous_branch_combines_internal_first() {
    let parts = Parts::new();
    // 2 of 4 query tokens: 2 * 2 / 4 - 1 = 0.
    let question = q("capital city of France");
    let record = parts.build().run(&question, &[doc("a", "The capital city is big.")]).unwrap();
    assert_eq!(record.doc_scores[0].value(), 0.0);
    assert_eq!(record.action(), Some(Action::Ambiguous));
    assert_eq!((parts.refiner.calls(), parts.search.calls()), (1, 1));
    let k = &record.knowledge;
    assert_eq!(k.kind, KnowledgeKind::Combined);
    assert_eq!(k.strips[0].doc_id, "a");
    assert_eq!(k.strips.last().unwrap().doc_id, WIKI);
    assert_eq!(k.text, "The capital city is big.\nParis is the capital city of France.");
    assert_eq!(record.answer, "Paris is the capital city of France.");
}

#[test]
fn search_outage_yields_empty_external_knowledge() {
    let mut parts = Parts::new();
    parts.search = Arc::new(CountingSearch::new(NoSearch));
    let record = parts.build().run(&q("capital of France"), &[doc("a", "Bananas.")]).unwrap();
    assert_eq!(record.action(), Some(Action::Incorrect));
    assert_eq!(record.knowledge.kind, KnowledgeKind::External);
    assert!(record.knowledge.is_empty());
    assert_eq!(record.answer, UNKNOWN_ANSWER);
    assert!(record.log.iter().any(|l| l.starts_with("search unavailable")));
}

#[test]
fn scorer_outage_aborts() {
    let mut parts = Parts::new();
    let down = Arc::new(MockTransport::new(|_| Ok(HttpResponse::with_status(503))));
    parts.scorer = Arc::new(RemoteScorer::new(
        down,
        url::Url::parse("http://127.0.0.1:9/score").unwrap(),
        Duration::from_millis(100),
        1,
        2,
    ));
    let err = parts.build().run(&q("x"), &[doc("a", "x")]).unwrap_err();
    assert!(matches!(err, Error::ScorerUnavailable(_)), "{err}");
    assert_eq!(parts.search.calls(), 0);
}

#[test]
fn generation_failure_is_recorded() {
    struct Broken;
    impl Generator for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn generate(&self, _: &str) -> Result<String> {
            Err(Error::Generation("backend down".into()))
        }
    }
    let mut parts = Parts::new();
    parts.generator = Arc::new(Broken);
    let record = parts.build().run(&q("capital of France"), &[doc("a", "Paris is the capital of France.")]).unwrap();
    assert_eq!(record.answer, "");
    assert!(record.generation_error.unwrap().contains("backend down"));
}

#[test]
fn no_documents_rejected() {
    assert!(matches!(Parts::new().build().run(&q("x"), &[]), Err(Error::NoDocuments)));
}

#[test]
fn recorded_judgment_matches_recorded_scores() {
    let parts = Parts::new();
    let pipeline = parts.build();
    for (question, text) in [
        ("capital of France", "Paris is the capital of France."),
        ("capital city of France", "The capital city is big."),
        ("capital of France", "Bananas."),
    ] {
        let record = pipeline.run(&q(question), &[doc("a", text), doc("b", "Other words.")]).unwrap();
        let again = judge(&record.doc_scores, pipeline.thresholds).unwrap();
        assert_eq!(Some(&again), record.judgment.as_ref());
    }
}

fn without_timings(mut record: RunRecord) -> RunRecord {
    record.timings = StageTimings::default();
    record
}

#[test]
fn deterministic_runs() {
    let parts = Parts::new();
    let docs = [doc("a", "The capital city is big. It has parks. Rivers cross it. Trams run late.")];
    let first = parts.build().run(&q("capital city of France"), &docs).unwrap();
    let second = parts.build().run(&q("capital city of France"), &docs).unwrap();
    assert_eq!(without_timings(first), without_timings(second));
}

#[test]
fn no_refinement_feeds_raw_documents() {
    let mut parts = Parts::new();
    parts.flags.no_refinement = true;
    let pipeline = parts.build();
    let raw: Arc<dyn Refiner> = Arc::new(crag::refinement::RawDocuments);
    let pipeline = Pipeline { refiner: raw, ..pipeline };
    let text = "Paris is the capital of France. Unrelated words follow here. More filler text. Last one.";
    let record = pipeline.run(&q("capital of France"), &[doc("a", text)]).unwrap();
    assert_eq!(record.knowledge.text, text);
}

#[test]
fn no_selection_keeps_every_paragraph() {
    let mut parts = Parts::new();
    parts.selector = Arc::new(AllParagraphs);
    let record = parts.build().run(&q("capital of France"), &[doc("a", "Bananas.")]).unwrap();
    assert_eq!(
        record.knowledge.text,
        "Paris is the capital city of France.\nFrance borders Spain.\nCheap flights every day."
    );
}

#[test]
fn no_rewriting_searches_the_question() {
    let mut parts = Parts::new();
    parts.flags.no_rewriting = true;
    let record = parts.build().run(&q("What is the capital of France?"), &[doc("a", "Bananas.")]).unwrap();
    assert_eq!(record.search_query.as_deref(), Some("What is the capital of France?"));
}

#[test]
fn baselines_skip_the_evaluator() {
    let parts = Parts::new();
    let pipeline = parts.build();
    let docs = [doc("a", "Bananas."), doc("b", "Paris is the capital of France.")];
    let plain = pipeline.run_plain(&q("capital of France"), &docs).unwrap();
    assert_eq!(plain.judgment, None);
    assert!(plain.doc_scores.is_empty());
    assert_eq!(plain.knowledge.text, "Bananas.\nParis is the capital of France.");
    assert_eq!(parts.search.calls(), 0);

    let web = pipeline.run_with_web(&q("capital of France"), &docs).unwrap();
    assert_eq!(web.knowledge.kind, KnowledgeKind::Combined);
    assert_eq!(parts.search.calls(), 1);
    assert!(web.knowledge.text.starts_with("Bananas.\nParis is the capital of France.\n"));
}
