mod common;

use std::collections::BTreeSet;

use common::{fixture_config, fixture_dataset, fixture_dir, start_mock};
use crag::harness::{accuracy, run_experiment, Degradation, Mode};
use crag::registry::default_transport;
use crag::text::{token_set, tokenize};
use crag::trigger::Action;
use crag::websearch::KeywordRewriter;

#[test]
fn fixture_is_built_as_intended() {
    let dataset = fixture_dataset();
    assert_eq!(dataset.len(), 20);
    let pages: std::collections::BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixture_dir().join("web/pages.json")).unwrap()).unwrap();
    let all_golds: Vec<String> = dataset.iter().flat_map(|i| i.answers.iter().map(|a| a.to_lowercase())).collect();

    for inst in &dataset {
        let relevant = inst.relevant_doc_ids.as_ref().unwrap();
        assert_eq!(relevant.len(), 1, "{}", inst.id);
        let wanted = token_set(inst.question.as_str());
        for doc in &inst.docs {
            let tokens: BTreeSet<String> = tokenize(&doc.text).collect();
            if relevant.contains(&doc.id) {
                assert!(wanted.is_subset(&tokens), "{} misses question tokens", doc.id);
                assert!(accuracy(&doc.text, &inst.answers), "{} lacks the answer", doc.id);
            } else {
                assert!(wanted.is_disjoint(&tokens), "{} overlaps its question", doc.id);
                let lower = doc.text.to_lowercase();
                assert!(all_golds.iter().all(|g| !lower.contains(g)), "{} leaks a gold answer", doc.id);
            }
        }
        let wiki = pages
            .iter()
            .find(|(url, body)| url.contains("wikipedia.org") && accuracy(body, &inst.answers))
            .map(|(url, _)| url);
        assert!(wiki.is_some(), "no page answers {}", inst.id);
        assert!(!KeywordRewriter::keywords(inst.question.as_str()).is_empty());
    }
}

fn run(mode: Mode, p: Option<f64>) -> crag::harness::ExperimentReport {
    let server = start_mock();
    let cache = tempfile::tempdir().unwrap();
    let cfg = fixture_config(&server, cache.path());
    let degradation = p.map(|p| Degradation { p, seed: 42 });
    run_experiment(&fixture_dataset(), &cfg, mode, degradation, default_transport(&cfg)).unwrap()
}

#[test]
fn crag_is_perfect_with_intact_retrieval() {
    let report = run(Mode::Crag, Some(0.0));
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.count(Action::Correct), 20);
    assert!(report.instances.iter().all(|r| r.record.searched_urls.is_empty()));
}

#[test]
fn plain_rag_fails_without_relevant_documents() {
    assert_eq!(run(Mode::PlainRag, Some(0.0)).accuracy, 1.0);
    assert_eq!(run(Mode::PlainRag, Some(1.0)).accuracy, 0.0);
}

#[test]
fn crag_recovers_from_the_web() {
    let report = run(Mode::Crag, Some(1.0));
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.count(Action::Incorrect), 20);
    for r in &report.instances {
        assert!(r.record.searched_urls[0].starts_with("https://en.wikipedia.org/"));
        assert!(r.record.log.is_empty(), "{:?}", r.record.log);
    }
    assert_eq!(report.accuracy, report.recompute_accuracy());
}

#[test]
fn rag_web_always_searches() {
    let report = run(Mode::RagWeb, Some(1.0));
    assert_eq!(report.accuracy, 1.0);
    assert!(report.instances.iter().all(|r| r.record.search_query.is_some()));
}

#[test]
fn report_snapshots_config() {
    let report = run(Mode::Crag, None);
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["config"]["search"]["kind"], "http");
    assert_eq!(json["config"]["thresholds"]["preset"], "popqa");
    assert_eq!(json["mode"], "crag");
    assert_eq!(json["action_histogram"]["Correct"], 20);
}
