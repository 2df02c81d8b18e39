use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, Sender};
use serde::Serialize;
use url::Url;

use crate::error::{Error, Result};
use crate::scoring::{RelevanceScore, Scorer};
use crate::text::{DocumentText, QueryText};
use crate::transport::{send_with_retries, HttpRequest, Transport};

#[derive(Serialize)]
struct ScoreRequest<'a> {
    query: &'a str,
    document: &'a str,
}

/// Counting gate: a bounded channel whose capacity is the number of permits.
struct InFlightGate {
    acquire: Sender<()>,
    release: Receiver<()>,
}

impl InFlightGate {
    fn new(permits: usize) -> Self {
        let (acquire, release) = bounded(permits.max(1));
        InFlightGate { acquire, release }
    }

    fn enter(&self) -> GateGuard<'_> {
        self.acquire.send(()).expect("gate receiver lives with sender");
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a InFlightGate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let _ = self.0.release.recv();
    }
}

/// Scores pairs with a served evaluator: `POST {query, document}` answered by
/// `{score}`. Out-of-range scores are clamped; anything non-numeric is an
/// error.
pub struct RemoteScorer {
    transport: Arc<dyn Transport>,
    endpoint: Url,
    timeout: Duration,
    retries: u32,
    max_in_flight: usize,
    gate: InFlightGate,
}

impl RemoteScorer {
    pub fn new(
        transport: Arc<dyn Transport>,
        endpoint: Url,
        timeout: Duration,
        retries: u32,
        max_in_flight: usize,
    ) -> Self {
        RemoteScorer {
            transport,
            endpoint,
            timeout,
            retries,
            max_in_flight: max_in_flight.max(1),
            gate: InFlightGate::new(max_in_flight),
        }
    }
}

pub(crate) fn parse_score_reply(body: &str) -> Result<RelevanceScore> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|err| Error::InvalidScoreReply(err.to_string()))?;
    let raw = value
        .get("score")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::InvalidScoreReply(format!("no numeric `score` in {body}")))?;
    RelevanceScore::clamped(raw).ok_or_else(|| Error::InvalidScoreReply(body.to_string()))
}

impl Scorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn score(&self, query: &QueryText, doc: &DocumentText) -> Result<RelevanceScore> {
        let body = serde_json::to_string(&ScoreRequest {
            query: query.as_str(),
            document: &doc.text,
        })?;
        let request = HttpRequest::post_json(self.endpoint.clone(), body, self.timeout);
        let response = {
            let _permit = self.gate.enter();
            send_with_retries(self.transport.as_ref(), &request, self.retries)
                .map_err(Error::ScorerUnavailable)?
        };
        parse_score_reply(&response.body)
    }

    fn score_batch(&self, query: &QueryText, docs: &[DocumentText]) -> Result<Vec<RelevanceScore>> {
        let mut scores = Vec::with_capacity(docs.len());
        for chunk in docs.chunks(self.max_in_flight) {
            let chunk_scores: Vec<Result<RelevanceScore>> = thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|doc| scope.spawn(move || self.score(query, doc)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scoring thread panicked"))
                    .collect()
            });
            for score in chunk_scores {
                scores.push(score?);
            }
        }
        Ok(scores)
    }
}
