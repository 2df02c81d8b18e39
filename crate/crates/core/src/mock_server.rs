//! Fixture-backed HTTP server speaking every wire shape the pipeline uses,
//! for hermetic runs.
//!
//! | route            | reply                                                      |
//! |------------------|------------------------------------------------------------|
//! | `GET /search`    | `{"results": [...]}` of the best-matching fixture entry    |
//! | `GET /page`      | fixture body for the `url` parameter, or 404               |
//! | `POST /generate` | `{"text"}`: fixed reply, stub answer or prompt length      |
//! | `POST /rewrite`  | `{"text": "query: a, b"}` from the keyword rewriter        |
//! | `POST /score`    | `{"score"}` from the lexical scorer                        |
//!
//! A fixture directory holds `search.json`, `pages.json` and optionally
//! `generate.json`; missing files mean empty fixtures.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Request, Response, Server};
use url::Url;

use crate::completion::CompletionRequest;
use crate::error::{Error, Result};
use crate::generator::{Generator, StubGenerator};
use crate::scoring::LexicalScorer;
use crate::text::{overlap, token_set};
use crate::websearch::rewrite::KeywordRewriter;
use crate::websearch::search::{SearchHit, SearchReply};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchEntry {
    pub query: String,
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy")]
pub enum GenerateBehaviour {
    /// Answer like [`StubGenerator`].
    #[default]
    Stub,
    /// Reply with the prompt length in bytes.
    EchoLength,
    /// Always reply with `text`.
    Fixed { text: String },
}

#[derive(Debug, Clone, Default)]
pub struct MockFixtures {
    pub search: Vec<SearchEntry>,
    pub pages: BTreeMap<String, String>,
    pub generate: GenerateBehaviour,
}

fn read_fixture<T: for<'de> Deserialize<'de> + Default>(path: &Path) -> Result<T> {
    match fs::read_to_string(path) {
        Ok(raw) => serde_json::from_str(&raw).map_err(|err| Error::Config(format!("{}: {err}", path.display()))),
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => Ok(T::default()),
        Err(source) => Err(Error::Input {
            path: path.to_path_buf(),
            source,
        }),
    }
}

impl MockFixtures {
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Config(format!("fixture directory {} does not exist", dir.display())));
        }
        Ok(MockFixtures {
            search: read_fixture(&dir.join("search.json"))?,
            pages: read_fixture(&dir.join("pages.json"))?,
            generate: read_fixture(&dir.join("generate.json"))?,
        })
    }

    /// Results of the entry sharing the most tokens with `query`; the first
    /// such entry wins ties, and no overlap at all means no results.
    pub fn search_results(&self, query: &str) -> Vec<SearchHit> {
        let wanted = token_set(query);
        let mut best: Option<(&SearchEntry, usize)> = None;
        for entry in &self.search {
            let hits = overlap(&wanted, &entry.query);
            if hits > 0 && best.is_none_or(|(_, top)| hits > top) {
                best = Some((entry, hits));
            }
        }
        best.map(|(entry, _)| entry.results.clone()).unwrap_or_default()
    }

    fn generate(&self, prompt: &str) -> String {
        match &self.generate {
            GenerateBehaviour::Stub => StubGenerator.generate(prompt).unwrap_or_default(),
            GenerateBehaviour::EchoLength => prompt.len().to_string(),
            GenerateBehaviour::Fixed { text } => text.clone(),
        }
    }
}

pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `127.0.0.1:port` (0 picks a free port) and serves on a few
    /// background threads until dropped.
    pub fn start(port: u16, fixtures: MockFixtures) -> Result<Self> {
        let server = Server::http(("127.0.0.1", port))
            .map_err(|err| Error::Io(std::io::Error::other(format!("cannot bind 127.0.0.1:{port}: {err}"))))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::Io(std::io::Error::other("mock server has no ip address")))?;
        let server = Arc::new(server);
        let fixtures = Arc::new(fixtures);
        let stop = Arc::new(AtomicBool::new(false));
        let workers = (0..4)
            .map(|_| {
                let (server, fixtures, stop) = (server.clone(), fixtures.clone(), stop.clone());
                thread::spawn(move || {
                    while !stop.load(Ordering::SeqCst) {
                        match server.recv_timeout(Duration::from_millis(50)) {
                            Ok(Some(request)) => handle(request, &fixtures),
                            Ok(None) => {}
                            Err(err) => {
                                log::warn!("mock server stopped receiving: {err}");
                                break;
                            }
                        }
                    }
                })
            })
            .collect();
        Ok(MockServer { addr, stop, workers })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}/{}", self.addr, path.trim_start_matches('/'))
    }

    /// Blocks until the server threads exit.
    pub fn wait(mut self) {
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

fn json_response(status: u16, body: serde_json::Value) -> Response<std::io::Cursor<Vec<u8>>> {
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    Response::from_string(body.to_string()).with_status_code(status).with_header(header)
}

fn not_found() -> Response<std::io::Cursor<Vec<u8>>> {
    json_response(404, json!({"error": "not found"}))
}

fn handle(mut request: Request, fixtures: &MockFixtures) {
    let url = match Url::parse(&format!("http://mock{}", request.url())) {
        Ok(url) => url,
        Err(_) => {
            let _ = request.respond(not_found());
            return;
        }
    };
    let param = |name: &str| url.query_pairs().find(|(k, _)| k == name).map(|(_, v)| v.into_owned());
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        let _ = request.respond(json_response(400, json!({"error": "unreadable body"})));
        return;
    }

    let response = match (request.method(), url.path()) {
        (Method::Get, "/search") => {
            let query = param("q").unwrap_or_default();
            let limit = param("num").and_then(|n| n.parse().ok()).unwrap_or(usize::MAX);
            let mut results = fixtures.search_results(&query);
            results.truncate(limit);
            json_response(200, serde_json::to_value(SearchReply { results }).expect("reply serializes"))
        }
        (Method::Get, "/page") => match param("url").and_then(|u| fixtures.pages.get(&u)) {
            Some(html) => Response::from_string(html.clone())
                .with_header(Header::from_bytes("Content-Type", "text/html; charset=utf-8").expect("static header")),
            None => not_found(),
        },
        (Method::Post, "/generate") => match serde_json::from_str::<CompletionRequest>(&body) {
            Ok(req) => json_response(200, json!({"text": fixtures.generate(&req.prompt)})),
            Err(err) => json_response(400, json!({"error": err.to_string()})),
        },
        (Method::Post, "/rewrite") => match serde_json::from_str::<CompletionRequest>(&body) {
            Ok(req) => {
                let question = rewrite_question(&req.prompt);
                let keywords = KeywordRewriter::keywords(question);
                let text = if keywords.is_empty() { question.to_string() } else { keywords.join(", ") };
                json_response(200, json!({"text": format!("query: {text}")}))
            }
            Err(err) => json_response(400, json!({"error": err.to_string()})),
        },
        (Method::Post, "/score") => match serde_json::from_str::<serde_json::Value>(&body) {
            Ok(v) => match (v["query"].as_str(), v["document"].as_str()) {
                (Some(q), Some(d)) => json_response(200, json!({"score": LexicalScorer::score_text(q, d).value()})),
                _ => json_response(400, json!({"error": "expected {query, document}"})),
            },
            Err(err) => json_response(400, json!({"error": err.to_string()})),
        },
        _ => not_found(),
    };
    if let Err(err) = request.respond(response) {
        log::debug!("mock server could not answer: {err}");
    }
}

/// The question inside a rewrite prompt: the text after the last
/// `question:` line, without the trailing `query:`.
fn rewrite_question(prompt: &str) -> &str {
    let tail = prompt.rfind("question:").map_or(prompt, |at| &prompt[at + "question:".len()..]);
    tail.trim_end().trim_end_matches("query:").trim()
}
