//! Blocking HTTP transport shared by every remote strategy.
//!
//! Remote scorers, rewriters, generators, search backends and the page
//! fetcher all speak HTTP through [`Transport`], so tests can swap in
//! [`MockTransport`] and the CLI can wrap the real transport in
//! [`LoopbackOnly`] for hermetic runs.

use std::io::Read;
use std::net::IpAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub method: Method,
    pub url: Url,
    pub headers: Vec<(String, String)>,
    pub body: Option<String>,
    pub timeout: Duration,
}

impl HttpRequest {
    pub fn get(url: Url, timeout: Duration) -> Self {
        HttpRequest {
            method: Method::Get,
            url,
            headers: Vec::new(),
            body: None,
            timeout,
        }
    }

    pub fn post_json(url: Url, body: String, timeout: Duration) -> Self {
        HttpRequest {
            method: Method::Post,
            url,
            headers: vec![("content-type".into(), "application/json".into())],
            body: Some(body),
            timeout,
        }
    }

    pub fn header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse {
            status: 200,
            content_type: None,
            body: body.into(),
        }
    }

    pub fn json(value: &serde_json::Value) -> Self {
        HttpResponse {
            status: 200,
            content_type: Some("application/json".into()),
            body: value.to_string(),
        }
    }

    pub fn with_status(status: u16) -> Self {
        HttpResponse {
            status,
            content_type: None,
            body: String::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("request to {0} timed out")]
    Timeout(String),

    #[error("connection to {url} failed: {message}")]
    Connection { url: String, message: String },

    #[error("{url} answered HTTP {status}")]
    Status { url: String, status: u16 },

    #[error("offline mode forbids request to {0}")]
    Offline(String),
}

impl TransportError {
    fn is_retryable(&self) -> bool {
        match self {
            TransportError::Timeout(_) | TransportError::Connection { .. } => true,
            TransportError::Status { status, .. } => *status >= 500 || *status == 429,
            TransportError::Offline(_) => false,
        }
    }
}

pub trait Transport: Send + Sync {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        (**self).execute(request)
    }
}

/// Sends `request`, retrying transport failures and 5xx/429 answers up to
/// `retries` extra times. Any non-2xx final answer is an error.
pub fn send_with_retries(
    transport: &dyn Transport,
    request: &HttpRequest,
    retries: u32,
) -> Result<HttpResponse, TransportError> {
    let mut attempt = 0;
    loop {
        let outcome = transport.execute(request).and_then(|resp| {
            if resp.is_success() {
                Ok(resp)
            } else {
                Err(TransportError::Status {
                    url: request.url.to_string(),
                    status: resp.status,
                })
            }
        });
        match outcome {
            Err(err) if attempt < retries && err.is_retryable() => {
                attempt += 1;
                log::debug!("retrying {} (attempt {attempt}): {err}", request.url);
                thread::sleep(Duration::from_millis(20 << attempt.min(5)));
            }
            other => return other,
        }
    }
}

/// Real network transport.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for UreqTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let url = request.url.as_str();
        let timeout = Some(request.timeout);
        let result = match request.method {
            Method::Get => {
                let mut builder = self.agent.get(url);
                for (name, value) in &request.headers {
                    builder = builder.header(name.as_str(), value.as_str());
                }
                builder.config().timeout_global(timeout).build().call()
            }
            Method::Post => {
                let mut builder = self.agent.post(url);
                for (name, value) in &request.headers {
                    builder = builder.header(name.as_str(), value.as_str());
                }
                builder
                    .config()
                    .timeout_global(timeout)
                    .build()
                    .send(request.body.as_deref().unwrap_or_default())
            }
        };
        let mut response = result.map_err(|err| match err {
            ureq::Error::Timeout(_) => TransportError::Timeout(url.to_string()),
            other => TransportError::Connection {
                url: url.to_string(),
                message: other.to_string(),
            },
        })?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let mut body = String::new();
        response
            .body_mut()
            .as_reader()
            .read_to_string(&mut body)
            .map_err(|err| TransportError::Connection {
                url: url.to_string(),
                message: err.to_string(),
            })?;
        Ok(HttpResponse {
            status,
            content_type,
            body,
        })
    }
}

pub fn is_loopback(url: &Url) -> bool {
    match url.host() {
        Some(url::Host::Domain(domain)) => domain.eq_ignore_ascii_case("localhost"),
        Some(url::Host::Ipv4(ip)) => IpAddr::V4(ip).is_loopback(),
        Some(url::Host::Ipv6(ip)) => IpAddr::V6(ip).is_loopback(),
        None => false,
    }
}

/// Refuses every request whose host is not a loopback address.
pub struct LoopbackOnly<T>(pub T);

impl<T: Transport> Transport for LoopbackOnly<T> {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        if !is_loopback(&request.url) {
            return Err(TransportError::Offline(request.url.to_string()));
        }
        self.0.execute(request)
    }
}

type Handler = dyn Fn(&HttpRequest) -> Result<HttpResponse, TransportError> + Send + Sync;

/// In-process transport backed by a closure, counting every request it sees.
pub struct MockTransport {
    handler: Box<Handler>,
    requests: AtomicUsize,
    seen: Mutex<Vec<String>>,
}

impl MockTransport {
    pub fn new<F>(handler: F) -> Self
    where
        F: Fn(&HttpRequest) -> Result<HttpResponse, TransportError> + Send + Sync + 'static,
    {
        MockTransport {
            handler: Box::new(handler),
            requests: AtomicUsize::new(0),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// URLs requested so far, in order.
    pub fn requested_urls(&self) -> Vec<String> {
        self.seen.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn execute(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(request.url.to_string());
        (self.handler)(request)
    }
}
