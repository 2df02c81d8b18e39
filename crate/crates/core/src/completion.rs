//! Client for text-completion endpoints: `POST {prompt, max_tokens}` answered
//! by `{text}`. Used by the remote generator, the LLM rewriter and the
//! LLM-as-evaluator scorer.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::transport::{send_with_retries, HttpRequest, Transport, TransportError};

#[derive(Debug, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompletionReply {
    pub text: String,
}

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed completion reply: {0}")]
    BadReply(String),
}

#[derive(Clone)]
pub struct CompletionClient {
    transport: Arc<dyn Transport>,
    endpoint: Url,
    max_tokens: u32,
    timeout: Duration,
    retries: u32,
}

impl CompletionClient {
    pub fn new(
        transport: Arc<dyn Transport>,
        endpoint: Url,
        max_tokens: u32,
        timeout: Duration,
        retries: u32,
    ) -> Self {
        CompletionClient {
            transport,
            endpoint,
            max_tokens,
            timeout,
            retries,
        }
    }

    pub fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        let body = serde_json::to_string(&CompletionRequest {
            prompt: prompt.to_string(),
            max_tokens: self.max_tokens,
        })
        .expect("completion request serializes");
        let request = HttpRequest::post_json(self.endpoint.clone(), body, self.timeout);
        let response = send_with_retries(self.transport.as_ref(), &request, self.retries)?;
        let reply: CompletionReply = serde_json::from_str(&response.body)
            .map_err(|err| CompletionError::BadReply(err.to_string()))?;
        Ok(reply.text)
    }
}
