//! Prompt assembly and answer generation.

use serde::{Deserialize, Serialize};

use crate::completion::CompletionClient;
use crate::error::{Error, Result};
use crate::refinement::KnowledgeBundle;
use crate::scoring::parse_endpoint;
use crate::text::{overlap, token_set, QueryText};

const QUESTION_MARKER: &str = "Question: ";
const KNOWLEDGE_DELIMITER: &str = "\n\nQuestion: ";
const ANSWER_SUFFIX: &str = "\nAnswer:";

pub const UNKNOWN_ANSWER: &str = "UNKNOWN";

/// `{knowledge}\n\nQuestion: {question}\nAnswer:`; the knowledge block and its
/// blank line are omitted when the bundle is empty.
pub fn assemble_prompt(question: &QueryText, knowledge: &KnowledgeBundle) -> String {
    format_prompt(&knowledge.text, question.as_str())
}

fn format_prompt(knowledge: &str, question: &str) -> String {
    if knowledge.is_empty() {
        format!("{QUESTION_MARKER}{question}{ANSWER_SUFFIX}")
    } else {
        format!("{knowledge}{KNOWLEDGE_DELIMITER}{question}{ANSWER_SUFFIX}")
    }
}

/// Inverse of [`assemble_prompt`] for texts free of the delimiters.
pub fn parse_prompt(prompt: &str) -> Option<(&str, &str)> {
    let body = prompt.strip_suffix(ANSWER_SUFFIX)?;
    match body.find(KNOWLEDGE_DELIMITER) {
        Some(at) => Some((&body[..at], &body[at + KNOWLEDGE_DELIMITER.len()..])),
        None => body.strip_prefix(QUESTION_MARKER).map(|q| ("", q)),
    }
}

pub trait Generator: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, prompt: &str) -> Result<String>;
}

pub fn generate(prompt: &str, generator: &dyn Generator) -> Result<String> {
    if prompt.is_empty() {
        return Err(Error::Generation("empty prompt".into()));
    }
    generator.generate(prompt)
}

/// Answers with the first knowledge line sharing the most tokens with the
/// question, or [`UNKNOWN_ANSWER`] when there is no knowledge.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubGenerator;

impl StubGenerator {
    pub fn answer(knowledge: &str, question: &str) -> String {
        let wanted = token_set(question);
        let mut best: Option<(&str, usize)> = None;
        for line in knowledge.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let hits = overlap(&wanted, line);
            if best.is_none_or(|(_, top)| hits > top) {
                best = Some((line, hits));
            }
        }
        best.map_or_else(|| UNKNOWN_ANSWER.to_string(), |(line, _)| line.to_string())
    }
}

impl Generator for StubGenerator {
    fn name(&self) -> &str {
        "stub"
    }

    fn generate(&self, prompt: &str) -> Result<String> {
        let (knowledge, question) =
            parse_prompt(prompt).ok_or_else(|| Error::Generation("stub cannot parse prompt".into()))?;
        Ok(Self::answer(knowledge, question))
    }
}

/// `POST {prompt, max_tokens}` answered by `{text}`.
pub struct RemoteGenerator {
    client: CompletionClient,
}

impl RemoteGenerator {
    pub fn new(client: CompletionClient) -> Self {
        RemoteGenerator { client }
    }
}

impl Generator for RemoteGenerator {
    fn name(&self) -> &str {
        "remote"
    }

    fn generate(&self, prompt: &str) -> Result<String> {
        self.client
            .complete(prompt)
            .map_err(|err| Error::Generation(err.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Registered strategy name: `stub` or `remote`.
    pub kind: String,
    pub endpoint: Option<String>,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: "stub".into(),
            endpoint: None,
            max_tokens: 100,
            timeout_ms: 60_000,
            retries: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == "remote" && self.endpoint.is_none() {
            return Err(Error::Config("generator.endpoint is required for kind `remote`".into()));
        }
        if let Some(endpoint) = &self.endpoint {
            parse_endpoint("generator.endpoint", endpoint)?;
        }
        Ok(())
    }
}
