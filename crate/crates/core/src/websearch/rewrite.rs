//! Question to keyword-query rewriting.

use serde::{Deserialize, Serialize};

use crate::completion::CompletionClient;
use crate::error::{Error, Result};
use crate::text::QueryText;

pub const MAX_KEYWORDS: usize = 3;

/// Few-shot keyword extraction prompt; `[question]` is replaced by the input.
pub const REWRITE_PROMPT: &str = "Extract at most three keywords separated by comma from the following dialogues and questions as queries for the web search, including topic background within dialogues and main intent within questions.

question: What is Henry Feilden's occupation?
query: Henry Feilden, occupation

question: In what city was Billy Carlson born?
query: city, Billy Carlson, born

question: What is the religion of John Gwynn?
query: religion of John Gwynn

question: What sport does Kiribati men's national basketball team play?
query: sport, Kiribati men's national basketball team play

question: [question]
query:";

/// NLTK English stopwords plus question words.
const STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
    "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself",
    "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "that'll",
    "these", "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
    "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against",
    "between", "into", "through", "during", "before", "after", "above", "below", "to", "from",
    "up", "down", "in", "out", "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't", "didn",
    "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan",
    "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't",
    "wouldn", "wouldn't",
];

pub fn is_stopword(word: &str) -> bool {
    let lower = word.to_lowercase();
    STOPWORDS.contains(&lower.as_str())
}

/// One to three non-blank search keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    keywords: Vec<String>,
}

impl SearchQuery {
    pub fn new<I, S>(keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let keywords: Vec<String> = keywords.into_iter().map(|k| k.into().trim().to_string()).collect();
        if keywords.is_empty() || keywords.len() > MAX_KEYWORDS {
            return Err(Error::Rewrite(format!(
                "expected 1 to {MAX_KEYWORDS} keywords, got {}",
                keywords.len()
            )));
        }
        if keywords.iter().any(String::is_empty) {
            return Err(Error::Rewrite("blank keyword".into()));
        }
        Ok(SearchQuery { keywords })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// The string sent to the search backend: keywords joined by spaces.
    pub fn to_query_string(&self) -> String {
        self.keywords.join(" ")
    }
}

pub trait Rewriter: Send + Sync {
    fn name(&self) -> &str;
    fn rewrite(&self, question: &QueryText) -> Result<SearchQuery>;
}

/// Deterministic offline rewriter: drops stopwords, merges runs of adjacent
/// capitalized words into one keyword, and keeps the first three keywords.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordRewriter;

fn clean_word(raw: &str) -> &str {
    let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
    word.strip_suffix("'s")
        .or_else(|| word.strip_suffix("’s"))
        .unwrap_or(word)
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

impl KeywordRewriter {
    pub fn keywords(question: &str) -> Vec<String> {
        let mut keywords: Vec<String> = Vec::new();
        let mut last: Option<(usize, bool)> = None;
        for (pos, raw) in question.split_whitespace().enumerate() {
            let word = clean_word(raw);
            if word.is_empty() || is_stopword(word) {
                continue;
            }
            let capital = is_capitalized(word);
            match (last, keywords.last_mut()) {
                (Some((prev, true)), Some(current)) if capital && prev + 1 == pos => {
                    current.push(' ');
                    current.push_str(word);
                }
                _ => keywords.push(word.to_string()),
            }
            last = Some((pos, capital));
        }
        keywords.truncate(MAX_KEYWORDS);
        keywords
    }
}

impl Rewriter for KeywordRewriter {
    fn name(&self) -> &str {
        "keywords"
    }

    fn rewrite(&self, question: &QueryText) -> Result<SearchQuery> {
        let keywords = Self::keywords(question.as_str());
        if keywords.is_empty() {
            // Nothing but stopwords: search with the question itself.
            return SearchQuery::new([question.as_str()]);
        }
        SearchQuery::new(keywords)
    }
}

/// Rewrites with a completion model prompted by [`REWRITE_PROMPT`].
pub struct LlmRewriter {
    client: CompletionClient,
}

impl LlmRewriter {
    pub fn new(client: CompletionClient) -> Self {
        LlmRewriter { client }
    }

    pub fn prompt(question: &QueryText) -> String {
        REWRITE_PROMPT.replace("[question]", question.as_str())
    }
}

/// Takes the text after `query:` (or the first non-blank line) and splits it
/// on commas.
pub fn parse_rewrite_reply(reply: &str) -> Result<SearchQuery> {
    let line = reply
        .lines()
        .find_map(|l| {
            let lower = l.to_lowercase();
            lower.find("query:").map(|at| l[at + "query:".len()..].to_string())
        })
        .or_else(|| reply.lines().find(|l| !l.trim().is_empty()).map(str::to_string))
        .ok_or_else(|| Error::Rewrite("empty rewriter reply".into()))?;
    let keywords: Vec<&str> = line
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .take(MAX_KEYWORDS)
        .collect();
    SearchQuery::new(keywords)
}

impl Rewriter for LlmRewriter {
    fn name(&self) -> &str {
        "remote"
    }

    fn rewrite(&self, question: &QueryText) -> Result<SearchQuery> {
        let reply = self
            .client
            .complete(&Self::prompt(question))
            .map_err(|err| Error::Rewrite(err.to_string()))?;
        parse_rewrite_reply(&reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(q: &str) -> Vec<String> {
        KeywordRewriter
            .rewrite(&QueryText::new(q).unwrap())
            .unwrap()
            .keywords()
            .to_vec()
    }

    #[test]
    fn possessive_name_and_noun() {
        assert_eq!(kw("What is Henry Feilden's occupation?"), ["Henry Feilden", "occupation"]);
    }

    #[test]
    fn keeps_order_and_merges_names() {
        assert_eq!(kw("In what city was Billy Carlson born?"), ["city", "Billy Carlson", "born"]);
    }

    #[test]
    fn single_content_token() {
        assert_eq!(kw("What is X?"), ["X"]);
    }

    #[test]
    fn names_split_by_stopwords_stay_apart() {
        assert_eq!(kw("Is Paris in France?"), ["Paris", "France"]);
    }

    #[test]
    fn at_most_three_keywords() {
        assert_eq!(kw("tall green old cedar trees grow"), ["tall", "green", "old"]);
    }

    #[test]
    fn all_stopwords_falls_back_to_question() {
        assert_eq!(kw("Who is it?"), ["Who is it?"]);
    }

    #[test]
    fn query_validation() {
        assert!(SearchQuery::new(Vec::<String>::new()).is_err());
        assert!(SearchQuery::new(["a", "b", "c", "d"]).is_err());
        assert!(SearchQuery::new(["a", "  "]).is_err());
        assert_eq!(SearchQuery::new(["a b", "c"]).unwrap().to_query_string(), "a b c");
    }

    #[test]
    fn prompt_fills_question() {
        let p = LlmRewriter::prompt(&QueryText::new("Who wrote Dune?").unwrap());
        assert!(p.starts_with("Extract at most three keywords separated by comma"));
        assert!(p.ends_with("question: Who wrote Dune?\nquery:"));
    }

    #[test]
    fn reply_parsing() {
        let q = parse_rewrite_reply(" Henry Feilden, occupation\n").unwrap();
        assert_eq!(q.keywords(), ["Henry Feilden", "occupation"]);
        let q = parse_rewrite_reply("Sure.\nquery: city, Billy Carlson, born, extra").unwrap();
        assert_eq!(q.keywords(), ["city", "Billy Carlson", "born"]);
        assert!(parse_rewrite_reply("  \n ").is_err());
        assert!(parse_rewrite_reply("query: , ,").is_err());
    }
}
