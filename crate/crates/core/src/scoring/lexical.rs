use crate::error::Result;
use crate::scoring::{RelevanceScore, Scorer};
use crate::text::{overlap, token_set, DocumentText, QueryText};

/// Token-overlap scorer: with `U` the unique query tokens and `H` the number
/// of them present in the document, the score is `2·H/|U| − 1` (or `-1` when
/// the query has no tokens).
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl LexicalScorer {
    pub fn score_text(query: &str, text: &str) -> RelevanceScore {
        let unique = token_set(query);
        if unique.is_empty() {
            return RelevanceScore::MIN;
        }
        let hits = overlap(&unique, text);
        let value = 2.0 * hits as f64 / unique.len() as f64 - 1.0;
        RelevanceScore::clamped(value).expect("finite ratio")
    }
}

impl Scorer for LexicalScorer {
    fn name(&self) -> &str {
        "lexical"
    }

    fn score(&self, query: &QueryText, doc: &DocumentText) -> Result<RelevanceScore> {
        Ok(Self::score_text(query.as_str(), &doc.text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn score(q: &str, d: &str) -> f64 {
        LexicalScorer
            .score(&QueryText::new(q).unwrap(), &DocumentText::new("d", d))
            .unwrap()
            .value()
    }

    #[test]
    fn all_tokens_present() {
        assert_eq!(score("genre of Cyberpunk", "Cyberpunk is a genre of science fiction"), 1.0);
    }

    #[test]
    fn no_tokens_present() {
        assert_eq!(score("genre of Cyberpunk", "Paris is a city in Europe"), -1.0);
    }

    #[test]
    fn one_of_three_tokens() {
        assert!((score("genre of Cyberpunk", "a genre survey") - (-1.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn empty_document() {
        assert_eq!(score("genre of Cyberpunk", ""), -1.0);
    }

    #[test]
    fn query_without_tokens() {
        assert_eq!(score("?!", "anything"), -1.0);
    }

    #[test]
    fn batch_of_nothing() {
        let q = QueryText::new("x").unwrap();
        assert!(LexicalScorer.score_batch(&q, &[]).unwrap().is_empty());
    }

    #[test]
    fn identical_docs_identical_scores() {
        let q = QueryText::new("genre of Cyberpunk").unwrap();
        let docs = vec![DocumentText::new("a", "a genre survey"); 3];
        let scores = LexicalScorer.score_batch(&q, &docs).unwrap();
        assert_eq!(scores.len(), 3);
        assert!(scores.windows(2).all(|w| w[0] == w[1]));
    }

    proptest! {
        #[test]
        fn range_holds(q in "[a-zA-Z ]{1,40}", d in "[a-zA-Z .,]{0,80}") {
            prop_assume!(!q.trim().is_empty());
            let s = score(&q, &d);
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
