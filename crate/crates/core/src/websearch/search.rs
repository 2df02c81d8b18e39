use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};
use crate::transport::{send_with_retries, HttpRequest, Transport};
use crate::websearch::SearchConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub rank: usize,
}

/// Wire entry of a search reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    #[serde(default)]
    pub title: Option<String>,
}

/// Wire shape of a search reply: `{"results": [{"url", "title"}, ...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchReply {
    pub results: Vec<SearchHit>,
}

pub trait SearchClient: Send + Sync {
    fn name(&self) -> &str;

    /// Raw backend results in backend order, at most `limit` of them.
    fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchResult>>;
}

/// `GET {endpoint}?q=...&num=...`.
pub struct HttpSearchClient {
    transport: Arc<dyn Transport>,
    endpoint: Url,
    timeout: Duration,
    retries: u32,
    api_key: Option<String>,
}

impl HttpSearchClient {
    pub fn new(
        transport: Arc<dyn Transport>,
        endpoint: Url,
        timeout: Duration,
        retries: u32,
        api_key: Option<String>,
    ) -> Self {
        HttpSearchClient {
            transport,
            endpoint,
            timeout,
            retries,
            api_key,
        }
    }
}

impl SearchClient for HttpSearchClient {
    fn name(&self) -> &str {
        "http"
    }

    fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchResult>> {
        let mut url = self.endpoint.clone();
        url.query_pairs_mut()
            .append_pair("q", query)
            .append_pair("num", &limit.to_string());
        let mut request = HttpRequest::get(url, self.timeout);
        if let Some(key) = &self.api_key {
            request = request.header("x-api-key", key.clone());
        }
        let response = send_with_retries(self.transport.as_ref(), &request, self.retries)
            .map_err(|err| Error::SearchUnavailable(err.to_string()))?;
        let reply: SearchReply = serde_json::from_str(&response.body)
            .map_err(|err| Error::SearchUnavailable(format!("malformed search reply: {err}")))?;
        let mut results = Vec::new();
        for hit in reply.results {
            match Url::parse(&hit.url) {
                Ok(_) => results.push(SearchResult {
                    url: hit.url,
                    title: hit.title,
                    rank: results.len() + 1,
                }),
                Err(err) => log::warn!("dropping search hit with bad url `{}`: {err}", hit.url),
            }
            if results.len() == limit {
                break;
            }
        }
        Ok(results)
    }
}

/// Used when no search backend is configured; every call is unavailable.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSearch;

impl SearchClient for NoSearch {
    fn name(&self) -> &str {
        "none"
    }

    fn search(&self, _: &str, _: usize) -> Result<Vec<SearchResult>> {
        Err(Error::SearchUnavailable("no search backend configured".into()))
    }
}

pub fn is_wikipedia(url: &str) -> bool {
    Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(|h| h.to_ascii_lowercase()))
        .is_some_and(|host| host == "wikipedia.org" || host.ends_with(".wikipedia.org"))
}

/// Stable-partitions Wikipedia hits to the front when preferred, keeps the
/// first `top_k_urls` and renumbers ranks from 1.
pub fn prioritize(results: Vec<SearchResult>, cfg: &SearchConfig) -> Vec<SearchResult> {
    let ordered: Vec<SearchResult> = if cfg.prefer_wikipedia {
        let (wiki, rest): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| is_wikipedia(&r.url));
        wiki.into_iter().chain(rest).collect()
    } else {
        results
    };
    ordered
        .into_iter()
        .take(cfg.top_k_urls)
        .enumerate()
        .map(|(i, r)| SearchResult { rank: i + 1, ..r })
        .collect()
}

/// Runs one backend call for `query` and orders the hits.
pub fn search(query: &str, client: &dyn SearchClient, cfg: &SearchConfig) -> Result<Vec<SearchResult>> {
    let raw = client.search(query, cfg.request_results.max(cfg.top_k_urls))?;
    Ok(prioritize(raw, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{HttpResponse, MockTransport};
    use proptest::prelude::*;

    fn results(urls: &[&str]) -> Vec<SearchResult> {
        urls.iter()
            .enumerate()
            .map(|(i, u)| SearchResult {
                url: u.to_string(),
                title: None,
                rank: i + 1,
            })
            .collect()
    }

    struct Fixed(Vec<SearchResult>);

    impl SearchClient for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn search(&self, _: &str, limit: usize) -> Result<Vec<SearchResult>> {
            Ok(self.0.iter().take(limit).cloned().collect())
        }
    }

    #[test]
    fn wikipedia_first() {
        let client = Fixed(results(&["https://a.com/", "https://en.wikipedia.org/wiki/X", "https://b.com/"]));
        let got = search("x", &client, &SearchConfig::default()).unwrap();
        let urls: Vec<_> = got.iter().map(|r| r.url.as_str()).collect();
        assert_eq!(urls, ["https://en.wikipedia.org/wiki/X", "https://a.com/", "https://b.com/"]);
        assert_eq!(got.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn truncates_after_partition() {
        let urls: Vec<String> = (0..8).map(|i| format!("https://site{i}.com/")).collect();
        let refs: Vec<&str> = urls.iter().map(String::as_str).collect();
        let got = search("x", &Fixed(results(&refs)), &SearchConfig::default()).unwrap();
        assert_eq!(got.len(), 5);
        assert_eq!(got[4].url, "https://site4.com/");
    }

    #[test]
    fn empty_results_are_fine() {
        assert!(search("x", &Fixed(vec![]), &SearchConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn wikipedia_host_match() {
        assert!(is_wikipedia("https://en.wikipedia.org/wiki/X"));
        assert!(is_wikipedia("https://wikipedia.org/"));
        assert!(!is_wikipedia("https://notwikipedia.org/"));
        assert!(!is_wikipedia("https://a.com/wikipedia.org"));
    }

    #[test]
    fn preference_can_be_disabled() {
        let cfg = SearchConfig {
            prefer_wikipedia: false,
            ..SearchConfig::default()
        };
        let got = prioritize(results(&["https://a.com/", "https://de.wikipedia.org/wiki/Y"]), &cfg);
        assert_eq!(got[0].url, "https://a.com/");
    }

    #[test]
    fn http_client_wire_shape() {
        let mock = Arc::new(MockTransport::new(|req| {
            let q: Vec<(String, String)> = req.url.query_pairs().into_owned().collect();
            assert_eq!(q[0], ("q".into(), "Billy Carlson born".into()));
            assert_eq!(req.headers.iter().find(|(k, _)| k == "x-api-key").unwrap().1, "secret");
            Ok(HttpResponse::json(&serde_json::json!({"results": [
                {"url": "https://a.com/x", "title": "A"},
                {"url": "not a url"},
                {"url": "https://en.wikipedia.org/wiki/B"}
            ]})))
        }));
        let client = HttpSearchClient::new(
            mock.clone(),
            Url::parse("http://127.0.0.1:1/search").unwrap(),
            Duration::from_secs(1),
            0,
            Some("secret".into()),
        );
        let got = client.search("Billy Carlson born", 10).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].title.as_deref(), Some("A"));
        assert_eq!(got[1].rank, 2);
    }

    #[test]
    fn http_failure_is_search_unavailable() {
        let mock = Arc::new(MockTransport::new(|_| Ok(HttpResponse::with_status(500))));
        let client = HttpSearchClient::new(mock, Url::parse("http://127.0.0.1:1/s").unwrap(), Duration::from_secs(1), 1, None);
        assert!(matches!(client.search("x", 5), Err(Error::SearchUnavailable(_))));
        assert!(matches!(NoSearch.search("x", 5), Err(Error::SearchUnavailable(_))));
    }

    proptest! {
        #[test]
        fn partition_is_stable(flags in prop::collection::vec(any::<bool>(), 0..20)) {
            let urls: Vec<String> = flags
                .iter()
                .enumerate()
                .map(|(i, &wiki)| if wiki { format!("https://en.wikipedia.org/wiki/P{i}") } else { format!("https://s{i}.org/") })
                .collect();
            let refs: Vec<&str> = urls.iter().map(String::as_str).collect();
            let cfg = SearchConfig { top_k_urls: 100, ..SearchConfig::default() };
            let got = prioritize(results(&refs), &cfg);
            let wiki_count = flags.iter().filter(|&&w| w).count();
            let expected: Vec<&String> = urls.iter().filter(|u| is_wikipedia(u))
                .chain(urls.iter().filter(|u| !is_wikipedia(u)))
                .collect();
            prop_assert_eq!(got.iter().map(|r| &r.url).collect::<Vec<_>>(), expected);
            prop_assert!(got[..wiki_count].iter().all(|r| is_wikipedia(&r.url)));
            prop_assert!(got.iter().enumerate().all(|(i, r)| r.rank == i + 1));
        }
    }
}
