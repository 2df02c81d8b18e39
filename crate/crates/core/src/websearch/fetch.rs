use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use url::Url;

use crate::error::{Error, Result};
use crate::transport::{send_with_retries, HttpRequest, Transport, TransportError};
use crate::websearch::extract::extract_paragraphs;
use crate::websearch::search::SearchResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageContent {
    pub url: String,
    pub paragraphs: Vec<String>,
}

/// On-disk cache record, one file per URL.
#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    url: String,
    fetched_at: u64,
    paragraphs: Vec<String>,
}

pub fn cache_key(url: &str) -> String {
    hex::encode(Sha256::digest(url.as_bytes()))
}

/// Fetches result pages and extracts their paragraphs, cache first.
///
/// With a proxy configured, pages are requested as `GET {proxy}?url=...`
/// instead of directly; hermetic runs point the proxy at the mock server.
pub struct PageFetcher {
    transport: Arc<dyn Transport>,
    cache_dir: Option<PathBuf>,
    proxy: Option<Url>,
    timeout: Duration,
    retries: u32,
    concurrency: usize,
}

impl PageFetcher {
    pub fn new(transport: Arc<dyn Transport>, timeout: Duration, retries: u32) -> Self {
        PageFetcher {
            transport,
            cache_dir: None,
            proxy: None,
            timeout,
            retries,
            concurrency: 4,
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_proxy(mut self, proxy: Url) -> Self {
        self.proxy = Some(proxy);
        self
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency.max(1);
        self
    }

    pub fn cache_path(&self, url: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|dir| dir.join(cache_key(url)))
    }

    fn read_cache(&self, path: &Path, url: &str) -> Option<PageContent> {
        let raw = fs::read_to_string(path).ok()?;
        match serde_json::from_str::<CacheEntry>(&raw) {
            Ok(entry) if entry.url == url => Some(PageContent {
                url: entry.url,
                paragraphs: entry.paragraphs,
            }),
            Ok(_) => None,
            Err(err) => {
                log::warn!("ignoring unreadable cache file {}: {err}", path.display());
                None
            }
        }
    }

    fn write_cache(&self, path: &Path, page: &PageContent) -> std::io::Result<()> {
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir)?;
        let fetched_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or_default();
        let entry = CacheEntry {
            url: page.url.clone(),
            fetched_at,
            paragraphs: page.paragraphs.clone(),
        };
        // Write then rename so concurrent writers never expose a partial file.
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    fn request_url(&self, target: &Url) -> Url {
        match &self.proxy {
            Some(proxy) => {
                let mut url = proxy.clone();
                url.query_pairs_mut().append_pair("url", target.as_str());
                url
            }
            None => target.clone(),
        }
    }

    pub fn fetch(&self, result: &SearchResult) -> Result<PageContent> {
        let fetch_error = |source| Error::Fetch {
            url: result.url.clone(),
            source,
        };
        let target = Url::parse(&result.url).map_err(|err| {
            fetch_error(TransportError::Connection {
                url: result.url.clone(),
                message: format!("not an absolute url: {err}"),
            })
        })?;
        let cache_path = self.cache_path(&result.url);
        if let Some(page) = cache_path.as_deref().and_then(|p| self.read_cache(p, &result.url)) {
            log::debug!("cache hit for {}", result.url);
            return Ok(page);
        }
        let request = HttpRequest::get(self.request_url(&target), self.timeout);
        let response =
            send_with_retries(self.transport.as_ref(), &request, self.retries).map_err(fetch_error)?;
        let page = PageContent {
            url: result.url.clone(),
            paragraphs: extract_paragraphs(&response.body, response.content_type.as_deref()),
        };
        if let Some(path) = cache_path {
            if let Err(err) = self.write_cache(&path, &page) {
                log::warn!("could not cache {}: {err}", result.url);
            }
        }
        Ok(page)
    }

    /// Fetches every result, `concurrency` at a time. Output order matches
    /// input order.
    pub fn fetch_all(&self, results: &[SearchResult]) -> Vec<Result<PageContent>> {
        let mut pages = Vec::with_capacity(results.len());
        for chunk in results.chunks(self.concurrency) {
            thread::scope(|scope| {
                let handles: Vec<_> = chunk.iter().map(|r| scope.spawn(move || self.fetch(r))).collect();
                pages.extend(handles.into_iter().map(|h| h.join().expect("fetch thread panicked")));
            });
        }
        pages
    }
}
