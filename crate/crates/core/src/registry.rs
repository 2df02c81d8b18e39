//! Named strategies, selected at runtime from the config file.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use url::Url;

use crate::completion::CompletionClient;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::generator::{Generator, RemoteGenerator, StubGenerator};
use crate::pipeline::Pipeline;
use crate::refinement::{DecomposeRecompose, RawDocuments, Refiner};
use crate::scoring::{LexicalScorer, LlmScorer, RemoteScorer, Scorer};
use crate::transport::{LoopbackOnly, Transport, UreqTransport};
use crate::websearch::{
    AllParagraphs, EvaluatorSelection, HttpSearchClient, KeywordRewriter, LlmRewriter, NoSearch, PageFetcher,
    Rewriter, SearchClient, Selector, WebSearch,
};

/// What a factory may draw on.
pub struct BuildContext<'a> {
    pub config: &'a PipelineConfig,
    pub transport: Arc<dyn Transport>,
}

type Factory<T> = Box<dyn Fn(&BuildContext<'_>) -> Result<Arc<T>> + Send + Sync>;

pub struct StrategyTable<T: ?Sized> {
    family: &'static str,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T: ?Sized> StrategyTable<T> {
    pub fn new(family: &'static str) -> Self {
        StrategyTable {
            family,
            factories: BTreeMap::new(),
        }
    }

    /// Registers `name`, replacing any previous entry.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BuildContext<'_>) -> Result<Arc<T>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, ctx: &BuildContext<'_>) -> Result<Arc<T>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            family: self.family,
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        factory(ctx)
    }
}

pub struct Registry {
    pub scorers: StrategyTable<dyn Scorer>,
    pub rewriters: StrategyTable<dyn Rewriter>,
    pub generators: StrategyTable<dyn Generator>,
    pub search: StrategyTable<dyn SearchClient>,
}

fn required(key: &str, value: &Option<String>) -> Result<Url> {
    PipelineConfig::endpoint_url(key, value)?.ok_or_else(|| Error::Config(format!("{key} is required")))
}

fn ms(millis: u64) -> Duration {
    Duration::from_millis(millis)
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            scorers: StrategyTable::new("scorer"),
            rewriters: StrategyTable::new("rewriter"),
            generators: StrategyTable::new("generator"),
            search: StrategyTable::new("search"),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();

        r.scorers.register("lexical", |_| Ok(Arc::new(LexicalScorer)));
        r.scorers.register("remote", |ctx| {
            let c = &ctx.config.scorer;
            Ok(Arc::new(RemoteScorer::new(
                ctx.transport.clone(),
                required("scorer.endpoint", &c.endpoint)?,
                ms(c.timeout_ms),
                c.retries,
                c.max_in_flight,
            )))
        });
        r.scorers.register("llm", |ctx| {
            let c = &ctx.config.scorer;
            let client = CompletionClient::new(
                ctx.transport.clone(),
                required("scorer.endpoint", &c.endpoint)?,
                8,
                ms(c.timeout_ms),
                c.retries,
            );
            Ok(Arc::new(LlmScorer::new(client, c.prompt)))
        });

        r.rewriters.register("fallback", |_| Ok(Arc::new(KeywordRewriter)));
        r.rewriters.register("remote", |ctx| {
            let c = &ctx.config.rewriter;
            let client = CompletionClient::new(
                ctx.transport.clone(),
                required("rewriter.endpoint", &c.endpoint)?,
                c.max_tokens,
                ms(c.timeout_ms),
                c.retries,
            );
            Ok(Arc::new(LlmRewriter::new(client)))
        });

        r.generators.register("stub", |_| Ok(Arc::new(StubGenerator)));
        r.generators.register("remote", |ctx| {
            let c = &ctx.config.generator;
            let client = CompletionClient::new(
                ctx.transport.clone(),
                required("generator.endpoint", &c.endpoint)?,
                c.max_tokens,
                ms(c.timeout_ms),
                c.retries,
            );
            Ok(Arc::new(RemoteGenerator::new(client)))
        });

        r.search.register("none", |_| Ok(Arc::new(NoSearch)));
        r.search.register("http", |ctx| {
            let c = &ctx.config.search;
            let api_key = std::env::var(&c.api_key_env).ok().filter(|k| !k.is_empty());
            Ok(Arc::new(HttpSearchClient::new(
                ctx.transport.clone(),
                required("search.endpoint", &c.endpoint)?,
                ms(c.timeout_ms),
                c.retries,
                api_key,
            )))
        });

        r
    }

    /// Validates `cfg` and wires every component. Nothing touches the network.
    pub fn build_pipeline(&self, cfg: &PipelineConfig, transport: Arc<dyn Transport>) -> Result<Pipeline> {
        cfg.validate()?;
        let ctx = BuildContext {
            config: cfg,
            transport: transport.clone(),
        };
        let flags = &cfg.ablations;

        let refiner: Arc<dyn Refiner> = if flags.no_refinement {
            Arc::new(RawDocuments)
        } else {
            Arc::new(DecomposeRecompose {
                config: cfg.refine.clone(),
            })
        };
        let selector: Arc<dyn Selector> = if flags.no_selection {
            Arc::new(AllParagraphs)
        } else {
            Arc::new(EvaluatorSelection {
                config: cfg.refine.clone(),
            })
        };

        let s = &cfg.search;
        let mut fetcher =
            PageFetcher::new(transport, ms(s.fetch_timeout_ms), s.retries).with_concurrency(s.fetch_concurrency);
        if let Some(dir) = &s.cache_dir {
            fetcher = fetcher.with_cache_dir(dir);
        }
        if let Some(proxy) = PipelineConfig::endpoint_url("search.fetch_proxy", &s.fetch_proxy)? {
            fetcher = fetcher.with_proxy(proxy);
        }

        Ok(Pipeline {
            thresholds: cfg.thresholds.resolve()?,
            ablations: flags.clone(),
            scorer: self.scorers.build(&cfg.scorer.kind, &ctx)?,
            refiner,
            web: WebSearch {
                rewriter: self.rewriters.build(&cfg.rewriter.kind, &ctx)?,
                client: self.search.build(&s.kind, &ctx)?,
                fetcher,
                selector,
                config: s.clone(),
                rewrite_queries: !flags.no_rewriting,
            },
            generator: self.generators.build(&cfg.generator.kind, &ctx)?,
        })
    }
}

/// The real HTTP transport, restricted to loopback hosts in offline mode.
pub fn default_transport(cfg: &PipelineConfig) -> Arc<dyn Transport> {
    if cfg.offline {
        Arc::new(LoopbackOnly(UreqTransport::new()))
    } else {
        Arc::new(UreqTransport::new())
    }
}
