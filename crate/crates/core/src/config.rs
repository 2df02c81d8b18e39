//! The single experiment configuration file.
//!
//! Loaded from TOML (or JSON when the file ends in `.json`), then patched with
//! `section.key=value` overrides. Precedence: override > file > preset.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use url::Url;

use crate::error::{Error, Result};
use crate::generator::GeneratorConfig;
use crate::pipeline::AblationFlags;
use crate::refinement::RefineConfig;
use crate::scoring::{parse_endpoint, ScorerConfig};
use crate::transport::is_loopback;
use crate::trigger::{ThresholdPreset, Thresholds};
use crate::websearch::SearchConfig;

/// A named preset with optional per-bound overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub preset: String,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            preset: "popqa".into(),
            upper: None,
            lower: None,
        }
    }
}

impl ThresholdConfig {
    pub fn resolve(&self) -> Result<Thresholds> {
        let preset = ThresholdPreset::from_name(&self.preset)?.thresholds();
        Thresholds::new(
            self.upper.unwrap_or(preset.upper()),
            self.lower.unwrap_or(preset.lower()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewriterConfig {
    /// Registered strategy name: `fallback` or `remote`.
    pub kind: String,
    pub endpoint: Option<String>,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for RewriterConfig {
    fn default() -> Self {
        RewriterConfig {
            kind: "fallback".into(),
            endpoint: None,
            max_tokens: 32,
            timeout_ms: 30_000,
            retries: 1,
        }
    }
}

impl RewriterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == "remote" && self.endpoint.is_none() {
            return Err(Error::Config("rewriter.endpoint is required for kind `remote`".into()));
        }
        if let Some(endpoint) = &self.endpoint {
            parse_endpoint("rewriter.endpoint", endpoint)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub thresholds: ThresholdConfig,
    pub refine: RefineConfig,
    pub search: SearchConfig,
    pub scorer: ScorerConfig,
    pub rewriter: RewriterConfig,
    pub generator: GeneratorConfig,
    pub ablations: AblationFlags,
    /// Instances processed concurrently by the harness.
    pub workers: usize,
    /// Refuse every endpoint that is not on the loopback interface.
    pub offline: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            thresholds: ThresholdConfig::default(),
            refine: RefineConfig::default(),
            search: SearchConfig::default(),
            scorer: ScorerConfig::default(),
            rewriter: RewriterConfig::default(),
            generator: GeneratorConfig::default(),
            ablations: AblationFlags::default(),
            workers: 4,
            offline: false,
        }
    }
}

impl PipelineConfig {
    /// Reads `path` (if any) and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut root = match path {
            Some(path) => read_value(path)?,
            None => Value::Object(Default::default()),
        };
        for assignment in overrides {
            apply_override(&mut root, assignment)?;
        }
        let cfg: PipelineConfig =
            serde_json::from_value(root).map_err(|err| Error::Config(err.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.resolve()?;
        self.refine.validate()?;
        self.search.validate()?;
        self.scorer.validate()?;
        self.rewriter.validate()?;
        self.generator.validate()?;
        self.ablations.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.offline {
            self.check_offline()?;
        }
        Ok(())
    }

    /// Every configured endpoint, labelled by its config key.
    pub fn endpoints(&self) -> Vec<(&'static str, &str)> {
        [
            ("scorer.endpoint", self.scorer.endpoint.as_deref()),
            ("search.endpoint", self.search.endpoint.as_deref()),
            ("search.fetch_proxy", self.search.fetch_proxy.as_deref()),
            ("rewriter.endpoint", self.rewriter.endpoint.as_deref()),
            ("generator.endpoint", self.generator.endpoint.as_deref()),
        ]
        .into_iter()
        .filter_map(|(key, value)| value.map(|v| (key, v)))
        .collect()
    }

    /// Offline runs may only talk to loopback endpoints, and pages must be
    /// fetched through a loopback proxy.
    pub fn check_offline(&self) -> Result<()> {
        for (key, endpoint) in self.endpoints() {
            let url = parse_endpoint(key, endpoint)?;
            if !is_loopback(&url) {
                return Err(Error::Config(format!("offline mode forbids {key} `{endpoint}`")));
            }
        }
        if self.search.kind != "none" && self.search.fetch_proxy.is_none() {
            return Err(Error::Config(
                "offline mode needs search.fetch_proxy so pages are not fetched from the network".into(),
            ));
        }
        Ok(())
    }

    pub fn endpoint_url(key: &str, value: &Option<String>) -> Result<Option<Url>> {
        value.as_deref().map(|v| parse_endpoint(key, v)).transpose()
    }
}

fn read_value(path: &Path) -> Result<Value> {
    let raw = fs::read_to_string(path)
        .map_err(|err| Error::Config(format!("cannot read {}: {err}", path.display())))?;
    let is_json = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
    let value = if is_json {
        serde_json::from_str(&raw).map_err(|err| Error::Config(format!("{}: {err}", path.display())))?
    } else {
        let table: toml::Table =
            toml::from_str(&raw).map_err(|err| Error::Config(format!("{}: {err}", path.display())))?;
        serde_json::to_value(table)?
    };
    if !value.is_object() {
        return Err(Error::Config(format!("{}: top level must be a table", path.display())));
    }
    Ok(value)
}

/// Applies one `a.b=value` override. The value is read as a JSON literal
/// when it parses as one and as a plain string otherwise. The key must name
/// an existing config field.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` is malformed")));
    }

    let known = serde_json::to_value(PipelineConfig::default())?;
    let mut probe = &known;
    for part in &path {
        probe = probe
            .get(part)
            .ok_or_else(|| Error::Config(format!("override key `{key}` is not a config field")))?;
    }

    let value = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = root;
    for part in parents {
        let map = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
        node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("override `{key}`: parent is not a table")))?
        .insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = PipelineConfig::load(None, &[]).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        let t = cfg.thresholds.resolve().unwrap();
        assert_eq!((t.upper(), t.lower()), (0.59, -0.99));
    }

    #[test]
    fn override_beats_file_beats_preset() {
        let file = write("[thresholds]\npreset = \"biography\"\nupper = 0.8\nlower = -0.5\n", ".toml");
        let cfg = PipelineConfig::load(Some(file.path()), &[]).unwrap();
        let t = cfg.thresholds.resolve().unwrap();
        assert_eq!((t.upper(), t.lower()), (0.8, -0.5));

        let cfg = PipelineConfig::load(Some(file.path()), &["thresholds.upper=0.7".into()]).unwrap();
        let t = cfg.thresholds.resolve().unwrap();
        assert_eq!((t.upper(), t.lower()), (0.7, -0.5));

        let file = write("[thresholds]\npreset = \"biography\"\n", ".toml");
        let t = PipelineConfig::load(Some(file.path()), &[]).unwrap().thresholds.resolve().unwrap();
        assert_eq!((t.upper(), t.lower()), (0.95, -0.91));
    }

    #[test]
    fn json_files_load() {
        let file = write(r#"{"refine": {"top_k": 2}, "workers": 1}"#, ".json");
        let cfg = PipelineConfig::load(Some(file.path()), &[]).unwrap();
        assert_eq!(cfg.refine.top_k, 2);
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let file = write("[refine]\ntopk = 2\n", ".toml");
        assert!(matches!(PipelineConfig::load(Some(file.path()), &[]), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::load(None, &["refine.topk=2".into()]), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::load(None, &["nonsense".into()]), Err(Error::Config(_))));
    }

    #[test]
    fn string_and_null_overrides() {
        let cfg = PipelineConfig::load(
            None,
            &["scorer.kind=remote".into(), "scorer.endpoint=http://127.0.0.1:9/score".into(), "search.cache_dir=null".into()],
        )
        .unwrap();
        assert_eq!(cfg.scorer.kind, "remote");
        assert_eq!(cfg.search.cache_dir, None);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(PipelineConfig::load(None, &["thresholds.upper=-0.995".into()]).is_err());
        assert!(PipelineConfig::load(None, &["thresholds.preset=nope".into()]).is_err());
    }

    #[test]
    fn offline_rejects_remote_hosts() {
        let remote = ["offline=true".to_string(), "generator.kind=remote".into(), "generator.endpoint=https://api.example.com/v1".into()];
        assert!(matches!(PipelineConfig::load(None, &remote), Err(Error::Config(_))));
        let local = ["offline=true".to_string(), "generator.kind=remote".into(), "generator.endpoint=http://127.0.0.1:8080/generate".into()];
        assert!(PipelineConfig::load(None, &local).is_ok());
        let no_proxy = ["offline=true".to_string(), "search.kind=http".into(), "search.endpoint=http://127.0.0.1:1/search".into()];
        assert!(matches!(PipelineConfig::load(None, &no_proxy), Err(Error::Config(_))));
    }

    #[test]
    fn ablation_override_parses_action() {
        let cfg = PipelineConfig::load(None, &["ablations.only_action=\"Incorrect\"".into()]).unwrap();
        assert_eq!(cfg.ablations.only_action, Some(crate::trigger::Action::Incorrect));
    }
}
