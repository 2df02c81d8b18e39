use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::harness::{accuracy, degrade, DatasetInstance};
use crate::pipeline::{Pipeline, RunRecord};
use crate::registry::Registry;
use crate::transport::Transport;
use crate::trigger::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The full corrective pipeline.
    Crag,
    /// Raw retrieved documents only.
    PlainRag,
    /// Raw documents plus web knowledge for every question.
    RagWeb,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Crag => "crag",
            Mode::PlainRag => "plain_rag",
            Mode::RagWeb => "rag_web",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::Crag, Mode::PlainRag, Mode::RagWeb]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}` (expected crag, plain_rag or rag_web)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub answers: Vec<String>,
    pub correct: bool,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: PipelineConfig,
    pub mode: Mode,
    pub degradation: Option<Degradation>,
    pub degradation_level: f64,
    pub accuracy: f64,
    /// Only actions that occurred appear.
    pub action_histogram: BTreeMap<Action, usize>,
    pub instances: Vec<InstanceResult>,
}

impl ExperimentReport {
    /// Accuracy recomputed from the stored records.
    pub fn recompute_accuracy(&self) -> f64 {
        let correct = self
            .instances
            .iter()
            .filter(|r| accuracy(&r.record.answer, &r.answers))
            .count();
        ratio(correct, self.instances.len())
    }

    pub fn count(&self, action: Action) -> usize {
        self.action_histogram.get(&action).copied().unwrap_or(0)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(File::create(path)?, self)?;
        Ok(())
    }

    /// Appends `mode,p,accuracy,correct,incorrect,ambiguous`, writing the
    /// header when the file is new or empty.
    pub fn append_csv(&self, path: &Path) -> Result<()> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let fresh = file.metadata()?.len() == 0;
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        let csv_err = |err: csv::Error| Error::Io(std::io::Error::other(err));
        if fresh {
            out.write_record(["mode", "p", "accuracy", "correct", "incorrect", "ambiguous"])
                .map_err(csv_err)?;
        }
        out.write_record([
            self.mode.to_string(),
            self.degradation_level.to_string(),
            self.accuracy.to_string(),
            self.count(Action::Correct).to_string(),
            self.count(Action::Incorrect).to_string(),
            self.count(Action::Ambiguous).to_string(),
        ])
        .map_err(csv_err)?;
        out.flush()?;
        Ok(())
    }
}

fn ratio(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Builds the pipeline from `cfg` with the built-in strategies and runs it.
pub fn run_experiment(
    dataset: &[DatasetInstance],
    cfg: &PipelineConfig,
    mode: Mode,
    degradation: Option<Degradation>,
    transport: Arc<dyn Transport>,
) -> Result<ExperimentReport> {
    let pipeline = Registry::builtin().build_pipeline(cfg, transport)?;
    run_with_pipeline(dataset, &pipeline, cfg, mode, degradation)
}

/// Degrades first, then processes instances on `cfg.workers` threads. The
/// report keeps dataset order. A scorer failure aborts the experiment;
/// generation failures only mark their instance incorrect.
pub fn run_with_pipeline(
    dataset: &[DatasetInstance],
    pipeline: &Pipeline,
    cfg: &PipelineConfig,
    mode: Mode,
    degradation: Option<Degradation>,
) -> Result<ExperimentReport> {
    let instances = match degradation {
        Some(d) => degrade(dataset, d.p, d.seed)?,
        None => dataset.to_vec(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|err| Error::Config(format!("cannot start worker pool: {err}")))?;

    let results: Vec<InstanceResult> = pool.install(|| {
        instances
            .par_iter()
            .map(|instance| {
                let record = match mode {
                    Mode::Crag => pipeline.run(&instance.question, &instance.docs),
                    Mode::PlainRag => pipeline.run_plain(&instance.question, &instance.docs),
                    Mode::RagWeb => pipeline.run_with_web(&instance.question, &instance.docs),
                }?;
                log::info!("{}: {:?} -> {}", instance.id, record.action(), record.answer);
                Ok(InstanceResult {
                    id: instance.id.clone(),
                    correct: accuracy(&record.answer, &instance.answers),
                    answers: instance.answers.clone(),
                    record,
                })
            })
            .collect::<Result<_>>()
    })?;

    let mut action_histogram = BTreeMap::new();
    for action in results.iter().filter_map(|r| r.record.action()) {
        *action_histogram.entry(action).or_insert(0) += 1;
    }
    let correct = results.iter().filter(|r| r.correct).count();
    Ok(ExperimentReport {
        config: cfg.clone(),
        mode,
        degradation,
        degradation_level: degradation.map_or(0.0, |d| d.p),
        accuracy: ratio(correct, results.len()),
        action_histogram,
        instances: results,
    })
}
