//! Dataset-level experiments: loading, simulated retrieval failure, accuracy
//! and reports.

mod dataset;
mod degrade;
mod experiment;
mod metric;

pub use dataset::{load_dataset, read_jsonl, write_dataset, DatasetInstance};
pub use degrade::{degrade, removal_draw, removed_docs, PLACEHOLDER_ID, PLACEHOLDER_TEXT};
pub use experiment::{run_experiment, run_with_pipeline, Degradation, ExperimentReport, InstanceResult, Mode};
pub use metric::accuracy;
