//! Corrective retrieval-augmented generation.
//!
//! A retrieval evaluator scores each retrieved document, a trigger turns the
//! scores into one of three actions, and the knowledge handed to the
//! generator is refined internal text, web search results, or both.

pub mod cli;
pub mod completion;
pub mod config;
pub mod error;
pub mod generator;
pub mod harness;
pub mod mock_server;
pub mod pipeline;
pub mod refinement;
pub mod registry;
pub mod scoring;
pub mod text;
pub mod transport;
pub mod trigger;
pub mod websearch;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{AblationFlags, Pipeline, RunRecord};
pub use registry::Registry;
pub use text::{DocumentText, QueryText};
pub use trigger::{Action, ActionJudgment, Thresholds};
