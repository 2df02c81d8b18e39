//! Command-line entry point.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 3 for runtime and
//! network failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::harness::{self, load_dataset, read_jsonl, write_dataset, Degradation, Mode};
use crate::mock_server::{MockFixtures, MockServer};
use crate::registry::{default_transport, BuildContext, Registry};
use crate::text::{DocumentText, QueryText};
use crate::trigger::{judge, Action};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "crag",
    version,
    about = "Corrective retrieval-augmented generation",
    after_help = "Exit codes: 0 success, 2 usage or input error, 3 runtime or network error.\n\
                  The search backend API key is read from the environment variable named by\n\
                  `search.api_key_env` (default CRAG_SEARCH_API_KEY).\n\
                  Log filters can also be set with CRAG_LOG."
)]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = LogLevel::Warn, global = true)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML or JSON pipeline config.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override one config key, e.g. `--set thresholds.upper=0.7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Refuse every endpoint outside the loopback interface.
    #[arg(long)]
    pub offline: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliAction {
    Correct,
    Incorrect,
    Ambiguous,
}

impl From<CliAction> for Action {
    fn from(a: CliAction) -> Action {
        match a {
            CliAction::Correct => Action::Correct,
            CliAction::Incorrect => Action::Incorrect,
            CliAction::Ambiguous => Action::Ambiguous,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CliMode {
    Crag,
    PlainRag,
    RagWeb,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Crag => Mode::Crag,
            CliMode::PlainRag => Mode::PlainRag,
            CliMode::RagWeb => Mode::RagWeb,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score documents against a question and print the triggered action.
    Judge {
        #[arg(long)]
        question: String,
        /// JSONL file, one `{"id", "text"}` document per line.
        #[arg(long)]
        docs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run an experiment over a dataset and write a JSON report.
    Run {
        /// JSONL dataset.
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = CliMode::Crag)]
        mode: CliMode,
        /// Remove each relevant document with this probability first.
        #[arg(long)]
        degrade_p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fold this action into the others.
        #[arg(long, value_enum, conflicts_with = "only_action")]
        disable_action: Option<CliAction>,
        /// Send every question down one branch.
        #[arg(long, value_enum)]
        only_action: Option<CliAction>,
        /// Use raw documents as internal knowledge.
        #[arg(long)]
        no_refinement: bool,
        /// Search with the question itself.
        #[arg(long)]
        no_rewriting: bool,
        /// Keep every fetched web paragraph.
        #[arg(long)]
        no_selection: bool,
        /// Worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Report path.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Append a summary row (mode, p, accuracy, action counts) to this CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a degraded copy of a dataset.
    Degrade {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve fixture-backed search, page, generate, rewrite and score routes.
    MockServe {
        #[arg(long, default_value_t = 8787)]
        port: u16,
        /// Directory with search.json, pages.json and optional generate.json.
        #[arg(long)]
        fixtures: PathBuf,
    },
}

fn load_config(args: &ConfigArgs, extra: Vec<String>) -> Result<PipelineConfig> {
    let mut overrides = args.overrides.clone();
    if args.offline {
        overrides.push("offline=true".into());
    }
    overrides.extend(extra);
    PipelineConfig::load(args.config.as_deref(), &overrides)
}

fn cmd_judge(question: &str, docs: &Path, args: &ConfigArgs) -> Result<()> {
    let cfg = load_config(args, Vec::new())?;
    let question = QueryText::new(question)?;
    let docs: Vec<DocumentText> = read_jsonl(docs)?.into_iter().map(|(_, d)| d).collect();
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    let ctx = BuildContext {
        config: &cfg,
        transport: default_transport(&cfg),
    };
    let scorer = Registry::builtin().scorers.build(&cfg.scorer.kind, &ctx)?;
    let scores = scorer.score_batch(&question, &docs)?;
    let judgment = judge(&scores, cfg.thresholds.resolve()?)?;
    println!("{}", serde_json::to_string_pretty(&judgment)?);
    Ok(())
}

fn cmd_run(command: &Command) -> Result<()> {
    let Command::Run {
        dataset,
        config,
        mode,
        degrade_p,
        seed,
        disable_action,
        only_action,
        no_refinement,
        no_rewriting,
        no_selection,
        workers,
        out,
        csv,
    } = command
    else {
        unreachable!("cmd_run called with another command");
    };
    let mut extra = Vec::new();
    if let Some(a) = disable_action {
        extra.push(format!("ablations.disable_action={}", Action::from(*a)));
    }
    if let Some(a) = only_action {
        extra.push(format!("ablations.only_action={}", Action::from(*a)));
    }
    for (flag, key) in [
        (no_refinement, "no_refinement"),
        (no_rewriting, "no_rewriting"),
        (no_selection, "no_selection"),
    ] {
        if *flag {
            extra.push(format!("ablations.{key}=true"));
        }
    }
    if let Some(n) = workers {
        extra.push(format!("workers={n}"));
    }
    let cfg = load_config(config, extra)?;
    let instances = load_dataset(dataset)?;
    let degradation = degrade_p.map(|p| Degradation { p, seed: *seed });
    let report = harness::run_experiment(&instances, &cfg, (*mode).into(), degradation, default_transport(&cfg))?;
    report.write_json(out)?;
    if let Some(csv) = csv {
        report.append_csv(csv)?;
    }
    log::info!("accuracy {:.4} over {} instances", report.accuracy, report.instances.len());
    println!("{}", out.display());
    Ok(())
}

fn cmd_degrade(dataset: &Path, p: f64, seed: u64, out: &Path) -> Result<()> {
    let instances = load_dataset(dataset)?;
    write_dataset(out, &harness::degrade(&instances, p, seed)?)?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_mock_serve(port: u16, fixtures: &Path) -> Result<()> {
    let server = MockServer::start(port, MockFixtures::load(fixtures)?)?;
    println!("listening on http://{}", server.addr());
    std::io::stdout().flush()?;
    server.wait();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Judge { question, docs, config } => cmd_judge(question, docs, config),
        run @ Command::Run { .. } => cmd_run(run),
        Command::Degrade { dataset, p, seed, out } => cmd_degrade(dataset, *p, *seed, out),
        Command::MockServe { port, fixtures } => cmd_mock_serve(*port, fixtures),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_RUNTIME
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .parse_env("CRAG_LOG")
        .init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
