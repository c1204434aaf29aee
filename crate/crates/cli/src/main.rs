//! Pipeline driver: ingest, detect, baseline, evaluate, plotdata.
//!
//! Each stage reads the previous stage's on-disk artifacts and writes its
//! own atomically, so stages are independently re-runnable. Exit codes:
//! 0 success, 1 usage error, 2 input validation failure, 3 internal
//! invariant violation.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ced_core::config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "ced", version, about = "Cyber-attack event detection over short-text streams")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory for stage artifacts.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Seed category to expand: all, data-breach, ddos, account-hijacking.
    #[arg(long, global = true, default_value = "all")]
    seed_category: String,

    /// Log verbosity: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest JSON Lines texts plus CoNLL-U parses into a daily store.
    Ingest {
        /// JSON Lines file with id / timestamp / text.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// CoNLL-U parse file with `# newdoc id =` markers.
        #[arg(long)]
        parses: Option<PathBuf>,
    },
    /// Expand seed queries per day and emit typed events.
    Detect {
        /// Store directory written by `ingest` (default: <output>/store).
        #[arg(long)]
        store: Option<PathBuf>,
        /// Word-vector file (optionally gzip-compressed).
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Kleinberg burst baseline over keyword counts.
    Baseline {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Keyword list, one term per line.
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Pre-aggregated counts CSV (day, keyword, count, total) instead
        /// of the store.
        #[arg(long)]
        counts_csv: Option<PathBuf>,
    },
    /// Match an events file against a GSR CSV and score it.
    Evaluate {
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        gsr: Option<PathBuf>,
        /// Manual review CSV (eventId, label TP/FP, note).
        #[arg(long)]
        manual_review: Option<PathBuf>,
    },
    /// Emit plot-ready CSV files (streamgraph, per-event word clouds).
    Plotdata {
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// Error with an exit-code classification.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Input(String),
    Internal(String),
}

impl CmdError {
    fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Input(_) => 2,
            CmdError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Input(m) | CmdError::Internal(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through the error display.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };

    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ced: {}", e.message());
            return ExitCode::from(e.code());
        }
    };

    let ctx = commands::Context {
        config,
        output_dir: cli.output_dir.clone(),
        seed_category: cli.seed_category.clone(),
    };

    let result = match &cli.command {
        Command::Ingest { corpus, parses } => {
            commands::ingest::run(&ctx, corpus.as_deref(), parses.as_deref())
        }
        Command::Detect { store, embeddings } => {
            commands::detect::run(&ctx, store.as_deref(), embeddings.as_deref())
        }
        Command::Baseline {
            store,
            keywords,
            counts_csv,
        } => commands::baseline::run(
            &ctx,
            store.as_deref(),
            keywords.as_deref(),
            counts_csv.as_deref(),
        ),
        Command::Evaluate {
            events,
            gsr,
            manual_review,
        } => commands::evaluate::run(
            &ctx,
            events.as_deref(),
            gsr.as_deref(),
            manual_review.as_deref(),
        ),
        Command::Plotdata { events, trace } => {
            commands::plotdata::run(&ctx, events.as_deref(), trace.as_deref())
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ced: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CmdError> {
    match &cli.config {
        Some(path) => PipelineConfig::from_path(path)
            .map_err(|e| CmdError::Input(format!("config {}: {e}", path.display()))),
        None => Ok(PipelineConfig::default()),
    }
}
