//! Command-line pipeline: `ingest`, `preprocess`, `select-k`, `fit`,
//! `sentiment` and `report`, each writing one subdirectory of the output
//! directory.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{keys_help, KeyFlags, PipelineConfig, Settings};
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "tsdyn", version, about = "Daily topic and sentiment dynamics of a short-text corpus", after_help = keys_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file of `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Log progress to stderr
    #[arg(long, global = true)]
    pub verbose: bool,

    #[command(flatten)]
    pub keys: KeyFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Load, language-filter and bucket records by day
    Ingest,
    /// Build the vocabulary and bag-of-words corpus
    Preprocess,
    /// Choose the topic count by coherence on the first day
    SelectK,
    /// Fit the dynamic topic model
    Fit,
    /// Score every ingested document
    Sentiment,
    /// Join topics and sentiment into the exported series
    Report,
}

impl Cli {
    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        settings.apply_flags(&self.keys);
        PipelineConfig::from_settings(&settings)
    }
}

pub fn execute(command: Command, cfg: &PipelineConfig) -> Result<(), CliError> {
    use crate::commands::*;
    match command {
        Command::Ingest => cmd_ingest(cfg).map(drop),
        Command::Preprocess => cmd_preprocess(cfg).map(drop),
        Command::SelectK => {
            let sel = cmd_select_k(cfg)?;
            println!("k={}", sel.best_k);
            Ok(())
        }
        Command::Fit => cmd_fit(cfg).map(drop),
        Command::Sentiment => cmd_sentiment(cfg).map(drop),
        Command::Report => cmd_report(cfg).map(drop),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match cli.pipeline_config().and_then(|cfg| execute(cli.command, &cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
