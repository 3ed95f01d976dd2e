mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{AugmentOpts, ConfigFile, EvaluateOpts, IndexOpts, PreprocessOpts, StatsOpts};

/// Counterfactual augmentation and factuality evaluation for summarization corpora.
///
/// Options come from flags, then FACTAUG_* environment variables, then the
/// matching [section] of the --config file, then built-in defaults.
#[derive(Parser)]
#[command(name = "factaug", version)]
struct Cli {
    /// TOML config file with one [section] per subcommand
    #[arg(long, global = true, env = "FACTAUG_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove boilerplate document sentences and unsupported summary sentences
    Preprocess(PreprocessOpts),
    /// Build the entity inventory used by entity replacement
    Index(IndexOpts),
    /// Emit original plus perturbed training pairs
    Augment(AugmentOpts),
    /// Score predictions with ROUGE and the entailment factuality metric
    Evaluate(EvaluateOpts),
    /// Entity-count and novel-bigram statistics
    Stats(StatsOpts),
}

/// Exit codes: 1 usage or configuration, 2 data, 3 entailment backend.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Backend(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Backend(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Backend(e) => e,
        }
    }
}

pub trait ResultExt<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn backend(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
    fn backend(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Backend(e.into()))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).usage()?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Preprocess(opts) => commands::preprocess(opts, file.preprocess),
        Command::Index(opts) => commands::index(opts, file.index),
        Command::Augment(opts) => commands::augment(opts, file.augment),
        Command::Evaluate(opts) => commands::evaluate(opts, file.evaluate),
        Command::Stats(opts) => commands::stats(opts, file.stats),
    }
}

/// Error chain joined with ": ", skipping causes already quoted by their parent.
fn render(err: &anyhow::Error) -> String {
    let mut out = err.to_string();
    for cause in err.chain().skip(1) {
        let text = cause.to_string();
        if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", render(failure.error()));
            ExitCode::from(failure.code())
        }
    }
}
