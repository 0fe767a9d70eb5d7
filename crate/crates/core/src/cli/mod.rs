//! Command-line front end. Every subcommand writes machine-readable output
//! (JSON or JSON Lines) to stdout or to the requested file; logs go to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
mod settings;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use settings::{Settings, CONFIG_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => EXIT_NUMERIC,
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser, Debug)]
#[command(name = "claimdet", version, about = "Claim detection with viewpoint-pillar linguistic encoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// `key = value` config file (falls back to $LESA_CONFIG).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for prediction.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct TrainFlags {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    aux_weight: Option<f64>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Hash-embed records missing from the embedding file.
    #[arg(long)]
    fallback_embeddings: bool,
    /// Random pillar embeddings instead of skip-gram initialisation.
    #[arg(long)]
    no_skipgram_init: bool,
    #[arg(long)]
    skipgram_epochs: Option<usize>,
    #[arg(long)]
    skipgram_window: Option<usize>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelFlags {
    /// POS n-gram order (2, 3 or 4).
    #[arg(long)]
    k: Option<usize>,
    /// One shared pillar per branch instead of one per viewpoint.
    #[arg(long)]
    combined_view: bool,
    /// sinusoidal | learned | off
    #[arg(long)]
    positional: Option<String>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean raw tweets (text lines or JSON objects with a "text" field) and drop duplicates.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Spelling dictionary, `term<TAB>frequency` per line.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Count POS n-grams and dependency tri-grams and list the kept ones.
    BuildVocab {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train skip-gram embeddings for POS n-grams and dependency tri-grams.
    TrainSkipgram {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Restrict training to one viewpoint (noisy, semi_noisy, non_noisy).
        #[arg(long)]
        viewpoint: Option<String>,
        #[arg(long)]
        pos_out: Option<PathBuf>,
        #[arg(long)]
        dep_out: Option<PathBuf>,
        #[arg(long)]
        skipgram_epochs: Option<usize>,
        #[arg(long)]
        skipgram_window: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a model and pre-train its pillars, saving a checkpoint.
    Pretrain {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model end to end (or continue from a pre-trained checkpoint).
    Train {
        #[arg(long)]
        records: Option<PathBuf>,
        /// Sentence-embedding file (LESAEMB1).
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Start from this pre-trained checkpoint.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Predict labels with a trained checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        fallback_embeddings: bool,
        /// Route the final fusion through a single branch: pos, dep or semantic.
        #[arg(long)]
        force_branch: Option<String>,
        #[arg(long)]
        doubt_words: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        common: Common,
    },
    /// Score predictions against gold records.
    Eval {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Comma-separated per-run scores of system A for a paired t-test.
        #[arg(long, requires = "compare_b")]
        compare_a: Option<String>,
        #[arg(long, requires = "compare_a")]
        compare_b: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dataset statistics per source (and per split part when --seed is given).
    Stats {
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Inter-annotator agreement.
    Kappa {
        /// 2x2 counts `a00,a01,a10,a11` (rows: annotator A, columns: annotator B).
        #[arg(long, conflicts_with = "annotations")]
        matrix: Option<String>,
        /// JSON Lines, one array of per-annotator labels (0, 1, "x") per item.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}").map_err(|e| CliError::data(e.to_string()))?;
                return Ok(());
            }
            return Err(CliError::usage(e.render().to_string()));
        }
    };
    commands::execute(cli.command, out)
}

/// Runs the command line and returns the process exit code; errors are
/// reported on stderr.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(args, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = lock.flush();
            let msg = e.message.trim_end();
            if msg.starts_with("error:") {
                eprintln!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            e.code
        }
    }
}
