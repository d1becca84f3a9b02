//! Command-line tools and the curation service.

pub mod commands;
pub mod config;
pub mod service;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Failure, EXIT_IO};
use crate::config::{FileConfig, Overrides, ToolConfig, DATA_ROOT_ENV};

#[derive(Debug, Parser)]
#[command(name = "howire", version, about = "Wireframe dataset generation, evaluation and curation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset directory (overrides HOWIRE_DATA_ROOT).
    #[arg(long, global = true)]
    pub data_root: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub solids: Option<usize>,
    #[arg(long, global = true)]
    pub views: Option<usize>,
    /// Fraction of solids in the training split.
    #[arg(long, global = true)]
    pub split_ratio: Option<f64>,
    /// Address for curate-serve.
    #[arg(long, global = true)]
    pub bind: Option<String>,
    /// Comma-separated voter ids (exactly 3).
    #[arg(long, global = true, value_delimiter = ',')]
    pub roster: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate solids, render views and write the labeled dataset.
    Generate,
    /// Summarize visible/hidden junction and line counts per split.
    Stats,
    /// Score a prediction file against a split.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Where to write the JSON report.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check accelerated occlusion and matching against exhaustive references.
    OracleCheck {
        /// Random matrices for the matching sweep.
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Evaluate the hidden-junction loss on a JSON input (default: a built-in example).
    LossCheck {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Serve the curation API.
    CurateServe,
    /// Apply the vote log and write the filtered manifests.
    CurateExport {
        /// Treat missing votes as keep.
        #[arg(long)]
        allow_partial: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            data_root: self.data_root.clone(),
            seed: self.seed,
            solids: self.solids,
            views: self.views,
            split_ratio: self.split_ratio,
            bind: self.bind.clone(),
            roster: self.roster.clone(),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<ToolConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let env = std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        ToolConfig::resolve(&self.overrides(), env, &file)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let config = cli.global.resolve().map_err(|e| Failure::new(EXIT_IO, format!("{e:#}")))?;
    match cli.command {
        Command::Generate => commands::generate(&config),
        Command::Stats => commands::stats(&config),
        Command::Eval { predictions, split, output } => commands::eval(&config, &predictions, &split, output),
        Command::OracleCheck { instances, inject_fault } => commands::oracle_check(&config, instances, inject_fault),
        Command::LossCheck { input } => commands::loss_check(input.as_deref()),
        Command::CurateServe => commands::curate_serve(&config),
        Command::CurateExport { allow_partial, output } => commands::curate_export(&config, allow_partial, output),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}
