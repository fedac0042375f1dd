//! Batch front end. Every command reads its configuration from flags, an
//! optional JSON file and built-in defaults, in that order of precedence,
//! and writes CSV/JSON files carrying a manifest of the run.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical
//! non-convergence (outputs written so far are kept), 4 I/O error.

mod commands;
mod config;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bergman_interp::Error;
use clap::Parser;

use config::{CommandName, RunConfig};
use output::{Manifest, Writer};

#[derive(Parser)]
#[command(
    name = "bergman-interp",
    version,
    about = "Interpolation experiments in weighted Bergman spaces"
)]
struct Cli {
    #[arg(value_enum)]
    command: CommandName,
    /// JSON file with any of the flags below, kebab-case keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::NotConverged { .. } | Error::VanishingFactor(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => RunConfig::default(),
    };
    let cfg = cli.flags.over(file).over(config::defaults(cli.command));
    let out_dir = config::need(&cfg.out, "out")?;
    let mut out = Writer::new(&out_dir, Manifest::new(cli.command.as_str(), &cfg))?;
    let result = commands::run(cli.command, &cfg, &mut out);
    for path in out.written() {
        println!("{}", path.display());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bergman-interp: {e}");
            ExitCode::from(e.code())
        }
    }
}
