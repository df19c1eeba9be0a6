//! Command-line front end: problem files in, verdict reports out.

pub mod commands;
pub mod problem;
pub mod report;

use musym::oracle::OracleConfig;
use thiserror::Error;

pub use commands::{run_command, Command, GaugeMode, Options};
pub use problem::{Problem, ProblemFile};
pub use report::{Check, CheckOutcome, Report, Strength};

/// Input and validation failures; all map to exit code 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("{0}")]
    Engine(#[from] musym::Error),
}

pub const EXIT_INPUT: i32 = 3;

/// Loads, validates and runs one command against one file.
pub fn run_file(command: Command, path: &str, opts: &Options) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })?;
    run_text(command, path, &text, opts)
}

pub fn run_text(command: Command, label: &str, text: &str, opts: &Options) -> Result<Report, CliError> {
    let problem = ProblemFile::from_json(text)?.validate()?;
    run_command(command, label, &problem, opts)
}

impl Options {
    pub fn oracle(&self) -> OracleConfig {
        let mut cfg = OracleConfig::default();
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg
    }
}
