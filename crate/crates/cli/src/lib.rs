//! Command-line front end for `bnnv`.
//!
//! Exit codes for property checks: 0 when the property holds (certified),
//! 1 on a counterexample, 2 on usage, I/O or parse errors, 3 when the
//! budget runs out.

pub mod args;
mod bench;
mod commands;
mod gen;
pub mod image;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use thiserror::Error;

use bnnv_core::{parse_model, BnnModel, ModelError};

pub use args::Cli;
pub use bench::cmd_bench;
pub use commands::{cmd_equiv, cmd_export, cmd_oracle, cmd_sat, cmd_universal, cmd_verify};
pub use gen::{cmd_gen, cmd_gen_suite};
pub use image::{format_image, parse_image, Image};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Model { path: PathBuf, source: ModelError },
    #[error("{}: {msg}", path.display())]
    Image { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] bnnv_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<bnnv_core::solver::SolverError> for CliError {
    fn from(e: bnnv_core::solver::SolverError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Core(e.into())
    }
}

/// What a command prints and the process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<BnnModel, CliError> {
    parse_model(&read_text(path)?).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_image(path: &Path) -> Result<Image, CliError> {
    parse_image(&read_text(path)?).map_err(|msg| CliError::Image {
        path: path.to_path_buf(),
        msg,
    })
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    use args::Command::*;
    match cli.command {
        Verify(a) => cmd_verify(&a),
        Equiv(a) => cmd_equiv(&a),
        Universal(a) => cmd_universal(&a),
        Export(a) => cmd_export(&a),
        Oracle(a) => cmd_oracle(&a),
        Gen(a) => cmd_gen(&a),
        GenSuite(a) => cmd_gen_suite(&a),
        Bench(a) => cmd_bench(&a),
        Sat(a) => cmd_sat(&a),
    }
}

/// Parses arguments, runs the command, prints its output and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match execute(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.code
        }
        Err(e) => {
            eprintln!("bnnv: error: {e}");
            EXIT_ERROR
        }
    }
}
