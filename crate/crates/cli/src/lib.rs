//! Command-line surface: ingest filings, build indexes, manage QA datasets,
//! run configuration matrices and produce trade-space reports.
//!
//! Exit codes: 0 success, 2 validation, 3 provider or transport, 4 data
//! integrity, 1 local I/O. Failures print a one-line JSON summary on stderr;
//! successes print a JSON summary on stdout.

pub mod commands;
pub mod error;
pub mod manifest;

use std::ffi::OsString;

use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::dataset::DatasetCommand;
use commands::demo::DemoArgs;
use commands::index::IndexArgs;
use commands::ingest::IngestArgs;
use commands::report::ReportArgs;
use commands::run::RunArgs;
pub use error::{CliError, ErrorKind};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "ragtrade", version, about = "Retrieval-augmented QA experiments over regulatory filings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch filings into a document store.
    Ingest(IngestArgs),
    /// Chunk stored filings and build the search indexes.
    Index(IndexArgs),
    /// QA dataset utilities.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Run a configuration matrix and score it.
    Run(RunArgs),
    /// Frontier, technique averages and the time-to-target objective.
    Report(ReportArgs),
    /// Offline end-to-end run on bundled fixtures.
    Demo(DemoArgs),
}

pub fn execute(cmd: &Command) -> Result<Value, CliError> {
    match cmd {
        Command::Ingest(a) => commands::ingest::execute(a),
        Command::Index(a) => commands::index::execute(a),
        Command::Dataset(c) => commands::dataset::execute(c),
        Command::Run(a) => commands::run::execute(a),
        Command::Report(a) => commands::report::execute(a),
        Command::Demo(a) => commands::demo::execute(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ErrorKind::Validation.exit_code() } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{}", serde_json::json!({"status": "ok", "result": summary}));
            0
        }
        Err(e) => {
            tracing::error!(kind = ?e.kind, "{}", e.errors.join("; "));
            eprintln!("{}", e.summary());
            e.exit_code()
        }
    }
}
