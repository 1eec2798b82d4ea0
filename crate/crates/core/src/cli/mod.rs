//! Command-line front end: `dist`, `capacity`, `cutoff` and `validate`.
//!
//! Settings come from flags, then an optional `--config` file, then built-in
//! defaults. Output is CSV (with a versioned `#` header line) or JSON.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::{cmd_capacity, cmd_cutoff, cmd_dist, cmd_validate};
pub use config::{CommandKind, Flags, OutputFormat, RunConfig, SweepSpec};
pub use table::{Cell, Table};

/// Process exit statuses.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION_FAILURE: u8 = 1;
pub const EXIT_CONFIG_ERROR: u8 = 2;
pub const EXIT_NUMERICAL_ERROR: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG_ERROR,
            CliError::Numerical(_) => EXIT_NUMERICAL_ERROR,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rician-df",
    version,
    about = "End-to-end SNR distribution and adaptive-transmission capacity of a two-hop decode-and-forward link over Rician fading"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CDF and PDF of the end-to-end SNR over a γ grid
    Dist(Flags),
    /// Capacity of each adaptive scheme over a mean-SNR sweep
    Capacity(Flags),
    /// OPRA and TIFR cutoffs over a mean-SNR sweep
    Cutoff(Flags),
    /// Compare analytic results with simulation and the quadrature backend
    Validate(Flags),
}

impl Command {
    fn parts(&self) -> (CommandKind, &Flags) {
        match self {
            Command::Dist(f) => (CommandKind::Dist, f),
            Command::Capacity(f) => (CommandKind::Capacity, f),
            Command::Cutoff(f) => (CommandKind::Cutoff, f),
            Command::Validate(f) => (CommandKind::Validate, f),
        }
    }
}

/// A rendered table and the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub format: OutputFormat,
    pub exit_code: u8,
}

impl Outcome {
    pub fn render(&self) -> String {
        self.table.render(self.format)
    }
}

/// Run one subcommand against an already resolved configuration.
pub fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (table, exit_code) = match kind {
        CommandKind::Dist => (cmd_dist(cfg)?, EXIT_OK),
        CommandKind::Capacity => row_failures(cmd_capacity(cfg)),
        CommandKind::Cutoff => row_failures(cmd_cutoff(cfg)),
        CommandKind::Validate => {
            let (t, ok) = cmd_validate(cfg);
            (t, if ok { EXIT_OK } else { EXIT_VALIDATION_FAILURE })
        }
    };
    Ok(Outcome {
        table,
        format: cfg.format,
        exit_code,
    })
}

fn row_failures(table: Table) -> (Table, u8) {
    let status = table.column("status").expect("status column");
    let failed = table
        .rows
        .iter()
        .any(|r| matches!(&r[status], Cell::Text(s) if s != "ok"));
    (
        table,
        if failed {
            EXIT_NUMERICAL_ERROR
        } else {
            EXIT_OK
        },
    )
}

/// Resolve flags and the config file, run, and write the output.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    let (kind, flags) = cli.command.parts();
    let flags = flags.clone().with_config_file()?;
    let cfg = RunConfig::resolve(&flags, kind)?;
    let outcome = execute(kind, &cfg)?;
    let text = outcome.render();
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))?;
        }
    }
    Ok(outcome.exit_code)
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_CONFIG_ERROR
            } else {
                EXIT_OK
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rician-df: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
