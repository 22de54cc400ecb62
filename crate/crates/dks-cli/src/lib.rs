//! Library side of the `dks` command-line tool: configuration parsing, the
//! subcommands and CSV output. The binary is a thin wrapper around [`run`].

pub mod commands;
pub mod config;

/// The user guide's command-line chapter, whose Rust examples run as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
struct CliGuide;

use std::io::Write;
use std::path::Path;

use clap::{Parser, Subcommand};

use crate::commands::{Outcome, Table};
use crate::config::{ConfigError, RunConfig};

/// Failure of a run, mapped to the process exit code by [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(#[from] deltakick::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the invocation or config, 2 when
    /// the computation itself fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dks", version, about = "Delta-kick squeezing interferometry simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file with one `key = value` per line.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// CSV destination; overrides the `out` key. Stdout when neither is set.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,
    /// Print the fully resolved configuration and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Extra `key=value` assignment applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Gain from given twists (mode, N, tau, tau_ai, delta_n).
    Gain,
    /// (t_exp, dt1) landscape of the preparation twist and gain.
    PrepScan,
    /// Tune the echo kick so the echo undoes the preparation twist.
    EchoTune,
    /// Linear and echo gain against detection noise.
    Robustness,
    /// Evaluate one full mean-field protocol.
    SequenceEval,
    /// Radii and twisting rates along the protocol timeline.
    ChiTrace,
}

/// Reads the config file (if any) and applies `--set` overrides and `--out`.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

/// Runs one subcommand on a resolved config.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Gain => commands::gain(cfg),
        Command::PrepScan => commands::prep_scan(cfg),
        Command::EchoTune => commands::echo_tune(cfg),
        Command::Robustness => commands::robustness(cfg),
        Command::SequenceEval => commands::sequence_eval(cfg),
        Command::ChiTrace => commands::chi_trace(cfg),
    }
}

/// Writes `table` as comma-separated CSV with a header row.
pub fn write_csv(table: &Table, sink: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Full CLI run: config, thread pool, command, output. Summary lines go to
/// stdout when the CSV goes to a file and to stderr otherwise.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    if cfg.threads > 0 {
        // Fails only if a global pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let outcome = execute(cli.command, &cfg)?;
    match &cfg.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
            write_csv(&outcome.table, std::io::BufWriter::new(file))
                .map_err(|e| io_error(path, std::io::Error::other(e)))?;
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {} rows to {}", outcome.table.rows.len(), path.display());
        }
        None => {
            match write_csv(&outcome.table, std::io::stdout().lock()) {
                Ok(()) => {}
                // A closed pipe (`dks ... | head`) is not a failure of the run.
                Err(e) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) => {
                    return Ok(())
                }
                Err(e) => return Err(io_error(Path::new("<stdout>"), std::io::Error::other(e))),
            }
            for line in &outcome.summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}
