//! `gatelab`: reproducible experiments on bipartite gates.
//!
//! Every run writes its outputs plus `manifest.json` into `--out`; `gatelab
//! replay <manifest>` re-runs the recorded parameters and compares hashes.
//!
//! Exit codes: 0 success, 2 parse/usage, 3 input validation, 4 numerical
//! failure (including failed checks and replay mismatches).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gatelab::{Dims, Error};

use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "gatelab", version, about = "Entangling power, gate typicality and their thermalization")]
struct Cli {
    #[command(flatten)]
    global: Global,

    /// Worker threads for Monte-Carlo loops (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Global {
    /// Master seed; required whenever a run draws random numbers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Local-unitary invariants of one gate.
    Measure(MeasureArgs),
    /// (e_p, g_t) of Haar-random gates, plus boundary curves for two qubits.
    Scatter(ScatterArgs),
    /// Mean entangling power along U (u_A ⊗ u_B) U ... U.
    Thermalize(ThermalizeArgs),
    /// Eigenvalues and singular values of reshuffled / partially transposed evolutions.
    Spectra(SpectraArgs),
    /// Runs the invariant suite and validates gate files.
    Verify(VerifyArgs),
    /// Re-runs a manifest and checks that every output is reproduced bitwise.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Measure(_) => "measure",
            Command::Scatter(_) => "scatter",
            Command::Thermalize(_) => "thermalize",
            Command::Spectra(_) => "spectra",
            Command::Verify(_) => "verify",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MeasureArgs {
    /// Gate spec, e.g. `cnot`, `fswap:t=0.3,n=3`, `file:gate.json`.
    #[arg(required_unless_present = "input", conflicts_with = "input")]
    pub gate: Option<String>,
    /// Matrix file to measure instead of a gate spec.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub dims: Option<Dims>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ScatterArgs {
    #[arg(long, default_value = "2x2")]
    pub dims: Dims,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ThermalizeArgs {
    #[arg(long)]
    pub gate: String,
    #[arg(long)]
    pub dims: Dims,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value = "fresh-locals")]
    pub mode: gatelab::thermal::EvolutionMode,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    Reshuffled,
    PartialTranspose,
    Both,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpectraArgs {
    #[arg(long)]
    pub gate: String,
    #[arg(long)]
    pub dims: Dims,
    /// Comma-separated steps; 0 is the bare gate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub steps: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub which: Which,
    #[arg(long, default_value = "fresh-locals")]
    pub mode: gatelab::thermal::EvolutionMode,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Fast subset at reduced sample sizes.
    #[arg(long)]
    pub quick: bool,
    /// Matrix files that must load as unitary gates.
    #[arg(long = "gate-file")]
    pub gate_files: Vec<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
    Output { path: PathBuf, source: std::io::Error },
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<gatelab::ParseError> for CliError {
    fn from(e: gatelab::ParseError) -> Self {
        CliError::Lib(Error::Parse(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::Parse(_)) => 2,
            CliError::Lib(Error::Numerical(_)) | CliError::Failed(_) => 4,
            CliError::Lib(_) | CliError::Output { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Failed(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Output { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Replay(args) => manifest::replay(&args.manifest, &cli.out),
        command => run(command.clone(), cli.global.clone(), &cli.out).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs one command into `out` and writes its manifest.
pub fn run(command: Command, global: Global, out: &std::path::Path) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Output {
        path: out.to_path_buf(),
        source,
    })?;
    let start = std::time::Instant::now();
    let produced = match &command {
        Command::Measure(a) => commands::measure(a, &global, out)?,
        Command::Scatter(a) => commands::scatter(a, &global, out)?,
        Command::Thermalize(a) => commands::thermalize(a, &global, out)?,
        Command::Spectra(a) => commands::spectra(a, &global, out)?,
        Command::Verify(a) => commands::verify(a, &global, out)?,
        Command::Replay(_) => unreachable!("replay is dispatched separately"),
    };
    let manifest = RunManifest::new(command, global, out, &produced, start.elapsed())?;
    manifest.write(out)?;
    match &manifest.failure {
        Some(failure) => Err(CliError::Failed(failure.clone())),
        None => Ok(manifest),
    }
}
