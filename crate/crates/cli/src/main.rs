mod commands;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commands::{
    AnalyzeArgs, BoundsArgs, BuildArgs, CertifyArgs, EnsembleArgs, ExponentsArgs, RecoverArgs,
    RipExactArgs, SampleArgs,
};

/// Bipolar sensing matrices from binary linear codes: construction,
/// certificates, bounds and ensemble experiments.
#[derive(Parser, Debug)]
#[command(name = "codesense", version, about)]
struct Cli {
    /// Worker threads [default: all cores]. Reports do not depend on it.
    #[arg(long, env = "CODESENSE_THREADS", global = true)]
    threads: Option<usize>,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Draw a uniform random r x p parity-check matrix.
    Sample(SampleArgs),
    /// Build the compact sensing matrix of a parity-check matrix.
    Build(BuildArgs),
    /// Weight distribution and exact incoherence of C(H).
    Analyze(AnalyzeArgs),
    /// Weight-band incoherence certificate.
    Certify(CertifyArgs),
    /// Closed-form finite-size bounds.
    Bounds(BoundsArgs),
    /// Ensemble probabilities, exhaustive or Monte-Carlo.
    Ensemble(EnsembleArgs),
    /// Exact RIP constant by subset scan.
    RipExact(RipExactArgs),
    /// Basis-pursuit recovery of random sparse signals.
    Recover(RecoverArgs),
    /// Finite-size exponent table.
    Exponents(ExponentsArgs),
}

/// A command-line mistake caught after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Serialize)]
struct Config<'a> {
    #[serde(flatten)]
    command: &'a Command,
    format: Format,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let report = match &cli.command {
        Command::Sample(a) => commands::sample(a)?,
        Command::Build(a) => commands::build(a)?,
        Command::Analyze(a) => commands::analyze(a)?,
        Command::Certify(a) => commands::certify(a)?,
        Command::Bounds(a) => commands::bounds(a)?,
        Command::Ensemble(a) => commands::ensemble(a)?,
        Command::RipExact(a) => commands::rip_exact(a)?,
        Command::Recover(a) => commands::recover(a)?,
        Command::Exponents(a) => commands::exponents(a)?,
    };
    let config = serde_json::to_value(Config {
        command: &cli.command,
        format: cli.format,
    })?;
    let text = report.render(cli.format, config)?;
    io::write_output(cli.output.as_deref(), text.as_bytes())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<codesense::Error>() {
        Some(codesense::Error::AssumptionViolated(_) | codesense::Error::DegenerateCode) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("codesense: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
