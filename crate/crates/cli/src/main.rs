//! `psseq`: experiments on Piatetski-Shapiro sequences `⌊n^c⌋ mod m`.

mod commands;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "psseq", version, about = "Certified Piatetski-Shapiro sequence experiments")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Emit `x,y` pairs for a log-log plot instead of the table.
    #[arg(long, global = true)]
    plot_data: bool,

    /// Largest working precision for certified floors.
    #[arg(long, global = true, env = "PSSEQ_MAX_BITS", default_value_t = 4096)]
    max_bits: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the residues u_start, …, u_{start+count-1}.
    Gen(commands::GenArgs),
    /// Length-k block frequencies of u_1, …, u_N.
    Blockfreq(commands::BlockfreqArgs),
    /// Subword complexity L_k of u_1, …, u_N with a growth fit.
    Complexity(commands::ComplexityArgs),
    /// Search for a forbidden block, or scan block saturation.
    Missing(commands::MissingArgs),
    /// Exponential sums over consecutive terms, swept over N.
    Expsum(commands::ExpsumArgs),
    /// Discrepancy and Erdős–Turán–Koksma bound of a point set.
    Discrepancy(commands::DiscrepancyArgs),
    /// Correlation of a multiplicative function with G(u_n), or prime pair sums.
    Mobius(commands::MobiusArgs),
    /// Gap lengths between visits of {nα + β} to [1 − ε, 1).
    Gaps(commands::GapsArgs),
}

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Common {
    pub format: Format,
    pub output: Option<PathBuf>,
    pub plot_data: bool,
    pub max_bits: u32,
}

/// Exit status for a failure.
#[derive(Debug)]
pub enum Failure {
    /// Input rejected by a precondition: exit 2.
    Precondition(String),
    /// A floor could not be certified at the precision limit: exit 3.
    Ambiguous(String),
    /// I/O and everything else: exit 1.
    Other(anyhow::Error),
}

impl From<psseq::Error> for Failure {
    fn from(e: psseq::Error) -> Self {
        if e.is_ambiguity() {
            Failure::Ambiguous(e.to_string())
        } else {
            Failure::Precondition(e.to_string())
        }
    }
}

impl From<psseq::certified_eval::EvalError> for Failure {
    fn from(e: psseq::certified_eval::EvalError) -> Self {
        psseq::Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("{}", serde_json::json!({"error": "other", "message": e.to_string()}));
            return ExitCode::from(1);
        }
    }
    let common = Common {
        format: cli.format,
        output: cli.output,
        plot_data: cli.plot_data,
        max_bits: cli.max_bits,
    };
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(a, &common),
        Command::Blockfreq(a) => commands::blockfreq(a, &common),
        Command::Complexity(a) => commands::complexity(a, &common),
        Command::Missing(a) => commands::missing(a, &common),
        Command::Expsum(a) => commands::expsum(a, &common),
        Command::Discrepancy(a) => commands::discrepancy(a, &common),
        Command::Mobius(a) => commands::mobius(a, &common),
        Command::Gaps(a) => commands::gaps(a, &common),
    };
    let (kind, code, message) = match result {
        Ok(()) => return ExitCode::SUCCESS,
        Err(Failure::Precondition(m)) => ("precondition", 2, m),
        Err(Failure::Ambiguous(m)) => ("ambiguous", 3, m),
        Err(Failure::Other(e)) => ("other", 1, format!("{e:#}")),
    };
    eprintln!("{}", serde_json::json!({"error": kind, "message": message}));
    ExitCode::from(code)
}
