//! `paralab`: batch front end for the paraproduct laboratory.
//!
//! Exit codes: 0 pass, 1 negative decision or failed property, 2 usage or
//! input error, 3 undecided within budget.

mod cmd;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "paralab", version, about = "Numerical laboratory for exotic bilinear paraproducts")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct GlobalArgs {
    /// JSON file with the command's parameters; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RNG seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Decide (d,b)-lacunarity of a finite set of dyadic rationals.
    Lacunary(cmd::lacunary::LacunaryArgs),
    /// Generate admissible sequences and check the interval lemmas exactly.
    VerifyLemmas(cmd::lemmas::LemmaArgs),
    /// Estimate trilinear Hölder ratios over a symbol family.
    Norm(cmd::norm::NormArgs),
    /// Rubio de Francia square-function ratios across grid sizes.
    Sqfn(cmd::harmonic::SqfnArgs),
    /// Lépingle variation ratios across grid sizes.
    Lepingle(cmd::harmonic::LepingleArgs),
    /// Generate, convert and inspect signal files.
    #[command(subcommand)]
    SignalIo(cmd::signal_io::SignalIoCommand),
}

/// Successful outcomes; errors map to exit code 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Negative,
    Undecided,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Negative => 1,
            Status::Undecided => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let g = &cli.global;
    let result = match cli.command {
        Command::Lacunary(a) => cmd::lacunary::run(g, a),
        Command::VerifyLemmas(a) => cmd::lemmas::run(g, a),
        Command::Norm(a) => cmd::norm::run(g, a),
        Command::Sqfn(a) => cmd::harmonic::run_sqfn(g, a),
        Command::Lepingle(a) => cmd::harmonic::run_lepingle(g, a),
        Command::SignalIo(c) => cmd::signal_io::run(g, c),
    };
    match result {
        Ok(s) => ExitCode::from(s.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
