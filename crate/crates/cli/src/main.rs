use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod io;
mod tables;

use io::Failure;

/// Assortment optimization with market-share balancing constraints.
#[derive(Parser, Debug)]
#[command(name = "fair-assort", version, propagate_version = true)]
struct Cli {
    /// Worker threads for parallel work; defaults to one per core.
    #[arg(long, global = true, env = "FAIR_ASSORT_THREADS")]
    threads: Option<usize>,
    /// Suppress warnings and progress on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Emit JSON where a command would otherwise print CSV.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal randomized assortment for a static instance.
    SolveStatic(SolveStatic),
    /// Static problem restricted to a family of allowed assortments.
    SolveConstrained(SolveConstrained),
    /// Fluid relaxation of a dynamic instance.
    UpperBound(UpperBound),
    /// Targets of a dynamic policy.
    BuildPolicy(BuildPolicy),
    /// Monte Carlo evaluation of a policy.
    Simulate(Simulate),
    /// Random dynamic instance.
    GenInstance(GenInstance),
    /// Policy comparison over a parameter grid.
    Experiment(Experiment),
    /// Value of randomization on the worst-case family.
    Gap(Gap),
}

#[derive(Args, Debug)]
pub struct SolveStatic {
    /// Instance JSON (`-` for stdin).
    pub instance: PathBuf,
    /// Best single assortment instead of a distribution.
    #[arg(long, conflicts_with = "constraint")]
    pub deterministic: bool,
    /// Constraint family as JSON, or `@file`.
    #[arg(long)]
    pub constraint: Option<String>,
    /// Use the brute-force oracle for constrained solves.
    #[arg(long)]
    pub brute: bool,
    /// Include the nested assortment distribution in the output.
    #[arg(long)]
    pub emit_distribution: bool,
}

#[derive(Args, Debug)]
pub struct SolveConstrained {
    pub instance: PathBuf,
    /// Constraint family as JSON, or `@file`.
    #[arg(long)]
    pub constraint: String,
    #[arg(long)]
    pub brute: bool,
    #[arg(long)]
    pub emit_distribution: bool,
}

#[derive(Args, Debug)]
pub struct UpperBound {
    /// Dynamic instance JSON (`-` for stdin).
    pub instance: PathBuf,
    /// Accuracy of the approximation scheme.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Enumerate supports instead.
    #[arg(long, conflicts_with = "alpha1")]
    pub exact: bool,
    /// Closed-form solver for alpha = 1.
    #[arg(long)]
    pub alpha1: bool,
    /// Product limit for --exact.
    #[arg(long, default_value_t = fair_assort::upper_bound::EXACT_N_MAX)]
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Fixed targets for alpha < 1, sales capping for alpha = 1.
    Policy,
    /// Resolve every ⌈√T⌉ periods and after each stock-out.
    Heuristic1,
    /// Resolve after each stock-out.
    Heuristic2,
}

#[derive(Args, Debug)]
pub struct BuildPolicy {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Policy)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Direct,
    Assortment,
}

#[derive(Args, Debug)]
pub struct Simulate {
    pub instance: PathBuf,
    /// Policy JSON from `build-policy`; built with --kind when absent.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Kind::Policy, conflicts_with = "policy")]
    pub kind: Kind,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicates: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Direct)]
    pub mode: Mode,
    /// Keep per-replicate sales in the report.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Args, Debug)]
pub struct GenInstance {
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long = "T")]
    pub horizon: u64,
    #[arg(long)]
    pub p0: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Experiment {
    /// Grid config JSON; the desk-scale grid when absent.
    pub config: Option<PathBuf>,
    /// Forty products, T up to 16000, 400 replicates.
    #[arg(long, conflicts_with = "config")]
    pub paper_scale: bool,
    /// Write table1.csv, table2.csv and results.json here.
    #[arg(long, short)]
    pub out_dir: Option<PathBuf>,
    /// Table printed on stdout: 1 for revenue, 2 for balance.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub table: u8,
}

#[derive(Args, Debug)]
pub struct Gap {
    #[arg(long)]
    pub n: usize,
    /// One or more balancing levels.
    #[arg(long, num_args = 1.., required = true)]
    pub alpha: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let ctx = commands::Context { quiet: cli.quiet, json: cli.json };
    let result = match &cli.command {
        Command::SolveStatic(a) => commands::solve_static(&ctx, a),
        Command::SolveConstrained(a) => commands::solve_constrained(&ctx, a),
        Command::UpperBound(a) => commands::upper_bound(&ctx, a),
        Command::BuildPolicy(a) => commands::build_policy(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::GenInstance(a) => commands::gen_instance(&ctx, a),
        Command::Experiment(a) => commands::experiment(&ctx, a),
        Command::Gap(a) => commands::gap(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
