//! `fedcoal`: scenario generation, gain tables, stable-set searches,
//! best-reply dynamics, exhaustive oracles, and merged reports.
//!
//! Exit codes: 0 success, 1 infeasible-at-cap or runtime failure, 2 usage,
//! 3 capacity cap exceeded. All randomness flows from explicit seeds; the
//! only environment variable honored is `FEDCOAL_THREADS`.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedcoal_core::clustering::Direction;
use fedcoal_core::dynamics::Schedule;
use fedcoal_core::gains::GainFnSpec;
use fedcoal_core::learning::{EvaluatorKind, GenSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Capacity(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Infeasible(_) | CliError::Failure(_) => 1,
        }
    }
}

impl From<fedcoal_core::Error> for CliError {
    fn from(e: fedcoal_core::Error) -> Self {
        match e {
            fedcoal_core::Error::Capacity { .. } => CliError::Capacity(e.to_string()),
            fedcoal_core::Error::Contract(_) | fedcoal_core::Error::Domain(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fedcoal",
    version,
    about = "Coalition formation for federated-learning incentives",
    long_about = "Deterministic pipeline: generate a scenario, turn expected \
                  losses into coalition gains, construct Nash-stable gain \
                  allocations (general search and symmetric LP), run \
                  best-reply dynamics, enumerate stable partitions, and merge \
                  everything into a report."
)]
struct Cli {
    /// Log progress details to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario (prints the file's content hash).
    Gen(GenArgs),
    /// Evaluate gains, prices, and marginal gains for every coalition.
    Gains {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve the symmetric mutual-gain LP and certify optimality.
    Lp {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also dump the constraint system in MPS form.
        #[arg(long)]
        mps: Option<PathBuf>,
    },
    /// Search for an allocation making some partition Nash-stable
    /// (exhaustive over partitions, one LP each; caps at 8 agents).
    StableSet {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run best-reply dynamics over the LP mutual gains (JSONL trace).
    Dynamics {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ScheduleArg::RoundRobin)]
        schedule: ScheduleArg,
        /// Seed for the random schedule.
        #[arg(long, default_value_t = 0)]
        schedule_seed: u64,
        #[arg(long, value_enum, default_value_t = StartArg::Singletons)]
        start: StartArg,
        /// Seed for the random start tuple.
        #[arg(long, default_value_t = 0)]
        start_seed: u64,
        /// Move budget; defaults to 10·n³.
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Enumerate every Nash-stable partition of an allocation (caps at 10
    /// agents). Defaults to the symmetric-LP allocation; --phi reads a JSON
    /// file with fields {n, phi} such as the stable-set output.
    Oracle {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// Extremal feasible clustering from the aggregator's side.
    Optimal {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
        direction: DirectionArg,
    },
    /// Merge stage outputs from a directory into one summary JSON plus a
    /// potential-vs-step CSV. Expects the conventional file names.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// CSV path; defaults to <dir>/potential.csv.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Number of agents (1..=12 for downstream gain tables).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=20))]
    n: u64,
    /// Model dimension M.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=64))]
    dim: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = EvaluatorArg::Quadratic)]
    evaluator: EvaluatorArg,
    /// Local-model spread (quadratic) or label noise (regression).
    #[arg(long, default_value_t = 2.5)]
    noise: f64,
    /// Loss floor of the quadratic evaluator.
    #[arg(long, default_value_t = 0.02)]
    noise_floor: f64,
    /// Aggregator mixing weight in [0,1].
    #[arg(long, default_value_t = 0.5)]
    w: f64,
    #[arg(long, value_enum, default_value_t = GainArg::Linear)]
    gain: GainArg,
    /// Gain scale alpha.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Communication cost per agent.
    #[arg(long, default_value_t = 0.01)]
    cost: f64,
    /// Loss charged when no upload is received.
    #[arg(long, default_value_t = 2.0)]
    fallback_loss: f64,
    #[arg(long, default_value_t = 1)]
    m_min: u64,
    #[arg(long, default_value_t = 8)]
    m_max: u64,
    #[arg(long, default_value_t = 0.5)]
    p_min: f64,
    #[arg(long, default_value_t = 0.95)]
    p_max: f64,
    /// Held-out evaluation samples (regression).
    #[arg(long, default_value_t = 256)]
    heldout: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvaluatorArg {
    Quadratic,
    Regression,
}

#[derive(Clone, Copy, ValueEnum)]
enum GainArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    RoundRobin,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    Singletons,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Min,
    Max,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(args) => {
            let spec = GenSpec {
                evaluator: match args.evaluator {
                    EvaluatorArg::Quadratic => EvaluatorKind::Quadratic,
                    EvaluatorArg::Regression => EvaluatorKind::Regression,
                },
                data_size_range: (args.m_min, args.m_max),
                reliability_range: (args.p_min, args.p_max),
                noise: args.noise,
                noise_floor: args.noise_floor,
                mae_weight: args.w,
                gain_fn: match args.gain {
                    GainArg::Linear => GainFnSpec::Linear { alpha: args.alpha },
                    GainArg::Log => GainFnSpec::Log { alpha: args.alpha },
                },
                cost_per_agent: args.cost,
                fallback_loss: args.fallback_loss,
                heldout_size: args.heldout,
            };
            commands::cmd_gen(args.n as usize, args.dim as usize, args.seed, &spec, &args.out)
        }
        Command::Gains { input, out } => commands::cmd_gains(&input, &out),
        Command::Lp { input, out, mps } => commands::cmd_lp(&input, &out, mps.as_deref()),
        Command::StableSet { input, out } => commands::cmd_stable_set(&input, &out),
        Command::Dynamics {
            input,
            out,
            schedule,
            schedule_seed,
            start,
            start_seed,
            max_steps,
        } => {
            let schedule = match schedule {
                ScheduleArg::RoundRobin => Schedule::RoundRobin,
                ScheduleArg::Random => Schedule::Random {
                    seed: schedule_seed,
                },
            };
            let start_seed = match start {
                StartArg::Singletons => None,
                StartArg::Random => Some(start_seed),
            };
            commands::cmd_dynamics(&input, &out, schedule, start_seed, max_steps)
        }
        Command::Oracle { input, out, phi } => commands::cmd_oracle(&input, &out, phi.as_deref()),
        Command::Optimal {
            input,
            out,
            direction,
        } => {
            let direction = match direction {
                DirectionArg::Min => Direction::Min,
                DirectionArg::Max => Direction::Max,
            };
            commands::cmd_optimal(&input, &out, direction)
        }
        Command::Report { dir, out, csv } => commands::cmd_report(&dir, &out, csv.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_default_env()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .init();
    if let Ok(threads) = std::env::var("FEDCOAL_THREADS") {
        match threads.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: FEDCOAL_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
