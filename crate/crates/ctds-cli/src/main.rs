//! `ctds`: file-based front end for the analog SAT solver. Every
//! subcommand is a pure input→files transformation; runs that write files
//! also write a JSON manifest with the fully resolved configuration, seed,
//! and RNG algorithm so outputs are reproducible bit for bit.

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "ctds", version, about = "Analog SAT solving and transient-chaos analysis")]
pub struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integrator error tolerance.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Worker threads (0 = all available).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleKind {
    Ksat,
    Lop,
    Xorsat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Exp,
    Rate,
    Steppow,
    Eta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelMode {
    Solution,
    Cluster,
}

/// Plane flags shared by `basin` and `fsle`.
#[derive(Debug, Clone, clap::Args)]
pub struct PlaneArgs {
    /// First varied variable (0-based).
    #[arg(long, default_value_t = 0)]
    pub var_i: usize,
    /// Second varied variable (0-based).
    #[arg(long, default_value_t = 1)]
    pub var_j: usize,
    /// Window x0,x1,y0,y1 inside [-1,1]².
    #[arg(long, default_value = "-1,1,-1,1")]
    pub window: String,
    /// Grid WxH.
    #[arg(long, default_value = "128x128")]
    pub grid: String,
    /// Seed for the frozen background coordinates.
    #[arg(long, default_value_t = 0)]
    pub background_seed: u64,
}

/// Integration budget flags shared by trajectory-running subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct BudgetArgs {
    /// Analog time budget.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Accepted-step budget.
    #[arg(long)]
    pub n_step_max: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random instance and write it as DIMACS CNF (or xor format).
    Gen {
        #[arg(long, value_enum)]
        ensemble: EnsembleKind,
        /// Clause/check length for ksat and xorsat.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Number of variables.
        #[arg(long)]
        n: usize,
        /// Constraint density (α for ksat, l for lop, γ for xorsat).
        #[arg(long, visible_alias = "alpha", visible_alias = "l", visible_alias = "gamma")]
        density: f64,
    },
    /// Solve a DIMACS file; emits one SolveRecord as a JSON line.
    Solve {
        input: PathBuf,
        /// Parallel trajectory starts.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Generate and solve a seeded instance sweep; emits JSONL records.
    Batch {
        #[arg(long, value_enum)]
        ensemble: EnsembleKind,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, visible_alias = "alpha", visible_alias = "l", visible_alias = "gamma")]
        density: f64,
        /// Comma-separated system sizes, e.g. 20,30,40.
        #[arg(long)]
        n_list: String,
        #[arg(long)]
        instances: usize,
        /// Keep only DPLL-satisfiable instances (regenerating discards).
        #[arg(long)]
        filter_sat: bool,
        /// DPLL decision budget per oracle call.
        #[arg(long, default_value_t = 10_000_000)]
        oracle_budget: u64,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Fit decay/scaling laws to a JSONL record stream.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: FitMode,
        /// Survival window lower bound.
        #[arg(long, default_value_t = 0.02)]
        p_lo: f64,
        /// Survival window upper bound.
        #[arg(long, default_value_t = 0.5)]
        p_hi: f64,
    },
    /// Basin-of-attraction label and search-time maps over a 2-D slice.
    Basin {
        input: PathBuf,
        #[command(flatten)]
        plane: PlaneArgs,
        #[arg(long, value_enum, default_value_t = LabelMode::Solution)]
        label_by: LabelMode,
        /// Variable cap for exhaustive enumeration (cluster labels).
        #[arg(long, default_value_t = 26)]
        enumeration_cap: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Finite-size Lyapunov exponent map over a 2-D slice.
    Fsle {
        input: PathBuf,
        #[command(flatten)]
        plane: PlaneArgs,
        /// Initial perturbation size.
        #[arg(long, default_value_t = 1e-6)]
        eps0: f64,
        /// Amplification ratio defining the separation time.
        #[arg(long, default_value_t = 30.0)]
        ratio: f64,
        /// Perturbation directions per grid point.
        #[arg(long, default_value_t = 50)]
        directions: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Constraint core of a CNF (pure-literal removal) or xor file
    /// (leaf removal).
    Core { input: PathBuf },
    /// Integrate one trajectory and export time-series diagnostics as CSV.
    Traj {
        input: PathBuf,
        /// Trace decimation cap.
        #[arg(long, default_value_t = 100_000)]
        max_points: usize,
        /// Spin indices to record, comma-separated.
        #[arg(long, default_value = "0,1,2")]
        s_indices: String,
        /// Clause indices whose weights to record, comma-separated.
        #[arg(long, default_value = "0")]
        a_indices: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(path: &std::path::Path, err: impl std::fmt::Display) -> CliError {
        CliError::Runtime(format!("{}: {}", path.display(), err))
    }
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let mut globals = config::Globals::default();
    if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return 2;
            }
        };
        let applied = config::parse_config_file(&text)
            .and_then(|map| config::apply_config(&mut globals, &map));
        if let Err(e) = applied {
            eprintln!("error: {}: {e}", path.display());
            return 1;
        }
    }
    if let Some(seed) = cli.seed {
        globals.seed = seed;
    }
    if let Some(eps) = cli.eps {
        globals.eps = eps;
    }
    if let Some(threads) = cli.threads {
        globals.threads = threads;
    }
    if let Some(out) = &cli.out {
        globals.out = Some(out.clone());
    }
    if globals.threads > 0 {
        ctds_core::parallel::configure_threads(globals.threads);
    }

    match commands::dispatch(&cli.command, &globals) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn main() {
    std::process::exit(run());
}
