//! Command-line front end: experiment orchestration, verification suites,
//! and CSV reporting.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 usage error.

mod commands;
mod config;
mod output;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use commands::{
    cmd_convergence, cmd_run, cmd_spectrum, cmd_sweep, cmd_verify, parse_mode, ConvergenceArgs,
    InvariantFailure, ProblemFlags, RunArgs, SpectrumArgs, SweepArgs, VerifyArgs,
};
use config::{parse_value_list, FileConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qpoisson",
    about = "Variational quantum solver for discretized Poisson equations",
    version
)]
struct Cli {
    /// Flat key=value config file; command-line flags win on conflict.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemArgs {
    /// Qubits per axis (grid size n = 2^m).
    #[arg(long)]
    m: Option<usize>,
    /// Spatial dimension (>= 2 forces Dirichlet boundaries).
    #[arg(long)]
    dim: Option<usize>,
    /// Left boundary coefficient c in [0, 1].
    #[arg(long)]
    c: Option<f64>,
    /// Right boundary coefficient d in [0, 1].
    #[arg(long)]
    d: Option<f64>,
}

impl ProblemArgs {
    fn resolve(&self, cfg: &FileConfig) -> Result<ProblemFlags> {
        ProblemFlags::resolve(cfg, self.m, self.dim, self.c, self.d)
    }
}

#[derive(Args)]
struct OptimArgs {
    /// Ansatz depth p.
    #[arg(long)]
    depth: Option<usize>,
    /// Random restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Maximum gradient-descent iterations per restart.
    #[arg(long)]
    iters: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Loss mode: dense, exact-ht, or shots:M.
    #[arg(long)]
    mode: Option<String>,
    /// Fixed-step descent instead of backtracking line search.
    #[arg(long)]
    fixed_step: bool,
    /// Output CSV path (default $QPOISSON_OUTPUT_DIR or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OptimArgs {
    fn resolve(&self, cfg: &FileConfig, problem: ProblemFlags) -> Result<RunArgs> {
        let seed = cfg.merge(self.seed, "seed", 0)?;
        let mode_text = cfg.merge(self.mode.clone(), "mode", "exact-ht".to_string())?;
        Ok(RunArgs {
            flags: problem,
            depth: cfg.merge(self.depth, "depth", 1)?,
            restarts: cfg.merge(self.restarts, "restarts", 10)?,
            iterations: cfg.merge(self.iters, "iters", 500)?,
            learning_rate: cfg.merge(self.lr, "lr", 0.1)?,
            seed,
            mode: parse_mode(&mode_text, seed)?,
            fixed_step: self.fixed_step || cfg.get("fixed_step") == Some("true"),
            out: cfg.merge_opt(self.out.clone(), "out")?,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check term properties, decomposition reassembly, and circuit/direct
    /// equivalence; exits 1 on any invariant failure.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Write the synthesized term circuits as a plain-text gate list.
        #[arg(long)]
        export_gates: Option<PathBuf>,
        /// Corrupt one term sign to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Optimize the ansatz for one problem and write the trajectories.
    Run {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        optim: OptimArgs,
    },
    /// Optimize over ranges of m and depth and tabulate the best results.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        optim: OptimArgs,
        /// m values: single, comma list, or inclusive range a..b.
        #[arg(long = "m-range")]
        m_range: Option<String>,
        /// depth values: single, comma list, or inclusive range a..b.
        #[arg(long = "depth-range")]
        depth_range: Option<String>,
        /// Seed each depth from the previous depth's best parameters
        /// (zero-padded), in addition to the random restarts.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        warm_start: bool,
    },
    /// Eigenvalues of the target Hamiltonian and the lambda_max/lambda_1 ratio.
    Spectrum {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discretization error of the manufactured sin(pi x) solution across levels.
    Convergence {
        /// Levels m: single, comma list, or inclusive range a..b.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Verify {
            problem,
            export_gates,
            inject_fault,
        } => cmd_verify(VerifyArgs {
            flags: problem.resolve(&cfg)?,
            export_gates,
            inject_fault,
        }),
        Command::Run { problem, optim } => {
            let flags = problem.resolve(&cfg)?;
            cmd_run(optim.resolve(&cfg, flags)?)
        }
        Command::Sweep {
            problem,
            optim,
            m_range,
            depth_range,
            warm_start,
        } => {
            let flags = problem.resolve(&cfg)?;
            let run = optim.resolve(&cfg, flags)?;
            let m_values = match cfg.merge_opt(m_range, "m-range")? {
                Some(text) => parse_value_list(&text)?,
                None => vec![run.flags.m],
            };
            let depth_values = match cfg.merge_opt(depth_range, "depth-range")? {
                Some(text) => parse_value_list(&text)?,
                None => vec![run.depth],
            };
            cmd_sweep(SweepArgs {
                run,
                m_values,
                depth_values,
                warm_start,
            })
        }
        Command::Spectrum { problem, out } => cmd_spectrum(SpectrumArgs {
            flags: problem.resolve(&cfg)?,
            out: cfg.merge_opt(out, "out")?,
        }),
        Command::Convergence { levels, out } => {
            let levels_text = cfg.merge(levels, "levels", "3..7".to_string())?;
            cmd_convergence(ConvergenceArgs {
                levels: parse_value_list(&levels_text)?,
                out: cfg.merge_opt(out, "out")?,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<InvariantFailure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
