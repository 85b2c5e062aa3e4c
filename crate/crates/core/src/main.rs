use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wcreg::runner::{
    cmd_counterexample, cmd_diagnose, cmd_phantom, cmd_regpath, cmd_solve, cmd_train_toy, ExperimentConfig,
};
use wcreg::Error;

#[derive(Parser)]
#[command(name = "wcreg", version, about = "Weakly convex regularisation experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Experiment configuration (TOML). Defaults apply without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run even when the step sizes violate the convergence constraints.
    #[arg(long, global = true)]
    override_constraints: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Verb {
    /// Solve one reconstruction problem and certify the run.
    Solve,
    /// Follow a regularisation path as the noise level decreases.
    Regpath,
    /// Train a learned regulariser on the spiral toy data.
    TrainToy,
    /// Critical-point scans for the growth counterexample and the radius bounds.
    Counterexample,
    /// Recompute certificates from a solve output directory (`[diagnose] trace`).
    Diagnose,
    /// Write a synthetic phantom image.
    Phantom,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::TrainingDiverged { .. } | Error::InnerSolve { .. } => 3,
        Error::Certificate(_) => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> wcreg::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.override_constraints && cli.verb != Verb::Solve {
        return Err(Error::config("--override-constraints applies to solve only"));
    }
    std::fs::create_dir_all(&cli.out)?;
    match cli.verb {
        Verb::Solve => cmd_solve(&cfg, &cli.out, cli.override_constraints),
        Verb::Regpath => cmd_regpath(&cfg, &cli.out),
        Verb::TrainToy => cmd_train_toy(&cfg, &cli.out),
        Verb::Counterexample => cmd_counterexample(&cfg, &cli.out),
        Verb::Diagnose => {
            let trace = cfg
                .diagnose
                .trace
                .as_ref()
                .ok_or_else(|| Error::config("diagnose needs [diagnose] trace = \"DIR\""))?;
            cmd_diagnose(trace, &cli.out)
        }
        Verb::Phantom => cmd_phantom(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
