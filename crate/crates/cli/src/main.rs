mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

/// Critical front speeds of heterogeneous Fisher-KPP equations.
///
/// Settings come from a JSON config (all fields optional), then from
/// `FRONTSPEED_<BLOCK>__<FIELD>` environment variables, then from the
/// flags below. Every run writes `manifest.json`, which is itself a config.
#[derive(Debug, Parser)]
#[command(name = "frontspeed", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent rates and runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the randomised checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Cell solution at `analysis.lambda`: S, c and Harnack ratios.
    Eta,
    /// Least and upper means of c_lambda over the rate grid.
    SpeedCurve,
    /// Speed curve, then lambda_* and c_*.
    LambdaStar,
    /// Floquet growth rates k and kappa at `analysis.lambda`.
    Floquet,
    /// Eigenvalue curves over the rate grid, c_* = min k/lambda and c^*.
    Kappa,
    /// Front simulation of the nonlinear equation.
    Simulate,
    /// Closed-form speeds of the spatially homogeneous builtins.
    Oracle,
    /// The acceptance suite at reduced resolution.
    Verify {
        /// Use the full resolution of the acceptance criteria.
        #[arg(long)]
        full: bool,
    },
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eta => "eta",
            Command::SpeedCurve => "speed-curve",
            Command::LambdaStar => "lambda-star",
            Command::Floquet => "floquet",
            Command::Kappa => "kappa",
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
            Command::Verify { .. } => "verify",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(out) = cli.out {
        cfg.output.directory = out;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    commands::execute(cli.command, &cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
