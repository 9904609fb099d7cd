use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};

use mcf_obstacle::checker::SamplingSpec;
use mcf_obstacle::config::ScenarioConfig;
use mcf_obstacle::repro::run_repro;
use mcf_obstacle::run::{run_evolve, run_verify, RunOptions, RunReport};

/// Obstacle-problem solver and verification harness for forced mean curvature flow.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config's [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Keep every k-th snapshot file.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    snapshots: u64,

    /// Print only the final verdict.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and run its enabled checks.
    Evolve { config: PathBuf },
    /// Verify the candidate of a scenario by residual sampling.
    Verify { config: PathBuf },
    /// Evolve and compare against the predicted large-time limit.
    Converge { config: PathBuf },
    /// Run a catalogued suite.
    Repro { suite: String },
}

fn load(path: &PathBuf) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse::<ScenarioConfig>().with_context(|| format!("in {}", path.display()))
}

fn run(cli: &Cli) -> anyhow::Result<Vec<RunReport>> {
    let opts = RunOptions { out: cli.out.clone(), snapshot_every: cli.snapshots as usize, converge: false };
    Ok(match &cli.command {
        Command::Evolve { config } => vec![run_evolve(&load(config)?, &opts)?],
        Command::Converge { config } => vec![run_evolve(&load(config)?, &RunOptions { converge: true, ..opts })?],
        Command::Verify { config } => vec![run_verify(&load(config)?, &SamplingSpec::default(), &opts)?],
        Command::Repro { suite } => run_repro(suite, cli.out.clone(), cli.snapshots as usize)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(reports) => {
            let ok = reports.iter().all(RunReport::passed);
            for r in &reports {
                if cli.quiet {
                    println!("{} {}", r.scenario, if r.passed() { "PASS" } else { "FAIL" });
                } else {
                    print!("{}", r.render());
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
