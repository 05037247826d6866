//! Benchmark CLI: run configured experiments, compare several configs,
//! and run the built-in invariant suites.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use lipadapt::harness::{run_experiment, verify, CheckOutcome, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "lipadapt", about = "Scale-adaptive online learning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its CSV trace and JSON summary.
    Run {
        /// Path to a JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the trace files.
        #[arg(long)]
        out: PathBuf,
        /// Assert module invariants and bound slack inline.
        #[arg(long)]
        verify: bool,
        /// Override the environment seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several configs and print a comparison table.
    Compare {
        /// Paths to JSON experiment configs.
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run a built-in invariant suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Suite {
    Squint,
    Metagrad,
    Projection,
    Restart,
}

fn print_outcomes(outcomes: &[CheckOutcome]) -> bool {
    let mut all_passed = true;
    for outcome in outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {} — {}", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    all_passed
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            verify,
            seed,
        } => {
            let config = ExperimentConfig::from_path(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            let options = RunOptions {
                verify,
                seed_override: seed,
            };
            let trace = run_experiment(&config, &options)?;
            let (csv_path, json_path) = trace.write_outputs(&out)?;
            let summary = &trace.summary;
            println!(
                "{}: {} rounds, regret {:.6} vs {}, bound {}, restarts {}, {:.1} ms",
                summary.name,
                summary.rounds,
                summary.final_regret,
                summary.comparator,
                summary
                    .final_bound
                    .map_or("-".to_string(), |b| format!("{b:.6}")),
                summary.restart_count,
                summary.wall_time_ms,
            );
            println!("wrote {} and {}", csv_path.display(), json_path.display());
        }
        Command::Compare { configs } => {
            println!(
                "{:<28} {:<20} {:>8} {:>14} {:>14} {:>12} {:>9}",
                "experiment", "algorithm", "rounds", "regret", "bound", "slack", "restarts"
            );
            for path in configs {
                let config = ExperimentConfig::from_path(&path)
                    .with_context(|| format!("loading config {}", path.display()))?;
                let trace = run_experiment(&config, &RunOptions::default())?;
                let s = &trace.summary;
                println!(
                    "{:<28} {:<20} {:>8} {:>14.6} {:>14} {:>12} {:>9}",
                    s.name,
                    s.algorithm,
                    s.rounds,
                    s.final_regret,
                    s.final_bound.map_or("-".into(), |b| format!("{b:.4}")),
                    s.final_slack.map_or("-".into(), |b| format!("{b:.4}")),
                    s.restart_count,
                );
            }
        }
        Command::Verify { suite } => {
            let outcomes = match suite {
                Suite::Squint => verify::squint_suite(),
                Suite::Metagrad => verify::metagrad_suite(),
                Suite::Projection => verify::projection_suite(),
                Suite::Restart => verify::restart_suite(),
            };
            if !print_outcomes(&outcomes) {
                bail!("verification suite failed");
            }
        }
    }
    Ok(())
}
