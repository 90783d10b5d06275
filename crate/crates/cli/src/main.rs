//! `uwa-sim`: run scenario files through the simulator.
//!
//! Exit codes: 0 success, 2 bad command line, 3 bad scenario, 4 failure
//! while running or writing results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uwa_adapt::experiment::{
    parse_scenario, run_experiment, scenario_oracle, write_oracle, write_outputs, ExperimentError,
    Metadata, Scenario,
};

const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "uwa-sim",
    version,
    about = "Bilevel bandit link control on a simulated underwater acoustic network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy of a scenario and write CSV results.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Base seed; replication r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<u32>,
    },
    /// Compute the genie oracle table of a scenario.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e
                .downcast_ref::<ExperimentError>()
                .is_some_and(ExperimentError::is_config_error);
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}

fn load(path: &Path) -> Result<Scenario, ExperimentError> {
    Ok(parse_scenario(path)?)
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            let topo = s.build_topology().map_err(anyhow::Error::msg)?;
            println!(
                "{}: ok ({} sensor nodes, {} links, {} policies, {} replications, hash {})",
                s.name,
                s.sensor_count(),
                topo.links().len(),
                s.policy.len(),
                s.replications,
                s.config_hash()
            );
        }
        Command::Oracle { scenario, out } => {
            let s = load(&scenario)?;
            let oracle = scenario_oracle(&s)?;
            std::fs::create_dir_all(&out)?;
            let meta = Metadata {
                config_hash: s.config_hash(),
                seed: s.seed,
                version: env!("CARGO_PKG_VERSION").to_owned(),
                scenario: s.name.replace(char::is_whitespace, "_"),
            };
            write_oracle(&out.join("oracle.csv"), &meta, &oracle)?;
            for (class, (a, v)) in ["low", "medium", "high"]
                .iter()
                .zip(oracle.best.iter().zip(&oracle.best_value))
            {
                println!("{class:>6}: {a} ({v:.4})");
            }
            println!("reference throughput: {:.4}", oracle.reference_throughput());
        }
        Command::Run {
            scenario,
            out,
            seed,
            replications,
        } => {
            let mut s = load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(r) = replications {
                s.replications = r;
            }
            let result = run_experiment(&s)?;
            write_outputs(&result, &out)?;
            for p in &result.policies {
                let get = |m: &str| {
                    result
                        .summary
                        .iter()
                        .find(|r| r.policy == p.label && r.metric == m)
                        .map_or(f64::NAN, |r| r.mean)
                };
                println!(
                    "{:<28} throughput {:>9.1} bit/s  energy {:>9.1} J  collisions {:>5.1}%",
                    p.label,
                    get("throughput_bps"),
                    get("energy_total_j"),
                    100.0 * get("loss_collision_rate")
                );
            }
            println!("results in {}", out.display());
        }
    }
    Ok(())
}
