//! Experiment driver: scenario files, seeded replications, the genie
//! oracle, regret, summaries and CSV output.
//!
//! [`run_experiment`] is pure computation; [`write_outputs`] lays the
//! results out on disk:
//!
//! ```text
//! <out>/summary.csv
//! <out>/oracle.csv
//! <out>/<policy>/intervals.csv
//! <out>/<policy>/regret.csv
//! <out>/plotdata/<policy>_learning.csv
//! <out>/plotdata/<policy>_{interval,modulation,power}_hist.csv
//! ```
//!
//! Every file starts with a `#` line carrying the configuration hash.

mod oracle;
mod output;
mod regret;
mod scenario;
pub mod stats;
mod summary;

use std::path::PathBuf;

use rayon::prelude::*;

use crate::netsim::{run_episode, EpisodeOutput, PolicySpec, SimError};

pub use oracle::{genie_oracle, slot_value, OracleReport};
pub use output::{
    read_interval_rows, read_summary_rows, write_oracle, write_outputs, IntervalRow, Metadata,
    INTERVAL_COLUMNS, LEARNING_WINDOW,
};
pub use regret::{episode_regret, half_slopes, regret_report, RegretReport};
pub use scenario::{
    parse_scenario, OracleParams, PolicyEntry, Scenario, ScenarioError, TopologySpec,
    GENERATED_SIZES,
};
pub use summary::{learning_curve, summarize, LearningPoint, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("configuration hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl ExperimentError {
    /// True for problems with the scenario rather than with running it.
    pub fn is_config_error(&self) -> bool {
        matches!(self, ExperimentError::Scenario(_))
    }
}

/// Episodes and derived curves of one policy.
#[derive(Clone, Debug)]
pub struct PolicyResult {
    pub label: String,
    pub policy: PolicySpec,
    pub episodes: Vec<EpisodeOutput>,
    pub regret: RegretReport,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub config_hash: String,
    pub oracle: OracleReport,
    pub policies: Vec<PolicyResult>,
    pub summary: Vec<SummaryRow>,
}

/// Genie oracle of a scenario.
pub fn scenario_oracle(scenario: &Scenario) -> Result<OracleReport, ExperimentError> {
    let base = scenario
        .sim_config(PolicySpec::bilevel())
        .map_err(|m| semantic(scenario, m))?;
    Ok(genie_oracle(
        &base,
        scenario.oracle.draws,
        scenario.seed,
        &scenario.config_hash(),
    )?)
}

fn semantic(scenario: &Scenario, message: String) -> ExperimentError {
    ScenarioError::Semantic {
        path: PathBuf::from(&scenario.name),
        message,
    }
    .into()
}

/// Runs every policy of `scenario` for `scenario.replications` seeds.
///
/// Replication `r` of every policy uses seed `scenario.seed + r`, so
/// policies are compared on common random numbers. Replications run in
/// parallel; results are gathered in replication order.
pub fn run_experiment(scenario: &Scenario) -> Result<ExperimentResult, ExperimentError> {
    scenario.validate().map_err(|m| semantic(scenario, m))?;
    let config_hash = scenario.config_hash();
    let oracle = scenario_oracle(scenario)?;
    let mut policies = Vec::new();
    let mut summary = Vec::new();
    for entry in &scenario.policy {
        let spec = Scenario::policy_spec(entry, oracle.best);
        let config = scenario
            .sim_config(spec.clone())
            .map_err(|m| semantic(scenario, m))?;
        let episodes = (0..u64::from(scenario.replications))
            .into_par_iter()
            .map(|r| run_episode(&config, scenario.seed.wrapping_add(r)))
            .collect::<Result<Vec<_>, _>>()?;
        let regret = regret_report(&oracle, &config_hash, &episodes)?;
        let label = spec.label();
        let per_rep: Vec<_> = episodes.iter().map(|e| e.intervals.clone()).collect();
        summary.extend(summarize(scenario, &label, &per_rep, Some(&regret)));
        policies.push(PolicyResult {
            label,
            policy: spec,
            episodes,
            regret,
        });
    }
    Ok(ExperimentResult {
        scenario: scenario.clone(),
        config_hash,
        oracle,
        policies,
        summary,
    })
}
