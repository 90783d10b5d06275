use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bandit::Action;
use crate::channel::{ChannelParams, PowerMap};
use crate::netsim::{ControllerParams, PolicySpec, RadioParams, SimConfig, Topology};

/// Node counts of the generated reference layouts.
pub const GENERATED_SIZES: [usize; 4] = [4, 6, 8, 10];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error in {path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("invalid scenario {path}: {message}")]
    Semantic { path: PathBuf, message: String },
}

/// Network layout: either a generated reference layout or an explicit tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    /// Sensor nodes of a generated layout (the sink is extra).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Explicit coordinates in meters, sink first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 3]>>,
    /// Parent of each sensor node, i.e. of positions 1.. in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<Vec<usize>>,
    #[serde(default = "default_max_link")]
    pub max_link_m: f64,
}

fn default_max_link() -> f64 {
    357.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicyEntry {
    Bilevel,
    Fixed {
        action: Action,
        interval_min: u32,
    },
    Random,
    /// Plays the genie's best action for the reported SNR class.
    Oracle {
        interval_min: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Monte-Carlo samples per SNR class.
    pub draws: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { draws: 100_000 }
    }
}

/// A parsed scenario file with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub seed: u64,
    pub topology: TopologySpec,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub power: PowerMap,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default = "default_policies")]
    pub policy: Vec<PolicyEntry>,
    #[serde(default)]
    pub oracle: OracleParams,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_duration() -> f64 {
    6000.0
}

fn default_replications() -> u32 {
    20
}

fn default_policies() -> Vec<PolicyEntry> {
    vec![PolicyEntry::Bilevel]
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    Scenario::from_toml(&text, path)
}

impl Scenario {
    /// Parses scenario text; `origin` only labels error messages.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ScenarioError> {
        let table: toml::Table =
            text.parse()
                .map_err(|e: toml::de::Error| ScenarioError::Syntax {
                    path: origin.to_owned(),
                    message: e.message().to_owned(),
                })?;
        let scenario: Scenario =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| ScenarioError::Schema {
                    path: origin.to_owned(),
                    message: e.message().to_owned(),
                })?;
        scenario
            .validate()
            .map_err(|message| ScenarioError::Semantic {
                path: origin.to_owned(),
                message,
            })?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }

    /// Hex SHA-256 of the resolved scenario. Any change to any parameter,
    /// seed or replication count changes it.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Number of sensor nodes.
    pub fn sensor_count(&self) -> usize {
        match (&self.topology.nodes, &self.topology.positions) {
            (Some(n), _) => *n,
            (None, Some(p)) => p.len().saturating_sub(1),
            (None, None) => 0,
        }
    }

    pub fn build_topology(&self) -> Result<Topology, String> {
        let t = &self.topology;
        match (t.nodes, &t.positions, &t.parents) {
            (Some(n), None, None) => {
                if !GENERATED_SIZES.contains(&n) {
                    return Err(format!(
                        "topology.nodes must be one of {GENERATED_SIZES:?}, got {n}; use positions and parents for other layouts"
                    ));
                }
                Topology::generated(n, t.max_link_m).map_err(|e| e.to_string())
            }
            (None, Some(pos), Some(parents)) => {
                let mut parent = vec![None];
                parent.extend(parents.iter().map(|&p| Some(p)));
                Topology::new(pos.clone(), parent, t.max_link_m).map_err(|e| e.to_string())
            }
            (None, Some(_), None) => Err("topology.positions needs topology.parents".into()),
            (None, None, Some(_)) => Err("topology.parents needs topology.positions".into()),
            (None, None, None) => {
                Err("topology needs either nodes or positions and parents".into())
            }
            (Some(_), _, _) => {
                Err("topology.nodes cannot be combined with explicit positions or parents".into())
            }
        }
    }

    /// Simulator configuration for one policy. Oracle policies need the
    /// genie's best-action map.
    pub fn sim_config(&self, policy: PolicySpec) -> Result<SimConfig, String> {
        Ok(SimConfig {
            topology: self.build_topology()?,
            channel: self.channel.clone(),
            power: self.power.clone(),
            radio: self.radio.clone(),
            controller: self.controller.clone(),
            duration_s: self.duration_s,
            policy,
        })
    }

    /// Policy with a placeholder map for oracle entries, for validation.
    pub fn policy_spec(entry: &PolicyEntry, best: [Action; 3]) -> PolicySpec {
        match entry {
            PolicyEntry::Bilevel => PolicySpec::bilevel(),
            PolicyEntry::Fixed {
                action,
                interval_min,
            } => PolicySpec::fixed(*action, *interval_min),
            PolicyEntry::Random => PolicySpec::random(),
            PolicyEntry::Oracle { interval_min } => PolicySpec::oracle(best, *interval_min),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.replications == 0 {
            return Err("replications must be at least 1".into());
        }
        if self.oracle.draws == 0 {
            return Err("oracle.draws must be at least 1".into());
        }
        if self.policy.is_empty() {
            return Err("at least one [[policy]] is required".into());
        }
        let first = self
            .controller
            .actions
            .first()
            .copied()
            .unwrap_or(Action::all()[0]);
        let mut labels = Vec::new();
        for entry in &self.policy {
            let spec = Self::policy_spec(entry, [first; 3]);
            if let PolicyEntry::Fixed { action, .. } = entry {
                if !self.controller.actions.contains(action) {
                    return Err(format!(
                        "fixed policy action {action} is not in controller.actions"
                    ));
                }
            }
            let label = spec.label();
            if labels.contains(&label) {
                return Err(format!("policy {label} is listed twice"));
            }
            labels.push(label);
            self.sim_config(spec)?
                .validate()
                .map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}
