//! Per-slot regret against the genie.

use crate::netsim::EpisodeOutput;

use super::oracle::OracleReport;
use super::stats;
use super::ExperimentError;

/// Cumulative regret curves of a set of replications.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    /// One cumulative curve per replication, one point per slot.
    pub per_replication: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

/// Regret increment of one slot of one link: the genie's expected value in
/// the true SNR class minus the realized normalized throughput. A slot's
/// increment is averaged over the links that transmitted in it.
pub fn episode_regret(oracle: &OracleReport, episode: &EpisodeOutput) -> Vec<f64> {
    let n = episode.total_slots as usize;
    let mut sum = vec![0.0; n];
    let mut count = vec![0u32; n];
    let max_bits = episode.max_bits_per_slot as f64;
    for s in &episode.slots {
        let i = s.slot as usize;
        sum[i] += oracle.best_value_of(s.true_class) - s.delivered_bits as f64 / max_bits;
        count[i] += 1;
    }
    let mut acc = 0.0;
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| {
            if c > 0 {
                acc += s / f64::from(c);
            }
            acc
        })
        .collect()
}

/// Regret of every replication plus the cross-replication mean curve.
///
/// Fails when the oracle was computed for a different configuration.
pub fn regret_report(
    oracle: &OracleReport,
    config_hash: &str,
    episodes: &[EpisodeOutput],
) -> Result<RegretReport, ExperimentError> {
    if oracle.config_hash != config_hash {
        return Err(ExperimentError::HashMismatch {
            expected: config_hash.to_owned(),
            found: oracle.config_hash.clone(),
        });
    }
    let per_replication: Vec<Vec<f64>> =
        episodes.iter().map(|e| episode_regret(oracle, e)).collect();
    let len = per_replication.iter().map(Vec::len).min().unwrap_or(0);
    let column = |i: usize| per_replication.iter().map(|c| c[i]).collect::<Vec<_>>();
    let mean = (0..len).map(|i| stats::mean(&column(i))).collect();
    let stddev = (0..len).map(|i| stats::stddev(&column(i))).collect();
    Ok(RegretReport {
        per_replication,
        mean,
        stddev,
    })
}

/// Slopes of the first and second half of a cumulative curve.
pub fn half_slopes(curve: &[f64]) -> (f64, f64) {
    let mid = curve.len() / 2;
    (
        stats::ols_slope(&curve[..mid]),
        stats::ols_slope(&curve[mid..]),
    )
}
