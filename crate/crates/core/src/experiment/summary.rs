use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bandit::{Action, Modulation, PowerLevel};
use crate::netsim::IntervalRecord;

use super::regret::RegretReport;
use super::scenario::Scenario;
use super::stats;

/// One row of `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub policy: String,
    pub nodes: usize,
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub n: usize,
}

/// Summary metrics of one policy, one value per replication, aggregated
/// into mean and sample standard deviation.
///
/// Everything except `regret_final` is a function of the interval records
/// alone, so it can be recomputed from `intervals.csv`.
pub fn summarize(
    scenario: &Scenario,
    label: &str,
    per_rep: &[Vec<IntervalRecord>],
    regret: Option<&RegretReport>,
) -> Vec<SummaryRow> {
    let max_bits = scenario.radio.max_bits_per_slot(&scenario.channel) as f64;
    let mut menu: Vec<u32> = scenario.controller.intervals_min.clone();
    menu.extend(per_rep.iter().flatten().map(|r| r.q_k_min));
    menu.sort_unstable();
    menu.dedup();

    let mut metrics: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut push = |name: String, v: f64| metrics.entry(name).or_default().push(v);
    for recs in per_rep {
        let mut bits = 0u64;
        let mut decisions = 0u64;
        let (mut e_data, mut e_fb) = (0.0, 0.0);
        let (mut sent, mut ber, mut col, mut hd) = (0u64, 0u64, 0u64, 0u64);
        let mut actions = [0u64; Action::COUNT];
        let (mut aoi_mean, mut aoi_peak) = (0.0, 0.0);
        let mut intervals: BTreeMap<u32, u64> = BTreeMap::new();
        for r in recs {
            bits += r.r_k_bits;
            decisions += r.decisions();
            e_data += r.energy_data_j;
            e_fb += r.energy_fb_j;
            sent += r.frames.sent;
            ber += r.frames.lost_ber;
            col += r.frames.lost_collision;
            hd += r.frames.lost_halfduplex;
            for (a, c) in actions.iter_mut().zip(&r.action_counts) {
                *a += c;
            }
            aoi_mean += r.aoi_mean_slots;
            aoi_peak += r.aoi_peak_slots as f64;
            *intervals.entry(r.q_k_min).or_default() += 1;
        }
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let energy = e_data + e_fb;
        push("throughput_bps".into(), bits as f64 / scenario.duration_s);
        push(
            "throughput_norm".into(),
            ratio(bits as f64, max_bits * decisions as f64),
        );
        push("energy_total_j".into(), energy);
        push("energy_data_j".into(), e_data);
        push("energy_fb_j".into(), e_fb);
        push("bits_per_joule".into(), ratio(bits as f64, energy));
        push("loss_ber_rate".into(), ratio(ber as f64, sent as f64));
        push("loss_collision_rate".into(), ratio(col as f64, sent as f64));
        push("loss_halfduplex_rate".into(), ratio(hd as f64, sent as f64));
        push("aoi_mean_slots".into(), ratio(aoi_mean, recs.len() as f64));
        push("aoi_peak_slots".into(), ratio(aoi_peak, recs.len() as f64));
        for m in Modulation::ALL {
            let c: u64 = Action::all()
                .iter()
                .filter(|a| a.modulation == m)
                .map(|a| actions[a.index()])
                .sum();
            push(
                format!("freq_mod_{}", m.name()),
                ratio(c as f64, decisions as f64),
            );
        }
        for p in PowerLevel::ALL {
            let c: u64 = Action::all()
                .iter()
                .filter(|a| a.power == p)
                .map(|a| actions[a.index()])
                .sum();
            push(
                format!("freq_power_{}", p.name()),
                ratio(c as f64, decisions as f64),
            );
        }
        for q in &menu {
            let c = intervals.get(q).copied().unwrap_or(0);
            push(
                format!("freq_interval_{q}min"),
                ratio(c as f64, recs.len() as f64),
            );
        }
    }
    if let Some(regret) = regret {
        for curve in &regret.per_replication {
            push("regret_final".into(), curve.last().copied().unwrap_or(0.0));
        }
    }
    metrics
        .into_iter()
        .map(|(metric, values)| SummaryRow {
            scenario: scenario.name.clone(),
            policy: label.to_owned(),
            nodes: scenario.sensor_count(),
            metric,
            mean: stats::mean(&values),
            stddev: stats::stddev(&values),
            n: values.len(),
        })
        .collect()
}

/// One point of a learning curve; an episode is one feedback round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningPoint {
    pub k: u64,
    /// Rolling mean of `r_k_norm` over the last `window` rounds.
    pub throughput_norm: f64,
    /// Rolling mean of data plus feedback energy per round.
    pub energy_j: f64,
    /// Number of (replication, link) streams averaged.
    pub streams: usize,
}

/// Rolling-window learning curve over closed rounds, averaged over every
/// (replication, link) stream. The curve stops at the shortest stream so
/// every point averages the same streams.
pub fn learning_curve(per_rep: &[Vec<IntervalRecord>], window: usize) -> Vec<LearningPoint> {
    let mut streams: Vec<Vec<&IntervalRecord>> = Vec::new();
    for recs in per_rep {
        let mut by_link: BTreeMap<(usize, usize), Vec<&IntervalRecord>> = BTreeMap::new();
        for r in recs.iter().filter(|r| r.closed) {
            by_link.entry((r.link_src, r.link_dst)).or_default().push(r);
        }
        for (_, mut s) in by_link {
            s.sort_by_key(|r| r.k);
            streams.push(s);
        }
    }
    let len = streams.iter().map(Vec::len).min().unwrap_or(0);
    let window = window.max(1);
    (0..len)
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let (mut thr, mut en) = (0.0, 0.0);
            for s in &streams {
                let w = &s[lo..=i];
                thr += w.iter().map(|r| r.r_k_norm).sum::<f64>() / w.len() as f64;
                en += w
                    .iter()
                    .map(|r| r.energy_data_j + r.energy_fb_j)
                    .sum::<f64>()
                    / w.len() as f64;
            }
            let n = streams.len() as f64;
            LearningPoint {
                k: i as u64 + 1,
                throughput_norm: thr / n,
                energy_j: en / n,
                streams: streams.len(),
            }
        })
        .collect()
}
