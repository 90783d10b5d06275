//! Genie reference: the best fixed action per SNR class under the channel
//! model alone, without contention.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bandit::{quantize_snr, Action, SnrClass};
use crate::channel::{ber, bitrate, frame_success, LinkBudget, LinkState};
use crate::netsim::{SimConfig, SimError};

/// Result of [`genie_oracle`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub config_hash: String,
    pub samples_per_class: u64,
    /// Action menu, in index order.
    pub actions: Vec<Action>,
    /// Expected normalized per-slot throughput, `[class][menu position]`.
    pub expected: [Vec<f64>; 3],
    pub best: [Action; 3],
    pub best_value: [f64; 3],
    /// Share of the network's link-time spent in each class.
    pub class_weight: [f64; 3],
    /// Classes the network rarely visits, topped up with SNRs drawn
    /// uniformly over the class range.
    pub filled: [bool; 3],
}

impl OracleReport {
    /// Genie throughput averaged over the network's class mix.
    pub fn reference_throughput(&self) -> f64 {
        (0..3)
            .map(|c| self.class_weight[c] * self.best_value[c])
            .sum()
    }

    pub fn best_value_of(&self, class: SnrClass) -> f64 {
        self.best_value[class.index()]
    }
}

/// Expected normalized throughput of one slot at reference-power SNR
/// `snr_ref_db`: full burst size times frame success, over the 16-PSK
/// burst size.
pub fn slot_value(config: &SimConfig, budget: &LinkBudget, snr_ref_db: f64, action: Action) -> f64 {
    let radio = &config.radio;
    let ch = &config.channel;
    let snr = snr_ref_db
        + budget
            .power_map()
            .gain_db(radio.reference_power, action.power);
    let p = frame_success(
        ber(snr, action.modulation, ch, bitrate(action.modulation, ch)),
        radio.frame_bits,
    );
    let frames = radio.burst_capacity(action.modulation, ch) as f64;
    frames * p * radio.frame_bits as f64 / radio.max_bits_per_slot(ch) as f64
}

/// Monte-Carlo genie over the links of `config.topology`.
///
/// Draws `3 * samples_per_class` (link, stationary shadowing) pairs to
/// weigh the classes, keeps at most `samples_per_class` per class and tops
/// up rare classes uniformly over their nominal range. The expectation over
/// bit errors is taken analytically per sample. Ties between actions go to
/// the lower action index.
pub fn genie_oracle(
    config: &SimConfig,
    samples_per_class: u64,
    seed: u64,
    config_hash: &str,
) -> Result<OracleReport, SimError> {
    config.validate()?;
    let budget = LinkBudget::new(&config.channel, &config.power)?;
    let mut actions = config.controller.actions.clone();
    actions.sort();
    actions.dedup();
    let links: Vec<LinkState> = config
        .topology
        .links()
        .into_iter()
        .map(|(c, p)| LinkState::new(config.topology.distance(c, p)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let sigma = config.channel.shadowing_sigma_db;
    let reference = config.radio.reference_power;

    let mut sums = [
        vec![0.0; actions.len()],
        vec![0.0; actions.len()],
        vec![0.0; actions.len()],
    ];
    let mut counts = [0u64; 3];
    let mut natural = [0u64; 3];
    let add = |class: usize, snr: f64, sums: &mut [Vec<f64>; 3]| {
        for (j, a) in actions.iter().enumerate() {
            sums[class][j] += slot_value(config, &budget, snr, *a);
        }
    };
    for _ in 0..3 * samples_per_class {
        let link = links[rng.random_range(0..links.len())];
        let draw: f64 = rng.sample(StandardNormal);
        let state = LinkState {
            distance_m: link.distance_m,
            shadow_db: sigma * draw,
        };
        let snr = budget.snr_db(&state, reference);
        let class = quantize_snr(snr)?.index();
        natural[class] += 1;
        if counts[class] < samples_per_class {
            counts[class] += 1;
            add(class, snr, &mut sums);
        }
    }
    let mut filled = [false; 3];
    for class in SnrClass::ALL {
        let c = class.index();
        let (lo, hi) = class.range_db();
        filled[c] = counts[c] < samples_per_class;
        while counts[c] < samples_per_class {
            let snr = lo + (hi - lo) * rng.random::<f64>();
            counts[c] += 1;
            add(c, snr, &mut sums);
        }
    }
    let total = natural.iter().sum::<u64>() as f64;
    let expected = sums.map(|row| {
        row.iter()
            .map(|s| s / samples_per_class as f64)
            .collect::<Vec<_>>()
    });
    let mut best = [actions[0]; 3];
    let mut best_value = [0.0; 3];
    for c in 0..3 {
        let mut bj = 0;
        for j in 1..actions.len() {
            // ties within rounding go to the lower index
            if expected[c][j] > expected[c][bj] + 1e-12 {
                bj = j;
            }
        }
        best[c] = actions[bj];
        best_value[c] = expected[c][bj];
    }
    Ok(OracleReport {
        config_hash: config_hash.to_owned(),
        samples_per_class,
        actions,
        expected,
        best,
        best_value,
        class_weight: natural.map(|n| n as f64 / total),
        filled,
    })
}
