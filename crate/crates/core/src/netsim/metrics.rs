use serde::{Deserialize, Serialize};

use crate::bandit::{Action, Context, SnrClass};

/// Fate counters of data frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCounters {
    pub sent: u64,
    pub delivered: u64,
    pub lost_ber: u64,
    pub lost_collision: u64,
    pub lost_halfduplex: u64,
}

impl FrameCounters {
    pub fn add(&mut self, other: &FrameCounters) {
        self.sent += other.sent;
        self.delivered += other.delivered;
        self.lost_ber += other.lost_ber;
        self.lost_collision += other.lost_collision;
        self.lost_halfduplex += other.lost_halfduplex;
    }

    pub fn lost(&self) -> u64 {
        self.lost_ber + self.lost_collision + self.lost_halfduplex
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkInfo {
    pub src: usize,
    pub dst: usize,
    pub distance_m: f64,
}

/// One feedback interval of one link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub link: usize,
    pub link_src: usize,
    pub link_dst: usize,
    pub k: u64,
    pub t_start_s: f64,
    pub q_k_min: u32,
    /// Payload bits delivered from frames sent during the interval.
    pub r_k_bits: u64,
    /// `r_k_bits` over the interval's 16-PSK capacity, in [0, 1].
    pub r_k_norm: f64,
    pub energy_data_j: f64,
    pub energy_fb_j: f64,
    pub aoi_mean_slots: f64,
    pub aoi_peak_slots: u64,
    pub frames: FrameCounters,
    pub action_counts: [u64; Action::COUNT],
    /// False for the trailing interval cut off by the end of the episode.
    pub closed: bool,
}

impl IntervalRecord {
    /// Slots in which an action was taken.
    pub fn decisions(&self) -> u64 {
        self.action_counts.iter().sum()
    }
}

/// One slot of one link, for regret accounting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub link: usize,
    pub slot: u64,
    pub context: Context,
    pub action: Action,
    /// Class of the true reference-power SNR when the action was taken.
    pub true_class: SnrClass,
    pub delivered_bits: u64,
}

/// Everything an episode produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutput {
    pub links: Vec<LinkInfo>,
    /// Ordered by (link, k).
    pub intervals: Vec<IntervalRecord>,
    /// Ordered by (link, slot); only slots with a decision.
    pub slots: Vec<SlotRecord>,
    pub node_energy_j: Vec<f64>,
    /// Sum of power × airtime over every frame put on the air.
    pub frame_energy_j: f64,
    pub delivered_bits: u64,
    /// Payload bits that reached the sink, by origin node.
    pub sink_bits: Vec<u64>,
    pub deferred_slots: u64,
    pub control_sent: u64,
    pub control_lost: u64,
    pub total_slots: u64,
    pub max_bits_per_slot: u64,
}

impl EpisodeOutput {
    pub fn total_energy_j(&self) -> f64 {
        self.node_energy_j.iter().sum()
    }

    pub fn frames(&self) -> FrameCounters {
        let mut c = FrameCounters::default();
        for r in &self.intervals {
            c.add(&r.frames);
        }
        c
    }
}
