//! Discrete-event simulator of a half-duplex acoustic tree network.
//!
//! Every non-sink node transmits toward its parent and runs its own link
//! controller. Time is divided into slots; each slot opens with a control
//! phase, where due feedback exchanges run, followed by a data phase split
//! into contention sub-slots. A node sends one burst of back-to-back frames
//! per slot in a randomly chosen sub-slot. Every transmission is heard by
//! every node, overlapping receptions destroy each other, and a node
//! cannot receive while it transmits.

mod controller;
mod metrics;
mod queue;
mod sim;
mod topology;

use serde::{Deserialize, Serialize};

use crate::bandit::{Action, BanditError, Modulation, PowerLevel, SnrClass};
use crate::channel::{bitrate, ChannelError, ChannelParams, PowerMap};

pub use metrics::{EpisodeOutput, FrameCounters, IntervalRecord, LinkInfo, SlotRecord};
pub use sim::{reception_fate, run_episode, FrameFate};
pub use topology::{Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Invalid(String),
}

/// Framing, slotting and control-plane parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// On-air size of a data frame.
    pub frame_bits: u64,
    /// Size of a sensor data packet before fragmentation.
    pub packet_bits: u64,
    pub slot_s: f64,
    /// Data-phase length; the rest of the slot is the control phase.
    pub duty_window_s: f64,
    /// Number of contention sub-slots in the data phase.
    pub subslots: u32,
    pub control_bitrate: f64,
    pub request_bits: u64,
    pub feedback_bits: u64,
    pub control_power: PowerLevel,
    /// Power class SNR reports are normalized to.
    pub reference_power: PowerLevel,
    /// SNR assumed before the first report arrives.
    pub initial_snr_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            frame_bits: 1000,
            packet_bits: 1_000_000,
            slot_s: 60.0,
            duty_window_s: 50.0,
            subslots: 8,
            control_bitrate: 4800.0,
            request_bits: 128,
            feedback_bits: 256,
            control_power: PowerLevel::Medium,
            reference_power: PowerLevel::Medium,
            initial_snr_db: 10.0,
        }
    }
}

/// Slack added to a control exchange for processing turnaround.
pub(crate) const EXCHANGE_MARGIN_S: f64 = 0.1;

impl RadioParams {
    pub fn guard_s(&self) -> f64 {
        self.slot_s - self.duty_window_s
    }

    pub fn subslot_s(&self) -> f64 {
        self.duty_window_s / f64::from(self.subslots)
    }

    pub fn frame_airtime_s(&self, modulation: Modulation, channel: &ChannelParams) -> f64 {
        self.frame_bits as f64 / bitrate(modulation, channel)
    }

    /// Frames of one burst at `modulation`: as many as fit in a sub-slot.
    pub fn burst_capacity(&self, modulation: Modulation, channel: &ChannelParams) -> u64 {
        // the epsilon absorbs rounding in exact fits such as 50 s * 4200 / 1000
        (self.subslot_s() * bitrate(modulation, channel) / self.frame_bits as f64 + 1e-9).floor()
            as u64
    }

    /// Payload bits of a full 16-PSK burst, the normalization constant of
    /// per-slot throughput.
    pub fn max_bits_per_slot(&self, channel: &ChannelParams) -> u64 {
        self.burst_capacity(Modulation::Psk16, channel) * self.frame_bits
    }

    pub fn request_airtime_s(&self) -> f64 {
        self.request_bits as f64 / self.control_bitrate
    }

    pub fn feedback_airtime_s(&self) -> f64 {
        self.feedback_bits as f64 / self.control_bitrate
    }

    /// Worst-case length of one request/reply exchange.
    pub fn exchange_budget_s(&self, max_propagation_s: f64) -> f64 {
        self.request_airtime_s()
            + self.feedback_airtime_s()
            + 2.0 * max_propagation_s
            + EXCHANGE_MARGIN_S
    }

    pub fn validate(&self, channel: &ChannelParams) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Invalid(m));
        if self.frame_bits == 0 {
            return bad("radio.frame_bits must be positive".into());
        }
        if self.packet_bits < self.frame_bits {
            return bad(format!(
                "radio.packet_bits ({}) is smaller than radio.frame_bits ({})",
                self.packet_bits, self.frame_bits
            ));
        }
        if !(self.slot_s > 0.0 && self.slot_s.is_finite()) {
            return bad(format!(
                "radio.slot_s must be positive, got {}",
                self.slot_s
            ));
        }
        if !(self.duty_window_s > 0.0 && self.duty_window_s < self.slot_s) {
            return bad(format!(
                "radio.duty_window_s ({}) must be positive and shorter than radio.slot_s ({})",
                self.duty_window_s, self.slot_s
            ));
        }
        if self.subslots == 0 {
            return bad("radio.subslots must be at least 1".into());
        }
        if self.control_bitrate.is_nan()
            || self.control_bitrate <= 0.0
            || self.request_bits == 0
            || self.feedback_bits == 0
        {
            return bad("control frames need a positive bitrate and size".into());
        }
        if !self.initial_snr_db.is_finite() {
            return bad("radio.initial_snr_db must be finite".into());
        }
        let airtime = self.frame_airtime_s(Modulation::Bpsk, channel);
        if airtime > self.subslot_s() {
            return bad(format!(
                "frame airtime at BPSK ({:.4} s for {} bits at {} bit/s) exceeds the data window of one burst ({:.4} s = {} s / {} sub-slots)",
                airtime,
                self.frame_bits,
                bitrate(Modulation::Bpsk, channel),
                self.subslot_s(),
                self.duty_window_s,
                self.subslots
            ));
        }
        Ok(())
    }
}

/// Learning parameters shared by every link controller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    pub exploration_c: f64,
    pub theta: f64,
    /// Feedback interval menu, in minutes.
    pub intervals_min: Vec<u32>,
    pub actions: Vec<Action>,
    /// Normalized feedback cost. When unset it is the feedback packet
    /// energy at the control power divided by the same at the highest power.
    pub feedback_cost: Option<f64>,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            exploration_c: 2.0,
            theta: 0.7,
            intervals_min: vec![4, 7, 10],
            actions: Action::all(),
            feedback_cost: None,
        }
    }
}

impl ControllerParams {
    pub fn resolved_feedback_cost(&self, radio: &RadioParams, power: &PowerMap) -> f64 {
        self.feedback_cost
            .unwrap_or_else(|| power.watts(radio.control_power) / power.watts(PowerLevel::High))
    }
}

/// What chooses (modulation, power) each slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerPolicy {
    Ucb,
    Fixed(Action),
    Random,
    /// Best action per SNR class, indexed by [`SnrClass::index`].
    Oracle([Action; 3]),
}

/// What chooses the feedback interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterPolicy {
    Ucb,
    Fixed(u32),
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub inner: InnerPolicy,
    pub outer: OuterPolicy,
}

impl PolicySpec {
    pub fn bilevel() -> Self {
        Self {
            inner: InnerPolicy::Ucb,
            outer: OuterPolicy::Ucb,
        }
    }

    pub fn fixed(action: Action, interval_min: u32) -> Self {
        Self {
            inner: InnerPolicy::Fixed(action),
            outer: OuterPolicy::Fixed(interval_min),
        }
    }

    pub fn random() -> Self {
        Self {
            inner: InnerPolicy::Random,
            outer: OuterPolicy::Random,
        }
    }

    pub fn oracle(best: [Action; 3], interval_min: u32) -> Self {
        Self {
            inner: InnerPolicy::Oracle(best),
            outer: OuterPolicy::Fixed(interval_min),
        }
    }

    /// Short label used for output directories.
    pub fn label(&self) -> String {
        match (&self.inner, &self.outer) {
            (InnerPolicy::Ucb, OuterPolicy::Ucb) => "bilevel".into(),
            (InnerPolicy::Fixed(a), OuterPolicy::Fixed(q)) => {
                format!("fixed-{}-{}-{}min", a.modulation.name(), a.power.name(), q)
            }
            (InnerPolicy::Random, OuterPolicy::Random) => "random".into(),
            (InnerPolicy::Oracle(_), OuterPolicy::Fixed(q)) => format!("oracle-{q}min"),
            (inner, outer) => format!("{}-{}", inner_name(inner), outer_name(outer)),
        }
    }
}

fn inner_name(p: &InnerPolicy) -> String {
    match p {
        InnerPolicy::Ucb => "ucb".into(),
        InnerPolicy::Fixed(a) => format!("fixed-{}-{}", a.modulation.name(), a.power.name()),
        InnerPolicy::Random => "random".into(),
        InnerPolicy::Oracle(_) => "oracle".into(),
    }
}

fn outer_name(p: &OuterPolicy) -> String {
    match p {
        OuterPolicy::Ucb => "ucb".into(),
        OuterPolicy::Fixed(q) => format!("{q}min"),
        OuterPolicy::Random => "random".into(),
    }
}

/// Everything one episode needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub topology: Topology,
    pub channel: ChannelParams,
    pub power: PowerMap,
    pub radio: RadioParams,
    pub controller: ControllerParams,
    pub duration_s: f64,
    pub policy: PolicySpec,
}

impl SimConfig {
    pub fn new(topology: Topology, policy: PolicySpec) -> Self {
        Self {
            topology,
            channel: ChannelParams::default(),
            power: PowerMap::default(),
            radio: RadioParams::default(),
            controller: ControllerParams::default(),
            duration_s: 6000.0,
            policy,
        }
    }

    /// Slots per minute of feedback interval.
    pub fn slots_per_minute(&self) -> f64 {
        60.0 / self.radio.slot_s
    }

    pub fn interval_slots(&self, minutes: u32) -> u64 {
        (f64::from(minutes) * self.slots_per_minute()).round() as u64
    }

    pub fn total_slots(&self) -> u64 {
        (self.duration_s / self.radio.slot_s + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.channel.validate()?;
        self.power.validate()?;
        self.radio.validate(&self.channel)?;
        let c = &self.controller;
        if c.actions.is_empty() {
            return Err(BanditError::EmptyActionSet.into());
        }
        if c.intervals_min.is_empty() {
            return Err(BanditError::EmptyIntervalMenu.into());
        }
        if !(0.0..=1.0).contains(&c.theta) {
            return Err(BanditError::InvalidTheta(c.theta).into());
        }
        if !(c.exploration_c.is_finite() && c.exploration_c > 0.0) {
            return Err(BanditError::InvalidExploration(c.exploration_c).into());
        }
        if let Some(cost) = c.feedback_cost {
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(BanditError::InvalidFeedbackCost(cost).into());
            }
        }
        let mut minutes: Vec<u32> = c.intervals_min.clone();
        if let OuterPolicy::Fixed(q) = self.policy.outer {
            minutes.push(q);
        }
        for q in &minutes {
            let slots = f64::from(*q) * self.slots_per_minute();
            if *q == 0 || (slots - slots.round()).abs() > 1e-9 {
                return Err(SimError::Invalid(format!(
                    "feedback interval {q} min is not a positive multiple of the {} s slot",
                    self.radio.slot_s
                )));
            }
        }
        let shortest = minutes.iter().copied().min().unwrap_or(1);
        if !(self.duration_s.is_finite() && self.duration_s >= f64::from(shortest) * 60.0) {
            return Err(SimError::Invalid(format!(
                "duration_s ({}) is shorter than one feedback interval ({} min)",
                self.duration_s, shortest
            )));
        }
        let max_prop = self.topology.max_pairwise_distance() / self.channel.sound_speed_mps;
        // requests wait one propagation delay for the previous slot's tail
        let budget = self.radio.exchange_budget_s(max_prop) + max_prop;
        if budget > self.radio.guard_s() {
            return Err(SimError::Invalid(format!(
                "control phase ({} s) cannot fit one feedback exchange ({budget:.3} s)",
                self.radio.guard_s()
            )));
        }
        Ok(())
    }
}

/// Maps a reported SNR to the class used by oracle policies.
pub(crate) fn class_of(snr_db: f64) -> SnrClass {
    crate::bandit::quantize_snr(snr_db).unwrap_or(SnrClass::Low)
}
