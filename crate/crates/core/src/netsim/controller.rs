use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bandit::{Action, AoiClock, BanditError, Context, ContextualDelayedUcb, FeedbackMab};

use super::{class_of, ControllerParams, InnerPolicy, OuterPolicy, PolicySpec};

enum InnerAgent {
    Ucb(ContextualDelayedUcb),
    Fixed(Action),
    Random(Vec<Action>),
    Oracle([Action; 3]),
}

enum OuterAgent {
    Ucb(FeedbackMab),
    Fixed(u32),
    Random(Vec<u32>),
}

/// Summary of an interval closed by a successful feedback exchange.
pub(crate) struct ClosedInterval {
    pub k: u64,
    pub start_slot: u64,
    pub q_min: u32,
    pub r_norm: f64,
    pub fb_energy_j: f64,
    pub peak_age: u64,
}

/// Transmitter-side state of one link: both agents, the AoI clock and the
/// open feedback interval.
pub(crate) struct LinkController {
    inner: InnerAgent,
    outer: OuterAgent,
    slots_per_minute: f64,
    pub clock: AoiClock,
    pub snr_estimate_db: f64,
    pub has_report: bool,
    pub k: u64,
    pub interval_start_slot: u64,
    pub q_min: u32,
    pub due_slot: u64,
    pub decisions: u64,
    pub fb_energy_j: f64,
}

impl LinkController {
    pub fn new<R: Rng>(
        policy: &PolicySpec,
        params: &ControllerParams,
        feedback_cost: f64,
        slots_per_minute: f64,
        initial_snr_db: f64,
        rng: &mut R,
    ) -> Result<Self, BanditError> {
        let inner = match &policy.inner {
            InnerPolicy::Ucb => InnerAgent::Ucb(ContextualDelayedUcb::new(
                params.actions.clone(),
                params.exploration_c,
            )?),
            InnerPolicy::Fixed(a) => InnerAgent::Fixed(*a),
            InnerPolicy::Random => {
                let mut menu = params.actions.clone();
                menu.sort();
                menu.dedup();
                InnerAgent::Random(menu)
            }
            InnerPolicy::Oracle(best) => InnerAgent::Oracle(*best),
        };
        let outer = match &policy.outer {
            OuterPolicy::Ucb => OuterAgent::Ucb(FeedbackMab::new(
                params.intervals_min.clone(),
                params.theta,
                feedback_cost,
                params.exploration_c,
            )?),
            OuterPolicy::Fixed(q) => OuterAgent::Fixed(*q),
            OuterPolicy::Random => {
                let mut menu = params.intervals_min.clone();
                menu.sort_unstable();
                menu.dedup();
                OuterAgent::Random(menu)
            }
        };
        let mut ctrl = Self {
            inner,
            outer,
            slots_per_minute,
            clock: AoiClock::starting_at(0),
            snr_estimate_db: initial_snr_db,
            has_report: false,
            k: 1,
            interval_start_slot: 0,
            q_min: 0,
            due_slot: 0,
            decisions: 0,
            fb_energy_j: 0.0,
        };
        ctrl.open_interval(0, rng);
        Ok(ctrl)
    }

    fn open_interval<R: Rng>(&mut self, slot: u64, rng: &mut R) {
        let q = match &mut self.outer {
            OuterAgent::Ucb(mab) => mab.select_interval(),
            OuterAgent::Fixed(q) => *q,
            OuterAgent::Random(menu) => *menu.choose(rng).expect("menu validated nonempty"),
        };
        self.q_min = q;
        self.interval_start_slot = slot;
        self.due_slot = slot + (f64::from(q) * self.slots_per_minute).round() as u64;
        self.decisions = 0;
        self.fb_energy_j = 0.0;
    }

    pub fn feedback_due(&self, slot: u64) -> bool {
        slot >= self.due_slot
    }

    pub fn context(&self) -> Context {
        Context::new(
            class_of(self.snr_estimate_db),
            crate::bandit::quantize_aoi(self.clock.age()),
        )
    }

    pub fn decide<R: Rng>(&mut self, slot: u64, rng: &mut R) -> (Context, Action) {
        let ctx = self.context();
        let action = match &mut self.inner {
            InnerAgent::Ucb(agent) => agent.select_action(slot, ctx),
            InnerAgent::Fixed(a) => *a,
            InnerAgent::Random(menu) => *menu.choose(rng).expect("menu validated nonempty"),
            InnerAgent::Oracle(best) => best[ctx.snr.index()],
        };
        self.decisions += 1;
        (ctx, action)
    }

    /// Probe reply: only refreshes the channel estimate.
    pub fn on_probe(&mut self, snr_report: Option<f64>) {
        if let Some(s) = snr_report {
            self.snr_estimate_db = s;
            self.has_report = true;
        }
        self.clock.reset();
    }

    /// Feedback for the open interval arrived in `slot`.
    pub fn on_feedback<R: Rng>(
        &mut self,
        slot: u64,
        r_bits: u64,
        max_bits_per_slot: u64,
        snr_report: Option<f64>,
        rng: &mut R,
    ) -> Result<ClosedInterval, BanditError> {
        let peak_age = self.clock.age();
        self.clock.reset();
        if let Some(s) = snr_report {
            self.snr_estimate_db = s;
            self.has_report = true;
        }
        // slot-normalized: one unit per fully delivered 16-PSK burst
        let r_slots = r_bits as f64 / max_bits_per_slot as f64;
        let r_norm = if self.decisions > 0 {
            r_slots / self.decisions as f64
        } else {
            0.0
        };
        if let InnerAgent::Ucb(agent) = &mut self.inner {
            if !agent.pending().is_empty() {
                agent.apply_delayed_reward(r_slots)?;
            }
        }
        if let OuterAgent::Ucb(mab) = &mut self.outer {
            let reward = mab.reward(r_norm, self.q_min)?;
            mab.update(self.q_min, reward)?;
        }
        let closed = ClosedInterval {
            k: self.k,
            start_slot: self.interval_start_slot,
            q_min: self.q_min,
            r_norm,
            fb_energy_j: self.fb_energy_j,
            peak_age,
        };
        self.k += 1;
        self.open_interval(slot, rng);
        Ok(closed)
    }
}
