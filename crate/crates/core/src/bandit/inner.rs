//! Contextual UCB with delayed, batched rewards.
//!
//! Selection happens once per slot and immediately bumps the pull counts;
//! the empirical means are only touched when the aggregate reward of a
//! feedback interval arrives, at which point it is split uniformly over the
//! actions taken during that interval.

use serde::{Deserialize, Serialize};

use super::context::{Action, Context};
use super::BanditError;

/// Empirical means and pull counts over the (context, action) grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmTable {
    actions: Vec<Action>,
    mean: Vec<f64>,
    pulls: Vec<u64>,
    total_decisions: u64,
    exploration_c: f64,
}

impl ArmTable {
    /// Builds an empty table for the given action menu. The menu is sorted
    /// by action index and deduplicated, so the lowest index wins ties.
    pub fn new(mut actions: Vec<Action>, exploration_c: f64) -> Result<Self, BanditError> {
        if actions.is_empty() {
            return Err(BanditError::EmptyActionSet);
        }
        if !(exploration_c.is_finite() && exploration_c > 0.0) {
            return Err(BanditError::InvalidExploration(exploration_c));
        }
        actions.sort();
        actions.dedup();
        let cells = Context::COUNT * actions.len();
        Ok(Self {
            actions,
            mean: vec![0.0; cells],
            pulls: vec![0; cells],
            total_decisions: 0,
            exploration_c,
        })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn exploration_c(&self) -> f64 {
        self.exploration_c
    }

    pub fn total_decisions(&self) -> u64 {
        self.total_decisions
    }

    fn slot_of(&self, action: Action) -> Option<usize> {
        self.actions.binary_search(&action).ok()
    }

    fn cell(&self, ctx: Context, action: Action) -> Option<usize> {
        self.slot_of(action)
            .map(|arm| ctx.index() * self.actions.len() + arm)
    }

    pub fn pulls(&self, ctx: Context, action: Action) -> u64 {
        self.cell(ctx, action).map_or(0, |i| self.pulls[i])
    }

    /// Empirical mean, defined only once the pair has been pulled.
    pub fn mean(&self, ctx: Context, action: Action) -> Option<f64> {
        self.cell(ctx, action)
            .filter(|&i| self.pulls[i] > 0)
            .map(|i| self.mean[i])
    }

    /// Overwrites the statistics of one cell, keeping `total_decisions`
    /// equal to the sum of pulls. Used to restore checkpoints.
    pub fn set_arm(
        &mut self,
        ctx: Context,
        action: Action,
        mean: f64,
        pulls: u64,
    ) -> Result<(), BanditError> {
        let i = self
            .cell(ctx, action)
            .ok_or(BanditError::UnknownAction(action))?;
        self.total_decisions = self.total_decisions - self.pulls[i] + pulls;
        self.pulls[i] = pulls;
        self.mean[i] = if pulls > 0 { mean } else { 0.0 };
        Ok(())
    }

    /// UCB index of `action` under `ctx`; `+inf` for an untried pair.
    pub fn ucb_score(&self, ctx: Context, action: Action) -> f64 {
        let Some(i) = self.cell(ctx, action) else {
            return f64::NEG_INFINITY;
        };
        ucb_index(
            self.mean[i],
            self.pulls[i],
            self.total_decisions,
            self.exploration_c,
        )
    }

    /// Picks the UCB-maximizing action for `ctx` and counts the decision.
    ///
    /// Returns the action together with the pair's pull count after this
    /// selection, which is the divisor used when its delayed reward is
    /// credited.
    pub fn select(&mut self, ctx: Context) -> (Action, u64) {
        let width = self.actions.len();
        let row = ctx.index() * width;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for arm in 0..width {
            let score = ucb_index(
                self.mean[row + arm],
                self.pulls[row + arm],
                self.total_decisions,
                self.exploration_c,
            );
            // strict comparison keeps the lowest index on ties
            if score > best_score {
                best = arm;
                best_score = score;
            }
        }
        self.pulls[row + best] += 1;
        self.total_decisions += 1;
        (self.actions[best], self.pulls[row + best])
    }

    /// Incremental-mean correction of one pair with reward `g`.
    fn correct(&mut self, ctx: Context, action: Action, g: f64, count: u64) {
        if let Some(i) = self.cell(ctx, action) {
            let n = count.max(1) as f64;
            self.mean[i] += (g - self.mean[i]) / n;
        }
    }

    /// Credits the aggregate reward `r_k` of an interval to every action in
    /// `pending`, in selection order, then clears the ledger.
    ///
    /// Returns the per-action share `r_k / |entries|`.
    pub fn apply_delayed_reward(
        &mut self,
        pending: &mut PendingInterval,
        r_k: f64,
    ) -> Result<f64, BanditError> {
        if pending.entries.is_empty() {
            return Err(BanditError::EmptyPending);
        }
        if !(r_k.is_finite() && r_k >= 0.0) {
            return Err(BanditError::InvalidReward(r_k));
        }
        let share = r_k / pending.entries.len() as f64;
        for entry in pending.entries.drain(..) {
            self.correct(entry.context, entry.action, share, entry.count);
        }
        Ok(share)
    }
}

fn ucb_index(mean: f64, pulls: u64, total: u64, c: f64) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    let log_n = (total.max(1) as f64).ln();
    mean + (c * log_n / pulls as f64).sqrt()
}

/// One decision awaiting its delayed reward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingEntry {
    pub slot: u64,
    pub context: Context,
    pub action: Action,
    /// Pull count of (context, action) right after this selection.
    pub count: u64,
}

/// Actions taken during one feedback interval.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PendingInterval {
    pub interval_index: u64,
    pub entries: Vec<PendingEntry>,
}

impl PendingInterval {
    pub fn new(interval_index: u64) -> Self {
        Self {
            interval_index,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The inner agent: an [`ArmTable`] plus the ledger of the open interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextualDelayedUcb {
    table: ArmTable,
    pending: PendingInterval,
}

impl ContextualDelayedUcb {
    pub fn new(actions: Vec<Action>, exploration_c: f64) -> Result<Self, BanditError> {
        Ok(Self {
            table: ArmTable::new(actions, exploration_c)?,
            pending: PendingInterval::new(1),
        })
    }

    pub fn from_table(table: ArmTable) -> Self {
        Self {
            table,
            pending: PendingInterval::new(1),
        }
    }

    pub fn table(&self) -> &ArmTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut ArmTable {
        &mut self.table
    }

    pub fn pending(&self) -> &PendingInterval {
        &self.pending
    }

    /// Selects the action for `slot` and records it in the open interval.
    pub fn select_action(&mut self, slot: u64, ctx: Context) -> Action {
        let (action, count) = self.table.select(ctx);
        self.pending.entries.push(PendingEntry {
            slot,
            context: ctx,
            action,
            count,
        });
        action
    }

    /// Closes the open interval with aggregate reward `r_k`.
    pub fn apply_delayed_reward(&mut self, r_k: f64) -> Result<f64, BanditError> {
        let share = self.table.apply_delayed_reward(&mut self.pending, r_k)?;
        self.pending.interval_index += 1;
        Ok(share)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::context::{AoiClass, Modulation, PowerLevel, SnrClass};

    fn ctx() -> Context {
        Context::new(SnrClass::Medium, AoiClass::Fresh)
    }

    fn a() -> Action {
        Action::new(Modulation::Bpsk, PowerLevel::Low)
    }

    fn b() -> Action {
        Action::new(Modulation::Psk8, PowerLevel::Medium)
    }

    #[test]
    fn untried_arm_is_preferred() {
        let mut t = ArmTable::new(vec![a(), b()], 2.0).unwrap();
        t.set_arm(ctx(), a(), 0.5, 10).unwrap();
        assert_eq!(t.total_decisions(), 10);
        assert_eq!(t.select(ctx()).0, b());
    }

    #[test]
    fn equal_bonus_higher_mean_wins() {
        let mut t = ArmTable::new(vec![a(), b()], 2.0).unwrap();
        t.set_arm(ctx(), a(), 0.5, 10).unwrap();
        t.set_arm(ctx(), b(), 0.4, 10).unwrap();
        assert_eq!(t.total_decisions(), 20);
        assert_eq!(t.select(ctx()).0, a());
    }

    #[test]
    fn large_bonus_beats_higher_mean() {
        let mut t = ArmTable::new(vec![a(), b()], 2.0).unwrap();
        t.set_arm(ctx(), a(), 0.6, 100).unwrap();
        t.set_arm(ctx(), b(), 0.5, 2).unwrap();
        // direct evaluation of both indices
        let n = 102f64;
        let score_a = 0.6 + (2.0 * n.ln() / 100.0).sqrt();
        let score_b = 0.5 + (2.0 * n.ln() / 2.0).sqrt();
        assert!((score_a - 0.904).abs() < 1e-3);
        assert!((score_b - 2.651).abs() < 1e-3);
        assert_eq!(t.ucb_score(ctx(), a()), score_a);
        assert_eq!(t.ucb_score(ctx(), b()), score_b);
        assert_eq!(t.select(ctx()).0, b());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut t = ArmTable::new(vec![b(), a()], 2.0).unwrap();
        assert_eq!(t.actions(), &[a(), b()]);
        assert_eq!(t.select(ctx()).0, a());
    }

    #[test]
    fn selection_counts() {
        let mut agent = ContextualDelayedUcb::new(Action::all(), 2.0).unwrap();
        agent.select_action(0, ctx());
        agent.select_action(1, ctx());
        assert_eq!(agent.table().total_decisions(), 2);
        assert_eq!(agent.pending().len(), 2);
        assert_eq!(agent.table().mean(ctx(), a()), Some(0.0));
        assert_eq!(agent.table().mean(ctx(), b()), None);
    }

    #[test]
    fn uniform_split() {
        let mut t = ArmTable::new(Action::all(), 2.0).unwrap();
        let mut p = PendingInterval::new(1);
        for slot in 0..4 {
            let (action, count) = t.select(ctx());
            p.entries.push(PendingEntry {
                slot,
                context: ctx(),
                action,
                count,
            });
        }
        let share = t.apply_delayed_reward(&mut p, 12.0).unwrap();
        assert_eq!(share, 3.0);
        assert!(p.is_empty());
        for action in &Action::all()[..4] {
            assert_eq!(t.mean(ctx(), *action), Some(3.0));
        }
    }

    #[test]
    fn incremental_correction_example() {
        let mut t = ArmTable::new(vec![a()], 2.0).unwrap();
        t.set_arm(ctx(), a(), 0.5, 1).unwrap();
        let (_, count) = t.select(ctx());
        assert_eq!(count, 2);
        let mut p = PendingInterval::new(2);
        p.entries.push(PendingEntry {
            slot: 0,
            context: ctx(),
            action: a(),
            count,
        });
        t.apply_delayed_reward(&mut p, 0.9).unwrap();
        assert!((t.mean(ctx(), a()).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn zero_reward_decays_by_mean_over_pulls() {
        let mut agent = ContextualDelayedUcb::new(vec![a()], 2.0).unwrap();
        agent.table_mut().set_arm(ctx(), a(), 0.8, 3).unwrap();
        agent.select_action(7, ctx());
        agent.apply_delayed_reward(0.0).unwrap();
        let m = agent.table().mean(ctx(), a()).unwrap();
        assert!((m - (0.8 - 0.8 / 4.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_ledger_rejected() {
        let mut agent = ContextualDelayedUcb::new(Action::all(), 2.0).unwrap();
        assert_eq!(
            agent.apply_delayed_reward(1.0),
            Err(BanditError::EmptyPending)
        );
    }

    #[test]
    fn bad_rewards_rejected() {
        let mut agent = ContextualDelayedUcb::new(Action::all(), 2.0).unwrap();
        agent.select_action(0, ctx());
        assert!(agent.apply_delayed_reward(-1.0).is_err());
        assert!(agent.apply_delayed_reward(f64::NAN).is_err());
        assert!(agent.apply_delayed_reward(0.5).is_ok());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(ArmTable::new(vec![], 2.0), Err(BanditError::EmptyActionSet));
        assert!(ArmTable::new(Action::all(), 0.0).is_err());
        assert!(ArmTable::new(Action::all(), f64::NAN).is_err());
    }

    #[test]
    fn repeated_pair_in_one_interval_averages_exactly() {
        let mut agent = ContextualDelayedUcb::new(vec![a()], 2.0).unwrap();
        for slot in 0..3 {
            agent.select_action(slot, ctx());
        }
        agent.apply_delayed_reward(2.4).unwrap();
        assert!((agent.table().mean(ctx(), a()).unwrap() - 0.8).abs() < 1e-12);
        for slot in 3..5 {
            agent.select_action(slot, ctx());
        }
        agent.apply_delayed_reward(0.6).unwrap();
        // samples {0.8, 0.8, 0.8, 0.3, 0.3}
        assert!((agent.table().mean(ctx(), a()).unwrap() - 0.6).abs() < 1e-12);
    }
}
