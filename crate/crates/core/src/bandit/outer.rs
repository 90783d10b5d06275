use serde::{Deserialize, Serialize};

use super::BanditError;

/// Non-contextual UCB over feedback interval durations (in minutes).
///
/// The reward of a round trades the interval's normalized throughput
/// against the feedback rate: `theta * r_k - (1 - theta) * cost / q_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMab {
    intervals: Vec<u32>,
    mean: Vec<f64>,
    pulls: Vec<u64>,
    round: u64,
    theta: f64,
    feedback_cost: f64,
    exploration_c: f64,
}

impl FeedbackMab {
    pub fn new(
        mut intervals: Vec<u32>,
        theta: f64,
        feedback_cost: f64,
        exploration_c: f64,
    ) -> Result<Self, BanditError> {
        intervals.sort_unstable();
        intervals.dedup();
        if intervals.is_empty() {
            return Err(BanditError::EmptyIntervalMenu);
        }
        if intervals[0] == 0 {
            return Err(BanditError::UnknownInterval(0));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(BanditError::InvalidTheta(theta));
        }
        if !(feedback_cost.is_finite() && feedback_cost >= 0.0) {
            return Err(BanditError::InvalidFeedbackCost(feedback_cost));
        }
        if !(exploration_c.is_finite() && exploration_c > 0.0) {
            return Err(BanditError::InvalidExploration(exploration_c));
        }
        let n = intervals.len();
        Ok(Self {
            intervals,
            mean: vec![0.0; n],
            pulls: vec![0; n],
            round: 0,
            theta,
            feedback_cost,
            exploration_c,
        })
    }

    pub fn intervals(&self) -> &[u32] {
        &self.intervals
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn feedback_cost(&self) -> f64 {
        self.feedback_cost
    }

    fn position(&self, q: u32) -> Result<usize, BanditError> {
        self.intervals
            .binary_search(&q)
            .map_err(|_| BanditError::UnknownInterval(q))
    }

    pub fn pulls(&self, q: u32) -> u64 {
        self.position(q).map_or(0, |i| self.pulls[i])
    }

    pub fn mean(&self, q: u32) -> Option<f64> {
        self.position(q)
            .ok()
            .filter(|&i| self.pulls[i] > 0)
            .map(|i| self.mean[i])
    }

    /// Restores the statistics of one interval; `round` follows the pulls.
    pub fn set_arm(&mut self, q: u32, mean: f64, pulls: u64) -> Result<(), BanditError> {
        let i = self.position(q)?;
        self.round = self.round - self.pulls[i] + pulls;
        self.pulls[i] = pulls;
        self.mean[i] = if pulls > 0 { mean } else { 0.0 };
        Ok(())
    }

    /// Reward of a round that used interval `q` and achieved `r_k`.
    pub fn reward(&self, r_k: f64, q: u32) -> Result<f64, BanditError> {
        self.position(q)?;
        Ok(self.theta * r_k - (1.0 - self.theta) * self.feedback_cost / f64::from(q))
    }

    pub fn ucb_score(&self, q: u32) -> f64 {
        match self.position(q) {
            Ok(i) => score(self.mean[i], self.pulls[i], self.round, self.exploration_c),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Chooses the next interval. Untried intervals go first and ties
    /// resolve to the shortest duration.
    pub fn select_interval(&mut self) -> u32 {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..self.intervals.len() {
            let s = score(self.mean[i], self.pulls[i], self.round, self.exploration_c);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        self.pulls[best] += 1;
        self.round += 1;
        self.intervals[best]
    }

    /// Folds the reward of the round that used `q` into its running mean.
    pub fn update(&mut self, q: u32, reward: f64) -> Result<(), BanditError> {
        let i = self.position(q)?;
        if self.pulls[i] == 0 {
            return Err(BanditError::IntervalNotSelected(q));
        }
        if !reward.is_finite() {
            return Err(BanditError::InvalidReward(reward));
        }
        self.mean[i] += (reward - self.mean[i]) / self.pulls[i] as f64;
        Ok(())
    }
}

fn score(mean: f64, pulls: u64, round: u64, c: f64) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    mean + (c * (round.max(1) as f64).ln() / pulls as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn menu(theta: f64, cost: f64) -> FeedbackMab {
        FeedbackMab::new(vec![4, 7, 10], theta, cost, 2.0).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert!((menu(0.7, 0.2).reward(1.0, 4).unwrap() - 0.685).abs() < 1e-12);
        assert!((menu(1.0, 0.9).reward(0.5, 10).unwrap() - 0.5).abs() < 1e-12);
        assert!((menu(0.0, 0.3).reward(123.0, 10).unwrap() + 0.03).abs() < 1e-12);
        assert_eq!(
            menu(0.7, 0.2).reward(1.0, 5),
            Err(BanditError::UnknownInterval(5))
        );
    }

    #[test]
    fn cold_start_picks_shortest() {
        let mut m = menu(0.7, 0.2);
        assert_eq!(m.select_interval(), 4);
        assert_eq!(m.select_interval(), 7);
        assert_eq!(m.select_interval(), 10);
        assert_eq!(m.round(), 3);
    }

    #[test]
    fn equal_bonus_max_mean() {
        let mut m = menu(0.7, 0.2);
        m.set_arm(4, 0.68, 5).unwrap();
        m.set_arm(7, 0.64, 5).unwrap();
        m.set_arm(10, 0.60, 5).unwrap();
        assert_eq!(m.round(), 15);
        assert_eq!(m.select_interval(), 4);
    }

    #[test]
    fn largest_bonus_wins() {
        let mut m = menu(0.7, 0.2);
        m.set_arm(4, 0.6, 10).unwrap();
        m.set_arm(7, 0.6, 2).unwrap();
        m.set_arm(10, 0.6, 10).unwrap();
        let k = 22f64;
        let s4 = 0.6 + (2.0 * k.ln() / 10.0).sqrt();
        let s7 = 0.6 + (2.0 * k.ln() / 2.0).sqrt();
        assert!(s7 > s4);
        assert_eq!(m.ucb_score(7), s7);
        assert_eq!(m.select_interval(), 7);
    }

    #[test]
    fn running_mean_updates() {
        let mut m = menu(0.7, 0.2);
        m.set_arm(4, 0.0, 1).unwrap();
        m.update(4, 0.685).unwrap();
        assert!((m.mean(4).unwrap() - 0.685).abs() < 1e-12);
        m.set_arm(4, 0.685, 2).unwrap();
        m.update(4, 0.5).unwrap();
        assert!((m.mean(4).unwrap() - 0.5925).abs() < 1e-12);
        m.set_arm(7, 0.6, 4).unwrap();
        m.update(7, 0.6).unwrap();
        assert!((m.mean(7).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn update_errors() {
        let mut m = menu(0.7, 0.2);
        assert_eq!(m.update(5, 0.1), Err(BanditError::UnknownInterval(5)));
        assert_eq!(m.update(4, 0.1), Err(BanditError::IntervalNotSelected(4)));
    }

    #[test]
    fn construction_errors() {
        assert!(FeedbackMab::new(vec![], 0.7, 0.1, 2.0).is_err());
        assert!(FeedbackMab::new(vec![0, 4], 0.7, 0.1, 2.0).is_err());
        assert!(FeedbackMab::new(vec![4], 1.5, 0.1, 2.0).is_err());
        assert!(FeedbackMab::new(vec![4], 0.7, -0.1, 2.0).is_err());
        assert!(FeedbackMab::new(vec![4], 0.7, 0.1, 0.0).is_err());
    }

    #[test]
    fn singleton_menu_is_inert() {
        let mut m = FeedbackMab::new(vec![3], 0.7, 0.1, 2.0).unwrap();
        for i in 0..20 {
            assert_eq!(m.select_interval(), 3);
            m.update(3, (i % 3) as f64 / 3.0).unwrap();
        }
    }
}
