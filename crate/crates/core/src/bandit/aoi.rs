use serde::{Deserialize, Serialize};

/// Age of the transmitter's channel knowledge, counted in slots.
///
/// The age grows by one per slot and drops to zero when a feedback packet
/// is received.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoiClock {
    last_feedback_slot: u64,
    current_slot: u64,
}

impl AoiClock {
    /// A clock whose last feedback happened at `slot`.
    pub fn starting_at(slot: u64) -> Self {
        Self {
            last_feedback_slot: slot,
            current_slot: slot,
        }
    }

    /// A clock with explicit state. `current_slot` is raised to
    /// `last_feedback_slot` if it lags behind.
    pub fn with_state(last_feedback_slot: u64, current_slot: u64) -> Self {
        Self {
            last_feedback_slot,
            current_slot: current_slot.max(last_feedback_slot),
        }
    }

    pub fn age(&self) -> u64 {
        self.current_slot - self.last_feedback_slot
    }

    pub fn current_slot(&self) -> u64 {
        self.current_slot
    }

    pub fn last_feedback_slot(&self) -> u64 {
        self.last_feedback_slot
    }

    pub fn tick(&mut self) {
        self.current_slot += 1;
    }

    /// Moves the clock forward to `slot`; earlier slots are ignored.
    pub fn advance_to(&mut self, slot: u64) {
        self.current_slot = self.current_slot.max(slot);
    }

    /// Feedback received in the current slot.
    pub fn reset(&mut self) {
        self.last_feedback_slot = self.current_slot;
    }
}
