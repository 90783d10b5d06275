//! The bilevel bandit controller.
//!
//! * [`ContextualDelayedUcb`] picks a (modulation, power) pair every slot,
//!   keyed on the quantized SNR report and its age, and learns from a
//!   delayed per-interval reward.
//! * [`FeedbackMab`] picks how many slots to wait before the next feedback
//!   exchange.
//! * [`AoiClock`] tracks how old the transmitter's channel knowledge is.
//!
//! None of these know about the simulator; they are plain state machines.

mod aoi;
mod context;
mod inner;
mod outer;

pub use aoi::AoiClock;
pub use context::{
    quantize_aoi, quantize_snr, Action, AoiClass, Context, Modulation, PowerLevel, SnrClass,
};
pub use inner::{ArmTable, ContextualDelayedUcb, PendingEntry, PendingInterval};
pub use outer::FeedbackMab;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BanditError {
    #[error("action set is empty")]
    EmptyActionSet,
    #[error("interval menu is empty")]
    EmptyIntervalMenu,
    #[error("exploration parameter must be positive and finite, got {0}")]
    InvalidExploration(f64),
    #[error("theta must lie in [0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("feedback cost must be finite and nonnegative, got {0}")]
    InvalidFeedbackCost(f64),
    #[error("SNR must be finite, got {0}")]
    NonFiniteSnr(f64),
    #[error("reward must be finite and nonnegative, got {0}")]
    InvalidReward(f64),
    #[error("no pending actions to credit")]
    EmptyPending,
    #[error("action {0} is not in the menu")]
    UnknownAction(Action),
    #[error("interval {0} min is not in the menu")]
    UnknownInterval(u32),
    #[error("interval {0} min was never selected")]
    IntervalNotSelected(u32),
    #[error("cannot parse action {0:?}; expected <bpsk|psk8|psk16>:<low|medium|high>")]
    BadAction(String),
}
