//! Adaptive modulation, power and feedback-interval control for underwater
//! acoustic sensor networks.
//!
//! * [`bandit`]: the contextual delayed UCB over (modulation, power), the
//!   feedback-interval bandit and the age-of-information clock.
//! * [`channel`]: link budget, noise, shadowing and frame error model.
//! * [`netsim`]: discrete-event simulator of a tree network driven by the
//!   controllers.
//! * [`experiment`]: scenario files, replications, the genie oracle and CSV
//!   output.

pub mod bandit;
pub mod channel;
pub mod experiment;
pub mod netsim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/bandits.md")]
    mod bandits {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
