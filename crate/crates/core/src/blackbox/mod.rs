//! Non-private black-box learners consumed by the LDP reductions.
//!
//! The one-point learners (FKM, Tsallis-INF, lil'UCB) implement
//! [`OnePointLearner`]: they propose an action, then receive a single scalar
//! feedback for it. They never learn whether that feedback was perturbed.

pub mod decision_set;
pub mod fkm;
pub mod lil_ucb;
pub mod tsallis;
pub mod two_point;

pub use decision_set::{project, DecisionSet};
pub use fkm::{FkmParams, FkmState};
pub use lil_ucb::{LilUcb, LilUcbDecision, LilUcbParams};
pub use tsallis::TsallisInf;
pub use two_point::{StepSchedule, TwoPointParams, TwoPointState};

use crate::error::Result;
use crate::rng::NoiseStream;

/// A bandit learner that plays one action per round and observes one scalar.
pub trait OnePointLearner {
    type Action: Clone + std::fmt::Debug;

    /// Choose the action for the current round.
    fn act(&mut self, rng: &mut NoiseStream) -> Result<Self::Action>;

    /// Consume the feedback (a loss) for the action returned by the last `act`.
    fn observe(&mut self, feedback: f64) -> Result<()>;
}
