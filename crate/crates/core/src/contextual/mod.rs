//! LDP contextual bandits with linear and generalized linear rewards.
//!
//! Users send a perturbed gram term `x xᵀ + B_t`, a perturbed moment and,
//! for GLM rewards, a perturbed loss gradient. The server keeps running sums
//! and plays the optimistic index `⟨θ̃, x⟩ + β‖x‖_{(V̄ + cI)⁻¹}`.

pub mod bandit;
pub mod confidence;
pub mod link;
pub mod server;

pub use bandit::{ellipsoid_coverage, write_trajectory, ContextualLearner, Estimator, RoundRecord};
pub use confidence::{ConfidenceSchedule, Width};
pub use link::Link;
pub use server::{LocalReport, ReportStreams, ServerState};
