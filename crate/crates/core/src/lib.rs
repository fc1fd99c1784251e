//! Locally differentially private bandit learning.
//!
//! The crate is organised around the trust boundary between users and the
//! server: every value a learner sees has passed through a calibrated noise
//! mechanism on the user side, while the true losses stay inside the regret
//! accounting of the harness.
//!
//! - [`mechanisms`]: Gaussian and Laplace calibration plus seeded samplers.
//! - [`blackbox`]: non-private learners (FKM, two-point gradient descent,
//!   Tsallis-INF, lil'UCB) and decision-set projections.
//! - [`reductions`]: the one-point and two-point LDP wrappers around them.
//! - [`contextual`]: LDP contextual linear and generalized linear bandits.
//! - [`environments`]: synthetic MAB, convex and contextual worlds.
//! - [`harness`]: configs, seeded replications, slope fits, emission and
//!   the acceptance suites.

// `!(x <= bound)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blackbox;
pub mod contextual;
pub mod environments;
pub mod error;
pub mod harness;
pub mod mechanisms;
pub mod reductions;
pub mod rng;

pub use error::{Error, Result};
pub use mechanisms::{NoiseKind, NoiseSpec, PrivacyParams};
pub use rng::{NoiseStream, StreamKey, StreamRole};
