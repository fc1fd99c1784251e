//! Regularisers and confidence widths for the LDP contextual algorithms.
//!
//! ```text
//! Υ_t = σ√t·(4√d + 2 ln(2T/α)),   c_t = 2Υ_t
//! linear:  β_t = 2σ√(d ln T) + (√(3Υ_t) + σ√(dt/Υ_t))·d ln T
//! GLM:     β_t² = κ·(Cσ/μ)·√(dt)·ln(2T/α)
//! ```
//!
//! Round zero reuses round one (`Υ_0 := Υ_1`, `c_0 := c_1`, `β_0 := β_1`).

use serde::{Deserialize, Serialize};

use super::link::Link;
use crate::error::{Error, Result};
use crate::mechanisms::PrivacyParams;

/// `σ = 6·sqrt(2 ln(2.5/δ))/ε`.
pub fn linear_sigma(privacy: &PrivacyParams) -> f64 {
    6.0 * (2.0 * (2.5 / privacy.delta()).ln()).sqrt() / privacy.epsilon()
}

/// `σ = 6·sqrt(2 ln(3.75/δ))/ε`; the gradient report uses `C·σ`.
pub fn glm_sigma(privacy: &PrivacyParams) -> f64 {
    6.0 * (2.0 * (3.75 / privacy.delta()).ln()).sqrt() / privacy.epsilon()
}

pub fn upsilon(t: u64, d: usize, horizon: u64, alpha: f64, sigma: f64) -> f64 {
    let t = t.max(1) as f64;
    sigma * t.sqrt() * (4.0 * (d as f64).sqrt() + 2.0 * (2.0 * horizon as f64 / alpha).ln())
}

pub fn regularizer(t: u64, d: usize, horizon: u64, alpha: f64, sigma: f64) -> f64 {
    2.0 * upsilon(t, d, horizon, alpha, sigma)
}

pub fn linear_beta(t: u64, d: usize, horizon: u64, alpha: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let ups = upsilon(t, d, horizon, alpha, sigma);
    let tf = t.max(1) as f64;
    let df = d as f64;
    let dlog = df * (horizon as f64).ln();
    2.0 * sigma * dlog.sqrt() + ((3.0 * ups).sqrt() + sigma * (df * tf / ups).sqrt()) * dlog
}

pub fn glm_beta(t: u64, d: usize, horizon: u64, alpha: f64, kappa: f64, link: Link, sigma: f64) -> f64 {
    let log_factor = (2.0 * horizon as f64 / alpha).ln();
    glm_beta_with_log(t, d, kappa, link.value_bound(), link.curvature(), sigma, log_factor)
}

/// GLM width with explicit link constants `C`, `μ` and logarithmic factor.
pub fn glm_beta_with_log(
    t: u64,
    d: usize,
    kappa: f64,
    value_bound: f64,
    curvature: f64,
    sigma: f64,
    log_factor: f64,
) -> f64 {
    let t = t.max(1) as f64;
    (kappa * (value_bound * sigma / curvature) * (d as f64 * t).sqrt() * log_factor).sqrt()
}

/// Self-normalised width of non-private ridge regression:
/// `(R·sqrt(2 ln(1/α) + d ln(1 + t/(λd))) + √λ·S) / μ`.
pub fn baseline_beta(t: u64, d: usize, alpha: f64, lambda: f64, noise: f64, norm: f64, curvature: f64) -> f64 {
    let df = d as f64;
    let inner = 2.0 * (1.0 / alpha).ln() + df * (1.0 + t as f64 / (lambda * df)).ln();
    (noise * inner.sqrt() + lambda.sqrt() * norm) / curvature
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Width {
    Linear,
    Glm { kappa: f64 },
    /// Fixed ridge `λ` with the self-normalised width; used without privacy.
    Baseline { lambda: f64, noise: f64, norm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceSchedule {
    d: usize,
    horizon: u64,
    alpha: f64,
    sigma: f64,
    link: Link,
    width: Width,
}

impl ConfidenceSchedule {
    pub fn new(d: usize, horizon: u64, alpha: f64, sigma: f64, link: Link, width: Width) -> Result<Self> {
        if d == 0 || horizon < 2 {
            return Err(Error::config("confidence schedule needs d ≥ 1 and T ≥ 2"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::config("sigma must be nonnegative"));
        }
        match width {
            Width::Glm { kappa } if !(kappa > 0.0) => {
                return Err(Error::config("kappa must be positive"));
            }
            Width::Baseline { lambda, noise, norm } if !(lambda > 0.0 && noise >= 0.0 && norm >= 0.0) => {
                return Err(Error::config("baseline width needs λ > 0 and nonnegative R, S"));
            }
            Width::Linear | Width::Glm { .. } if sigma == 0.0 => {
                return Err(Error::config("private widths need σ > 0; use the baseline width"));
            }
            _ => {}
        }
        Ok(Self { d, horizon, alpha, sigma, link, width })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn upsilon(&self, t: u64) -> f64 {
        upsilon(t, self.d, self.horizon, self.alpha, self.sigma)
    }

    /// Ridge added to the noisy gram sum after round `t`.
    pub fn c(&self, t: u64) -> f64 {
        match self.width {
            Width::Baseline { lambda, .. } => lambda,
            _ => 2.0 * self.upsilon(t),
        }
    }

    pub fn beta(&self, t: u64) -> f64 {
        match self.width {
            Width::Linear => linear_beta(t, self.d, self.horizon, self.alpha, self.sigma),
            Width::Glm { kappa } => glm_beta(t, self.d, self.horizon, self.alpha, kappa, self.link, self.sigma),
            Width::Baseline { lambda, noise, norm } => {
                baseline_beta(t, self.d, self.alpha, lambda, noise, norm, self.link.curvature())
            }
        }
    }

    /// Width used when choosing the action of round `t`: `β_t` for the
    /// linear algorithm, `β_{t−1}` for the GLM algorithm.
    pub fn selection_beta(&self, t: u64) -> f64 {
        match self.width {
            Width::Glm { .. } => self.beta(t.saturating_sub(1)),
            _ => self.beta(t),
        }
    }
}
