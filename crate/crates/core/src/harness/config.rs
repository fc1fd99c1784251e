//! TOML experiment configuration. Unknown keys are rejected.
//!
//! ```toml
//! name = "two-point-convex"
//! horizon = 100000
//! replications = 20
//! seed = 7
//! protocol = "horizon_sweep"   # or "within_run" (default)
//!
//! [checkpoints]
//! count = 20                   # geometric grid ending at the horizon
//! first = 100
//!
//! [privacy]                    # omit for a non-private run
//! epsilon = 1.0
//! delta = 1e-5
//!
//! [environment]
//! kind = "bco_quadratic"
//! set = { kind = "ball", center = [0, 0, 0, 0, 0], radius = 1.0 }
//! target = [0.3, 0, 0, 0, 0]
//! bound = 1.0
//!
//! [algorithm]
//! kind = "two_point"
//! schedule = "constant"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blackbox::decision_set::SetShape;
use crate::contextual::Link;
use crate::error::{Error, Result};
use crate::mechanisms::PrivacyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// One run per replication; regret is read off at each checkpoint.
    #[default]
    WithinRun,
    /// An independent run per checkpoint, with the horizon set to it.
    HorizonSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub first: Option<u64>,
    /// Explicit grid; overrides `count` and `first`.
    #[serde(default)]
    pub at: Option<Vec<u64>>,
}

fn default_count() -> usize {
    20
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        Self { count: default_count(), first: None, at: None }
    }
}

impl CheckpointSpec {
    /// Strictly increasing points ending at `horizon`.
    pub fn grid(&self, horizon: u64) -> Result<Vec<u64>> {
        if let Some(at) = &self.at {
            validate_grid(at, horizon)?;
            return Ok(at.clone());
        }
        let first = self.first.unwrap_or((horizon / 1000).max(1));
        let grid = geometric_grid(first, horizon, self.count)?;
        validate_grid(&grid, horizon)?;
        Ok(grid)
    }
}

/// `count` geometrically spaced integers from `first` to `last`, rounded and
/// deduplicated.
pub fn geometric_grid(first: u64, last: u64, count: usize) -> Result<Vec<u64>> {
    if first == 0 || first > last || count == 0 {
        return Err(Error::config(format!("bad checkpoint grid: first {first}, last {last}, count {count}")));
    }
    if count == 1 {
        return Ok(vec![last]);
    }
    let ratio = (last as f64 / first as f64).ln() / (count - 1) as f64;
    let mut out: Vec<u64> = Vec::with_capacity(count);
    for i in 0..count {
        let v = if i + 1 == count { last } else { (first as f64 * (ratio * i as f64).exp()).round() as u64 };
        if out.last().is_none_or(|&p| v > p) {
            out.push(v);
        }
    }
    Ok(out)
}

fn validate_grid(grid: &[u64], horizon: u64) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 {
        return Err(Error::config("checkpoints must be positive"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("checkpoints must be strictly increasing"));
    }
    if *grid.last().unwrap() != horizon {
        return Err(Error::config("the last checkpoint must equal the horizon"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    BcoQuadratic {
        set: SetShape,
        target: Vec<f64>,
        #[serde(default = "one")]
        bound: f64,
    },
    BcoTimeVarying {
        set: SetShape,
        target: Vec<f64>,
        #[serde(default = "one")]
        bound: f64,
        drift: f64,
    },
    MabStochastic {
        means: Vec<f64>,
    },
    /// Arm 0 has mean loss `0.5 − gap`, the rest `0.5`.
    MabGap {
        arms: usize,
        gap: f64,
    },
    MabFixedGap {
        arms: usize,
        gap: f64,
    },
    MabSwitching {
        arms: usize,
        gap: f64,
    },
    Contextual {
        dim: usize,
        #[serde(default = "ten")]
        arms: usize,
        link: Link,
        /// Fixed parameter; drawn uniformly on the sphere per replication when absent.
        #[serde(default)]
        theta: Option<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `η = 1/√T`.
    #[default]
    Constant,
    /// `η = 2R / (d·sqrt(G² + σ²)·√T)`, the diameter over the estimator's
    /// second-moment bound.
    Tuned,
    /// `η_t = 1/(μt)`.
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    TwoPoint {
        #[serde(default)]
        schedule: ScheduleKind,
        /// Multiplies the default constant step `1/√T`.
        #[serde(default = "one")]
        eta_scale: f64,
        /// Strong convexity for `η_t = 1/(μt)`; defaults to the oracle's.
        #[serde(default)]
        mu: Option<f64>,
    },
    Fkm {
        #[serde(default = "one")]
        eta_scale: f64,
        #[serde(default = "one")]
        rho_scale: f64,
    },
    TsallisInf,
    LilUcb {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        params: Option<crate::blackbox::LilUcbParams>,
    },
    ContextualLinear {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    ContextualGlm {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "one")]
        kappa: f64,
        /// Rough-estimator step; `1/√T` when absent.
        #[serde(default)]
        zeta: Option<f64>,
    },
}

fn default_gamma() -> f64 {
    0.1
}

fn default_alpha() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub horizon: u64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default)]
    pub privacy: Option<PrivacyParams>,
    pub environment: EnvironmentSpec,
    pub algorithm: AlgorithmSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::config("horizon must be at least 2"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        self.checkpoints.grid(self.horizon)?;
        let ok = matches!(
            (&self.algorithm, &self.environment),
            (AlgorithmSpec::TwoPoint { .. } | AlgorithmSpec::Fkm { .. },
             EnvironmentSpec::BcoQuadratic { .. } | EnvironmentSpec::BcoTimeVarying { .. })
                | (AlgorithmSpec::TsallisInf,
                   EnvironmentSpec::MabStochastic { .. }
                       | EnvironmentSpec::MabGap { .. }
                       | EnvironmentSpec::MabFixedGap { .. }
                       | EnvironmentSpec::MabSwitching { .. })
                | (AlgorithmSpec::LilUcb { .. },
                   EnvironmentSpec::MabStochastic { .. } | EnvironmentSpec::MabGap { .. })
                | (AlgorithmSpec::ContextualLinear { .. } | AlgorithmSpec::ContextualGlm { .. },
                   EnvironmentSpec::Contextual { .. })
        );
        if !ok {
            return Err(Error::config("algorithm does not apply to this environment"));
        }
        Ok(())
    }

    pub fn checkpoint_grid(&self) -> Vec<u64> {
        self.checkpoints.grid(self.horizon).expect("validated grid")
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
