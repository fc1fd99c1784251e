//! Contextual worlds: `K` arms drawn uniformly in the unit ball each round,
//! rewards `y = g(xᵀθ*) + η` with bounded zero-mean noise.

use nalgebra::DVector;

use crate::contextual::Link;
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

#[derive(Debug, Clone)]
pub struct ContextualEnvironment {
    theta_star: DVector<f64>,
    arms: usize,
    link: Link,
}

/// One round's arm set with its ground truth.
#[derive(Debug, Clone)]
pub struct ContextRound {
    pub arms: Vec<DVector<f64>>,
    /// `g(xᵀθ*)` per arm.
    pub expected: Vec<f64>,
    pub best: usize,
}

impl ContextRound {
    /// `g(x*ᵀθ*) − g(xᵀθ*)`.
    pub fn regret(&self, arm: usize) -> f64 {
        self.expected[self.best] - self.expected[arm]
    }
}

impl ContextualEnvironment {
    pub fn new(theta_star: DVector<f64>, arms: usize, link: Link) -> Result<Self> {
        if theta_star.is_empty() || arms == 0 {
            return Err(Error::config("contextual world needs d ≥ 1 and K ≥ 1"));
        }
        if theta_star.norm() > 1.0 + 1e-12 {
            return Err(Error::config("θ* must lie in the unit ball"));
        }
        Ok(Self { theta_star, arms, link })
    }

    /// `θ*` uniform on the unit sphere.
    pub fn random_theta(d: usize, arms: usize, link: Link, rng: &mut NoiseStream) -> Result<Self> {
        Self::new(rng.unit_vector(d), arms, link)
    }

    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn round_from_arms(&self, arms: Vec<DVector<f64>>) -> Result<ContextRound> {
        if arms.is_empty() || arms.iter().any(|x| x.len() != self.dim() || x.norm() > 1.0 + 1e-12) {
            return Err(Error::contract("arms must be nonempty vectors in the unit ball"));
        }
        let expected: Vec<f64> = arms.iter().map(|x| self.link.g(x.dot(&self.theta_star))).collect();
        let best = crate::blackbox::lil_ucb::argmax(&expected);
        Ok(ContextRound { arms, expected, best })
    }

    pub fn step(&self, rng: &mut NoiseStream) -> Result<ContextRound> {
        let arms = (0..self.arms).map(|_| rng.unit_ball_point(self.dim())).collect();
        self.round_from_arms(arms)
    }

    /// Reward of `arm` with fresh noise: uniform on `[−1, 1]` for the
    /// identity link, the Bernoulli residual for the logistic link.
    pub fn reward(&self, round: &ContextRound, arm: usize, rng: &mut NoiseStream) -> Result<f64> {
        let mean = *round
            .expected
            .get(arm)
            .ok_or_else(|| Error::contract(format!("arm {arm} out of range")))?;
        Ok(match self.link {
            Link::Identity => mean + (2.0 * rng.uniform() - 1.0),
            Link::Logistic => {
                if rng.bernoulli(mean) {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}
