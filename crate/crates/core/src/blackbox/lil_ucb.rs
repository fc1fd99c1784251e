//! lil'UCB for fixed-confidence best-arm identification (reward framing).

use serde::{Deserialize, Serialize};

use super::OnePointLearner;
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LilUcbParams {
    pub epsilon: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Target failure probability.
    pub gamma: f64,
    /// Sub-Gaussian variance proxy of the observed rewards.
    pub variance_proxy: f64,
    /// Hard cap on total pulls; reaching it stops with the empirical best arm.
    pub max_pulls: u64,
}

impl Default for LilUcbParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            beta: 0.5,
            lambda: 9.0,
            gamma: 0.1,
            variance_proxy: 0.25,
            max_pulls: 10_000_000,
        }
    }
}

impl LilUcbParams {
    fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.beta >= 0.0
            && self.lambda > 0.0
            && self.gamma > 0.0
            && self.gamma < 1.0
            && self.variance_proxy > 0.0
            && self.variance_proxy.is_finite()
            && self.max_pulls > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid lil'UCB parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LilUcbDecision {
    Pull(usize),
    Stop { best: usize, capped: bool },
}

#[derive(Debug, Clone)]
pub struct LilUcb {
    counts: Vec<u64>,
    sums: Vec<f64>,
    params: LilUcbParams,
    stopped: Option<(usize, bool)>,
    pending: Option<usize>,
}

impl LilUcb {
    pub fn new(arms: usize, params: LilUcbParams) -> Result<Self> {
        if arms == 0 {
            return Err(Error::config("lil'UCB needs at least one arm"));
        }
        params.validate()?;
        let mut s = Self {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            params,
            stopped: None,
            pending: None,
        };
        if arms == 1 {
            s.stopped = Some((0, false));
        }
        Ok(s)
    }

    pub fn params(&self) -> &LilUcbParams {
        &self.params
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_pulls(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn means(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped.is_some()
    }

    /// Confidence radius after `n` pulls.
    pub fn width(&self, n: u64) -> f64 {
        let p = &self.params;
        let n = n as f64;
        let inner = ((1.0 + p.epsilon) * n).max(std::f64::consts::E).ln();
        (1.0 + p.beta)
            * (1.0 + p.epsilon.sqrt())
            * (2.0 * p.variance_proxy * (1.0 + p.epsilon) * (inner / p.gamma).ln() / n).sqrt()
    }

    fn empirical_best(&self) -> usize {
        argmax(&self.means())
    }

    pub fn step(&mut self) -> LilUcbDecision {
        if let Some((best, capped)) = self.stopped {
            return LilUcbDecision::Stop { best, capped };
        }
        if let Some(arm) = self.counts.iter().position(|&n| n == 0) {
            self.pending = Some(arm);
            return LilUcbDecision::Pull(arm);
        }
        let total = self.total_pulls();
        for (i, &n) in self.counts.iter().enumerate() {
            if n as f64 >= 1.0 + self.params.lambda * (total - n) as f64 {
                self.stopped = Some((i, false));
                return LilUcbDecision::Stop { best: i, capped: false };
            }
        }
        if total >= self.params.max_pulls {
            let best = self.empirical_best();
            self.stopped = Some((best, true));
            return LilUcbDecision::Stop { best, capped: true };
        }
        let index: Vec<f64> = self
            .counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| s / n as f64 + self.width(n))
            .collect();
        let arm = argmax(&index);
        self.pending = Some(arm);
        LilUcbDecision::Pull(arm)
    }

    pub fn observe_reward(&mut self, arm: usize, reward: f64) -> Result<()> {
        if self.pending != Some(arm) {
            return Err(Error::contract(format!("reward for arm {arm} that was not requested")));
        }
        if !reward.is_finite() {
            return Err(Error::Numerical("non-finite reward".into()));
        }
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.pending = None;
        Ok(())
    }
}

impl OnePointLearner for LilUcb {
    type Action = LilUcbDecision;

    fn act(&mut self, _rng: &mut NoiseStream) -> Result<LilUcbDecision> {
        Ok(self.step())
    }

    /// Feedback is a loss; it is negated into a reward.
    fn observe(&mut self, feedback: f64) -> Result<()> {
        let arm = self
            .pending
            .ok_or_else(|| Error::contract("lil'UCB feedback without a pending pull"))?;
        self.observe_reward(arm, -feedback)
    }
}

/// Index of the largest value, ties to the lowest index.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arm_stops_immediately() {
        let mut l = LilUcb::new(1, LilUcbParams::default()).unwrap();
        assert_eq!(l.step(), LilUcbDecision::Stop { best: 0, capped: false });
        assert_eq!(l.total_pulls(), 0);
    }

    #[test]
    fn deterministic_instance_identified() {
        let mut l = LilUcb::new(2, LilUcbParams::default()).unwrap();
        let rewards = [1.0, 0.0];
        let best = loop {
            match l.step() {
                LilUcbDecision::Pull(a) => l.observe_reward(a, rewards[a]).unwrap(),
                LilUcbDecision::Stop { best, capped } => {
                    assert!(!capped);
                    break best;
                }
            }
        };
        assert_eq!(best, 0);
        assert!(l.is_stopped());
        assert!(matches!(l.step(), LilUcbDecision::Stop { best: 0, .. }));
    }

    #[test]
    fn cap_stops_with_empirical_best() {
        let params = LilUcbParams { max_pulls: 10, ..Default::default() };
        let mut l = LilUcb::new(3, params).unwrap();
        let rewards = [0.5, 0.5, 0.6];
        let decision = loop {
            match l.step() {
                LilUcbDecision::Pull(a) => l.observe_reward(a, rewards[a]).unwrap(),
                stop => break stop,
            }
        };
        assert_eq!(decision, LilUcbDecision::Stop { best: 2, capped: true });
        assert_eq!(l.total_pulls(), 10);
    }

    #[test]
    fn width_scales_with_proxy() {
        let a = LilUcb::new(2, LilUcbParams::default()).unwrap();
        let b = LilUcb::new(2, LilUcbParams { variance_proxy: 1.0, ..Default::default() }).unwrap();
        for n in [1, 10, 1000] {
            assert!((b.width(n) / a.width(n) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unsolicited_reward_rejected() {
        let mut l = LilUcb::new(2, LilUcbParams::default()).unwrap();
        assert!(l.observe_reward(0, 1.0).is_err());
    }
}
