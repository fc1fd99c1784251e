//! Tsallis-INF (1/2-Tsallis entropy regulariser) with importance-weighted
//! loss estimates and learning rate `η_t = 2/√t`.

use super::OnePointLearner;
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

const MAX_BISECTION: usize = 200;
const ROOT_TOL: f64 = 1e-12;
/// Accepted residual when bisection exhausts floating-point resolution.
const FALLBACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TsallisInf {
    cumulative: Vec<f64>,
    round: u64,
    loss_low: f64,
    loss_width: f64,
    last: Option<(usize, f64)>,
    last_weights: Vec<f64>,
}

impl TsallisInf {
    /// Losses in `[0, 1]`.
    pub fn new(arms: usize) -> Result<Self> {
        Self::with_loss_range(arms, 0.0, 1.0)
    }

    /// Observed losses are mapped affinely from `[low, high]` onto `[0, 1]`.
    /// Values outside the range are not clipped.
    pub fn with_loss_range(arms: usize, low: f64, high: f64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::config("Tsallis-INF needs at least one arm"));
        }
        if !(low.is_finite() && high.is_finite() && high > low) {
            return Err(Error::config(format!("invalid loss range [{low}, {high}]")));
        }
        Ok(Self {
            cumulative: vec![0.0; arms],
            round: 0,
            loss_low: low,
            loss_width: high - low,
            last: None,
            last_weights: Vec::new(),
        })
    }

    pub fn arms(&self) -> usize {
        self.cumulative.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn cumulative_estimates(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn last_sample(&self) -> Option<(usize, f64)> {
        self.last
    }

    /// Distribution used by the most recent `sample`.
    pub fn last_weights(&self) -> &[f64] {
        &self.last_weights
    }

    pub fn learning_rate(t: u64) -> f64 {
        2.0 / (t.max(1) as f64).sqrt()
    }

    /// Sampling distribution for the upcoming round.
    pub fn weights(&self) -> Result<Vec<f64>> {
        tsallis_weights(&self.cumulative, Self::learning_rate(self.round + 1))
    }

    pub fn sample(&mut self, rng: &mut NoiseStream) -> Result<(usize, f64)> {
        let w = self.weights()?;
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut arm = w.len() - 1;
        for (i, wi) in w.iter().enumerate() {
            acc += wi;
            if u < acc {
                arm = i;
                break;
            }
        }
        let p = w[arm];
        self.last = Some((arm, p));
        self.last_weights = w;
        Ok((arm, p))
    }

    pub fn update(&mut self, arm: usize, observed_loss: f64, probability: f64) -> Result<()> {
        if !(probability > 0.0 && probability <= 1.0 + 1e-12) {
            return Err(Error::contract(format!("sampling probability {probability} not in (0, 1]")));
        }
        if arm >= self.cumulative.len() {
            return Err(Error::contract(format!("arm {arm} out of range")));
        }
        if !observed_loss.is_finite() {
            return Err(Error::Numerical("non-finite loss".into()));
        }
        let scaled = (observed_loss - self.loss_low) / self.loss_width;
        self.cumulative[arm] += scaled / probability;
        self.round += 1;
        self.last = None;
        Ok(())
    }
}

impl OnePointLearner for TsallisInf {
    type Action = usize;

    fn act(&mut self, rng: &mut NoiseStream) -> Result<usize> {
        Ok(self.sample(rng)?.0)
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        let (arm, p) = self
            .last
            .ok_or_else(|| Error::contract("Tsallis-INF feedback without a sampled arm"))?;
        self.update(arm, feedback, p)
    }
}

/// Weights `4/(η²(L̂_i − z)²)` with `z < min L̂` chosen by bisection so they
/// sum to one, then renormalised to absorb the residual.
pub fn tsallis_weights(cumulative: &[f64], eta: f64) -> Result<Vec<f64>> {
    let k = cumulative.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let min = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    let mass = |z: f64| -> f64 {
        cumulative
            .iter()
            .map(|l| {
                let gap = eta * (l - z);
                4.0 / (gap * gap)
            })
            .sum()
    };
    let mut lo = min - 2.0 * k as f64 / eta;
    let mut hi = min;
    let mut z = lo;
    let mut residual = mass(lo) - 1.0;
    if residual.abs() > ROOT_TOL {
        for _ in 0..MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let r = mass(mid) - 1.0;
            z = mid;
            residual = r;
            if r.abs() <= ROOT_TOL {
                break;
            }
            if r > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    if !(residual.abs() <= FALLBACK_TOL) {
        return Err(Error::Numerical(format!(
            "Tsallis normaliser did not converge: bracket [{lo}, {hi}], residual {residual}"
        )));
    }
    let mut w: Vec<f64> = cumulative
        .iter()
        .map(|l| {
            let gap = eta * (l - z);
            4.0 / (gap * gap)
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}
