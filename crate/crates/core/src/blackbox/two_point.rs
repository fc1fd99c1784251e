//! Projected gradient descent driven by the two-query estimator
//! `(d/2ρ)·(f(y + ρu) − f(y − ρu))·u`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::decision_set::{project, DecisionSet};
use super::fkm::{check_exploration, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant { eta: f64 },
    /// `η_t = 1/(μ t)`.
    StronglyConvex { mu: f64 },
}

impl StepSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::StronglyConvex { mu } => 1.0 / (mu * t as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::StronglyConvex { mu } => mu,
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!("step schedule parameter must be positive, got {v}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointParams {
    pub schedule: StepSchedule,
    pub rho: f64,
    pub xi: f64,
}

impl TwoPointParams {
    /// `η = 1/√T`, `ρ = ln T / T`, `ξ = ρ/r`.
    pub fn defaults(set: &DecisionSet, horizon: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::config("two-point defaults need a horizon of at least 2"));
        }
        let t = horizon as f64;
        let rho = t.ln() / t;
        Ok(Self {
            schedule: StepSchedule::Constant { eta: 1.0 / t.sqrt() },
            rho,
            xi: rho / set.inner_radius(),
        })
    }

    /// Constant step `2R / (G̃√T)` with `G̃ = d·sqrt(G² + σ²)` bounding the
    /// root second moment of the estimator when the value difference carries
    /// `N(0, 4ρ²σ²)` noise.
    pub fn tuned_step(set: &DecisionSet, horizon: u64, lipschitz: f64, sigma: f64) -> f64 {
        let g = set.dim() as f64 * (lipschitz * lipschitz + sigma * sigma).sqrt();
        2.0 * set.outer_radius() / (g * (horizon as f64).sqrt())
    }

    /// Same exploration as [`defaults`](Self::defaults) with `η_t = 1/(μ t)`.
    pub fn strongly_convex(set: &DecisionSet, horizon: u64, mu: f64) -> Result<Self> {
        Ok(Self { schedule: StepSchedule::StronglyConvex { mu }, ..Self::defaults(set, horizon)? })
    }
}

#[derive(Debug, Clone)]
pub struct TwoPointState {
    set: DecisionSet,
    y: DVector<f64>,
    params: TwoPointParams,
    round: u64,
    last_direction: Option<DVector<f64>>,
    pending: bool,
}

impl TwoPointState {
    pub fn new(set: DecisionSet, params: TwoPointParams) -> Result<Self> {
        check_exploration(&set, params.rho, params.xi)?;
        params.schedule.validate()?;
        let y = DVector::zeros(set.dim());
        Ok(Self { set, y, params, round: 0, last_direction: None, pending: false })
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn params(&self) -> TwoPointParams {
        self.params
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn set(&self) -> &DecisionSet {
        &self.set
    }

    pub fn last_direction(&self) -> Option<&DVector<f64>> {
        self.last_direction.as_ref()
    }

    pub fn queries(&mut self, rng: &mut NoiseStream) -> Result<(DVector<f64>, DVector<f64>)> {
        let u = rng.unit_vector(self.set.dim());
        self.queries_with_direction(u)
    }

    pub fn queries_with_direction(&mut self, u: DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if self.pending {
            return Err(Error::contract("two-point queries issued before previous update"));
        }
        let step = &u * self.params.rho;
        let x1 = &self.y + &step;
        let x2 = &self.y - &step;
        if !(self.set.contains(&x1, FEASIBILITY_TOL) && self.set.contains(&x2, FEASIBILITY_TOL)) {
            return Err(Error::config("two-point query left the decision set; rho too large"));
        }
        self.last_direction = Some(u);
        self.pending = true;
        self.round += 1;
        Ok((x1, x2))
    }

    /// `g̃ = (d/2ρ)·diff·u` for the last recorded direction.
    pub fn estimate(&self, value_difference: f64) -> Result<DVector<f64>> {
        let u = self
            .last_direction
            .as_ref()
            .ok_or_else(|| Error::contract("gradient estimate without a recorded direction"))?;
        let d = self.set.dim() as f64;
        Ok(u * (d / (2.0 * self.params.rho) * value_difference))
    }

    pub fn update(&mut self, value_difference: f64) -> Result<()> {
        if !self.pending {
            return Err(Error::contract("two-point update without pending queries"));
        }
        if !value_difference.is_finite() {
            return Err(Error::Numerical("non-finite value difference".into()));
        }
        let g = self.estimate(value_difference)?;
        let eta = self.params.schedule.at(self.round);
        let moved = &self.y - g * eta;
        self.y = project(&moved, &self.set, self.params.xi);
        self.pending = false;
        Ok(())
    }
}
