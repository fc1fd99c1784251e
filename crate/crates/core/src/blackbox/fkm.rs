//! One-point bandit convex optimisation with the sphere-sampling gradient
//! estimator `(d/ρ)·f(y + ρu)·u`.

use nalgebra::DVector;

use super::decision_set::{project, DecisionSet};
use super::OnePointLearner;
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

/// Tolerance for the per-round feasibility assertion on query points.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkmParams {
    pub eta: f64,
    pub rho: f64,
    pub xi: f64,
}

impl FkmParams {
    /// Horizon-tuned defaults: `ρ = T^{-1/4}·r`, `ξ = ρ/r` and
    /// `η = R / ((d·B_eff/ρ)·√T)`, where `B_eff` bounds the observed feedback.
    pub fn defaults(set: &DecisionSet, horizon: u64, effective_bound: f64) -> Result<Self> {
        Self::scaled(set, horizon, effective_bound, 1.0, 1.0)
    }

    /// Defaults with multiplicative knobs on `η` and `ρ`.
    pub fn scaled(
        set: &DecisionSet,
        horizon: u64,
        effective_bound: f64,
        eta_scale: f64,
        rho_scale: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if !(effective_bound.is_finite() && effective_bound > 0.0) {
            return Err(Error::config("effective loss bound must be positive"));
        }
        if !(eta_scale > 0.0 && rho_scale > 0.0 && rho_scale <= 1.0) {
            return Err(Error::config("eta_scale must be positive and rho_scale in (0, 1]"));
        }
        let t = horizon as f64;
        let r = set.inner_radius();
        let d = set.dim() as f64;
        let rho = rho_scale * r * t.powf(-0.25);
        let xi = rho / r;
        let eta = eta_scale * set.outer_radius() / ((d * effective_bound / rho) * t.sqrt());
        Ok(Self { eta, rho, xi })
    }
}

#[derive(Debug, Clone)]
pub struct FkmState {
    set: DecisionSet,
    y: DVector<f64>,
    params: FkmParams,
    round: u64,
    pending: Option<DVector<f64>>,
}

impl FkmState {
    /// Starts at the origin, which lies in every `(1 − ξ)·X`.
    pub fn new(set: DecisionSet, params: FkmParams) -> Result<Self> {
        check_exploration(&set, params.rho, params.xi)?;
        if !(params.eta.is_finite() && params.eta > 0.0) {
            return Err(Error::config(format!("step size must be positive, got {}", params.eta)));
        }
        let y = DVector::zeros(set.dim());
        Ok(Self { set, y, params, round: 0, pending: None })
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn params(&self) -> FkmParams {
        self.params
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn set(&self) -> &DecisionSet {
        &self.set
    }

    /// Draw `u` and emit `x = y + ρu`. Fails if a previous query is unanswered.
    pub fn query(&mut self, rng: &mut NoiseStream) -> Result<DVector<f64>> {
        if self.pending.is_some() {
            return Err(Error::contract("FKM query issued before previous feedback"));
        }
        let u = rng.unit_vector(self.set.dim());
        self.query_with_direction(u)
    }

    pub fn query_with_direction(&mut self, u: DVector<f64>) -> Result<DVector<f64>> {
        let x = &self.y + &u * self.params.rho;
        if !self.set.contains(&x, FEASIBILITY_TOL) {
            return Err(Error::config("FKM query left the decision set; rho too large"));
        }
        self.pending = Some(u);
        self.round += 1;
        Ok(x)
    }

    /// `g̃ = (d/ρ)·loss·u` for the pending query.
    pub fn estimate(&self, observed_loss: f64) -> Result<DVector<f64>> {
        let u = self
            .pending
            .as_ref()
            .ok_or_else(|| Error::contract("FKM feedback without a pending query"))?;
        if !observed_loss.is_finite() {
            return Err(Error::Numerical("non-finite FKM feedback".into()));
        }
        let d = self.set.dim() as f64;
        Ok(u * ((d / self.params.rho) * observed_loss))
    }

    /// Gradient step with the estimator for the last query.
    pub fn update(&mut self, observed_loss: f64) -> Result<()> {
        let g = self.estimate(observed_loss)?;
        self.pending = None;
        let moved = &self.y - g * self.params.eta;
        self.y = project(&moved, &self.set, self.params.xi);
        Ok(())
    }

    /// Apply feedback for the previous query (if any), then issue the next one.
    pub fn step(&mut self, observed_loss: Option<f64>, rng: &mut NoiseStream) -> Result<DVector<f64>> {
        if let Some(loss) = observed_loss {
            self.update(loss)?;
        }
        self.query(rng)
    }
}

impl OnePointLearner for FkmState {
    type Action = DVector<f64>;

    fn act(&mut self, rng: &mut NoiseStream) -> Result<DVector<f64>> {
        self.query(rng)
    }

    fn observe(&mut self, feedback: f64) -> Result<()> {
        self.update(feedback)
    }
}

/// `y ∈ (1 − ξ)X` and `ρ ≤ ξ·r` together keep `y + ρu` inside `X`.
pub(crate) fn check_exploration(set: &DecisionSet, rho: f64, xi: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::config(format!("exploration radius must be positive, got {rho}")));
    }
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::config(format!("shrink must lie in [0, 1), got {xi}")));
    }
    let limit = xi * set.inner_radius();
    if rho > limit * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "exploration radius {rho} exceeds shrink margin {limit}; queries could leave the set"
        )));
    }
    Ok(())
}
