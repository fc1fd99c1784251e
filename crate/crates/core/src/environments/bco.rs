//! Convex loss oracles for bandit convex optimisation:
//!
//! ```text
//! f_t(x) = s·(‖x − x*‖² + a_tᵀx)
//! ```
//!
//! with `a_t = 0` for the fixed quadratic and `‖a_t‖ ≤ a` drawn once per
//! round otherwise. The scale `s` is chosen so `|f_t| ≤ B` on `X`.

use nalgebra::DVector;

use crate::blackbox::{project, DecisionSet};
use crate::error::{Error, Result};
use crate::rng::NoiseStream;

const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BcoOracle {
    set: DecisionSet,
    target: DVector<f64>,
    scale: f64,
    drift: f64,
    /// Prefix sums `Σ_{s ≤ t} a_s`, row `t` for `t = 0..=T`, row-major.
    drift_prefix: Option<Vec<f64>>,
    bound: f64,
    lipschitz: f64,
}

impl BcoOracle {
    pub fn fixed_quadratic(set: DecisionSet, target: DVector<f64>, bound: f64) -> Result<Self> {
        Self::build(set, target, bound, 0.0, None)
    }

    pub fn time_varying(
        set: DecisionSet,
        target: DVector<f64>,
        bound: f64,
        drift: f64,
        horizon: u64,
        rng: &mut NoiseStream,
    ) -> Result<Self> {
        if !(drift.is_finite() && drift >= 0.0) {
            return Err(Error::config("drift magnitude must be nonnegative"));
        }
        let d = set.dim();
        let mut prefix = vec![0.0; d * (horizon as usize + 1)];
        for t in 1..=horizon as usize {
            let a = rng.unit_ball_point(d) * drift;
            for i in 0..d {
                prefix[t * d + i] = prefix[(t - 1) * d + i] + a[i];
            }
        }
        Self::build(set, target, bound, drift, Some(prefix))
    }

    fn build(
        set: DecisionSet,
        target: DVector<f64>,
        bound: f64,
        drift: f64,
        drift_prefix: Option<Vec<f64>>,
    ) -> Result<Self> {
        if target.len() != set.dim() {
            return Err(Error::config("target dimension does not match the decision set"));
        }
        if !set.contains(&target, 0.0) {
            return Err(Error::config("quadratic minimiser must lie in the decision set"));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::config("loss bound must be positive"));
        }
        let diameter = set.max_distance_from(&target);
        let r = set.outer_radius();
        let scale = bound / (diameter * diameter + drift * r);
        let lipschitz = scale * (2.0 * diameter + drift);
        Ok(Self { set, target, scale, drift, drift_prefix, bound, lipschitz })
    }

    pub fn set(&self) -> &DecisionSet {
        &self.set
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `μ = 2s`.
    pub fn strong_convexity(&self) -> f64 {
        2.0 * self.scale
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn horizon(&self) -> Option<u64> {
        self.drift_prefix.as_ref().map(|p| (p.len() / self.set.dim() - 1) as u64)
    }

    fn prefix(&self, t: u64) -> Result<Option<DVector<f64>>> {
        let Some(p) = &self.drift_prefix else { return Ok(None) };
        let d = self.set.dim();
        let h = (p.len() / d - 1) as u64;
        if t > h {
            return Err(Error::contract(format!("round {t} beyond oracle horizon {h}")));
        }
        let t = t as usize;
        Ok(Some(DVector::from_column_slice(&p[t * d..(t + 1) * d])))
    }

    /// Drift vector `a_t` of round `t ≥ 1`.
    pub fn drift_at(&self, t: u64) -> Result<DVector<f64>> {
        match (self.prefix(t)?, t) {
            (Some(hi), t) if t >= 1 => Ok(hi - self.prefix(t - 1)?.unwrap_or_default()),
            (Some(_), _) => Err(Error::contract("rounds are numbered from 1")),
            (None, _) => Ok(DVector::zeros(self.set.dim())),
        }
    }

    /// `f_t(x)` for a feasible `x`.
    pub fn value(&self, t: u64, x: &DVector<f64>) -> Result<f64> {
        if !self.set.contains(x, MEMBERSHIP_TOL) {
            return Err(Error::contract("loss queried outside the decision set"));
        }
        let quad = (x - &self.target).norm_squared();
        let lin = if self.drift_prefix.is_some() { self.drift_at(t)?.dot(x) } else { 0.0 };
        Ok(self.scale * (quad + lin))
    }

    /// Minimiser and minimum of the fixed quadratic part.
    pub fn optimum(&self) -> (DVector<f64>, f64) {
        (self.target.clone(), 0.0)
    }

    /// Minimiser and value of `Σ_{s ≤ t} f_s` over `X`. The objective is an
    /// isotropic quadratic, so its constrained minimiser is the projection
    /// of the unconstrained one.
    pub fn hindsight(&self, t: u64) -> Result<(DVector<f64>, f64)> {
        let Some(sum) = self.prefix(t)? else {
            return Ok((self.target.clone(), 0.0));
        };
        if t == 0 {
            return Ok((self.target.clone(), 0.0));
        }
        let n = t as f64;
        let free = &self.target - &sum / (2.0 * n);
        let x = project(&free, &self.set, 0.0);
        let value = self.scale * (n * (&x - &self.target).norm_squared() + sum.dot(&x));
        Ok((x, value))
    }
}
