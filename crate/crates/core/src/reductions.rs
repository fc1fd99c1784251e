//! One-point and two-point LDP reductions around non-private learners.
//!
//! The user side holds the true loss and releases only a perturbed value.
//! [`TrueLoss`] and [`Perturbed`] keep the two apart in the type system: the
//! learner is fed from `Perturbed` values, regret is accumulated from
//! `TrueLoss` values, and neither converts into the other.

use nalgebra::DVector;

use crate::blackbox::{
    DecisionSet, LilUcb, LilUcbDecision, LilUcbParams, OnePointLearner, TsallisInf, TwoPointParams,
    TwoPointState,
};
use crate::error::{Error, Result};
use crate::mechanisms::{calibrate_gaussian, calibrate_laplace, NoiseKind, NoiseSpec, PrivacyParams};
use crate::rng::NoiseStream;

/// Relative slack on declared bounds, absorbing rounding in loss evaluation.
const BOUND_SLACK: f64 = 1e-9;

/// A loss as experienced by the user. Only the regret accumulator reads it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueLoss(f64);

impl TrueLoss {
    pub fn new(value: f64) -> Self {
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A value that has left the user after perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbed(f64);

impl Perturbed {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnePointReductionConfig {
    loss_bound: f64,
    noise: NoiseSpec,
}

impl OnePointReductionConfig {
    /// Gaussian noise with `σ = 2B·sqrt(2 ln(1.25/δ))/ε`.
    pub fn gaussian(privacy: &PrivacyParams, loss_bound: f64) -> Result<Self> {
        check_bound(loss_bound)?;
        let noise = calibrate_gaussian(privacy, 2.0 * loss_bound)?;
        Ok(Self { loss_bound, noise })
    }

    /// Laplace noise with scale `2B/ε` for pure `ε`-LDP.
    pub fn laplace(epsilon: f64, loss_bound: f64) -> Result<Self> {
        check_bound(loss_bound)?;
        let noise = calibrate_laplace(epsilon, 2.0 * loss_bound)?;
        Ok(Self { loss_bound, noise })
    }

    pub fn non_private(loss_bound: f64) -> Result<Self> {
        check_bound(loss_bound)?;
        Ok(Self { loss_bound, noise: NoiseSpec::none() })
    }

    pub fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Gaussian `σ` (or the Laplace scale).
    pub fn sigma(&self) -> f64 {
        self.noise.scale()
    }

    /// High-probability bound on `|f + Z|` over a horizon of `T` rounds:
    /// `B + σ·sqrt(2 ln(2T²))` for Gaussian noise, `B + b·ln(2T²)` for Laplace.
    pub fn effective_bound(&self, horizon: u64) -> f64 {
        let log_term = (2.0 * (horizon.max(1) as f64).powi(2)).ln();
        let tail = match self.noise.kind() {
            NoiseKind::Gaussian => self.noise.scale() * (2.0 * log_term).sqrt(),
            NoiseKind::Laplace => self.noise.scale() * log_term,
        };
        self.loss_bound + tail
    }

    /// User-side release of one loss value.
    pub fn release(&self, loss: TrueLoss, rng: &mut NoiseStream) -> Result<Perturbed> {
        let f = loss.value();
        if !(f.abs() <= self.loss_bound * (1.0 + BOUND_SLACK)) {
            return Err(Error::contract(format!(
                "loss {f} exceeds declared bound {}; sensitivity breach",
                self.loss_bound
            )));
        }
        if self.noise.is_zero() {
            return Ok(Perturbed(f));
        }
        Ok(Perturbed(f + self.noise.sample(rng)))
    }
}

fn check_bound(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("loss bound must be positive, got {b}")))
    }
}

#[derive(Debug, Clone)]
pub struct OnePointOutcome<A> {
    pub action: A,
    pub true_loss: TrueLoss,
    pub feedback: Perturbed,
}

/// One round of the one-point reduction: the learner acts, the user evaluates
/// the loss and releases `f_t(x_t) + Z_t`, the learner observes the release.
pub fn one_point_round<L, F>(
    learner: &mut L,
    mut loss_of: F,
    config: &OnePointReductionConfig,
    learner_rng: &mut NoiseStream,
    noise_rng: &mut NoiseStream,
) -> Result<OnePointOutcome<L::Action>>
where
    L: OnePointLearner,
    F: FnMut(&L::Action) -> Result<f64>,
{
    let action = learner.act(learner_rng)?;
    let true_loss = TrueLoss(loss_of(&action)?);
    let feedback = config.release(true_loss, noise_rng)?;
    learner.observe(feedback.value())?;
    Ok(OnePointOutcome { action, true_loss, feedback })
}

#[derive(Debug, Clone)]
pub struct TwoPointReductionConfig {
    lipschitz: f64,
    noise: NoiseSpec,
    horizon: u64,
    params: TwoPointParams,
}

impl TwoPointReductionConfig {
    /// `σ = 2G·sqrt(2 ln(1.25/δ))/ε` with `η = 1/√T`, `ρ = ln T/T`, `ξ = ρ/r`.
    pub fn new(privacy: &PrivacyParams, lipschitz: f64, set: &DecisionSet, horizon: u64) -> Result<Self> {
        Self::with_params(Some(privacy), lipschitz, horizon, TwoPointParams::defaults(set, horizon)?)
    }

    /// `privacy = None` disables the perturbation.
    pub fn with_params(
        privacy: Option<&PrivacyParams>,
        lipschitz: f64,
        horizon: u64,
        params: TwoPointParams,
    ) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::config(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        let noise = match privacy {
            Some(p) => calibrate_gaussian(p, 2.0 * lipschitz)?,
            None => NoiseSpec::none(),
        };
        Ok(Self { lipschitz, noise, horizon, params })
    }

    pub fn sigma(&self) -> f64 {
        self.noise.scale()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn params(&self) -> TwoPointParams {
        self.params
    }

    /// A fresh learner at the origin with this configuration's parameters.
    pub fn learner(&self, set: DecisionSet) -> Result<TwoPointState> {
        TwoPointState::new(set, self.params)
    }

    /// Full `d`-vector noise `n_t ~ N(0, σ² I)`.
    pub fn draw_noise(&self, d: usize, rng: &mut NoiseStream) -> DVector<f64> {
        if self.noise.is_zero() {
            return DVector::zeros(d);
        }
        DVector::from_fn(d, |_, _| self.noise.sample(rng))
    }
}

#[derive(Debug, Clone)]
pub struct TwoPointOutcome {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub f1: TrueLoss,
    pub f2: TrueLoss,
    pub difference: Perturbed,
}

/// User-side linear perturbation: `(f1 + nᵀx1) − (f2 + nᵀx2)`, which equals
/// `f1 − f2 + nᵀ(x1 − x2)` and coincides with evaluating the shifted loss
/// `f(x) + nᵀx` at both queries.
pub fn release_difference(
    f1: TrueLoss,
    f2: TrueLoss,
    x1: &DVector<f64>,
    x2: &DVector<f64>,
    noise: &DVector<f64>,
) -> Perturbed {
    Perturbed((f1.value() + noise.dot(x1)) - (f2.value() + noise.dot(x2)))
}

pub fn two_point_round<F>(
    learner: &mut TwoPointState,
    mut value_of: F,
    config: &TwoPointReductionConfig,
    learner_rng: &mut NoiseStream,
    noise_rng: &mut NoiseStream,
) -> Result<TwoPointOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let (x1, x2) = learner.queries(learner_rng)?;
    let f1 = TrueLoss(value_of(&x1)?);
    let f2 = TrueLoss(value_of(&x2)?);
    let limit = config.lipschitz * (&x1 - &x2).norm();
    if !((f1.0 - f2.0).abs() <= limit * (1.0 + BOUND_SLACK) + f64::EPSILON) {
        return Err(Error::contract(format!(
            "value difference {} exceeds Lipschitz bound {limit}",
            f1.0 - f2.0
        )));
    }
    let n = config.draw_noise(x1.len(), noise_rng);
    let difference = release_difference(f1, f2, &x1, &x2, &n);
    learner.update(difference.value())?;
    Ok(TwoPointOutcome { x1, x2, f1, f2, difference })
}

/// Tsallis-INF behind the one-point reduction with `B = 0.5`. Raw losses in
/// `[0, 1]` are recentred to `[−0.5, 0.5]` before release, and the learner is
/// told the inflated range `[−B̃, B̃]` with `B̃` the effective bound.
#[derive(Debug, Clone)]
pub struct PrivateMab {
    learner: TsallisInf,
    reduction: OnePointReductionConfig,
}

pub const MAB_LOSS_BOUND: f64 = 0.5;

pub fn wrap_mab(privacy: Option<&PrivacyParams>, arms: usize, horizon: u64) -> Result<PrivateMab> {
    let reduction = match privacy {
        Some(p) => OnePointReductionConfig::gaussian(p, MAB_LOSS_BOUND)?,
        None => OnePointReductionConfig::non_private(MAB_LOSS_BOUND)?,
    };
    let range = reduction.effective_bound(horizon);
    let learner = TsallisInf::with_loss_range(arms, -range, range)?;
    Ok(PrivateMab { learner, reduction })
}

pub fn recentre(raw: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&raw) {
        return Err(Error::contract(format!("loss {raw} outside [0, 1]")));
    }
    Ok(raw - 0.5)
}

impl PrivateMab {
    pub fn learner(&self) -> &TsallisInf {
        &self.learner
    }

    pub fn reduction(&self) -> &OnePointReductionConfig {
        &self.reduction
    }

    /// The returned true loss is the raw loss in `[0, 1]`.
    pub fn round<F>(
        &mut self,
        mut loss_of: F,
        learner_rng: &mut NoiseStream,
        noise_rng: &mut NoiseStream,
    ) -> Result<OnePointOutcome<usize>>
    where
        F: FnMut(usize) -> Result<f64>,
    {
        let arm = self.learner.act(learner_rng)?;
        let raw = loss_of(arm)?;
        let centred = TrueLoss(recentre(raw)?);
        let feedback = self.reduction.release(centred, noise_rng)?;
        self.learner.observe(feedback.value())?;
        Ok(OnePointOutcome { action: arm, true_loss: TrueLoss(raw), feedback })
    }
}

/// lil'UCB behind the one-point reduction on recentred rewards, with the
/// variance proxy inflated to `¼ + σ²`.
#[derive(Debug, Clone)]
pub struct PrivateBai {
    learner: LilUcb,
    reduction: OnePointReductionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaiOutcome {
    pub best: usize,
    pub pulls: u64,
    pub capped: bool,
}

pub fn wrap_bai(privacy: Option<&PrivacyParams>, arms: usize, params: LilUcbParams) -> Result<PrivateBai> {
    let reduction = match privacy {
        Some(p) => OnePointReductionConfig::gaussian(p, MAB_LOSS_BOUND)?,
        None => OnePointReductionConfig::non_private(MAB_LOSS_BOUND)?,
    };
    let proxy = 0.25 + reduction.noise().variance();
    let learner = LilUcb::new(arms, LilUcbParams { variance_proxy: proxy, ..params })?;
    Ok(PrivateBai { learner, reduction })
}

impl PrivateBai {
    pub fn learner(&self) -> &LilUcb {
        &self.learner
    }

    pub fn reduction(&self) -> &OnePointReductionConfig {
        &self.reduction
    }

    pub fn variance_proxy(&self) -> f64 {
        self.learner.params().variance_proxy
    }

    /// Pull arms until lil'UCB stops. Rewards must lie in `[0, 1]`.
    pub fn run<F>(&mut self, mut reward_of: F, noise_rng: &mut NoiseStream) -> Result<BaiOutcome>
    where
        F: FnMut(usize) -> Result<f64>,
    {
        loop {
            match self.learner.step() {
                LilUcbDecision::Pull(arm) => {
                    let centred = TrueLoss(recentre(reward_of(arm)?)?);
                    let released = self.reduction.release(centred, noise_rng)?;
                    self.learner.observe_reward(arm, released.value())?;
                }
                LilUcbDecision::Stop { best, capped } => {
                    return Ok(BaiOutcome { best, pulls: self.learner.total_pulls(), capped });
                }
            }
        }
    }
}
