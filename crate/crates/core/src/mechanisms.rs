//! Noise calibration and sampling for local perturbations.
//!
//! The Gaussian mechanism releases `h(x) + Y` with `Y ~ N(0, σ² I)` and
//!
//! ```text
//! σ = Δ · sqrt(2 ln(1.25 / δ)) / ε
//! ```
//!
//! where `Δ` is the L2 sensitivity of `h`. The classical analysis of this
//! constant assumes `ε ≤ 1`; the formula is applied as written for larger `ε`
//! as well, so callers wanting the formal guarantee at `ε > 1` should use a
//! tighter calibration.
//!
//! The pure `ε` variant uses Laplace noise with scale `b = Δ / ε`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::NoiseStream;

/// An `(ε, δ)` pair. Construction validates `ε > 0` and `0 < δ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrivacy")]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawPrivacy {
    epsilon: f64,
    delta: f64,
}

impl TryFrom<RawPrivacy> for PrivacyParams {
    type Error = Error;

    fn try_from(raw: RawPrivacy) -> Result<Self> {
        PrivacyParams::new(raw.epsilon, raw.delta)
    }
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Calibration(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Calibration(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `sqrt(2 ln(1.25/δ)) / ε`, the Gaussian standard deviation per unit of sensitivity.
    pub fn gaussian_factor(&self) -> f64 {
        (2.0 * (1.25 / self.delta).ln()).sqrt() / self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

/// A calibrated noise distribution: standard deviation for Gaussian noise,
/// scale `b` for Laplace noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    kind: NoiseKind,
    scale: f64,
}

impl NoiseSpec {
    /// Zero noise. Only meaningful for non-private baselines.
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale: 0.0,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Calibration(format!(
                "sigma must be nonnegative and finite, got {sigma}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Gaussian,
            scale: sigma,
        })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Calibration(format!(
                "laplace scale must be nonnegative and finite, got {scale}"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Laplace,
            scale,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    /// The distribution parameter: σ for Gaussian, `b` for Laplace.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Standard deviation of one draw.
    pub fn std_dev(&self) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => self.scale,
            NoiseKind::Laplace => self.scale * std::f64::consts::SQRT_2,
        }
    }

    pub fn variance(&self) -> f64 {
        let s = self.std_dev();
        s * s
    }

    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
    }

    /// One draw from the zero-mean noise distribution.
    pub fn sample(&self, rng: &mut NoiseStream) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => self.scale * rng.standard_normal(),
            NoiseKind::Laplace => {
                // Inverse CDF on u in (-1/2, 1/2).
                let u = rng.uniform() - 0.5;
                let tail = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                -self.scale * u.signum() * tail.ln()
            }
        }
    }
}

/// Gaussian calibration `σ = Δ·sqrt(2 ln(1.25/δ))/ε`.
pub fn calibrate_gaussian(privacy: &PrivacyParams, sensitivity: f64) -> Result<NoiseSpec> {
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::Calibration(format!(
            "sensitivity must be nonnegative and finite, got {sensitivity}"
        )));
    }
    NoiseSpec::gaussian(sensitivity * privacy.gaussian_factor())
}

/// Laplace calibration `b = Δ/ε` for pure `ε`-LDP.
pub fn calibrate_laplace(epsilon: f64, sensitivity: f64) -> Result<NoiseSpec> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Calibration(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::Calibration(format!(
            "sensitivity must be nonnegative and finite, got {sensitivity}"
        )));
    }
    NoiseSpec::laplace(sensitivity / epsilon)
}

/// `value + Z` with one fresh draw `Z` from `spec`.
pub fn perturb_scalar(value: f64, spec: &NoiseSpec, rng: &mut NoiseStream) -> f64 {
    value + spec.sample(rng)
}

/// `v + ξ` with i.i.d. coordinates of `ξ` drawn from `spec`.
pub fn perturb_vector(v: &DVector<f64>, spec: &NoiseSpec, rng: &mut NoiseStream) -> DVector<f64> {
    let mut out = v.clone();
    for x in out.iter_mut() {
        *x += spec.sample(rng);
    }
    out
}

/// A symmetric `d × d` noise matrix: the upper triangle is drawn, the lower
/// triangle is a copy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricNoiseMatrix {
    entries: DMatrix<f64>,
}

impl SymmetricNoiseMatrix {
    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        is_exactly_symmetric(&self.entries)
    }
}

pub(crate) fn is_exactly_symmetric(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    m.ncols() == d
        && (0..d).all(|i| (0..i).all(|j| m[(i, j)].to_bits() == m[(j, i)].to_bits()))
}

/// Upper triangle (diagonal included) i.i.d. `N(0, σ²)`, mirrored below.
/// Draws happen row by row over `j ≥ i`.
pub fn symmetric_gaussian_matrix(
    d: usize,
    sigma: f64,
    rng: &mut NoiseStream,
) -> Result<SymmetricNoiseMatrix> {
    if d == 0 {
        return Err(Error::config("noise matrix dimension must be positive"));
    }
    let spec = NoiseSpec::gaussian(sigma)?;
    let mut entries = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let z = spec.sample(rng);
            entries[(i, j)] = z;
            entries[(j, i)] = z;
        }
    }
    Ok(SymmetricNoiseMatrix { entries })
}
