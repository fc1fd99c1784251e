//! Server-side aggregation of local reports and the user-side report
//! construction for the LDP contextual algorithms.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::link::Link;
use crate::error::{Error, Result};
use crate::mechanisms::{symmetric_gaussian_matrix, NoiseSpec};
use crate::rng::NoiseStream;

/// Minimum eigenvalue enforced on regularised gram matrices.
pub const EIGEN_FLOOR: f64 = 1e-8;
const BOUND_SLACK: f64 = 1e-12;

/// What a user sends: `x xᵀ + B_t`, a noisy moment and, for GLM, a noisy
/// loss gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalReport {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
    pub gradient: Option<DVector<f64>>,
}

/// Streams for the three perturbations of a report.
#[derive(Debug, Clone)]
pub struct ReportStreams {
    pub gram: NoiseStream,
    pub moment: NoiseStream,
    pub gradient: NoiseStream,
}

fn check_arm(x: &DVector<f64>) -> Result<()> {
    if x.norm() > 1.0 + BOUND_SLACK {
        return Err(Error::contract(format!("arm norm {} exceeds 1", x.norm())));
    }
    Ok(())
}

fn noisy_gram(x: &DVector<f64>, sigma: f64, rng: &mut NoiseStream) -> Result<DMatrix<f64>> {
    let outer = x * x.transpose();
    if sigma == 0.0 {
        return Ok(outer);
    }
    Ok(outer + symmetric_gaussian_matrix(x.len(), sigma, rng)?.into_inner())
}

fn add_noise(mut v: DVector<f64>, sigma: f64, rng: &mut NoiseStream) -> Result<DVector<f64>> {
    if sigma == 0.0 {
        return Ok(v);
    }
    let spec = NoiseSpec::gaussian(sigma)?;
    v.iter_mut().for_each(|e| *e += spec.sample(rng));
    Ok(v)
}

/// `(x xᵀ + B, y·x + ξ)` with `B` symmetric Gaussian and `ξ ~ N(0, σ² I)`.
pub fn linear_local_report(
    x: &DVector<f64>,
    y: f64,
    sigma: f64,
    streams: &mut ReportStreams,
) -> Result<LocalReport> {
    check_arm(x)?;
    if !(y.abs() <= 2.0 + BOUND_SLACK) {
        return Err(Error::contract(format!("reward {y} outside [−2, 2]")));
    }
    Ok(LocalReport {
        gram: noisy_gram(x, sigma, &mut streams.gram)?,
        moment: add_noise(x * y, sigma, &mut streams.moment)?,
        gradient: None,
    })
}

/// `∂/∂θ ℓ(xᵀθ, y) = (g(xᵀθ) − y)·x`.
pub fn glm_gradient(link: Link, x: &DVector<f64>, theta: &DVector<f64>, y: f64) -> DVector<f64> {
    x * (link.g(x.dot(theta)) - y)
}

/// `(x xᵀ + B, z·x + ξ, ∇ℓ(θ̂) + r)` with `z = xᵀθ̂` and `r ~ N(0, C²σ² I)`.
pub fn glm_local_report(
    x: &DVector<f64>,
    y: f64,
    theta_hat: &DVector<f64>,
    link: Link,
    sigma: f64,
    streams: &mut ReportStreams,
) -> Result<LocalReport> {
    check_arm(x)?;
    if theta_hat.norm() > 1.0 + BOUND_SLACK {
        return Err(Error::contract("rough estimate outside the unit ball"));
    }
    let z = x.dot(theta_hat);
    let grad = glm_gradient(link, x, theta_hat, y);
    if grad.norm() > link.value_bound() * (1.0 + BOUND_SLACK) {
        return Err(Error::contract(format!("gradient norm {} exceeds C", grad.norm())));
    }
    Ok(LocalReport {
        gram: noisy_gram(x, sigma, &mut streams.gram)?,
        moment: add_noise(x * z, sigma, &mut streams.moment)?,
        gradient: Some(add_noise(grad, link.value_bound() * sigma, &mut streams.gradient)?),
    })
}

#[derive(Debug, Clone)]
pub struct ServerState {
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    theta_tilde: DVector<f64>,
    theta_hat: DVector<f64>,
    round: u64,
    floor_events: u64,
    /// Factor of `V̄_t + c_t I` (floored) from the last solve.
    factor: Option<Cholesky<f64, Dyn>>,
}

impl ServerState {
    pub fn new(d: usize) -> Self {
        Self {
            gram: DMatrix::zeros(d, d),
            moment: DVector::zeros(d),
            theta_tilde: DVector::zeros(d),
            theta_hat: DVector::zeros(d),
            round: 0,
            floor_events: 0,
            factor: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn theta_tilde(&self) -> &DVector<f64> {
        &self.theta_tilde
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    /// Number of solves that needed the eigenvalue floor.
    pub fn floor_events(&self) -> u64 {
        self.floor_events
    }

    /// `V̄ + cI`, shifted so its smallest eigenvalue is at least the floor.
    pub fn regularized(&mut self, c: f64) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut m = &self.gram + DMatrix::identity(d, d) * c;
        // Gershgorin discs give a cheap certificate in the common case.
        let certified = (0..d).all(|i| {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] - off >= EIGEN_FLOOR
        });
        if !certified {
            let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
            if !min.is_finite() {
                return Err(Error::Numerical("non-finite eigenvalue in regularised gram".into()));
            }
            if min < EIGEN_FLOOR {
                m += DMatrix::identity(d, d) * (EIGEN_FLOOR - min);
                self.floor_events += 1;
            }
        }
        Ok(m)
    }

    fn factorize(&mut self, c: f64) -> Result<Cholesky<f64, Dyn>> {
        let m = self.regularized(c)?;
        Cholesky::new(m).ok_or_else(|| {
            Error::Numerical(format!(
                "regularised gram not positive definite after floor (round {}, c = {c})",
                self.round
            ))
        })
    }

    /// Solve `θ̃ = (V̄ + cI)⁻¹ ũ` and keep the factor for action selection.
    pub fn solve(&mut self, c: f64) -> Result<()> {
        let factor = self.factorize(c)?;
        self.theta_tilde = factor.solve(&self.moment);
        if !self.theta_tilde.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite estimate".into()));
        }
        self.factor = Some(factor);
        Ok(())
    }

    /// Prepare the initial factor `(0 + c₀ I)`.
    pub fn initialize(&mut self, c0: f64) -> Result<()> {
        self.solve(c0)
    }

    fn accumulate(&mut self, report: &LocalReport) -> Result<()> {
        let d = self.dim();
        if report.gram.shape() != (d, d) || report.moment.len() != d {
            return Err(Error::contract("report dimensions do not match server"));
        }
        self.gram += &report.gram;
        self.moment += &report.moment;
        self.round += 1;
        Ok(())
    }

    pub fn linear_update(&mut self, report: &LocalReport, c: f64) -> Result<()> {
        self.accumulate(report)?;
        self.solve(c)
    }

    /// Accumulate, solve, then `θ̂ ← Π_W(θ̂ − ζ·(∇ℓ + r))` onto the unit ball.
    pub fn glm_update(&mut self, report: &LocalReport, c: f64, zeta: f64) -> Result<()> {
        let grad = report
            .gradient
            .as_ref()
            .ok_or_else(|| Error::contract("GLM update without a gradient report"))?;
        if grad.len() != self.dim() {
            return Err(Error::contract("gradient dimension does not match server"));
        }
        self.accumulate(report)?;
        self.solve(c)?;
        let step = &self.theta_hat - grad * zeta;
        let n = step.norm();
        self.theta_hat = if n > 1.0 { step / n } else { step };
        Ok(())
    }

    /// `‖x‖` in the inverse of the last factored matrix.
    pub fn inverse_norm(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::contract("server not initialised"))?;
        let w = f.solve(x);
        Ok(x.dot(&w).max(0.0).sqrt())
    }

    /// `‖θ̃ − θ‖²` in the last factored matrix.
    pub fn ellipsoid_distance_sq(&self, theta: &DVector<f64>) -> Result<f64> {
        let f = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::contract("server not initialised"))?;
        let diff = &self.theta_tilde - theta;
        let l = f.l();
        let lt = l.transpose() * &diff;
        Ok(lt.norm_squared())
    }

    /// Index `⟨θ̃, x⟩ + β‖x‖` over the arms; ties go to the lowest index.
    pub fn select(&self, arms: &[DVector<f64>], beta: f64) -> Result<usize> {
        if arms.is_empty() {
            return Err(Error::contract("empty arm set"));
        }
        let mut best = 0;
        let mut best_index = f64::NEG_INFINITY;
        for (i, x) in arms.iter().enumerate() {
            check_arm(x)?;
            let index = self.theta_tilde.dot(x) + beta * self.inverse_norm(x)?;
            if index > best_index {
                best = i;
                best_index = index;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRole;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    fn streams(seed: u64) -> ReportStreams {
        ReportStreams {
            gram: NoiseStream::from_seed(seed, StreamRole::Gram),
            moment: NoiseStream::from_seed(seed, StreamRole::Moment),
            gradient: NoiseStream::from_seed(seed, StreamRole::Gradient),
        }
    }

    #[test]
    fn single_noiseless_observation() {
        let mut s = ServerState::new(2);
        let r = linear_local_report(&e(2, 0), 1.0, 0.0, &mut streams(0)).unwrap();
        s.linear_update(&r, 1.0).unwrap();
        assert!((s.theta_tilde() - e(2, 0) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn empty_server_estimate_is_zero() {
        let mut s = ServerState::new(3);
        s.initialize(2.0).unwrap();
        assert_eq!(s.theta_tilde(), &DVector::zeros(3));
    }

    #[test]
    fn hand_index_instance() {
        let mut s = ServerState::new(2);
        s.gram = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 0.0]));
        s.moment = DVector::from_column_slice(&[1.0, 0.0]);
        s.solve(1.0).unwrap();
        assert!((s.theta_tilde() - e(2, 0) * 0.5).norm() < 1e-15);
        let arms = [e(2, 0), e(2, 1)];
        assert!((s.inverse_norm(&arms[0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.select(&arms, 1.0).unwrap(), 0);
        assert_eq!(s.select(&arms, 0.0).unwrap(), 0);
    }

    #[test]
    fn initial_index_prefers_longest_arm() {
        let mut s = ServerState::new(2);
        s.initialize(4.0).unwrap();
        let arms = [e(2, 0) * 0.3, e(2, 1) * 0.9, (e(2, 0) + e(2, 1)) * 0.5];
        assert_eq!(s.select(&arms, 2.0).unwrap(), 1);
    }

    #[test]
    fn glm_gradient_at_origin() {
        let g = glm_gradient(Link::Logistic, &e(2, 0), &DVector::zeros(2), 1.0);
        assert_eq!(g, e(2, 0) * -0.5);
    }

    #[test]
    fn glm_one_step() {
        let mut s = ServerState::new(2);
        let zeta = 0.1;
        let r = glm_local_report(&e(2, 0), 1.0, s.theta_hat(), Link::Logistic, 0.0, &mut streams(1)).unwrap();
        s.glm_update(&r, 1.0, zeta).unwrap();
        assert_eq!(s.theta_hat(), &(e(2, 0) * (0.5 * zeta)));
    }

    #[test]
    fn floor_engages_on_indefinite_gram() {
        let mut s = ServerState::new(2);
        s.gram = DMatrix::from_diagonal(&DVector::from_column_slice(&[-3.0, 1.0]));
        let m = s.regularized(1.0).unwrap();
        assert_eq!(s.floor_events(), 1);
        let min = SymmetricEigen::new(m).eigenvalues.min();
        assert!(min >= EIGEN_FLOOR * 0.999);
    }

    #[test]
    fn noiseless_reports_are_exact() {
        let x = DVector::from_column_slice(&[0.3, -0.4]);
        let r = linear_local_report(&x, 0.7, 0.0, &mut streams(2)).unwrap();
        assert_eq!(r.gram, &x * x.transpose());
        assert_eq!(r.moment, &x * 0.7);
        let th = DVector::from_column_slice(&[0.1, 0.2]);
        let r = glm_local_report(&x, 1.0, &th, Link::Logistic, 0.0, &mut streams(2)).unwrap();
        assert_eq!(r.moment, &x * x.dot(&th));
        assert_eq!(r.gradient.unwrap(), glm_gradient(Link::Logistic, &x, &th, 1.0));
    }
}
