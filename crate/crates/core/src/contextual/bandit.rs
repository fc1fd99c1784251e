//! The linear and generalized linear LDP contextual learners as a round loop
//! over [`ServerState`].

use std::io::Write;

use nalgebra::DVector;

use super::confidence::ConfidenceSchedule;
use super::link::Link;
use super::server::{glm_local_report, linear_local_report, LocalReport, ReportStreams, ServerState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Rewards are reported directly.
    Linear,
    /// Rewards are relabelled through an online-gradient rough estimate with step `ζ`.
    Glm { zeta: f64 },
}

#[derive(Debug, Clone)]
pub struct ContextualLearner {
    server: ServerState,
    schedule: ConfidenceSchedule,
    link: Link,
    estimator: Estimator,
    round: u64,
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub arm: usize,
    pub reward: f64,
    pub theta_tilde: Vec<f64>,
    pub beta: f64,
    pub contained: bool,
}

impl ContextualLearner {
    pub fn new(d: usize, schedule: ConfidenceSchedule, link: Link, estimator: Estimator) -> Result<Self> {
        if let Estimator::Glm { zeta } = estimator {
            if !(zeta.is_finite() && zeta > 0.0) {
                return Err(Error::config("GLM step size must be positive"));
            }
        }
        let mut server = ServerState::new(d);
        server.initialize(schedule.c(0))?;
        Ok(Self { server, schedule, link, estimator, round: 0 })
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn schedule(&self) -> &ConfidenceSchedule {
        &self.schedule
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Action for the next round.
    pub fn select(&self, arms: &[DVector<f64>]) -> Result<usize> {
        self.server.select(arms, self.schedule.selection_beta(self.round + 1))
    }

    /// The user-side report for playing `x` and receiving `y`.
    pub fn report(&self, x: &DVector<f64>, y: f64, streams: &mut ReportStreams) -> Result<LocalReport> {
        let sigma = self.schedule.sigma();
        match self.estimator {
            Estimator::Linear => linear_local_report(x, y, sigma, streams),
            Estimator::Glm { .. } => glm_local_report(x, y, self.server.theta_hat(), self.link, sigma, streams),
        }
    }

    pub fn update(&mut self, report: &LocalReport) -> Result<()> {
        let t = self.round + 1;
        let c = self.schedule.c(t);
        match self.estimator {
            Estimator::Linear => self.server.linear_update(report, c)?,
            Estimator::Glm { zeta } => self.server.glm_update(report, c, zeta)?,
        }
        self.round = t;
        Ok(())
    }

    /// Whether `θ` lies in `{‖θ̃_t − θ‖_{Ṽ_t} ≤ β_t}` for the current round.
    pub fn contains(&self, theta: &DVector<f64>) -> Result<bool> {
        let beta = self.schedule.beta(self.round);
        Ok(self.server.ellipsoid_distance_sq(theta)? <= beta * beta)
    }

    pub fn record(&self, arm: usize, reward: f64, theta_star: &DVector<f64>) -> Result<RoundRecord> {
        Ok(RoundRecord {
            t: self.round,
            arm,
            reward,
            theta_tilde: self.server.theta_tilde().iter().copied().collect(),
            beta: self.schedule.beta(self.round),
            contained: self.contains(theta_star)?,
        })
    }
}

/// Fraction of records whose ellipsoid contains the true parameter.
pub fn ellipsoid_coverage(records: &[RoundRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.contained).count() as f64 / records.len() as f64
}

/// CSV columns: `t,arm,reward,theta_tilde_0..theta_tilde_{d-1},beta,contained`.
pub fn write_trajectory<W: Write>(records: &[RoundRecord], out: &mut W) -> Result<()> {
    let d = records.first().map_or(0, |r| r.theta_tilde.len());
    let mut header = String::from("t,arm,reward");
    for i in 0..d {
        header.push_str(&format!(",theta_tilde_{i}"));
    }
    header.push_str(",beta,contained");
    writeln!(out, "{header}")?;
    for r in records {
        let mut line = format!("{},{},{}", r.t, r.arm, r.reward);
        for v in &r.theta_tilde {
            line.push_str(&format!(",{v}"));
        }
        line.push_str(&format!(",{},{}", r.beta, u8::from(r.contained)));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contextual::confidence::Width;

    #[test]
    fn zero_beta_never_contains() {
        let r = RoundRecord { t: 1, arm: 0, reward: 0.0, theta_tilde: vec![0.0], beta: 0.0, contained: false };
        assert_eq!(ellipsoid_coverage(&[r]), 0.0);
    }

    #[test]
    fn trajectory_header() {
        let r = RoundRecord { t: 1, arm: 2, reward: 0.5, theta_tilde: vec![0.1, 0.2], beta: 3.0, contained: true };
        let mut buf = Vec::new();
        write_trajectory(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "t,arm,reward,theta_tilde_0,theta_tilde_1,beta,contained\n1,2,0.5,0.1,0.2,3,1\n");
    }

    #[test]
    fn first_selection_uses_round_zero_regularizer() {
        let sched = ConfidenceSchedule::new(2, 100, 0.1, 1.0, Link::Identity, Width::Linear).unwrap();
        let l = ContextualLearner::new(2, sched, Link::Identity, Estimator::Linear).unwrap();
        let x = DVector::from_column_slice(&[1.0, 0.0]);
        let expected = 1.0 / sched.c(1).sqrt();
        assert!((l.server().inverse_norm(&x).unwrap() - expected).abs() < 1e-15);
    }
}
