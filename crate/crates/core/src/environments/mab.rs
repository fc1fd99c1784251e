//! Multi-armed bandit worlds: stochastic Bernoulli arms and oblivious
//! adversarial loss tables fixed before the game.

use crate::error::{Error, Result};
use crate::rng::NoiseStream;

#[derive(Debug, Clone)]
pub enum MabEnvironment {
    Stochastic { means: Vec<f64> },
    /// Row-major `T × K` table; round `t` (1-based) reads row `t − 1`.
    Adversarial { arms: usize, table: Vec<f64> },
}

impl MabEnvironment {
    pub fn stochastic(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::config("MAB needs at least one arm"));
        }
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::config("arm means must lie in [0, 1]"));
        }
        Ok(Self::Stochastic { means })
    }

    /// Arm 0 has mean loss `0.5 − gap`, the others `0.5`.
    pub fn stochastic_gap(arms: usize, gap: f64) -> Result<Self> {
        check_gap(gap)?;
        let mut means = vec![0.5; arms];
        if let Some(first) = means.first_mut() {
            *first = 0.5 - gap;
        }
        Self::stochastic(means)
    }

    pub fn from_table(arms: usize, table: Vec<f64>) -> Result<Self> {
        if arms == 0 || table.is_empty() || !table.len().is_multiple_of(arms) {
            return Err(Error::config("loss table must be a nonempty T × K array"));
        }
        if table.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::config("table losses must lie in [0, 1]"));
        }
        Ok(Self::Adversarial { arms, table })
    }

    /// Bernoulli losses drawn once; arm 0 is best throughout.
    pub fn fixed_gap(arms: usize, horizon: u64, gap: f64, rng: &mut NoiseStream) -> Result<Self> {
        Self::bernoulli_table(arms, horizon, gap, rng, |_| 0)
    }

    /// Bernoulli losses drawn once; the best arm alternates between arms 0
    /// and 1 every `T/10` rounds.
    pub fn switching(arms: usize, horizon: u64, gap: f64, rng: &mut NoiseStream) -> Result<Self> {
        if arms < 2 {
            return Err(Error::config("switching sequence needs at least two arms"));
        }
        let period = (horizon / 10).max(1);
        Self::bernoulli_table(arms, horizon, gap, rng, |t| ((t / period) % 2) as usize)
    }

    fn bernoulli_table(
        arms: usize,
        horizon: u64,
        gap: f64,
        rng: &mut NoiseStream,
        best: impl Fn(u64) -> usize,
    ) -> Result<Self> {
        check_gap(gap)?;
        if arms == 0 || horizon == 0 {
            return Err(Error::config("table needs positive arms and horizon"));
        }
        let mut table = Vec::with_capacity(arms * horizon as usize);
        for t in 0..horizon {
            let b = best(t);
            for i in 0..arms {
                let p = if i == b { 0.5 - gap } else { 0.5 };
                table.push(if rng.bernoulli(p) { 1.0 } else { 0.0 });
            }
        }
        Self::from_table(arms, table)
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Stochastic { means } => means.len(),
            Self::Adversarial { arms, .. } => *arms,
        }
    }

    pub fn horizon(&self) -> Option<u64> {
        match self {
            Self::Stochastic { .. } => None,
            Self::Adversarial { arms, table } => Some((table.len() / arms) as u64),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Stochastic { .. })
    }

    /// Expected loss of `arm` at round `t` (the table entry when adversarial).
    pub fn mean_loss(&self, t: u64, arm: usize) -> Result<f64> {
        self.check_arm(arm)?;
        match self {
            Self::Stochastic { means } => Ok(means[arm]),
            Self::Adversarial { arms, table } => {
                let row = self.row(t)?;
                Ok(table[row * arms + arm])
            }
        }
    }

    /// All arms' losses at round `t`; `None` for stochastic worlds.
    pub fn table_row(&self, t: u64) -> Result<Option<&[f64]>> {
        match self {
            Self::Stochastic { .. } => Ok(None),
            Self::Adversarial { arms, table } => {
                let row = self.row(t)?;
                Ok(Some(&table[row * arms..(row + 1) * arms]))
            }
        }
    }

    pub fn sample(&self, t: u64, arm: usize, rng: &mut NoiseStream) -> Result<f64> {
        self.check_arm(arm)?;
        match self {
            Self::Stochastic { means } => Ok(if rng.bernoulli(means[arm]) { 1.0 } else { 0.0 }),
            Self::Adversarial { .. } => self.mean_loss(t, arm),
        }
    }

    /// `Δ_i = μ_i − min_j μ_j` for stochastic worlds.
    pub fn gaps(&self) -> Option<Vec<f64>> {
        match self {
            Self::Stochastic { means } => {
                let best = means.iter().copied().fold(f64::INFINITY, f64::min);
                Some(means.iter().map(|m| m - best).collect())
            }
            Self::Adversarial { .. } => None,
        }
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.arms() {
            Ok(())
        } else {
            Err(Error::contract(format!("arm {arm} out of range for {} arms", self.arms())))
        }
    }

    fn row(&self, t: u64) -> Result<usize> {
        match self.horizon() {
            Some(h) if t >= 1 && t <= h => Ok((t - 1) as usize),
            Some(h) => Err(Error::contract(format!("round {t} outside table horizon {h}"))),
            None => Ok(0),
        }
    }
}

fn check_gap(gap: f64) -> Result<()> {
    if (0.0..=0.5).contains(&gap) {
        Ok(())
    } else {
        Err(Error::config(format!("gap must lie in [0, 0.5], got {gap}")))
    }
}
