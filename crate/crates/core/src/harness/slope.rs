//! Log-log least-squares fits of regret against the horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;
const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub first_checkpoint: u64,
    pub last_checkpoint: u64,
}

/// Fit `ln regret = intercept + exponent · ln t` over the last `window`
/// checkpoints.
pub fn fit_slope(checkpoints: &[u64], regret: &[f64], window: usize) -> Result<SlopeFit> {
    if checkpoints.len() != regret.len() {
        return Err(Error::Fit("checkpoint and regret lengths differ".into()));
    }
    let window = window.min(checkpoints.len());
    if window < MIN_POINTS {
        return Err(Error::Fit(format!("need at least {MIN_POINTS} checkpoints, have {window}")));
    }
    let start = checkpoints.len() - window;
    let ts = &checkpoints[start..];
    let rs = &regret[start..];
    if let Some((t, r)) = ts.iter().zip(rs).find(|(_, &r)| !(r > 0.0 && r.is_finite())) {
        return Err(Error::Fit(format!("regret {r} at checkpoint {t} is not positive")));
    }
    let xs: Vec<f64> = ts.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let n = window as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("checkpoints are not distinct".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(SlopeFit {
        exponent,
        intercept,
        residual: (ss / n).sqrt(),
        first_checkpoint: ts[0],
        last_checkpoint: *ts.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::geometric_grid;

    #[test]
    fn exact_power_laws() {
        let ts = geometric_grid(100, 100_000, 20).unwrap();
        let r: Vec<f64> = ts.iter().map(|&t| (t as f64).powf(0.75)).collect();
        let fit = fit_slope(&ts, &r, 10).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-9);
        let r: Vec<f64> = ts.iter().map(|&t| 5.0 * (t as f64).sqrt()).collect();
        let fit = fit_slope(&ts, &r, 10).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-9);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn nonpositive_regret_is_fit_error() {
        let ts = [1, 2, 4, 8, 16];
        assert!(matches!(fit_slope(&ts, &[1.0, 2.0, 0.0, 4.0, 5.0], 5), Err(Error::Fit(_))));
        assert!(matches!(fit_slope(&ts[..3], &[1.0, 2.0, 3.0], 10), Err(Error::Fit(_))));
    }
}
