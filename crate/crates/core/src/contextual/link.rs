//! Link functions `g` for generalized linear rewards, with the constants the
//! privacy calibration and confidence widths depend on.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Logistic,
}

/// `g'(1)` for the logistic link: `e^{-1}/(1 + e^{-1})²`.
pub const LOGISTIC_CURVATURE: f64 = 0.196_611_933_241_481_85;

impl Link {
    pub fn g(self, a: f64) -> f64 {
        match self {
            Link::Identity => a,
            Link::Logistic => logistic(a),
        }
    }

    pub fn g_prime(self, a: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logistic => {
                let s = logistic(a);
                s * (1.0 - s)
            }
        }
    }

    /// Antiderivative `m` of `g` with `m(0)` fixed by convention.
    pub fn m(self, a: f64) -> f64 {
        match self {
            Link::Identity => 0.5 * a * a,
            // ln(1 + e^a), evaluated stably.
            Link::Logistic => a.max(0.0) + (-a.abs()).exp().ln_1p(),
        }
    }

    /// `ℓ(a, b) = −a·b + m(a)`; its derivative in `a` is `g(a) − b`.
    pub fn loss(self, a: f64, b: f64) -> f64 {
        -a * b + self.m(a)
    }

    /// Value bound `C`, also the scale of the loss gradient on the unit ball.
    pub fn value_bound(self) -> f64 {
        1.0
    }

    /// `sup g'` on `[−1, 1]`.
    pub fn lipschitz(self) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logistic => 0.25,
        }
    }

    /// `inf g'` on `(−1, 1)`.
    pub fn curvature(self) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Logistic => LOGISTIC_CURVATURE,
        }
    }
}

fn logistic(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}
