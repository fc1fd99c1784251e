//! Convex decision sets `X` with `r·B ⊂ X ⊂ R·B` and Euclidean projection
//! onto their shrunken copies `(1 − ξ)·X`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetShape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Ball { center: DVector<f64>, radius: f64 },
    Box { lower: DVector<f64>, upper: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    shape: Shape,
    inner_radius: f64,
    outer_radius: f64,
}

impl DecisionSet {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::config("decision set dimension must be positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config(format!("ball radius must be positive, got {radius}")));
        }
        let offset = center.norm();
        let inner = radius - offset;
        if inner <= 0.0 {
            return Err(Error::config(
                "ball must contain a neighbourhood of the origin",
            ));
        }
        Ok(Self {
            inner_radius: inner,
            outer_radius: offset + radius,
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::ball(DVector::zeros(d), 1.0)
    }

    pub fn cube(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::config("box bounds must be nonempty and of equal length"));
        }
        let mut inner = f64::INFINITY;
        let mut outer_sq = 0.0;
        for (l, u) in lower.iter().zip(upper.iter()) {
            if !(l.is_finite() && u.is_finite()) {
                return Err(Error::config("box bounds must be finite"));
            }
            inner = inner.min(-l).min(*u);
            let m = l.abs().max(u.abs());
            outer_sq += m * m;
        }
        if inner <= 0.0 {
            return Err(Error::config("box must contain a neighbourhood of the origin"));
        }
        Ok(Self {
            shape: Shape::Box { lower, upper },
            inner_radius: inner,
            outer_radius: outer_sq.sqrt(),
        })
    }

    pub fn from_shape(shape: &SetShape) -> Result<Self> {
        match shape {
            SetShape::Ball { center, radius } => {
                Self::ball(DVector::from_column_slice(center), *radius)
            }
            SetShape::Box { lower, upper } => Self::cube(
                DVector::from_column_slice(lower),
                DVector::from_column_slice(upper),
            ),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lower, .. } => lower.len(),
        }
    }

    /// Radius `r` of the origin-centred ball contained in the set.
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// Radius `R` of the origin-centred ball containing the set.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Membership in `(1 − shrink)·X`, up to an absolute tolerance.
    pub fn contains_scaled(&self, x: &DVector<f64>, shrink: f64, tol: f64) -> bool {
        let s = 1.0 - shrink;
        match &self.shape {
            Shape::Ball { center, radius } => (x - center * s).norm() <= radius * s + tol,
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(xi, (l, u))| *xi >= l * s - tol && *xi <= u * s + tol),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.contains_scaled(x, 0.0, tol)
    }

    /// Largest and smallest squared distance helpers for bounding quadratics.
    pub(crate) fn max_distance_from(&self, p: &DVector<f64>) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => (p - center).norm() + radius,
            Shape::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(pi, (l, u))| (pi - l).abs().max((u - pi).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Euclidean projection of `point` onto `(1 − shrink)·set`.
pub fn project(point: &DVector<f64>, set: &DecisionSet, shrink: f64) -> DVector<f64> {
    debug_assert!((0.0..1.0).contains(&shrink));
    let s = 1.0 - shrink;
    match &set.shape {
        Shape::Ball { center, radius } => {
            let c = center * s;
            let r = radius * s;
            let offset = point - &c;
            let dist = offset.norm();
            if dist <= r {
                point.clone()
            } else {
                c + offset * (r / dist)
            }
        }
        Shape::Box { lower, upper } => DVector::from_iterator(
            point.len(),
            point
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .map(|(p, (l, u))| p.clamp(l * s, u * s)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NoiseStream, StreamRole};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn radial_projection_examples() {
        let ball = DecisionSet::unit_ball(2).unwrap();
        assert_eq!(project(&v(&[3.0, 0.0]), &ball, 0.0), v(&[1.0, 0.0]));
        assert_eq!(project(&v(&[3.0, 0.0]), &ball, 0.5), v(&[0.5, 0.0]));
        let inside = v(&[0.2, -0.3]);
        assert_eq!(project(&inside, &ball, 0.5), inside);
    }

    #[test]
    fn radii_are_reported() {
        let ball = DecisionSet::ball(v(&[0.5, 0.0]), 2.0).unwrap();
        assert_eq!(ball.inner_radius(), 1.5);
        assert_eq!(ball.outer_radius(), 2.5);
        let cube = DecisionSet::cube(v(&[-1.0, -2.0]), v(&[3.0, 0.5])).unwrap();
        assert_eq!(cube.inner_radius(), 0.5);
        assert!((cube.outer_radius() - (9.0f64 + 4.0).sqrt()).abs() < 1e-15);
        assert!(DecisionSet::ball(v(&[2.0, 0.0]), 1.0).is_err());
        assert!(DecisionSet::cube(v(&[0.0]), v(&[1.0])).is_err());
    }

    #[test]
    fn projection_is_optimal_and_idempotent() {
        let mut rng = NoiseStream::from_seed(11, StreamRole::Learner);
        let sets = [
            DecisionSet::ball(v(&[0.3, -0.2, 0.1]), 1.5).unwrap(),
            DecisionSet::cube(v(&[-1.0, -0.5, -2.0]), v(&[0.7, 1.0, 0.4])).unwrap(),
        ];
        for set in &sets {
            for shrink in [0.0, 0.2] {
                for _ in 0..50 {
                    let p = rng.unit_vector(3) * (4.0 * rng.uniform());
                    let proj = project(&p, set, shrink);
                    assert!(set.contains_scaled(&proj, shrink, 1e-12));
                    assert!((project(&proj, set, shrink) - &proj).norm() < 1e-14);
                    let d = (&proj - &p).norm();
                    for _ in 0..20 {
                        // Random feasible competitor in the shrunken set.
                        let q = project(&(rng.unit_vector(3) * 3.0 * rng.uniform()), set, shrink);
                        assert!(d <= (&q - &p).norm() + 1e-12);
                    }
                }
            }
        }
    }
}
