use nalgebra::DVector;
use proptest::prelude::*;

use ldp_bandits::blackbox::lil_ucb::LilUcbDecision;
use ldp_bandits::blackbox::tsallis::tsallis_weights;
use ldp_bandits::blackbox::{
    project, DecisionSet, FkmParams, FkmState, LilUcb, LilUcbParams, StepSchedule, TsallisInf, TwoPointParams,
    TwoPointState,
};
use ldp_bandits::{NoiseStream, StreamRole};

fn vector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn ball_strategy() -> impl Strategy<Value = DecisionSet> {
    (prop::collection::vec(-0.4f64..0.4, 3), 0.8f64..2.0)
        .prop_map(|(c, r)| DecisionSet::ball(vector(&c), r).unwrap())
}

fn box_strategy() -> impl Strategy<Value = DecisionSet> {
    (prop::collection::vec(0.1f64..2.0, 3), prop::collection::vec(0.1f64..2.0, 3))
        .prop_map(|(lo, hi)| DecisionSet::cube(-vector(&lo), vector(&hi)).unwrap())
}

fn check_projection(set: &DecisionSet, point: &DVector<f64>, shrink: f64, seed: u64) {
    let p = project(point, set, shrink);
    assert!(set.contains_scaled(&p, shrink, 1e-12));
    assert!((project(&p, set, shrink) - &p).norm() <= 1e-14);
    let dist = (&p - point).norm();
    let mut rng = NoiseStream::from_seed(seed, StreamRole::Learner);
    for _ in 0..1000 {
        // Feasible competitor: any point of the shrunken set.
        let q = project(&(rng.unit_ball_point(3) * 3.0), set, shrink);
        assert!(dist <= (&q - point).norm() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ball_projection_is_optimal(set in ball_strategy(),
                                  p in prop::collection::vec(-4.0f64..4.0, 3),
                                  shrink in 0.0f64..0.9,
                                  seed in any::<u64>()) {
        check_projection(&set, &vector(&p), shrink, seed);
    }

    #[test]
    fn box_projection_is_optimal(set in box_strategy(),
                                 p in prop::collection::vec(-4.0f64..4.0, 3),
                                 shrink in 0.0f64..0.9,
                                 seed in any::<u64>()) {
        check_projection(&set, &vector(&p), shrink, seed);
    }

    #[test]
    fn radii_sandwich_the_set(set in box_strategy(), seed in any::<u64>()) {
        prop_assert!(set.inner_radius() <= set.outer_radius());
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Learner);
        for _ in 0..200 {
            let u = rng.unit_vector(3);
            prop_assert!(set.contains(&(&u * set.inner_radius()), 1e-12));
            let inside = project(&(&u * 10.0), &set, 0.0);
            prop_assert!(inside.norm() <= set.outer_radius() + 1e-12);
        }
    }

    #[test]
    fn two_point_queries_are_symmetric(d in prop::sample::select(vec![2usize, 10]),
                                       seed in any::<u64>(),
                                       rho in 0.01f64..0.3) {
        let set = DecisionSet::unit_ball(d).unwrap();
        let params = TwoPointParams { schedule: StepSchedule::Constant { eta: 0.05 }, rho, xi: rho };
        let mut state = TwoPointState::new(set, params).unwrap();
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Learner);
        for _ in 0..50 {
            let y = state.center().clone();
            let (x1, x2) = state.queries(&mut rng).unwrap();
            let u = state.last_direction().unwrap().clone();
            prop_assert!(((u.norm()) - 1.0).abs() <= 1e-12);
            prop_assert!((((&x1 - &x2).norm()) - 2.0 * rho).abs() <= 1e-12);
            let mid = (&x1 + &x2) * 0.5;
            prop_assert!((mid - &y).amax() <= 1e-15);
            let diff = x1.norm_squared() - x2.norm_squared();
            state.update(diff).unwrap();
        }
    }

    #[test]
    fn lil_ucb_stop_is_monotone_and_capped(cap in 5u64..400, seed in any::<u64>()) {
        let params = LilUcbParams { max_pulls: cap, ..LilUcbParams::default() };
        let mut lil = LilUcb::new(3, params).unwrap();
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Environment);
        let means = [0.55, 0.5, 0.45];
        let mut stopped = false;
        for _ in 0..(2 * cap + 10) {
            match lil.step() {
                LilUcbDecision::Pull(arm) => {
                    prop_assert!(!stopped);
                    lil.observe_reward(arm, f64::from(u8::from(rng.bernoulli(means[arm])))).unwrap();
                }
                LilUcbDecision::Stop { .. } => stopped = true,
            }
            if stopped {
                prop_assert!(lil.is_stopped());
            }
            prop_assert!(lil.total_pulls() <= cap);
        }
        prop_assert!(stopped);
    }
}

#[test]
fn tsallis_normalization_over_random_states() {
    let mut rng = NoiseStream::from_seed(404, StreamRole::Learner);
    for i in 0..10_000 {
        let k = 2 + i % 9;
        let t = 1 + rng.index(100_000) as u64;
        let spread = 10f64.powf(4.0 * rng.uniform() - 1.0);
        let cum: Vec<f64> = (0..k).map(|_| spread * rng.uniform()).collect();
        let eta = TsallisInf::learning_rate(t);
        let w = tsallis_weights(&cum, eta).unwrap();
        assert!(w.iter().all(|&p| p > 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Recover the normaliser from each weight and re-evaluate the mass.
        let zs: Vec<f64> = cum.iter().zip(&w).map(|(l, p)| l - 2.0 / (eta * p.sqrt())).collect();
        let z = zs.iter().sum::<f64>() / k as f64;
        assert!(cum.iter().all(|&l| l > z));
        let mass: f64 = cum.iter().map(|l| 4.0 / (eta * (l - z)).powi(2)).sum();
        assert!((mass - 1.0).abs() < 1e-8, "state {i}: mass {mass}");
    }
}

fn importance_weighted_means(base: &TsallisInf, losses: &[f64], n: usize, rng: &mut NoiseStream) -> Vec<f64> {
    let mut sum = vec![0.0; losses.len()];
    for _ in 0..n {
        let mut s = base.clone();
        let (arm, p) = s.sample(rng).unwrap();
        s.update(arm, losses[arm], p).unwrap();
        for (k, acc) in sum.iter_mut().enumerate() {
            *acc += s.cumulative_estimates()[k] - base.cumulative_estimates()[k];
        }
    }
    sum.iter().map(|s| s / n as f64).collect()
}

#[test]
fn tsallis_estimates_are_unbiased() {
    let losses = [0.2, 0.7, 0.4, 0.9];
    let n = 1_000_000;
    let mut rng = NoiseStream::from_seed(8, StreamRole::Learner);
    let fresh = TsallisInf::new(4).unwrap();
    for (k, m) in importance_weighted_means(&fresh, &losses, n, &mut rng).iter().enumerate() {
        assert!((m - losses[k]).abs() < 0.01, "arm {k}: {m}");
    }

    // Skewed weights: compare against four standard errors of `l/p · 1{I = k}`.
    let mut warm = TsallisInf::new(4).unwrap();
    for _ in 0..20 {
        let (arm, p) = warm.sample(&mut rng).unwrap();
        warm.update(arm, losses[arm], p).unwrap();
    }
    let w = warm.weights().unwrap();
    for (k, m) in importance_weighted_means(&warm, &losses, n, &mut rng).iter().enumerate() {
        let se = losses[k] * ((1.0 / w[k] - 1.0) / n as f64).sqrt();
        assert!((m - losses[k]).abs() < 4.0 * se, "arm {k}: {m}, se {se}");
    }
}

#[test]
fn tsallis_rejects_nonpositive_probability() {
    let mut t = TsallisInf::new(3).unwrap();
    assert!(t.update(0, 0.5, 0.0).is_err());
    assert!(t.update(0, 0.5, -0.1).is_err());
}

#[test]
fn lil_ucb_deterministic_instance_over_seeds() {
    // Rewards 1 and 0; the permutation moves the good arm around.
    for seed in 0..50u64 {
        let good = (seed % 2) as usize;
        let mut lil = LilUcb::new(2, LilUcbParams::default()).unwrap();
        let best = loop {
            match lil.step() {
                LilUcbDecision::Pull(arm) => lil.observe_reward(arm, if arm == good { 1.0 } else { 0.0 }).unwrap(),
                LilUcbDecision::Stop { best, capped } => {
                    assert!(!capped);
                    break best;
                }
            }
        };
        assert_eq!(best, good);
    }
}

/// Ball-smoothed value `E_v f(y + ρv)` for `f = ‖·‖²` in two dimensions by
/// midpoint quadrature in polar coordinates.
fn smoothed_square_norm(y: &[f64; 2], rho: f64) -> f64 {
    let (nr, nt) = (400, 400);
    let mut acc = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) / nr as f64;
        for j in 0..nt {
            let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / nt as f64;
            let (a, b) = (y[0] + rho * r * th.cos(), y[1] + rho * r * th.sin());
            acc += (a * a + b * b) * r;
        }
    }
    acc * 2.0 / (nr * nt) as f64
}

#[test]
fn fkm_estimator_matches_smoothed_gradient() {
    let y = [0.3, 0.0];
    let rho = 0.5;
    let h = 1e-4;
    let oracle: Vec<f64> = (0..2)
        .map(|k| {
            let mut up = y;
            let mut down = y;
            up[k] += h;
            down[k] -= h;
            (smoothed_square_norm(&up, rho) - smoothed_square_norm(&down, rho)) / (2.0 * h)
        })
        .collect();
    // The learner sits at the origin, so evaluate f at the shifted point.
    let set = DecisionSet::unit_ball(2).unwrap();
    let base = FkmState::new(set, FkmParams { eta: 0.01, rho, xi: rho }).unwrap();
    let mut rng = NoiseStream::from_seed(12, StreamRole::QueryNoise);
    let n = 1_000_000;
    let mut mean = DVector::zeros(2);
    for _ in 0..n {
        let mut s = base.clone();
        let x = s.query(&mut rng).unwrap();
        let shifted = x + vector(&y);
        mean += s.estimate(shifted.norm_squared()).unwrap();
    }
    mean /= n as f64;
    for k in 0..2 {
        assert!((mean[k] - oracle[k]).abs() < 0.05, "coordinate {k}: {} vs {}", mean[k], oracle[k]);
    }
}

#[test]
fn two_point_queries_stay_feasible() {
    let set = DecisionSet::cube(vector(&[-1.0, -0.5, -2.0]), vector(&[0.7, 1.0, 0.4])).unwrap();
    let params = TwoPointParams::defaults(&set, 10_000).unwrap();
    let mut state = TwoPointState::new(set.clone(), params).unwrap();
    let mut rng = NoiseStream::from_seed(5, StreamRole::Learner);
    let target = vector(&[0.6, -0.4, 0.3]);
    for _ in 0..10_000 {
        let (x1, x2) = state.queries(&mut rng).unwrap();
        assert!(x1.norm() <= set.outer_radius() && x2.norm() <= set.outer_radius());
        assert!(set.contains(&x1, 1e-9) && set.contains(&x2, 1e-9));
        let f = |x: &DVector<f64>| (x - &target).norm_squared();
        state.update(f(&x1) - f(&x2)).unwrap();
        assert!(set.contains_scaled(state.center(), params.xi, 1e-12));
    }
}

#[test]
fn noiseless_two_point_descent_converges() {
    let d = 5;
    let horizon = 100_000;
    let set = DecisionSet::unit_ball(d).unwrap();
    let params = TwoPointParams::defaults(&set, horizon).unwrap();
    let mut state = TwoPointState::new(set, params).unwrap();
    let target = vector(&[0.3, -0.2, 0.1, 0.0, 0.2]);
    let f = |x: &DVector<f64>| (x - &target).norm_squared();
    let mut rng = NoiseStream::from_seed(3, StreamRole::Learner);
    let mut avg = DVector::zeros(d);
    for _ in 0..horizon {
        avg += state.center();
        let (x1, x2) = state.queries(&mut rng).unwrap();
        state.update(f(&x1) - f(&x2)).unwrap();
    }
    avg /= horizon as f64;
    assert!((avg - target).norm() < 0.05);
}
