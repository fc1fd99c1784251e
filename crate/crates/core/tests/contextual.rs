use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ldp_bandits::contextual::confidence::{glm_beta, glm_sigma, linear_beta, linear_sigma, upsilon};
use ldp_bandits::contextual::server::{glm_local_report, linear_local_report};
use ldp_bandits::contextual::{
    ellipsoid_coverage, ConfidenceSchedule, ContextualLearner, Estimator, Link, ReportStreams, ServerState, Width,
};
use ldp_bandits::harness::precise::Fixed;
use ldp_bandits::{NoiseStream, PrivacyParams, StreamRole};

fn streams(seed: u64) -> ReportStreams {
    ReportStreams {
        gram: NoiseStream::from_seed(seed, StreamRole::Gram),
        moment: NoiseStream::from_seed(seed, StreamRole::Moment),
        gradient: NoiseStream::from_seed(seed, StreamRole::Gradient),
    }
}

fn vector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

#[test]
fn reports_are_unbiased() {
    let x = vector(&[0.6, -0.3, 0.5]);
    let theta = vector(&[0.2, 0.4, -0.5]);
    let y = 0.35;
    let n = 100_000;
    let sigma = 1.0;
    let mut s = streams(31);
    let mut gram = DMatrix::zeros(3, 3);
    let mut moment = DVector::zeros(3);
    let mut grad = DVector::zeros(3);
    let mut glm_moment = DVector::zeros(3);
    for _ in 0..n {
        let r = linear_local_report(&x, y, sigma, &mut s).unwrap();
        gram += r.gram;
        moment += r.moment;
        let g = glm_local_report(&x, y, &theta, Link::Logistic, sigma, &mut s).unwrap();
        grad += g.gradient.unwrap();
        glm_moment += g.moment;
    }
    let nf = n as f64;
    let bound = 3.0 * sigma / nf.sqrt();
    assert!((gram / nf - &x * x.transpose()).amax() < 0.02);
    assert!((moment / nf - &x * y).amax() < bound);
    assert!((glm_moment / nf - &x * x.dot(&theta)).amax() < bound);
    let expected = &x * (Link::Logistic.g(x.dot(&theta)) - y);
    assert!((grad / nf - expected).amax() < bound * Link::Logistic.value_bound());
}

#[test]
fn reports_check_their_inputs() {
    let mut s = streams(1);
    assert!(linear_local_report(&vector(&[1.0, 1.0]), 0.0, 1.0, &mut s).is_err());
    assert!(linear_local_report(&vector(&[0.5, 0.5]), 3.0, 1.0, &mut s).is_err());
    assert!(glm_local_report(&vector(&[0.5, 0.5]), 0.0, &vector(&[2.0, 0.0]), Link::Logistic, 1.0, &mut s).is_err());
}

#[test]
fn accumulation_is_order_invariant() {
    let mut s = streams(32);
    let mut rng = NoiseStream::from_seed(32, StreamRole::Context);
    let reports: Vec<_> = (0..10)
        .map(|_| {
            let x = rng.unit_ball_point(4);
            linear_local_report(&x, rng.uniform() - 0.5, 2.0, &mut s).unwrap()
        })
        .collect();
    let mut forward = ServerState::new(4);
    let mut backward = ServerState::new(4);
    let c = 50.0;
    forward.initialize(c).unwrap();
    backward.initialize(c).unwrap();
    for r in &reports {
        forward.linear_update(r, c).unwrap();
    }
    for i in [3, 7, 0, 9, 1, 5, 2, 8, 6, 4] {
        backward.linear_update(&reports[i], c).unwrap();
    }
    assert!((forward.theta_tilde() - backward.theta_tilde()).amax() < 1e-10);
    let g = forward.gram();
    assert!((0..4).all(|i| (0..4).all(|j| g[(i, j)].to_bits() == g[(j, i)].to_bits())));
}

#[test]
fn widths_grow_with_time() {
    let sigma = linear_sigma(&PrivacyParams::new(1.0, 1e-5).unwrap());
    let mut prev_lin = 0.0;
    let mut prev_glm = 0.0;
    for t in 1..=10_000 {
        let lin = linear_beta(t, 3, 10_000, 0.1, sigma);
        let glm = glm_beta(t, 3, 10_000, 0.1, 1.0, Link::Logistic, sigma);
        assert!(lin >= prev_lin && glm >= prev_glm, "t = {t}");
        prev_lin = lin;
        prev_glm = glm;
    }
}

#[test]
fn linear_width_reference_value() {
    // Υ = 2(8 + 2 ln 20); β = 2√(4 ln 10) + (√(3Υ) + √(16/Υ))·4 ln 10.
    let frozen = 97.42262209543834;
    let ups = upsilon(4, 4, 10, 1.0, 1.0);
    assert!((ups - 27.98292909421596).abs() < 1e-12);
    let beta = linear_beta(4, 4, 10, 1.0, 1.0);
    assert!((beta - frozen).abs() < 1e-12, "{beta}");

    let two = Fixed::from_u64(2);
    let dlog = Fixed::from_u64(4) * Fixed::from_u64(10).ln();
    let ups_ref = two.clone() * (Fixed::from_u64(8) + two.clone() * Fixed::from_u64(20).ln());
    let beta_ref = two * dlog.sqrt()
        + ((Fixed::from_u64(3) * ups_ref.clone()).sqrt() + (Fixed::from_u64(16) / ups_ref).sqrt()) * dlog;
    assert!((beta_ref.to_f64() - frozen).abs() < 1e-12);
}

#[test]
fn privacy_scales_match_closed_forms() {
    let p = PrivacyParams::new(1.0, 1e-5).unwrap();
    assert!((linear_sigma(&p) - 6.0 * (2.0 * (2.5e5f64).ln()).sqrt()).abs() < 1e-12);
    assert!((glm_sigma(&p) - 6.0 * (2.0 * (3.75e5f64).ln()).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn widths_scale_sublinearly_in_sigma(t in 1u64..100_000, d in 1usize..20, sigma in 0.01f64..100.0,
                                         alpha in 0.001f64..0.5) {
        let horizon = 100_000;
        let r = linear_beta(t, d, horizon, alpha, 2.0 * sigma) / linear_beta(t, d, horizon, alpha, sigma);
        prop_assert!(r > 1.0 && r <= 2.0 + 1e-12, "linear ratio {}", r);
        let g = glm_beta(t, d, horizon, alpha, 1.0, Link::Logistic, 2.0 * sigma)
            / glm_beta(t, d, horizon, alpha, 1.0, Link::Logistic, sigma);
        prop_assert!(g > 1.0 && g <= 2.0 + 1e-12, "glm ratio {}", g);
    }

    #[test]
    fn argmax_survives_common_scaling(seed in any::<u64>(), scale in 0.05f64..1.0, c in 0.1f64..100.0) {
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Context);
        let arms: Vec<_> = (0..8).map(|_| rng.unit_ball_point(3)).collect();
        let scaled: Vec<_> = arms.iter().map(|x| x * scale).collect();
        let mut server = ServerState::new(3);
        server.initialize(c).unwrap();
        prop_assert_eq!(server.select(&arms, 2.0).unwrap(), server.select(&scaled, 2.0).unwrap());
    }
}

fn run_learner(
    learner: &mut ContextualLearner,
    theta_star: &DVector<f64>,
    link: Link,
    rounds: usize,
    seed: u64,
    mut check: impl FnMut(&ContextualLearner, &DVector<f64>),
) -> Vec<ldp_bandits::contextual::RoundRecord> {
    let mut ctx = NoiseStream::from_seed(seed, StreamRole::Context);
    let mut env = NoiseStream::from_seed(seed, StreamRole::Environment);
    let mut s = streams(seed);
    let mut records = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let arms: Vec<_> = (0..5).map(|_| ctx.unit_ball_point(theta_star.len())).collect();
        let arm = learner.select(&arms).unwrap();
        let x = &arms[arm];
        let mean = link.g(x.dot(theta_star));
        let y = (mean + 0.1 * env.standard_normal()).clamp(-2.0, 2.0);
        check(learner, x);
        let report = learner.report(x, y, &mut s).unwrap();
        learner.update(&report).unwrap();
        records.push(learner.record(arm, y, theta_star).unwrap());
    }
    records
}

#[test]
fn rough_estimate_stays_in_unit_ball() {
    let sigma = glm_sigma(&PrivacyParams::new(1.0, 1e-5).unwrap());
    let schedule = ConfidenceSchedule::new(3, 100_000, 0.1, sigma, Link::Logistic, Width::Glm { kappa: 1.0 }).unwrap();
    let mut learner = ContextualLearner::new(3, schedule, Link::Logistic, Estimator::Glm { zeta: 0.5 }).unwrap();
    let theta_star = vector(&[0.5, -0.4, 0.3]);
    let mut probes = NoiseStream::from_seed(33, StreamRole::Table);
    run_learner(&mut learner, &theta_star, Link::Logistic, 100_000, 33, |l, x| {
        let th = l.server().theta_hat();
        assert!(th.norm() <= 1.0 + 1e-12);
        assert!(x.dot(th).abs() <= 1.0 + 1e-12);
        let probe = probes.unit_ball_point(3);
        assert!(probe.dot(th).abs() <= 1.0 + 1e-12);
    });
}

#[test]
fn empty_ellipsoid_never_contains() {
    let sigma = linear_sigma(&PrivacyParams::new(1.0, 1e-5).unwrap());
    let schedule = ConfidenceSchedule::new(3, 2000, 0.1, sigma, Link::Identity, Width::Linear).unwrap();
    let mut learner = ContextualLearner::new(3, schedule, Link::Identity, Estimator::Linear).unwrap();
    let theta_star = vector(&[0.3, 0.2, -0.4]);
    let mut contained = 0usize;
    let rounds = 2000;
    run_learner(&mut learner, &theta_star, Link::Identity, rounds, 34, |l, _| {
        // β = 0 leaves only the centre.
        contained += usize::from(l.server().ellipsoid_distance_sq(&theta_star).unwrap() <= 0.0);
    });
    assert!((contained as f64 / rounds as f64) < 0.01);
}

#[test]
fn wide_noiseless_ellipsoid_always_contains() {
    let width = Width::Baseline { lambda: 1e6, noise: 0.1, norm: 1.0 };
    let schedule = ConfidenceSchedule::new(3, 2000, 0.1, 0.0, Link::Identity, width).unwrap();
    let mut learner = ContextualLearner::new(3, schedule, Link::Identity, Estimator::Linear).unwrap();
    let theta_star = vector(&[0.3, 0.2, -0.4]);
    let records = run_learner(&mut learner, &theta_star, Link::Identity, 2000, 35, |_, _| {});
    assert!(learner.server().theta_tilde().norm() < 0.01);
    assert_eq!(ellipsoid_coverage(&records), 1.0);
}

#[test]
fn private_learner_is_deterministic() {
    let sigma = glm_sigma(&PrivacyParams::new(2.0, 1e-5).unwrap());
    let run = || {
        let schedule =
            ConfidenceSchedule::new(3, 500, 0.1, sigma, Link::Logistic, Width::Glm { kappa: 1.0 }).unwrap();
        let mut learner = ContextualLearner::new(3, schedule, Link::Logistic, Estimator::Glm { zeta: 0.1 }).unwrap();
        run_learner(&mut learner, &vector(&[0.1, 0.5, 0.2]), Link::Logistic, 500, 36, |_, _| {})
    };
    assert_eq!(run(), run());
}
