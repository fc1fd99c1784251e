use nalgebra::DVector;
use proptest::prelude::*;

use ldp_bandits::mechanisms::{
    calibrate_gaussian, calibrate_laplace, perturb_scalar, perturb_vector, symmetric_gaussian_matrix,
};
use ldp_bandits::{NoiseKind, NoiseSpec, NoiseStream, PrivacyParams, StreamRole};

fn mean_and_variance(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        s += x;
        s2 += x * x;
    }
    let m = s / n;
    (m, s2 / n - m * m)
}

#[test]
fn scalar_noise_is_centred() {
    let spec = NoiseSpec::gaussian(1.0).unwrap();
    let mut rng = NoiseStream::from_seed(21, StreamRole::Feedback);
    let (m, v) = mean_and_variance((0..1_000_000).map(|_| perturb_scalar(0.0, &spec, &mut rng)));
    assert!(m.abs() < 0.01, "mean {m}");
    assert!((v - 1.0).abs() < 0.01, "variance {v}");
}

#[test]
fn laplace_noise_has_twice_squared_scale_variance() {
    let spec = calibrate_laplace(2.0, 3.0).unwrap();
    assert_eq!(spec.kind(), NoiseKind::Laplace);
    assert_eq!(spec.scale(), 1.5);
    let mut rng = NoiseStream::from_seed(22, StreamRole::Feedback);
    let (m, v) = mean_and_variance((0..1_000_000).map(|_| spec.sample(&mut rng)));
    assert!(m.abs() < 0.01);
    assert!((v / 4.5 - 1.0).abs() < 0.02, "variance {v}");
}

#[test]
fn vector_noise_per_coordinate_variance() {
    let spec = NoiseSpec::gaussian(2.0).unwrap();
    let mut rng = NoiseStream::from_seed(23, StreamRole::Gradient);
    let d = 4;
    let n = 100_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|_| perturb_vector(&DVector::zeros(d), &spec, &mut rng)).collect();
    for k in 0..d {
        let (m, v) = mean_and_variance(draws.iter().map(|x| x[k]));
        assert!(m.abs() < 0.03);
        assert!((v - 4.0).abs() < 0.1, "coordinate {k}: {v}");
    }
    // Distinct coordinates are uncorrelated.
    let cov: f64 = draws.iter().map(|x| x[0] * x[1]).sum::<f64>() / n as f64;
    assert!(cov.abs() < 0.1);
}

#[test]
fn matrix_off_diagonal_variance() {
    let mut rng = NoiseStream::from_seed(24, StreamRole::Gram);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| symmetric_gaussian_matrix(3, 3.0, &mut rng).unwrap().entries()[(0, 1)])
        .collect();
    let (m, v) = mean_and_variance(draws.into_iter());
    assert!(m.abs() < 0.05);
    assert!((v - 9.0).abs() < 0.3, "variance {v}");
}

#[test]
fn streams_are_deterministic() {
    let spec = NoiseSpec::gaussian(1.3).unwrap();
    let draw = |seed| {
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Feedback);
        (0..64).map(|_| spec.sample(&mut rng).to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}

#[test]
fn invalid_privacy_parameters_are_rejected() {
    assert!(PrivacyParams::new(0.0, 1e-5).is_err());
    assert!(PrivacyParams::new(f64::INFINITY, 1e-5).is_err());
    assert!(PrivacyParams::new(1.0, 0.0).is_err());
    assert!(PrivacyParams::new(1.0, 1.0).is_err());
    let p = PrivacyParams::new(1.0, 1e-5).unwrap();
    assert!(calibrate_gaussian(&p, -1.0).is_err());
    assert!(calibrate_gaussian(&p, f64::NAN).is_err());
    assert!(NoiseSpec::gaussian(-0.5).is_err());
}

proptest! {
    #[test]
    fn sigma_decreases_in_epsilon(eps in 0.01f64..50.0, bump in 1.001f64..10.0,
                                  delta in 1e-12f64..0.5, sens in 0.01f64..100.0) {
        let lo = PrivacyParams::new(eps, delta).unwrap();
        let hi = PrivacyParams::new(eps * bump, delta).unwrap();
        let s_lo = calibrate_gaussian(&lo, sens).unwrap().scale();
        let s_hi = calibrate_gaussian(&hi, sens).unwrap().scale();
        prop_assert!(s_hi < s_lo);
    }

    #[test]
    fn sigma_increases_in_sensitivity(eps in 0.01f64..50.0, delta in 1e-12f64..0.5,
                                      sens in 0.01f64..100.0, bump in 1.001f64..10.0) {
        let p = PrivacyParams::new(eps, delta).unwrap();
        let a = calibrate_gaussian(&p, sens).unwrap().scale();
        let b = calibrate_gaussian(&p, sens * bump).unwrap().scale();
        prop_assert!(b > a);
        let expected = sens * (2.0 * (1.25 / delta).ln()).sqrt() / eps;
        prop_assert!((a - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn noise_matrices_are_exactly_symmetric(d in 1usize..=128, sigma in 0.1f64..10.0, seed in any::<u64>()) {
        let mut rng = NoiseStream::from_seed(seed, StreamRole::Gram);
        let m = symmetric_gaussian_matrix(d, sigma, &mut rng).unwrap();
        prop_assert_eq!(m.dimension(), d);
        prop_assert!(m.is_symmetric());
        let e = m.entries();
        for i in 0..d {
            for j in 0..i {
                prop_assert_eq!(e[(i, j)].to_bits(), e[(j, i)].to_bits());
            }
        }
    }
}
