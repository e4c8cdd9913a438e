//! Randomized invariants of the channel model, the link metrics, the SCA
//! surrogates and the complex-to-real embedding.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rsma_isac::conic::embed::{de_embed, embed_complex, from_coords, to_coords};
use rsma_isac::geometry::{
    channel_covariance, standard_complex_normal, steering_derivative, steering_vector, ArrayConfig, UserGeometry,
};
use rsma_isac::linalg::{hermitian_defect, min_eigenvalue, outer, real_trace, CMat, CVec};
use rsma_isac::metrics::{
    common_sinr, eaves_common_sinr, eaves_private_sinr, evaluate, private_sinr, BeamformerSet, LinkModel,
    MatrixRole, RateAllocation,
};
use rsma_isac::sca::{linearize_upper, TraceLogTerm};

fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(n, rank, |_, _| standard_complex_normal(rng));
    &g * g.adjoint()
}

fn random_set(n: usize, k: usize, rng: &mut ChaCha8Rng) -> BeamformerSet {
    let mut bf = BeamformerSet::zeros(n, k, true, true);
    bf.w_common = Some(random_psd(n, 1, rng));
    bf.w_extra = Some(random_psd(n, 2, rng));
    for w in bf.w_private.iter_mut() {
        *w = random_psd(n, 1, rng);
    }
    bf
}

fn node(distance: f64, azimuth: f64, rician_factor: f64) -> UserGeometry {
    UserGeometry {
        distance,
        azimuth,
        rician_factor,
        pathloss_exponent: 2.2,
        ref_gain: 1e-3,
    }
}

fn link(n: usize, rng_seed: u64) -> LinkModel {
    let array = ArrayConfig::half_wavelength(n, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    use rand::Rng;
    let mut pick = || node(rng.random_range(20.0..120.0), rng.random_range(-1.4..1.4), rng.random_range(0.0..200.0));
    LinkModel {
        users: (0..2).map(|_| channel_covariance(&pick(), &array).unwrap()).collect(),
        eavesdroppers: (0..2).map(|_| channel_covariance(&pick(), &array).unwrap()).collect(),
        user_noise: 1e-10,
        eaves_noise: 1e-10,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn steering_entries_have_unit_modulus(theta in -1.57f64..1.57, n in 1usize..64) {
        let a = steering_vector(theta, n, 0.5).unwrap();
        for z in a.iter() {
            prop_assert!((z.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn steering_derivative_matches_finite_difference(theta in -1.5f64..1.5, n in 2usize..32) {
        let h = 1e-6;
        let d = steering_derivative(theta, n, 0.5).unwrap();
        let fd = (steering_vector(theta + h, n, 0.5).unwrap() - steering_vector(theta - h, n, 0.5).unwrap())
            .unscale(2.0 * h);
        prop_assert!((&fd - &d).norm() <= 1e-6 * d.norm().max(1e-3));
    }

    #[test]
    fn channel_covariance_is_psd(d in 1.0f64..500.0, theta in -1.57f64..1.57, rho in 0.0f64..1e4, n in 1usize..16) {
        let array = ArrayConfig::half_wavelength(n, n).unwrap();
        let h = channel_covariance(&node(d, theta, rho), &array).unwrap().covariance;
        prop_assert!(min_eigenvalue(&h) >= -1e-12 * real_trace(&h));
    }

    #[test]
    fn secrecy_rates_are_clamped(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = link(4, seed ^ 7);
        let bf = random_set(4, 2, &mut rng);
        let r = evaluate(&bf, &RateAllocation::zeros(2), &model).unwrap();
        for (k, &s) in r.secrecy_rates.iter().enumerate() {
            prop_assert!(s >= 0.0);
            let worst = r.eaves_private_rates[k].iter().copied().fold(0.0f64, f64::max);
            let unclamped = r.private_rates[k] - worst;
            prop_assert_eq!(s, unclamped.max(0.0));
        }
    }

    #[test]
    fn noise_free_sinrs_are_homogeneous(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = link(4, seed ^ 3);
        let mut bf = random_set(4, 2, &mut rng);
        bf.w_an = Some(random_psd(4, 4, &mut rng));
        let scaled = bf.scaled(c);
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
        prop_assert!(rel(scaled.total_power(), c * bf.total_power()));
        for ch in &model.users {
            prop_assert!(rel(common_sinr(&bf, ch, 0.0).unwrap(), common_sinr(&scaled, ch, 0.0).unwrap()));
            for k in 0..2 {
                prop_assert!(rel(private_sinr(&bf, ch, k, 0.0).unwrap(), private_sinr(&scaled, ch, k, 0.0).unwrap()));
            }
        }
        for ch in &model.eavesdroppers {
            prop_assert!(rel(eaves_common_sinr(&bf, ch, 0.0).unwrap(), eaves_common_sinr(&scaled, ch, 0.0).unwrap()));
            for k in 0..2 {
                prop_assert!(rel(
                    eaves_private_sinr(&bf, ch, k, 0.0).unwrap(),
                    eaves_private_sinr(&scaled, ch, k, 0.0).unwrap()
                ));
            }
        }
    }

    #[test]
    fn security_check_matches_rate_comparison(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = link(4, seed ^ 11);
        let bf = random_set(4, 2, &mut rng);
        let r = evaluate(&bf, &RateAllocation::zeros(2), &model).unwrap();
        let min_user = r.common_rates.iter().copied().fold(f64::INFINITY, f64::min);
        let max_eve = r.eaves_common_rates.iter().copied().fold(0.0f64, f64::max);
        prop_assert_eq!(r.common_stream_secure(1e-6), max_eve <= min_user + 1e-6);
    }

    #[test]
    fn tangent_is_tight_and_above(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchor = random_set(4, 2, &mut rng);
        let term = TraceLogTerm::new(0.5)
            .with(MatrixRole::Common, &random_psd(4, 4, &mut rng))
            .with(MatrixRole::Private(1), &random_psd(4, 2, &mut rng))
            .with(MatrixRole::Extra, &random_psd(4, 1, &mut rng));
        let tangent = linearize_upper(&term, &anchor).unwrap();
        let exact = term.log2_value(&anchor);
        prop_assert!((tangent.eval(&anchor) - exact).abs() <= 1e-9 * exact.abs().max(1.0));
        for _ in 0..10 {
            let p = random_set(4, 2, &mut rng).scaled(rand::Rng::random_range(&mut rng, 0.0..3.0));
            prop_assert!(tangent.eval(&p) >= term.log2_value(&p) - 1e-12);
        }
    }

    #[test]
    fn embedding_round_trip(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| standard_complex_normal(&mut rng));
        let h = &g + g.adjoint();
        let back = de_embed(&embed_complex(&h).unwrap());
        prop_assert!(hermitian_defect(&back) <= 1e-9);
        prop_assert!((&back - &h).norm() <= 1e-12 * h.norm().max(1.0));
        let coords = from_coords(n, &to_coords(&h));
        prop_assert!((&coords - &h).norm() <= 1e-12 * h.norm().max(1.0));
        // tr(A B) is preserved up to the factor 2 of the doubled embedding
        let b = random_psd(n, n, &mut rng);
        let lhs = 2.0 * (&h * &b).trace().re;
        let rhs = (embed_complex(&h).unwrap() * embed_complex(&b).unwrap()).trace();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn rank_one_outer_product_is_psd(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = CVec::from_fn(n, |_, _| standard_complex_normal(&mut rng) * Complex64::new(2.0, 0.0));
        let w = outer(&v);
        prop_assert!(min_eigenvalue(&w) >= -1e-12 * real_trace(&w));
        prop_assert!((real_trace(&w) - v.norm_squared()).abs() <= 1e-12 * v.norm_squared().max(1.0));
    }
}
