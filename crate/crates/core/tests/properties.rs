//! Property tests of the analysis against the series-based reference.

mod common;

use emphatic::analysis::{emphasis_vector, followon_vector, p_lambda, pbe, pbe_from_expected_update};
use emphatic::generate::{random_task, RandomTaskConfig};
use emphatic::mdp::importance_ratio;
use emphatic::{
    definiteness_certificate, expected_update, stationary_distribution, true_values, Algorithm, TaskSpec, Verdict,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{close, column_sums, min_sym_eig, Reference};

fn task_from_seed(seed: u64, cfg: &RandomTaskConfig) -> TaskSpec {
    random_task(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn behavior_distribution_matches_power_method(seed in any::<u64>()) {
        let task = task_from_seed(seed, &RandomTaskConfig::default());
        let oracle = Reference::new(&task);
        let d = stationary_distribution(&common::kernel(&task, false)).unwrap();
        prop_assert!(close(&d, &oracle.d_mu, 1e-12), "{} vs {}", d, oracle.d_mu);
    }

    #[test]
    fn emphatic_key_column_sums_are_weighted_interest(seed in any::<u64>()) {
        let task = task_from_seed(seed, &RandomTaskConfig::default());
        let oracle = Reference::new(&task);
        let upd = expected_update(&task, Algorithm::Emphatic).unwrap();
        prop_assert!(close(&column_sums(&upd.key), &oracle.ivec, 1e-9));
        let cert = definiteness_certificate(&upd.key).unwrap();
        prop_assert!(cert.min_sym_eig > -1e-10);
        prop_assert!((cert.min_sym_eig - min_sym_eig(&upd.key)).abs() < 1e-9);
        prop_assert_ne!(cert.verdict, Verdict::Indefinite);
    }

    #[test]
    fn followon_lambda_kernel_and_emphasis_match_series(seed in any::<u64>()) {
        let task = task_from_seed(seed, &RandomTaskConfig::default());
        let oracle = Reference::new(&task);
        prop_assert!(close(&followon_vector(&task).unwrap(), &oracle.f, 1e-9));
        prop_assert!((p_lambda(&task).unwrap() - &oracle.p_lambda).amax() < 1e-9);
        // Series route for m against the library's closed-form route.
        prop_assert!(close(&emphasis_vector(&task).unwrap(), &oracle.m, 1e-9));
        prop_assert!(close(&true_values(&task).unwrap(), &oracle.v_pi, 1e-8));
    }

    #[test]
    fn importance_ratios_average_to_one(seed in any::<u64>()) {
        let task = task_from_seed(seed, &RandomTaskConfig::default());
        for s in 0..task.num_states() {
            let total: f64 = (0..task.num_actions())
                .map(|a| task.behavior.prob(s, a) * importance_ratio(&task, s, a).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn on_policy_ratios_are_one(seed in any::<u64>()) {
        let cfg = RandomTaskConfig { on_policy: true, ..RandomTaskConfig::default() };
        let task = task_from_seed(seed, &cfg);
        for s in 0..task.num_states() {
            for a in 0..task.num_actions() {
                prop_assert_eq!(importance_ratio(&task, s, a).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn pbe_routes_agree(seed in any::<u64>(), scale in -2.0f64..2.0) {
        let task = task_from_seed(seed, &RandomTaskConfig::default());
        let theta = DVector::from_element(task.num_features(), scale);
        let a = pbe(&task, &theta).unwrap();
        let b = pbe_from_expected_update(&task, &theta).unwrap();
        let oracle = Reference::new(&task).pbe_norm(&task, &theta);
        let tol = 1e-8 * (1.0 + oracle);
        prop_assert!((a.weighted_norm - oracle).abs() < tol);
        prop_assert!((b.weighted_norm - oracle).abs() < tol);
    }

    #[test]
    fn on_policy_key_column_sums(seed in any::<u64>(), g in prop::sample::select(vec![0.5, 0.9, 0.99])) {
        let cfg = RandomTaskConfig { on_policy: true, constant_gamma: Some(g), ..RandomTaskConfig::default() };
        let task = task_from_seed(seed, &cfg);
        let upd = expected_update(&task, Algorithm::OnPolicyTd0).unwrap();
        let d_pi = common::stationary(&common::kernel(&task, true));
        prop_assert!(close(&column_sums(&upd.key), &(d_pi * (1.0 - g)), 1e-12));
    }
}
