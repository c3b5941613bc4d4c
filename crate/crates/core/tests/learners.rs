//! Learner invariants over sampled transition streams.

use emphatic::experiments::{behavior_distribution, sample_trajectory};
use emphatic::generate::{random_task, RandomTaskConfig};
use emphatic::learners::{emphatic_td0_step, emphatic_td_lambda_step, offpolicy_td0_step, td0_step};
use emphatic::mdp::{sample_state, Transition};
use emphatic::{build_scenario, Algorithm, Learner, LearnerState, TaskSpec};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream(task: &TaskSpec, len: usize, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = behavior_distribution(task).unwrap();
    let s0 = sample_state(&d, &mut rng);
    sample_trajectory(task, s0, len, &mut rng)
}

#[test]
fn on_policy_streams_have_unit_ratios_and_td0_variants_agree() {
    let cfg = RandomTaskConfig { on_policy: true, constant_gamma: Some(0.9), ..RandomTaskConfig::default() };
    let task = random_task(&mut ChaCha8Rng::seed_from_u64(4), &cfg);
    let theta0 = DVector::from_element(task.num_features(), 0.5);
    let mut on = LearnerState::new(theta0.clone(), 0.05);
    let mut off = LearnerState::new(theta0, 0.05);
    for tr in stream(&task, 2000, 5) {
        assert_eq!(tr.rho, 1.0);
        td0_step(&mut on, &tr, &task).unwrap();
        offpolicy_td0_step(&mut off, &tr, &task).unwrap();
        assert_eq!(on.theta, off.theta);
    }
}

#[test]
fn zero_ratio_steps_freeze_theta_and_clear_the_trace() {
    let task = build_scenario("chain5").unwrap().task.with_lambda(DVector::from_element(5, 0.7));
    let mut off = LearnerState::new(DVector::from_element(3, 0.3), 0.1);
    let mut emph = LearnerState::new(DVector::from_element(3, 0.3), 0.1);
    let mut zero_steps = 0;
    for tr in stream(&task, 3000, 6) {
        let before = off.theta.clone();
        offpolicy_td0_step(&mut off, &tr, &task).unwrap();
        emphatic_td_lambda_step(&mut emph, &tr, &task).unwrap();
        if tr.rho == 0.0 {
            zero_steps += 1;
            assert_eq!(off.theta, before);
            assert!(emph.trace.iter().all(|&x| x == 0.0));
        }
    }
    assert!(zero_steps > 1000);
}

#[test]
fn halving_alpha_halves_each_increment() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let task = random_task(&mut rng, &RandomTaskConfig::default());
    for tr in stream(&task, 200, 10) {
        let theta = DVector::from_fn(task.num_features(), |_, _| rng.random_range(-1.0..1.0));
        for alg in Algorithm::ALL {
            let mut full = Learner::new(alg, LearnerState::new(theta.clone(), 0.2));
            let mut half = Learner::new(alg, LearnerState::new(theta.clone(), 0.1));
            full.step(&tr, &task).unwrap();
            half.step(&tr, &task).unwrap();
            let a = &full.state.theta - &theta;
            let b = &half.state.theta - &theta;
            assert!((a * 0.5 - b).amax() <= 1e-15 * (1.0 + theta.amax()), "{alg}");
        }
    }
}

#[test]
fn first_emphatic_step_is_an_off_policy_step() {
    let task = build_scenario("th2th-episodic").unwrap().task;
    for tr in stream(&task, 50, 12).into_iter().take(50) {
        let mut a = LearnerState::new(DVector::from_element(1, 2.0), 0.1);
        let mut b = a.clone();
        emphatic_td0_step(&mut a, &tr, &task).unwrap();
        offpolicy_td0_step(&mut b, &tr, &task).unwrap();
        assert_eq!(a.theta, b.theta);
    }
}

#[test]
fn bounded_traces_stay_bounded() {
    let task = build_scenario("th2th-continuing").unwrap().task;
    let mut state = LearnerState::new(DVector::from_element(1, 1.0), 0.001).with_bound(5.0);
    for tr in stream(&task, 5000, 13) {
        let rec = emphatic_td_lambda_step(&mut state, &tr, &task).unwrap();
        assert!(rec.followon <= 5.0);
        assert!(state.trace.amax() <= 5.0);
    }
}
