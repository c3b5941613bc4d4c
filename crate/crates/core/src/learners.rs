//! Online linear learners.
//!
//! Each step function consumes one [`Transition`] and mutates a
//! [`LearnerState`]. Within a step the emphatic quantities are updated in
//! the order F → M → e → θ. The ratio of the previous step is carried in
//! the state and starts at zero, so the first followon value is `i(S_0)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algorithm::Algorithm;
use crate::error::{Error, Result};
use crate::mdp::{TaskSpec, Transition};

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub theta: DVector<f64>,
    pub trace: DVector<f64>,
    pub followon: f64,
    pub emphasis: f64,
    pub step: u64,
    pub alpha: f64,
    prev_rho: f64,
    bound: Option<f64>,
}

impl LearnerState {
    pub fn new(theta: DVector<f64>, alpha: f64) -> Self {
        let n = theta.len();
        LearnerState {
            theta,
            trace: DVector::zeros(n),
            followon: 0.0,
            emphasis: 0.0,
            step: 0,
            alpha,
            prev_rho: 0.0,
            bound: None,
        }
    }

    /// Truncates the followon trace to `[0, bound]` and each trace
    /// component to `[-bound, bound]`. Off unless set.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Importance ratio seen on the previous step (zero before the first).
    pub fn prev_rho(&self) -> f64 {
        self.prev_rho
    }

    fn clamp_followon(&self, f: f64) -> f64 {
        match self.bound {
            Some(b) => f.min(b),
            None => f,
        }
    }

    fn clamp_trace(&self, e: &mut DVector<f64>) {
        if let Some(b) = self.bound {
            e.apply(|x| *x = x.clamp(-b, b));
        }
    }
}

/// Per-step telemetry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub theta_after: Vec<f64>,
    pub td_error: f64,
    pub emphasis: f64,
    pub followon: f64,
    pub trace_norm: f64,
}

/// `R + γ(S')θᵀφ(S') − θᵀφ(S)`.
fn td_error(theta: &DVector<f64>, tr: &Transition, task: &TaskSpec) -> f64 {
    let phi = &task.features;
    tr.reward + task.gamma[tr.next_state] * phi.value(theta, tr.next_state) - phi.value(theta, tr.state)
}

fn commit(
    state: &mut LearnerState,
    theta: DVector<f64>,
    trace: DVector<f64>,
    followon: f64,
    emphasis: f64,
    rho: f64,
    delta: f64,
) -> Result<StepRecord> {
    let finite = theta.iter().chain(trace.iter()).all(|x| x.is_finite())
        && followon.is_finite()
        && emphasis.is_finite()
        && delta.is_finite();
    if !finite {
        return Err(Error::NonFinite(format!("learner state at step {}", state.step)));
    }
    state.theta = theta;
    state.trace = trace;
    state.followon = followon;
    state.emphasis = emphasis;
    state.prev_rho = rho;
    state.step += 1;
    Ok(StepRecord {
        theta_after: state.theta.iter().copied().collect(),
        td_error: delta,
        emphasis,
        followon,
        trace_norm: state.trace.norm(),
    })
}

/// Conventional linear TD(0); ignores the importance ratio.
pub fn td0_step(state: &mut LearnerState, tr: &Transition, task: &TaskSpec) -> Result<StepRecord> {
    let delta = td_error(&state.theta, tr, task);
    let theta = &state.theta + task.features.of(tr.state) * (state.alpha * delta);
    let (trace, f, m) = (state.trace.clone(), state.followon, state.emphasis);
    commit(state, theta, trace, f, m, tr.rho, delta)
}

/// TD(0) with the whole update scaled by ρ.
pub fn offpolicy_td0_step(state: &mut LearnerState, tr: &Transition, task: &TaskSpec) -> Result<StepRecord> {
    let delta = td_error(&state.theta, tr, task);
    let theta = &state.theta + task.features.of(tr.state) * (state.alpha * tr.rho * delta);
    let (trace, f, m) = (state.trace.clone(), state.followon, state.emphasis);
    commit(state, theta, trace, f, m, tr.rho, delta)
}

/// Emphatic TD(0) with unit interest: `F_t = γ(S_t) ρ_{t−1} F_{t−1} + 1`,
/// then `θ += α F_t ρ_t δ_t φ(S_t)`.
pub fn emphatic_td0_step(state: &mut LearnerState, tr: &Transition, task: &TaskSpec) -> Result<StepRecord> {
    let followon = state.clamp_followon(task.gamma[tr.state] * state.prev_rho * state.followon + 1.0);
    let delta = td_error(&state.theta, tr, task);
    let theta = &state.theta + task.features.of(tr.state) * (state.alpha * followon * tr.rho * delta);
    let trace = state.trace.clone();
    commit(state, theta, trace, followon, followon, tr.rho, delta)
}

/// Emphatic TD(λ) with state-dependent γ, λ and interest.
pub fn emphatic_td_lambda_step(state: &mut LearnerState, tr: &Transition, task: &TaskSpec) -> Result<StepRecord> {
    let s = tr.state;
    let (gamma, lambda, interest) = (task.gamma[s], task.lambda[s], task.interest[s]);
    let followon = state.clamp_followon(state.prev_rho * gamma * state.followon + interest);
    let emphasis = lambda * interest + (1.0 - lambda) * followon;
    let mut trace = (&state.trace * (gamma * lambda) + task.features.of(s) * emphasis) * tr.rho;
    state.clamp_trace(&mut trace);
    let delta = td_error(&state.theta, tr, task);
    let theta = &state.theta + &trace * (state.alpha * delta);
    commit(state, theta, trace, followon, emphasis, tr.rho, delta)
}

/// One step of `θ̄ ← θ̄ + α(b − Aθ̄)`.
pub fn deterministic_step(theta_bar: &DVector<f64>, a_mat: &DMatrix<f64>, b_vec: &DVector<f64>, alpha: f64) -> DVector<f64> {
    theta_bar + (b_vec - a_mat * theta_bar) * alpha
}

/// An algorithm bundled with its state.
#[derive(Clone, Debug)]
pub struct Learner {
    pub algorithm: Algorithm,
    pub state: LearnerState,
}

impl Learner {
    pub fn new(algorithm: Algorithm, state: LearnerState) -> Self {
        Learner { algorithm, state }
    }

    pub fn step(&mut self, tr: &Transition, task: &TaskSpec) -> Result<StepRecord> {
        let step = match self.algorithm {
            Algorithm::OnPolicyTd0 => td0_step,
            Algorithm::OffPolicyTd0 => offpolicy_td0_step,
            Algorithm::EmphaticTd0 => emphatic_td0_step,
            Algorithm::Emphatic => emphatic_td_lambda_step,
        };
        step(&mut self.state, tr, task)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::build_scenario;
    use approx::assert_abs_diff_eq;

    fn th2th() -> TaskSpec {
        build_scenario("th2th-continuing").unwrap().task
    }

    fn right(from: usize) -> Transition {
        Transition { state: from, action: 1, next_state: 1, reward: 0.0, rho: 2.0 }
    }

    fn scalar(theta: f64, alpha: f64) -> LearnerState {
        LearnerState::new(DVector::from_element(1, theta), alpha)
    }

    #[test]
    fn td0_hand_evaluation() {
        let task = th2th();
        let mut st = scalar(10.0, 0.1);
        td0_step(&mut st, &right(0), &task).unwrap();
        assert_abs_diff_eq!(st.theta[0], 10.8, epsilon = 1e-12);
    }

    #[test]
    fn td0_without_error_or_step_size_is_idle() {
        let task = th2th();
        // 0 + 0.9 * 2θ = θ only at θ = 0
        let mut st = scalar(0.0, 0.1);
        td0_step(&mut st, &right(0), &task).unwrap();
        assert_eq!(st.theta[0], 0.0);
        let mut st = scalar(10.0, 0.0);
        td0_step(&mut st, &right(0), &task).unwrap();
        assert_eq!(st.theta[0], 10.0);
    }

    #[test]
    fn offpolicy_worked_updates() {
        let task = th2th();
        let mut st = scalar(10.0, 0.1);
        offpolicy_td0_step(&mut st, &right(0), &task).unwrap();
        assert_abs_diff_eq!(st.theta[0], 11.6, epsilon = 1e-12);
        let mut st = scalar(10.0, 0.1);
        offpolicy_td0_step(&mut st, &right(1), &task).unwrap();
        assert_abs_diff_eq!(st.theta[0], 9.2, epsilon = 1e-12);
        let left = Transition { state: 0, action: 0, next_state: 0, reward: 0.0, rho: 0.0 };
        let mut st = scalar(10.0, 0.1);
        offpolicy_td0_step(&mut st, &left, &task).unwrap();
        assert_eq!(st.theta[0], 10.0);
    }

    #[test]
    fn emphatic_td0_first_step_is_offpolicy_td0() {
        let task = th2th();
        let (mut a, mut b) = (scalar(10.0, 0.1), scalar(10.0, 0.1));
        emphatic_td0_step(&mut a, &right(0), &task).unwrap();
        offpolicy_td0_step(&mut b, &right(0), &task).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.followon, 1.0);
    }

    #[test]
    fn emphatic_td0_followon_on_all_right_path() {
        let task = th2th();
        let mut st = scalar(0.0, 0.0);
        let mut expected = 0.0;
        for t in 0..25 {
            let rec = emphatic_td0_step(&mut st, &right(if t == 0 { 0 } else { 1 }), &task).unwrap();
            expected += 1.8_f64.powi(t);
            assert!((rec.followon - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn zero_ratio_resets_followon() {
        let task = th2th();
        let mut st = scalar(0.0, 0.0);
        emphatic_td0_step(&mut st, &right(0), &task).unwrap();
        emphatic_td0_step(&mut st, &right(1), &task).unwrap();
        let left = Transition { state: 1, action: 0, next_state: 0, reward: 0.0, rho: 0.0 };
        emphatic_td0_step(&mut st, &left, &task).unwrap();
        let rec = emphatic_td0_step(&mut st, &right(0), &task).unwrap();
        assert_eq!(rec.followon, 1.0);
    }

    #[test]
    fn emphatic_lambda_first_step() {
        let task = build_scenario("chain5")
            .unwrap()
            .task
            .with_interest(DVector::from_vec(vec![0.7, 1.0, 1.0, 1.0, 1.0]))
            .with_lambda(DVector::from_element(5, 0.4));
        let tr = Transition { state: 0, action: 1, next_state: 1, reward: 1.0, rho: 3.0 };
        let mut st = LearnerState::new(DVector::zeros(3), 0.01);
        let rec = emphatic_td_lambda_step(&mut st, &tr, &task).unwrap();
        assert_eq!(rec.followon, 0.7);
        assert_abs_diff_eq!(rec.emphasis, 0.7, epsilon = 1e-15);
        let expected = task.features.of(0) * (3.0 * 0.7);
        assert!((st.trace.clone() - expected).amax() < 1e-15);
    }

    #[test]
    fn zero_ratio_zeroes_the_trace() {
        let task = build_scenario("chain5").unwrap().task.with_lambda(DVector::from_element(5, 0.9));
        let mut st = LearnerState::new(DVector::zeros(3), 0.01);
        let a = Transition { state: 1, action: 1, next_state: 2, reward: 1.0, rho: 3.0 };
        emphatic_td_lambda_step(&mut st, &a, &task).unwrap();
        let b = Transition { state: 2, action: 0, next_state: 1, reward: 1.0, rho: 0.0 };
        let theta_before = st.theta.clone();
        emphatic_td_lambda_step(&mut st, &b, &task).unwrap();
        assert_eq!(st.trace, DVector::zeros(3));
        assert_eq!(st.theta, theta_before);
    }

    #[test]
    fn bound_truncates_followon_and_trace() {
        let task = th2th();
        let mut st = scalar(0.0, 0.0).with_bound(3.0);
        for t in 0..10 {
            emphatic_td_lambda_step(&mut st, &right(if t == 0 { 0 } else { 1 }), &task).unwrap();
            assert!(st.followon <= 3.0);
            assert!(st.trace.amax() <= 3.0);
        }
        assert_eq!(st.followon, 3.0);
    }

    #[test]
    fn overflow_is_reported_and_state_kept() {
        let task = th2th();
        let mut st = scalar(1e308, 1.0);
        let before = st.clone();
        let err = offpolicy_td0_step(&mut st, &right(0), &task);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(st, before);
    }

    #[test]
    fn halving_alpha_halves_increment() {
        let task = build_scenario("chain5").unwrap().task;
        let tr = Transition { state: 1, action: 1, next_state: 2, reward: 1.0, rho: 3.0 };
        let theta0 = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let mut a = LearnerState::new(theta0.clone(), 0.02);
        let mut b = LearnerState::new(theta0.clone(), 0.01);
        emphatic_td_lambda_step(&mut a, &tr, &task).unwrap();
        emphatic_td_lambda_step(&mut b, &tr, &task).unwrap();
        let da = &a.theta - &theta0;
        let db = &b.theta - &theta0;
        assert!((da * 0.5 - db).amax() < 1e-16);
    }

    #[test]
    fn deterministic_steps() {
        let a = DMatrix::from_element(1, 1, -0.2);
        let b = DVector::zeros(1);
        let next = deterministic_step(&DVector::from_element(1, 1.0), &a, &b, 0.001);
        assert_abs_diff_eq!(next[0], 1.0002, epsilon = 1e-15);

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.1, 1.0]);
        let b = DVector::from_vec(vec![1.0, 3.0]);
        let fixed = a.clone().lu().solve(&b).unwrap();
        assert!((deterministic_step(&fixed, &a, &b, 0.1) - &fixed).amax() < 1e-15);
        let any = DVector::from_vec(vec![5.0, -5.0]);
        assert_eq!(deterministic_step(&any, &a, &b, 0.0), any);
    }
}
