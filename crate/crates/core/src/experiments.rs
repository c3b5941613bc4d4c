//! Built-in scenarios, brute-force oracles for the emphasis recursions, and
//! the seeded multi-run harness.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::algorithm::Algorithm;
use crate::analysis::{expected_update, fixed_point, stationary_distribution, ValueError};
use crate::error::{Error, Result};
use crate::learners::{deterministic_step, Learner, LearnerState};
use crate::linalg;
use crate::mdp::{
    induced_transition, sample_state, sample_transition, validate_task, FeatureMap, FiniteMdp, Policy,
    TaskSpec, Transition,
};
use crate::problem::ProblemFile;

/// A run is marked diverged once `|θ|∞` exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e9;

/// Built-in scenario names, sorted. Action 0 is `left`, action 1 `right`.
pub const SCENARIO_NAMES: [&str; 3] = ["chain5", "th2th-continuing", "th2th-episodic"];

/// A task together with the settings its experiments use by default.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    /// Where the configuration comes from, for listings.
    pub origin: String,
    pub task: TaskSpec,
    pub default_alpha: f64,
    pub default_theta0: DVector<f64>,
    pub horizon: u64,
    pub runs: u64,
}

impl Scenario {
    /// Wraps a user task with generic defaults. Fails if the task does not
    /// validate.
    pub fn from_task(name: &str, task: TaskSpec) -> Result<Self> {
        validate_task(&task).into_result()?;
        let n = task.num_features();
        Ok(Scenario {
            name: name.to_string(),
            description: "user-supplied task".to_string(),
            origin: "problem file".to_string(),
            task,
            default_alpha: 0.001,
            default_theta0: DVector::zeros(n),
            horizon: 10_000,
            runs: 10,
        })
    }

    /// Closed-form followon moments `(mean, variance)` at step `t`, when
    /// they are known for this scenario and mode.
    pub fn analytic_moment(&self, mode: InterestMode, t: usize) -> Option<(f64, f64)> {
        let builtin = build_scenario("th2th-continuing").ok()?;
        if self.name != builtin.name || self.task != builtin.task || mode != InterestMode::InitialPulse {
            return None;
        }
        let t = t as i32;
        Some((0.9f64.powi(t), 1.62f64.powi(t) - 0.81f64.powi(t)))
    }
}

/// The two-state problem whose true values are zero and whose second state
/// aliases to twice the first: every action is `left` → state 0 or
/// `right` → state 1.
fn th2th_continuing() -> Scenario {
    let mdp = FiniteMdp::deterministic(&[vec![0, 1], vec![0, 1]], &[vec![0.0; 2], vec![0.0; 2]])
        .expect("static shape");
    let task = TaskSpec::new(
        mdp,
        Policy::uniform_rows(2, &[0.0, 1.0]),
        Policy::uniform_rows(2, &[0.5, 0.5]),
        DVector::from_element(2, 0.9),
        DVector::zeros(2),
        DVector::from_element(2, 1.0),
        FeatureMap::from_rows(&[vec![1.0], vec![2.0]]).expect("static shape"),
    )
    .expect("static shape");
    Scenario {
        name: "th2th-continuing".to_string(),
        description: "two states, features 1 and 2, no terminal state; off-policy TD(0) diverges".to_string(),
        origin: "theta -> 2 theta problem without a terminal state".to_string(),
        task,
        default_alpha: 0.001,
        default_theta0: DVector::from_element(1, 1.0),
        horizon: 30_000,
        runs: 50,
    }
}

/// The same pair of states followed by a soft-terminal state (γ = 0,
/// zero feature) that restarts in the leftmost state.
fn th2th_episodic() -> Scenario {
    let mdp = FiniteMdp::deterministic(
        &[vec![0, 1], vec![0, 2], vec![0, 0]],
        &[vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]],
    )
    .expect("static shape");
    let task = TaskSpec::new(
        mdp,
        Policy::uniform_rows(3, &[0.0, 1.0]),
        Policy::uniform_rows(3, &[0.9, 0.1]),
        DVector::from_vec(vec![0.9, 0.9, 0.0]),
        DVector::zeros(3),
        DVector::from_element(3, 1.0),
        FeatureMap::from_rows(&[vec![1.0], vec![2.0], vec![0.0]]).expect("static shape"),
    )
    .expect("static shape");
    Scenario {
        name: "th2th-episodic".to_string(),
        description: "two states plus a soft-terminal restart state; bounded followon variance".to_string(),
        origin: "theta -> 2 theta problem with a soft terminal state".to_string(),
        task,
        default_alpha: 0.0001,
        default_theta0: DVector::from_element(1, 1.0),
        horizon: 30_000,
        runs: 50,
    }
}

/// Five-state chain with soft termination at both ends, +1 reward per
/// step and three shared parameters: `θ1, θ1+θ2, θ2, θ3, θ3`.
fn chain5() -> Scenario {
    let next: Vec<Vec<usize>> = (0..5).map(|s: usize| vec![s.saturating_sub(1), (s + 1).min(4)]).collect();
    let mdp = FiniteMdp::deterministic(&next, &vec![vec![1.0; 2]; 5]).expect("static shape");
    let phi = vec![
        vec![1.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0],
    ];
    let task = TaskSpec::new(
        mdp,
        Policy::uniform_rows(5, &[0.0, 1.0]),
        Policy::uniform_rows(5, &[2.0 / 3.0, 1.0 / 3.0]),
        DVector::from_vec(vec![0.0, 1.0, 1.0, 1.0, 0.0]),
        DVector::zeros(5),
        DVector::from_element(5, 1.0),
        FeatureMap::from_rows(&phi).expect("static shape"),
    )
    .expect("static shape");
    Scenario {
        name: "chain5".to_string(),
        description: "five-state chain, soft termination at both ends, 3 shared parameters".to_string(),
        origin: "5-state chain with soft-termination states at each end".to_string(),
        task,
        default_alpha: 0.001,
        default_theta0: DVector::zeros(3),
        horizon: 20_000,
        runs: 20,
    }
}

pub fn build_scenario(name: &str) -> Result<Scenario> {
    match name {
        "th2th-continuing" => Ok(th2th_continuing()),
        "th2th-episodic" => Ok(th2th_episodic()),
        "chain5" => Ok(chain5()),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

/// All built-ins in name order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    SCENARIO_NAMES.iter().map(|n| build_scenario(n).expect("built-in")).collect()
}

/// Behavior-policy stationary distribution of a task.
pub fn behavior_distribution(task: &TaskSpec) -> Result<DVector<f64>> {
    stationary_distribution(&induced_transition(&task.mdp, &task.behavior)?)
}

// ---------------------------------------------------------------------------
// Forward view of the emphasis.

/// Draws `len` behavior transitions starting from `start`.
pub fn sample_trajectory<R: Rng + ?Sized>(task: &TaskSpec, start: usize, len: usize, rng: &mut R) -> Vec<Transition> {
    let mut s = start;
    (0..len)
        .map(|_| {
            let tr = sample_transition(task, s, rng);
            s = tr.next_state;
            tr
        })
        .collect()
}

/// `(F_t, M_t)` for every step of a trajectory, computed from the explicit
/// sums over earlier steps rather than by recursion:
///
/// `M_t = i(S_t) + γ_t (1 − λ_t) Σ_{k<t} ρ_k M_k Π_{j=k+1}^{t−1} γ_j λ_j ρ_j`
///
/// and `F_t` is the same expression without the `(1 − λ_t)` factor.
/// Quadratic in the trajectory length.
pub fn forward_view_emphasis(trajectory: &[Transition], task: &TaskSpec) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(trajectory.len());
    for (t, tr) in trajectory.iter().enumerate() {
        let s = tr.state;
        let mut sum = 0.0;
        let mut product = 1.0;
        for k in (0..t).rev() {
            let earlier = &trajectory[k];
            sum += earlier.rho * out[k].1 * product;
            let sk = earlier.state;
            product *= task.gamma[sk] * task.lambda[sk] * earlier.rho;
        }
        let i = task.interest[s];
        let f = i + task.gamma[s] * sum;
        let m = i + task.gamma[s] * (1.0 - task.lambda[s]) * sum;
        out.push((f, m));
    }
    out
}

// ---------------------------------------------------------------------------
// Moments of the followon trace.

/// How interest is assigned over time when computing followon moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterestMode {
    /// `i(S_t)` from the task at every step.
    StateInterest,
    /// Interest 1 at `t = 0` and 0 afterwards.
    InitialPulse,
}

impl InterestMode {
    pub fn name(self) -> &'static str {
        match self {
            InterestMode::StateInterest => "state-interest",
            InterestMode::InitialPulse => "initial-pulse",
        }
    }

    fn interest(self, task: &TaskSpec, t: usize, s: usize) -> f64 {
        match self {
            InterestMode::StateInterest => task.interest[s],
            InterestMode::InitialPulse => (t == 0) as u8 as f64,
        }
    }
}

impl fmt::Display for InterestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InterestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state-interest" => Ok(InterestMode::StateInterest),
            "initial-pulse" => Ok(InterestMode::InitialPulse),
            other => Err(Error::Problem(format!(
                "unknown interest mode `{other}` (expected state-interest or initial-pulse)"
            ))),
        }
    }
}

/// First and second central moments of `F_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentCurve {
    pub t: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Exact moments of `F_t` for `t = 0..=t_max`, with `S_0` drawn from the
/// behavior stationary distribution.
pub fn f_moment_curve(task: &TaskSpec, mode: InterestMode, t_max: usize) -> Result<Vec<MomentCurve>> {
    f_moment_curve_from(task, mode, t_max, &behavior_distribution(task)?)
}

/// As [`f_moment_curve`] with an explicit start distribution.
///
/// With `q_t` the behavior state distribution at time `t`, the vectors
/// `u_t(s) = E[F_t 1{S_t=s}]` and `w_t(s) = E[F_t² 1{S_t=s}]` obey
///
/// `u_t(s) = γ(s) Σ_{s'} Pπ[s',s] u_{t−1}(s') + i_t(s) q_t(s)`
///
/// `w_t(s) = γ(s)² Σ_{s'} P₂[s',s] w_{t−1}(s') + 2 i_t(s) γ(s) Σ_{s'} Pπ[s',s] u_{t−1}(s') + i_t(s)² q_t(s)`
///
/// where `Pπ[s',s] = Σ_a μ ρ p = Σ_a π p` and `P₂[s',s] = Σ_a π²/μ p`
/// collect the ratio and squared ratio over the step into `s`.
pub fn f_moment_curve_from(
    task: &TaskSpec,
    mode: InterestMode,
    t_max: usize,
    start: &DVector<f64>,
) -> Result<Vec<MomentCurve>> {
    let n = task.num_states();
    if start.len() != n {
        return Err(Error::Dimension(format!("start distribution has length {}, expected {n}", start.len())));
    }
    let p_mu = induced_transition(&task.mdp, &task.behavior)?;
    let p_pi = induced_transition(&task.mdp, &task.target)?;
    let p_sq = squared_ratio_kernel(task)?;
    let p_mu_t = p_mu.transpose();
    let p_pi_t = p_pi.transpose();
    let p_sq_t = p_sq.transpose();

    let mut q = start.clone();
    let i0 = DVector::from_fn(n, |s, _| mode.interest(task, 0, s));
    let mut u = i0.component_mul(&q);
    let mut w = i0.component_mul(&i0).component_mul(&q);
    let mut out = vec![moment(0, &u, &w)];
    for t in 1..=t_max {
        q = &p_mu_t * q;
        let carried = (&p_pi_t * &u).component_mul(&task.gamma);
        let carried_sq = (&p_sq_t * &w).component_mul(&task.gamma).component_mul(&task.gamma);
        let it = DVector::from_fn(n, |s, _| mode.interest(task, t, s));
        u = &carried + it.component_mul(&q);
        w = carried_sq + (it.component_mul(&carried) * 2.0) + it.component_mul(&it).component_mul(&q);
        out.push(moment(t, &u, &w));
    }
    Ok(out)
}

fn moment(t: usize, u: &DVector<f64>, w: &DVector<f64>) -> MomentCurve {
    let mean = u.sum();
    MomentCurve { t, mean, variance: w.sum() - mean * mean }
}

/// `P₂[s, s'] = Σ_a π(a|s)² / μ(a|s) · p(s'|s, a)`.
fn squared_ratio_kernel(task: &TaskSpec) -> Result<DMatrix<f64>> {
    let n = task.num_states();
    let mut out = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in 0..task.num_actions() {
            let rho = crate::mdp::importance_ratio(task, s, a)?;
            let weight = rho * task.target.prob(s, a);
            if weight == 0.0 {
                continue;
            }
            for (j, p) in task.mdp.next_distribution(s, a).iter().enumerate() {
                out[(s, j)] += weight * p;
            }
        }
    }
    Ok(out)
}

/// Sample moments of `F_t` over independent simulated processes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloMoment {
    pub t: usize,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
}

/// Simulates `samples` independent followon processes up to step `t`,
/// each started from the behavior stationary distribution.
pub fn simulate_followon(task: &TaskSpec, mode: InterestMode, t: usize, samples: usize, seed: u64) -> Result<MonteCarloMoment> {
    let start = behavior_distribution(task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut s = sample_state(&start, &mut rng);
        let mut f = mode.interest(task, 0, s);
        for step in 1..=t {
            let tr = sample_transition(task, s, &mut rng);
            s = tr.next_state;
            f = tr.rho * task.gamma[s] * f + mode.interest(task, step, s);
        }
        sum += f;
        sum_sq += f * f;
    }
    let count = samples as f64;
    let mean = sum / count;
    let variance = (sum_sq - count * mean * mean) / (count - 1.0).max(1.0);
    Ok(MonteCarloMoment {
        t,
        samples,
        mean,
        variance,
        std_error: (variance / count).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Multi-run harness.

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub horizon: u64,
    pub theta0: Vec<f64>,
    /// Optional truncation of the followon and eligibility traces.
    pub bound: Option<f64>,
    /// Keep every `record_every`-th step (the last step is always kept).
    pub record_every: u64,
}

impl RunConfig {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        RunConfig {
            alpha: scenario.default_alpha,
            horizon: scenario.horizon,
            theta0: scenario.default_theta0.iter().copied().collect(),
            bound: None,
            record_every: 1,
        }
    }
}

/// One recorded step. `t` counts completed updates, so `theta` is `θ_t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRow {
    pub t: u64,
    pub theta: Vec<f64>,
    pub td_error: f64,
    pub followon: f64,
    pub emphasis: f64,
    pub msve: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// The update numbered `t` produced a non-finite or oversized θ.
    Diverged { t: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub status: RunStatus,
    /// Last finite parameter vector.
    pub final_theta: Vec<f64>,
    pub rows: Vec<StepRow>,
}

impl RunRecord {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn final_abs_max(&self) -> f64 {
        self.final_theta.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `θ̄_t` of the expected update, recorded on the same steps as the runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedRow {
    pub t: u64,
    pub theta: Vec<f64>,
    pub msve: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
    /// `None` when the expected update is unavailable for this algorithm.
    pub expected: Option<Vec<ExpectedRow>>,
    pub config_hash: String,
}

fn recorded(t: u64, cfg: &RunConfig) -> bool {
    t % cfg.record_every.max(1) == 0 || t == cfg.horizon
}

fn abs_max(v: &DVector<f64>) -> f64 {
    linalg::inf_norm(v)
}

fn run_seed(
    scenario: &Scenario,
    algorithm: Algorithm,
    seed: u64,
    cfg: &RunConfig,
    start: &DVector<f64>,
    error: Option<&ValueError>,
) -> RunRecord {
    let task = &scenario.task;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LearnerState::new(DVector::from_column_slice(&cfg.theta0), cfg.alpha);
    if let Some(b) = cfg.bound {
        state = state.with_bound(b);
    }
    let mut learner = Learner::new(algorithm, state);
    let mut s = sample_state(start, &mut rng);
    let mut rows = Vec::new();
    let mut status = RunStatus::Completed;
    for t in 1..=cfg.horizon {
        let tr = sample_transition(task, s, &mut rng);
        s = tr.next_state;
        let rec = match learner.step(&tr, task) {
            Ok(rec) => rec,
            Err(_) => {
                status = RunStatus::Diverged { t };
                break;
            }
        };
        let theta = &learner.state.theta;
        let blew_up = abs_max(theta) > DIVERGENCE_THRESHOLD;
        if recorded(t, cfg) || blew_up {
            rows.push(StepRow {
                t,
                theta: rec.theta_after,
                td_error: rec.td_error,
                followon: rec.followon,
                emphasis: rec.emphasis,
                msve: error.map(|e| e.msve(theta)),
            });
        }
        if blew_up {
            status = RunStatus::Diverged { t };
            break;
        }
    }
    RunRecord {
        seed,
        status,
        final_theta: learner.state.theta.iter().copied().collect(),
        rows,
    }
}

/// Iterates `θ̄ ← θ̄ + α(b − Aθ̄)` from `theta0` for `horizon` steps.
pub fn expected_trajectory(
    task: &TaskSpec,
    algorithm: Algorithm,
    cfg: &RunConfig,
) -> Result<Vec<ExpectedRow>> {
    let update = expected_update(task, algorithm)?;
    let error = ValueError::new(task).ok();
    let mut theta = DVector::from_column_slice(&cfg.theta0);
    let row = |t: u64, theta: &DVector<f64>| ExpectedRow {
        t,
        theta: theta.iter().copied().collect(),
        msve: error.as_ref().map(|e| e.msve(theta)),
    };
    let mut rows = vec![row(0, &theta)];
    for t in 1..=cfg.horizon {
        theta = deterministic_step(&theta, &update.a_mat, &update.b_vec, cfg.alpha);
        if recorded(t, cfg) {
            rows.push(row(t, &theta));
        }
        if !theta.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Ok(rows)
}

/// Runs one learner per seed (in parallel; results stay in seed order)
/// plus the deterministic expected-update trajectory.
pub fn run_experiment(scenario: &Scenario, algorithm: Algorithm, seeds: &[u64], cfg: &RunConfig) -> Result<ExperimentResult> {
    let task = &scenario.task;
    validate_task(task).into_result()?;
    if cfg.theta0.len() != task.num_features() {
        return Err(Error::Dimension(format!(
            "theta0 has length {}, task has {} features",
            cfg.theta0.len(),
            task.num_features()
        )));
    }
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        return Err(Error::Problem(format!("step size must be finite and non-negative, got {}", cfg.alpha)));
    }
    let start = behavior_distribution(task)?;
    let error = ValueError::new(task).ok();
    let runs: Vec<RunRecord> = seeds
        .par_iter()
        .map(|&seed| run_seed(scenario, algorithm, seed, cfg, &start, error.as_ref()))
        .collect();
    let expected = expected_trajectory(task, algorithm, cfg).ok();
    Ok(ExperimentResult {
        scenario: scenario.name.clone(),
        algorithm,
        seeds: seeds.to_vec(),
        config: cfg.clone(),
        runs,
        expected,
        config_hash: config_hash(scenario, algorithm, seeds, cfg),
    })
}

/// SHA-256 over the task, algorithm, seeds and run settings.
pub fn config_hash(scenario: &Scenario, algorithm: Algorithm, seeds: &[u64], cfg: &RunConfig) -> String {
    let canonical = json!({
        "scenario": scenario.name,
        "task": ProblemFile::from_task(&scenario.task, None),
        "algorithm": algorithm.name(),
        "seeds": seeds,
        "config": cfg,
    });
    Sha256::digest(canonical.to_string().as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn push_optional(line: &mut String, x: Option<f64>) {
    if let Some(x) = x {
        let _ = write!(line, "{x:e}");
    }
}

fn theta_header(n: usize) -> String {
    (0..n).map(|j| format!("theta_{j}")).collect::<Vec<_>>().join(",")
}

impl ExperimentResult {
    fn num_features(&self) -> usize {
        self.config.theta0.len()
    }

    /// `seed,t,theta_0..,td_error,F,M,msve`, one row per recorded step.
    pub fn runs_csv(&self) -> String {
        let mut out = format!("seed,t,{},td_error,F,M,msve\n", theta_header(self.num_features()));
        for run in &self.runs {
            for row in &run.rows {
                let _ = write!(out, "{},{}", run.seed, row.t);
                for x in &row.theta {
                    let _ = write!(out, ",{x:e}");
                }
                let _ = write!(out, ",{:e},{:e},{:e},", row.td_error, row.followon, row.emphasis);
                push_optional(&mut out, row.msve);
                out.push('\n');
            }
        }
        out
    }

    /// `t,theta_0..,msve` for the expected-update trajectory.
    pub fn expected_csv(&self) -> Option<String> {
        let rows = self.expected.as_ref()?;
        let mut out = format!("t,{},msve\n", theta_header(self.num_features()));
        for row in rows {
            let _ = write!(out, "{}", row.t);
            for x in &row.theta {
                let _ = write!(out, ",{x:e}");
            }
            out.push(',');
            push_optional(&mut out, row.msve);
            out.push('\n');
        }
        Some(out)
    }

    pub fn manifest(&self) -> Value {
        json!({
            "scenario": self.scenario,
            "algorithm": self.algorithm.name(),
            "seeds": self.seeds,
            "config": self.config,
            "config_hash": self.config_hash,
            "divergence_threshold": DIVERGENCE_THRESHOLD,
            "runs": self.runs.iter().map(|r| json!({
                "seed": r.seed,
                "status": r.status,
                "final_theta": r.final_theta,
            })).collect::<Vec<_>>(),
            "expected_final_theta": self.expected.as_ref().and_then(|rows| rows.last()).map(|r| r.theta.clone()),
            "files": {
                "runs": "runs.csv",
                "expected": self.expected.as_ref().map(|_| "expected.csv"),
            },
        })
    }

    /// Writes `runs.csv`, `expected.csv` (when available) and
    /// `manifest.json` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let runs = dir.join("runs.csv");
        fs::write(&runs, self.runs_csv())?;
        written.push(runs);
        if let Some(csv) = self.expected_csv() {
            let path = dir.join("expected.csv");
            fs::write(&path, csv)?;
            written.push(path);
        }
        let manifest = dir.join("manifest.json");
        fs::write(&manifest, serde_json::to_string_pretty(&self.manifest())? + "\n")?;
        written.push(manifest);
        Ok(written)
    }

    /// Median of the final `|θ|∞` over runs.
    pub fn median_final_abs(&self) -> f64 {
        let mut v: Vec<f64> = self.runs.iter().map(RunRecord::final_abs_max).collect();
        v.sort_by(f64::total_cmp);
        match v.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => v[n / 2],
            n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
        }
    }
}

/// Fixed-point MSVE of an algorithm on a task, when it exists.
pub fn fixed_point_msve(task: &TaskSpec, algorithm: Algorithm) -> Result<f64> {
    let update = expected_update(task, algorithm)?;
    let fp = fixed_point(&update.a_mat, &update.b_vec)?;
    crate::analysis::msve(task, &fp.theta)
}
