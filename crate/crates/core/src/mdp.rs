//! Finite MDPs, policies, features and the per-state discount, bootstrapping
//! and interest functions that together make up a policy-evaluation task.
//!
//! Indices are 0-based everywhere. Tensors are nested as
//! `[state][action][next_state]`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::analysis::stationary_distribution;
use crate::error::{Error, Result};
use crate::linalg;

/// Probabilities at or below this are treated as exact zeros.
pub const PROBABILITY_FLOOR: f64 = 1e-15;
const STOCHASTIC_TOL: f64 = 1e-12;
const FEATURE_RANK_TOL: f64 = 1e-10;
const RADIUS_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMdp {
    num_states: usize,
    num_actions: usize,
    p: Vec<f64>,
    r: Vec<f64>,
}

impl FiniteMdp {
    /// Builds an MDP from `p[i][a][j]` and `r[i][a][j]`. Only the shape is
    /// checked here; stochasticity is reported by [`validate_task`].
    pub fn new(p: &[Vec<Vec<f64>>], r: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_states = p.len();
        if num_states == 0 {
            return Err(Error::Dimension("an MDP needs at least one state".into()));
        }
        let num_actions = p[0].len();
        if num_actions == 0 {
            return Err(Error::Dimension("an MDP needs at least one action".into()));
        }
        let flatten = |t: &[Vec<Vec<f64>>], what: &str| -> Result<Vec<f64>> {
            if t.len() != num_states {
                return Err(Error::Dimension(format!(
                    "{what} has {} states, expected {num_states}",
                    t.len()
                )));
            }
            let mut flat = Vec::with_capacity(num_states * num_actions * num_states);
            for (i, per_action) in t.iter().enumerate() {
                if per_action.len() != num_actions {
                    return Err(Error::Dimension(format!(
                        "{what}[{i}] has {} actions, expected {num_actions}",
                        per_action.len()
                    )));
                }
                for (a, row) in per_action.iter().enumerate() {
                    if row.len() != num_states {
                        return Err(Error::Dimension(format!(
                            "{what}[{i}][{a}] has {} entries, expected {num_states}",
                            row.len()
                        )));
                    }
                    flat.extend_from_slice(row);
                }
            }
            Ok(flat)
        };
        Ok(FiniteMdp {
            num_states,
            num_actions,
            p: flatten(p, "p")?,
            r: flatten(r, "r")?,
        })
    }

    /// MDP whose every action moves deterministically: `next[i][a]` is the
    /// successor and `reward[i][a]` the reward of that transition.
    pub fn deterministic(next: &[Vec<usize>], reward: &[Vec<f64>]) -> Result<Self> {
        let n = next.len();
        let mut p = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for (i, succ) in next.iter().enumerate() {
            let rewards = reward
                .get(i)
                .filter(|row| row.len() == succ.len())
                .ok_or_else(|| Error::Dimension(format!("reward row {i} does not match")))?;
            let mut p_row = Vec::with_capacity(succ.len());
            let mut r_row = Vec::with_capacity(succ.len());
            for (&j, &rew) in succ.iter().zip(rewards) {
                if j >= n {
                    return Err(Error::Dimension(format!("successor {j} of state {i} out of range")));
                }
                let mut probs = vec![0.0; n];
                probs[j] = 1.0;
                let mut rs = vec![0.0; n];
                rs[j] = rew;
                p_row.push(probs);
                r_row.push(rs);
            }
            p.push(p_row);
            r.push(r_row);
        }
        FiniteMdp::new(&p, &r)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    fn idx(&self, i: usize, a: usize, j: usize) -> usize {
        (i * self.num_actions + a) * self.num_states + j
    }

    pub fn p(&self, i: usize, a: usize, j: usize) -> f64 {
        self.p[self.idx(i, a, j)]
    }

    pub fn r(&self, i: usize, a: usize, j: usize) -> f64 {
        self.r[self.idx(i, a, j)]
    }

    /// Next-state distribution for `(i, a)`.
    pub fn next_distribution(&self, i: usize, a: usize) -> &[f64] {
        let start = self.idx(i, a, 0);
        &self.p[start..start + self.num_states]
    }

    pub fn p_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.nested(&self.p)
    }

    pub fn r_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.nested(&self.r)
    }

    fn nested(&self, flat: &[f64]) -> Vec<Vec<Vec<f64>>> {
        flat.chunks(self.num_states * self.num_actions)
            .map(|s| s.chunks(self.num_states).map(<[f64]>::to_vec).collect())
            .collect()
    }
}

/// A stochastic policy, `probs[(s, a)] = π(a|s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Self {
        Policy { probs }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("policy rows must be non-empty and of equal length".into()));
        }
        Ok(Policy {
            probs: DMatrix::from_fn(rows.len(), k, |s, a| rows[s][a]),
        })
    }

    /// The same action distribution in every state.
    pub fn uniform_rows(num_states: usize, row: &[f64]) -> Self {
        Policy {
            probs: DMatrix::from_fn(num_states, row.len(), |_, a| row[a]),
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn num_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|s| self.probs.row(s).iter().copied().collect())
            .collect()
    }
}

/// Feature matrix Φ: one row `φ(s)` per state, one column per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    phi: DMatrix<f64>,
}

impl FeatureMap {
    pub fn new(phi: DMatrix<f64>) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::Dimension("feature matrix needs N >= 1 and n >= 1".into()));
        }
        Ok(FeatureMap { phi })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("feature rows must have equal length".into()));
        }
        FeatureMap::new(DMatrix::from_fn(rows.len(), n, |s, k| rows[s][k]))
    }

    /// Tabular features, Φ = I.
    pub fn tabular(num_states: usize) -> Self {
        FeatureMap {
            phi: DMatrix::identity(num_states, num_states),
        }
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn num_features(&self) -> usize {
        self.phi.ncols()
    }

    pub fn num_states(&self) -> usize {
        self.phi.nrows()
    }

    pub fn of(&self, s: usize) -> DVector<f64> {
        self.phi.row(s).transpose()
    }

    /// `θᵀφ(s)`.
    pub fn value(&self, theta: &DVector<f64>, s: usize) -> f64 {
        self.phi.row(s).iter().zip(theta.iter()).map(|(p, t)| p * t).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|s| self.phi.row(s).iter().copied().collect())
            .collect()
    }
}

/// Everything needed to pose an off-policy evaluation problem.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub mdp: FiniteMdp,
    pub target: Policy,
    pub behavior: Policy,
    pub gamma: DVector<f64>,
    pub lambda: DVector<f64>,
    pub interest: DVector<f64>,
    pub features: FeatureMap,
}

impl TaskSpec {
    /// Assembles a task after checking that all dimensions agree.
    pub fn new(
        mdp: FiniteMdp,
        target: Policy,
        behavior: Policy,
        gamma: DVector<f64>,
        lambda: DVector<f64>,
        interest: DVector<f64>,
        features: FeatureMap,
    ) -> Result<Self> {
        let n = mdp.num_states();
        let k = mdp.num_actions();
        for (name, pol) in [("target", &target), ("behavior", &behavior)] {
            if pol.num_states() != n || pol.num_actions() != k {
                return Err(Error::Dimension(format!(
                    "{name} policy is {}x{}, MDP has {n} states and {k} actions",
                    pol.num_states(),
                    pol.num_actions()
                )));
            }
        }
        for (name, v) in [("gamma", &gamma), ("lambda", &lambda), ("interest", &interest)] {
            if v.len() != n {
                return Err(Error::Dimension(format!("{name} has length {}, expected {n}", v.len())));
            }
        }
        if features.num_states() != n {
            return Err(Error::Dimension(format!(
                "feature matrix has {} rows, expected {n}",
                features.num_states()
            )));
        }
        Ok(TaskSpec {
            mdp,
            target,
            behavior,
            gamma,
            lambda,
            interest,
            features,
        })
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    pub fn num_features(&self) -> usize {
        self.features.num_features()
    }

    pub fn with_lambda(mut self, lambda: DVector<f64>) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_interest(mut self, interest: DVector<f64>) -> Self {
        self.interest = interest;
        self
    }

    pub fn with_gamma(mut self, gamma: DVector<f64>) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_behavior(mut self, behavior: Policy) -> Self {
        self.behavior = behavior;
        self
    }

    /// The common discount when γ is the same in every state.
    pub fn constant_gamma(&self) -> Option<f64> {
        let g0 = self.gamma[0];
        self.gamma.iter().all(|&g| g == g0).then_some(g0)
    }
}

/// One sampled step of behavior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyRole {
    Target,
    Behavior,
}

impl fmt::Display for PolicyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyRole::Target => "target",
            PolicyRole::Behavior => "behavior",
        })
    }
}

/// A single broken task invariant, located by index.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    KernelRowSum { state: usize, action: usize, sum: f64 },
    NegativeProbability { state: usize, action: usize, next_state: usize, value: f64 },
    NonFiniteReward { state: usize, action: usize, next_state: usize },
    PolicyRowSum { policy: PolicyRole, state: usize, sum: f64 },
    NegativePolicyEntry { policy: PolicyRole, state: usize, action: usize, value: f64 },
    Coverage { state: usize, action: usize },
    GammaOutOfRange { state: usize, value: f64 },
    LambdaOutOfRange { state: usize, value: f64 },
    InterestNotPositive { state: usize, value: f64 },
    NonFiniteFeature { state: usize, feature: usize },
    FeatureRank { rank: usize, columns: usize },
    SpectralRadius { radius: f64 },
    BehaviorChain { reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            KernelRowSum { state, action, sum } => {
                write!(f, "p[{state}][{action}] sums to {sum}, not 1")
            }
            NegativeProbability { state, action, next_state, value } => {
                write!(f, "p[{state}][{action}][{next_state}] = {value} is negative")
            }
            NonFiniteReward { state, action, next_state } => {
                write!(f, "r[{state}][{action}][{next_state}] is not finite")
            }
            PolicyRowSum { policy, state, sum } => {
                write!(f, "{policy} policy row {state} sums to {sum}, not 1")
            }
            NegativePolicyEntry { policy, state, action, value } => {
                write!(f, "{policy} policy entry ({state}, {action}) = {value} is negative")
            }
            Coverage { state, action } => write!(
                f,
                "coverage: target takes action {action} in state {state}, behavior never does"
            ),
            GammaOutOfRange { state, value } => write!(f, "gamma[{state}] = {value} not in [0, 1]"),
            LambdaOutOfRange { state, value } => {
                write!(f, "lambda[{state}] = {value} not in [0, 1]")
            }
            InterestNotPositive { state, value } => {
                write!(f, "interest[{state}] = {value} is not positive")
            }
            NonFiniteFeature { state, feature } => {
                write!(f, "phi[{state}][{feature}] is not finite")
            }
            FeatureRank { rank, columns } => {
                write!(f, "feature matrix has rank {rank} < {columns} columns")
            }
            SpectralRadius { radius } => write!(
                f,
                "spectral radius of P_pi * diag(gamma) is {radius}; discounting never terminates"
            ),
            BehaviorChain { reason } => write!(f, "behavior chain: {reason}"),
        }
    }
}

/// Every violated invariant of a task; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

fn check_policy(pol: &Policy, role: PolicyRole, out: &mut Vec<Violation>) {
    for s in 0..pol.num_states() {
        let mut sum = 0.0;
        for a in 0..pol.num_actions() {
            let v = pol.prob(s, a);
            if !(v >= 0.0) {
                out.push(Violation::NegativePolicyEntry { policy: role, state: s, action: a, value: v });
            }
            sum += v;
        }
        if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
            out.push(Violation::PolicyRowSum { policy: role, state: s, sum });
        }
    }
}

/// Checks every task invariant and returns the full list of violations.
pub fn validate_task(task: &TaskSpec) -> ValidationReport {
    let mut out = Vec::new();
    let mdp = &task.mdp;
    let (n, k) = (mdp.num_states(), mdp.num_actions());

    for i in 0..n {
        for a in 0..k {
            let mut sum = 0.0;
            for j in 0..n {
                let p = mdp.p(i, a, j);
                if !(p >= 0.0) {
                    out.push(Violation::NegativeProbability { state: i, action: a, next_state: j, value: p });
                }
                if !mdp.r(i, a, j).is_finite() {
                    out.push(Violation::NonFiniteReward { state: i, action: a, next_state: j });
                }
                sum += p;
            }
            if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
                out.push(Violation::KernelRowSum { state: i, action: a, sum });
            }
        }
    }
    check_policy(&task.target, PolicyRole::Target, &mut out);
    check_policy(&task.behavior, PolicyRole::Behavior, &mut out);

    for s in 0..n {
        for a in 0..k {
            if task.target.prob(s, a) > PROBABILITY_FLOOR && task.behavior.prob(s, a) <= PROBABILITY_FLOOR {
                out.push(Violation::Coverage { state: s, action: a });
            }
        }
        let g = task.gamma[s];
        if !(0.0..=1.0).contains(&g) {
            out.push(Violation::GammaOutOfRange { state: s, value: g });
        }
        let l = task.lambda[s];
        if !(0.0..=1.0).contains(&l) {
            out.push(Violation::LambdaOutOfRange { state: s, value: l });
        }
        let i = task.interest[s];
        if !(i > 0.0 && i.is_finite()) {
            out.push(Violation::InterestNotPositive { state: s, value: i });
        }
    }

    let phi = task.features.phi();
    let mut features_finite = true;
    for s in 0..phi.nrows() {
        for c in 0..phi.ncols() {
            if !phi[(s, c)].is_finite() {
                features_finite = false;
                out.push(Violation::NonFiniteFeature { state: s, feature: c });
            }
        }
    }
    if features_finite {
        let rank = linalg::rank(phi, FEATURE_RANK_TOL);
        if rank < phi.ncols() {
            out.push(Violation::FeatureRank { rank, columns: phi.ncols() });
        }
    }

    // The chain-level checks only make sense on well-formed numbers.
    if out.is_empty() {
        if let Ok(p_pi) = induced_transition(mdp, &task.target) {
            let radius = linalg::spectral_radius(&(p_pi * linalg::diag(&task.gamma)));
            if !(radius < 1.0 - RADIUS_MARGIN) {
                out.push(Violation::SpectralRadius { radius });
            }
        }
        match induced_transition(mdp, &task.behavior).and_then(|p| stationary_distribution(&p)) {
            Ok(_) => {}
            Err(e) => out.push(Violation::BehaviorChain { reason: e.to_string() }),
        }
    }
    ValidationReport { violations: out }
}

/// `[P]_ij = Σ_a π(a|i) p(j|i,a)`.
pub fn induced_transition(mdp: &FiniteMdp, policy: &Policy) -> Result<DMatrix<f64>> {
    check_policy_shape(mdp, policy)?;
    let n = mdp.num_states();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for a in 0..mdp.num_actions() {
            let w = policy.prob(i, a);
            if w == 0.0 {
                continue;
            }
            for (j, &p) in mdp.next_distribution(i, a).iter().enumerate() {
                out[(i, j)] += w * p;
            }
        }
    }
    Ok(out)
}

/// `[r]_i = Σ_a π(a|i) Σ_j p(j|i,a) r(i,a,j)`.
pub fn expected_reward_vector(mdp: &FiniteMdp, policy: &Policy) -> Result<DVector<f64>> {
    check_policy_shape(mdp, policy)?;
    let n = mdp.num_states();
    Ok(DVector::from_fn(n, |i, _| {
        (0..mdp.num_actions())
            .map(|a| {
                let inner: f64 = (0..n).map(|j| mdp.p(i, a, j) * mdp.r(i, a, j)).sum();
                policy.prob(i, a) * inner
            })
            .sum()
    }))
}

fn check_policy_shape(mdp: &FiniteMdp, policy: &Policy) -> Result<()> {
    if policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() {
        return Err(Error::Dimension(format!(
            "policy is {}x{}, MDP has {} states and {} actions",
            policy.num_states(),
            policy.num_actions(),
            mdp.num_states(),
            mdp.num_actions()
        )));
    }
    Ok(())
}

/// `π(a|s) / μ(a|s)`, zero when the target never takes `a` in `s`.
pub fn importance_ratio(task: &TaskSpec, s: usize, a: usize) -> Result<f64> {
    let pi = task.target.prob(s, a);
    let mu = task.behavior.prob(s, a);
    if pi <= PROBABILITY_FLOOR {
        return Ok(0.0);
    }
    if mu <= PROBABILITY_FLOOR {
        return Err(Error::Coverage { state: s, action: a });
    }
    Ok(pi / mu)
}

/// Inverse-CDF draw from a discrete distribution; never returns an index
/// with zero mass.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: impl IntoIterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (idx, p) in probs.into_iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = idx;
        acc += p;
        if u < acc {
            return idx;
        }
    }
    last_positive
}

/// Draws an action from the behavior policy and a successor from the
/// kernel. The ratio is filled in from the task.
///
/// Panics if `s` is out of range or the task breaks coverage; both are
/// excluded by [`validate_task`].
pub fn sample_transition<R: Rng + ?Sized>(task: &TaskSpec, s: usize, rng: &mut R) -> Transition {
    let k = task.num_actions();
    let action = sample_index((0..k).map(|a| task.behavior.prob(s, a)), rng);
    let next_state = sample_index(task.mdp.next_distribution(s, action).iter().copied(), rng);
    let rho = importance_ratio(task, s, action).expect("sampled action violates coverage");
    Transition {
        state: s,
        action,
        next_state,
        reward: task.mdp.r(s, action, next_state),
        rho,
    }
}

/// Draws a state from a distribution vector.
pub fn sample_state<R: Rng + ?Sized>(dist: &DVector<f64>, rng: &mut R) -> usize {
    sample_index(dist.iter().copied(), rng)
}
