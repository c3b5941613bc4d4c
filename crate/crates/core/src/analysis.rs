//! Exact expected-update analysis.
//!
//! Everything here is computed from the task by dense linear solves:
//! stationary distributions, the followon and emphasis vectors, the
//! bootstrapping-ending matrix `P_π^λ`, key matrices, `A`, `b`, fixed points,
//! true values, MSVE, the λ-Bellman operator and the projected Bellman error.
//!
//! Notation used in the docs below: `Γ = diag(γ)`, `Λ = diag(λ)`,
//! `i = d_μ ∘ interest`, `M = diag(m)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algorithm::Algorithm;
use crate::error::{Error, Result};
use crate::linalg::{self, diag, solve, solve_matrix};
use crate::mdp::{expected_reward_vector, induced_transition, TaskSpec};

/// Singular values below this (relative) count toward the null space when
/// checking uniqueness of a stationary distribution.
const NULLITY_TOL: f64 = 1e-10;
const STATIONARY_FLOOR: f64 = 1e-12;
const DEFINITENESS_TOL: f64 = 1e-10;
const ROUTE_TOL: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;

/// Unique `d` with `pᵀd = d`, `d ≥ 0`, `Σd = 1`.
///
/// Solves `(pᵀ − I) d = 0` with the last equation replaced by the
/// normalization row, followed by one step of iterative refinement.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::Dimension(format!(
            "transition matrix must be square and non-empty, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("transition matrix".into()));
    }
    let q = p.transpose() - DMatrix::identity(n, n);
    let sv = linalg::singular_values(&q);
    let cutoff = NULLITY_TOL * sv.max().max(1.0);
    let nullity = sv.iter().filter(|&&s| s <= cutoff).count();
    if nullity > 1 {
        return Err(Error::NotUnique(nullity));
    }

    let mut system = q;
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let mut d = solve(&system, &rhs, "stationary distribution")?;
    let residual = &rhs - &system * &d;
    d += solve(&system, &residual, "stationary distribution")?;

    if let Some((state, &value)) = d.iter().enumerate().find(|(_, &v)| v <= STATIONARY_FLOOR) {
        return Err(Error::NonPositive { state, value });
    }
    Ok(d)
}

/// The matrices every analysis starts from.
struct Model<'a> {
    task: &'a TaskSpec,
    p_pi: DMatrix<f64>,
    d_mu: DVector<f64>,
    r_pi: DVector<f64>,
    ivec: DVector<f64>,
}

impl<'a> Model<'a> {
    fn new(task: &'a TaskSpec) -> Result<Self> {
        let p_pi = induced_transition(&task.mdp, &task.target)?;
        let p_mu = induced_transition(&task.mdp, &task.behavior)?;
        let d_mu = stationary_distribution(&p_mu)?;
        let r_pi = expected_reward_vector(&task.mdp, &task.target)?;
        let ivec = d_mu.component_mul(&task.interest);
        Ok(Model {
            task,
            p_pi,
            d_mu,
            r_pi,
            ivec,
        })
    }

    fn n(&self) -> usize {
        self.task.num_states()
    }

    fn identity(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n())
    }

    /// `P_π Γ`.
    fn p_gamma(&self) -> DMatrix<f64> {
        &self.p_pi * diag(&self.task.gamma)
    }

    /// `I − P_π Γ Λ`.
    fn bootstrap_resolvent_lhs(&self) -> DMatrix<f64> {
        self.identity() - self.p_gamma() * diag(&self.task.lambda)
    }

    fn true_values(&self) -> Result<DVector<f64>> {
        solve(&(self.identity() - self.p_gamma()), &self.r_pi, "true values (I - P_pi G)")
    }

    fn followon(&self) -> Result<DVector<f64>> {
        let lhs = self.identity() - diag(&self.task.gamma) * self.p_pi.transpose();
        solve(&lhs, &self.ivec, "followon vector (I - G P_pi^T)")
    }

    fn p_lambda(&self) -> Result<DMatrix<f64>> {
        let rhs = self.identity() - self.p_gamma();
        let x = solve_matrix(&self.bootstrap_resolvent_lhs(), &rhs, "P_pi^lambda (I - P_pi G L)")?;
        Ok(self.identity() - x)
    }

    /// `m` by `(I − P_π^λᵀ)⁻¹ i`, cross-checked against `Λ i + (I − Λ) f`.
    fn emphasis(&self, p_lambda: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
        let lhs = self.identity() - p_lambda.transpose();
        let m = solve(&lhs, &self.ivec, "emphasis vector (I - P_lambda^T)")?;
        let lam = &self.task.lambda;
        let other = DVector::from_fn(self.n(), |s, _| lam[s] * self.ivec[s] + (1.0 - lam[s]) * f[s]);
        let gap = linalg::inf_norm(&(&m - &other));
        if gap > ROUTE_TOL * (1.0 + linalg::inf_norm(&m)) {
            return Err(Error::Inconsistent(format!(
                "emphasis routes disagree by {gap:e}"
            )));
        }
        Ok(m)
    }

    /// `(I − P_π Γ Λ)⁻¹ r_π`.
    fn bootstrapped_reward(&self) -> Result<DVector<f64>> {
        solve(&self.bootstrap_resolvent_lhs(), &self.r_pi, "lambda reward (I - P_pi G L)")
    }
}

/// `v_π = (I − P_π Γ)⁻¹ r_π`.
pub fn true_values(task: &TaskSpec) -> Result<DVector<f64>> {
    Model::new(task)?.true_values()
}

/// Followon vector `f = (I − Γ P_πᵀ)⁻¹ i`.
pub fn followon_vector(task: &TaskSpec) -> Result<DVector<f64>> {
    Model::new(task)?.followon()
}

/// `P_π^λ = I − (I − P_π Γ Λ)⁻¹ (I − P_π Γ)`: probability of ending in `j`
/// by a bootstrapping event when starting from `i`.
pub fn p_lambda(task: &TaskSpec) -> Result<DMatrix<f64>> {
    Model::new(task)?.p_lambda()
}

/// Emphasis vector `m = (I − P_π^λᵀ)⁻¹ i`.
pub fn emphasis_vector(task: &TaskSpec) -> Result<DVector<f64>> {
    let model = Model::new(task)?;
    let pl = model.p_lambda()?;
    let f = model.followon()?;
    model.emphasis(&pl, &f)
}

/// `A`, `b` and the key matrix of one algorithm's expected update.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedUpdate {
    pub key: DMatrix<f64>,
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
}

/// Expected update `θ̄ ← θ̄ + α(b − Aθ̄)` of `algorithm` on `task`.
///
/// * on-policy TD(0): key `D_π(I − P_π Γ)`, `b = Φᵀ D_π r_π`; needs an
///   irreducible target chain.
/// * off-policy TD(0): key `D_μ(I − P_π Γ)`, `b = Φᵀ D_μ r_π`.
/// * emphatic TD(λ): key `M(I − P_π^λ)`; `A` is assembled from
///   `Φᵀ M (I − P_π Γ Λ)⁻¹ (I − P_π Γ) Φ` and `b = Φᵀ M (I − P_π Γ Λ)⁻¹ r_π`.
/// * emphatic TD(0): the emphatic case with λ ≡ 0 and unit interest.
///
/// The TD(0) variants ignore λ. With constant γ their keys reduce to the
/// familiar `D(I − γP_π)`.
pub fn expected_update(task: &TaskSpec, algorithm: Algorithm) -> Result<ExpectedUpdate> {
    let model = Model::new(task)?;
    expected_update_with(&model, algorithm)
}

fn expected_update_with(model: &Model<'_>, algorithm: Algorithm) -> Result<ExpectedUpdate> {
    let phi = model.task.features.phi();
    match algorithm {
        Algorithm::OnPolicyTd0 | Algorithm::OffPolicyTd0 => {
            let weights = if algorithm == Algorithm::OnPolicyTd0 {
                target_stationary(&model.p_pi)?
            } else {
                model.d_mu.clone()
            };
            let key = diag(&weights) * (model.identity() - model.p_gamma());
            let a_mat = phi.transpose() * &key * phi;
            let b_vec = phi.transpose() * weights.component_mul(&model.r_pi);
            Ok(ExpectedUpdate { key, a_mat, b_vec })
        }
        Algorithm::Emphatic => {
            let pl = model.p_lambda()?;
            let f = model.followon()?;
            let m = model.emphasis(&pl, &f)?;
            let m_diag = diag(&m);
            let key = &m_diag * (model.identity() - pl);
            let resolvent_lhs = model.bootstrap_resolvent_lhs();
            let x = solve_matrix(
                &resolvent_lhs,
                &((model.identity() - model.p_gamma()) * phi),
                "A matrix (I - P_pi G L)",
            )?;
            let a_mat = phi.transpose() * &m_diag * x;
            let b_vec = phi.transpose() * &m_diag * model.bootstrapped_reward()?;
            Ok(ExpectedUpdate { key, a_mat, b_vec })
        }
        Algorithm::EmphaticTd0 => {
            let n = model.n();
            let reduced = model
                .task
                .clone()
                .with_lambda(DVector::zeros(n))
                .with_interest(DVector::from_element(n, 1.0));
            expected_update(&reduced, Algorithm::Emphatic)
        }
    }
}

fn target_stationary(p_pi: &DMatrix<f64>) -> Result<DVector<f64>> {
    stationary_distribution(p_pi).map_err(|e| {
        Error::Unavailable(format!("on-policy analysis needs an irreducible target chain ({e})"))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PositiveDefinite,
    Indefinite,
    SemidefiniteBoundary,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::PositiveDefinite => "positive-definite",
            Verdict::Indefinite => "indefinite",
            Verdict::SemidefiniteBoundary => "semidefinite-boundary",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Minimum eigenvalue of `(mat + matᵀ) / 2`.
    pub min_sym_eig: f64,
    pub column_sums: DVector<f64>,
    pub verdict: Verdict,
}

/// Positive definiteness in the `yᵀ M y > 0` sense, decided on the
/// symmetric part with a ±1e-10 band reported as a boundary case.
pub fn definiteness_certificate(mat: &DMatrix<f64>) -> Result<Certificate> {
    let min_sym_eig = linalg::min_symmetric_eigenvalue(mat)?;
    let column_sums = mat.row_sum().transpose();
    let verdict = if min_sym_eig > DEFINITENESS_TOL {
        Verdict::PositiveDefinite
    } else if min_sym_eig < -DEFINITENESS_TOL {
        Verdict::Indefinite
    } else {
        Verdict::SemidefiniteBoundary
    };
    Ok(Certificate {
        min_sym_eig,
        column_sums,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub theta: DVector<f64>,
    pub condition: f64,
}

/// `θ̄ = A⁻¹ b`. Refuses systems with condition number above 1e12.
pub fn fixed_point(a_mat: &DMatrix<f64>, b_vec: &DVector<f64>) -> Result<FixedPoint> {
    let condition = linalg::condition_number(a_mat);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular(format!(
            "A matrix is singular or ill-conditioned (condition {condition:e})"
        )));
    }
    let theta = solve(a_mat, b_vec, "fixed point A theta = b")?;
    Ok(FixedPoint { theta, condition })
}

/// Precomputed weights and true values for evaluating MSVE many times.
#[derive(Clone, Debug)]
pub struct ValueError {
    weights: DVector<f64>,
    v_pi: DVector<f64>,
    phi: DMatrix<f64>,
}

impl ValueError {
    pub fn new(task: &TaskSpec) -> Result<Self> {
        let model = Model::new(task)?;
        Ok(ValueError {
            weights: model.ivec.clone(),
            v_pi: model.true_values()?,
            phi: task.features.phi().clone(),
        })
    }

    /// `Σ_s d_μ(s) i(s) (v_π(s) − θᵀφ(s))²`.
    pub fn msve(&self, theta: &DVector<f64>) -> f64 {
        let approx = &self.phi * theta;
        self.weights
            .iter()
            .zip(self.v_pi.iter().zip(approx.iter()))
            .map(|(w, (v, a))| w * (v - a) * (v - a))
            .sum()
    }

    pub fn true_values(&self) -> &DVector<f64> {
        &self.v_pi
    }
}

/// Mean square value error weighted by `d_μ(s) i(s)`.
pub fn msve(task: &TaskSpec, theta: &DVector<f64>) -> Result<f64> {
    Ok(ValueError::new(task)?.msve(theta))
}

/// `T^(λ) v = (I − P_π Γ Λ)⁻¹ r_π + P_π^λ v`.
pub fn bellman_lambda_apply(task: &TaskSpec, v: &DVector<f64>) -> Result<DVector<f64>> {
    let model = Model::new(task)?;
    bellman_lambda_with(&model, &model.p_lambda()?, v)
}

fn bellman_lambda_with(model: &Model<'_>, pl: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != model.n() {
        return Err(Error::Dimension(format!("value vector has length {}, expected {}", v.len(), model.n())));
    }
    Ok(model.bootstrapped_reward()? + pl * v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pbe {
    pub vector: DVector<f64>,
    /// `sqrt(Σ_s m(s) x_s²)`.
    pub weighted_norm: f64,
}

/// Emphasis-weighted projected Bellman error `Π(T^(λ)(Φθ) − Φθ)` with
/// `Π = Φ(ΦᵀMΦ)⁻¹ΦᵀM`.
pub fn pbe(task: &TaskSpec, theta: &DVector<f64>) -> Result<Pbe> {
    let model = Model::new(task)?;
    let pl = model.p_lambda()?;
    let f = model.followon()?;
    let m = model.emphasis(&pl, &f)?;
    let phi = task.features.phi();
    if theta.len() != phi.ncols() {
        return Err(Error::Dimension(format!("theta has length {}, expected {}", theta.len(), phi.ncols())));
    }
    let v = phi * theta;
    let bellman_error = bellman_lambda_with(&model, &pl, &v)? - &v;
    let m_diag = diag(&m);
    let gram = phi.transpose() * &m_diag * phi;
    let coeffs = solve(&gram, &(phi.transpose() * &m_diag * bellman_error), "projection (Phi^T M Phi)")?;
    let vector = phi * coeffs;
    let weighted_norm = weighted_norm(&vector, &m);
    Ok(Pbe { vector, weighted_norm })
}

/// The same error through the expected update: `Φ(ΦᵀMΦ)⁻¹(b − Aθ)`.
pub fn pbe_from_expected_update(task: &TaskSpec, theta: &DVector<f64>) -> Result<Pbe> {
    let model = Model::new(task)?;
    let update = expected_update_with(&model, Algorithm::Emphatic)?;
    let m = model.emphasis(&model.p_lambda()?, &model.followon()?)?;
    let phi = task.features.phi();
    let gram = phi.transpose() * diag(&m) * phi;
    let coeffs = solve(&gram, &(&update.b_vec - &update.a_mat * theta), "projection (Phi^T M Phi)")?;
    let vector = phi * coeffs;
    let weighted_norm = weighted_norm(&vector, &m);
    Ok(Pbe { vector, weighted_norm })
}

fn weighted_norm(x: &DVector<f64>, w: &DVector<f64>) -> f64 {
    x.iter().zip(w.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

/// Every expected-update object for one algorithm on one task.
#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub algorithm: Algorithm,
    pub d_mu: DVector<f64>,
    /// Present only when the target chain is irreducible.
    pub d_pi: Option<DVector<f64>>,
    pub p_pi: DMatrix<f64>,
    pub f: DVector<f64>,
    pub m: DVector<f64>,
    pub p_lambda: DMatrix<f64>,
    pub v_pi: DVector<f64>,
    pub key: DMatrix<f64>,
    pub a_mat: DMatrix<f64>,
    pub b_vec: DVector<f64>,
    /// Certificate of the key matrix.
    pub key_certificate: Certificate,
    /// Certificate of `A` itself.
    pub a_certificate: Certificate,
    pub theta_bar: DVector<f64>,
    pub condition_number: f64,
    pub msve_at_fixed_point: f64,
}

impl AnalysisReport {
    pub fn min_sym_eig(&self) -> f64 {
        self.key_certificate.min_sym_eig
    }

    pub fn verdict(&self) -> Verdict {
        self.key_certificate.verdict
    }

    pub fn to_json(&self) -> Value {
        json!({
            "algorithm": self.algorithm.name(),
            "d_mu": vec_json(&self.d_mu),
            "d_pi": self.d_pi.as_ref().map(vec_json),
            "p_pi": mat_json(&self.p_pi),
            "f": vec_json(&self.f),
            "m": vec_json(&self.m),
            "p_lambda": mat_json(&self.p_lambda),
            "v_pi": vec_json(&self.v_pi),
            "key": mat_json(&self.key),
            "key_column_sums": vec_json(&self.key_certificate.column_sums),
            "a_mat": mat_json(&self.a_mat),
            "b_vec": vec_json(&self.b_vec),
            "min_sym_eig": self.key_certificate.min_sym_eig,
            "verdict": self.key_certificate.verdict.name(),
            "a_min_sym_eig": self.a_certificate.min_sym_eig,
            "a_verdict": self.a_certificate.verdict.name(),
            "theta_bar": vec_json(&self.theta_bar),
            "condition_number": self.condition_number,
            "msve_at_fixed_point": self.msve_at_fixed_point,
        })
    }
}

pub(crate) fn vec_json(v: &DVector<f64>) -> Value {
    Value::from(v.iter().copied().collect::<Vec<f64>>())
}

pub(crate) fn mat_json(m: &DMatrix<f64>) -> Value {
    Value::from(
        (0..m.nrows())
            .map(|r| m.row(r).iter().copied().collect::<Vec<f64>>())
            .collect::<Vec<_>>(),
    )
}

/// Full analysis of `algorithm` on `task`.
pub fn analyze(task: &TaskSpec, algorithm: Algorithm) -> Result<AnalysisReport> {
    let model = Model::new(task)?;
    let pl = model.p_lambda()?;
    let f = model.followon()?;
    let m = model.emphasis(&pl, &f)?;
    let d_pi = stationary_distribution(&model.p_pi).ok();
    let v_pi = model.true_values()?;
    let update = expected_update_with(&model, algorithm)?;
    let key_certificate = definiteness_certificate(&update.key)?;
    let a_certificate = definiteness_certificate(&update.a_mat)?;
    let fp = fixed_point(&update.a_mat, &update.b_vec)?;
    let errors = ValueError {
        weights: model.ivec.clone(),
        v_pi: v_pi.clone(),
        phi: task.features.phi().clone(),
    };
    let msve_at_fixed_point = errors.msve(&fp.theta);
    Ok(AnalysisReport {
        algorithm,
        d_mu: model.d_mu.clone(),
        d_pi,
        p_pi: model.p_pi.clone(),
        f,
        m,
        p_lambda: pl,
        v_pi,
        key: update.key,
        a_mat: update.a_mat,
        b_vec: update.b_vec,
        key_certificate,
        a_certificate,
        theta_bar: fp.theta,
        condition_number: fp.condition,
        msve_at_fixed_point,
    })
}
