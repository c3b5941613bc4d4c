//! Reference computations for the integration and acceptance tests.
//!
//! Everything here is built from sums and iterations written out directly
//! (power iteration, truncated Neumann series, explicit action sums) so it
//! shares no code path with the library's LU/SVD-based analysis.

#![allow(dead_code)]

use emphatic::TaskSpec;
use nalgebra::{DMatrix, DVector};

/// `P[s, s'] = Σ_a pol(a|s) p(s'|s, a)` by explicit summation.
pub fn kernel(task: &TaskSpec, target: bool) -> DMatrix<f64> {
    let n = task.num_states();
    let pol = if target { &task.target } else { &task.behavior };
    DMatrix::from_fn(n, n, |s, j| {
        (0..task.num_actions()).map(|a| pol.prob(s, a) * task.mdp.p(s, a, j)).sum()
    })
}

/// `r_π(s) = Σ_a π(a|s) Σ_s' p(s'|s, a) r(s, a, s')`.
pub fn reward(task: &TaskSpec) -> DVector<f64> {
    let n = task.num_states();
    DVector::from_fn(n, |s, _| {
        (0..task.num_actions())
            .map(|a| {
                task.target.prob(s, a) * (0..n).map(|j| task.mdp.p(s, a, j) * task.mdp.r(s, a, j)).sum::<f64>()
            })
            .sum()
    })
}

/// Stationary distribution as the common row of `((I + P)/2)^(2^k)`,
/// computed by repeated squaring with rows renormalized after each step.
/// The lazy chain has the same fixed point and no periodic part.
pub fn stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut q = (DMatrix::identity(n, n) + p) * 0.5;
    for _ in 0..80 {
        q = &q * &q;
        for mut row in q.row_iter_mut() {
            let total = row.sum();
            row /= total;
        }
    }
    let d = DVector::from_fn(n, |j, _| q.column(j).mean());
    &d / d.sum()
}

/// Solves `x = b + m x` by iterating until the update stops changing `x`.
pub fn neumann(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    for _ in 0..10_000_000 {
        let next = b + m * &x;
        let change = (&next - &x).amax();
        x = next;
        if change <= 1e-16 * (1.0 + x.amax()) {
            break;
        }
    }
    x
}

/// `Σ_k m^k` truncated once the terms vanish.
pub fn neumann_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for _ in 0..10_000_000 {
        term = &term * m;
        sum += &term;
        if term.amax() < 1e-18 * sum.amax() {
            break;
        }
    }
    sum
}

pub struct Reference {
    pub d_mu: DVector<f64>,
    pub p_pi: DMatrix<f64>,
    pub r_pi: DVector<f64>,
    pub ivec: DVector<f64>,
    pub f: DVector<f64>,
    /// `Σ_k (P_π Γ Λ)^k`.
    pub resolvent: DMatrix<f64>,
    pub p_lambda: DMatrix<f64>,
    pub m: DVector<f64>,
    pub v_pi: DVector<f64>,
}

impl Reference {
    pub fn new(task: &TaskSpec) -> Self {
        let n = task.num_states();
        let d_mu = stationary(&kernel(task, false));
        let p_pi = kernel(task, true);
        let r_pi = reward(task);
        let ivec = d_mu.component_mul(&task.interest);
        let gamma = DMatrix::from_diagonal(&task.gamma);
        let lambda = DMatrix::from_diagonal(&task.lambda);
        // f = i + Γ P_πᵀ f
        let f = neumann(&(&gamma * p_pi.transpose()), &ivec);
        let resolvent = neumann_matrix(&(&p_pi * &gamma * &lambda));
        let p_lambda = DMatrix::identity(n, n) - &resolvent * (DMatrix::identity(n, n) - &p_pi * &gamma);
        // m = i + P_λᵀ m
        let m = neumann(&p_lambda.transpose(), &ivec);
        // v = r + P_π Γ v
        let v_pi = neumann(&(&p_pi * &gamma), &r_pi);
        Reference { d_mu, p_pi, r_pi, ivec, f, resolvent, p_lambda, m, v_pi }
    }

    /// `T^(λ) v = Σ_k (P_π Γ Λ)^k r_π + P_λ v`.
    pub fn bellman(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.resolvent * &self.r_pi + &self.p_lambda * v
    }

    /// `sqrt(Σ m(s) x_s²)` of `Φ(ΦᵀMΦ)⁻¹ΦᵀM(T^(λ)(Φθ) − Φθ)`; the Gram
    /// system is solved by Cholesky.
    pub fn pbe_norm(&self, task: &TaskSpec, theta: &DVector<f64>) -> f64 {
        let phi = task.features.phi();
        let m = DMatrix::from_diagonal(&self.m);
        let v = phi * theta;
        let err = self.bellman(&v) - &v;
        let gram = phi.transpose() * &m * phi;
        let coeffs = gram.cholesky().expect("Gram matrix is positive definite").solve(&(phi.transpose() * &m * err));
        let proj = phi * coeffs;
        proj.iter().zip(self.m.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
    }
}

/// Column sums of a matrix.
pub fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.ncols(), |j, _| m.column(j).sum())
}

/// Smallest eigenvalue of `(m + mᵀ)/2` by cyclic Jacobi rotations.
pub fn min_sym_eig(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
}

/// `|x − y| ≤ tol · max(1, |y|)` componentwise.
pub fn close(x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> bool {
    x.len() == y.len() && x.iter().zip(y.iter()).all(|(a, b)| (a - b).abs() <= tol * b.abs().max(1.0))
}
