//! Random valid tasks for property tests.
//!
//! Kernel and policy rows are Dirichlet(1, …, 1). The behavior policy is
//! mixed with the uniform policy so that it covers the target and keeps the
//! behavior chain irreducible.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use crate::linalg;
use crate::mdp::{validate_task, FeatureMap, FiniteMdp, Policy, TaskSpec};

#[derive(Clone, Debug)]
pub struct RandomTaskConfig {
    pub min_states: usize,
    pub max_states: usize,
    pub max_actions: usize,
    /// γ(s) is drawn from `[0, gamma_max]` unless `constant_gamma` is set.
    pub gamma_max: f64,
    pub constant_gamma: Option<f64>,
    pub interest_min: f64,
    pub interest_max: f64,
    /// Weight of the uniform policy in the behavior mixture.
    pub behavior_mix: f64,
    /// Use the behavior policy as the target as well.
    pub on_policy: bool,
}

impl Default for RandomTaskConfig {
    fn default() -> Self {
        RandomTaskConfig {
            min_states: 2,
            max_states: 6,
            max_actions: 3,
            gamma_max: 0.99,
            constant_gamma: None,
            interest_min: 0.05,
            interest_max: 1.0,
            behavior_mix: 0.1,
            on_policy: false,
        }
    }
}

fn dirichlet_row<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Normalizes a row so it sums to one to the last bit that matters.
fn renormalize(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
}

/// Draws one task; retries internally until it validates.
pub fn random_task<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTaskConfig) -> TaskSpec {
    loop {
        let task = draw(rng, cfg);
        if validate_task(&task).is_valid() {
            return task;
        }
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTaskConfig) -> TaskSpec {
    let n = rng.random_range(cfg.min_states..=cfg.max_states);
    let k = rng.random_range(1..=cfg.max_actions);

    let p: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| (0..k).map(|_| dirichlet_row(n, rng)).collect())
        .collect();
    let r: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
        .collect();
    let mdp = FiniteMdp::new(&p, &r).expect("shapes are consistent by construction");

    let behavior_rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = dirichlet_row(k, rng)
                .into_iter()
                .map(|x| (1.0 - cfg.behavior_mix) * x + cfg.behavior_mix / k as f64)
                .collect();
            renormalize(&mut row);
            row
        })
        .collect();
    let target_rows = if cfg.on_policy {
        behavior_rows.clone()
    } else {
        (0..n).map(|_| dirichlet_row(k, rng)).collect()
    };

    let gamma = match cfg.constant_gamma {
        Some(g) => DVector::from_element(n, g),
        None => DVector::from_fn(n, |_, _| rng.random_range(0.0..=cfg.gamma_max)),
    };
    let lambda = DVector::from_fn(n, |_, _| rng.random_range(0.0..=1.0));
    let interest = DVector::from_fn(n, |_, _| rng.random_range(cfg.interest_min..=cfg.interest_max));

    let num_features = rng.random_range(1..=n);
    let phi = loop {
        let phi = DMatrix::from_fn(n, num_features, |_, _| rng.random_range(-1.0..1.0));
        if linalg::rank(&phi, 1e-6) == num_features {
            break phi;
        }
    };

    TaskSpec::new(
        mdp,
        Policy::from_rows(&target_rows).expect("rows are rectangular"),
        Policy::from_rows(&behavior_rows).expect("rows are rectangular"),
        gamma,
        lambda,
        interest,
        FeatureMap::new(phi).expect("non-empty"),
    )
    .expect("dimensions agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_tasks_validate_and_are_reproducible() {
        let cfg = RandomTaskConfig::default();
        let a: Vec<TaskSpec> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..10).map(|_| random_task(&mut rng, &cfg)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for task in &a {
            assert!(validate_task(task).is_valid());
            assert_eq!(*task, random_task(&mut rng, &cfg));
        }
    }

    #[test]
    fn on_policy_config_shares_policies() {
        let cfg = RandomTaskConfig {
            on_policy: true,
            constant_gamma: Some(0.9),
            ..RandomTaskConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let task = random_task(&mut rng, &cfg);
        assert_eq!(task.target, task.behavior);
        assert_eq!(task.constant_gamma(), Some(0.9));
    }
}
