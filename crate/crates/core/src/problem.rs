//! JSON problem files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "optional",
//!   "states": 2, "actions": 2,
//!   "p": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
//!   "r": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
//!   "target":   [[0, 1], [0, 1]],
//!   "behavior": [[0.5, 0.5], [0.5, 0.5]],
//!   "gamma": [0.9, 0.9], "lambda": [0, 0], "interest": [1, 1],
//!   "phi": [[1], [2]]
//! }
//! ```
//!
//! `p` and `r` are nested `[state][action][next_state]`; all indices are
//! 0-based.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{self, FloatStyle};
use crate::mdp::{FeatureMap, FiniteMdp, Policy, TaskSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: usize,
    pub actions: usize,
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<Vec<f64>>>,
    pub target: Vec<Vec<f64>>,
    pub behavior: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub interest: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
}

impl ProblemFile {
    pub fn from_task(task: &TaskSpec, name: Option<&str>) -> Self {
        ProblemFile {
            schema_version: SCHEMA_VERSION,
            name: name.map(str::to_string),
            description: None,
            states: task.num_states(),
            actions: task.num_actions(),
            p: task.mdp.p_nested(),
            r: task.mdp.r_nested(),
            target: task.target.rows(),
            behavior: task.behavior.rows(),
            gamma: task.gamma.iter().copied().collect(),
            lambda: task.lambda.iter().copied().collect(),
            interest: task.interest.iter().copied().collect(),
            phi: task.features.rows(),
        }
    }

    /// Converts to a task. Shapes are checked; numeric invariants are left
    /// to [`crate::mdp::validate_task`].
    pub fn to_task(&self) -> Result<TaskSpec> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Problem(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.p.len() != self.states || self.p.iter().any(|row| row.len() != self.actions) {
            return Err(Error::Problem(format!(
                "`p` must be {} x {} x {}",
                self.states, self.actions, self.states
            )));
        }
        let shape = |e: Error| Error::Problem(e.to_string());
        let mdp = FiniteMdp::new(&self.p, &self.r).map_err(shape)?;
        let target = Policy::from_rows(&self.target).map_err(shape)?;
        let behavior = Policy::from_rows(&self.behavior).map_err(shape)?;
        let features = FeatureMap::from_rows(&self.phi).map_err(shape)?;
        TaskSpec::new(
            mdp,
            target,
            behavior,
            DVector::from_vec(self.gamma.clone()),
            DVector::from_vec(self.lambda.clone()),
            DVector::from_vec(self.interest.clone()),
            features,
        )
        .map_err(shape)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Problem(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("problem files always serialize");
        json::pretty(&value, FloatStyle::Shortest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ProblemFile::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{build_scenario, SCENARIO_NAMES};
    use proptest::prelude::*;

    #[test]
    fn schema_version_is_required() {
        let text = build_scenario("th2th-continuing")
            .map(|s| ProblemFile::from_task(&s.task, None).to_json())
            .unwrap()
            .replace("\"schema_version\": 1,", "");
        assert!(matches!(ProblemFile::from_json(&text), Err(Error::Problem(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut file = ProblemFile::from_task(&build_scenario("chain5").unwrap().task, None);
        file.schema_version = 2;
        assert!(matches!(file.to_task(), Err(Error::Problem(_))));
    }

    #[test]
    fn ragged_kernel_is_rejected() {
        let mut file = ProblemFile::from_task(&build_scenario("chain5").unwrap().task, None);
        file.p[2].pop();
        assert!(matches!(file.to_task(), Err(Error::Problem(_))));
    }

    #[test]
    fn builtins_survive_json() {
        for name in SCENARIO_NAMES {
            let task = build_scenario(name).unwrap().task;
            let text = ProblemFile::from_task(&task, Some(name)).to_json();
            assert_eq!(ProblemFile::from_json(&text).unwrap().to_task().unwrap(), task);
        }
    }

    proptest! {
        #[test]
        fn arbitrary_functions_survive_json(
            gamma in prop::collection::vec(0.0f64..=1.0, 5),
            lambda in prop::collection::vec(0.0f64..=1.0, 5),
            interest in prop::collection::vec(1e-3f64..10.0, 5),
        ) {
            let task = build_scenario("chain5").unwrap().task
                .with_gamma(DVector::from_vec(gamma))
                .with_lambda(DVector::from_vec(lambda))
                .with_interest(DVector::from_vec(interest));
            let text = ProblemFile::from_task(&task, None).to_json();
            prop_assert_eq!(ProblemFile::from_json(&text).unwrap().to_task().unwrap(), task);
        }
    }
}
