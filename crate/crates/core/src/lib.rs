//! Emphatic temporal-difference learning for policy evaluation on finite
//! MDPs with linear function approximation.
//!
//! The crate pairs online learners with exact oracles:
//!
//! - [`mdp`]: tasks (MDP, target and behavior policies, state-dependent
//!   γ, λ and interest, features), validation and sampling.
//! - [`analysis`]: stationary distributions, followon and emphasis
//!   vectors, key matrices, expected updates `A`, `b`, definiteness
//!   certificates, fixed points, MSVE and projected Bellman error.
//! - [`learners`]: on-policy TD(0), off-policy TD(0), emphatic TD(0) and
//!   emphatic TD(λ) step functions.
//! - [`experiments`]: built-in scenarios, a forward-view emphasis oracle,
//!   exact followon moments, and the seeded multi-run harness.
//! - [`problem`] and [`cli`]: the JSON problem format and the
//!   `analyze | run | moments | list` command surface.
//!
//! ```
//! use emphatic::{analyze, build_scenario, Algorithm, Verdict};
//!
//! let task = build_scenario("th2th-continuing").unwrap().task;
//! let off = analyze(&task, Algorithm::OffPolicyTd0).unwrap();
//! let emph = analyze(&task, Algorithm::Emphatic).unwrap();
//! assert!((off.a_mat[(0, 0)] + 0.2).abs() < 1e-12);
//! assert_eq!(emph.verdict(), Verdict::PositiveDefinite);
//! ```

pub mod algorithm;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod json;
pub mod learners;
pub mod linalg;
pub mod mdp;
pub mod problem;

pub use algorithm::Algorithm;
pub use analysis::{
    analyze, definiteness_certificate, emphasis_vector, expected_update, fixed_point, followon_vector, msve, pbe,
    stationary_distribution, true_values, AnalysisReport, Certificate, ExpectedUpdate, Verdict,
};
pub use error::{Error, Result};
pub use experiments::{
    build_scenario, f_moment_curve, forward_view_emphasis, run_experiment, InterestMode, MomentCurve, RunConfig,
    Scenario, SCENARIO_NAMES,
};
pub use learners::{Learner, LearnerState, StepRecord};
pub use mdp::{validate_task, FeatureMap, FiniteMdp, Policy, TaskSpec, Transition, ValidationReport};
pub use problem::ProblemFile;
