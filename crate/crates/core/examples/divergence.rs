//! Off-policy TD(0) against emphatic TD(0) on the two θ→2θ problems.
//!
//! Prints the expected-update matrix `A` of each algorithm, follows the
//! deterministic iteration `θ̄ ← θ̄ + α(b − Aθ̄)`, and summarizes 50 seeded
//! stochastic runs.
//!
//! ```bash
//! cargo run --release --example divergence
//! ```

use emphatic::experiments::{expected_trajectory, RunConfig};
use emphatic::{analyze, build_scenario, run_experiment, Algorithm};

fn main() -> emphatic::Result<()> {
    let seeds: Vec<u64> = (1..=50).collect();
    for name in ["th2th-continuing", "th2th-episodic"] {
        let scenario = build_scenario(name)?;
        println!("== {name}: {}", scenario.description);
        for alg in [Algorithm::OffPolicyTd0, Algorithm::EmphaticTd0] {
            let report = analyze(&scenario.task, alg)?;
            let cfg = RunConfig { record_every: scenario.horizon / 6, ..RunConfig::for_scenario(&scenario) };
            let expected = expected_trajectory(&scenario.task, alg, &cfg)?;
            let path: Vec<String> = expected.iter().map(|r| format!("{:.3e}", r.theta[0])).collect();
            let result = run_experiment(&scenario, alg, &seeds, &cfg)?;
            let diverged = result.runs.iter().filter(|r| r.diverged()).count();
            println!(
                "{alg:>15}: A = {:+.4}, key {}; expected θ̄ {}",
                report.a_mat[(0, 0)],
                report.verdict().name(),
                path.join(" → ")
            );
            println!(
                "{:>15}  {} runs, {diverged} diverged, median final |θ| {:.3e}",
                "",
                result.runs.len(),
                result.median_final_abs()
            );
        }
    }
    Ok(())
}
