//! Seeded multi-run experiment on the five-state chain with CSV and JSON
//! manifest output.
//!
//! The output directory defaults to `$EMPHATIC_OUT_DIR` or a temporary
//! directory. Runs are parallel across seeds and bit-for-bit reproducible.
//!
//! ```bash
//! cargo run --release --example experiment_runner
//! ```

use std::path::PathBuf;

use emphatic::experiments::fixed_point_msve;
use emphatic::{build_scenario, run_experiment, Algorithm, RunConfig};

fn main() -> emphatic::Result<()> {
    let scenario = build_scenario("chain5")?;
    let seeds: Vec<u64> = (1..=scenario.runs).collect();
    let cfg = RunConfig { record_every: 500, ..RunConfig::for_scenario(&scenario) };
    let out = std::env::var_os("EMPHATIC_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("emphatic-chain5"));

    for alg in [Algorithm::OffPolicyTd0, Algorithm::Emphatic] {
        let result = run_experiment(&scenario, alg, &seeds, &cfg)?;
        let dir = out.join(alg.name());
        result.write_to(&dir)?;
        let curve = result.expected.as_ref().expect("analysis available");
        let checkpoints: Vec<String> = curve
            .iter()
            .step_by(8)
            .map(|r| format!("t={} {:.3}", r.t, r.msve.unwrap_or(f64::NAN)))
            .collect();
        let mean_final: f64 = result
            .runs
            .iter()
            .filter_map(|r| r.rows.last().and_then(|row| row.msve))
            .sum::<f64>()
            / result.runs.len() as f64;
        println!("{alg}: expected MSVE {}", checkpoints.join(", "));
        println!(
            "{alg}: mean final run MSVE {mean_final:.3}, fixed point {:.3}, files in {}, config {}",
            fixed_point_msve(&scenario.task, alg)?,
            dir.display(),
            &result.config_hash[..12]
        );
    }
    Ok(())
}
