//! Exact mean and variance of the followon trace `F_t`.
//!
//! On th2th-continuing with interest only at `t = 0` the mean decays as
//! `0.9^t` while the variance grows as `1.62^t − 0.81^t`. A Monte Carlo
//! estimate of the mean is printed alongside.
//!
//! ```bash
//! cargo run --release --example followon_moments
//! ```

use emphatic::experiments::simulate_followon;
use emphatic::{build_scenario, f_moment_curve, InterestMode};

fn main() -> emphatic::Result<()> {
    let scenario = build_scenario("th2th-continuing")?;
    let mode = InterestMode::InitialPulse;
    println!("{:>3} {:>12} {:>14} {:>14} {:>22}", "t", "E[F_t]", "Var[F_t]", "closed form", "Monte Carlo mean ± SE");
    for c in f_moment_curve(&scenario.task, mode, 20)?.into_iter().step_by(2) {
        let (_, var) = scenario.analytic_moment(mode, c.t).expect("closed form known");
        let mc = simulate_followon(&scenario.task, mode, c.t, 100_000, c.t as u64)?;
        println!(
            "{:>3} {:>12.6} {:>14.4} {:>14.4} {:>13.6} ± {:.6}",
            c.t, c.mean, c.variance, var, mc.mean, mc.std_error
        );
    }

    println!("\nth2th-episodic keeps the variance bounded:");
    let episodic = build_scenario("th2th-episodic")?;
    for c in f_moment_curve(&episodic.task, InterestMode::StateInterest, 40)?.into_iter().step_by(10) {
        println!("{:>3} mean {:.4} variance {:.4}", c.t, c.mean, c.variance);
    }
    Ok(())
}
