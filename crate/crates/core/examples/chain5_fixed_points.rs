//! Fixed points on the five-state chain: true values, the fixed point of
//! each algorithm, its mean squared value error, and the projected Bellman
//! error there.
//!
//! ```bash
//! cargo run --example chain5_fixed_points
//! ```

use emphatic::analysis::pbe;
use emphatic::{analyze, build_scenario, true_values, Algorithm};

fn main() -> emphatic::Result<()> {
    let task = build_scenario("chain5")?.task;
    let phi = task.features.phi();
    println!("true values      {:.4?}", true_values(&task)?.as_slice());
    for alg in [Algorithm::OffPolicyTd0, Algorithm::EmphaticTd0, Algorithm::Emphatic] {
        let r = analyze(&task, alg)?;
        let values = phi * &r.theta_bar;
        println!(
            "{:<16} values {:.4?} MSVE {:.4}  A min eig {:+.4}",
            alg.name(),
            values.as_slice(),
            r.msve_at_fixed_point,
            r.a_certificate.min_sym_eig
        );
    }
    let emphatic = analyze(&task, Algorithm::Emphatic)?;
    println!("PBE at the emphatic fixed point: {:.2e}", pbe(&task, &emphatic.theta_bar)?.weighted_norm);

    // A larger λ moves the emphatic fixed point toward the true values.
    for lambda in [0.0, 0.5, 0.9, 1.0] {
        let t = task.clone().with_lambda(nalgebra::DVector::from_element(5, lambda));
        println!("λ = {lambda:<4} emphatic MSVE {:.4}", analyze(&t, Algorithm::Emphatic)?.msve_at_fixed_point);
    }
    Ok(())
}
