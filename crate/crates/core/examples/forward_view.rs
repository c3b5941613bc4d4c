//! The emphasis `M_t` computed two ways along one trajectory: by the online
//! recursion inside emphatic TD(λ), and by the explicit sum over earlier
//! steps of how much each update bootstraps from step `t`.
//!
//! ```bash
//! cargo run --example forward_view
//! ```

use emphatic::experiments::sample_trajectory;
use emphatic::learners::emphatic_td_lambda_step;
use emphatic::{build_scenario, forward_view_emphasis, LearnerState};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> emphatic::Result<()> {
    let task = build_scenario("chain5")?
        .task
        .with_lambda(DVector::from_vec(vec![0.2, 0.5, 0.8, 0.5, 0.2]));
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let trajectory = sample_trajectory(&task, 2, 15, &mut rng);
    let oracle = forward_view_emphasis(&trajectory, &task);
    let mut state = LearnerState::new(DVector::zeros(task.num_features()), 0.0);
    println!("{:>2} {:>2} {:>3} {:>5} {:>10} {:>10} {:>10}", "t", "s", "a", "rho", "F (rec)", "M (rec)", "M (sum)");
    for (t, (tr, (_, m_sum))) in trajectory.iter().zip(oracle).enumerate() {
        let rec = emphatic_td_lambda_step(&mut state, tr, &task)?;
        println!(
            "{t:>2} {:>2} {:>3} {:>5.2} {:>10.6} {:>10.6} {:>10.6}",
            tr.state, tr.action, tr.rho, rec.followon, rec.emphasis, m_sum
        );
    }
    Ok(())
}
