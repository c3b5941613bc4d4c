//! Random valid tasks and the positive-definiteness property of the
//! emphatic key matrix, compared with off-policy TD(0) on the same tasks.
//!
//! ```bash
//! cargo run --example random_tasks
//! ```

use emphatic::generate::{random_task, RandomTaskConfig};
use emphatic::{analyze, Algorithm, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> emphatic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = RandomTaskConfig { constant_gamma: Some(0.95), ..RandomTaskConfig::default() };
    let (mut emphatic_ok, mut off_ok, total) = (0, 0, 200);
    let mut worst = f64::INFINITY;
    for _ in 0..total {
        let task = random_task(&mut rng, &cfg);
        let e = analyze(&task, Algorithm::Emphatic)?;
        worst = worst.min(e.min_sym_eig());
        emphatic_ok += (e.verdict() != Verdict::Indefinite) as usize;
        off_ok += (analyze(&task, Algorithm::OffPolicyTd0)?.verdict() == Verdict::PositiveDefinite) as usize;
    }
    println!("emphatic key matrix positive (semi)definite on {emphatic_ok}/{total} tasks (smallest eigenvalue {worst:.2e})");
    println!("off-policy TD(0) key matrix positive definite on {off_ok}/{total} tasks");
    Ok(())
}
