//! Key-matrix and `A`-matrix certificates for every algorithm on every
//! built-in scenario.
//!
//! A matrix is certified positive definite when the smallest eigenvalue of
//! its symmetric part is positive. For the emphatic key matrix the column
//! sums equal `d_μ(s) i(s)`, which is what makes it positive definite.
//!
//! ```bash
//! cargo run --example stability_certificates
//! ```

use emphatic::experiments::builtin_scenarios;
use emphatic::{analyze, Algorithm, Error};

fn main() -> emphatic::Result<()> {
    for scenario in builtin_scenarios() {
        println!("== {}", scenario.name);
        for alg in Algorithm::ALL {
            match analyze(&scenario.task, alg) {
                Ok(r) => println!(
                    "{:>15}: key {:<22} (min eig {:+.4}), A {:<17} (min eig {:+.4}), column sums {:.4?}",
                    alg.name(),
                    r.verdict().name(),
                    r.min_sym_eig(),
                    r.a_certificate.verdict.name(),
                    r.a_certificate.min_sym_eig,
                    r.key_certificate.column_sums.as_slice(),
                ),
                Err(e @ Error::Unavailable(_)) => println!("{:>15}: {e}", alg.name()),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}
