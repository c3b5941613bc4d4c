//! Problem files: write a built-in task as JSON, or load one and analyze it.
//!
//! ```bash
//! cargo run --example problem_files -- chain5 > chain5.json
//! cargo run --example problem_files -- --analyze chain5.json
//! ```

use std::path::Path;

use emphatic::{analyze, build_scenario, validate_task, Algorithm, ProblemFile};

fn main() -> emphatic::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [flag, path] if flag == "--analyze" => {
            let file = ProblemFile::load(Path::new(path))?;
            let task = file.to_task()?;
            let report = validate_task(&task);
            if !report.is_valid() {
                eprintln!("{report}");
                std::process::exit(2);
            }
            let r = analyze(&task, Algorithm::Emphatic)?;
            println!("{}: key {} (min eig {:.4}), θ̄ = {:.4?}", file.name.unwrap_or_default(), r.verdict().name(), r.min_sym_eig(), r.theta_bar.as_slice());
        }
        [name] => {
            let scenario = build_scenario(name)?;
            let mut file = ProblemFile::from_task(&scenario.task, Some(&scenario.name));
            file.description = Some(scenario.description);
            println!("{}", file.to_json());
        }
        _ => {
            eprintln!("usage: problem_files <builtin> | --analyze <file.json>");
            std::process::exit(2);
        }
    }
    Ok(())
}
