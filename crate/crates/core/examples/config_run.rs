//! Runs a JSON experiment configuration and lists the artifacts it writes.
//!
//! `cargo run --example config_run -- path/to/config.json`; without an argument a small
//! spectrum experiment is built in code and written to a temporary directory.

use brsl::experiment::{run, ExperimentConfig};

fn main() -> brsl::Result<()> {
    let config = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => {
            let mut c = ExperimentConfig::default_experiment();
            c.domain.points_per_dim = vec![24, 24];
            c.refine = 1;
            c.output_dir = std::env::temp_dir().join("brsl-config-run");
            c
        }
    };
    println!("config hash {}", config.hash());
    let report = run(&config)?;
    for t in &report.timings {
        println!("{:>7.2} s  {}", t.seconds, t.stage);
    }
    for a in &report.assertions {
        println!("{} {} ({:.4e} vs {:.4e})", if a.pass { "ok  " } else { "FAIL" }, a.name, a.measured, a.tolerance);
    }
    for entry in std::fs::read_dir(&config.output_dir)? {
        let entry = entry?;
        println!("wrote {} ({} bytes)", entry.path().display(), entry.metadata()?.len());
    }
    Ok(())
}
