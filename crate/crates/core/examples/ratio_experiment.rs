//! Weyl coefficients of two symbols compared with their directional seminorms.

use std::sync::Arc;

use brsl::discretize::BoxGrid;
use brsl::experiment::{ratio_experiment, ExperimentConfig};

fn main() -> brsl::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32);
    let cfg = ExperimentConfig::default_experiment();
    let g = cfg.comparison.clone().expect("default experiment has a comparison symbol");
    let grid = Arc::new(BoxGrid::uniform(&cfg.domain.pairs(), m)?);
    let r = ratio_experiment(&cfg.bessel_riesz()?, &cfg.symbol, &g, &grid, &cfg.fit, cfg.tolerances.ratio)?;
    println!("grid {m}²");
    println!("  C_f = {:.5}  C_g = {:.5}  ratio {:.4}", r.coefficient_f, r.coefficient_g, r.coefficient_ratio);
    println!("  N_f = {:.5}  N_g = {:.5}  ratio {:.4}", r.seminorm_f, r.seminorm_g, r.seminorm_ratio);
    println!("  C/N: {:.4} and {:.4}", r.coefficient_f / r.seminorm_f, r.coefficient_g / r.seminorm_g);
    println!("  relative gap {:.2}% ({})", 100.0 * r.relative_gap, if r.pass { "pass" } else { "fail" });
    Ok(())
}
