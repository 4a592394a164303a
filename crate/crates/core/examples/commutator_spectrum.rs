//! Singular values of `[R_{λ,k}, M_f]` on a grid, the weak `L_{2,∞}` quasinorm and the Weyl fit.
//!
//! Pass the number of points per axis as the first argument (default 32).

use std::sync::Arc;

use brsl::discretize::BoxGrid;
use brsl::experiment::{commutator_spectrum, ExperimentConfig};
use brsl::symbol::Symbol;

fn main() -> brsl::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(32);
    let cfg = ExperimentConfig::default_experiment();
    let riesz = cfg.bessel_riesz()?;
    let grid = Arc::new(BoxGrid::uniform(&cfg.domain.pairs(), m)?);

    let run = commutator_spectrum(&riesz, &cfg.symbol, &grid, &cfg.fit)?;
    let s = run.spectrum.values();
    println!("{} singular values, largest {:.5}", s.len(), s[0]);
    for k in [0, 1, 3, 7, 15, 31, 63, 127] {
        println!("  μ_{k:<4} = {:.6e}   (k+1)^(1/2) μ_k = {:.5}", s[k], ((k + 1) as f64).sqrt() * s[k]);
    }
    println!("weak quasinorm {:.5}", run.summary.weak_quasinorm);
    if let Some(fit) = run.summary.fit {
        println!(
            "fit on [{}, {}]: exponent {:.4} (target -0.5), coefficient {:.5}, pinned {:.5}",
            fit.window[0], fit.window[1], fit.exponent, fit.coefficient, fit.pinned_coefficient
        );
    }

    let flat = commutator_spectrum(&riesz, &Symbol::Constant { value: 3.0 }, &grid, &cfg.fit)?;
    println!("constant symbol: largest singular value {}", flat.summary.largest);
    Ok(())
}
