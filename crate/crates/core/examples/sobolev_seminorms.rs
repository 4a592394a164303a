//! Gradient seminorms of symbols and the empirical equivalence constants between the
//! directional seminorm and `‖∇f‖_p`.

use brsl::discretize::BoxGrid;
use brsl::sobolev::{equivalence_probe, sobolev_report};
use brsl::symbol::Symbol;

fn main() -> brsl::Result<()> {
    let grid = BoxGrid::uniform(&[(0.0, 1.0), (0.5, 1.5)], 64)?;
    let symbols = [
        ("cosine bump r 0.4", Symbol::cosine(vec![0.5, 1.0], 0.4)),
        ("cosine bump r 0.2", Symbol::cosine(vec![0.5, 1.0], 0.2)),
        ("gaussian w 0.08", Symbol::gaussian(vec![0.5, 1.0], 0.08)),
        (
            "window",
            Symbol::CoordinateWindow { lo: vec![0.1, 0.6], hi: vec![0.9, 1.4], ramp: 0.3, amplitude: 1.0 },
        ),
    ];
    println!("{:<20} {:>12} {:>12} {:>8}", "symbol", "‖∇f‖_2", "‖f‖^(2)", "ratio");
    for (name, f) in &symbols {
        let r = sobolev_report(f, 2, 2.0, &grid)?;
        println!("{name:<20} {:>12.6} {:>12.6} {:>8.4}", r.seminorm_p, r.directional_k, r.ratio);
    }

    for k in [1, 2] {
        let probe = equivalence_probe(k, 2.0, &grid, 12, 3)?;
        println!("k = {k}: c1 = {:.4}, c2 = {:.4} over {} random bump pairs", probe.c1, probe.c2, probe.ratios.len());
    }
    Ok(())
}
