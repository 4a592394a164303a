//! Two-point symbols acting as Schur multipliers: the last-coordinate ratio bound under
//! `H ≤ 1` and the norm growth of Hadamard products on a discretized Riesz kernel.

use std::sync::Arc;

use brsl::aux_fn::{AuxIndex, FTable};
use brsl::discretize::{assemble, schur_norm_ratio, BoxGrid, SpaceTag};
use brsl::kernels::{ratio_bound_check, BesselRiesz, SchurSymbol};
use brsl::special_fn::ModelParams;

fn main() -> brsl::Result<()> {
    for n in [1, 2, 3] {
        let r = ratio_bound_check(n, 20_000, 7)?;
        println!(
            "n = {n}: {} pairs with H <= 1 ({} drawn), ratio in [{:.4}, {:.4}] inside [{:.4}, {:.4}]",
            r.accepted, r.drawn, r.min_ratio, r.max_ratio, r.bounds.0, r.bounds.1
        );
    }

    let p = ModelParams::new(1, 1.0, 2)?;
    let table = Arc::new(FTable::new(&p)?);
    let grid = Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (0.5, 1.5)], 20)?);
    let a = assemble(&BesselRiesz::with_table(table.clone()), &grid, SpaceTag::Weighted, p.lambda)?;
    println!("\n‖M ∘ A‖ / ‖A‖ for the discretized Bessel-Riesz kernel on 20²");
    for m in [
        SchurSymbol::H,
        SchurSymbol::A,
        SchurSymbol::B,
        SchurSymbol::Unit(1),
        SchurSymbol::AuxOfH(AuxIndex::F20, table.clone()),
        SchurSymbol::Product(vec![SchurSymbol::A, SchurSymbol::Unit(2)]),
    ] {
        println!("  {:<14} {:.4}", m.label(), schur_norm_ratio(&m, &a)?);
    }
    Ok(())
}
