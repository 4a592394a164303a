//! The auxiliary functions `F_{k,l}`, `G_{k,l}`: limits at 0, the small-x decomposition,
//! the large-x envelope and the interpolation table used by the kernels.

use brsl::aux_fn::{decompose, derivative_bound_probe, f_value, f_zero, f_zero_extrapolated, g_value, AuxIndex, FTable};
use brsl::special_fn::ModelParams;

fn main() -> brsl::Result<()> {
    let p = ModelParams::new(1, 1.0, 2)?;
    println!("limits at 0 (exact, extrapolated)");
    for idx in AuxIndex::ALL {
        println!("  {}: {:.12} {:.12}", idx.label(), f_zero(idx, &p)?, f_zero_extrapolated(idx, &p, 1e-3, 6)?);
    }

    println!("\n{:>8} {:>14} {:>14} {:>14} {:>14}", "x", "F20", "F11", "F21", "G20");
    for x in [0.01, 0.1, 0.5, 1.0, 2.0, 10.0] {
        println!(
            "{x:>8} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            f_value(AuxIndex::F20, &p, x)?,
            f_value(AuxIndex::F11, &p, x)?,
            f_value(AuxIndex::F21, &p, x)?,
            g_value(AuxIndex::F20, &p, x)?
        );
    }

    let d = decompose(AuxIndex::F21, &p, 0.5)?;
    println!("\nF21(0.5) from the decomposition: {:.15} (a = {:.6e}, b = {:.6e})", d.value, d.a_l, d.b_l);
    println!("F21(0.5) by quadrature:          {:.15}", f_value(AuxIndex::F21, &p, 0.5)?);

    let xs: Vec<f64> = (0..24).map(|i| 10f64.powf(1.0 + i as f64 / 8.0)).collect();
    let probe = derivative_bound_probe(AuxIndex::F20, &p, 1, &xs)?;
    println!("\nx^(1+2λ) |F20'(x)| decade sups: {:?}", probe.decade_sups);
    println!("saturating: {}", probe.saturating());

    let table = FTable::new(&p)?;
    let x = 0.7312;
    println!(
        "\ntable vs direct at x = {x}: {:.3e}",
        (table.eval(AuxIndex::F11, x)? - f_value(AuxIndex::F11, &p, x)?).abs()
    );
    Ok(())
}
