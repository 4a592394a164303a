//! Hilbert-Schmidt norm of `M_f e^{-s²Δ_λ}` from the assembled matrix against the quadrature of
//! its trace formula, at a few grid sizes.

use brsl::verify::hs_identity_gap;

fn main() -> brsl::Result<()> {
    for m in [16, 24, 32] {
        let (fro2, exact, err) = hs_identity_gap(m)?;
        println!("{m:>3}²: ‖A‖_F² = {fro2:.8}  trace = {exact:.8}  relative error {err:.2e}");
    }
    Ok(())
}
