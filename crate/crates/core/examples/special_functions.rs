//! Bessel functions, the normalised eigenfunctions `φ_λ`, `ψ_λ` and the model constants.

use brsl::special_fn::{bessel_j, gamma, model_constants, model_constants_with, phi_lambda, psi_lambda, ModelParams, Normalization};

fn main() -> brsl::Result<()> {
    println!("{:>8} {:>22} {:>22}", "x", "J_1/2(x)", "sqrt(2/(pi x)) sin x");
    for x in [1e-3, 0.5, 3.0, 12.0, 40.0, 100.0] {
        let closed = (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin();
        println!("{x:>8} {:>22.15e} {closed:>22.15e}", bessel_j(0.5, x)?);
    }

    println!("\nJ_nu(5) for a few orders");
    for nu in [0.0, 0.25, 1.0, 2.5, 7.0] {
        println!("  nu = {nu:<5} {:.15}", bessel_j(nu, 5.0)?);
    }

    let lambda = 1.0;
    println!("\nphi_λ(ξ) and ψ_λ(t) at λ = {lambda}");
    for t in [0.0, 0.5, 2.0, 10.0] {
        println!("  {t:>5}: {:>12.8} {:>12.8}", phi_lambda(lambda, t)?, psi_lambda(lambda, t)?);
    }
    println!("Γ(4.5) = {}", gamma(4.5));

    let p = ModelParams::new(1, 1.0, 2)?;
    println!("\nprinted constants:  {:?}", model_constants(&p)?);
    println!("spectral constants: {:?}", model_constants_with(&p, Normalization::Spectral)?);
    Ok(())
}
