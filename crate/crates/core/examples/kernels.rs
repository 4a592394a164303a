//! Kernel representations: the inverse square root three ways, the Bessel-Riesz kernel
//! against the classical one, and the commutator kernel in Schur-multiplier form.

use std::sync::Arc;

use brsl::aux_fn::FTable;
use brsl::kernels::{
    invsqrt_kernel_closed, invsqrt_kernel_subordination, riesz_kernel_classical, spectral_kernel, BesselRiesz,
    Commutator, HalfSpacePoint, Kernel, SchurFormCommutator, RadialProfile, SpectralOptions,
};
use brsl::special_fn::ModelParams;
use brsl::symbol::Symbol;

fn main() -> brsl::Result<()> {
    let p = ModelParams::new(1, 1.0, 2)?;
    let x = HalfSpacePoint::new(vec![0.0, 1.0])?;
    let y = HalfSpacePoint::new(vec![0.6, 1.5])?;

    let closed = invsqrt_kernel_closed(&p, &x, &y)?;
    let sub = invsqrt_kernel_subordination(&p, &x, &y)?;
    let spec = spectral_kernel(&p, RadialProfile::InverseRadius, &x, &y, &SpectralOptions::default())?;
    println!("Δ_λ^(-1/2) kernel: closed {closed:.10e}, subordination {sub:.10e}, spectral {:.10e}", spec.value);

    let table = Arc::new(FTable::new(&p)?);
    let riesz = BesselRiesz::with_table(table.clone());
    println!("\nBessel-Riesz vs classical Riesz kernel as the pair closes in");
    for delta in [0.5, 0.1, 0.01, 0.001] {
        let y = HalfSpacePoint::new(vec![delta * 0.6, 1.0 + delta * 0.8])?;
        let bessel = riesz.eval(&x, &y)?;
        let classical = riesz_kernel_classical(p.n, p.k, x.coords(), y.coords())?;
        println!("  δ = {delta:<6} ratio {:.8}", bessel / classical);
    }

    let f = Symbol::gaussian(vec![0.2, 1.2], 0.4);
    let lhs = Commutator::new(&riesz, f.clone());
    let rhs = SchurFormCommutator::new(table, f);
    let (a, b) = (lhs.eval(&x, &y)?, rhs.eval(&x, &y)?);
    println!("\ncommutator kernel {a:.15e}\nSchur form        {b:.15e}");
    Ok(())
}
