//! Two-point kernels on the upper half-space `R^n × (0, ∞)`.
//!
//! Every operator in the crate enters through a [`Kernel`]: a pure function of a pair of
//! [`HalfSpacePoint`]s. Kernels of operators on `L_2(m_λ)` are taken with respect to
//! `dm_λ(y) = y_{n+1}^{2λ} dy`; the classical Riesz kernel is with respect to `dy`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub mod commutator;
pub mod heat;
pub mod riesz;
pub mod spectral;
pub mod symbols;

pub use commutator::{commutator_kernel, schur_form_kernel, taylor_local_check, Commutator, SchurFormCommutator, TaylorReport};
pub use heat::{heat_kernel, invsqrt_kernel_closed, invsqrt_kernel_subordination, HeatKernel, InvSqrtKernel};
pub use riesz::{riesz_kernel_bessel, riesz_kernel_classical, BesselRiesz, ClassicalRiesz};
pub use spectral::{spectral_kernel, RadialProfile, SpectralOptions, SpectralValue};
pub use symbols::{ratio_bound_check, symbol_a, symbol_b, symbol_h, symbol_hm, symbol_k, symbol_q, RatioReport, SchurSymbol};

/// A point of `R^{n+1}` with strictly positive last coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpacePoint {
    coords: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain(format!(
                "a half-space point needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in {coords:?}")));
        }
        let last = coords[coords.len() - 1];
        if !(last > 0.0) {
            return Err(Error::Domain(format!("last coordinate must be positive, got {last}")));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `x_{n+1}`
    pub fn last(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist2(&self, other: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `(x - y)_m` with `m` 1-based.
    pub fn diff(&self, other: &Self, m: usize) -> f64 {
        self.coords[m - 1] - other.coords[m - 1]
    }
}

impl TryFrom<Vec<f64>> for HalfSpacePoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

pub(crate) fn reject_coincident(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::Domain(format!(
            "points of different dimension ({} vs {})",
            x.dim(),
            y.dim()
        )));
    }
    if x.coords == y.coords {
        return Err(Error::CoincidentPoints);
    }
    Ok(())
}

/// A real two-point kernel.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64>;

    /// Whether `eval(x, x)` is undefined (the kernel blows up on the diagonal).
    fn singular_on_diagonal(&self) -> bool {
        true
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        (**self).eval(x, y)
    }
    fn singular_on_diagonal(&self) -> bool {
        (**self).singular_on_diagonal()
    }
}

impl<K: Kernel + ?Sized> Kernel for Box<K> {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        (**self).eval(x, y)
    }
    fn singular_on_diagonal(&self) -> bool {
        (**self).singular_on_diagonal()
    }
}

impl<K: Kernel + ?Sized> Kernel for Arc<K> {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        (**self).eval(x, y)
    }
    fn singular_on_diagonal(&self) -> bool {
        (**self).singular_on_diagonal()
    }
}

/// Wraps a closure as a kernel.
pub struct FnKernel<F> {
    f: F,
    singular: bool,
}

impl<F> FnKernel<F>
where
    F: Fn(&HalfSpacePoint, &HalfSpacePoint) -> Result<f64> + Send + Sync,
{
    /// A kernel that is finite on the diagonal.
    pub fn smooth(f: F) -> Self {
        Self { f, singular: false }
    }

    /// A kernel that must not be evaluated on the diagonal.
    pub fn singular(f: F) -> Self {
        Self { f, singular: true }
    }
}

impl<F> Kernel for FnKernel<F>
where
    F: Fn(&HalfSpacePoint, &HalfSpacePoint) -> Result<f64> + Send + Sync,
{
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        (self.f)(x, y)
    }
    fn singular_on_diagonal(&self) -> bool {
        self.singular
    }
}

/// The zero kernel.
pub struct ZeroKernel;

impl Kernel for ZeroKernel {
    fn eval(&self, _: &HalfSpacePoint, _: &HalfSpacePoint) -> Result<f64> {
        Ok(0.0)
    }
    fn singular_on_diagonal(&self) -> bool {
        false
    }
}

#[cfg(test)]
pub(crate) fn pt(c: &[f64]) -> HalfSpacePoint {
    HalfSpacePoint::new(c.to_vec()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_validation() {
        assert!(HalfSpacePoint::new(vec![0.0, 1.0]).is_ok());
        assert!(HalfSpacePoint::new(vec![0.0, 0.0]).is_err());
        assert!(HalfSpacePoint::new(vec![0.0, -1.0]).is_err());
        assert!(HalfSpacePoint::new(vec![f64::NAN, 1.0]).is_err());
        assert!(HalfSpacePoint::new(vec![1.0]).is_err());
    }

    #[test]
    fn coincident_rejected() {
        let x = pt(&[0.2, 1.0]);
        assert!(matches!(reject_coincident(&x, &x), Err(Error::CoincidentPoints)));
    }
}
