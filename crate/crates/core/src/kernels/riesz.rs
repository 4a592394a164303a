//! Bessel–Riesz kernel `R_{λ,k} = ∂_k Δ_λ^{-1/2}` and the classical Riesz kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use super::symbols::{symbol_a, symbol_b, symbol_h};
use super::{reject_coincident, HalfSpacePoint, Kernel};
use crate::aux_fn::{f_value, AuxIndex, FTable};
use crate::error::{Error, Result};
use crate::quad::Adaptive;
use crate::sobolev::SphereRule;
use crate::special_fn::{bessel_j, gamma, model_constants_with, Normalization, ModelConstants, ModelParams};

/// `ω_n = Γ((n+2)/2) / π^{(n+2)/2}`
pub fn omega(n: usize) -> f64 {
    let e = 0.5 * (n as f64 + 2.0);
    gamma(e) / PI.powf(e)
}

/// The kernel from `[F_{2,0}, F_{1,1}, F_{2,1}]` evaluated at `H(x, y)`.
fn assemble(
    p: &ModelParams,
    kappa2: f64,
    f: [f64; 3],
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> f64 {
    let d = p.dim();
    let r = x.dist(y);
    // K_l = (x - y)_l · base
    let base = 1.0 / (r.powi(p.n as i32 + 2) * (x.last() * y.last()).powf(p.lambda));
    let k = p.k;
    let mut v = f[0] * x.diff(y, k) * base;
    if k == d {
        let a = symbol_a(x, y);
        let b = symbol_b(x, y);
        let h_last = x.diff(y, d) / r;
        let mut sum = 0.0;
        for l in 1..=d {
            let diff = x.diff(y, l);
            let h_l = diff / r;
            let k_l = diff * base;
            sum += a * h_l * f[1] * k_l - b * h_last * h_l * f[2] * k_l;
        }
        v += sum;
    }
    -kappa2 * v
}

/// Kernel of `R_{λ,k}` with respect to `m_λ`, evaluating `F_{k,l}` by direct quadrature.
pub fn riesz_kernel_bessel(p: &ModelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    p.validate()?;
    reject_coincident(x, y)?;
    let h = symbol_h(x, y);
    let f = [
        f_value(AuxIndex::F20, p, h)?,
        f_value(AuxIndex::F11, p, h)?,
        f_value(AuxIndex::F21, p, h)?,
    ];
    Ok(assemble(p, model_constants_with(p, Normalization::Spectral)?.kappa2, f, x, y))
}

/// Kernel of `R_{λ,k}` with `F_{k,l}` read from a shared [`FTable`].
#[derive(Debug, Clone)]
pub struct BesselRiesz {
    params: ModelParams,
    consts: ModelConstants,
    table: Arc<FTable>,
}

impl BesselRiesz {
    pub fn new(p: &ModelParams) -> Result<Self> {
        Ok(Self::with_table(Arc::new(FTable::new(p)?)))
    }

    pub fn with_table(table: Arc<FTable>) -> Self {
        let params = *table.params();
        Self {
            params,
            consts: model_constants_with(&params, Normalization::Spectral).expect("table params are validated"),
            table,
        }
    }

    pub fn with_normalization(mut self, norm: Normalization) -> Self {
        self.consts = model_constants_with(&self.params, norm).expect("table params are validated");
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.consts
    }

    pub fn table(&self) -> &Arc<FTable> {
        &self.table
    }
}

impl Kernel for BesselRiesz {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        reject_coincident(x, y)?;
        let h = symbol_h(x, y);
        let f = if self.params.k == self.params.dim() {
            self.table.eval_all(h)?
        } else {
            [self.table.eval(AuxIndex::F20, h)?, 0.0, 0.0]
        };
        Ok(assemble(&self.params, self.consts.kappa2, f, x, y))
    }
}

/// `ω_n (y - x)_l / |x - y|^{n+2}` on `R^{n+1}` (Lebesgue measure), `l` 1-based.
pub fn riesz_kernel_classical(n: usize, l: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != n + 1 || y.len() != n + 1 {
        return Err(Error::Domain(format!("classical Riesz kernel expects points in R^{}", n + 1)));
    }
    if l < 1 || l > n + 1 {
        return Err(Error::Domain(format!("index {l} outside 1..={}", n + 1)));
    }
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(omega(n) * (y[l - 1] - x[l - 1]) / r2.sqrt().powi(n as i32 + 2))
}

/// Classical `R_l` kernel as a [`Kernel`] (with respect to Lebesgue measure).
#[derive(Debug, Clone, Copy)]
pub struct ClassicalRiesz {
    pub n: usize,
    pub l: usize,
}

impl Kernel for ClassicalRiesz {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        riesz_kernel_classical(self.n, self.l, x.coords(), y.coords())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaCheckRow {
    pub x: Vec<f64>,
    pub l: usize,
    pub kernel_side: f64,
    pub fourier_side: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaCheck {
    pub n: usize,
    pub omega: f64,
    pub rows: Vec<OmegaCheckRow>,
    pub max_rel_err: f64,
}

/// `R_l u(x)` for `u(y) = exp(-|y|²/2)` from the multiplier `i ξ_l / |ξ|`:
/// `-(x_l/r) r^{1-d/2} ∫_0^∞ e^{-ρ²/2} ρ^{d/2} J_{d/2}(ρ r) dρ`, `d = n + 1`.
fn riesz_gaussian_fourier(n: usize, l: usize, x: &[f64]) -> Result<f64> {
    let d = (n + 1) as f64;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let q = Adaptive::new(1e-300, 1e-12);
    let mut failure = None;
    let integral = q.integrate(0.0, 13.0, |rho| match bessel_j(0.5 * d, rho * r) {
        Ok(j) => (-0.5 * rho * rho).exp() * rho.powf(0.5 * d) * j,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(-(x[l - 1] / r) * r.powf(1.0 - 0.5 * d) * integral.value)
}

/// The same quantity from the kernel in polar coordinates around `x`:
/// `(ω_n / 2) ∫_{S^n} θ_l ∫_0^∞ (u(x + ρθ) - u(x - ρθ)) / ρ dρ dθ`.
fn riesz_gaussian_kernel_side(n: usize, l: usize, x: &[f64], sphere: &SphereRule) -> Result<f64> {
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let q = Adaptive::new(1e-300, 1e-12);
    // ∫_0^∞ e^{-ρ²/2} (e^{-ρ t} - e^{ρ t}) / ρ dρ = -2 ∫_0^∞ e^{-ρ²/2} sinh(ρ t)/ρ dρ
    let radial = |t: f64| -> Result<f64> {
        let top = t.abs() + 13.0;
        Ok(-2.0
            * q.integrate(0.0, top, |rho| {
                if rho == 0.0 {
                    t
                } else {
                    (-0.5 * rho * rho).exp() * (rho * t).sinh() / rho
                }
            })?
            .value)
    };
    let mut acc = 0.0;
    for (s, w) in sphere.nodes().iter().zip(sphere.weights()) {
        let t: f64 = s.iter().zip(x).map(|(a, b)| a * b).sum();
        acc += w * s[l - 1] * radial(t)?;
    }
    Ok(0.5 * omega(n) * (-0.5 * x2).exp() * acc)
}

/// Checks `ω_n` by applying the classical kernel to a centred Gaussian (in polar
/// coordinates) and comparing with the Fourier-multiplier definition of `R_l`.
pub fn omega_fourier_check(n: usize, points: &[Vec<f64>]) -> Result<OmegaCheck> {
    let sphere = SphereRule::for_n(n)?;
    let mut rows = Vec::new();
    for x in points {
        if x.len() != n + 1 || x.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain(format!("omega check needs nonzero points in R^{}", n + 1)));
        }
        for l in 1..=n + 1 {
            if x[l - 1] == 0.0 {
                continue;
            }
            let kernel_side = riesz_gaussian_kernel_side(n, l, x, &sphere)?;
            let fourier_side = riesz_gaussian_fourier(n, l, x)?;
            rows.push(OmegaCheckRow {
                x: x.clone(),
                l,
                kernel_side,
                fourier_side,
                rel_err: (kernel_side - fourier_side).abs() / fourier_side.abs(),
            });
        }
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(OmegaCheck {
        n,
        omega: omega(n),
        rows,
        max_rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heat::invsqrt_kernel_closed;
    use crate::kernels::pt;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn omega_matches_model_constants() {
        for n in 1..4 {
            let p = ModelParams::new(n, 1.0, 1).unwrap();
            assert!(rel(omega(n), model_constants_with(&p, Normalization::Spectral).unwrap().omega_n) < 1e-15);
        }
        // d = 2: 1/(2π); d = 3: 1/π²
        assert!(rel(omega(1), 0.5 / PI) < 1e-15);
        assert!(rel(omega(2), 1.0 / (PI * PI)) < 1e-15);
    }

    #[test]
    fn omega_fourier_oracle() {
        let pts1 = vec![vec![0.3, 0.2], vec![1.0, -0.5], vec![-1.5, 1.2]];
        let c1 = omega_fourier_check(1, &pts1).unwrap();
        assert!(c1.max_rel_err < 1e-8, "{c1:?}");
        let pts2 = vec![vec![0.3, 0.2, -0.4], vec![1.0, -0.5, 0.7]];
        let c2 = omega_fourier_check(2, &pts2).unwrap();
        assert!(c2.max_rel_err < 1e-8, "{c2:?}");
    }

    #[test]
    fn classical_kernel_basics() {
        assert_eq!(riesz_kernel_classical(1, 1, &[0.2, 1.0], &[0.2, 1.5]).unwrap(), 0.0);
        let a = riesz_kernel_classical(2, 3, &[0.2, 0.1, 1.0], &[0.4, -0.3, 1.5]).unwrap();
        let b = riesz_kernel_classical(2, 3, &[0.4, -0.3, 1.5], &[0.2, 0.1, 1.0]).unwrap();
        assert!((a + b).abs() < 1e-16);
        assert!(riesz_kernel_classical(1, 1, &[0.2, 1.0], &[0.2, 1.0]).is_err());
    }

    #[test]
    fn bessel_kernel_is_derivative_of_invsqrt() {
        for (n, lambda) in [(1usize, 1.0), (1, 0.5), (2, 1.5)] {
            for k in 1..=n + 1 {
                let p = ModelParams::new(n, lambda, k).unwrap();
                let (xc, y) = if n == 1 {
                    (vec![0.1, 0.9], pt(&[0.5, 1.3]))
                } else {
                    (vec![0.1, -0.2, 0.9], pt(&[0.5, 0.1, 1.3]))
                };
                let h = 1e-4;
                let mut up = xc.clone();
                up[k - 1] += h;
                let mut down = xc.clone();
                down[k - 1] -= h;
                let fd = (invsqrt_kernel_closed(&p, &pt(&up), &y).unwrap()
                    - invsqrt_kernel_closed(&p, &pt(&down), &y).unwrap())
                    / (2.0 * h);
                let direct = riesz_kernel_bessel(&p, &pt(&xc), &y).unwrap();
                assert!(rel(direct, fd) < 1e-6, "n={n} λ={lambda} k={k}: {direct} vs {fd}");
            }
        }
    }

    #[test]
    fn table_kernel_matches_direct() {
        let p = ModelParams::new(1, 1.0, 2).unwrap();
        let k = BesselRiesz::new(&p).unwrap();
        let x = pt(&[0.1, 0.9]);
        let y = pt(&[0.4, 1.6]);
        let a = k.eval(&x, &y).unwrap();
        let b = riesz_kernel_bessel(&p, &x, &y).unwrap();
        assert!(rel(a, b) < 1e-11);
    }

    #[test]
    fn horizontal_part_is_antisymmetric() {
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.1, 0.9]);
        let y = pt(&[0.4, 0.9]);
        let a = riesz_kernel_bessel(&p, &x, &y).unwrap();
        let b = riesz_kernel_bessel(&p, &y, &x).unwrap();
        assert!((a + b).abs() < 1e-13 * a.abs());
        assert!(riesz_kernel_bessel(&p, &x, &x).is_err());
    }
}
