//! Kernels of `g(√Δ_λ)` from the Fourier and Fourier–Bessel transforms, and the
//! Hilbert–Schmidt trace of `M_f g(√Δ_λ)`.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::Serialize;

use super::HalfSpacePoint;
use crate::error::{Error, Result};
use crate::quad::Adaptive;
use crate::special_fn::{bessel_k0, phi_lambda, psi_lambda, ModelParams};

/// Radial profile `g(|z|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialProfile {
    /// `g(r) = exp(-σ² r²)`, so that `g(√Δ_λ) = e^{-σ² Δ_λ}`.
    Gaussian { sigma: f64 },
    /// `g(r) = 1/r`, so that `g(√Δ_λ) = Δ_λ^{-1/2}`. Only `n = 1` with `x_1 ≠ y_1`.
    InverseRadius,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Relative tolerance for both the quadrature and the truncation of `z_{n+1}`.
    pub rel_tol: f64,
    /// Cutoff doublings allowed before giving up.
    pub max_doublings: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            max_doublings: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralValue {
    pub value: f64,
    /// Change of the value under the last doubling of the cutoff.
    pub truncation_error: f64,
    pub cutoff: f64,
}

/// `∫_0^Z w(z) φ_λ(a z) φ_λ(b z) z^{2λ} dz` on `[0, cutoff]`, doubling the cutoff until the
/// added piece is below tolerance. `w` carries the transverse (`z'`) factor.
fn truncated_last_axis(
    p: &ModelParams,
    a: f64,
    b: f64,
    cutoff: f64,
    opts: &SpectralOptions,
    w: impl Fn(f64) -> f64,
) -> Result<SpectralValue> {
    let q = Adaptive::new(1e-300, 0.1 * opts.rel_tol).with_max_segments(20_000);
    let lambda = p.lambda;
    let failure = RefCell::new(None);
    let mut integrand = |z: f64| -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let v = phi_lambda(lambda, a * z).and_then(|pa| Ok(pa * phi_lambda(lambda, b * z)?));
        match v {
            Ok(v) => w(z) * v * z.powf(2.0 * lambda),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    // breakpoints at the fast oscillation period of φ(az)φ(bz)
    let period = 2.0 * PI / (a + b);
    let piece = |lo: f64, hi: f64, f: &mut dyn FnMut(f64) -> f64| -> Result<f64> {
        let count = ((hi - lo) / period).ceil().min(4000.0) as usize;
        let breaks: Vec<f64> = (1..count)
            .map(|i| lo + (hi - lo) * i as f64 / count as f64)
            .collect();
        Ok(q.integrate_with_breaks(lo, hi, &breaks, f)?.value)
    };
    let mut total = piece(0.0, cutoff, &mut integrand)?;
    let mut z = cutoff;
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        let added = piece(z, 2.0 * z, &mut integrand)?;
        last_change = added.abs();
        total += added;
        z *= 2.0;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        if added.abs() <= opts.rel_tol * total.abs() {
            return Ok(SpectralValue {
                value: total,
                truncation_error: added.abs(),
                cutoff: z,
            });
        }
    }
    Err(Error::Truncation {
        change: last_change / total.abs(),
        tolerance: opts.rel_tol,
    })
}

/// Kernel of `g(√Δ_λ)` with respect to `m_λ` at `(x, y)`.
///
/// The `z'` integral is done in closed form (Gaussian) or reduced to `2 K_0(z|x_1 - y_1|)`
/// (`1/r`, `n = 1`); the remaining `z_{n+1}` integral is truncated with certified doubling.
pub fn spectral_kernel(
    p: &ModelParams,
    g: RadialProfile,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
    opts: &SpectralOptions,
) -> Result<SpectralValue> {
    p.validate()?;
    if x.dim() != p.dim() || y.dim() != p.dim() {
        return Err(Error::Domain(format!(
            "spectral kernel expects points of dimension {}",
            p.dim()
        )));
    }
    let n = p.n;
    let (a, b) = (x.last(), y.last());
    let d2: f64 = (1..=n).map(|m| x.diff(y, m).powi(2)).sum();
    match g {
        RadialProfile::Gaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::Domain(format!("gaussian sigma must be positive, got {sigma}")));
            }
            let s2 = sigma * sigma;
            let transverse = (2.0 * PI).powi(-(n as i32))
                * (PI / s2).powf(0.5 * n as f64)
                * (-d2 / (4.0 * s2)).exp();
            let v = truncated_last_axis(p, a, b, 6.5 / sigma, opts, |z| (-s2 * z * z).exp())?;
            Ok(SpectralValue {
                value: transverse * v.value,
                truncation_error: transverse * v.truncation_error,
                cutoff: v.cutoff,
            })
        }
        RadialProfile::InverseRadius => {
            if n != 1 {
                return Err(Error::Unsupported(format!(
                    "the 1/r spectral kernel is implemented for n = 1 only, got n = {n}"
                )));
            }
            let d = d2.sqrt();
            if d == 0.0 {
                return Err(Error::Unsupported(
                    "the 1/r spectral kernel needs x_1 != y_1".into(),
                ));
            }
            // ∫_R e^{i z_1 d} (z_1² + z_2²)^{-1/2} dz_1 = 2 K_0(z_2 |d|); K_0 < e^{-36} past 36/|d|
            let v = truncated_last_axis(p, a, b, 36.0 / d, opts, |z| {
                2.0 * bessel_k0(z * d).unwrap_or(0.0)
            })?;
            let c = 1.0 / (2.0 * PI);
            Ok(SpectralValue {
                value: c * v.value,
                truncation_error: c * v.truncation_error,
                cutoff: v.cutoff,
            })
        }
    }
}

/// `(2π)^{-n} ∫∫ |f(x)|² ψ_λ²(x_{n+1} z_{n+1}) |g(|z|)|² dz dx` for
/// `f = A exp(-|x - c|²/(2w²))` and `g(r) = exp(-s² r²)`: the squared Hilbert–Schmidt norm of
/// `M_f e^{-s² Δ_λ}`.
///
/// Both transverse integrals are Gaussian; the two half-line integrals are done numerically.
pub fn hs_trace_gaussian(
    p: &ModelParams,
    center: &[f64],
    width: f64,
    amplitude: f64,
    s: f64,
) -> Result<f64> {
    p.validate()?;
    if center.len() != p.dim() || !(width > 0.0) || !(s > 0.0) {
        return Err(Error::Domain(
            "hs trace needs a center in dimension n+1 and positive width and s".into(),
        ));
    }
    let n = p.n as f64;
    let c = center[p.n];
    let lambda = p.lambda;
    let pref = (2.0 * PI).powf(-n)
        * (PI / (2.0 * s * s)).powf(0.5 * n)
        * (PI * width * width).powf(0.5 * n)
        * amplitude
        * amplitude;
    let inner_q = Adaptive::new(1e-300, 1e-11).with_max_segments(20_000);
    let outer_q = Adaptive::new(1e-300, 1e-10);
    let z_max = 6.5 / (2f64.sqrt() * s);
    let mut failure = None;
    let mut inner = |x: f64| -> f64 {
        let period = PI / x;
        let count = (z_max / period).ceil().min(4000.0) as usize;
        let breaks: Vec<f64> = (1..count).map(|i| z_max * i as f64 / count as f64).collect();
        let r = inner_q.integrate_with_breaks(0.0, z_max, &breaks, |z| match psi_lambda(lambda, x * z) {
            Ok(v) => v * v * (-2.0 * s * s * z * z).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        });
        match r {
            Ok(e) => e.value,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let lo = (c - 8.0 * width).max(0.0);
    let hi = c + 8.0 * width;
    let total = outer_q.integrate(lo, hi, |x| {
        if x <= 0.0 {
            return 0.0;
        }
        let g = ((x - c) / width).powi(2);
        (-g).exp() * inner(x)
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(pref * total.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::heat::heat_kernel;
    use crate::kernels::invsqrt_kernel_closed;
    use crate::kernels::pt;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gaussian_profile_is_heat_kernel() {
        for (n, lambda) in [(1usize, 1.0), (1, 0.5), (2, 1.5)] {
            let p = ModelParams::new(n, lambda, 1).unwrap();
            let (x, y) = if n == 1 {
                (pt(&[0.0, 0.8]), pt(&[0.3, 1.1]))
            } else {
                (pt(&[0.0, 0.1, 0.8]), pt(&[0.3, -0.1, 1.1]))
            };
            let s = 0.4;
            let opts = SpectralOptions::default();
            let v = spectral_kernel(&p, RadialProfile::Gaussian { sigma: s }, &x, &y, &opts).unwrap();
            let h = heat_kernel(&p, s, &x, &y).unwrap();
            assert!(rel(v.value, h) < 1e-8, "n={n} λ={lambda}: {} vs {h}", v.value);
            let w = spectral_kernel(&p, RadialProfile::Gaussian { sigma: s }, &y, &x, &opts).unwrap();
            assert!(rel(w.value, v.value) < 1e-12);
            // diagonal
            let dv = spectral_kernel(&p, RadialProfile::Gaussian { sigma: s }, &x, &x, &opts).unwrap();
            assert!(rel(dv.value, heat_kernel(&p, s, &x, &x).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn inverse_radius_matches_closed_form() {
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.0, 1.0]);
        let y = pt(&[0.5, 1.4]);
        let v = spectral_kernel(&p, RadialProfile::InverseRadius, &x, &y, &SpectralOptions::default())
            .unwrap();
        let c = invsqrt_kernel_closed(&p, &x, &y).unwrap();
        assert!(rel(v.value, c) < 1e-6, "{} vs {c}", v.value);
    }

    #[test]
    fn inverse_radius_limits() {
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.0, 1.0]);
        let y = pt(&[0.0, 1.4]);
        let opts = SpectralOptions::default();
        assert!(matches!(
            spectral_kernel(&p, RadialProfile::InverseRadius, &x, &y, &opts),
            Err(Error::Unsupported(_))
        ));
        let p2 = ModelParams::new(2, 1.0, 1).unwrap();
        let x2 = pt(&[0.0, 0.0, 1.0]);
        let y2 = pt(&[0.3, 0.0, 1.0]);
        assert!(spectral_kernel(&p2, RadialProfile::InverseRadius, &x2, &y2, &opts).is_err());
    }

    #[test]
    fn hs_trace_matches_semigroup_diagonal() {
        // |e^{-s²Δ}|² = e^{-2s²Δ}, so the trace is ∫ |f|² K_{√2 s}(x, x) dm_λ(x).
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let (c, w, s) = ([0.0, 1.5], 0.3, 0.1);
        let t = hs_trace_gaussian(&p, &c, w, 1.0, s).unwrap();
        let q = Adaptive::new(1e-300, 1e-10);
        let x1_part = (PI * w * w).sqrt();
        let diag = q
            .integrate((c[1] - 8.0 * w).max(1e-9), c[1] + 8.0 * w, |x2| {
                let k = heat_kernel(&p, 2f64.sqrt() * s, &pt(&[0.0, x2]), &pt(&[0.0, x2])).unwrap();
                (-((x2 - c[1]) / w).powi(2)).exp() * k * x2 * x2
            })
            .unwrap()
            .value
            * x1_part;
        assert!(rel(t, diag) < 1e-8, "{t} vs {diag}");
    }
}
