//! Heat kernel of `Δ_λ` and the kernel of `Δ_λ^{-1/2}` in closed and subordinated form.

use std::f64::consts::PI;

use super::symbols::symbol_h;
use super::{reject_coincident, HalfSpacePoint, Kernel};
use crate::aux_fn::{default_quad, weighted_t_integral};
use crate::error::{Error, Result};
use crate::quad::Adaptive;
use crate::special_fn::{model_constants_with, Normalization, ModelConstants, ModelParams};

/// Default underflow cutoff: the kernel is reported as 0 once its log-prefactor drops below `-700`.
pub const DEFAULT_CUTOFF: f64 = 700.0;

/// `∫_0^2 e^{-c t} (2t - t²)^{λ-1} dt`, the angular integral after `t = 1 - cos θ`.
fn angular_integral(q: &Adaptive, lambda: f64, c: f64) -> Result<f64> {
    let hints: Vec<f64> = if c > 1.0 { vec![1.0 / c] } else { Vec::new() };
    Ok(q
        .integrate_endpoint_powers(0.0, 2.0, lambda - 1.0, lambda - 1.0, &hints, |t, _, _| {
            (-c * t).exp()
        })?
        .value)
}

/// Kernel of `e^{-s² Δ_λ}` with respect to `m_λ`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    params: ModelParams,
    consts: ModelConstants,
    s: f64,
    cutoff: f64,
    quad: Adaptive,
}

impl HeatKernel {
    pub fn new(p: &ModelParams, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("heat time s must be positive, got {s}")));
        }
        Ok(Self {
            params: *p,
            consts: model_constants_with(p, Normalization::Spectral)?,
            s,
            cutoff: DEFAULT_CUTOFF,
            quad: default_quad(),
        })
    }

    /// Values whose log-prefactor is below `-cutoff` are returned as 0 without quadrature.
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_quadrature(mut self, quad: Adaptive) -> Self {
        self.quad = quad;
        self
    }

    pub fn with_normalization(mut self, norm: Normalization) -> Self {
        self.consts = model_constants_with(&self.params, norm).expect("params validated in new");
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }
}

impl Kernel for HeatKernel {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        let p = &self.params;
        if x.dim() != p.dim() || y.dim() != p.dim() {
            return Err(Error::Domain(format!(
                "heat kernel expects points of dimension {}",
                p.dim()
            )));
        }
        let s = self.s;
        let s2 = s * s;
        let log_pref = self.consts.kappa_lambda.ln()
            - (2.0 * p.lambda + 1.0 + p.n as f64) * s.ln()
            - x.dist2(y) / (4.0 * s2);
        if log_pref < -self.cutoff {
            return Ok(0.0);
        }
        let c = x.last() * y.last() / (2.0 * s2);
        Ok(log_pref.exp() * angular_integral(&self.quad, p.lambda, c)?)
    }

    fn singular_on_diagonal(&self) -> bool {
        false
    }
}

/// Kernel of `e^{-s² Δ_λ}` at `(x, y)` with respect to `m_λ`.
pub fn heat_kernel(p: &ModelParams, s: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    HeatKernel::new(p, s)?.eval(x, y)
}

/// Kernel of `Δ_λ^{-1/2}` by direct quadrature of the `t`-integral.
pub fn invsqrt_kernel_closed(p: &ModelParams, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    InvSqrtKernel::new(p)?.eval(x, y)
}

/// Kernel of `Δ_λ^{-1/2}` as `(2/√π) ∫_0^∞` of the heat kernel in `s`.
///
/// The `s`-integral is split at `s = |x - y|`; the tail uses `s = |x - y|/u`.
pub fn invsqrt_kernel_subordination(
    p: &ModelParams,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<f64> {
    p.validate()?;
    reject_coincident(x, y)?;
    let consts = model_constants_with(p, Normalization::Spectral)?;
    let inner = default_quad();
    let outer = Adaptive::new(1e-300, 1e-11);
    let r = x.dist(y);
    let xy = x.last() * y.last();
    let d2 = r * r;
    let expo = 2.0 * p.lambda + 1.0 + p.n as f64;
    let heat = |s: f64| -> Result<f64> {
        let log_pref = consts.kappa_lambda.ln() - expo * s.ln() - d2 / (4.0 * s * s);
        if log_pref < -DEFAULT_CUTOFF {
            return Ok(0.0);
        }
        Ok(log_pref.exp() * angular_integral(&inner, p.lambda, xy / (2.0 * s * s))?)
    };
    let mut failure = None;
    let mut guarded = |s: f64| match heat(s) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let near = outer.integrate(0.0, r, |s| if s > 0.0 { guarded(s) } else { 0.0 })?;
    let far = outer.integrate(0.0, 1.0, |u| {
        if u > 0.0 {
            guarded(r / u) * r / (u * u)
        } else {
            0.0
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(2.0 / PI.sqrt() * (near.value + far.value))
}

/// Kernel of `Δ_λ^{-1/2}` with respect to `m_λ`, closed form.
#[derive(Debug, Clone)]
pub struct InvSqrtKernel {
    params: ModelParams,
    kappa1: f64,
    quad: Adaptive,
}

impl InvSqrtKernel {
    pub fn new(p: &ModelParams) -> Result<Self> {
        Ok(Self {
            params: *p,
            kappa1: model_constants_with(p, Normalization::Spectral)?.kappa1,
            quad: default_quad(),
        })
    }

    pub fn with_normalization(mut self, norm: Normalization) -> Self {
        self.kappa1 = model_constants_with(&self.params, norm)
            .expect("params validated in new")
            .kappa1;
        self
    }
}

impl Kernel for InvSqrtKernel {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        reject_coincident(x, y)?;
        let p = &self.params;
        let e = p.lambda + 0.5 * p.n as f64;
        // Q_t = x_{n+1} y_{n+1} (H² + 2t)
        let h = symbol_h(x, y);
        let integral = weighted_t_integral(&self.quad, p.lambda, h * h, e, 0)?;
        Ok(self.kappa1 * (x.last() * y.last()).powf(-e) * integral.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::pt;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn angular_integral_oracles() {
        let q = default_quad();
        // λ = 1: ∫_0^2 e^{-ct} dt
        for c in [0.0f64, 0.3, 7.0, 300.0] {
            let expect = if c == 0.0 { 2.0 } else { (1.0 - (-2.0 * c).exp()) / c };
            assert!(rel(angular_integral(&q, 1.0, c).unwrap(), expect) < 1e-13, "c = {c}");
        }
        // λ = 1/2: ∫_0^π e^{-c(1-cos θ)} dθ = π e^{-c} I_0(c); I_0(1) = 1.2660658777520084
        let v = angular_integral(&q, 0.5, 1.0).unwrap();
        assert!(rel(v, PI * (-1f64).exp() * 1.266_065_877_752_008_4) < 1e-13);
    }

    #[test]
    fn heat_symmetric_and_positive() {
        let p = ModelParams::new(2, 0.6, 1).unwrap();
        let x = pt(&[0.1, 0.3, 0.9]);
        let y = pt(&[-0.2, 0.5, 1.4]);
        for s in [0.05, 0.3, 1.0, 4.0] {
            let a = heat_kernel(&p, s, &x, &y).unwrap();
            let b = heat_kernel(&p, s, &y, &x).unwrap();
            assert!(a >= 0.0);
            assert!((a - b).abs() <= 1e-14 * a.abs());
        }
        assert!(heat_kernel(&p, 0.3, &x, &y).unwrap() > 0.0);
        assert!(heat_kernel(&p, 0.0, &x, &y).is_err());
    }

    #[test]
    fn heat_conserves_mass() {
        // ∫ K_s(x, y) y_2^{2λ} dy over a box that grows with the Gaussian width.
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let s = 0.1;
        let x = pt(&[0.2, 0.5]);
        let k = HeatKernel::new(&p, s).unwrap();
        let q = Adaptive::new(1e-14, 1e-9);
        let mass = |half: f64| {
            q.integrate((0.5 - half).max(0.0), 0.5 + half, |y2| {
                if y2 <= 0.0 {
                    return 0.0;
                }
                q.integrate(0.2 - half, 0.2 + half, |y1| {
                    k.eval(&x, &pt(&[y1, y2])).unwrap()
                })
                .unwrap()
                .value
                    * y2 * y2
            })
            .unwrap()
            .value
        };
        let small = mass(0.2);
        let large = mass(1.2);
        assert!((large - 1.0).abs() < 1e-7, "mass {large}");
        assert!((small - 1.0).abs() > (large - 1.0).abs());
    }

    #[test]
    fn invsqrt_anchor_value() {
        // n = 1, λ = 1: ∫_0^2 (H² + 2t)^{-3/2} dt = (H^{-1} - (H² + 4)^{-1/2}) with H² = 1/2,
        // times κ1 (x y)^{-3/2}, κ1 = Γ(3/2)/π^{3/2} = 1/(2π).
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.0, 1.0]);
        let y = pt(&[0.0, 2.0]);
        let h2: f64 = 0.5;
        let expect = (h2.powf(-0.5) - (h2 + 4.0).powf(-0.5)) * 2f64.powf(-1.5) / (2.0 * PI);
        let v = invsqrt_kernel_closed(&p, &x, &y).unwrap();
        assert!(rel(v, expect) < 1e-13, "{v} vs {expect}");
        // which simplifies to κ1/3 = 1/(6π)
        assert!((v - 1.0 / (6.0 * PI)).abs() < 1e-15, "{v}");
    }

    #[test]
    fn invsqrt_closed_matches_subordination() {
        for lambda in [0.5, 1.0, 1.5] {
            for n in [1usize, 2] {
                let p = ModelParams::new(n, lambda, 1).unwrap();
                let (x, y) = if n == 1 {
                    (pt(&[0.0, 1.0]), pt(&[0.4, 1.7]))
                } else {
                    (pt(&[0.0, 0.1, 1.0]), pt(&[0.4, -0.3, 1.7]))
                };
                let a = invsqrt_kernel_closed(&p, &x, &y).unwrap();
                let b = invsqrt_kernel_subordination(&p, &x, &y).unwrap();
                assert!(rel(a, b) < 1e-9, "n={n} λ={lambda}: {a} vs {b}");
                let c = invsqrt_kernel_closed(&p, &y, &x).unwrap();
                assert!(rel(a, c) < 1e-14);
            }
        }
    }

    #[test]
    fn printed_constants_break_the_representations_apart() {
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.0, 1.0]);
        let y = pt(&[0.4, 1.7]);
        let spectral = InvSqrtKernel::new(&p).unwrap().eval(&x, &y).unwrap();
        let printed = InvSqrtKernel::new(&p)
            .unwrap()
            .with_normalization(Normalization::Printed)
            .eval(&x, &y)
            .unwrap();
        // printed κ1 = 1 against 1/(2π)
        assert!(rel(printed / spectral, 2.0 * PI) < 1e-13);
        let h = HeatKernel::new(&p, 0.3).unwrap();
        let hp = h.clone().with_normalization(Normalization::Printed);
        // printed heat mass Γ(3/2) (4π)^{1/2} = π
        assert!(rel(hp.eval(&x, &y).unwrap() / h.eval(&x, &y).unwrap(), PI) < 1e-13);
    }

    #[test]
    fn invsqrt_rejects_coincident() {
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let x = pt(&[0.0, 1.0]);
        assert!(invsqrt_kernel_closed(&p, &x, &x).is_err());
        assert!(invsqrt_kernel_subordination(&p, &x, &x).is_err());
    }
}
