//! Special functions and model constants.
//!
//! - Gamma: Lanczos approximation (g = 7, nine terms) with reflection below 1/2 and
//!   exact factorials for small positive integers.
//! - Bessel `J_ν(x)` for `ν ≥ -1/2`, `x ≥ 0`, in three regimes:
//!   power series for `x ≤ 4`, Miller's backward recurrence normalised by
//!   `(x/2)^ν = Σ_k (ν+2k) Γ(ν+k)/k! J_{ν+2k}(x)` for moderate `x`, and the Hankel
//!   asymptotic expansion once `x ≥ 25 + ν²`. For half-integer orders the asymptotic
//!   series terminates and the phase is evaluated with exact multiples of `π/4`.
//! - `K_0(x)` from `∫_0^∞ e^{-x cosh t} dt` (used by the spectral kernel with `g(r) = 1/r`).
//! - `φ_λ(ξ) = ξ^{1/2-λ} J_{λ-1/2}(ξ)` and `ψ_λ(t) = t^{1/2} J_{λ-1/2}(t)`.
//!
//! The constants `κ_λ, κ^{[1]}, κ^{[2]}, κ^{[3]}` and `ω_n` are collected in
//! [`ModelConstants`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Adaptive;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const SERIES_MAX: f64 = 4.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

/// Gamma function for real arguments (poles at non-positive integers return ±∞ or NaN).
pub fn gamma(x: f64) -> f64 {
    if x.fract() == 0.0 {
        if x <= 0.0 {
            return f64::NAN;
        }
        if x <= 21.0 {
            return (1..x as u64).map(|k| k as f64).product();
        }
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Generalized binomial coefficient `x(x-1)...(x-k+1)/k!`.
pub fn gen_binomial(x: f64, k: u32) -> f64 {
    // Numerator and k! separately so integer arguments come out exact.
    let mut num = 1.0;
    let mut den = 1.0;
    for i in 0..k {
        num *= x - i as f64;
        den *= i as f64 + 1.0;
    }
    num / den
}

fn check_bessel_args(nu: f64, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    if !nu.is_finite() || nu < -0.5 {
        return Err(Error::Domain(format!("Bessel order must be >= -1/2, got {nu}")));
    }
    Ok(())
}

/// Bessel function of the first kind `J_ν(x)`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check_bessel_args(nu, x)?;
    if x == 0.0 {
        return Ok(if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(if x <= SERIES_MAX {
        x.powf(nu) * scaled_series(nu, x)
    } else if x < ASYMPTOTIC_MIN + nu * nu {
        bessel_j_miller(nu, x)
    } else {
        bessel_j_hankel(nu, x)
    })
}

/// `x^{-ν} J_ν(x)` by its power series; finite at `x = 0`.
fn scaled_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 0.5f64.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Miller's algorithm: backward recurrence from a high order, normalised by the
/// Neumann-type sum over even offsets.
pub(crate) fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    let shift = (nu + 0.5).floor();
    let base = nu - shift; // in [-1/2, 1/2)
    let target = shift as usize;
    let mut start = (1.5 * x) as usize + 40 + target;
    if start % 2 == 1 {
        start += 1;
    }

    // c_0 = Γ(base+1); c_k = (base+2k) Γ(base+k)/k!
    let half = start / 2;
    let mut coeffs = Vec::with_capacity(half + 1);
    coeffs.push(gamma(base + 1.0));
    let mut g = gamma(base + 1.0); // Γ(base+1)/1!
    for k in 1..=half {
        let kf = k as f64;
        coeffs.push((base + 2.0 * kf) * g);
        g *= (base + kf) / (kf + 1.0);
    }

    let mut upper = 0.0; // order base + i + 1
    let mut current = 1e-30; // order base + i
    let mut norm = 0.0;
    let mut result = 0.0;
    let mut i = start;
    loop {
        if i % 2 == 0 {
            norm += coeffs[i / 2] * current;
        }
        if i == target {
            result = current;
        }
        if i == 0 {
            break;
        }
        let order = base + i as f64;
        let lower = 2.0 * order / x * current - upper;
        upper = current;
        current = lower;
        i -= 1;
        if current.abs() > 1e250 {
            current *= 1e-250;
            upper *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    (0.5 * x).powf(base) * result / norm
}

/// `(cos φ, sin φ)` with `φ = (ν/2 + 1/4) π`, exact when `φ` is a multiple of `π/4`.
fn hankel_phase(nu: f64) -> (f64, f64) {
    let quarters = 4.0 * (0.5 * nu + 0.25);
    let r = quarters.round();
    if (quarters - r).abs() < 1e-14 {
        let idx = (r as i64).rem_euclid(8) as usize;
        const COS: [f64; 8] = [
            1.0,
            FRAC_1_SQRT_2,
            0.0,
            -FRAC_1_SQRT_2,
            -1.0,
            -FRAC_1_SQRT_2,
            0.0,
            FRAC_1_SQRT_2,
        ];
        const SIN: [f64; 8] = [
            0.0,
            FRAC_1_SQRT_2,
            1.0,
            FRAC_1_SQRT_2,
            0.0,
            -FRAC_1_SQRT_2,
            -1.0,
            -FRAC_1_SQRT_2,
        ];
        (COS[idx], SIN[idx])
    } else {
        let phi = (0.5 * nu + 0.25) * PI;
        (phi.cos(), phi.sin())
    }
}

pub(crate) fn bessel_j_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag == 0.0 {
            break;
        }
        if mag > prev {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 {
            break;
        }
        prev = mag;
    }
    let (cphi, sphi) = hankel_phase(nu);
    let (sx, cx) = x.sin_cos();
    let cos_w = cx * cphi + sx * sphi;
    let sin_w = sx * cphi - cx * sphi;
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

/// Modified Bessel function of the second kind `K_0(x)`, `x > 0`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_0 needs a finite positive argument, got {x}")));
    }
    // K_0(x) = e^{-x} ∫_0^∞ exp(-x (cosh t - 1)) dt, truncated where the exponent reaches 40.
    let upper = (1.0 + 40.0 / x).acosh();
    let q = Adaptive::new(0.0, 1e-14);
    let est = q.integrate(0.0, upper, |t| (-x * (t.cosh() - 1.0)).exp())?;
    Ok((-x).exp() * est.value)
}

/// `φ_λ(ξ) = ξ^{1/2-λ} J_{λ-1/2}(ξ)`, continuous at `ξ = 0`.
pub fn phi_lambda(lambda: f64, xi: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let nu = lambda - 0.5;
    check_bessel_args(nu, xi)?;
    if xi <= SERIES_MAX {
        return Ok(scaled_series(nu, xi));
    }
    Ok(xi.powf(-nu) * bessel_j(nu, xi)?)
}

/// `ψ_λ(t) = t^{1/2} J_{λ-1/2}(t) = t^λ φ_λ(t)`.
pub fn psi_lambda(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t.sqrt() * bessel_j(lambda - 0.5, t)?)
}

/// Dimension `n` (ambient dimension `n+1`), Bessel parameter `λ` and transform index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: f64,
    pub k: usize,
}

impl ModelParams {
    pub fn new(n: usize, lambda: f64, k: usize) -> Result<Self> {
        let p = Self { n, lambda, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams(format!("n must be >= 1, got {}", self.n)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda must be a finite positive number, got {}",
                self.lambda
            )));
        }
        if self.k < 1 || self.k > self.n + 1 {
            return Err(Error::InvalidParams(format!(
                "k must lie in [1, {}], got {}",
                self.n + 1,
                self.k
            )));
        }
        Ok(())
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Exponent `λ + n/2 + 1` that appears in every `F_{k,l}` integrand.
    pub fn alpha(&self) -> f64 {
        self.lambda + 0.5 * self.n as f64 + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    pub kappa_lambda: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega_n: f64,
    pub kappa3: f64,
}

/// Which values of `κ_λ` and `κ^{[1]}` to use.
///
/// `Printed` are the textbook expressions `κ_λ = Γ(λ+½)/(2^{2λ}√π Γ(λ))` and
/// `κ^{[1]} = 2^n Γ(λ+½)/(√π Γ(λ))`. They do not match the operator defined through the
/// Fourier and Fourier–Bessel transforms: the printed heat kernel has total mass
/// `Γ(λ+½)(4π)^{n/2}` instead of 1, and the printed `κ^{[1]}` differs from
/// `(4^{λ+n/2}/√π) Γ(λ+n/2) κ_λ` by the factor `√π/Γ(λ+n/2)`.
///
/// `Spectral` (the default for every kernel) uses `κ_λ = 1/(2^{2λ}(4π)^{n/2}√π Γ(λ))` and
/// `κ^{[1]} = Γ(λ+n/2)/(π^{n/2+1}Γ(λ))`, the values for which the heat kernel, the closed
/// form of `Δ_λ^{-1/2}` and the spectral kernels coincide. With them `κ^{[3]} F_{2,0}(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Printed,
    #[default]
    Spectral,
}

/// Model constants with the printed `κ_λ`, `κ^{[1]}`; see [`Normalization`].
///
/// `ω_n = Γ((n+2)/2) / π^{(n+2)/2}` normalises the classical Riesz kernel
/// `ω_n (y-x)_l / |x-y|^{n+2}` in dimension `n+1`; it is checked against the Fourier
/// multiplier `iξ_l/|ξ|` in [`crate::kernels::riesz::omega_fourier_check`].
pub fn model_constants(p: &ModelParams) -> Result<ModelConstants> {
    model_constants_with(p, Normalization::Printed)
}

pub fn model_constants_with(p: &ModelParams, norm: Normalization) -> Result<ModelConstants> {
    p.validate()?;
    let lambda = p.lambda;
    let n = p.n as f64;
    let (kappa_lambda, kappa1) = match norm {
        Normalization::Printed => {
            let gamma_ratio = (ln_gamma(lambda + 0.5) - ln_gamma(lambda)).exp();
            (
                gamma_ratio / (2f64.powf(2.0 * lambda) * PI.sqrt()),
                2f64.powf(n) / PI.sqrt() * gamma_ratio,
            )
        }
        Normalization::Spectral => (
            (-ln_gamma(lambda)).exp()
                / (2f64.powf(2.0 * lambda) * (4.0 * PI).powf(0.5 * n) * PI.sqrt()),
            (ln_gamma(lambda + 0.5 * n) - ln_gamma(lambda)).exp() / PI.powf(0.5 * n + 1.0),
        ),
    };
    let kappa2 = (2.0 * lambda + n) * kappa1;
    let omega_n = gamma(0.5 * (n + 2.0)) / PI.powf(0.5 * (n + 2.0));
    let kappa3 = kappa2 / omega_n;
    Ok(ModelConstants {
        kappa_lambda,
        kappa1,
        kappa2,
        omega_n,
        kappa3,
    })
}
