//! The auxiliary functions
//!
//! ```text
//! F_{k,l}(x) = x^{n+k} ∫_0^2 (x² + 2t)^{-α} (2t - t²)^{λ-1} t^l dt,   α = λ + n/2 + 1,
//! G_{k,l}(x) = (F_{k,l}(x) - F_{k,l}(0)) / x,
//! ```
//!
//! for `(k, l) ∈ {(2,0), (1,1), (2,1)}`, and the split of `F` into a smooth part on
//! `t ∈ [1/2, 2]` (`A_l`), a regularised small-`t` part (`B_l`) and the power integrals
//! `C_{l,j}` that carry the only possible logarithms.
//!
//! Substituting `2t = x² u` gives `F_{k,l}(x) = x^{k+2l-2} Ψ_l(x)` with
//! `Ψ_l(0) = 2^{-1-l} ∫_0^∞ (1+u)^{-α} u^{λ-1+l} du`, which is how the right limit at 0
//! is evaluated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{Adaptive, Estimate};
use crate::special_fn::{gen_binomial, ModelParams};

/// Index pair `(k, l)` of `F_{k,l}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AuxIndex {
    k: u32,
    l: u32,
}

impl AuxIndex {
    pub const F20: AuxIndex = AuxIndex { k: 2, l: 0 };
    pub const F11: AuxIndex = AuxIndex { k: 1, l: 1 };
    pub const F21: AuxIndex = AuxIndex { k: 2, l: 1 };
    pub const ALL: [AuxIndex; 3] = [Self::F20, Self::F11, Self::F21];

    pub fn new(k: u32, l: u32) -> Result<Self> {
        match (k, l) {
            (2, 0) | (1, 1) | (2, 1) => Ok(Self { k, l }),
            _ => Err(Error::InvalidParams(format!(
                "(k, l) must be one of (2,0), (1,1), (2,1); got ({k}, {l})"
            ))),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// Power of `x` in front of the regular factor near 0: `k + 2l - 2`.
    pub fn leading_power(&self) -> i32 {
        self.k as i32 + 2 * self.l as i32 - 2
    }

    pub fn label(&self) -> &'static str {
        match (self.k, self.l) {
            (2, 0) => "F20",
            (1, 1) => "F11",
            _ => "F21",
        }
    }
}

impl std::fmt::Display for AuxIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

pub(crate) fn default_quad() -> Adaptive {
    Adaptive::new(1e-300, 1e-13)
}

/// `∫_0^2 (c + 2t)^{-e} (2t - t²)^{λ-1} t^l dt` for `c ≥ 0`.
///
/// Both endpoint powers go to the substitution in [`Adaptive::integrate_endpoint_powers`];
/// the knee of `(c + 2t)^{-e}` at `t ≈ c/2` is passed as a hint.
pub(crate) fn weighted_t_integral(
    q: &Adaptive,
    lambda: f64,
    c: f64,
    e: f64,
    l: u32,
) -> Result<Estimate> {
    let hints = [0.5 * c];
    q.integrate_endpoint_powers(0.0, 2.0, lambda - 1.0 + l as f64, lambda - 1.0, &hints, |t, _, _| {
        (c + 2.0 * t).powf(-e)
    })
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("F needs a finite x >= 0, got {x}")));
    }
    Ok(())
}

/// `F_{k,l}(x)`; at `x = 0` the right limit.
pub fn f_value(idx: AuxIndex, p: &ModelParams, x: f64) -> Result<f64> {
    f_value_with(&default_quad(), idx, p, x)
}

pub fn f_value_with(q: &Adaptive, idx: AuxIndex, p: &ModelParams, x: f64) -> Result<f64> {
    p.validate()?;
    check_x(x)?;
    if x == 0.0 {
        return f_zero_with(q, idx, p);
    }
    let alpha = p.alpha();
    let nk = (p.n as u32 + idx.k) as i32;
    if x > 1.0 {
        // x^{n+k} (x²)^{-α} as one power, so large x stays in range.
        let scaled = weighted_t_integral_scaled(q, p.lambda, x * x, alpha, idx.l)?;
        return Ok(x.powf(nk as f64 - 2.0 * alpha) * scaled);
    }
    let integral = weighted_t_integral(q, p.lambda, x * x, alpha, idx.l)?;
    Ok(x.powi(nk) * integral.value)
}

/// `∫_0^2 (1 + 2t/c)^{-e} (2t - t²)^{λ-1} t^l dt`, i.e. the integral with `c^{-e}` pulled out.
fn weighted_t_integral_scaled(q: &Adaptive, lambda: f64, c: f64, e: f64, l: u32) -> Result<f64> {
    Ok(q
        .integrate_endpoint_powers(0.0, 2.0, lambda - 1.0 + l as f64, lambda - 1.0, &[], |t, _, _| {
            (1.0 + 2.0 * t / c).powf(-e)
        })?
        .value)
}

/// Right limit `F_{k,l}(0)`: zero when `k + 2l - 2 ≥ 1`, otherwise `Ψ_0(0)` by quadrature.
pub fn f_zero(idx: AuxIndex, p: &ModelParams) -> Result<f64> {
    f_zero_with(&default_quad(), idx, p)
}

fn f_zero_with(q: &Adaptive, idx: AuxIndex, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    if idx.leading_power() > 0 {
        return Ok(0.0);
    }
    // 2^{-1-l} ∫_0^∞ (1+u)^{-α} u^{λ-1+l} du with u = v/(1-v):
    // 2^{-1-l} ∫_0^1 v^{λ-1+l} (1-v)^{α-λ-l-1} dv.
    let a = p.lambda - 1.0 + idx.l as f64;
    let b = p.alpha() - p.lambda - idx.l as f64 - 1.0;
    let est = q.integrate_endpoint_powers(0.0, 1.0, a, b, &[], |_, _, _| 1.0)?;
    Ok(est.value * 0.5f64.powi(1 + idx.l as i32))
}

/// `G_{k,l}(x) = (F_{k,l}(x) - F_{k,l}(0)) / x`.
pub fn g_value(idx: AuxIndex, p: &ModelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("G needs a finite x > 0, got {x}")));
    }
    Ok((f_value(idx, p, x)? - f_zero(idx, p)?) / x)
}

/// Polynomial extrapolation of `x ↦ values` to `x = 0` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], values: &[f64]) -> f64 {
    let mut table = values.to_vec();
    let m = xs.len();
    for level in 1..m {
        for i in 0..m - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            table[i] = (xj * table[i] - xi * table[i + 1]) / (xj - xi);
        }
    }
    table[0]
}

/// Numerical right limit from `F` sampled at `x_i = x0 / 4^i`, `i < levels`.
pub fn f_zero_extrapolated(idx: AuxIndex, p: &ModelParams, x0: f64, levels: usize) -> Result<f64> {
    let xs: Vec<f64> = (0..levels).map(|i| x0 / 4f64.powi(i as i32)).collect();
    let values = xs
        .iter()
        .map(|&x| f_value(idx, p, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate_to_zero(&xs, &values))
}

/// Coefficient `(-1)^j 2^{-(l+2j+1)} binom(λ-1, j)` of `C_{l,j}` in the decomposition.
pub fn c_coefficient(l: u32, j: u32, p: &ModelParams) -> f64 {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    sign * 0.5f64.powi((l + 2 * j + 1) as i32) * gen_binomial(p.lambda - 1.0, j)
}

/// `A_l(x) = ∫_{1/2}^2 (x² + 2t)^{-α} (2t - t²)^{λ-1} t^l dt`.
pub fn a_part(l: u32, p: &ModelParams, x: f64) -> Result<f64> {
    let q = default_quad();
    let alpha = p.alpha();
    let lambda = p.lambda;
    Ok(q
        .integrate_endpoint_powers(0.5, 2.0, 0.0, lambda - 1.0, &[], |t, _, _| {
            (x * x + 2.0 * t).powf(-alpha) * t.powf(lambda - 1.0 + l as f64)
        })?
        .value)
}

/// `(1 - t/2)^{λ-1} - Σ_{j ≤ n+2} binom(λ-1, j)(-t/2)^j`, summed as the series tail
/// so nothing cancels for small `t`.
fn binomial_tail(lambda: f64, n: usize, t: f64) -> f64 {
    let z = -0.5 * t;
    let start = (n + 3) as u32;
    let mut term = gen_binomial(lambda - 1.0, start) * z.powi(start as i32);
    let mut sum = 0.0;
    let mut j = start;
    while j < start + 400 {
        sum += term;
        // binom(λ-1, j+1) = binom(λ-1, j)·(λ-1-j)/(j+1)
        term *= (lambda - 1.0 - j as f64) / (j as f64 + 1.0) * z;
        j += 1;
        if term == 0.0 || term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `B_l(x) = x^n ∫_0^{1/2} (x² + 2t)^{-α} (2t)^{λ-1} R(t) t^l dt` with `R` the Taylor
/// remainder of `(1 - t/2)^{λ-1}` after order `n + 2`.
pub fn b_part(l: u32, p: &ModelParams, x: f64) -> Result<f64> {
    let q = Adaptive::new(1e-300, 1e-12);
    let alpha = p.alpha();
    let lambda = p.lambda;
    let n = p.n;
    let est = q.integrate_endpoint_powers(0.0, 0.5, lambda - 1.0, 0.0, &[0.5 * x * x], |t, _, _| {
        (x * x + 2.0 * t).powf(-alpha)
            * 2f64.powf(lambda - 1.0)
            * binomial_tail(lambda, n, t)
            * t.powi(l as i32)
    })?;
    Ok(x.powi(n as i32) * est.value)
}

/// `C_{l,j}(x) = x^{2j} ∫_{x²}^∞ (s+1)^{-α} s^{n/2-j-l} ds` for `x > 0`.
///
/// The finite piece `[x², 1]` is integrated in `v = ln s`; the tail maps `s = 1/u`.
pub fn c_part(l: u32, j: u32, p: &ModelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("C_(l,j) needs x > 0, got {x}")));
    }
    let q = default_quad();
    let alpha = p.alpha();
    let beta = 0.5 * p.n as f64 - j as f64 - l as f64;
    let lo = 2.0 * x.ln();
    let head = if lo < 0.0 {
        q.integrate(lo, 0.0, |v| {
            let s = v.exp();
            (s + 1.0).powf(-alpha) * s.powf(beta + 1.0)
        })?
        .value
    } else {
        -q.integrate(0.0, lo, |v| {
            let s = v.exp();
            (s + 1.0).powf(-alpha) * s.powf(beta + 1.0)
        })?
        .value
    };
    // ∫_1^∞ (s+1)^{-α} s^β ds = ∫_0^1 u^{α-β-2} (1+u)^{-α} du
    let tail = q
        .integrate_endpoint_powers(0.0, 1.0, alpha - beta - 2.0, 0.0, &[], |u, _, _| {
            (1.0 + u).powf(-alpha)
        })?
        .value;
    Ok(x.powi(2 * j as i32) * (head + tail))
}

/// The three-part evaluation `x^{n+k} A_l + x^k B_l + x^{k+2l-2} Σ_j c_j C_{l,j}` on `(0, 1]`.
pub fn f_decomposed(idx: AuxIndex, p: &ModelParams, x: f64) -> Result<f64> {
    p.validate()?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("decomposition is evaluated on (0, 1], got {x}")));
    }
    let (k, l) = (idx.k as i32, idx.l);
    let n = p.n as i32;
    let mut d = 0.0;
    for j in 0..=(p.n as u32 + 2) {
        d += c_coefficient(l, j, p) * c_part(l, j, p, x)?;
    }
    Ok(x.powi(n + k) * a_part(l, p, x)? + x.powi(k) * b_part(l, p, x)? + x.powi(idx.leading_power()) * d)
}

/// Log-coefficient convention for `C_{l,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LogConvention {
    /// `2 binom(-α, m) χ(m ≥ 1)` with `m = j + l - n/2 - 1`.
    Literal,
    /// `-2 binom(-α, m) χ(m ≥ 0)`: the coefficient that actually makes
    /// `C_{l,j}(x) - a x^{2j} log x` analytic near 0.
    Exact,
}

/// `a_{l,j}` in the literal convention (zero for odd `n`).
pub fn a_coeff(l: u32, j: u32, p: &ModelParams) -> f64 {
    log_coeff(l, j, p, LogConvention::Literal)
}

pub fn log_coeff(l: u32, j: u32, p: &ModelParams, convention: LogConvention) -> f64 {
    if p.n % 2 == 1 {
        return 0.0;
    }
    let m = j as i64 + l as i64 - (p.n / 2) as i64 - 1;
    let b = |m: i64| gen_binomial(-p.alpha(), m as u32);
    match convention {
        LogConvention::Literal if m >= 1 => 2.0 * b(m),
        LogConvention::Exact if m >= 0 => -2.0 * b(m),
        _ => 0.0,
    }
}

/// `(power, coefficient)` pairs of `P_{k,l}(x) = Σ_j c_j a_{l,j} x^{k+2l-2+2j}`; zero terms dropped.
pub fn p_log(idx: AuxIndex, p: &ModelParams, convention: LogConvention) -> Vec<(i32, f64)> {
    (0..=(p.n as u32 + 2))
        .filter_map(|j| {
            let c = c_coefficient(idx.l, j, p) * log_coeff(idx.l, j, p, convention);
            (c != 0.0).then_some((idx.leading_power() + 2 * j as i32, c))
        })
        .collect()
}

pub fn eval_poly(terms: &[(i32, f64)], x: f64) -> f64 {
    terms.iter().map(|&(k, c)| c * x.powi(k)).sum()
}

/// Everything the decomposition produces at one `x`.
#[derive(Debug, Clone, Serialize)]
pub struct AuxDecomposition {
    pub x: f64,
    pub a_l: f64,
    pub b_l: f64,
    /// `(j, coefficient, C_{l,j}(x))`
    pub c_terms: Vec<(u32, f64, f64)>,
    pub a_coeffs: Vec<f64>,
    pub p_log: Vec<(i32, f64)>,
    pub value: f64,
}

pub fn decompose(idx: AuxIndex, p: &ModelParams, x: f64) -> Result<AuxDecomposition> {
    let value = f_decomposed(idx, p, x)?;
    let l = idx.l;
    let c_terms = (0..=(p.n as u32 + 2))
        .map(|j| Ok((j, c_coefficient(l, j, p), c_part(l, j, p, x)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuxDecomposition {
        x,
        a_l: a_part(l, p, x)?,
        b_l: b_part(l, p, x)?,
        c_terms,
        a_coeffs: (0..=(p.n as u32 + 2)).map(|j| a_coeff(l, j, p)).collect(),
        p_log: p_log(idx, p, LogConvention::Literal),
        value,
    })
}

/// Central finite difference of order `j ∈ {0, 1, 2}` with step `x·1e-4`.
pub fn f_derivative(idx: AuxIndex, p: &ModelParams, j: u32, x: f64) -> Result<f64> {
    let h = x * 1e-4;
    match j {
        0 => f_value(idx, p, x),
        1 => Ok((f_value(idx, p, x + h)? - f_value(idx, p, x - h)?) / (2.0 * h)),
        2 => Ok((f_value(idx, p, x + h)? - 2.0 * f_value(idx, p, x)? + f_value(idx, p, x - h)?)
            / (h * h)),
        _ => Err(Error::Unsupported(format!("derivative order {j} (only 0..=2)"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeProbe {
    pub idx: AuxIndex,
    pub order: u32,
    /// `(x, |F^{(j)}(x)| x^{2+2λ+j-k})`
    pub samples: Vec<(f64, f64)>,
    /// `(decade start, sup over that decade)` in increasing order
    pub decade_sups: Vec<(f64, f64)>,
    pub sup: f64,
    /// Set when the decade sups grow by at least as much each decade as the one before.
    pub unbounded_growth: bool,
}

impl DerivativeProbe {
    /// Absolute changes between consecutive decade sups.
    pub fn increments(&self) -> Vec<f64> {
        self.decade_sups.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect()
    }

    /// Decade sups settle: each change is no larger than the previous one.
    pub fn saturating(&self) -> bool {
        let inc = self.increments();
        inc.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14 * self.sup)
    }
}

pub fn derivative_bound_probe(
    idx: AuxIndex,
    p: &ModelParams,
    j: u32,
    xs: &[f64],
) -> Result<DerivativeProbe> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("probe points must be positive".into()));
    }
    let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "probe points must span two decades, got [{lo}, {hi}]"
        )));
    }
    let power = 2.0 + 2.0 * p.lambda + j as f64 - idx.k as f64;
    let mut samples = Vec::with_capacity(xs.len());
    for &x in xs {
        samples.push((x, f_derivative(idx, p, j, x)?.abs() * x.powf(power)));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let first_decade = lo.log10().floor() as i32;
    let mut decade_sups: Vec<(f64, f64)> = Vec::new();
    for &(x, v) in &samples {
        let d = (x.log10().floor() as i32 - first_decade).max(0) as usize;
        let start = 10f64.powi(first_decade + d as i32);
        match decade_sups.iter_mut().find(|(s, _)| *s == start) {
            Some(entry) => entry.1 = entry.1.max(v),
            None => decade_sups.push((start, v)),
        }
    }
    let sup = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let growth: Vec<f64> = decade_sups.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let unbounded_growth = !sup.is_finite()
        || (!growth.is_empty()
            && growth.iter().all(|&g| g > 0.0)
            && growth.windows(2).all(|w| w[1] >= w[0]));
    Ok(DerivativeProbe {
        idx,
        order: j,
        samples,
        decade_sups,
        sup,
        unbounded_growth,
    })
}

/// Richardson estimates of `F^{(m)}(0)` for `m = 0, 1, 2` from one-sided samples.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessProbe {
    pub idx: AuxIndex,
    pub steps: Vec<f64>,
    /// `estimates[m][i]`: extrapolated `F^{(m)}(0)` using the first `i + 2` steps.
    pub estimates: Vec<Vec<f64>>,
    /// Last change of each order's estimate.
    pub last_change: Vec<f64>,
    pub converged: bool,
}

/// Divided-difference estimates of `F(0)`, `F'(0)`, `F''(0)` at step `h`, refined by
/// polynomial extrapolation in `h`. Converges when `F` is smooth on `[0, h0]`.
pub fn smoothness_probe(idx: AuxIndex, p: &ModelParams, h0: f64, levels: usize) -> Result<SmoothnessProbe> {
    if levels < 3 {
        return Err(Error::Domain("smoothness probe needs at least 3 levels".into()));
    }
    let steps: Vec<f64> = (0..levels).map(|i| h0 / 2f64.powi(i as i32)).collect();
    let mut raw = vec![Vec::with_capacity(levels); 3];
    for &h in &steps {
        let f1 = f_value(idx, p, h)?;
        let f2 = f_value(idx, p, 2.0 * h)?;
        let f3 = f_value(idx, p, 3.0 * h)?;
        // Quadratic through (h, 2h, 3h), read off at 0.
        let d0 = 3.0 * f1 - 3.0 * f2 + f3;
        let d1 = (-5.0 * f1 + 8.0 * f2 - 3.0 * f3) / (2.0 * h);
        let d2 = (f1 - 2.0 * f2 + f3) / (h * h);
        raw[0].push(d0);
        raw[1].push(d1);
        raw[2].push(d2);
    }
    let mut estimates = vec![Vec::new(); 3];
    for m in 0..3 {
        for i in 2..=levels {
            estimates[m].push(extrapolate_to_zero(&steps[..i], &raw[m][..i]));
        }
    }
    // Changes are measured against the natural size |F(h0)| / h0^m of each order.
    let f_h0 = f_value(idx, p, h0)?.abs();
    let last_change: Vec<f64> = estimates
        .iter()
        .enumerate()
        .map(|(m, e)| {
            let k = e.len();
            let scale = e[k - 1].abs().max(f_h0 / h0.powi(m as i32));
            (e[k - 1] - e[k - 2]).abs() / scale
        })
        .collect();
    let converged = last_change.iter().all(|&c| c < 1e-4);
    Ok(SmoothnessProbe {
        idx,
        steps,
        estimates,
        last_change,
        converged,
    })
}

/// Piecewise Chebyshev interpolant of `F_{2,0}`, `F_{1,1}`, `F_{2,1}` on geometric panels
/// `[x_min 2^i, x_min 2^{i+1}]`, with direct quadrature outside `[x_min, x_max]`.
#[derive(Debug, Clone)]
pub struct FTable {
    params: ModelParams,
    x_min: f64,
    panels: usize,
    degree: usize,
    /// `coeffs[panel][which][c]`
    coeffs: Vec<[Vec<f64>; 3]>,
    zero: [f64; 3],
}

impl FTable {
    /// Panels cover `[1e-4, 1e-4·2^27] ≈ [1e-4, 1.3e4]`.
    pub fn new(p: &ModelParams) -> Result<Self> {
        Self::with_range(p, 1e-4, 27, 24)
    }

    /// Panels `[x_min 2^i, x_min 2^{i+1}]` for `i < panels`, Chebyshev degree `degree`.
    pub fn with_range(p: &ModelParams, x_min: f64, panels: usize, degree: usize) -> Result<Self> {
        p.validate()?;
        let nodes: Vec<f64> = (0..=degree)
            .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / (degree as f64 + 1.0)).cos())
            .collect();
        let mut coeffs = Vec::with_capacity(panels);
        for panel in 0..panels {
            let a = x_min * 2f64.powi(panel as i32);
            let b = 2.0 * a;
            let mut out: [Vec<f64>; 3] = Default::default();
            for (which, idx) in AuxIndex::ALL.iter().enumerate() {
                let values = nodes
                    .iter()
                    .map(|&u| f_value(*idx, p, 0.5 * (a + b) + 0.5 * (b - a) * u))
                    .collect::<Result<Vec<_>>>()?;
                out[which] = chebyshev_coefficients(&nodes, &values);
            }
            coeffs.push(out);
        }
        let zero = [
            f_zero(AuxIndex::F20, p)?,
            f_zero(AuxIndex::F11, p)?,
            f_zero(AuxIndex::F21, p)?,
        ];
        Ok(Self {
            params: *p,
            x_min,
            panels,
            degree,
            coeffs,
            zero,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn x_max(&self) -> f64 {
        self.x_min * 2f64.powi(self.panels as i32)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn slot(idx: AuxIndex) -> usize {
        match (idx.k, idx.l) {
            (2, 0) => 0,
            (1, 1) => 1,
            _ => 2,
        }
    }

    pub fn eval(&self, idx: AuxIndex, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(self.zero[Self::slot(idx)]);
        }
        if !(x >= self.x_min && x < self.x_max()) {
            return f_value(idx, &self.params, x);
        }
        let panel = ((x / self.x_min).log2().floor() as usize).min(self.panels - 1);
        let a = self.x_min * 2f64.powi(panel as i32);
        let u = (2.0 * x - 3.0 * a) / a; // maps [a, 2a] to [-1, 1]
        Ok(clenshaw(&self.coeffs[panel][Self::slot(idx)], u.clamp(-1.0, 1.0)))
    }

    /// `(F_{2,0}, F_{1,1}, F_{2,1})` at `x`.
    pub fn eval_all(&self, x: f64) -> Result<[f64; 3]> {
        Ok([
            self.eval(AuxIndex::F20, x)?,
            self.eval(AuxIndex::F11, x)?,
            self.eval(AuxIndex::F21, x)?,
        ])
    }
}

fn chebyshev_coefficients(nodes: &[f64], values: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    (0..m)
        .map(|j| {
            let s: f64 = (0..m)
                .map(|i| {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                    values[i] * (j as f64 * theta).cos()
                })
                .sum();
            let scale = if j == 0 { 1.0 } else { 2.0 };
            scale * s / m as f64
        })
        .collect()
}

fn clenshaw(c: &[f64], u: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + c[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::gamma;

    fn params(n: usize, lambda: f64) -> ModelParams {
        ModelParams::new(n, lambda, 1).unwrap()
    }

    // Independent oracle: Ψ_0(0) = Γ(λ)Γ(n/2+1) / (2Γ(λ+n/2+1)).
    fn f20_zero_beta(p: &ModelParams) -> f64 {
        let h = 0.5 * p.n as f64;
        gamma(p.lambda) * gamma(h + 1.0) / (2.0 * gamma(p.lambda + h + 1.0))
    }

    #[test]
    fn aux_index_only_three_pairs() {
        assert!(AuxIndex::new(2, 0).is_ok());
        assert!(AuxIndex::new(1, 1).is_ok());
        assert!(AuxIndex::new(2, 1).is_ok());
        assert!(AuxIndex::new(1, 0).is_err());
        assert!(AuxIndex::new(2, 2).is_err());
    }

    #[test]
    fn f20_zero_unit_case() {
        let p = params(1, 1.0);
        assert!((f_zero(AuxIndex::F20, &p).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn f_zero_matches_beta_and_numerical_limit() {
        for n in 1..=2 {
            for &lambda in &[0.5, 1.0, 1.5] {
                let p = params(n, lambda);
                let beta = f20_zero_beta(&p);
                let lib = f_zero(AuxIndex::F20, &p).unwrap();
                assert!((lib - beta).abs() < 1e-12 * beta, "n={n} λ={lambda}");
                let numeric = f_zero_extrapolated(AuxIndex::F20, &p, 1e-3, 6).unwrap();
                assert!((numeric - beta).abs() < 1e-7 * beta, "n={n} λ={lambda}: {numeric} vs {beta}");
                for idx in [AuxIndex::F11, AuxIndex::F21] {
                    assert_eq!(f_zero(idx, &p).unwrap(), 0.0);
                    assert!(f_zero_extrapolated(idx, &p, 1e-3, 6).unwrap().abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn f11_small_x_slope() {
        // F_{1,1}(x) ≈ x B(λ+1, n/2) / 4; for n = 1, λ = 1 that is x/3.
        let p = params(1, 1.0);
        let x = 1e-5;
        assert!((f_value(AuxIndex::F11, &p, x).unwrap() / x - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn f_positive_and_g_identity() {
        for n in 1..=2 {
            for &lambda in &[0.5, 1.0, 2.7] {
                let p = params(n, lambda);
                for idx in AuxIndex::ALL {
                    let f0 = f_zero(idx, &p).unwrap();
                    for &x in &[1e-3, 0.05, 0.4, 1.0, 1.7, 2.0, 30.0] {
                        let f = f_value(idx, &p, x).unwrap();
                        assert!(f > 0.0);
                        if x <= 2.0 {
                            let g = g_value(idx, &p, x).unwrap();
                            assert!((g * x + f0 - f).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn large_x_and_small_x_branches_agree_at_one() {
        let p = params(2, 1.5);
        for idx in AuxIndex::ALL {
            let below = f_value(idx, &p, 1.0 - 1e-12).unwrap();
            let above = f_value(idx, &p, 1.0 + 1e-12).unwrap();
            assert!((below - above).abs() < 5e-12 * below.abs());
        }
    }

    #[test]
    fn decomposition_matches_direct_quadrature() {
        for n in 1..=2 {
            for &lambda in &[0.5, 1.0, 1.5] {
                let p = params(n, lambda);
                for idx in AuxIndex::ALL {
                    for &x in &[0.1, 0.5, 1.0] {
                        let direct = f_value(idx, &p, x).unwrap();
                        let split = f_decomposed(idx, &p, x).unwrap();
                        assert!((direct - split).abs() < 1e-10, "n={n} λ={lambda} {idx} x={x}: {direct} vs {split}");
                    }
                }
            }
        }
    }

    #[test]
    fn c00_unit_case_against_direct_integral() {
        let p = params(1, 1.0);
        let q = Adaptive::new(1e-300, 1e-13);
        let oracle = crate::quad::integrate_to_infinity(&q, 1.0, |s| (s + 1.0).powf(-2.5) * s.sqrt())
            .unwrap()
            .value;
        assert!((c_part(0, 0, &p, 1.0).unwrap() - oracle).abs() < 1e-11);
    }

    #[test]
    fn b_part_finite_near_zero() {
        for &lambda in &[0.5, 1.5, 2.7] {
            let p = params(1, lambda);
            let v = b_part(0, &p, 1e-6).unwrap();
            assert!(v.is_finite());
        }
    }

    #[test]
    fn a_coeff_literal_rules() {
        let odd = params(3, 1.0);
        for l in 0..2 {
            for j in 0..=5 {
                assert_eq!(a_coeff(l, j, &odd), 0.0);
            }
        }
        let even = params(2, 1.0);
        assert_eq!(a_coeff(0, 0, &even), 0.0);
        assert_eq!(a_coeff(0, 1, &even), 0.0);
        assert_eq!(a_coeff(1, 1, &even), 0.0);
        // m = j + l - 2 = 1 at (l, j) = (1, 2): 2·binom(-3, 1) = -6
        assert_eq!(a_coeff(1, 2, &even), -6.0);
    }

    #[test]
    fn p_log_vanishes_to_second_order() {
        for n in [2usize, 4] {
            let p = params(n, 0.7);
            for idx in AuxIndex::ALL {
                for conv in [LogConvention::Literal, LogConvention::Exact] {
                    for &(power, _) in &p_log(idx, &p, conv) {
                        assert!(power >= 2, "{idx} {conv:?} has x^{power}");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_log_coefficient_removes_singularity() {
        // With the exact coefficient, C(x)/x^{2j} - a log x settles as x → 0.
        let p = params(2, 1.0);
        let (l, j) = (1u32, 1u32); // m = 0
        let a = log_coeff(l, j, &p, LogConvention::Exact);
        assert!(a != 0.0);
        let reg = |x: f64| c_part(l, j, &p, x).unwrap() / x.powi(2) - a * x.ln();
        assert!((reg(1e-3) - reg(1e-4)).abs() < 1e-5);
        let literal = log_coeff(l, j, &p, LogConvention::Literal);
        let reg_lit = |x: f64| c_part(l, j, &p, x).unwrap() / x.powi(2) - literal * x.ln();
        assert!((reg_lit(1e-3) - reg_lit(1e-4)).abs() > 1.0);
    }

    #[test]
    fn derivative_probe_rejects_short_span() {
        let p = params(1, 1.0);
        assert!(derivative_bound_probe(AuxIndex::F20, &p, 0, &[10.0, 20.0, 50.0]).is_err());
    }

    #[test]
    fn derivative_probe_bounded_for_large_x() {
        let p = params(1, 1.0);
        let xs: Vec<f64> = (0..=20).map(|i| 10f64 * 10f64.powf(i as f64 / 10.0)).collect();
        for j in 0..=2 {
            let probe = derivative_bound_probe(AuxIndex::F20, &p, j, &xs).unwrap();
            assert!(probe.sup.is_finite());
            assert!(!probe.unbounded_growth, "j = {j}: {:?}", probe.decade_sups);
        }
    }

    #[test]
    fn smoothness_probe_converges_for_odd_n() {
        let p = params(1, 1.0);
        for idx in AuxIndex::ALL {
            let probe = smoothness_probe(idx, &p, 0.05, 5).unwrap();
            assert!(probe.converged, "{idx}: {:?}", probe.last_change);
        }
    }


    #[test]
    fn table_matches_quadrature() {
        let p = params(1, 1.0);
        let table = FTable::new(&p).unwrap();
        for idx in AuxIndex::ALL {
            for &x in &[1e-4, 3.3e-3, 0.07, 0.5, 1.0, 2.9, 17.0, 900.0] {
                let direct = f_value(idx, &p, x).unwrap();
                let t = table.eval(idx, x).unwrap();
                assert!((direct - t).abs() <= 1e-12 * direct.abs(), "{idx} x={x}: {t} vs {direct}");
            }
        }
    }
}
