//! The two-point symbols `H`, `a`, `b`, `h_m`, `K_m`, `Q_t` and Schur symbols built from them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{reject_coincident, HalfSpacePoint};
use crate::aux_fn::{AuxIndex, FTable};
use crate::error::{Error, Result};
use crate::special_fn::ModelParams;

/// `H(x, y) = |x - y| / (x_{n+1} y_{n+1})^{1/2}`
pub fn symbol_h(x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    x.dist(y) / (x.last() * y.last()).sqrt()
}

/// `a(x, y) = (min / max of the last coordinates)^{1/2}`
pub fn symbol_a(x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let (u, v) = (x.last(), y.last());
    (u.min(v) / u.max(v)).sqrt()
}

/// `b(x, y) = 1` if `x_{n+1} < y_{n+1}`, else 0.
pub fn symbol_b(x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    if x.last() < y.last() {
        1.0
    } else {
        0.0
    }
}

/// `h_m(x, y) = (x - y)_m / |x - y|`, `m` 1-based.
pub fn symbol_hm(m: usize, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    reject_coincident(x, y)?;
    check_index(m, x.dim())?;
    Ok(x.diff(y, m) / x.dist(y))
}

/// `K_m(x, y) = (x - y)_m / (|x - y|^{n+2} (x_{n+1} y_{n+1})^λ)`
pub fn symbol_k(p: &ModelParams, m: usize, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    reject_coincident(x, y)?;
    check_index(m, x.dim())?;
    let r = x.dist(y);
    Ok(x.diff(y, m) / (r.powi(p.n as i32 + 2) * (x.last() * y.last()).powf(p.lambda)))
}

/// `Q_t(x, y) = |x - y|² + 2 t x_{n+1} y_{n+1}`
pub fn symbol_q(t: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    x.dist2(y) + 2.0 * t * x.last() * y.last()
}

fn check_index(m: usize, dim: usize) -> Result<()> {
    if m < 1 || m > dim {
        return Err(Error::Domain(format!("coordinate index {m} outside 1..={dim}")));
    }
    Ok(())
}

/// A bounded two-point function used as a Schur multiplier.
#[derive(Debug, Clone)]
pub enum SchurSymbol {
    One,
    H,
    A,
    B,
    /// `h_m`, 1-based.
    Unit(usize),
    /// `F_{k,l} ∘ H`
    AuxOfH(AuxIndex, Arc<FTable>),
    Product(Vec<SchurSymbol>),
}

impl SchurSymbol {
    /// Value at `(x, y)`. `h_m` is undefined on the diagonal and reports coincident points.
    pub fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        Ok(match self {
            SchurSymbol::One => 1.0,
            SchurSymbol::H => symbol_h(x, y),
            SchurSymbol::A => symbol_a(x, y),
            SchurSymbol::B => symbol_b(x, y),
            SchurSymbol::Unit(m) => symbol_hm(*m, x, y)?,
            SchurSymbol::AuxOfH(idx, table) => table.eval(*idx, symbol_h(x, y))?,
            SchurSymbol::Product(parts) => {
                let mut acc = 1.0;
                for s in parts {
                    acc *= s.eval(x, y)?;
                }
                acc
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            SchurSymbol::One => "1".into(),
            SchurSymbol::H => "H".into(),
            SchurSymbol::A => "a".into(),
            SchurSymbol::B => "b".into(),
            SchurSymbol::Unit(m) => format!("h{m}"),
            SchurSymbol::AuxOfH(idx, _) => format!("{}(H)", idx.label()),
            SchurSymbol::Product(parts) => parts
                .iter()
                .map(|s| s.label())
                .collect::<Vec<_>>()
                .join("*"),
        }
    }
}

/// Interval that `x_{n+1} / y_{n+1}` must lie in whenever `H(x, y) ≤ 1`.
pub fn ratio_bounds() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    ((3.0 - s5) / 2.0, (3.0 + s5) / 2.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub accepted: usize,
    pub drawn: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub bounds: (f64, f64),
}

/// Rejection-samples pairs with `H ≤ 1` in dimension `n + 1` until `samples` are accepted,
/// and checks the ratio of last coordinates against [`ratio_bounds`].
///
/// Pairs are drawn with `y_{n+1}` log-uniform on `[1e-2, 1e2]`, `x_{n+1} = y_{n+1} e^u` with
/// `u` uniform on `[-1.2, 1.2]`, and `x' - y'` uniform in a cube of half-width `y_{n+1}`.
/// The first violating pair is returned as an error.
pub fn ratio_bound_check(n: usize, samples: usize, seed: u64) -> Result<RatioReport> {
    if samples < 1 || n < 1 {
        return Err(Error::InvalidParams(format!(
            "ratio check needs n >= 1 and samples >= 1, got n = {n}, samples = {samples}"
        )));
    }
    let (lo, hi) = ratio_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    let mut drawn = 0;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut xc = vec![0.0; n + 1];
    let mut yc = vec![0.0; n + 1];
    while accepted < samples {
        drawn += 1;
        let yl = 10f64.powf(rng.gen_range(-2.0..2.0));
        let xl = yl * rng.gen_range(-1.2f64..1.2).exp();
        for i in 0..n {
            yc[i] = rng.gen_range(-1.0..1.0);
            xc[i] = yc[i] + yl * rng.gen_range(-1.0..1.0);
        }
        xc[n] = xl;
        yc[n] = yl;
        let d2: f64 = xc.iter().zip(&yc).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 > xl * yl {
            continue;
        }
        accepted += 1;
        let ratio = xl / yl;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        if !(ratio >= lo && ratio <= hi) {
            return Err(Error::Domain(format!(
                "ratio {ratio} outside [{lo}, {hi}] for x = {xc:?}, y = {yc:?}"
            )));
        }
    }
    Ok(RatioReport {
        accepted,
        drawn,
        min_ratio,
        max_ratio,
        bounds: (lo, hi),
    })
}
