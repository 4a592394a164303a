//! Commutator kernels `K(x, y)(f(y) - f(x))`, the Schur-multiplier assembly of the
//! Bessel–Riesz commutator over classical Riesz commutators, and the near-diagonal expansion.

use std::sync::Arc;

use serde::Serialize;

use super::riesz::omega;
use super::symbols::{symbol_a, symbol_b, symbol_h, symbol_hm};
use super::{reject_coincident, HalfSpacePoint, Kernel};
use crate::aux_fn::{AuxIndex, FTable};
use crate::error::{Error, Result};
use crate::special_fn::{model_constants_with, Normalization, ModelConstants, ModelParams};
use crate::symbol::Symbol;

/// Kernel of `[T, M_f]`: `K_T(x, y) (f(y) - f(x))`.
///
/// `[M_f, T]` is the negative of this; singular values do not see the sign.
pub fn commutator_kernel(
    base: &dyn Kernel,
    f: &Symbol,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<f64> {
    reject_coincident(x, y)?;
    let df = f.value(y.coords()) - f.value(x.coords());
    if df == 0.0 {
        return Ok(0.0);
    }
    Ok(base.eval(x, y)? * df)
}

/// `[T, M_f]` for a kernel `T`. Pairs with `f(x) = f(y)` skip the base kernel.
#[derive(Clone)]
pub struct Commutator<K> {
    pub base: K,
    pub f: Symbol,
}

impl<K: Kernel> Commutator<K> {
    pub fn new(base: K, f: Symbol) -> Self {
        Self { base, f }
    }
}

impl<K: Kernel> Kernel for Commutator<K> {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        commutator_kernel(&self.base, &self.f, x, y)
    }
}

/// Classical commutator kernel `ω_n (y - x)_l |x - y|^{-n-2} (f(y) - f(x))` (Lebesgue).
fn classical_commutator(n: usize, l: usize, df: f64, x: &HalfSpacePoint, y: &HalfSpacePoint) -> f64 {
    let r = x.dist(y);
    omega(n) * y.diff(x, l) / r.powi(n as i32 + 2) * df
}

/// The Bessel–Riesz commutator rebuilt as Schur multipliers `F∘H`, `a`, `b`, `h_m` applied to
/// the conjugated classical commutators `M_{x^{-λ}} [R_l, M_f] M_{x^{λ}}`.
#[derive(Debug, Clone)]
pub struct SchurFormCommutator {
    params: ModelParams,
    consts: ModelConstants,
    table: Arc<FTable>,
    f: Symbol,
}

impl SchurFormCommutator {
    pub fn new(table: Arc<FTable>, f: Symbol) -> Self {
        let params = *table.params();
        Self {
            params,
            consts: model_constants_with(&params, Normalization::Spectral).expect("table params are validated"),
            table,
            f,
        }
    }
}

impl Kernel for SchurFormCommutator {
    fn eval(&self, x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
        reject_coincident(x, y)?;
        let p = &self.params;
        let (n, lambda, k, d) = (p.n, p.lambda, p.k, p.dim());
        let df = self.f.value(y.coords()) - self.f.value(x.coords());
        // Lebesgue kernel of M_{x^{-λ}} C M_{x^{λ}} is x^{-λ} C(x, y) y^{λ}; as an m_λ kernel it
        // is further divided by y^{2λ}.
        let conj = x.last().powf(-lambda) * y.last().powf(lambda) / y.last().powf(2.0 * lambda);
        let t = |l: usize| conj * classical_commutator(n, l, df, x, y);
        let h = symbol_h(x, y);
        let mut v = self.table.eval(AuxIndex::F20, h)? * t(k);
        if k == d {
            let a = symbol_a(x, y);
            let b = symbol_b(x, y);
            let f11 = self.table.eval(AuxIndex::F11, h)?;
            let f21 = self.table.eval(AuxIndex::F21, h)?;
            let h_last = symbol_hm(d, x, y)?;
            for l in 1..=d {
                let h_l = symbol_hm(l, x, y)?;
                v += h_l * a * f11 * t(l) - h_l * h_last * b * f21 * t(l);
            }
        }
        Ok(self.consts.kappa3 * v)
    }
}

/// Right-hand side kernel at one pair, building the `F` table on the fly.
pub fn schur_form_kernel(
    p: &ModelParams,
    f: &Symbol,
    x: &HalfSpacePoint,
    y: &HalfSpacePoint,
) -> Result<f64> {
    SchurFormCommutator::new(Arc::new(FTable::new(p)?), f.clone()).eval(x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorDirection {
    pub direction: Vec<f64>,
    /// `|weighted - leading|` per separation.
    pub residuals: Vec<f64>,
    /// `|leading|` per separation.
    pub leading: Vec<f64>,
    /// Log-log slope of the residual against the separation.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    pub center: Vec<f64>,
    pub separations: Vec<f64>,
    pub directions: Vec<TaylorDirection>,
    /// Smallest fitted exponent over directions with a nonzero residual.
    pub exponent: Option<f64>,
    pub required_exponent: f64,
    /// `κ3 F_{2,0}(0)`.
    pub leading_coefficient: f64,
    /// Weighted kernel over the classical commutator kernel at the smallest separation,
    /// along the direction where the classical kernel is largest.
    pub observed_ratio: Option<f64>,
    pub pass: bool,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Near-diagonal expansion of the weighted commutator kernel `M_{x^λ}[R_{λ,k}, M_f]M_{x^{-λ}}`
/// (Lebesgue kernel `(x_{n+1} y_{n+1})^λ K_{R}(x, y)(f(y) - f(x))`).
///
/// Pairs `x, y = c ∓ (δ/2) v` at separations `δ = 2^{-m}`, `m = 3..=10`, along each coordinate
/// axis and the main diagonal. The residual after subtracting `κ3 F_{2,0}(0)` times the classical
/// commutator kernel must decay with exponent at least `(1 - n) - 0.2`.
pub fn taylor_local_check(
    p: &ModelParams,
    f: &Symbol,
    center: &[f64],
    box_side: f64,
) -> Result<TaylorReport> {
    p.validate()?;
    let d = p.dim();
    if center.len() != d {
        return Err(Error::Domain(format!("center must have {d} coordinates")));
    }
    let diameter = box_side * (d as f64).sqrt();
    if !(box_side > 0.0) || diameter > center[d - 1] {
        return Err(Error::Domain(format!(
            "box diameter {diameter} must be positive and at most the height {}",
            center[d - 1]
        )));
    }
    let separations: Vec<f64> = (3..=10).map(|m| 2f64.powi(-m)).collect();
    if separations[0] > box_side {
        return Err(Error::Domain(format!(
            "box side {box_side} is smaller than the largest separation {}",
            separations[0]
        )));
    }
    let table = Arc::new(FTable::new(p)?);
    let riesz = super::riesz::BesselRiesz::with_table(table.clone());
    let consts = model_constants_with(p, Normalization::Spectral)?;
    let leading_coefficient = consts.kappa3 * table.eval(AuxIndex::F20, 0.0)?;

    let mut dirs: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    dirs.push(vec![1.0 / (d as f64).sqrt(); d]);

    let mut directions = Vec::new();
    let mut best: Option<(f64, f64)> = None; // (|classical|, ratio)
    for v in dirs {
        let mut residuals = Vec::new();
        let mut leading = Vec::new();
        for (i, &delta) in separations.iter().enumerate() {
            let xs: Vec<f64> = center.iter().zip(&v).map(|(c, e)| c - 0.5 * delta * e).collect();
            let ys: Vec<f64> = center.iter().zip(&v).map(|(c, e)| c + 0.5 * delta * e).collect();
            let x = HalfSpacePoint::new(xs)?;
            let y = HalfSpacePoint::new(ys)?;
            let df = f.value(y.coords()) - f.value(x.coords());
            let weighted = (x.last() * y.last()).powf(p.lambda) * riesz.eval(&x, &y)? * df;
            let classical = classical_commutator(p.n, p.k, df, &x, &y);
            let lead = leading_coefficient * classical;
            residuals.push((weighted - lead).abs());
            leading.push(lead.abs());
            if i + 1 == separations.len() && classical != 0.0 {
                let ratio = weighted / classical;
                if best.map_or(true, |(c, _)| classical.abs() > c) {
                    best = Some((classical.abs(), ratio));
                }
            }
        }
        let exponent = loglog_slope(&separations, &residuals);
        directions.push(TaylorDirection {
            direction: v,
            residuals,
            leading,
            exponent,
        });
    }
    let exponent = directions
        .iter()
        .filter_map(|t| t.exponent)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e))));
    let required_exponent = (1.0 - p.n as f64) - 0.2;
    let all_zero = directions.iter().all(|t| t.residuals.iter().all(|&r| r == 0.0));
    let pass = all_zero || exponent.is_some_and(|e| e >= required_exponent);
    Ok(TaylorReport {
        center: center.to_vec(),
        separations,
        directions,
        exponent,
        required_exponent,
        leading_coefficient,
        observed_ratio: best.map(|b| b.1),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::riesz::BesselRiesz;
    use crate::kernels::pt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_symbol() -> Symbol {
        Symbol::Sum {
            terms: vec![
                Symbol::gaussian(vec![0.4, 1.0], 0.3),
                Symbol::Linear {
                    coeffs: vec![0.3, -0.7],
                    offset: 0.1,
                },
            ],
        }
    }

    #[test]
    fn commutator_basics() {
        let p = ModelParams::new(1, 1.0, 2).unwrap();
        let r = BesselRiesz::new(&p).unwrap();
        let x = pt(&[0.1, 0.9]);
        let y = pt(&[0.4, 1.3]);
        let c = Symbol::Constant { value: 3.0 };
        assert_eq!(commutator_kernel(&r, &c, &x, &y).unwrap(), 0.0);
        let f = test_symbol();
        let one = commutator_kernel(&r, &f, &x, &y).unwrap();
        let two = commutator_kernel(&r, &f.clone().scaled(2.0), &x, &y).unwrap();
        assert!((two - 2.0 * one).abs() <= 1e-15 * one.abs());
        // mean value bound with the Lipschitz constant of the linear part plus the bump
        let lip = f.lipschitz().unwrap();
        assert!(one.abs() <= lip * r.eval(&x, &y).unwrap().abs() * x.dist(&y) * (1.0 + 1e-12));
        assert!(commutator_kernel(&r, &f, &x, &x).is_err());
    }

    #[test]
    fn schur_assembly_identity() {
        for (n, k) in [(1usize, 1usize), (1, 2), (2, 1), (2, 3)] {
            let p = ModelParams::new(n, 1.0, k).unwrap();
            let table = Arc::new(FTable::new(&p).unwrap());
            let f = if n == 1 {
                test_symbol()
            } else {
                Symbol::gaussian(vec![0.2, -0.1, 1.0], 0.4)
            };
            let lhs = Commutator::new(BesselRiesz::with_table(table.clone()), f.clone());
            let rhs = SchurFormCommutator::new(table, f);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..200 {
                let mut xs = vec![0.0; n + 1];
                let mut ys = vec![0.0; n + 1];
                for i in 0..n {
                    xs[i] = rng.gen_range(-0.5..1.5);
                    ys[i] = rng.gen_range(-0.5..1.5);
                }
                xs[n] = rng.gen_range(0.3..2.0);
                ys[n] = rng.gen_range(0.3..2.0);
                let (x, y) = (pt(&xs), pt(&ys));
                let a = lhs.eval(&x, &y).unwrap();
                let b = rhs.eval(&x, &y).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "n={n} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn horizontal_rhs_has_single_term() {
        // k ≤ n: the value is κ3 F20(H) times the conjugated classical commutator.
        let p = ModelParams::new(1, 1.0, 1).unwrap();
        let f = test_symbol();
        let x = pt(&[0.1, 0.9]);
        let y = pt(&[0.4, 1.3]);
        let v = schur_form_kernel(&p, &f, &x, &y).unwrap();
        let c = model_constants_with(&p, Normalization::Spectral).unwrap();
        let h = symbol_h(&x, &y);
        let df = f.value(y.coords()) - f.value(x.coords());
        let f20 = crate::aux_fn::f_value(AuxIndex::F20, &p, h).unwrap();
        let expect = c.kappa3 * f20 * classical_commutator(1, 1, df, &x, &y)
            / (x.last() * y.last()).powf(p.lambda);
        assert!((v - expect).abs() < 1e-11 * expect.abs());
        let constant = Symbol::Constant { value: 1.0 };
        assert_eq!(schur_form_kernel(&p, &constant, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn taylor_expansion_near_diagonal() {
        let p = ModelParams::new(1, 1.0, 2).unwrap();
        let f = test_symbol();
        let r = taylor_local_check(&p, &f, &[1.0, 1.0], 0.2).unwrap();
        assert!(r.pass, "{r:?}");
        let ratio = r.observed_ratio.unwrap();
        assert!((ratio / r.leading_coefficient - 1.0).abs() < 0.01, "{ratio} vs {}", r.leading_coefficient);

        let p1 = ModelParams::new(1, 1.0, 1).unwrap();
        assert!(taylor_local_check(&p1, &f, &[1.0, 1.0], 0.2).unwrap().pass);

        let c = Symbol::Constant { value: 2.0 };
        let rc = taylor_local_check(&p, &c, &[1.0, 1.0], 0.2).unwrap();
        assert!(rc.pass);
        assert!(rc.directions.iter().all(|t| t.residuals.iter().all(|&v| v == 0.0)));
        assert!(taylor_local_check(&p, &f, &[1.0, 0.1], 0.2).is_err());
    }
}
