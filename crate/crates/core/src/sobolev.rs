//! Sobolev seminorm `‖∇f‖_{L_p}` and the sphere-averaged directional seminorm `‖f‖^{(k)}`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::BoxGrid;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::symbol::Symbol;

/// Quadrature rule on the unit sphere `S^n ⊂ R^{n+1}`.
#[derive(Debug, Clone, Serialize)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Uniform trapezoid rule on `S^1` with `m ≥ 64` nodes.
    pub fn circle(m: usize) -> Result<Self> {
        if m < 64 {
            return Err(Error::InvalidParams(format!(
                "circle rule needs at least 64 nodes, got {m}"
            )));
        }
        let w = 2.0 * PI / m as f64;
        let nodes = (0..m)
            .map(|i| {
                let t = w * i as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        Ok(Self {
            dim: 2,
            nodes,
            weights: vec![w; m],
        })
    }

    /// Gauss–Legendre in `cos θ` times a uniform rule in `φ` on `S^2`; exact for
    /// polynomials of degree `≤ degree` (at least 20).
    pub fn sphere2(degree: usize) -> Result<Self> {
        if degree < 20 {
            return Err(Error::InvalidParams(format!(
                "sphere rule degree must be at least 20, got {degree}"
            )));
        }
        let m = degree / 2 + 1;
        let nphi = degree + 1;
        let (gx, gw) = gauss_legendre(m);
        let dphi = 2.0 * PI / nphi as f64;
        let mut nodes = Vec::with_capacity(m * nphi);
        let mut weights = Vec::with_capacity(m * nphi);
        for (c, w) in gx.iter().zip(&gw) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..nphi {
                let phi = dphi * j as f64;
                nodes.push(vec![s * phi.cos(), s * phi.sin(), *c]);
                weights.push(w * dphi);
            }
        }
        Ok(Self {
            dim: 3,
            nodes,
            weights,
        })
    }

    /// Default rule for `S^n`: 128-node circle for `n = 1`, degree-24 rule for `n = 2`.
    pub fn for_n(n: usize) -> Result<Self> {
        match n {
            1 => Self::circle(128),
            2 => Self::sphere2(24),
            _ => Err(Error::Unsupported(format!(
                "sphere rules exist for n = 1 and n = 2 only, got n = {n}"
            ))),
        }
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * f(s))
            .sum()
    }
}

/// Surface measure of `S^n`.
pub fn sphere_area(n: usize) -> f64 {
    let d = (n + 1) as f64;
    2.0 * PI.powf(0.5 * d) / crate::special_fn::gamma(0.5 * d)
}


/// Where gradients come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Analytic gradient, falling back to finite differences when the symbol has none.
    #[default]
    Auto,
    Analytic,
    /// Central differences with the cell width as step, Richardson-extrapolated with half
    /// the step (fourth order).
    FiniteDifference,
}

/// Gradients of `f` at every grid node.
pub fn grid_gradients(f: &Symbol, grid: &BoxGrid, mode: GradientMode) -> Result<Vec<Vec<f64>>> {
    let d = grid.dim();
    f.validate(d)?;
    let analytic = match mode {
        GradientMode::FiniteDifference => false,
        GradientMode::Analytic => {
            if f.gradient(grid.nodes()[0].coords()).is_none() {
                return Err(Error::Symbol("symbol has no analytic gradient".into()));
            }
            true
        }
        GradientMode::Auto => f.gradient(grid.nodes()[0].coords()).is_some(),
    };
    if !analytic {
        let ok = match f.support() {
            Some(s) => grid.clears(&s, 2.0),
            None => f.is_constant(),
        };
        if !ok {
            return Err(Error::Symbol(
                "finite differences need a symbol supported at least 2 cells inside the box".into(),
            ));
        }
    }
    let h = grid.spacing();
    Ok(grid
        .nodes()
        .par_iter()
        .map(|x| {
            if analytic {
                f.gradient(x.coords()).unwrap_or_else(|| vec![0.0; d])
            } else {
                richardson_gradient(f, x.coords(), &h)
            }
        })
        .collect())
}

fn richardson_gradient(f: &Symbol, x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut central = |i: usize, step: f64| {
        probe[i] = x[i] + step;
        let up = f.value(&probe);
        probe[i] = x[i] - step;
        let down = f.value(&probe);
        probe[i] = x[i];
        (up - down) / (2.0 * step)
    };
    (0..x.len())
        .map(|i| {
            let coarse = central(i, h[i]);
            let fine = central(i, 0.5 * h[i]);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParams(format!("p must be a finite number > 1, got {p}")));
    }
    Ok(())
}

/// `(∫_box |∇f|^p dx)^{1/p}` by the grid's midpoint rule.
pub fn sobolev_seminorm(f: &Symbol, p: f64, grid: &BoxGrid) -> Result<f64> {
    sobolev_seminorm_with(f, p, grid, GradientMode::Auto)
}

pub fn sobolev_seminorm_with(f: &Symbol, p: f64, grid: &BoxGrid, mode: GradientMode) -> Result<f64> {
    check_p(p)?;
    let grads = grid_gradients(f, grid, mode)?;
    let sum: f64 = grads
        .iter()
        .zip(grid.cell_weights())
        .map(|(g, w)| w * g.iter().map(|v| v * v).sum::<f64>().sqrt().powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// `(∫_box ∫_{S^n} |∂_k f - s_k Σ_m s_m ∂_m f|^p ds dx)^{1/p}` with `k` 1-based.
pub fn directional_seminorm(f: &Symbol, k: usize, p: f64, grid: &BoxGrid, sphere: &SphereRule) -> Result<f64> {
    directional_seminorm_with(f, k, p, grid, sphere, GradientMode::Auto)
}

pub fn directional_seminorm_with(
    f: &Symbol,
    k: usize,
    p: f64,
    grid: &BoxGrid,
    sphere: &SphereRule,
    mode: GradientMode,
) -> Result<f64> {
    check_p(p)?;
    let d = grid.dim();
    if k < 1 || k > d {
        return Err(Error::InvalidParams(format!("k must lie in [1, {d}], got {k}")));
    }
    if sphere.dim() != d {
        return Err(Error::InvalidParams(format!(
            "sphere rule lives in R^{}, grid in R^{d}",
            sphere.dim()
        )));
    }
    let grads = grid_gradients(f, grid, mode)?;
    let per_node: Vec<f64> = grads
        .par_iter()
        .map(|g| {
            sphere.integrate(|s| {
                let radial: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
                (g[k - 1] - s[k - 1] * radial).abs().powf(p)
            })
        })
        .collect();
    let sum: f64 = per_node.iter().zip(grid.cell_weights()).map(|(v, w)| v * w).sum();
    Ok(sum.powf(1.0 / p))
}

/// Output of the `sobolev` pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevReport {
    pub seminorm_p: f64,
    pub directional_k: f64,
    pub ratio: f64,
}

pub fn sobolev_report(f: &Symbol, k: usize, p: f64, grid: &BoxGrid) -> Result<SobolevReport> {
    let sphere = SphereRule::for_n(grid.dim() - 1)?;
    let seminorm_p = sobolev_seminorm(f, p, grid)?;
    let directional_k = directional_seminorm(f, k, p, grid, &sphere)?;
    Ok(SobolevReport {
        seminorm_p,
        directional_k,
        ratio: if seminorm_p > 0.0 { directional_k / seminorm_p } else { f64::NAN },
    })
}

/// Empirical constants `c₁ ≤ ‖f‖^{(k)} / ‖∇f‖_p ≤ c₂` over random bumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceProbe {
    pub ratios: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
}

/// Draws `count` sums of two cosine bumps inside the box (clear of the edge by 2 cells) and
/// records the ratio of the two seminorms for each.
pub fn equivalence_probe(k: usize, p: f64, grid: &BoxGrid, count: usize, seed: u64) -> Result<EquivalenceProbe> {
    let sphere = SphereRule::for_n(grid.dim() - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.spacing();
    let mut ratios = Vec::with_capacity(count);
    for _ in 0..count {
        let terms = (0..2)
            .map(|_| {
                let half_min = grid
                    .bounds()
                    .iter()
                    .zip(&h)
                    .map(|((a, b), hi)| 0.5 * (b - a) - 2.0 * hi)
                    .fold(f64::INFINITY, f64::min);
                let radius = rng.gen_range(0.3..0.9) * half_min;
                let center: Vec<f64> = grid
                    .bounds()
                    .iter()
                    .zip(&h)
                    .map(|((a, b), hi)| rng.gen_range(a + 2.0 * hi + radius..=b - 2.0 * hi - radius))
                    .collect();
                let amp = rng.gen_range(-1.0..1.0);
                Symbol::CosineBump { center, radius, amplitude: amp }
            })
            .collect();
        let f = Symbol::Sum { terms };
        let s = sobolev_seminorm(&f, p, grid)?;
        if s == 0.0 {
            continue;
        }
        ratios.push(directional_seminorm(&f, k, p, grid, &sphere)? / s);
    }
    let c1 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().copied().fold(0.0, f64::max);
    Ok(EquivalenceProbe { ratios, c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(m: usize) -> BoxGrid {
        BoxGrid::uniform(&[(0.0, 1.0), (0.5, 1.5)], m).unwrap()
    }

    #[test]
    fn seminorms_vanish_on_constants() {
        let g = unit_box(8);
        let c = Symbol::Constant { value: 4.0 };
        assert_eq!(sobolev_seminorm(&c, 2.0, &g).unwrap(), 0.0);
        let s = SphereRule::for_n(1).unwrap();
        assert_eq!(directional_seminorm(&c, 1, 2.0, &g, &s).unwrap(), 0.0);
    }

    #[test]
    fn linear_examples() {
        let g = unit_box(5);
        let f = Symbol::Linear { coeffs: vec![1.0, 0.0], offset: 0.0 };
        assert!((sobolev_seminorm(&f, 2.0, &g).unwrap() - 1.0).abs() < 1e-14);
        let s = SphereRule::for_n(1).unwrap();
        let d = directional_seminorm(&f, 1, 2.0, &g, &s).unwrap();
        // ∫_0^{2π} sin⁴θ dθ = 3π/4
        assert!((d - (0.75 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let g = unit_box(16);
        let f = Symbol::cosine(vec![0.5, 1.0], 0.3);
        let s = SphereRule::for_n(1).unwrap();
        let a = sobolev_seminorm(&f, 2.0, &g).unwrap();
        let b = sobolev_seminorm(&f.clone().scaled(-3.0), 2.0, &g).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-13 * b);
        let a = directional_seminorm(&f, 2, 3.0, &g, &s).unwrap();
        let b = directional_seminorm(&f.scaled(-3.0), 2, 3.0, &g, &s).unwrap();
        assert!((b - 3.0 * a).abs() < 1e-13 * b);
    }

    #[test]
    fn finite_differences_match_analytic() {
        let g = unit_box(64);
        let s = SphereRule::for_n(1).unwrap();
        for f in [Symbol::cosine(vec![0.45, 1.05], 0.4), Symbol::gaussian(vec![0.5, 1.0], 0.055)] {
            for k in [1, 2] {
                let a = directional_seminorm_with(&f, k, 2.0, &g, &s, GradientMode::Analytic).unwrap();
                let b = directional_seminorm_with(&f, k, 2.0, &g, &s, GradientMode::FiniteDifference).unwrap();
                assert!((a - b).abs() < 1e-4 * a, "{f:?} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn finite_differences_need_clearance() {
        let g = unit_box(16);
        let f = Symbol::cosine(vec![0.5, 1.0], 0.49);
        assert!(sobolev_seminorm_with(&f, 2.0, &g, GradientMode::FiniteDifference).is_err());
        let lin = Symbol::Linear { coeffs: vec![1.0, 0.0], offset: 0.0 };
        assert!(sobolev_seminorm_with(&lin, 2.0, &g, GradientMode::FiniteDifference).is_err());
    }

    #[test]
    fn translation_parallel_to_boundary() {
        let f = Symbol::cosine(vec![0.4, 1.0], 0.25);
        let t = f.clone().translated(vec![0.17, 0.0]);
        let s = SphereRule::for_n(1).unwrap();
        let mut last = f64::INFINITY;
        for m in [16, 32, 64] {
            let g = unit_box(m);
            let a = directional_seminorm(&f, 1, 2.0, &g, &s).unwrap();
            let b = directional_seminorm(&t, 1, 2.0, &g, &s).unwrap();
            let err = (a - b).abs() / a;
            assert!(err <= last + 1e-15, "{m}: {err} after {last}");
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn equivalence_constants_are_stable() {
        let a = equivalence_probe(2, 2.0, &unit_box(32), 10, 7).unwrap();
        let b = equivalence_probe(2, 2.0, &unit_box(64), 10, 7).unwrap();
        assert_eq!(a.ratios.len(), 10);
        assert!(a.c1 > 0.0 && a.c1 <= a.c2);
        assert!((a.c1 - b.c1).abs() < 0.05 * b.c1 && (a.c2 - b.c2).abs() < 0.05 * b.c2);
    }

    #[test]
    fn argument_checks() {
        let g = unit_box(4);
        let f = Symbol::cosine(vec![0.5, 1.0], 0.2);
        let s = SphereRule::for_n(1).unwrap();
        assert!(sobolev_seminorm(&f, 1.0, &g).is_err());
        assert!(directional_seminorm(&f, 3, 2.0, &g, &s).is_err());
        assert!(directional_seminorm(&f, 1, 2.0, &g, &SphereRule::for_n(2).unwrap()).is_err());
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let c = SphereRule::circle(64).unwrap();
        assert!((c.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        let s = SphereRule::sphere2(20).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_rules_integrate_monomials() {
        // ∫_{S^1} s_2^4 = 3π/4; ∫_{S^2} s_3^4 = 4π/5; ∫_{S^2} s_1² s_2² s_3² = 4π/105
        let c = SphereRule::circle(64).unwrap();
        assert!((c.integrate(|s| s[1].powi(4)) - 0.75 * PI).abs() < 1e-13);
        let s = SphereRule::sphere2(20).unwrap();
        assert!((s.integrate(|v| v[2].powi(4)) - 0.8 * PI).abs() < 1e-12);
        assert!((s.integrate(|v| (v[0] * v[1] * v[2]).powi(2)) - 4.0 * PI / 105.0).abs() < 1e-12);
        assert!(s.integrate(|v| v[0] * v[1].powi(3)).abs() < 1e-12);
    }

    #[test]
    fn rule_limits() {
        assert!(SphereRule::circle(32).is_err());
        assert!(SphereRule::sphere2(10).is_err());
        assert!(SphereRule::for_n(3).is_err());
    }
}
