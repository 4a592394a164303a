//! Midpoint grids on boxes in the half-space and symmetric Nyström assembly.
//!
//! An [`OperatorMatrix`] stores `A_ij = K(x_i, x_j) √(w_i μ_i) √(w_j μ_j)` where `w` are
//! cell volumes and `μ = x_{n+1}^{2λ}` in the weighted space (`μ = 1` otherwise), so its
//! singular values approximate those of the integral operator.

use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{HalfSpacePoint, Kernel, SchurSymbol};

pub const DEFAULT_NODE_CAP: usize = 1 << 14;

/// Midpoints and weights of the `m`-cell uniform partition of `[a, b]`.
pub fn midpoint_nodes(a: f64, b: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::Grid("points per dimension must be positive".into()));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::Grid(format!("degenerate interval [{a}, {b}]")));
    }
    let h = (b - a) / m as f64;
    let nodes = (0..m).map(|i| a + (i as f64 + 0.5) * h).collect();
    Ok((nodes, vec![h; m]))
}

/// Tensor-product midpoint grid on `Π [a_i, b_i]` with `a_{n+1} > 0`.
///
/// Nodes are ordered lexicographically in the multi-index, the last coordinate varying fastest.
#[derive(Debug, Clone, Serialize)]
pub struct BoxGrid {
    bounds: Vec<(f64, f64)>,
    points_per_dim: Vec<usize>,
    #[serde(skip)]
    nodes: Vec<HalfSpacePoint>,
    #[serde(skip)]
    cell_weights: Vec<f64>,
}

pub fn make_grid(bounds: &[(f64, f64)], points_per_dim: &[usize]) -> Result<BoxGrid> {
    make_grid_with_cap(bounds, points_per_dim, DEFAULT_NODE_CAP)
}

pub fn make_grid_with_cap(bounds: &[(f64, f64)], points_per_dim: &[usize], cap: usize) -> Result<BoxGrid> {
    if bounds.len() < 2 {
        return Err(Error::Grid(format!(
            "a box in the half-space needs at least 2 dimensions, got {}",
            bounds.len()
        )));
    }
    if points_per_dim.len() != bounds.len() {
        return Err(Error::Grid(format!(
            "{} bounds but {} point counts",
            bounds.len(),
            points_per_dim.len()
        )));
    }
    let (a_last, _) = bounds[bounds.len() - 1];
    if !(a_last > 0.0) {
        return Err(Error::Grid(format!(
            "the box must stay inside the half-space: lower bound of the last coordinate is {a_last}"
        )));
    }
    let total = points_per_dim
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .ok_or_else(|| Error::Grid("node count overflows".into()))?;
    if total > cap {
        return Err(Error::Grid(format!("{total} nodes exceed the cap of {cap}")));
    }
    let axes = bounds
        .iter()
        .zip(points_per_dim)
        .map(|(&(a, b), &m)| midpoint_nodes(a, b, m))
        .collect::<Result<Vec<_>>>()?;

    let d = bounds.len();
    let mut nodes = Vec::with_capacity(total);
    let mut cell_weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let coords: Vec<f64> = (0..d).map(|a| axes[a].0[idx[a]]).collect();
        cell_weights.push((0..d).map(|a| axes[a].1[idx[a]]).product());
        nodes.push(HalfSpacePoint::new(coords)?);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < points_per_dim[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(BoxGrid {
        bounds: bounds.to_vec(),
        points_per_dim: points_per_dim.to_vec(),
        nodes,
        cell_weights,
    })
}

impl BoxGrid {
    /// Same number of points along every axis.
    pub fn uniform(bounds: &[(f64, f64)], points: usize) -> Result<Self> {
        make_grid(bounds, &vec![points; bounds.len()])
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn points_per_dim(&self) -> &[usize] {
        &self.points_per_dim
    }

    pub fn nodes(&self) -> &[HalfSpacePoint] {
        &self.nodes
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    /// Cell widths along each axis.
    pub fn spacing(&self) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(&self.points_per_dim)
            .map(|((a, b), &m)| (b - a) / m as f64)
            .collect()
    }

    /// The same box with every point count doubled.
    pub fn refined(&self) -> Result<Self> {
        let ppd: Vec<usize> = self.points_per_dim.iter().map(|m| 2 * m).collect();
        make_grid(&self.bounds, &ppd)
    }

    /// `x_{n+1}^{2λ}` at every node.
    pub fn measure(&self, lambda: f64) -> Vec<f64> {
        self.nodes.iter().map(|x| x.last().powf(2.0 * lambda)).collect()
    }

    /// Whether `support` lies inside the box with at least `cells` cell widths to spare on
    /// every side.
    pub fn clears(&self, support: &[(f64, f64)], cells: f64) -> bool {
        support.len() == self.dim()
            && self
                .bounds
                .iter()
                .zip(self.spacing())
                .zip(support)
                .all(|(((a, b), h), (lo, hi))| *lo >= a + cells * h && *hi <= b - cells * h)
    }
}

/// Which Hilbert space the matrix acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceTag {
    /// `L_2(m_λ)`, `dm_λ = x_{n+1}^{2λ} dx`
    Weighted,
    /// `L_2(dx)`
    Unweighted,
}

impl SpaceTag {
    pub fn code(self) -> u8 {
        match self {
            SpaceTag::Weighted => 1,
            SpaceTag::Unweighted => 0,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(SpaceTag::Weighted),
            0 => Some(SpaceTag::Unweighted),
            _ => None,
        }
    }

    fn flipped(self) -> Self {
        match self {
            SpaceTag::Weighted => SpaceTag::Unweighted,
            SpaceTag::Unweighted => SpaceTag::Weighted,
        }
    }
}

/// How diagonal entries are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalRule {
    /// `Zero` for kernels singular on the diagonal, `Evaluate` otherwise.
    #[default]
    Auto,
    Zero,
    Evaluate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyOptions {
    pub diagonal: DiagonalRule,
    /// Sub-cells per axis used to estimate the self-cell contribution dropped by
    /// `DiagonalRule::Zero`; 0 disables the estimate.
    pub bias_subcells: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            diagonal: DiagonalRule::Auto,
            bias_subcells: 4,
        }
    }
}

/// Size of the self-cell integral `∫_{cell i} K(x_i, y) dμ(y)` dropped by zeroing the
/// diagonal, scaled like a matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalBias {
    /// `max_i |Σ_z K(x_i, z) w_z √(μ_i μ_z)|` over sub-cell centres `z` of cell `i`
    pub max_signed: f64,
    /// `max_i Σ_z |K(x_i, z)| w_z √(μ_i μ_z)`
    pub max_absolute: f64,
    pub subcells: usize,
}

/// A dense Nyström matrix together with its grid.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Mat<f64>,
    grid: Arc<BoxGrid>,
    space: SpaceTag,
    lambda: f64,
    diagonal_bias: Option<DiagonalBias>,
}

impl OperatorMatrix {
    /// Wraps raw entries; `entries` must be `grid.len()` square.
    pub fn from_entries(entries: Mat<f64>, grid: Arc<BoxGrid>, space: SpaceTag, lambda: f64) -> Result<Self> {
        if entries.nrows() != grid.len() || entries.ncols() != grid.len() {
            return Err(Error::Grid(format!(
                "{}x{} matrix does not match a grid of {} nodes",
                entries.nrows(),
                entries.ncols(),
                grid.len()
            )));
        }
        Ok(Self {
            entries,
            grid,
            space,
            lambda,
            diagonal_bias: None,
        })
    }

    pub fn entries(&self) -> &Mat<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<f64> {
        self.entries
    }

    pub fn grid(&self) -> &Arc<BoxGrid> {
        &self.grid
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Power of `x_{n+1}` in the measure of the weighted space.
    pub fn measure_exponent(&self) -> f64 {
        2.0 * self.lambda
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn diagonal_bias(&self) -> Option<DiagonalBias> {
        self.diagonal_bias
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim() {
            for v in self.entries.col_as_slice(j) {
                s += v * v;
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.dim())
            .flat_map(|j| self.entries.col_as_slice(j).iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Entrywise `a A + b B` on the same grid and space.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim() != other.dim() || self.space != other.space {
            return Err(Error::Grid("matrices live on different grids or spaces".into()));
        }
        let entries = Mat::from_fn(self.dim(), self.dim(), |i, j| {
            a * self.entries[(i, j)] + b * other.entries[(i, j)]
        });
        Ok(Self {
            entries,
            grid: self.grid.clone(),
            space: self.space,
            lambda: self.lambda,
            diagonal_bias: None,
        })
    }

    fn node_measure(&self) -> Vec<f64> {
        match self.space {
            SpaceTag::Weighted => self.grid.measure(self.lambda),
            SpaceTag::Unweighted => vec![1.0; self.dim()],
        }
    }
}

/// Nyström assembly with default options.
pub fn assemble<K: Kernel + ?Sized>(kernel: &K, grid: &Arc<BoxGrid>, space: SpaceTag, lambda: f64) -> Result<OperatorMatrix> {
    assemble_with(kernel, grid, space, lambda, &AssemblyOptions::default())
}

pub fn assemble_with<K: Kernel + ?Sized>(
    kernel: &K,
    grid: &Arc<BoxGrid>,
    space: SpaceTag,
    lambda: f64,
    opts: &AssemblyOptions,
) -> Result<OperatorMatrix> {
    let n = grid.len();
    let nodes = grid.nodes();
    let mu = match space {
        SpaceTag::Weighted => grid.measure(lambda),
        SpaceTag::Unweighted => vec![1.0; n],
    };
    let scale: Vec<f64> = grid.cell_weights().iter().zip(&mu).map(|(w, m)| (w * m).sqrt()).collect();
    let zero_diag = match opts.diagonal {
        DiagonalRule::Auto => kernel.singular_on_diagonal(),
        DiagonalRule::Zero => true,
        DiagonalRule::Evaluate => false,
    };

    // Row-major scratch; rows are filled independently.
    let mut rows = vec![0.0; n * n];
    let outcomes: Vec<Result<()>> = rows
        .par_chunks_mut(n.max(1))
        .enumerate()
        .map(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                if i == j && zero_diag {
                    continue;
                }
                let k = kernel.eval(&nodes[i], &nodes[j]).map_err(|e| Error::Assembly {
                    row: i,
                    col: j,
                    source: Box::new(e),
                })?;
                *slot = k * scale[i] * scale[j];
            }
            Ok(())
        })
        .collect();
    outcomes.into_iter().collect::<Result<()>>()?;

    let entries = Mat::from_fn(n, n, |i, j| rows[i * n + j]);
    let diagonal_bias = if zero_diag && opts.bias_subcells > 0 {
        Some(self_cell_bias(kernel, grid, space, lambda, opts.bias_subcells)?)
    } else {
        None
    };
    Ok(OperatorMatrix {
        entries,
        grid: grid.clone(),
        space,
        lambda,
        diagonal_bias,
    })
}

fn self_cell_bias<K: Kernel + ?Sized>(
    kernel: &K,
    grid: &BoxGrid,
    space: SpaceTag,
    lambda: f64,
    sub: usize,
) -> Result<DiagonalBias> {
    let d = grid.dim();
    let h = grid.spacing();
    let count = sub.pow(d as u32);
    let sub_w: f64 = h.iter().map(|hi| hi / sub as f64).product();
    let measure = |x: &[f64]| match space {
        SpaceTag::Weighted => x[d - 1].powf(2.0 * lambda),
        SpaceTag::Unweighted => 1.0,
    };
    let per_node: Vec<Result<(f64, f64)>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mu_x = measure(x.coords());
            let (mut signed, mut abs) = (0.0, 0.0);
            let mut z = vec![0.0; d];
            for c in 0..count {
                let mut rem = c;
                for a in (0..d).rev() {
                    let t = rem % sub;
                    rem /= sub;
                    z[a] = x.coords()[a] - 0.5 * h[a] + (t as f64 + 0.5) * h[a] / sub as f64;
                }
                let zp = HalfSpacePoint::new(z.clone())?;
                let k = kernel.eval(x, &zp).map_err(|e| Error::Assembly {
                    row: i,
                    col: i,
                    source: Box::new(e),
                })?;
                let v = k * sub_w * (mu_x * measure(&z)).sqrt();
                signed += v;
                abs += v.abs();
            }
            Ok((signed.abs(), abs))
        })
        .collect();
    let mut out = DiagonalBias {
        max_signed: 0.0,
        max_absolute: 0.0,
        subcells: sub,
    };
    for r in per_node {
        let (s, a) = r?;
        out.max_signed = out.max_signed.max(s);
        out.max_absolute = out.max_absolute.max(a);
    }
    Ok(out)
}

/// Direction of [`conjugate_weight`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conjugation {
    /// `L_2(m_λ) → L_2(dx)`: kernel `K ↦ x^λ K y^λ`
    ToUnweighted,
    /// `L_2(dx) → L_2(m_λ)`: kernel `K ↦ x^{-λ} K y^{-λ}`
    ToWeighted,
}

/// Transports the operator through the unitary `M_{x_{n+1}^{∓λ}}`.
///
/// The kernel picks up `(x_{i,n+1} x_{j,n+1})^{±λ}` and the Nyström weights the reciprocal
/// factor, so the singular values are unchanged.
pub fn conjugate_weight(a: &OperatorMatrix, direction: Conjugation) -> Result<OperatorMatrix> {
    let expected = match direction {
        Conjugation::ToUnweighted => SpaceTag::Weighted,
        Conjugation::ToWeighted => SpaceTag::Unweighted,
    };
    if a.space != expected {
        return Err(Error::Grid(format!("{direction:?} applied to a matrix on {:?}", a.space)));
    }
    let sign = match direction {
        Conjugation::ToUnweighted => 1.0,
        Conjugation::ToWeighted => -1.0,
    };
    let lambda = a.lambda;
    let kernel_factor: Vec<f64> = a.grid.nodes().iter().map(|x| x.last().powf(sign * lambda)).collect();
    let old_mu = a.node_measure();
    let new_space = a.space.flipped();
    let new_mu = match new_space {
        SpaceTag::Weighted => a.grid.measure(lambda),
        SpaceTag::Unweighted => vec![1.0; a.dim()],
    };
    let row: Vec<f64> = (0..a.dim())
        .map(|i| kernel_factor[i] * (new_mu[i] / old_mu[i]).sqrt())
        .collect();
    let entries = Mat::from_fn(a.dim(), a.dim(), |i, j| a.entries[(i, j)] * row[i] * row[j]);
    Ok(OperatorMatrix {
        entries,
        grid: a.grid.clone(),
        space: new_space,
        lambda,
        diagonal_bias: a.diagonal_bias,
    })
}

/// Entrywise product `B_ij = M(x_i, x_j) A_ij`. Zero entries are left alone, so symbols
/// undefined on the diagonal are never evaluated there when the diagonal was zeroed.
pub fn schur_apply_fn<F>(symbol: F, a: &OperatorMatrix) -> Result<OperatorMatrix>
where
    F: Fn(&HalfSpacePoint, &HalfSpacePoint) -> Result<f64> + Sync,
{
    let n = a.dim();
    let nodes = a.grid.nodes();
    let mut rows = vec![0.0; n * n];
    let outcomes: Vec<Result<()>> = rows
        .par_chunks_mut(n.max(1))
        .enumerate()
        .map(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                let v = a.entries[(i, j)];
                if v == 0.0 {
                    continue;
                }
                let m = symbol(&nodes[i], &nodes[j]).map_err(|e| Error::Assembly {
                    row: i,
                    col: j,
                    source: Box::new(e),
                })?;
                *slot = m * v;
            }
            Ok(())
        })
        .collect();
    outcomes.into_iter().collect::<Result<()>>()?;
    Ok(OperatorMatrix {
        entries: Mat::from_fn(n, n, |i, j| rows[i * n + j]),
        grid: a.grid.clone(),
        space: a.space,
        lambda: a.lambda,
        diagonal_bias: a.diagonal_bias,
    })
}

pub fn schur_apply(symbol: &SchurSymbol, a: &OperatorMatrix) -> Result<OperatorMatrix> {
    schur_apply_fn(|x, y| symbol.eval(x, y), a)
}

/// Largest singular value by power iteration on `AᵀA`, started from the constant vector.
pub fn operator_norm(a: &OperatorMatrix, max_iter: usize, rel_tol: f64) -> f64 {
    let n = a.dim();
    if n == 0 {
        return 0.0;
    }
    let m = &a.entries;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut av = vec![0.0; n];
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        av.iter_mut().for_each(|x| *x = 0.0);
        for (j, vj) in v.iter().enumerate() {
            for (i, aij) in m.col_as_slice(j).iter().enumerate() {
                av[i] += aij * vj;
            }
        }
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = m.col_as_slice(j).iter().zip(&av).map(|(a, b)| a * b).sum();
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let next = norm.sqrt();
        let done = (next - sigma).abs() <= rel_tol * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

/// `‖S_M(A)‖ / ‖A‖` in operator norm.
pub fn schur_norm_ratio(symbol: &SchurSymbol, a: &OperatorMatrix) -> Result<f64> {
    let b = schur_apply(symbol, a)?;
    let na = operator_norm(a, 500, 1e-10);
    if na == 0.0 {
        return Err(Error::Spectrum("norm ratio of a zero matrix".into()));
    }
    Ok(operator_norm(&b, 500, 1e-10) / na)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Commutator, FnKernel, ZeroKernel};
    use crate::quad::gauss_legendre;
    use crate::symbol::Symbol;

    fn grid(m: usize) -> Arc<BoxGrid> {
        Arc::new(BoxGrid::uniform(&[(0.0, 1.0), (0.5, 1.5)], m).unwrap())
    }

    fn singular_values(a: &OperatorMatrix) -> Vec<f64> {
        a.entries().singular_values().unwrap()
    }

    #[test]
    fn midpoint_examples() {
        let (x, w) = midpoint_nodes(0.0, 1.0, 4).unwrap();
        assert_eq!(x, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(w, vec![0.25; 4]);
        let g = make_grid(&[(0.0, 1.0), (1.0, 2.0)], &[2, 2]).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.cell_weights(), &[0.25; 4]);
        assert_eq!(g.nodes()[1].coords(), &[0.25, 1.75]);
        assert_eq!(g.nodes()[2].coords(), &[0.75, 1.25]);
    }

    #[test]
    fn weights_sum_to_volume() {
        let g = make_grid(&[(-0.3, 1.1), (0.2, 0.9), (0.4, 2.0)], &[7, 5, 9]).unwrap();
        let s: f64 = g.cell_weights().iter().sum();
        assert!((s - g.volume()).abs() <= 1e-12 * g.volume());
    }

    #[test]
    fn grid_errors() {
        assert!(make_grid(&[(0.0, 1.0), (0.0, 1.0)], &[2, 2]).is_err());
        assert!(make_grid(&[(0.0, 1.0), (1.0, 1.0)], &[2, 2]).is_err());
        assert!(make_grid(&[(0.0, 1.0), (1.0, 2.0)], &[2, 0]).is_err());
        assert!(make_grid(&[(0.0, 1.0), (1.0, 2.0)], &[200, 200]).is_err());
        assert!(make_grid_with_cap(&[(0.0, 1.0), (1.0, 2.0)], &[200, 200], 40_000).is_ok());
    }

    #[test]
    fn zero_kernel_and_constant_commutator() {
        let g = grid(6);
        let z = assemble(&ZeroKernel, &g, SpaceTag::Weighted, 1.0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let base = FnKernel::singular(|x: &HalfSpacePoint, y: &HalfSpacePoint| Ok(1.0 / x.dist(y)));
        let c = Commutator::new(base, Symbol::Constant { value: 3.0 });
        let m = assemble(&c, &g, SpaceTag::Weighted, 1.0).unwrap();
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn assembly_errors_carry_indices() {
        let g = grid(3);
        let k = FnKernel::smooth(|x: &HalfSpacePoint, _: &HalfSpacePoint| {
            if x.coords()[0] > 0.5 {
                Err(Error::Domain("boom".into()))
            } else {
                Ok(1.0)
            }
        });
        match assemble(&k, &g, SpaceTag::Unweighted, 0.0) {
            Err(Error::Assembly { row, col, .. }) => assert_eq!((row, col), (6, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frobenius_matches_direct_quadrature() {
        // ∬ K² dμ dμ with μ = x_2^{2λ} dx by a 4-d Gauss–Legendre product rule
        let lambda = 0.75;
        let kern = |x: &[f64], y: &[f64]| {
            let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            (-d2).exp() * (1.0 + x[0] * y[1])
        };
        let (gx, gw) = gauss_legendre(14);
        let map = |a: f64, b: f64| -> Vec<(f64, f64)> {
            gx.iter().zip(&gw).map(|(t, w)| (0.5 * (a + b) + 0.5 * (b - a) * t, 0.5 * (b - a) * w)).collect()
        };
        let (r1, r2) = (map(0.0, 1.0), map(0.5, 1.5));
        let mut exact = 0.0;
        for &(a, wa) in &r1 {
            for &(b, wb) in &r2 {
                for &(c, wc) in &r1 {
                    for &(d, wd) in &r2 {
                        let k = kern(&[a, b], &[c, d]);
                        exact += wa * wb * wc * wd * k * k * (b * d).powf(2.0 * lambda);
                    }
                }
            }
        }
        let k = FnKernel::smooth(move |x: &HalfSpacePoint, y: &HalfSpacePoint| Ok(kern(x.coords(), y.coords())));
        let mut last = f64::INFINITY;
        for m in [16, 32] {
            let a = assemble(&k, &grid(m), SpaceTag::Weighted, lambda).unwrap();
            let err = (a.frobenius_norm().powi(2) - exact).abs() / exact;
            assert!(err < last);
            last = err;
        }
        assert!(last < 0.02);
    }

    fn commutator_matrix(m: usize, lambda: f64) -> OperatorMatrix {
        let base = FnKernel::singular(|x: &HalfSpacePoint, y: &HalfSpacePoint| {
            Ok(x.diff(y, 1) / x.dist2(y).powf(1.5) * (x.last() / y.last()))
        });
        let f = Symbol::gaussian(vec![0.5, 1.0], 0.15);
        assemble(&Commutator::new(base, f), &grid(m), SpaceTag::Weighted, lambda).unwrap()
    }

    #[test]
    fn conjugation_preserves_singular_values() {
        let a = commutator_matrix(10, 1.3);
        let b = conjugate_weight(&a, Conjugation::ToUnweighted).unwrap();
        assert_eq!(b.space(), SpaceTag::Unweighted);
        let (sa, sb) = (singular_values(&a), singular_values(&b));
        for (x, y) in sa.iter().zip(&sb) {
            assert!((x - y).abs() <= 1e-12 * sa[0]);
        }
        assert!(conjugate_weight(&b, Conjugation::ToUnweighted).is_err());
        let c = conjugate_weight(&b, Conjugation::ToWeighted).unwrap();
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                assert!((c.get(i, j) - a.get(i, j)).abs() <= 1e-14 * a.max_abs());
            }
        }
    }

    #[test]
    fn conjugation_with_zero_lambda_is_noop() {
        let a = commutator_matrix(6, 0.0);
        let b = conjugate_weight(&a, Conjugation::ToUnweighted).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn schur_one_and_order() {
        let a = commutator_matrix(6, 1.0);
        let one = schur_apply(&SchurSymbol::One, &a).unwrap();
        assert_eq!(one.entries(), a.entries());
        let ab = schur_apply(&SchurSymbol::B, &schur_apply(&SchurSymbol::A, &a).unwrap()).unwrap();
        let ba = schur_apply(&SchurSymbol::A, &schur_apply(&SchurSymbol::B, &a).unwrap()).unwrap();
        assert_eq!(ab.entries(), ba.entries());
    }

    #[test]
    fn schur_norm_ratio_is_bounded() {
        let mut ratios = Vec::new();
        for m in [8, 16] {
            ratios.push(schur_norm_ratio(&SchurSymbol::Unit(1), &commutator_matrix(m, 1.0)).unwrap());
        }
        for r in &ratios {
            assert!(r.is_finite() && *r > 0.0 && *r < 2.0, "{ratios:?}");
        }
    }

    #[test]
    fn power_iteration_matches_svd() {
        let a = commutator_matrix(8, 1.0);
        let s = singular_values(&a);
        let p = operator_norm(&a, 2000, 1e-13);
        assert!((p - s[0]).abs() < 1e-6 * s[0]);
    }

    #[test]
    fn bias_is_reported_for_zeroed_diagonal() {
        let a = commutator_matrix(8, 1.0);
        let b = a.diagonal_bias().unwrap();
        assert!(b.max_signed <= b.max_absolute);
        assert!(b.max_absolute > 0.0);
        let s = assemble(&ZeroKernel, &grid(4), SpaceTag::Weighted, 1.0).unwrap();
        assert!(s.diagonal_bias().is_none());
    }

    #[test]
    fn assembly_is_deterministic_across_pools() {
        let a = commutator_matrix(12, 1.0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| commutator_matrix(12, 1.0));
        assert_eq!(a.entries(), b.entries());
    }
}
