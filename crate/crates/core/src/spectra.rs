//! Singular values, weak Schatten quasinorms, submajorization and power-law fits.

use std::fmt::Write as _;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use serde::Serialize;

use crate::discretize::OperatorMatrix;
use crate::error::{Error, Result};

/// Nonincreasing list of nonnegative reals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularValueSeq {
    values: Vec<f64>,
}

impl SingularValueSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Spectrum("singular values must be finite and nonnegative".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Spectrum("singular values must be sorted in nonincreasing order".into()));
        }
        Ok(Self { values })
    }

    /// Sorts (descending) after taking absolute values.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.iter_mut().for_each(|v| *v = v.abs());
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut values: Vec<f64> = self.values.iter().map(|v| v * c.abs()).collect();
        if c == 0.0 {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Self { values }
    }

    /// `Σ μ_k^p`
    pub fn schatten_sum(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.powf(p)).sum()
    }
}

/// Full singular value list of a dense matrix, computed single-threaded so the result does
/// not depend on the thread pool.
pub fn singular_values_of(a: &Mat<f64>) -> Result<SingularValueSeq> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut s = Diag::<f64>::zeros(m.min(n));
    let par = Par::Seq;
    let mut buf = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    ));
    svd::svd(
        a.as_ref(),
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Svd(format!("{m}x{n} matrix: {e:?}")))?;
    SingularValueSeq::from_unsorted(s.column_vector().iter().copied().collect())
}

pub fn singular_values(a: &OperatorMatrix) -> Result<SingularValueSeq> {
    singular_values_of(a.entries()).map_err(|e| match e {
        Error::Svd(msg) => Error::Svd(format!("{msg} on a {:?} grid in the {:?} space", a.grid().points_per_dim(), a.space())),
        other => other,
    })
}

/// `sup_k (k+1)^{1/p} μ_k`
pub fn weak_quasinorm(s: &SingularValueSeq, p: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::Spectrum("weak quasinorm of an empty sequence".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Spectrum(format!("p must be positive, got {p}")));
    }
    Ok(s.values
        .iter()
        .enumerate()
        .map(|(k, v)| ((k + 1) as f64).powf(1.0 / p) * v)
        .fold(0.0, f64::max))
}

/// Whether every prefix sum of `g` is at most the matching prefix sum of `f`; the shorter
/// sequence is padded with zeros.
pub fn submajorize_check(g: &SingularValueSeq, f: &SingularValueSeq) -> bool {
    let len = g.len().max(f.len());
    let (mut sg, mut sf) = (0.0, 0.0);
    for t in 0..len {
        sg += g.values.get(t).copied().unwrap_or(0.0);
        sf += f.values.get(t).copied().unwrap_or(0.0);
        if sg > sf {
            return false;
        }
    }
    true
}

/// Default fit window `[⌈N^lo⌉, ⌊N^hi⌋]` as 0-based indices.
pub fn default_window(len: usize, lo_exp: f64, hi_exp: f64) -> (usize, usize) {
    let n = len as f64;
    let lo = n.powf(lo_exp).ceil() as usize;
    let hi = (n.powf(hi_exp).floor() as usize).min(len.saturating_sub(1));
    (lo, hi)
}

/// Least-squares power law `μ_k ≈ C (k+1)^{exponent}` on a window of indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// Coefficient with the exponent held at `-1/p`.
    pub pinned_coefficient: f64,
    /// Inclusive index range.
    pub window: [usize; 2],
    /// Root-mean-square log residual of the free fit.
    pub residual: f64,
    pub pinned_residual: f64,
}

pub fn weyl_fit(s: &SingularValueSeq, p: f64, window: (usize, usize)) -> Result<WeylFit> {
    let (lo, hi) = window;
    if !(p > 0.0) {
        return Err(Error::Spectrum(format!("p must be positive, got {p}")));
    }
    if hi >= s.len() || lo > hi || hi - lo < 1 {
        return Err(Error::Spectrum(format!(
            "fit window [{lo}, {hi}] is empty or outside a sequence of length {}",
            s.len()
        )));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for k in lo..=hi {
        let v = s.values[k];
        if v <= 0.0 {
            return Err(Error::Spectrum(format!("zero singular value at index {k} inside the fit window")));
        }
        xs.push(((k + 1) as f64).ln());
        ys.push(v.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = |b: f64, c: f64| {
        (xs.iter().zip(&ys).map(|(x, y)| (y - c - b * x).powi(2)).sum::<f64>() / m).sqrt()
    };
    let pinned = -1.0 / p;
    let pinned_intercept = my - pinned * mx;
    Ok(WeylFit {
        exponent: slope,
        coefficient: intercept.exp(),
        pinned_coefficient: pinned_intercept.exp(),
        window: [lo, hi],
        residual: rms(slope, intercept),
        pinned_residual: rms(pinned, pinned_intercept),
    })
}

/// `index,mu,weighted_mu` with `weighted_mu = (index+1)^{1/p} mu`.
pub fn spectrum_csv(s: &SingularValueSeq, p: f64) -> String {
    let mut out = String::from("index,mu,weighted_mu\n");
    for (k, v) in s.values.iter().enumerate() {
        let w = ((k + 1) as f64).powf(1.0 / p) * v;
        let _ = writeln!(out, "{k},{v:e},{w:e}");
    }
    out
}
