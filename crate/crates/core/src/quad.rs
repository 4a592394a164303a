//! One-dimensional quadrature used by every integral in the crate.
//!
//! Three tools live here:
//!
//! - [`gauss_legendre`]: fixed nodes and weights on `[-1, 1]`, computed by Newton
//!   iteration on the three-term Legendre recurrence.
//! - [`Adaptive`]: globally adaptive Gauss–Kronrod (G10/K21) integration with optional
//!   initial breakpoints. The interval with the largest error estimate is bisected
//!   until the summed estimate is below `max(abs_tol, rel_tol * |I|)`.
//! - [`Adaptive::integrate_endpoint_powers`]: integrals of the form
//!   `∫_a^b (t-a)^α (b-t)^β h(t) dt` with `α, β > -1`. Each half of the interval is
//!   mapped by `t - a = L v^{1/(α+1)}` (and the mirror image at `b`), which absorbs the
//!   algebraic endpoint factor exactly and leaves a bounded integrand in `v`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [0, 1]; odd positions (1, 3, ...) are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_712_788_815,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of a quadrature: value plus an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = x;
        nodes[i] = -x;
        weights[m - 1 - i] = w;
        weights[i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if m == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = m as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Fixed Gauss–Legendre rule mapped to `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(m: usize) -> Self {
        let (nodes, weights) = gauss_legendre(m);
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Single G10/K21 panel on `[a, b]`.
pub fn kronrod21(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut fvals = [0.0; 20];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fvals[2 * j] = f1;
        fvals[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * h;
    let gauss = gauss * h;

    // QUADPACK-style error scaling.
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fvals[2 * j] - mean).abs() + (fvals[2 * j + 1] - mean).abs());
    }
    let asc = asc * h.abs();
    let mut err = (value - gauss).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    Estimate { value, error: err }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive Gauss–Kronrod integrator.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-13,
            max_segments: 4000,
        }
    }
}

impl Adaptive {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_segments(mut self, max_segments: usize) -> Self {
        self.max_segments = max_segments;
        self
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl FnMut(f64) -> f64) -> Result<Estimate> {
        self.integrate_with_breaks(a, b, &[], f)
    }

    /// Integrate over `[a, b]`, starting from the partition induced by `breaks`
    /// (points outside `(a, b)` are ignored).
    pub fn integrate_with_breaks(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
            });
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut points = vec![lo];
        let mut inner: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&p| p > lo && p < hi && p.is_finite())
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        points.extend(inner);
        points.push(hi);

        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in points.windows(2) {
            let est = kronrod21(w[0], w[1], &mut f);
            total += est.value;
            total_err += est.error;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                est,
            });
        }
        if !total.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                tolerance: self.abs_tol,
            });
        }
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if heap.len() >= self.max_segments {
                return Err(Error::Quadrature {
                    estimate: sign * total,
                    error: total_err,
                    tolerance: self.abs_tol.max(self.rel_tol * total.abs()),
                });
            }
            let seg = heap.pop().expect("heap is never empty");
            let m = 0.5 * (seg.a + seg.b);
            if m <= seg.a || m >= seg.b {
                // Interval can no longer be split in floating point; accept what we have.
                heap.push(seg);
                break;
            }
            let left = kronrod21(seg.a, m, &mut f);
            let right = kronrod21(m, seg.b, &mut f);
            total += left.value + right.value - seg.est.value;
            total_err += left.error + right.error - seg.est.error;
            heap.push(Segment {
                a: seg.a,
                b: m,
                est: left,
            });
            heap.push(Segment {
                a: m,
                b: seg.b,
                est: right,
            });
            // Recompute the error sum now and then to avoid drift from cancellation.
            if heap.len() % 64 == 0 {
                total_err = heap.iter().map(|s| s.est.error).sum();
                total = heap.iter().map(|s| s.est.value).sum();
            }
        }
        let value: f64 = heap.iter().map(|s| s.est.value).sum();
        let error: f64 = heap.iter().map(|s| s.est.error).sum();
        Ok(Estimate {
            value: sign * value,
            error,
        })
    }

    /// `∫_a^b (t-a)^alpha (b-t)^beta h(t) dt` for `alpha, beta > -1` and bounded `h`.
    ///
    /// `h` receives `(t, t - a, b - t)`, with both distances computed without cancellation.
    /// `hints` are points in `(a, b)` where `h` has fine structure (peaks); they are
    /// mapped into the substituted variables and used as initial breakpoints.
    pub fn integrate_endpoint_powers(
        &self,
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        hints: &[f64],
        h: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Estimate> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::Domain(format!(
                "endpoint exponents must exceed -1, got ({alpha}, {beta})"
            )));
        }
        let len = b - a;
        let half = 0.5 * len;
        let ga = 1.0 / (alpha + 1.0);
        let gb = 1.0 / (beta + 1.0);
        let scale_a = half.powf(alpha + 1.0) * ga;
        let scale_b = half.powf(beta + 1.0) * gb;

        let left_breaks: Vec<f64> = hints
            .iter()
            .filter(|&&t| t > a && t < a + half)
            .flat_map(|&t| geometric_ladder(((t - a) / half).powf(alpha + 1.0)))
            .collect();
        let right_breaks: Vec<f64> = hints
            .iter()
            .filter(|&&t| t < b && t > b - half)
            .flat_map(|&t| geometric_ladder(((b - t) / half).powf(beta + 1.0)))
            .collect();

        // Each half integral is normalised so the relative tolerance applies to the sum.
        let left = self.integrate_with_breaks(0.0, 1.0, &left_breaks, |v| {
            let da = half * v.powf(ga);
            let db = len - da;
            scale_a * db.powf(beta) * h(a + da, da, db)
        })?;
        let right = self.integrate_with_breaks(0.0, 1.0, &right_breaks, |v| {
            let db = half * v.powf(gb);
            let da = len - db;
            scale_b * da.powf(alpha) * h(b - db, da, db)
        })?;
        Ok(Estimate {
            value: left.value + right.value,
            error: left.error + right.error,
        })
    }
}

/// Breakpoints `v/16, v/4, v, 4v, 16v, ...` below 1: a feature at `v` decays
/// algebraically on both sides, and a single break leaves the far side unresolved.
pub fn geometric_ladder(v: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(v > 0.0 && v < 1.0) {
        return out;
    }
    let mut x = v / 16.0;
    while x < 1.0 {
        out.push(x);
        x *= 4.0;
    }
    out
}

/// Integral over `[a, ∞)` via `t = a + (1-u)/u`, `u ∈ (0, 1]`.
pub fn integrate_to_infinity(
    q: &Adaptive,
    a: f64,
    f: impl Fn(f64) -> f64,
) -> Result<Estimate> {
    q.integrate(0.0, 1.0, |u| {
        if u <= 0.0 {
            return 0.0;
        }
        let t = a + (1.0 - u) / u;
        let v = f(t) / (u * u);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    })
}
