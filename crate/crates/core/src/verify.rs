//! The acceptance suite: twelve numbered checks with tolerances and runtime budgets.
//!
//! ```no_run
//! for c in brsl::verify::run_all(0) {
//!     println!("{c}");
//! }
//! ```

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::aux_fn::{decompose, derivative_bound_probe, f_value, f_zero, f_zero_extrapolated, AuxIndex, FTable};
use crate::discretize::{assemble, conjugate_weight, BoxGrid, Conjugation, SpaceTag};
use crate::error::Result;
use crate::experiment::{commutator_spectrum, compare_runs, execute, ExperimentConfig, Pipeline, SpectrumRun};
use crate::kernels::spectral::hs_trace_gaussian;
use crate::kernels::{
    invsqrt_kernel_closed, invsqrt_kernel_subordination, ratio_bound_check, spectral_kernel, BesselRiesz, Commutator,
    FnKernel, HalfSpacePoint, HeatKernel, Kernel, SchurFormCommutator, RadialProfile, SpectralOptions,
};
use crate::special_fn::{bessel_j, gamma, ModelParams};
use crate::spectra::singular_values;
use crate::symbol::Symbol;

pub const CRITERIA: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let budget = self.budget_seconds.map(|b| format!(" / {b:.0} s")).unwrap_or_default();
        write!(
            f,
            "[{}] {:>2} {}: measured {:.3e}, tolerance {:.3e}, {:.1} s{budget}; {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

/// The six `(n, λ)` combinations with `n ∈ {1, 2}`, `λ ∈ {½, 1, 3/2}`.
pub fn param_grid() -> Vec<ModelParams> {
    let mut out = Vec::new();
    for n in [1, 2] {
        for lambda in [0.5, 1.0, 1.5] {
            out.push(ModelParams { n, lambda, k: 1 });
        }
    }
    out
}

/// `F_{2,0}(0) = Γ(λ)Γ(n/2 + 1) / (2Γ(λ + n/2 + 1))`
pub fn f20_zero_beta(p: &ModelParams) -> f64 {
    let h = 0.5 * p.n as f64;
    gamma(p.lambda) * gamma(h + 1.0) / (2.0 * gamma(p.lambda + h + 1.0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

struct Outcome {
    measured: f64,
    tolerance: f64,
    pass: bool,
    detail: String,
}

impl Outcome {
    fn at_most(measured: f64, tolerance: f64, detail: String) -> Self {
        Self {
            measured,
            tolerance,
            pass: measured <= tolerance,
            detail,
        }
    }
}

/// Runs the suite. Criteria 9 and 10 share one set of spectra, and criterion 11 reuses its
/// 48-point matrix.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    let mut v = Verifier::new(seed);
    CRITERIA.iter().map(|&id| v.criterion(id)).collect()
}

/// Runs one criterion.
pub fn run_criterion(id: u32, seed: u64) -> CriterionResult {
    Verifier::new(seed).criterion(id)
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "half-order Bessel closed form",
        2 => "F-function limits at 0",
        3 => "small-x decomposition of F",
        4 => "derivative envelope of F",
        5 => "three inverse square root kernels agree",
        6 => "last-coordinate ratio bound",
        7 => "commutator kernel equals its Schur form",
        8 => "Hilbert-Schmidt norm of f times heat semigroup",
        9 => "weak quasinorm stable under refinement",
        10 => "Weyl exponent and coefficient ratio",
        11 => "weight conjugation keeps singular values",
        12 => "deterministic artifacts across thread counts",
        _ => "unknown criterion",
    }
}

fn budget(id: u32) -> Option<f64> {
    match id {
        1 => Some(1.0),
        2 => Some(10.0),
        3 | 4 | 7 => Some(30.0),
        5 => Some(120.0),
        6 => Some(10.0),
        8 => Some(300.0),
        9 => Some(600.0),
        10 => Some(1200.0),
        11 => Some(60.0),
        _ => None,
    }
}

/// Spectra for criteria 9 to 11.
pub struct SpectralStudy {
    /// `(points per axis, run for f, run for g)`
    pub levels: Vec<(usize, SpectrumRun, SpectrumRun)>,
    pub constant_largest: f64,
    pub config: ExperimentConfig,
    pub seconds: f64,
}

/// Points per axis used by the spectral study.
pub const STUDY_LEVELS: [usize; 3] = [32, 48, 64];

pub fn spectral_study() -> Result<SpectralStudy> {
    let t = Instant::now();
    let config = ExperimentConfig::default_experiment();
    let riesz = config.bessel_riesz()?;
    let g = config.comparison.clone().expect("default experiment has a comparison symbol");
    let mut levels = Vec::new();
    for m in STUDY_LEVELS {
        let grid = Arc::new(BoxGrid::uniform(&config.domain.pairs(), m)?);
        let rf = commutator_spectrum(&riesz, &config.symbol, &grid, &config.fit)?;
        let rg = commutator_spectrum(&riesz, &g, &grid, &config.fit)?;
        levels.push((m, rf, rg));
    }
    let grid = Arc::new(BoxGrid::uniform(&config.domain.pairs(), STUDY_LEVELS[0])?);
    let constant = commutator_spectrum(&riesz, &Symbol::Constant { value: 1.0 }, &grid, &config.fit)?;
    Ok(SpectralStudy {
        levels,
        constant_largest: constant.summary.largest,
        config,
        seconds: t.elapsed().as_secs_f64(),
    })
}

struct Verifier {
    seed: u64,
    study: Option<std::result::Result<SpectralStudy, String>>,
}

impl Verifier {
    fn new(seed: u64) -> Self {
        Self { seed, study: None }
    }

    /// Builds the shared spectra on first use; returns the build time on that call only.
    fn study(&mut self) -> (std::result::Result<&SpectralStudy, String>, f64) {
        let mut spent = 0.0;
        if self.study.is_none() {
            let s = spectral_study().map_err(|e| e.to_string());
            spent = s.as_ref().map(|s| s.seconds).unwrap_or(0.0);
            self.study = Some(s);
        }
        let s = self.study.as_ref().expect("just set");
        (s.as_ref().map_err(|e| e.clone()), spent)
    }

    fn criterion(&mut self, id: u32) -> CriterionResult {
        let t = Instant::now();
        let mut extra = 0.0;
        let out = match id {
            1 => c1(),
            2 => c2(),
            3 => c3(),
            4 => c4(),
            5 => c5(self.seed),
            6 => c6(self.seed),
            7 => c7(self.seed),
            8 => c8(),
            9 | 10 | 11 => {
                let (study, spent) = self.study();
                extra = if spent > 0.0 { 0.0 } else { study.as_ref().map(|s| s.seconds).unwrap_or(0.0) };
                match study {
                    Ok(s) => match id {
                        9 => c9(s),
                        10 => c10(s),
                        _ => c11(s),
                    },
                    Err(e) => Err(crate::Error::Spectrum(e)),
                }
            }
            12 => c12(),
            _ => Err(crate::Error::InvalidParams(format!("no criterion {id}"))),
        };
        // 9 and 10 are charged the full study time even when it was built for the other.
        let seconds = t.elapsed().as_secs_f64() + if id == 11 { 0.0 } else { extra };
        let budget_seconds = budget(id);
        let in_budget = budget_seconds.map(|b| seconds <= b).unwrap_or(true);
        match out {
            Ok(o) => CriterionResult {
                id,
                title: title(id).into(),
                pass: o.pass && in_budget,
                measured: o.measured,
                tolerance: o.tolerance,
                detail: if in_budget { o.detail } else { format!("over the time budget; {}", o.detail) },
                seconds,
                budget_seconds,
            },
            Err(e) => CriterionResult {
                id,
                title: title(id).into(),
                pass: false,
                measured: f64::NAN,
                tolerance: f64::NAN,
                detail: format!("error: {e}"),
                seconds,
                budget_seconds,
            },
        }
    }
}

fn c1() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let x = 1e-3 * 1e5f64.powf(i as f64 / 99.0);
        let exact = (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin();
        worst = worst.max(rel(bessel_j(0.5, x)?, exact));
    }
    Ok(Outcome::at_most(worst, 1e-12, "max relative error on 100 log-spaced x in [1e-3, 100]".into()))
}

fn c2() -> Result<Outcome> {
    let mut worst_odd = 0.0f64;
    let mut worst_f20 = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for p in param_grid() {
        for idx in [AuxIndex::F11, AuxIndex::F21] {
            worst_odd = worst_odd
                .max(f_zero(idx, &p)?.abs())
                .max(f_zero_extrapolated(idx, &p, 1e-3, 6)?.abs());
        }
        let beta = f20_zero_beta(&p);
        worst_oracle = worst_oracle.max(rel(f_zero_extrapolated(AuxIndex::F20, &p, 1e-3, 6)?, beta));
        worst_f20 = worst_f20.max(rel(f_zero(AuxIndex::F20, &p)?, beta));
    }
    let pass = worst_odd <= 1e-8 && worst_oracle <= 1e-6 && worst_f20 <= 1e-6;
    Ok(Outcome {
        measured: worst_f20,
        tolerance: 1e-6,
        pass,
        detail: format!(
            "|F11(0)|, |F21(0)| <= {worst_odd:.1e} (tol 1e-8); numerical limit vs Beta form {worst_oracle:.1e}; \
             F20(0) vs Beta form {worst_f20:.1e}"
        ),
    })
}

fn c3() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for p in param_grid() {
        for idx in AuxIndex::ALL {
            for x in [0.1, 0.5, 1.0] {
                let d = decompose(idx, &p, x)?;
                worst = worst.max((f_value(idx, &p, x)? - d.value).abs());
            }
        }
    }
    Ok(Outcome::at_most(worst, 1e-8, "max |F - decomposition| over 3 x, 3 indices, 6 (n, λ)".into()))
}

fn c4() -> Result<Outcome> {
    let xs: Vec<f64> = (0..24).map(|i| 10f64.powf(1.0 + i as f64 / 8.0)).collect();
    let mut failures = Vec::new();
    let mut worst_sup = 0.0f64;
    let mut probes = 0;
    for p in param_grid() {
        for idx in AuxIndex::ALL {
            for j in 0..=2 {
                let probe = derivative_bound_probe(idx, &p, j, &xs)?;
                probes += 1;
                worst_sup = worst_sup.max(probe.sup);
                if !(probe.sup.is_finite() && probe.saturating() && !probe.unbounded_growth) {
                    failures.push(format!("{} j={j} n={} λ={}", idx.label(), p.n, p.lambda));
                }
            }
        }
    }
    Ok(Outcome {
        measured: failures.len() as f64,
        tolerance: 0.0,
        pass: failures.is_empty(),
        detail: format!(
            "{probes} probes on [10, 1e4), largest scaled sup {worst_sup:.3e}; decade changes must not grow{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    })
}

/// Pairs in `[-1, 1] × [0.5, 2.5]` at distance at least 0.5 with `|x_1 - y_1| ≥ 0.05`.
fn separated_pairs(count: usize, seed: u64) -> Result<Vec<(HalfSpacePoint, HalfSpacePoint)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = HalfSpacePoint::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.5)])?;
        let y = HalfSpacePoint::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.5)])?;
        if x.dist(&y) >= 0.5 && (x.coords()[0] - y.coords()[0]).abs() >= 0.05 {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn c5(seed: u64) -> Result<Outcome> {
    let pairs = separated_pairs(20, seed)?;
    let opts = SpectralOptions::default();
    let mut worst = 0.0f64;
    for lambda in [0.5, 1.0, 1.5] {
        let p = ModelParams { n: 1, lambda, k: 1 };
        for (x, y) in &pairs {
            let a = invsqrt_kernel_closed(&p, x, y)?;
            let b = invsqrt_kernel_subordination(&p, x, y)?;
            let c = spectral_kernel(&p, RadialProfile::InverseRadius, x, y, &opts)?.value;
            worst = worst.max(rel(a, b)).max(rel(a, c)).max(rel(b, c));
        }
    }
    Ok(Outcome::at_most(
        worst,
        1e-3,
        "max pairwise relative gap, 20 pairs, n = 1, λ in {0.5, 1, 1.5}".into(),
    ))
}

fn c6(seed: u64) -> Result<Outcome> {
    let r = ratio_bound_check(1, 100_000, seed)?;
    let (lo, hi) = r.bounds;
    let violations = if r.min_ratio >= lo && r.max_ratio <= hi { 0.0 } else { 1.0 };
    Ok(Outcome {
        measured: violations,
        tolerance: 0.0,
        pass: violations == 0.0 && r.accepted == 100_000,
        detail: format!(
            "{} accepted of {} drawn, ratios in [{:.4}, {:.4}] within [{lo:.4}, {hi:.4}]",
            r.accepted, r.drawn, r.min_ratio, r.max_ratio
        ),
    })
}

fn c7(seed: u64) -> Result<Outcome> {
    let f = Symbol::gaussian(vec![0.1, 1.2], 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for k in [2, 1] {
        let p = ModelParams { n: 1, lambda: 1.0, k };
        let table = Arc::new(FTable::new(&p)?);
        let lhs = Commutator::new(BesselRiesz::with_table(table.clone()), f.clone());
        let rhs = SchurFormCommutator::new(table, f.clone());
        let mut drawn = 0;
        while drawn < 1000 {
            let x = HalfSpacePoint::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.2)])?;
            let y = HalfSpacePoint::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.2)])?;
            if x.dist(&y) < 1e-3 {
                continue;
            }
            drawn += 1;
            let (a, b) = (lhs.eval(&x, &y)?, rhs.eval(&x, &y)?);
            if a != 0.0 || b != 0.0 {
                worst = worst.max(rel(a, b));
                compared += 1;
            }
        }
    }
    Ok(Outcome::at_most(
        worst,
        1e-10,
        format!("max relative gap over {compared} nonzero pairs, k = 2 and k = 1, n = 1, λ = 1"),
    ))
}

/// Frobenius norm² of the matrix of `M_f e^{-s²Δ_λ}` on `points`² against the quadrature value.
pub fn hs_identity_gap(points: usize) -> Result<(f64, f64, f64)> {
    let p = ModelParams { n: 1, lambda: 1.0, k: 1 };
    let (center, width, s) = (vec![0.0, 1.5], 0.3, 0.05);
    let exact = hs_trace_gaussian(&p, &center, width, 1.0, s)?;
    let f = Symbol::gaussian(center, width);
    let heat = HeatKernel::new(&p, s)?.with_cutoff(40.0);
    let kernel = FnKernel::smooth(move |x: &HalfSpacePoint, y: &HalfSpacePoint| Ok(f.value(x.coords()) * heat.eval(x, y)?));
    let grid = Arc::new(BoxGrid::uniform(&[(-1.4, 1.4), (0.2, 2.8)], points)?);
    let a = assemble(&kernel, &grid, SpaceTag::Weighted, p.lambda)?;
    let fro2 = a.frobenius_norm().powi(2);
    Ok((fro2, exact, (fro2 - exact).abs() / exact))
}

fn c8() -> Result<Outcome> {
    let (fro32, exact, e32) = hs_identity_gap(32)?;
    let (_, _, e64) = hs_identity_gap(64)?;
    Ok(Outcome {
        measured: e32,
        tolerance: 0.02,
        pass: e32 <= 0.02 && e64 < e32,
        detail: format!(
            "Gaussian f (w 0.3), heat time s = 0.05: |A|_F² = {fro32:.6} vs {exact:.6} at 32², relative error {e64:.1e} at 64²"
        ),
    })
}

fn c9(s: &SpectralStudy) -> Result<Outcome> {
    let q = |m: usize| s.levels.iter().find(|l| l.0 == m).map(|l| l.1.summary.weak_quasinorm).expect("level present");
    let (a, b) = (q(32), q(64));
    let drift = (b - a).abs() / a;
    let pass = drift <= 0.1 && s.constant_largest == 0.0;
    Ok(Outcome {
        measured: drift,
        tolerance: 0.1,
        pass,
        detail: format!(
            "weak L_(2,∞) quasinorm {a:.5} (32²) -> {:.5} (48²) -> {b:.5} (64²); constant symbol largest singular value {:e}",
            q(48),
            s.constant_largest
        ),
    })
}

fn c10(s: &SpectralStudy) -> Result<Outcome> {
    let cfg = &s.config;
    let g = cfg.comparison.as_ref().expect("comparison symbol");
    let target = -1.0 / (cfg.params.n + 1) as f64;
    let mut exp_err = Vec::new();
    let mut ratio_gap = Vec::new();
    for (m, rf, rg) in &s.levels {
        let grid = BoxGrid::uniform(&cfg.domain.pairs(), *m)?;
        let fit = rf.summary.fit.ok_or_else(|| crate::Error::Spectrum("empty spectrum".into()))?;
        exp_err.push((*m, fit.exponent, (fit.exponent - target).abs()));
        let r = compare_runs(&cfg.params, rf, rg, &cfg.symbol, g, &grid, cfg.tolerances.ratio)?;
        ratio_gap.push((*m, r.relative_gap));
    }
    let at = |v: &[(usize, f64)], m: usize| v.iter().find(|e| e.0 == m).map(|e| e.1).expect("level present");
    let exps: Vec<(usize, f64)> = exp_err.iter().map(|e| (e.0, e.2)).collect();
    let (e32, e48, e64) = (at(&exps, 32), at(&exps, 48), at(&exps, 64));
    let (r32, r48, r64) = (at(&ratio_gap, 32), at(&ratio_gap, 48), at(&ratio_gap, 64));
    let (te, tr) = (cfg.tolerances.exponent, cfg.tolerances.ratio);
    // "hold" means still inside the tolerance after the doubling
    let pass = e48 <= te && r48 <= tr && e64 <= te && r64 <= tr && (e64 <= e32 || e64 <= te) && (r64 <= r32 || r64 <= tr);
    let exps_txt: Vec<String> = exp_err.iter().map(|(m, e, _)| format!("{e:.4} ({m}²)")).collect();
    Ok(Outcome {
        measured: e48,
        tolerance: te,
        pass,
        detail: format!(
            "free exponents {} against {target}; ratio gaps {:.3} / {:.3} / {:.3} at 32² / 48² / 64² (tol {tr})",
            exps_txt.join(", "),
            r32,
            r48,
            r64
        ),
    })
}

fn c11(s: &SpectralStudy) -> Result<Outcome> {
    let run = &s.levels.iter().find(|l| l.0 == 48).expect("48 level").1;
    let conj = conjugate_weight(&run.matrix, Conjugation::ToUnweighted)?;
    let after = singular_values(&conj)?;
    let worst = run
        .spectrum
        .values()
        .iter()
        .zip(after.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Outcome::at_most(
        worst,
        1e-12,
        format!("max elementwise difference over {} singular values (48² default experiment)", after.len()),
    ))
}

fn c12() -> Result<Outcome> {
    let mut spectrum = ExperimentConfig::default_experiment();
    spectrum.domain.points_per_dim = vec![16, 16];
    spectrum.symbol = Symbol::cosine(vec![0.5, 1.0], 0.35);
    spectrum.comparison = None;
    spectrum.write_matrix = true;
    let mut aux = spectrum.clone();
    aux.pipeline = Pipeline::Auxfn;
    let mut kernel = spectrum.clone();
    kernel.pipeline = Pipeline::Kernel;
    kernel.samples = 5;
    let configs = [spectrum, aux, kernel];
    let artifacts = |threads: usize| -> Result<Vec<(String, Vec<u8>)>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::InvalidParams(e.to_string()))?;
        let mut out = Vec::new();
        for c in &configs {
            let run = pool.install(|| execute(c))?;
            out.extend(
                run.artifacts
                    .into_iter()
                    .filter(|a| a.name != "report.json")
                    .map(|a| (format!("{}/{}", c.pipeline.name(), a.name), a.bytes)),
            );
        }
        Ok(out)
    };
    let base = artifacts(1)?;
    let mut mismatched = Vec::new();
    for threads in [1, 3] {
        for ((name, a), (_, b)) in base.iter().zip(artifacts(threads)?.iter()) {
            if a != b {
                mismatched.push(format!("{name} at {threads} threads"));
            }
        }
    }
    let names: Vec<&str> = base.iter().map(|a| a.0.as_str()).collect();
    Ok(Outcome {
        measured: mismatched.len() as f64,
        tolerance: 0.0,
        pass: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("{} identical across reruns with 1 and 3 threads", names.join(", "))
        } else {
            format!("differs: {}", mismatched.join(", "))
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 3, 6] {
            let r = run_criterion(id, 0);
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(13, 0);
        assert!(!r.pass);
        assert!(r.to_string().starts_with("[FAIL] 13"));
    }

    #[test]
    fn beta_form_at_half() {
        // n = 1, λ = ½: Γ(½)Γ(3/2)/(2Γ(2)) = π/4
        let p = ModelParams { n: 1, lambda: 0.5, k: 1 };
        assert!((f20_zero_beta(&p) - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }
}
