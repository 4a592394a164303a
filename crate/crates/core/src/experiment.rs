//! JSON-configured experiments: commutator spectra, Weyl fits, seminorm ratios and the
//! artifacts (`spectrum.csv`, `fit.json`, `report.json`, `matrix.bin`) they produce.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aux_fn::{f_decomposed, f_value, f_zero, g_value, AuxIndex, FTable};
use crate::discretize::{
    assemble, make_grid_with_cap, BoxGrid, DiagonalBias, OperatorMatrix, SpaceTag, DEFAULT_NODE_CAP,
};
use crate::error::{Error, Result};
use crate::kernels::spectral::{spectral_kernel, RadialProfile, SpectralOptions};
use crate::kernels::{
    invsqrt_kernel_closed, invsqrt_kernel_subordination, taylor_local_check, BesselRiesz, Commutator, HalfSpacePoint,
    Kernel, SchurFormCommutator,
};
use crate::matrix_io;
use crate::sobolev::{sobolev_report, directional_seminorm, SphereRule};
use crate::special_fn::{ModelParams, Normalization};
use crate::spectra::{default_window, singular_values, spectrum_csv, weak_quasinorm, weyl_fit, SingularValueSeq, WeylFit};
use crate::symbol::Symbol;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    /// `[a_i, b_i]` per coordinate, the last one with `a_{n+1} > 0`.
    pub bounds: Vec<[f64; 2]>,
    pub points_per_dim: Vec<usize>,
}

impl BoxConfig {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.bounds.iter().map(|b| (b[0], b[1])).collect()
    }

    /// Grid with every point count multiplied by `2^level`.
    pub fn grid_at(&self, level: u32, cap: usize) -> Result<BoxGrid> {
        let ppd: Vec<usize> = self.points_per_dim.iter().map(|m| m << level).collect();
        make_grid_with_cap(&self.pairs(), &ppd, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Auxfn,
    Kernel,
    Spectrum,
    Sobolev,
    Verify,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Auxfn => "auxfn",
            Pipeline::Kernel => "kernel",
            Pipeline::Spectrum => "spectrum",
            Pipeline::Sobolev => "sobolev",
            Pipeline::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Window `[⌈N^lo⌉, ⌊N^hi⌋]`.
    pub lo_exponent: f64,
    pub hi_exponent: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lo_exponent: 0.3,
            hi_exponent: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Left end of the tabulated range of `F_{k,l}`.
    pub table_x_min: f64,
    /// Number of octave panels in the table.
    pub table_panels: usize,
    pub table_degree: usize,
    /// Relative tolerance of the truncated spectral integral.
    pub spectral_rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            table_x_min: 1e-4,
            table_panels: 27,
            table_degree: 24,
            spectral_rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed `|exponent + 1/(n+1)|` of the free fit.
    pub exponent: f64,
    /// Allowed relative gap between coefficient and seminorm ratios.
    pub ratio: f64,
    /// Allowed relative change of the weak quasinorm between refinement levels.
    pub quasinorm_drift: f64,
    /// Three-way agreement of the `Δ_λ^{-1/2}` kernels.
    pub kernel_agreement: f64,
    /// Relative gap in the Schur-multiplier identity.
    pub schur_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exponent: 0.1,
            ratio: 0.15,
            quasinorm_drift: 0.1,
            kernel_agreement: 1e-3,
            schur_identity: 1e-10,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_node_cap() -> usize {
    DEFAULT_NODE_CAP
}

fn default_samples() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    #[serde(rename = "box")]
    pub domain: BoxConfig,
    pub symbol: Symbol,
    /// Second symbol for the ratio experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Symbol>,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_node_cap")]
    pub node_cap: usize,
    /// Grid doublings in the spectrum pipeline.
    #[serde(default)]
    pub refine: u32,
    #[serde(default)]
    pub seed: u64,
    /// Point pairs drawn by the kernel pipeline.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub write_matrix: bool,
    /// Exponent of the seminorms; `n + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_p: Option<f64>,
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// `n = 1`, `λ = 1`, `k = 2` on `[0, 1] × [0.5, 1.5]` with 48 points per axis, a cosine bump
    /// of radius 0.4 and a coordinate window as comparison symbol.
    pub fn default_experiment() -> Self {
        Self {
            params: ModelParams { n: 1, lambda: 1.0, k: 2 },
            domain: BoxConfig {
                bounds: vec![[0.0, 1.0], [0.5, 1.5]],
                points_per_dim: vec![48, 48],
            },
            symbol: Symbol::cosine(vec![0.5, 1.0], 0.4),
            comparison: Some(Symbol::CoordinateWindow {
                lo: vec![0.1, 0.6],
                hi: vec![0.9, 1.4],
                ramp: 0.3,
                amplitude: 1.0,
            }),
            pipeline: Pipeline::Spectrum,
            fit: FitConfig::default(),
            quadrature: QuadratureConfig::default(),
            tolerances: Tolerances::default(),
            normalization: Normalization::default(),
            output_dir: default_output_dir(),
            node_cap: DEFAULT_NODE_CAP,
            refine: 0,
            seed: 0,
            samples: default_samples(),
            write_matrix: false,
            sobolev_p: None,
        }
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serializes"));
        let mut s = String::with_capacity(64);
        for b in digest {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    pub fn sobolev_p(&self) -> f64 {
        self.sobolev_p.unwrap_or((self.params.n + 1) as f64)
    }

    pub fn grid(&self) -> Result<BoxGrid> {
        self.domain.grid_at(0, self.node_cap)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| config_err("params", e.to_string()))?;
        let d = self.params.dim();
        if self.domain.bounds.len() != d {
            return Err(config_err(
                "box.bounds",
                format!("{} intervals given, n + 1 = {d} needed", self.domain.bounds.len()),
            ));
        }
        if self.domain.points_per_dim.len() != d {
            return Err(config_err(
                "box.points_per_dim",
                format!("{} counts given, n + 1 = {d} needed", self.domain.points_per_dim.len()),
            ));
        }
        for (i, b) in self.domain.bounds.iter().enumerate() {
            if !(b[0].is_finite() && b[1].is_finite() && b[1] > b[0]) {
                return Err(config_err(format!("box.bounds[{i}]"), format!("degenerate interval {b:?}")));
            }
        }
        if !(self.domain.bounds[d - 1][0] > 0.0) {
            return Err(config_err(
                format!("box.bounds[{}][0]", d - 1),
                "the box must stay inside the half-space (a_{n+1} > 0)",
            ));
        }
        if self.domain.points_per_dim.iter().any(|&m| m == 0) {
            return Err(config_err("box.points_per_dim", "counts must be positive"));
        }
        let grid = self.grid().map_err(|e| config_err("box", e.to_string()))?;
        self.symbol.validate(d).map_err(|e| config_err("symbol", e.to_string()))?;
        check_clearance(&self.symbol, &grid).map_err(|m| config_err("symbol", m))?;
        if let Some(g) = &self.comparison {
            g.validate(d).map_err(|e| config_err("comparison", e.to_string()))?;
            check_clearance(g, &grid).map_err(|m| config_err("comparison", m))?;
        }
        let f = &self.fit;
        if !(0.0 < f.lo_exponent && f.lo_exponent < f.hi_exponent && f.hi_exponent < 1.0) {
            return Err(config_err("fit", "need 0 < lo_exponent < hi_exponent < 1"));
        }
        let q = &self.quadrature;
        if !(q.table_x_min > 0.0) || q.table_panels == 0 || q.table_degree < 4 {
            return Err(config_err("quadrature", "table needs x_min > 0, panels > 0, degree >= 4"));
        }
        if !(q.spectral_rel_tol > 0.0) {
            return Err(config_err("quadrature.spectral_rel_tol", "must be positive"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("exponent", t.exponent),
            ("ratio", t.ratio),
            ("quasinorm_drift", t.quasinorm_drift),
            ("kernel_agreement", t.kernel_agreement),
            ("schur_identity", t.schur_identity),
        ] {
            if !(v > 0.0) {
                return Err(config_err(format!("tolerances.{name}"), "must be positive"));
            }
        }
        if let Some(p) = self.sobolev_p {
            if !(p > 1.0) {
                return Err(config_err("sobolev_p", "must be > 1"));
            }
        }
        if self.refine > 0 {
            self.domain
                .grid_at(self.refine, self.node_cap)
                .map_err(|e| config_err("refine", e.to_string()))?;
        }
        Ok(())
    }

    fn table(&self) -> Result<Arc<FTable>> {
        let q = &self.quadrature;
        Ok(Arc::new(FTable::with_range(&self.params, q.table_x_min, q.table_panels, q.table_degree)?))
    }

    /// The Bessel–Riesz kernel described by the configuration.
    pub fn bessel_riesz(&self) -> Result<BesselRiesz> {
        Ok(BesselRiesz::with_table(self.table()?).with_normalization(self.normalization))
    }
}

/// Symbols used on a grid must vanish at least 2 cells away from the box edge; constants are
/// accepted.
pub fn check_clearance(f: &Symbol, grid: &BoxGrid) -> std::result::Result<(), String> {
    if f.is_constant() {
        return Ok(());
    }
    match f.support() {
        Some(s) if grid.clears(&s, 2.0) => Ok(()),
        Some(s) => Err(format!("support {s:?} does not clear the box edge by 2 cells")),
        None => Err("symbol is not localised; it must vanish near the box edge".into()),
    }
}

/// Matrix of `[R_{λ,k}, M_f]` on `L_2(m_λ)`.
pub fn commutator_matrix(riesz: &BesselRiesz, f: &Symbol, grid: &Arc<BoxGrid>) -> Result<OperatorMatrix> {
    assemble(&Commutator::new(riesz, f.clone()), grid, SpaceTag::Weighted, riesz.params().lambda)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub points_per_dim: Vec<usize>,
    pub nodes: usize,
    pub p: f64,
    pub largest: f64,
    pub weak_quasinorm: f64,
    /// Absent when the spectrum vanishes.
    pub fit: Option<WeylFit>,
    pub diagonal_bias: Option<DiagonalBias>,
}

pub struct SpectrumRun {
    pub spectrum: SingularValueSeq,
    pub summary: SpectrumSummary,
    pub matrix: OperatorMatrix,
}

/// Assembles the commutator, computes its singular values and fits `μ_k ≈ C (k+1)^{-1/p}`
/// with `p = n + 1`.
pub fn commutator_spectrum(riesz: &BesselRiesz, f: &Symbol, grid: &Arc<BoxGrid>, fit: &FitConfig) -> Result<SpectrumRun> {
    let matrix = commutator_matrix(riesz, f, grid)?;
    let spectrum = singular_values(&matrix)?;
    let p = (riesz.params().n + 1) as f64;
    let largest = spectrum.values().first().copied().unwrap_or(0.0);
    let weyl = if largest > 0.0 {
        Some(weyl_fit(&spectrum, p, default_window(spectrum.len(), fit.lo_exponent, fit.hi_exponent))?)
    } else {
        None
    };
    let summary = SpectrumSummary {
        points_per_dim: grid.points_per_dim().to_vec(),
        nodes: grid.len(),
        p,
        largest,
        weak_quasinorm: weak_quasinorm(&spectrum, p)?,
        fit: weyl,
        diagonal_bias: matrix.diagonal_bias(),
    };
    Ok(SpectrumRun {
        spectrum,
        summary,
        matrix,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioExperiment {
    pub points_per_dim: Vec<usize>,
    pub coefficient_f: f64,
    pub coefficient_g: f64,
    pub seminorm_f: f64,
    pub seminorm_g: f64,
    pub coefficient_ratio: f64,
    pub seminorm_ratio: f64,
    /// `|C_f/C_g - N_f/N_g| / (N_f/N_g)`
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Directional seminorm `‖f‖^{(k)}` with exponent `n + 1`.
pub fn weyl_seminorm(p: &ModelParams, f: &Symbol, grid: &BoxGrid) -> Result<f64> {
    let sphere = SphereRule::for_n(p.n)?;
    directional_seminorm(f, p.k, (p.n + 1) as f64, grid, &sphere)
}

/// Compares pinned Weyl coefficients of two spectra with the seminorm ratio.
pub fn compare_runs(
    p: &ModelParams,
    run_f: &SpectrumRun,
    run_g: &SpectrumRun,
    f: &Symbol,
    g: &Symbol,
    grid: &BoxGrid,
    tolerance: f64,
) -> Result<RatioExperiment> {
    let seminorm_f = weyl_seminorm(p, f, grid)?;
    let seminorm_g = weyl_seminorm(p, g, grid)?;
    for (name, v) in [("f", seminorm_f), ("g", seminorm_g)] {
        if !(v > 1e-12) {
            return Err(Error::Spectrum(format!("seminorm of {name} is degenerate ({v:e})")));
        }
    }
    let coeff = |r: &SpectrumRun, name: &str| {
        r.summary
            .fit
            .map(|w| w.pinned_coefficient)
            .ok_or_else(|| Error::Spectrum(format!("spectrum of {name} vanishes")))
    };
    let coefficient_f = coeff(run_f, "f")?;
    let coefficient_g = coeff(run_g, "g")?;
    let coefficient_ratio = coefficient_f / coefficient_g;
    let seminorm_ratio = seminorm_f / seminorm_g;
    let relative_gap = (coefficient_ratio - seminorm_ratio).abs() / seminorm_ratio;
    Ok(RatioExperiment {
        points_per_dim: grid.points_per_dim().to_vec(),
        coefficient_f,
        coefficient_g,
        seminorm_f,
        seminorm_g,
        coefficient_ratio,
        seminorm_ratio,
        relative_gap,
        tolerance,
        pass: relative_gap <= tolerance,
    })
}

/// `C_f / C_g` against `‖f‖^{(k)} / ‖g‖^{(k)}` on one grid.
pub fn ratio_experiment(
    riesz: &BesselRiesz,
    f: &Symbol,
    g: &Symbol,
    grid: &Arc<BoxGrid>,
    fit: &FitConfig,
    tolerance: f64,
) -> Result<RatioExperiment> {
    let p = *riesz.params();
    let run_f = commutator_spectrum(riesz, f, grid, fit)?;
    let run_g = commutator_spectrum(riesz, g, grid, fit)?;
    compare_runs(&p, &run_f, &run_g, f, g, grid, tolerance)
}

/// Ratio experiment for two configurations that share parameters and grid.
pub fn ratio_experiment_configs(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<RatioExperiment> {
    if a.params != b.params || a.domain != b.domain || a.normalization != b.normalization {
        return Err(config_err("", "ratio experiment needs the same params, box and normalization"));
    }
    let grid = Arc::new(a.grid()?);
    ratio_experiment(&a.bessel_riesz()?, &a.symbol, &b.symbol, &grid, &a.fit, a.tolerances.ratio)
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Assertion {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub library_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub timings: Vec<StageTiming>,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: &str, s: String) -> Self {
        Self {
            name: name.into(),
            bytes: s.into_bytes(),
        }
    }

    fn json<T: Serialize>(name: &str, v: &T) -> Self {
        Self::text(name, serde_json::to_string_pretty(v).expect("serializable") + "\n")
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub artifacts: Vec<Artifact>,
}

struct Stages {
    timings: Vec<StageTiming>,
}

impl Stages {
    fn run<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| Error::Stage {
            stage: stage.into(),
            source: Box::new(e),
        });
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Runs the configured pipeline without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut stages = Stages { timings: Vec::new() };
    let mut artifacts = Vec::new();
    let (results, assertions) = match config.pipeline {
        Pipeline::Auxfn => auxfn_pipeline(config, &mut stages, &mut artifacts)?,
        Pipeline::Kernel => kernel_pipeline(config, &mut stages, &mut artifacts)?,
        Pipeline::Spectrum => spectrum_pipeline(config, &mut stages, &mut artifacts)?,
        Pipeline::Sobolev => sobolev_pipeline(config, &mut stages, &mut artifacts)?,
        Pipeline::Verify => verify_pipeline(config, &mut stages)?,
    };
    let pass = assertions.iter().all(|a| a.pass);
    let report = RunReport {
        library_version: LIBRARY_VERSION.into(),
        config_hash: config.hash(),
        config: config.clone(),
        timings: stages.timings,
        results,
        assertions,
        pass,
    };
    artifacts.push(Artifact::json("report.json", &report));
    Ok(RunOutput { report, artifacts })
}

/// Writes every artifact into `dir`.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

/// [`execute`] followed by writing the artifacts to `config.output_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let out = execute(config)?;
    write_artifacts(&config.output_dir, &out.artifacts)?;
    Ok(out.report)
}

type PipelineResult = Result<(serde_json::Value, Vec<Assertion>)>;

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn auxfn_pipeline(config: &ExperimentConfig, stages: &mut Stages, artifacts: &mut Vec<Artifact>) -> PipelineResult {
    let p = config.params;
    let xs: Vec<f64> = (0..=40).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
    let rows = stages.run("tabulate", || {
        xs.iter()
            .map(|&x| {
                let mut row = vec![x];
                for idx in AuxIndex::ALL {
                    row.push(f_value(idx, &p, x)?);
                }
                for idx in AuxIndex::ALL {
                    row.push(g_value(idx, &p, x)?);
                }
                // the decomposition lives on (0, 1]
                for idx in AuxIndex::ALL {
                    row.push(if x <= 1.0 {
                        (f_value(idx, &p, x)? - f_decomposed(idx, &p, x)?).abs()
                    } else {
                        f64::NAN
                    });
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut csv = String::from("x,F20,F11,F21,G20,G11,G21,resid20,resid11,resid21\n");
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { String::new() } else { format!("{v:e}") })
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    artifacts.push(Artifact::text("auxfn.csv", csv));

    let zeros = stages.run("limits", || {
        AuxIndex::ALL
            .iter()
            .map(|&idx| Ok((idx.label(), f_zero(idx, &p)?)))
            .collect::<Result<Vec<_>>>()
    })?;
    let max_resid = rows.iter().flat_map(|r| r[7..].iter().copied()).fold(0.0, f64::max);
    let odd_zero = zeros.iter().filter(|(l, _)| *l != "F20").map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let assertions = vec![
        Assertion::at_most(
            "decomposition residual",
            max_resid,
            1e-8,
            "max |F - decomposition| over the tabulated x",
        ),
        Assertion::at_most("F11(0), F21(0) vanish", odd_zero, 1e-8, "right limits"),
    ];
    let results = serde_json::json!({
        "rows": rows.len(),
        "x_range": [xs[0], xs[xs.len() - 1]],
        "limits": zeros.iter().map(|(l, v)| serde_json::json!({"index": l, "value": v})).collect::<Vec<_>>(),
        "max_decomposition_residual": max_resid,
    });
    Ok((results, assertions))
}

/// Well-separated pairs inside the configured box.
fn sample_pairs(config: &ExperimentConfig, count: usize) -> Result<Vec<(HalfSpacePoint, HalfSpacePoint)>> {
    let bounds = config.domain.pairs();
    let diam = bounds.iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(Error::Domain("could not draw well-separated pairs in the box".into()));
        }
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { bounds.iter().map(|(a, b)| rng.gen_range(*a..*b)).collect() };
        let x = HalfSpacePoint::new(draw(&mut rng))?;
        let y = HalfSpacePoint::new(draw(&mut rng))?;
        if x.dist(&y) >= 0.25 * diam && (x.coords()[0] - y.coords()[0]).abs() > 1e-3 * diam {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn kernel_pipeline(config: &ExperimentConfig, stages: &mut Stages, artifacts: &mut Vec<Artifact>) -> PipelineResult {
    let p = config.params;
    let pairs = sample_pairs(config, config.samples)?;
    let riesz = stages.run("table", || config.bessel_riesz())?;
    let lhs = Commutator::new(&riesz, config.symbol.clone());
    let rhs = SchurFormCommutator::new(riesz.table().clone(), config.symbol.clone());
    let opts = SpectralOptions {
        rel_tol: config.quadrature.spectral_rel_tol,
        ..SpectralOptions::default()
    };
    let d = p.dim();
    let mut csv = String::new();
    for side in ["x", "y"] {
        for c in 1..=d {
            let _ = write!(csv, "{side}{c},");
        }
    }
    csv.push_str("invsqrt_closed,invsqrt_subordination,invsqrt_spectral,bessel_riesz,commutator,schur_form\n");
    let mut worst_three_way = 0.0f64;
    let mut worst_identity = 0.0f64;
    stages.run("evaluate", || {
        for (x, y) in &pairs {
            let closed = invsqrt_kernel_closed(&p, x, y)?;
            let sub = invsqrt_kernel_subordination(&p, x, y)?;
            let spectral = if p.n == 1 {
                Some(spectral_kernel(&p, RadialProfile::InverseRadius, x, y, &opts)?.value)
            } else {
                None
            };
            worst_three_way = worst_three_way.max(rel_gap(closed, sub));
            if let Some(s) = spectral {
                worst_three_way = worst_three_way.max(rel_gap(closed, s)).max(rel_gap(sub, s));
            }
            let k = riesz.eval(x, y)?;
            let (a, b) = (lhs.eval(x, y)?, rhs.eval(x, y)?);
            if a != 0.0 || b != 0.0 {
                worst_identity = worst_identity.max(rel_gap(a, b));
            }
            for c in x.coords().iter().chain(y.coords()) {
                let _ = write!(csv, "{c:e},");
            }
            let s = spectral.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(csv, "{closed:e},{sub:e},{s},{k:e},{a:e},{b:e}");
        }
        Ok(())
    })?;
    artifacts.push(Artifact::text("kernel.csv", csv));

    let center: Vec<f64> = config.domain.pairs().iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let side = config.domain.pairs().iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
    let side = side.min(center[d - 1] / (d as f64).sqrt());
    let taylor = stages.run("taylor", || {
        let f = Symbol::Linear {
            coeffs: (0..d).map(|i| 1.0 + 0.5 * i as f64).collect(),
            offset: 0.0,
        };
        taylor_local_check(&p, &f, &center, side)
    })?;
    let assertions = vec![
        Assertion::at_most(
            "three-way inverse square root agreement",
            worst_three_way,
            config.tolerances.kernel_agreement,
            "max pairwise relative gap of closed form, subordination and spectral kernels",
        ),
        Assertion::at_most(
            "schur-multiplier identity",
            worst_identity,
            config.tolerances.schur_identity,
            "max relative gap between the commutator kernel and its Schur form",
        ),
        Assertion {
            name: "near-diagonal expansion".into(),
            measured: taylor.exponent.unwrap_or(f64::NAN),
            tolerance: taylor.required_exponent,
            pass: taylor.pass,
            detail: "decay exponent of the residual after removing the classical commutator; must be at least the tolerance".into(),
        },
    ];
    let results = serde_json::json!({
        "pairs": pairs.len(),
        "max_three_way_gap": worst_three_way,
        "max_identity_gap": worst_identity,
        "taylor": to_value(&taylor),
    });
    Ok((results, assertions))
}

#[derive(Debug, Clone, Serialize)]
struct LevelResult {
    f: SpectrumSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<RatioExperiment>,
}

fn spectrum_pipeline(config: &ExperimentConfig, stages: &mut Stages, artifacts: &mut Vec<Artifact>) -> PipelineResult {
    let p = config.params;
    let pw = (p.n + 1) as f64;
    let riesz = stages.run("table", || config.bessel_riesz())?;
    let mut levels: Vec<LevelResult> = Vec::new();
    let mut assertions = Vec::new();
    for level in 0..=config.refine {
        let grid = Arc::new(config.domain.grid_at(level, config.node_cap)?);
        let tag = format!("level {level}");
        let run_f = stages.run(&format!("{tag}: spectrum"), || {
            commutator_spectrum(&riesz, &config.symbol, &grid, &config.fit)
        })?;
        let ratio = match &config.comparison {
            Some(g) => Some(stages.run(&format!("{tag}: ratio"), || {
                let run_g = commutator_spectrum(&riesz, g, &grid, &config.fit)?;
                compare_runs(&p, &run_f, &run_g, &config.symbol, g, &grid, config.tolerances.ratio)
            })?),
            None => None,
        };
        if level == 0 {
            artifacts.push(Artifact::text("spectrum.csv", spectrum_csv(&run_f.spectrum, pw)));
            if let Some(fit) = &run_f.summary.fit {
                artifacts.push(Artifact::json("fit.json", fit));
            }
            if config.write_matrix {
                let mut bytes = Vec::new();
                matrix_io::write_matrix_to(&mut bytes, &run_f.matrix)?;
                artifacts.push(Artifact {
                    name: "matrix.bin".into(),
                    bytes,
                });
                artifacts.push(Artifact::text("matrix.bin.grid.csv", matrix_io::grid_csv(&run_f.matrix)));
            }
        }
        let ppd = format!("{:?}", grid.points_per_dim());
        if config.symbol.is_constant() {
            assertions.push(Assertion::at_most(
                format!("{tag}: constant symbol gives a zero spectrum"),
                run_f.summary.largest,
                0.0,
                ppd.clone(),
            ));
        } else if let Some(fit) = &run_f.summary.fit {
            assertions.push(Assertion::at_most(
                format!("{tag}: free-fit exponent"),
                (fit.exponent + 1.0 / pw).abs(),
                config.tolerances.exponent,
                format!("exponent {:.4} against {:.4} on {ppd}", fit.exponent, -1.0 / pw),
            ));
        }
        if let Some(r) = &ratio {
            assertions.push(Assertion::at_most(
                format!("{tag}: coefficient ratio matches seminorm ratio"),
                r.relative_gap,
                r.tolerance,
                format!("C_f/C_g = {:.4}, seminorm ratio {:.4}", r.coefficient_ratio, r.seminorm_ratio),
            ));
        }
        if let Some(prev) = levels.last() {
            let (a, b) = (prev.f.weak_quasinorm, run_f.summary.weak_quasinorm);
            if a > 0.0 {
                assertions.push(Assertion::at_most(
                    format!("{tag}: weak quasinorm drift"),
                    (b - a).abs() / a,
                    config.tolerances.quasinorm_drift,
                    format!("{a:.5} -> {b:.5}"),
                ));
            }
        }
        levels.push(LevelResult { f: run_f.summary, ratio });
    }
    Ok((serde_json::json!({ "levels": to_value(&levels) }), assertions))
}

fn sobolev_pipeline(config: &ExperimentConfig, stages: &mut Stages, artifacts: &mut Vec<Artifact>) -> PipelineResult {
    let grid = config.grid()?;
    let report = stages.run("seminorms", || {
        sobolev_report(&config.symbol, config.params.k, config.sobolev_p(), &grid)
    })?;
    artifacts.push(Artifact::json("sobolev.json", &report));
    let finite = report.seminorm_p.is_finite() && report.directional_k.is_finite();
    let assertions = vec![Assertion {
        name: "seminorms finite".into(),
        measured: report.seminorm_p,
        tolerance: f64::INFINITY,
        pass: finite,
        detail: format!("p = {}", config.sobolev_p()),
    }];
    Ok((to_value(&report), assertions))
}

fn verify_pipeline(config: &ExperimentConfig, stages: &mut Stages) -> PipelineResult {
    let results = stages.run("acceptance", || Ok(crate::verify::run_all(config.seed)))?;
    let assertions = results
        .iter()
        .map(|c| Assertion {
            name: format!("criterion {}: {}", c.id, c.title),
            measured: c.measured,
            tolerance: c.tolerance,
            pass: c.pass,
            detail: c.detail.clone(),
        })
        .collect();
    Ok((to_value(&results), assertions))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(pipeline: Pipeline) -> ExperimentConfig {
        let mut c = ExperimentConfig::default_experiment();
        c.domain.points_per_dim = vec![12, 12];
        c.symbol = Symbol::cosine(vec![0.5, 1.0], 0.3);
        c.comparison = None;
        c.pipeline = pipeline;
        c
    }

    #[test]
    fn default_config_round_trips() {
        let c = ExperimentConfig::default_experiment();
        c.validate().unwrap();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default_experiment().to_json()).unwrap();
        v["fit"]["lo_exponnet"] = serde_json::json!(0.2);
        match ExperimentConfig::from_json(&v.to_string()) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "fit.lo_exponnet");
                assert!(message.contains("lo_exponnet"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ExperimentConfig::default_experiment();
        c.domain.bounds[1][0] = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "box.bounds[1][0]"));
        let mut c = ExperimentConfig::default_experiment();
        c.symbol = Symbol::cosine(vec![0.5, 1.0], 0.49);
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "symbol"));
        let mut c = ExperimentConfig::default_experiment();
        c.symbol = Symbol::Linear { coeffs: vec![1.0, 0.0], offset: 0.0 };
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "symbol"));
        let mut c = ExperimentConfig::default_experiment();
        c.domain.points_per_dim = vec![200, 200];
        assert!(matches!(c.validate(), Err(Error::Config { path, .. }) if path == "box"));
    }

    #[test]
    fn constant_symbol_gives_zero_spectrum() {
        let mut c = small(Pipeline::Spectrum);
        c.symbol = Symbol::Constant { value: 2.0 };
        let out = execute(&c).unwrap();
        assert!(out.report.pass);
        let csv = String::from_utf8(out.artifacts.iter().find(|a| a.name == "spectrum.csv").unwrap().bytes.clone()).unwrap();
        assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0e0")));
        assert!(out.artifacts.iter().all(|a| a.name != "fit.json"));
    }

    #[test]
    fn doubling_the_symbol_doubles_the_spectrum() {
        let c = small(Pipeline::Spectrum);
        let riesz = c.bessel_riesz().unwrap();
        let grid = Arc::new(c.grid().unwrap());
        let a = commutator_spectrum(&riesz, &c.symbol, &grid, &c.fit).unwrap();
        let b = commutator_spectrum(&riesz, &c.symbol.clone().scaled(2.0), &grid, &c.fit).unwrap();
        for (x, y) in a.spectrum.values().iter().zip(b.spectrum.values()) {
            assert_eq!(2.0 * x, *y);
        }
        let r = compare_runs(&c.params, &a, &b, &c.symbol, &c.symbol.clone().scaled(2.0), &grid, 0.15).unwrap();
        assert!((r.coefficient_ratio - 0.5).abs() < 1e-12);
        assert!((r.seminorm_ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn translated_symbol_keeps_ratios() {
        let mut c = small(Pipeline::Spectrum);
        c.domain.points_per_dim = vec![24, 24];
        c.symbol = Symbol::cosine(vec![0.4, 1.0], 0.3);
        let g = c.symbol.clone().translated(vec![0.2, 0.0]);
        let riesz = c.bessel_riesz().unwrap();
        let grid = Arc::new(c.grid().unwrap());
        let r = ratio_experiment(&riesz, &c.symbol, &g, &grid, &c.fit, 0.15).unwrap();
        assert!((r.seminorm_ratio - 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.coefficient_ratio - 1.0).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn degenerate_seminorm_is_rejected() {
        let c = small(Pipeline::Spectrum);
        let riesz = c.bessel_riesz().unwrap();
        let grid = Arc::new(c.grid().unwrap());
        let zero = Symbol::Constant { value: 1.0 };
        assert!(ratio_experiment(&riesz, &c.symbol, &zero, &grid, &c.fit, 0.15).is_err());
    }

    #[test]
    fn pipelines_produce_their_artifacts() {
        let names = |c: &ExperimentConfig| -> Vec<String> {
            execute(c).unwrap().artifacts.into_iter().map(|a| a.name).collect()
        };
        let mut spec = small(Pipeline::Spectrum);
        spec.write_matrix = true;
        let got = names(&spec);
        for want in ["spectrum.csv", "fit.json", "matrix.bin", "matrix.bin.grid.csv", "report.json"] {
            assert!(got.iter().any(|n| n == want), "{want} missing from {got:?}");
        }
        assert!(names(&small(Pipeline::Sobolev)).contains(&"sobolev.json".to_string()));
        assert!(names(&small(Pipeline::Auxfn)).contains(&"auxfn.csv".to_string()));
        let mut k = small(Pipeline::Kernel);
        k.samples = 3;
        let out = execute(&k).unwrap();
        assert!(out.report.pass, "{:?}", out.report.assertions);
    }

    #[test]
    fn report_embeds_hash_and_version() {
        let c = small(Pipeline::Sobolev);
        let out = execute(&c).unwrap();
        assert_eq!(out.report.config_hash, c.hash());
        assert_eq!(out.report.library_version, LIBRARY_VERSION);
        let sob: serde_json::Value =
            serde_json::from_slice(&out.artifacts.iter().find(|a| a.name == "sobolev.json").unwrap().bytes).unwrap();
        for key in ["seminorm_p", "directional_k", "ratio"] {
            assert!(sob.get(key).is_some());
        }
    }
}
