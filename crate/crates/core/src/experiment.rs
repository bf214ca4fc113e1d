//! Configuration-driven experiment runner.
//!
//! For every grid point the solver runs once (it is deterministic), then
//! spectral clustering is repeated `repetitions` times with k-means seeds
//! `seed, seed + 1, …`. Outputs land in
//! `<output_dir>/<grid_point_hash>/{result.json, trace.csv, consensus.csv, labels.csv, plot.svg}`
//! with a `summary.json` at the top level selecting the best grid point per
//! metric. Grid points are independent and may run concurrently.
//!
//! Standard deviations over repetitions are population standard deviations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{self, generate_synthetic, normalize_views, MultiViewDataset, NormalizeMode, SyntheticSpec};
use crate::exec::{self, Execution};
use crate::metrics::{self, EvaluationReport};
use crate::plot::{self, ResidualPoint};
use crate::solver::{self, ConstraintGaps, Diagnostics, SolverConfig, SolverError, Variant};
use crate::spectral::{self, DEFAULT_RESTARTS};

/// Header of every `trace.csv`.
pub const TRACE_HEADER: &str = "iter,residual_C,residual_Z,gap_Y,gap_CiZi,gap_Ci1,gap_CZ,gap_C1,objective";

/// Search grid for `α` and `β`.
pub const STANDARD_ALPHA_BETA: [f64; 13] = [1e-5, 1e-4, 0.001, 0.01, 0.1, 0.2, 0.5, 0.8, 1.0, 2.0, 5.0, 8.0, 10.0];
/// Search grid for `η`.
pub const STANDARD_ETA: [f64; 8] = [-5.0, -2.0, -1.0, 0.1, 0.5, 1.5, 2.0, 5.0];

/// Named `(α, β, η)` settings tuned for public multi-view corpora.
pub const PRESETS: [(&str, f64, f64, f64); 7] = [
    ("3sources", 1.0, 0.8, 0.5),
    ("ORL", 0.2, 0.1, 0.5),
    ("MSRC-v1", 1e-5, 0.5, 0.5),
    ("BBCsport", 0.2, 2.0, 0.5),
    ("COIL20", 0.5, 0.1, 0.5),
    ("Caltech101-7", 5.0, 10.0, 0.5),
    ("HW", 0.8, 0.5, 0.5),
];

/// Looks up a preset by case-insensitive name.
pub fn preset(name: &str) -> Option<(f64, f64, f64)> {
    PRESETS.iter().find(|(n, ..)| n.eq_ignore_ascii_case(name)).map(|&(_, a, b, e)| (a, b, e))
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Path to a JSON manifest. Relative paths are taken relative to the
    /// config file when loaded through [`ExperimentConfig::from_file`].
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSpec::default())
    }
}

/// Explicit value lists; a missing list falls back to the solver's value.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridLists {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GridSpec {
    /// `"standard"`: the full 13×13×8 search grid.
    Named(String),
    Lists(GridLists),
}

fn default_repetitions() -> usize {
    10
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

fn default_output() -> PathBuf {
    PathBuf::from("mvscgf-out")
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetSource,
    /// Named `(α, β, η)` preset applied over the `solver` block.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub normalize: NormalizeMode,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Cluster count; defaults to the number of ground-truth classes.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub execution: Execution,
    /// Also write per-view coefficient and smoothed-feature matrices.
    #[serde(default)]
    pub dump_matrices: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::default(),
            preset: None,
            normalize: NormalizeMode::None,
            solver: SolverConfig::default(),
            grid: None,
            k: None,
            repetitions: default_repetitions(),
            seed: 0,
            restarts: default_restarts(),
            variant: Variant::Full,
            output_dir: default_output(),
            execution: Execution::default(),
            dump_matrices: false,
        }
    }
}

/// Command-line overrides; each present field beats the config file and preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub max_iter: Option<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    pub variant: Option<Variant>,
    pub k: Option<usize>,
    pub normalize: Option<NormalizeMode>,
    pub output_dir: Option<PathBuf>,
    pub preset: Option<String>,
    pub manifest: Option<PathBuf>,
    pub execution: Option<Execution>,
}

impl ExperimentConfig {
    /// Parses a JSON config. A relative manifest path is resolved against the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        if let DatasetSource::Manifest(m) = &mut cfg.dataset {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    /// Applies the preset (if any) and then the overrides.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self, ExperimentError> {
        if let Some(p) = &overrides.preset {
            self.preset = Some(p.clone());
        }
        if let Some(name) = &self.preset {
            let (a, b, e) = preset(name).ok_or_else(|| ExperimentError::Config(format!("unknown preset {name:?}")))?;
            self.solver.alpha = a;
            self.solver.beta = b;
            self.solver.eta = e;
        }
        let o = overrides;
        if let Some(v) = o.alpha {
            self.solver.alpha = v;
        }
        if let Some(v) = o.beta {
            self.solver.beta = v;
        }
        if let Some(v) = o.eta {
            self.solver.eta = v;
        }
        if let Some(v) = o.max_iter {
            self.solver.max_iter = v;
        }
        if let Some(v) = o.eps {
            self.solver.eps = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.repetitions {
            self.repetitions = v;
        }
        if let Some(v) = o.variant {
            self.variant = v;
        }
        if let Some(v) = o.k {
            self.k = Some(v);
        }
        if let Some(v) = o.normalize {
            self.normalize = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = &o.manifest {
            self.dataset = DatasetSource::Manifest(v.clone());
        }
        if let Some(v) = o.execution {
            self.execution = v;
        }
        Ok(self)
    }

    /// Expands the grid into concrete points, α outermost and η innermost.
    pub fn grid_points(&self) -> Result<Vec<GridPoint>, ExperimentError> {
        let single = |v: f64| vec![v];
        let (alphas, betas, etas) = match &self.grid {
            None => (single(self.solver.alpha), single(self.solver.beta), single(self.solver.eta)),
            Some(GridSpec::Named(name)) if name == "standard" => {
                (STANDARD_ALPHA_BETA.to_vec(), STANDARD_ALPHA_BETA.to_vec(), STANDARD_ETA.to_vec())
            }
            Some(GridSpec::Named(name)) => {
                return Err(ExperimentError::Config(format!("unknown grid {name:?}; use \"standard\" or value lists")))
            }
            Some(GridSpec::Lists(l)) => {
                for (name, list) in [("alpha", &l.alpha), ("beta", &l.beta), ("eta", &l.eta)] {
                    if list.as_ref().is_some_and(Vec::is_empty) {
                        return Err(ExperimentError::Config(format!("grid list {name} is empty")));
                    }
                }
                (
                    l.alpha.clone().unwrap_or_else(|| single(self.solver.alpha)),
                    l.beta.clone().unwrap_or_else(|| single(self.solver.beta)),
                    l.eta.clone().unwrap_or_else(|| single(self.solver.eta)),
                )
            }
        };
        let mut points = Vec::with_capacity(alphas.len() * betas.len() * etas.len());
        for &alpha in &alphas {
            for &beta in &betas {
                for &eta in &etas {
                    points.push(GridPoint { alpha, beta, eta });
                }
            }
        }
        Ok(points)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetitions must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(ExperimentError::Config("restarts must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(ExperimentError::Config("k must be at least 1".into()));
        }
        for p in self.grid_points()? {
            p.solver_config(&self.solver)
                .validate()
                .map_err(|e| ExperimentError::Config(format!("grid point {p:?}: {e}")))?;
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<MultiViewDataset, ExperimentError> {
        let ds = match &self.dataset {
            DatasetSource::Manifest(p) => data::load_dataset(p)?,
            DatasetSource::Synthetic(spec) => generate_synthetic(spec)?,
        };
        Ok(normalize_views(&ds, self.normalize))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

impl GridPoint {
    pub fn solver_config(&self, base: &SolverConfig) -> SolverConfig {
        SolverConfig { alpha: self.alpha, beta: self.beta, eta: self.eta, ..base.clone() }
    }

    /// Directory name: 16 hex digits of a SHA-256 over the full solver
    /// settings and variant.
    pub fn hash(&self, base: &SolverConfig, variant: Variant) -> String {
        let cfg = self.solver_config(base);
        let key = format!(
            "alpha={:e};beta={:e};eta={:e};mu0={:e};mu_max={:e};rho={:e};eps={:e};max_iter={};j_floor={:e};variant={}",
            cfg.alpha, cfg.beta, cfg.eta, cfg.mu0, cfg.mu_max, cfg.rho, cfg.eps, cfg.max_iter, cfg.j_floor, variant
        );
        let digest = Sha256::digest(key.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub acc: Stat,
    pub nmi: Stat,
    pub ari: Stat,
    pub f_score: Stat,
    pub runs: Vec<EvaluationReport>,
}

impl MetricSummary {
    fn from_runs(runs: Vec<EvaluationReport>) -> Self {
        let col = |f: fn(&EvaluationReport) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self { acc: col(|r| r.acc), nmi: col(|r| r.nmi), ari: col(|r| r.ari), f_score: col(|r| r.f_score), runs }
    }

    fn mean(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Acc => self.acc.mean,
            Metric::Nmi => self.nmi.mean,
            Metric::Ari => self.ari.mean,
            Metric::FScore => self.f_score.mean,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Failed,
}

/// Contents of `result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub hash: String,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub variant: Variant,
    pub status: PointStatus,
    pub error: Option<String>,
    pub converged: bool,
    pub iterations: usize,
    pub final_gaps: Option<ConstraintGaps>,
    pub weights: Vec<f64>,
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Labels of the first repetition.
    pub labels: Vec<usize>,
    pub metrics: Option<MetricSummary>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acc,
    Nmi,
    Ari,
    FScore,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Acc, Metric::Nmi, Metric::Ari, Metric::FScore];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub hash: String,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BestPerMetric {
    pub acc: Option<BestPoint>,
    pub nmi: Option<BestPoint>,
    pub ari: Option<BestPoint>,
    pub f_score: Option<BestPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub hash: String,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub status: PointStatus,
    pub converged: bool,
    pub iterations: usize,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub f_score: Option<f64>,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub dataset: String,
    pub variant: Variant,
    pub n_samples: usize,
    pub n_views: usize,
    pub k: usize,
    pub repetitions: usize,
    pub failed: usize,
    pub points: Vec<PointSummary>,
    pub best: BestPerMetric,
}

impl ExperimentSummary {
    pub fn all_failed(&self) -> bool {
        !self.points.is_empty() && self.failed == self.points.len()
    }

    /// 0 on success, 2 when every grid point failed.
    pub fn exit_code(&self) -> i32 {
        if self.all_failed() {
            2
        } else {
            0
        }
    }
}

/// Picks the highest mean per metric; ties go to the earliest grid point.
pub fn select_best(results: &[PointResult]) -> BestPerMetric {
    let pick = |metric: Metric| {
        let mut best: Option<(&PointResult, f64)> = None;
        for r in results {
            if let Some(m) = &r.metrics {
                let v = m.mean(metric);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((r, v));
                }
            }
        }
        best.map(|(r, value)| BestPoint { hash: r.hash.clone(), alpha: r.alpha, beta: r.beta, eta: r.eta, value })
    };
    BestPerMetric {
        acc: pick(Metric::Acc),
        nmi: pick(Metric::Nmi),
        ari: pick(Metric::Ari),
        f_score: pick(Metric::FScore),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Renders the diagnostics trace as CSV with [`TRACE_HEADER`].
pub fn trace_csv(diag: &Diagnostics) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &diag.records {
        let g = &r.gaps;
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.iter,
            r.residual_c,
            r.residual_z,
            g.smoothing,
            g.view_coupling,
            g.view_rows,
            g.consensus_coupling,
            g.consensus_rows,
            r.objective
        );
    }
    out
}

fn write_trace_and_plot(dir: &Path, diag: &Diagnostics) -> Result<(), ExperimentError> {
    let trace_path = dir.join("trace.csv");
    fs::write(&trace_path, trace_csv(diag)).map_err(io_err(&trace_path))?;
    if !diag.is_empty() {
        let points: Vec<ResidualPoint> = diag
            .records
            .iter()
            .map(|r| ResidualPoint { iter: r.iter, residual_c: r.residual_c, residual_z: r.residual_z })
            .collect();
        let svg = plot::render_convergence_svg(&points).expect("non-empty trace");
        let plot_path = dir.join("plot.svg");
        fs::write(&plot_path, svg).map_err(io_err(&plot_path))?;
    }
    Ok(())
}

/// Solves one grid point, clusters, scores and writes its directory.
pub fn run_point(
    cfg: &ExperimentConfig,
    ds: &MultiViewDataset,
    k: usize,
    point: GridPoint,
) -> Result<PointResult, ExperimentError> {
    let solver_cfg = point.solver_config(&cfg.solver);
    let hash = point.hash(&cfg.solver, cfg.variant);
    let dir = cfg.output_dir.join(&hash);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let seeds: Vec<u64> = (0..cfg.repetitions as u64).map(|r| cfg.seed.wrapping_add(r)).collect();

    let mut result = PointResult {
        hash,
        alpha: point.alpha,
        beta: point.beta,
        eta: point.eta,
        variant: cfg.variant,
        status: PointStatus::Failed,
        error: None,
        converged: false,
        iterations: 0,
        final_gaps: None,
        weights: Vec::new(),
        k,
        seeds: seeds.clone(),
        labels: Vec::new(),
        metrics: None,
    };

    let out = match solver::solve_variant(ds, &solver_cfg, cfg.variant) {
        Ok(out) => out,
        Err(err) => {
            if let SolverError::NonFinite { diagnostics, iteration } = &err {
                result.iterations = *iteration;
                write_trace_and_plot(&dir, diagnostics)?;
            }
            result.error = Some(err.to_string());
            write_json(&dir.join("result.json"), &result)?;
            return Ok(result);
        }
    };
    result.converged = out.converged;
    result.iterations = out.iterations;
    result.final_gaps = out.diagnostics.last().map(|r| r.gaps);
    result.weights = out.weights.clone();
    write_trace_and_plot(&dir, &out.diagnostics)?;
    data::save_matrix_csv(&dir.join("consensus.csv"), &out.consensus)?;
    if cfg.dump_matrices {
        for (i, (c, y)) in out.view_coefficients.iter().zip(&out.smoothed).enumerate() {
            data::save_matrix_csv(&dir.join(format!("view_C_{i}.csv")), c)?;
            data::save_matrix_csv(&dir.join(format!("smoothed_{i}.csv")), y)?;
        }
    }

    let affinity = match spectral::build_affinity(&out.consensus) {
        Ok(w) => w,
        Err(e) => {
            result.error = Some(e.to_string());
            write_json(&dir.join("result.json"), &result)?;
            return Ok(result);
        }
    };
    let mut runs = Vec::with_capacity(seeds.len());
    for (r, &seed) in seeds.iter().enumerate() {
        let assignment = match spectral::spectral_clustering_with(&affinity, k, seed, cfg.restarts, cfg.execution) {
            Ok(a) => a,
            Err(e) => {
                result.error = Some(e.to_string());
                write_json(&dir.join("result.json"), &result)?;
                return Ok(result);
            }
        };
        if r == 0 {
            result.labels = assignment.labels.clone();
            let labels_path = dir.join("labels.csv");
            let text: String = assignment.labels.iter().map(|l| format!("{l}\n")).collect();
            fs::write(&labels_path, text).map_err(io_err(&labels_path))?;
        }
        if let Some(truth) = ds.labels() {
            runs.push(metrics::evaluate(&assignment.labels, truth).expect("lengths match"));
        }
    }
    if !runs.is_empty() {
        result.metrics = Some(MetricSummary::from_runs(runs));
    }
    result.status = PointStatus::Ok;
    write_json(&dir.join("result.json"), &result)?;
    Ok(result)
}

/// Runs every grid point and writes `summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, ExperimentError> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let k = match (cfg.k, ds.n_classes()) {
        (Some(k), _) => k,
        (None, Some(k)) => k,
        (None, None) => return Err(ExperimentError::Config("k is required when the dataset has no labels".into())),
    };
    if k > ds.n_samples() {
        return Err(ExperimentError::Config(format!("k = {k} exceeds the {} samples", ds.n_samples())));
    }
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let points = cfg.grid_points()?;
    let results: Vec<PointResult> = exec::map_slice(cfg.execution, &points, |&p| run_point(cfg, &ds, k, p))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let summary = ExperimentSummary {
        dataset: ds.name().to_owned(),
        variant: cfg.variant,
        n_samples: ds.n_samples(),
        n_views: ds.n_views(),
        k,
        repetitions: cfg.repetitions,
        failed: results.iter().filter(|r| r.status == PointStatus::Failed).count(),
        points: results
            .iter()
            .map(|r| PointSummary {
                hash: r.hash.clone(),
                alpha: r.alpha,
                beta: r.beta,
                eta: r.eta,
                status: r.status,
                converged: r.converged,
                iterations: r.iterations,
                acc: r.metrics.as_ref().map(|m| m.acc.mean),
                nmi: r.metrics.as_ref().map(|m| m.nmi.mean),
                ari: r.metrics.as_ref().map(|m| m.ari.mean),
                f_score: r.metrics.as_ref().map(|m| m.f_score.mean),
            })
            .collect(),
        best: select_best(&results),
    };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
