//! Multi-view datasets: validation, CSV/JSON-manifest I/O, synthetic
//! union-of-subspaces generation and per-view normalization.
//!
//! A manifest is a JSON object
//!
//! ```json
//! {"name": "toy", "views": [{"path": "v0.csv", "has_header": false}], "labels": "labels.csv"}
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Each view CSV
//! holds one sample per row; the labels CSV holds one integer per row.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: row {row} has {found} cells, expected {expected}")]
    RaggedRows { path: PathBuf, row: usize, expected: usize, found: usize },
    #[error("{path}: non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumeric { path: PathBuf, row: usize, col: usize, value: String },
    #[error("row-count mismatch: view {view} has {found} rows, expected {expected}")]
    RowCountMismatch { view: usize, expected: usize, found: usize },
    #[error("labels length mismatch: {found} labels for {expected} samples")]
    LabelsLength { expected: usize, found: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

/// `v` feature matrices sharing the same `n` samples (rows), with optional
/// ground-truth labels. Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    name: String,
    views: Vec<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
    view_names: Option<Vec<String>>,
}

impl MultiViewDataset {
    /// Validates and wraps the given views.
    ///
    /// Labels must be dense 0-based class ids: every id in `0..k` occurs.
    pub fn new(
        name: impl Into<String>,
        views: Vec<DMatrix<f64>>,
        labels: Option<Vec<usize>>,
        view_names: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        let first = views.first().ok_or_else(|| DataError::Invalid("no views".into()))?;
        let n = first.nrows();
        if n < 2 {
            return Err(DataError::Invalid(format!("need at least 2 samples, got {n}")));
        }
        for (i, x) in views.iter().enumerate() {
            if x.nrows() != n {
                return Err(DataError::RowCountMismatch { view: i, expected: n, found: x.nrows() });
            }
            if x.ncols() == 0 {
                return Err(DataError::Invalid(format!("view {i} has no features")));
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(DataError::Invalid(format!("view {i} contains NaN or infinite entries")));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(DataError::LabelsLength { expected: n, found: labels.len() });
            }
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut seen = vec![false; k];
            for &l in labels {
                seen[l] = true;
            }
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(DataError::Invalid(format!("class id {missing} never occurs in labels")));
            }
        }
        if let Some(names) = &view_names {
            if names.len() != views.len() {
                return Err(DataError::Invalid(format!("{} view names for {} views", names.len(), views.len())));
            }
        }
        Ok(Self { name: name.into(), views, labels, view_names })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn view(&self, i: usize) -> &DMatrix<f64> {
        &self.views[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn view_names(&self) -> Option<&[String]> {
        self.view_names.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Number of distinct ground-truth classes, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Applies the same row permutation to every view and to the labels.
    /// `perm[new_row] = old_row`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self, DataError> {
        let n = self.n_samples();
        let mut check = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut check[p], true)) {
            return Err(DataError::Invalid("row permutation is not a bijection".into()));
        }
        let views = self.views.iter().map(|x| x.select_rows(perm)).collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&p| l[p]).collect());
        Self::new(self.name.clone(), views, labels, self.view_names.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ViewEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub has_header: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    pub views: Vec<ViewEntry>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_cells(path: &Path, has_header: bool) -> Result<Vec<Vec<String>>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| DataError::Csv { path: path.to_path_buf(), source })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| DataError::Csv { path: path.to_path_buf(), source })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

/// Reads a numeric CSV matrix, one sample per row.
pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<DMatrix<f64>, DataError> {
    let rows = read_cells(path, has_header)?;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(rows.len() * ncols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(DataError::RaggedRows { path: path.to_path_buf(), row: r, expected: ncols, found: row.len() });
        }
        for (c, cell) in row.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                path: path.to_path_buf(),
                row: r,
                col: c,
                value: cell.clone(),
            })?;
            data.push(value);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &data))
}

/// Reads integer labels and remaps them to dense 0-based ids in ascending
/// order of the original values (so `1..=k` files become `0..k`).
pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>, DataError> {
    let rows = read_cells(path, false)?;
    let mut raw = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        if row.len() != 1 {
            return Err(DataError::RaggedRows { path: path.to_path_buf(), row: r, expected: 1, found: row.len() });
        }
        let value: i64 = row[0].parse().map_err(|_| DataError::NonNumeric {
            path: path.to_path_buf(),
            row: r,
            col: 0,
            value: row[0].clone(),
        })?;
        raw.push(value);
    }
    let ids: BTreeMap<i64, usize> = {
        let mut distinct: Vec<i64> = raw.clone();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.into_iter().enumerate().map(|(i, v)| (v, i)).collect()
    };
    Ok(raw.iter().map(|v| ids[v]).collect())
}

/// Loads and validates a dataset described by a JSON manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset, DataError> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|source| DataError::Io { path: manifest_path.to_path_buf(), source })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|source| DataError::Manifest { path: manifest_path.to_path_buf(), source })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut names = Vec::with_capacity(manifest.views.len());
    for entry in &manifest.views {
        let path = resolve(base, &entry.path);
        if !path.exists() {
            return Err(DataError::Io {
                path,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            });
        }
        views.push(read_matrix_csv(&path, entry.has_header)?);
        names.push(entry.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    }
    let labels = match &manifest.labels {
        Some(p) => Some(read_labels_csv(&resolve(base, p))?),
        None => None,
    };
    MultiViewDataset::new(manifest.name, views, labels, Some(names))
}

fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<(), DataError> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 12);
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Writes a matrix as headerless CSV using shortest round-trip float formatting.
pub fn save_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<(), DataError> {
    write_matrix_csv(path, m)
}

/// Writes `view_<i>.csv`, `labels.csv` (if any) and `manifest.json` into
/// `dir`, returning the manifest path. [`load_dataset`] reads it back exactly.
pub fn write_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf, DataError> {
    fs::create_dir_all(dir).map_err(|source| DataError::Io { path: dir.to_path_buf(), source })?;
    let mut entries = Vec::new();
    for (i, x) in ds.views().iter().enumerate() {
        let file = format!("view_{i}.csv");
        write_matrix_csv(&dir.join(&file), x)?;
        entries.push(ViewEntry { path: file.into(), has_header: false });
    }
    let labels = match ds.labels() {
        Some(l) => {
            let mut out = String::new();
            for v in l {
                out.push_str(&v.to_string());
                out.push('\n');
            }
            let path = dir.join("labels.csv");
            fs::write(&path, out).map_err(|source| DataError::Io { path: path.clone(), source })?;
            Some(PathBuf::from("labels.csv"))
        }
        None => None,
    };
    let manifest = Manifest { name: ds.name().to_owned(), views: entries, labels };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|source| DataError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Parameters of a synthetic union-of-subspaces dataset.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k: usize,
    pub n_per_cluster: usize,
    pub subspace_dim: usize,
    pub view_dims: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Three clusters of 30 samples on 3-dimensional subspaces, views of
    /// dimension 20 and 30, noise 0.01, seed 7.
    fn default() -> Self {
        Self { k: 3, n_per_cluster: 30, subspace_dim: 3, view_dims: vec![20, 30], noise_sigma: 0.01, seed: 7 }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidSpec(msg));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.n_per_cluster == 0 {
            return bad("n_per_cluster must be positive".into());
        }
        if self.subspace_dim == 0 {
            return bad("subspace_dim must be positive".into());
        }
        if self.view_dims.is_empty() {
            return bad("at least one view is required".into());
        }
        if let Some(d) = self.view_dims.iter().find(|&&d| d <= self.subspace_dim) {
            return bad(format!("view dimension {d} must exceed subspace_dim {}", self.subspace_dim));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        Ok(())
    }
}

/// Draws a union-of-subspaces dataset. Samples are ordered cluster by cluster.
///
/// For each view and cluster, an orthonormal basis is taken from the QR
/// factorization of a Gaussian `view_dim × subspace_dim` matrix; sample
/// coordinates in that basis are uniform on `[-1, 1]`, and isotropic Gaussian
/// noise with standard deviation `noise_sigma` is added.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.k * spec.n_per_cluster;
    let views = spec
        .view_dims
        .iter()
        .map(|&dim| {
            let mut x = DMatrix::<f64>::zeros(n, dim);
            for cluster in 0..spec.k {
                let gauss = DMatrix::<f64>::from_fn(dim, spec.subspace_dim, |_, _| rng.sample(StandardNormal));
                let basis = gauss.qr().q();
                let coords =
                    DMatrix::<f64>::from_fn(spec.subspace_dim, spec.n_per_cluster, |_, _| rng.random_range(-1.0..=1.0));
                let points = &basis * coords;
                for s in 0..spec.n_per_cluster {
                    let row = cluster * spec.n_per_cluster + s;
                    for f in 0..dim {
                        let noise: f64 = if spec.noise_sigma > 0.0 {
                            spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                        } else {
                            0.0
                        };
                        x[(row, f)] = points[(f, s)] + noise;
                    }
                }
            }
            x
        })
        .collect();
    let labels = (0..n).map(|i| i / spec.n_per_cluster).collect();
    let names = (0..spec.view_dims.len()).map(|i| format!("view_{i}")).collect();
    MultiViewDataset::new("synthetic", views, Some(labels), Some(names))
}

/// Per-view feature normalization applied before solving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    #[default]
    None,
    /// Scale each sample row to unit L2 norm; zero rows stay zero.
    UnitRowNorm,
    /// Center each feature column and divide by its population standard
    /// deviation (divisor `n`); zero-variance columns are only centered.
    ZscoreColumns,
}

impl std::str::FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "unit_row_norm" => Ok(Self::UnitRowNorm),
            "zscore_columns" => Ok(Self::ZscoreColumns),
            other => Err(format!("unknown normalization mode {other:?}")),
        }
    }
}

pub fn normalize_views(ds: &MultiViewDataset, mode: NormalizeMode) -> MultiViewDataset {
    let views = ds
        .views()
        .iter()
        .map(|x| match mode {
            NormalizeMode::None => x.clone(),
            NormalizeMode::UnitRowNorm => {
                let mut y = x.clone();
                for mut row in y.row_iter_mut() {
                    let norm = row.norm();
                    if norm > 0.0 {
                        row /= norm;
                    }
                }
                y
            }
            NormalizeMode::ZscoreColumns => {
                let n = x.nrows() as f64;
                let mut y = x.clone();
                for mut col in y.column_iter_mut() {
                    let mean = col.sum() / n;
                    col.add_scalar_mut(-mean);
                    let std = (col.norm_squared() / n).sqrt();
                    if std > 0.0 {
                        col /= std;
                    }
                }
                y
            }
        })
        .collect();
    MultiViewDataset { name: ds.name.clone(), views, labels: ds.labels.clone(), view_names: ds.view_names.clone() }
}
