//! Multi-view dataset ingestion and the transforms used by the experiment
//! pipeline: stratified splitting, train-statistics standardization, Gaussian
//! noise injection, and pseudo-view assembly by feature concatenation.
//!
//! On-disk format: a JSON manifest
//! `{"k": K, "views": [{"name": ..., "path": ...}, ...], "labels": path}`
//! whose view files are headerless CSV matrices of reals and whose label file
//! is a one-column CSV of integers in `[0, K)`. Relative paths resolve
//! against the manifest's directory. CRLF line endings and a trailing
//! newline are tolerated; nothing else is.

use crate::rng::PortableRng;
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: row {row} has {got} fields, expected {expected}")]
    Ragged {
        path: PathBuf,
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{path}: row {row}, column {col}: non-finite value")]
    NonFinite {
        path: PathBuf,
        row: usize,
        col: usize,
    },
    #[error("label file {path}: row {row}: label {label} out of range for k = {num_classes}")]
    LabelOutOfRange {
        path: PathBuf,
        row: usize,
        label: i64,
        num_classes: usize,
    },
    #[error("view {name:?} has {rows} rows but {expected} labels")]
    RowCountMismatch {
        name: String,
        rows: usize,
        expected: usize,
    },
    #[error("dataset needs at least one sample")]
    Empty,
    #[error("dataset invariant violated: {0}")]
    Invalid(String),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("view index {index} out of range for {num_views} views")]
    ViewIndexOutOfRange { index: usize, num_views: usize },
    #[error("noise sigma must be a finite non-negative number, got {0}")]
    BadSigma(f64),
    #[error("pseudo-view construction needs at least 2 views, got {0}")]
    NeedTwoViews(usize),
}

/// `M` aligned feature matrices plus integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
    view_names: Vec<String>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl MultiViewDataset {
    pub fn from_parts(
        views: Vec<Array2<f64>>,
        view_names: Vec<String>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if views.is_empty() || labels.is_empty() {
            return Err(DataError::Empty);
        }
        if views.len() != view_names.len() {
            return Err(DataError::Invalid(format!(
                "{} views but {} names",
                views.len(),
                view_names.len()
            )));
        }
        if num_classes < 2 {
            return Err(DataError::Invalid(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        for (view, name) in views.iter().zip(&view_names) {
            if view.nrows() != labels.len() {
                return Err(DataError::RowCountMismatch {
                    name: name.clone(),
                    rows: view.nrows(),
                    expected: labels.len(),
                });
            }
            if view.iter().any(|v| !v.is_finite()) {
                return Err(DataError::Invalid(format!(
                    "view {name:?} contains non-finite entries"
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(DataError::Invalid(format!(
                "label {bad} out of range for k = {num_classes}"
            )));
        }
        Ok(Self {
            views,
            view_names,
            labels,
            num_classes,
        })
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn view(&self, m: usize) -> ArrayView2<'_, f64> {
        self.views[m].view()
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    pub fn view_widths(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.ncols()).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// New dataset keeping only the given rows, in the given order.
    fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            views: self
                .views
                .iter()
                .map(|v| v.select(Axis(0), rows))
                .collect(),
            view_names: self.view_names.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            num_classes: self.num_classes,
        }
    }
}

#[derive(Deserialize)]
struct ManifestFile {
    k: usize,
    views: Vec<ManifestView>,
    labels: String,
}

#[derive(Deserialize)]
struct ManifestView {
    name: String,
    path: String,
}

/// Loads a dataset from a JSON manifest; see the module docs for the format.
pub fn load_manifest(path: &Path) -> Result<MultiViewDataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest: ManifestFile = serde_json::from_str(&text).map_err(|e| DataError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if manifest.views.is_empty() {
        return Err(DataError::Manifest {
            path: path.to_path_buf(),
            message: "manifest lists no views".into(),
        });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut view_names = Vec::with_capacity(manifest.views.len());
    for v in &manifest.views {
        views.push(read_matrix(&base.join(&v.path))?);
        view_names.push(v.name.clone());
    }
    let labels = read_labels(&base.join(&manifest.labels), manifest.k)?;
    MultiViewDataset::from_parts(views, view_names, labels, manifest.k)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, DataError> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => DataError::Manifest {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })
}

fn read_matrix(path: &Path) -> Result<Array2<f64>, DataError> {
    let mut reader = csv_reader(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| map_record_error(path, row, e))?;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DataError::Ragged {
                path: path.to_path_buf(),
                row,
                expected,
                got: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| DataError::NonNumeric {
                path: path.to_path_buf(),
                row,
                col,
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonFinite {
                    path: path.to_path_buf(),
                    row,
                    col,
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::Empty);
    }
    let width = width.unwrap_or(0);
    Array2::from_shape_vec((rows, width), data).map_err(|e| DataError::Invalid(e.to_string()))
}

fn read_labels(path: &Path, num_classes: usize) -> Result<Vec<usize>, DataError> {
    let mut reader = csv_reader(path)?;
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| map_record_error(path, row, e))?;
        if record.len() != 1 {
            return Err(DataError::Ragged {
                path: path.to_path_buf(),
                row,
                expected: 1,
                got: record.len(),
            });
        }
        let field = record.get(0).unwrap_or("");
        let label: i64 = field.trim().parse().map_err(|_| DataError::NonNumeric {
            path: path.to_path_buf(),
            row,
            col: 0,
            value: field.to_string(),
        })?;
        if label < 0 || label as usize >= num_classes {
            return Err(DataError::LabelOutOfRange {
                path: path.to_path_buf(),
                row,
                label,
                num_classes,
            });
        }
        labels.push(label as usize);
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(labels)
}

fn map_record_error(path: &Path, row: usize, e: csv::Error) -> DataError {
    match e.into_kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => DataError::Ragged {
            path: path.to_path_buf(),
            row,
            expected: expected_len as usize,
            got: len as usize,
        },
        csv::ErrorKind::Io(source) => DataError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => DataError::Manifest {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Label-stratified train/test split, deterministic per seed.
///
/// Classes with fewer than 2 samples fall back to a pooled unstratified
/// split (with a warning). Within each stratum the test share is
/// `round(n * test_fraction)`.
pub fn split(
    ds: &MultiViewDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(MultiViewDataset, MultiViewDataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadFraction(test_fraction));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in ds.labels().iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }

    let mut rng = PortableRng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    let mut pooled = Vec::new();
    for (label, mut rows) in by_class {
        if rows.len() < 2 {
            log::warn!(
                "class {label} has {} sample(s); splitting it unstratified",
                rows.len()
            );
            pooled.extend(rows);
            continue;
        }
        rng.shuffle(&mut rows);
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        test_rows.extend_from_slice(&rows[..n_test]);
        train_rows.extend_from_slice(&rows[n_test..]);
    }
    if !pooled.is_empty() {
        rng.shuffle(&mut pooled);
        let n_test = (pooled.len() as f64 * test_fraction).round() as usize;
        test_rows.extend_from_slice(&pooled[..n_test]);
        train_rows.extend_from_slice(&pooled[n_test..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(DataError::Invalid(format!(
            "split with fraction {test_fraction} left an empty side ({} train, {} test)",
            train_rows.len(),
            test_rows.len()
        )));
    }
    Ok((ds.select_rows(&train_rows), ds.select_rows(&test_rows)))
}

/// Per-view, per-column centering and scaling statistics fit on a train set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeStats {
    pub means: Vec<Vec<f64>>,
    pub scales: Vec<Vec<f64>>,
}

/// Columns below this spread count as constant and are centered only.
const CONSTANT_COLUMN_TOL: f64 = 1e-12;

/// Fits column statistics on `train` and standardizes both sets with them.
///
/// Train columns come out with mean 0 and unit variance; constant columns are
/// centered and left at scale 1. Test rows never influence the statistics.
pub fn standardize(
    train: &MultiViewDataset,
    test: &MultiViewDataset,
) -> Result<(MultiViewDataset, MultiViewDataset, StandardizeStats), DataError> {
    let stats = fit_standardization(train)?;
    let train_out = apply_standardization(train, &stats)?;
    let test_out = apply_standardization(test, &stats)?;
    Ok((train_out, test_out, stats))
}

pub fn fit_standardization(train: &MultiViewDataset) -> Result<StandardizeStats, DataError> {
    let n = train.num_samples() as f64;
    let mut means = Vec::with_capacity(train.num_views());
    let mut scales = Vec::with_capacity(train.num_views());
    for m in 0..train.num_views() {
        let view = train.view(m);
        let mut view_means = Vec::with_capacity(view.ncols());
        let mut view_scales = Vec::with_capacity(view.ncols());
        for col in view.columns() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            view_means.push(mean);
            view_scales.push(if std > CONSTANT_COLUMN_TOL { std } else { 1.0 });
        }
        means.push(view_means);
        scales.push(view_scales);
    }
    Ok(StandardizeStats { means, scales })
}

pub fn apply_standardization(
    ds: &MultiViewDataset,
    stats: &StandardizeStats,
) -> Result<MultiViewDataset, DataError> {
    if stats.means.len() != ds.num_views() {
        return Err(DataError::Invalid(format!(
            "statistics cover {} views but dataset has {}",
            stats.means.len(),
            ds.num_views()
        )));
    }
    let mut views = Vec::with_capacity(ds.num_views());
    for m in 0..ds.num_views() {
        let (means, scales) = (&stats.means[m], &stats.scales[m]);
        if means.len() != ds.view(m).ncols() {
            return Err(DataError::Invalid(format!(
                "statistics for view {m} cover {} columns but view has {}",
                means.len(),
                ds.view(m).ncols()
            )));
        }
        let mut view = ds.view(m).to_owned();
        for mut row in view.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - means[j]) / scales[j];
            }
        }
        views.push(view);
    }
    MultiViewDataset::from_parts(
        views,
        ds.view_names().to_vec(),
        ds.labels().to_vec(),
        ds.num_classes(),
    )
}

/// Additive Gaussian corruption of selected views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub views: Vec<usize>,
    pub seed: u64,
}

/// Adds elementwise `N(0, sigma^2)` noise to the targeted views.
///
/// Each targeted view draws from its own child generator keyed by
/// `(seed, view index)`, so the result is independent of the order the
/// targets are listed in.
pub fn inject_noise(
    ds: &MultiViewDataset,
    spec: &NoiseSpec,
) -> Result<MultiViewDataset, DataError> {
    if !spec.sigma.is_finite() || spec.sigma < 0.0 {
        return Err(DataError::BadSigma(spec.sigma));
    }
    for &index in &spec.views {
        if index >= ds.num_views() {
            return Err(DataError::ViewIndexOutOfRange {
                index,
                num_views: ds.num_views(),
            });
        }
    }
    if spec.sigma == 0.0 || spec.views.is_empty() {
        return Ok(ds.clone());
    }
    let mut targets: Vec<usize> = spec.views.clone();
    targets.sort_unstable();
    targets.dedup();

    let mut views: Vec<Array2<f64>> =
        (0..ds.num_views()).map(|m| ds.view(m).to_owned()).collect();
    for &m in &targets {
        let mut rng = PortableRng::seed_from_u64(
            spec.seed
                .wrapping_add((m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        for v in views[m].iter_mut() {
            *v += spec.sigma * rng.normal();
        }
    }
    MultiViewDataset::from_parts(
        views,
        ds.view_names().to_vec(),
        ds.labels().to_vec(),
        ds.num_classes(),
    )
}

/// Name given to the concatenated pseudo-view.
pub const PSEUDO_VIEW_NAME: &str = "pseudo";

/// Appends a pseudo-view formed by concatenating every view's features,
/// in view order then column order.
pub fn build_pseudo_view(ds: &MultiViewDataset) -> Result<MultiViewDataset, DataError> {
    if ds.num_views() < 2 {
        return Err(DataError::NeedTwoViews(ds.num_views()));
    }
    let n = ds.num_samples();
    let width: usize = ds.view_widths().iter().sum();
    let mut pseudo = Array2::zeros((n, width));
    let mut offset = 0;
    for m in 0..ds.num_views() {
        let view = ds.view(m);
        pseudo
            .slice_mut(ndarray::s![.., offset..offset + view.ncols()])
            .assign(&view);
        offset += view.ncols();
    }
    let mut views: Vec<Array2<f64>> =
        (0..ds.num_views()).map(|m| ds.view(m).to_owned()).collect();
    views.push(pseudo);
    let mut names = ds.view_names().to_vec();
    names.push(PSEUDO_VIEW_NAME.to_string());
    MultiViewDataset::from_parts(views, names, ds.labels().to_vec(), ds.num_classes())
}
