//! Uncertainty-aware evaluation: accuracy, macro one-vs-rest AUROC,
//! uncertainty densities, accuracy-versus-threshold curves, subjective
//! confusion matrices, and noise sweeps.
//!
//! AUROC scores class `k` by the fused Dirichlet mean `mu_hat_k` (macro
//! one-vs-rest with midrank tie handling); every report records that choice.

use crate::data::{inject_noise, DataError, MultiViewDataset, NoiseSpec};
use crate::model::{ModelError, TmcModel};
use ndarray::Axis;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no records to evaluate")]
    EmptyRecords,
    #[error("AUROC needs at least 2 classes present in the truth, found {0}")]
    SingleClass(usize),
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("threshold grid must be sorted ascending")]
    UnsortedGrid,
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One evaluated test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub true_label: usize,
    pub predicted: usize,
    /// Fused uncertainty mass.
    pub uncertainty: f64,
    /// Fused Dirichlet mean, one probability per class.
    pub probabilities: Vec<f64>,
}

impl SampleRecord {
    /// Largest belief mass, recovered from the Dirichlet mean:
    /// `b_k = mu_hat_k - u/K`.
    pub fn max_belief(&self) -> f64 {
        let k = self.probabilities.len() as f64;
        self.probabilities
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - self.uncertainty / k
    }

    /// A sample counts as uncertain when `u` exceeds every belief mass.
    pub fn is_uncertain(&self) -> bool {
        self.uncertainty > self.max_belief()
    }
}

/// Evaluation summary plus the per-sample records backing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub auroc: f64,
    pub num_samples: usize,
    pub num_classes: usize,
    /// Which score feeds the AUROC (fixed, recorded for transparency).
    pub score_source: String,
    pub records: Vec<SampleRecord>,
}

/// Fraction of records whose prediction matches the label.
pub fn accuracy(records: &[SampleRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let correct = records
        .iter()
        .filter(|r| r.predicted == r.true_label)
        .count();
    Ok(correct as f64 / records.len() as f64)
}

/// Midrank-based binary AUROC; `None` when either class is empty.
fn binary_auroc(truth: &[bool], scores: &[f64]) -> Option<f64> {
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let positive_rank_sum: f64 = truth
        .iter()
        .zip(&ranks)
        .filter(|(t, _)| **t)
        .map(|(_, r)| r)
        .sum();
    let p = positives as f64;
    Some((positive_rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// Macro one-vs-rest AUROC over the classes present in the truth.
///
/// Classes absent from the truth are excluded from the average (warned);
/// fewer than two present classes is an error.
pub fn auroc(records: &[SampleRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let num_classes = records[0].probabilities.len();
    let present: Vec<usize> = (0..num_classes)
        .filter(|&c| records.iter().any(|r| r.true_label == c))
        .collect();
    if present.len() < 2 {
        return Err(EvalError::SingleClass(present.len()));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for &c in &present {
        let truth: Vec<bool> = records.iter().map(|r| r.true_label == c).collect();
        let scores: Vec<f64> = records.iter().map(|r| r.probabilities[c]).collect();
        match binary_auroc(&truth, &scores) {
            Some(v) => {
                total += v;
                counted += 1;
            }
            None => log::warn!("class {c} has no negatives; excluded from macro AUROC"),
        }
    }
    for c in 0..num_classes {
        if !present.contains(&c) {
            log::warn!("class {c} absent from the truth; excluded from macro AUROC");
        }
    }
    Ok(total / counted as f64)
}

/// One point of the accuracy-versus-uncertainty-threshold curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// Fraction of samples with `u <= threshold`.
    pub coverage: f64,
    /// Accuracy over the retained samples; `None` when nothing is retained.
    pub accuracy: Option<f64>,
}

/// Retains samples with `u <= threshold` for each grid value.
pub fn threshold_curve(
    records: &[SampleRecord],
    thresholds: &[f64],
) -> Result<Vec<ThresholdPoint>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvalError::UnsortedGrid);
    }
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let retained: Vec<&SampleRecord> = records
                .iter()
                .filter(|r| r.uncertainty <= threshold)
                .collect();
            let coverage = retained.len() as f64 / records.len() as f64;
            let accuracy = if retained.is_empty() {
                None
            } else {
                let correct = retained
                    .iter()
                    .filter(|r| r.predicted == r.true_label)
                    .count();
                Some(correct as f64 / retained.len() as f64)
            };
            ThresholdPoint {
                threshold,
                coverage,
                accuracy,
            }
        })
        .collect())
}

/// Histogram of fused uncertainties over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyDensity {
    pub bins: usize,
    pub counts: Vec<usize>,
}

impl UncertaintyDensity {
    /// `[lo, hi)` edges of bin `i` (the last bin includes 1).
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        (
            i as f64 / self.bins as f64,
            (i + 1) as f64 / self.bins as f64,
        )
    }
}

pub fn uncertainty_density(
    records: &[SampleRecord],
    bins: usize,
) -> Result<UncertaintyDensity, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    if bins < 2 {
        return Err(EvalError::TooFewBins(bins));
    }
    let mut counts = vec![0usize; bins];
    for r in records {
        let idx = ((r.uncertainty * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(UncertaintyDensity { bins, counts })
}

/// Confusion matrix with an extra "uncertain" outcome.
///
/// Row `t` holds, for true class `t`, the proportion predicted as each class
/// (first `K` columns) and the proportion withheld as uncertain (last
/// column, rule `u > max_k b_k`). Rows of classes present in the records sum
/// to 1; absent classes leave all-zero rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveConfusion {
    pub num_classes: usize,
    /// `K x (K+1)` row-stochastic matrix, uncertain bucket last.
    pub rows: Vec<Vec<f64>>,
    /// Misclassification rate among non-uncertain samples, if any remain.
    pub retained_misclassification: Option<f64>,
    /// Misclassification rate over all samples.
    pub overall_misclassification: f64,
}

pub fn subjective_confusion(records: &[SampleRecord]) -> Result<SubjectiveConfusion, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    let k = records[0].probabilities.len();
    let mut counts = vec![vec![0usize; k + 1]; k];
    let mut retained = 0usize;
    let mut retained_wrong = 0usize;
    let mut wrong = 0usize;
    for r in records {
        if r.predicted != r.true_label {
            wrong += 1;
        }
        if r.is_uncertain() {
            counts[r.true_label][k] += 1;
        } else {
            counts[r.true_label][r.predicted] += 1;
            retained += 1;
            if r.predicted != r.true_label {
                retained_wrong += 1;
            }
        }
    }
    let rows = counts
        .into_iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            if total == 0 {
                vec![0.0; k + 1]
            } else {
                row.into_iter().map(|c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(SubjectiveConfusion {
        num_classes: k,
        rows,
        retained_misclassification: (retained > 0)
            .then(|| retained_wrong as f64 / retained as f64),
        overall_misclassification: wrong as f64 / records.len() as f64,
    })
}

/// Runs the fused model over every dataset row and summarizes the results.
pub fn evaluate_model(model: &TmcModel, ds: &MultiViewDataset) -> Result<EvalReport, EvalError> {
    let mut records = Vec::with_capacity(ds.num_samples());
    for i in 0..ds.num_samples() {
        let xs: Vec<_> = (0..ds.num_views())
            .map(|m| ds.view(m).index_axis_move(Axis(0), i))
            .collect();
        let prediction = model.predict(&xs)?;
        records.push(SampleRecord {
            true_label: ds.labels()[i],
            predicted: prediction.class,
            uncertainty: prediction.opinion.uncertainty(),
            probabilities: prediction.probabilities,
        });
    }
    Ok(EvalReport {
        accuracy: accuracy(&records)?,
        auroc: auroc(&records)?,
        num_samples: records.len(),
        num_classes: ds.num_classes(),
        score_source: "fused Dirichlet mean (mu_hat)".to_string(),
        records,
    })
}

/// Accuracy at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub accuracy: f64,
}

/// Evaluates the model on freshly noised copies of `test`, one per sigma.
pub fn noise_sweep(
    model: &TmcModel,
    test: &MultiViewDataset,
    sigmas: &[f64],
    views: &[usize],
    seed: u64,
) -> Result<Vec<SweepPoint>, EvalError> {
    let mut points = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let noised = inject_noise(
            test,
            &NoiseSpec {
                sigma,
                views: views.to_vec(),
                seed,
            },
        )?;
        points.push(SweepPoint {
            sigma,
            accuracy: model.accuracy_on(&noised)?,
        });
    }
    Ok(points)
}

fn open_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, EvalError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| EvalError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

fn finish(path: &Path, result: std::io::Result<()>) -> Result<(), EvalError> {
    result.map_err(|e| EvalError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// CSV with a `#`-prefixed column comment; empty accuracy field when nothing
/// was retained.
pub fn write_threshold_curve_csv(
    points: &[ThresholdPoint],
    path: &Path,
) -> Result<(), EvalError> {
    let mut w = open_writer(path)?;
    let result = (|| {
        writeln!(
            w,
            "# threshold,coverage,accuracy (accuracy empty when coverage is 0)"
        )?;
        for p in points {
            match p.accuracy {
                Some(a) => writeln!(w, "{},{},{}", p.threshold, p.coverage, a)?,
                None => writeln!(w, "{},{},", p.threshold, p.coverage)?,
            }
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_density_csv(density: &UncertaintyDensity, path: &Path) -> Result<(), EvalError> {
    let mut w = open_writer(path)?;
    let result = (|| {
        writeln!(w, "# bin_lo,bin_hi,count")?;
        for (i, &count) in density.counts.iter().enumerate() {
            let (lo, hi) = density.bin_edges(i);
            writeln!(w, "{lo},{hi},{count}")?;
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_confusion_csv(confusion: &SubjectiveConfusion, path: &Path) -> Result<(), EvalError> {
    let mut w = open_writer(path)?;
    let result = (|| {
        writeln!(
            w,
            "# true_class,proportion predicted as class 0..{}, uncertain",
            confusion.num_classes - 1
        )?;
        for (t, row) in confusion.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{t},{}", cells.join(","))?;
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<(), EvalError> {
    let mut w = open_writer(path)?;
    let result = (|| {
        writeln!(w, "# sigma,accuracy")?;
        for p in points {
            writeln!(w, "{},{}", p.sigma, p.accuracy)?;
        }
        w.flush()
    })();
    finish(path, result)
}
