//! Shared helpers for integration tests: synthetic multi-view datasets,
//! both in memory and as manifest + CSV fixtures on disk.

#![allow(dead_code)]

use ndarray::Array2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use tmc::data::MultiViewDataset;
use tmc::rng::PortableRng;

/// `k` Gaussian blobs on a circle, seen by two 2-d views under different
/// rotations. Class centers sit `radius` from the origin with unit noise.
pub fn blob_views(
    k: usize,
    n_per_class: usize,
    seed: u64,
    radius: f64,
) -> (Array2<f64>, Array2<f64>, Vec<usize>) {
    let mut rng = PortableRng::seed_from_u64(seed);
    let n = k * n_per_class;
    let mut v0 = Array2::zeros((n, 2));
    let mut v1 = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % k;
        let angle = 2.0 * std::f64::consts::PI * class as f64 / k as f64;
        v0[[i, 0]] = radius * angle.cos() + rng.normal();
        v0[[i, 1]] = radius * angle.sin() + rng.normal();
        let rotated = angle + std::f64::consts::PI / 3.0;
        v1[[i, 0]] = radius * rotated.cos() + rng.normal();
        v1[[i, 1]] = radius * rotated.sin() + rng.normal();
        labels.push(class);
    }
    (v0, v1, labels)
}

pub fn blob_dataset(k: usize, n_per_class: usize, seed: u64, radius: f64) -> MultiViewDataset {
    let (v0, v1, labels) = blob_views(k, n_per_class, seed, radius);
    MultiViewDataset::from_parts(vec![v0, v1], vec!["a".into(), "b".into()], labels, k).unwrap()
}

fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

/// Writes a two-view blob dataset as manifest + CSVs; returns the manifest
/// path.
pub fn write_blob_manifest(
    dir: &Path,
    k: usize,
    n_per_class: usize,
    seed: u64,
    radius: f64,
) -> PathBuf {
    let (v0, v1, labels) = blob_views(k, n_per_class, seed, radius);
    std::fs::write(dir.join("a.csv"), matrix_csv(&v0)).unwrap();
    std::fs::write(dir.join("b.csv"), matrix_csv(&v1)).unwrap();
    let label_csv: String = labels.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.join("labels.csv"), label_csv).unwrap();
    let manifest = dir.join("manifest.json");
    std::fs::write(
        &manifest,
        format!(
            "{{\"k\": {k}, \"views\": [{{\"name\": \"a\", \"path\": \"a.csv\"}}, \
             {{\"name\": \"b\", \"path\": \"b.csv\"}}], \"labels\": \"labels.csv\"}}"
        ),
    )
    .unwrap();
    manifest
}
