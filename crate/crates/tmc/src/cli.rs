//! Command-line pipeline: `train`, `evaluate`, `fuse`, and `noise-sweep`.
//!
//! A run is described by a flat JSON config file; command-line flags override
//! file values. Every command is deterministic given `(config, seed)`:
//! reports serialize floats with 12 significant digits, checkpoints keep
//! full-precision floats, and reruns produce byte-identical files.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

use crate::data::{
    self, apply_standardization, inject_noise, load_manifest, DataError, MultiViewDataset,
    NoiseSpec,
};
use crate::eval::{
    self, evaluate_model, noise_sweep, subjective_confusion, threshold_curve,
    uncertainty_density, EvalError, EvalReport,
};
use crate::fusion::{self, FusionError};
use crate::model::{Checkpoint, ModelError, TmcModel, TrainConfig, TrainReport};
use crate::opinion::SubjectiveOpinion;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Output { .. } => EXIT_DATA,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            ModelError::Fusion(FusionError::TotalConflict { .. }) => {
                CliError::Numeric(e.to_string())
            }
            ModelError::BadConfig(_) | ModelError::FormatVersion(_) => {
                CliError::Config(e.to_string())
            }
            ModelError::Data(d) => CliError::Data(d),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::Data(d) => CliError::Data(d),
            EvalError::Write { path, message } => CliError::Output { path, message },
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::TotalConflict { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Data(DataError::Invalid(other.to_string())),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "tmc",
    about = "Trusted multi-view classification: evidential fusion training and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a model from a dataset manifest and write a run directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint on its held-out split.
    Evaluate(EvaluateArgs),
    /// Fuse a JSON list of subjective opinions and print the result.
    Fuse(FuseArgs),
    /// Evaluate a checkpoint under increasing feature noise.
    NoiseSweep(NoiseSweepArgs),
}

/// Flat run configuration; any field may instead come from `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub etmc: bool,
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub anneal_epochs: u32,
    pub test_fraction: f64,
    /// Hidden widths per view net; absent means one layer of max(64, d/2).
    pub hidden: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            manifest: None,
            out: None,
            seed: None,
            etmc: false,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            weight_decay: t.weight_decay,
            anneal_epochs: t.anneal_epochs,
            test_fraction: 0.2,
            hidden: None,
        }
    }
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            anneal_epochs: self.anneal_epochs,
            seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// JSON run-config file; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory (default: runs/train-<timestamp>-seed<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add the concatenated pseudo-view.
    #[arg(long)]
    pub etmc: bool,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub anneal_epochs: Option<u32>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Comma-separated hidden widths for every view net.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory (default: runs/eval-<timestamp>-seed<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gaussian noise level applied to the test views before evaluation.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Comma-separated view indices receiving the noise.
    #[arg(long, value_delimiter = ',')]
    pub noise_views: Option<Vec<usize>>,
    /// Noise seed (default: the checkpoint's training seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// JSON file holding a list of opinions:
    /// [{"belief": [...], "uncertainty": u}, ...]
    pub opinions: PathBuf,
}

#[derive(Args, Debug)]
pub struct NoiseSweepArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated noise levels, e.g. "0,1,10,100".
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub noise_views: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            cmd_train(&args)?;
            Ok(())
        }
        Command::Evaluate(args) => {
            cmd_evaluate(&args)?;
            Ok(())
        }
        Command::Fuse(args) => {
            let fused = cmd_fuse(&args.opinions)?;
            println!("{}", to_json_12sig(&fused)?);
            Ok(())
        }
        Command::NoiseSweep(args) => {
            cmd_noise_sweep(&args)?;
            Ok(())
        }
    }
}

/// Everything `train` wrote, for downstream consumption.
pub struct TrainOutputs {
    pub out_dir: PathBuf,
    pub checkpoint_path: PathBuf,
    pub report: EvalReport,
    pub train_report: TrainReport,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainOutputs, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.manifest {
        config.manifest = Some(v.clone());
    }
    if let Some(v) = &args.out {
        config.out = Some(v.clone());
    }
    if let Some(v) = args.seed {
        config.seed = Some(v);
    }
    if args.etmc {
        config.etmc = true;
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.lr {
        config.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = args.weight_decay {
        config.weight_decay = v;
    }
    if let Some(v) = args.anneal_epochs {
        config.anneal_epochs = v;
    }
    if let Some(v) = args.test_fraction {
        config.test_fraction = v;
    }
    if let Some(v) = &args.hidden {
        config.hidden = Some(v.clone());
    }

    let manifest = config
        .manifest
        .clone()
        .ok_or_else(|| CliError::Config("manifest: required (file or --manifest)".into()))?;
    if !manifest.exists() {
        return Err(CliError::Config(format!(
            "manifest: path {} does not exist",
            manifest.display()
        )));
    }
    let seed = config
        .seed
        .ok_or_else(|| CliError::Config("seed: required (file or --seed)".into()))?;
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(CliError::Config(format!(
            "test_fraction: must lie strictly between 0 and 1, got {}",
            config.test_fraction
        )));
    }
    let train_config = config.train_config(seed);
    train_config.validate()?;

    let out_dir = resolve_out_dir(&config.out, "train", seed)?;

    let ds = load_manifest(&manifest)?;
    let (train_raw, test_raw) = data::split(&ds, config.test_fraction, seed)?;
    let (train_set, test_set, stats) = data::standardize(&train_raw, &test_raw)?;

    let mut model = TmcModel::build(
        &ds.view_widths(),
        ds.num_classes(),
        config.hidden.as_deref(),
        config.etmc,
        seed,
    )?;
    let train_report = model.train(&train_set, &train_config)?;
    let report = evaluate_model(&model, &test_set)?;

    let checkpoint = Checkpoint::from_model(&model, &train_config, config.test_fraction, &stats);
    let checkpoint_path = out_dir.join("checkpoint.json");
    checkpoint.save(&checkpoint_path)?;

    write_text(&out_dir.join("config.json"), &to_json_12sig(&config)?)?;
    write_text(&out_dir.join("report.json"), &to_json_12sig(&report)?)?;
    let mut loss_csv = String::from("# epoch,mean_train_loss\n");
    for (epoch, loss) in train_report.epoch_losses.iter().enumerate() {
        loss_csv.push_str(&format!("{epoch},{loss}\n"));
    }
    write_text(&out_dir.join("train_loss.csv"), &loss_csv)?;
    write_eval_artifacts(&report, &out_dir)?;

    println!(
        "trained {} views (etmc: {}) for {} epochs; test accuracy {:.4}, AUROC {:.4}; outputs in {}",
        ds.num_views(),
        config.etmc,
        train_config.epochs,
        report.accuracy,
        report.auroc,
        out_dir.display()
    );
    Ok(TrainOutputs {
        out_dir,
        checkpoint_path,
        report,
        train_report,
    })
}

/// Rebuilds the held-out test set exactly as `train` saw it.
fn reload_test_set(
    checkpoint: &Checkpoint,
    manifest: &Path,
) -> Result<(TmcModel, MultiViewDataset), CliError> {
    let model = checkpoint.to_model()?;
    let ds = load_manifest(manifest)?;
    if ds.num_classes() != model.num_classes() {
        return Err(CliError::Data(DataError::Invalid(format!(
            "checkpoint expects {} classes but manifest has {}",
            model.num_classes(),
            ds.num_classes()
        ))));
    }
    if ds.view_widths() != model.view_widths() {
        return Err(CliError::Data(DataError::Invalid(format!(
            "checkpoint expects view widths {:?} but manifest has {:?}",
            model.view_widths(),
            ds.view_widths()
        ))));
    }
    let (_, test_raw) = data::split(&ds, checkpoint.test_fraction, checkpoint.train_config.seed)?;
    let test_set = apply_standardization(&test_raw, &checkpoint.standardization)?;
    Ok((model, test_set))
}

pub struct EvaluateOutputs {
    pub out_dir: PathBuf,
    pub report: EvalReport,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvaluateOutputs, CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let (model, mut test_set) = reload_test_set(&checkpoint, &args.manifest)?;
    let seed = args.seed.unwrap_or(checkpoint.train_config.seed);
    if args.sigma != 0.0 {
        let views = args
            .noise_views
            .clone()
            .unwrap_or_else(|| (0..test_set.num_views()).collect());
        test_set = inject_noise(
            &test_set,
            &NoiseSpec {
                sigma: args.sigma,
                views,
                seed,
            },
        )?;
    }
    let out_dir = resolve_out_dir(&args.out, "eval", seed)?;
    let report = evaluate_model(&model, &test_set)?;
    write_text(&out_dir.join("report.json"), &to_json_12sig(&report)?)?;
    write_eval_artifacts(&report, &out_dir)?;
    println!(
        "evaluated {} samples: accuracy {:.4}, AUROC {:.4}; outputs in {}",
        report.num_samples,
        report.accuracy,
        report.auroc,
        out_dir.display()
    );
    Ok(EvaluateOutputs { out_dir, report })
}

/// Threshold grid used for the accuracy-coverage curve: 0.00, 0.01, ..., 1.00.
fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

const DENSITY_BINS: usize = 20;

fn write_eval_artifacts(report: &EvalReport, out_dir: &Path) -> Result<(), CliError> {
    let curve = threshold_curve(&report.records, &threshold_grid())?;
    eval::write_threshold_curve_csv(&curve, &out_dir.join("threshold_curve.csv"))?;
    let density = uncertainty_density(&report.records, DENSITY_BINS)?;
    eval::write_density_csv(&density, &out_dir.join("density.csv"))?;
    let confusion = subjective_confusion(&report.records)?;
    eval::write_confusion_csv(&confusion, &out_dir.join("subjective_confusion.csv"))?;
    Ok(())
}

pub fn cmd_fuse(opinions_path: &Path) -> Result<SubjectiveOpinion, CliError> {
    let text = std::fs::read_to_string(opinions_path).map_err(|e| {
        CliError::Data(DataError::Io {
            path: opinions_path.to_path_buf(),
            source: e,
        })
    })?;
    let opinions: Vec<SubjectiveOpinion> = serde_json::from_str(&text).map_err(|e| {
        CliError::Data(DataError::Manifest {
            path: opinions_path.to_path_buf(),
            message: e.to_string(),
        })
    })?;
    Ok(fusion::combine_all(&opinions)?)
}

pub struct SweepOutputs {
    pub out_dir: PathBuf,
    pub points: Vec<eval::SweepPoint>,
}

pub fn cmd_noise_sweep(args: &NoiseSweepArgs) -> Result<SweepOutputs, CliError> {
    if args.sigmas.is_empty() {
        return Err(CliError::Config("sigmas: at least one value required".into()));
    }
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let (model, test_set) = reload_test_set(&checkpoint, &args.manifest)?;
    let seed = args.seed.unwrap_or(checkpoint.train_config.seed);
    let views = args
        .noise_views
        .clone()
        .unwrap_or_else(|| (0..test_set.num_views()).collect());
    let out_dir = resolve_out_dir(&args.out, "sweep", seed)?;
    let points = noise_sweep(&model, &test_set, &args.sigmas, &views, seed)?;
    eval::write_sweep_csv(&points, &out_dir.join("sweep.csv"))?;
    for p in &points {
        println!("sigma {:>8}: accuracy {:.4}", p.sigma, p.accuracy);
    }
    println!("sweep written to {}", out_dir.display());
    Ok(SweepOutputs { out_dir, points })
}

fn resolve_out_dir(out: &Option<PathBuf>, kind: &str, seed: u64) -> Result<PathBuf, CliError> {
    let dir = match out {
        Some(d) => d.clone(),
        None => {
            let stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            PathBuf::from(format!("runs/{kind}-{stamp}-seed{seed}"))
        }
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Output {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(dir)
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pretty JSON with every float printed as 12 significant digits
/// (`{:.11e}`), so repeated runs emit byte-identical reports.
pub fn to_json_12sig<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut serializer =
        serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter::new());
    value
        .serialize(&mut serializer)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

/// Pretty formatter that fixes float formatting to 12 significant digits.
struct SigFigFormatter {
    indent: usize,
    has_value: bool,
}

impl SigFigFormatter {
    fn new() -> Self {
        Self {
            indent: 0,
            has_value: false,
        }
    }

    fn newline<W: ?Sized + std::io::Write>(&self, writer: &mut W) -> std::io::Result<()> {
        writer.write_all(b"\n")?;
        for _ in 0..self.indent {
            writer.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(writer, "{value:.11e}")
    }

    fn begin_array<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"[")
    }

    fn end_array<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn end_array_value<W: ?Sized + std::io::Write>(
        &mut self,
        _writer: &mut W,
    ) -> std::io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent += 1;
        self.has_value = false;
        writer.write_all(b"{")
    }

    fn end_object<W: ?Sized + std::io::Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.indent -= 1;
        if self.has_value {
            self.newline(writer)?;
        }
        writer.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        if !first {
            writer.write_all(b",")?;
        }
        self.newline(writer)
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
    ) -> std::io::Result<()> {
        writer.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + std::io::Write>(
        &mut self,
        _writer: &mut W,
    ) -> std::io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}
