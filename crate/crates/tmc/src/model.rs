//! Per-view evidential classifiers and the fused multi-view model.
//!
//! Each view is scored by a small feedforward net (affine / ReLU stack with a
//! softplus head) whose outputs are read as evidence, giving concentration
//! parameters `alpha = softplus(o) + 1 >= 1`. Per-view opinions are fused by
//! the reduced combination rule; the training loss is the variational
//! Dirichlet objective of the fused opinion plus one term per view (plus a
//! pseudo-view term when enabled). Gradients are hand-derived reverse-mode
//! through the whole graph, including the fusion fold, and the optimizer is
//! Adam with additive L2 weight decay.

use crate::data::{DataError, MultiViewDataset, StandardizeStats};
use crate::fusion::{self, FusionError, OpinionGrad};
use crate::loss::{self, AnnealSchedule, LossError, OneHotLabel};
use crate::opinion::{
    dirichlet_from_opinion, expected_probabilities, opinion_from_dirichlet, DirichletParams,
    OpinionError, SubjectiveOpinion,
};
use crate::rng::PortableRng;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input width {got} does not match the network's expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("model expects {expected} views, got {got}")]
    ViewCountMismatch { expected: usize, got: usize },
    #[error("model has {model} classes but dataset has {dataset}")]
    ClassCountMismatch { model: usize, dataset: usize },
    #[error("layer {index} input width {got} does not match previous output {expected}")]
    LayerChainMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("a network needs at least one layer")]
    NoLayers,
    #[error("non-finite loss at epoch {epoch}, batch {batch}; training aborted")]
    NonFiniteLoss { epoch: u32, batch: usize },
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("cannot read or write checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("unsupported checkpoint format version {0}")]
    FormatVersion(u32),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
    #[error(transparent)]
    Data(#[from] DataError),
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// First index of the largest value; ties go to the lowest class.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Array2<f64>, // (input, output)
    biases: Array1<f64>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>) -> Result<Self, ModelError> {
        if weights.ncols() != biases.len() {
            return Err(ModelError::WidthMismatch {
                expected: weights.ncols(),
                got: biases.len(),
            });
        }
        Ok(Self { weights, biases })
    }

    fn random(input: usize, output: usize, rng: &mut PortableRng) -> Self {
        // He-scaled normal initialization; biases start at zero.
        let scale = (2.0 / input as f64).sqrt();
        let weights = Array2::from_shape_fn((input, output), |_| rng.normal() * scale);
        Self {
            weights,
            biases: Array1::zeros(output),
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }
}

/// Feedforward classifier head emitting non-negative evidence.
///
/// Hidden layers use ReLU; the final pre-activation passes through softplus,
/// so `alpha = softplus(o) + 1` is at least 1 for any input.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialNet {
    layers: Vec<DenseLayer>,
}

impl EvidentialNet {
    /// Random net with the given widths: `[input, hidden..., num_classes]`.
    pub fn random(widths: &[usize], rng: &mut PortableRng) -> Result<Self, ModelError> {
        if widths.len() < 2 {
            return Err(ModelError::NoLayers);
        }
        let layers = widths
            .windows(2)
            .map(|w| DenseLayer::random(w[0], w[1], rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::NoLayers);
        }
        for (index, pair) in layers.windows(2).enumerate() {
            if pair[0].weights.ncols() != pair[1].weights.nrows() {
                return Err(ModelError::LayerChainMismatch {
                    index: index + 1,
                    expected: pair[0].weights.ncols(),
                    got: pair[1].weights.nrows(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.layers
            .last()
            .expect("at least one layer")
            .weights
            .ncols()
    }

    fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<NetCache, ModelError> {
        if x.ncols() != self.input_width() {
            return Err(ModelError::WidthMismatch {
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            layer_inputs.push(h.clone());
            let z = h.dot(&layer.weights) + &layer.biases;
            h = if l + 1 < self.layers.len() {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre_activations.push(z);
        }
        let output = pre_activations.last().expect("at least one layer");
        let alphas = output.mapv(|o| softplus(o) + 1.0);
        Ok(NetCache {
            layer_inputs,
            pre_activations,
            alphas,
        })
    }

    /// Backpropagates a gradient on the final pre-activation through the
    /// stack, returning per-layer weight and bias gradients.
    fn backward(&self, cache: &NetCache, grad_output: Array2<f64>) -> NetGradients {
        let depth = self.layers.len();
        let mut weight_grads = vec![Array2::zeros((0, 0)); depth];
        let mut bias_grads = vec![Array1::zeros(0); depth];
        let mut g = grad_output;
        for l in (0..depth).rev() {
            weight_grads[l] = cache.layer_inputs[l].t().dot(&g);
            bias_grads[l] = g.sum_axis(Axis(0));
            if l > 0 {
                g = g.dot(&self.layers[l].weights.t());
                g.zip_mut_with(&cache.pre_activations[l - 1], |gv, &z| {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                });
            }
        }
        NetGradients {
            weights: weight_grads,
            biases: bias_grads,
        }
    }
}

struct NetCache {
    layer_inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    alphas: Array2<f64>,
}

/// Per-layer gradients of one net, aligned with its `layers()`.
pub struct NetGradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Maps a feature vector to Dirichlet parameters through one view's net.
pub fn forward_view(
    net: &EvidentialNet,
    x: ArrayView1<'_, f64>,
) -> Result<DirichletParams, ModelError> {
    let row = x.insert_axis(Axis(0));
    let cache = net.forward_cached(row)?;
    Ok(DirichletParams::new(cache.alphas.row(0).to_vec())?)
}

/// Optimizer and schedule settings for a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub anneal_epochs: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            learning_rate: 3e-3,
            weight_decay: 1e-4,
            anneal_epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::BadConfig("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::BadConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ModelError::BadConfig(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.anneal_epochs == 0 {
            return Err(ModelError::BadConfig(
                "anneal_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub final_train_accuracy: Option<f64>,
}

/// Single-sample output of the fused model.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub opinion: SubjectiveOpinion,
    pub probabilities: Vec<f64>,
}

/// The multi-view model: one evidential net per view, plus an optional
/// pseudo-view net fed with the concatenation of all views' features.
#[derive(Debug, Clone, PartialEq)]
pub struct TmcModel {
    view_nets: Vec<EvidentialNet>,
    pseudo_net: Option<EvidentialNet>,
    num_classes: usize,
}

impl TmcModel {
    /// Randomly initialized model. `hidden` gives the hidden widths used for
    /// every view net; when `None` each view gets one hidden layer of width
    /// `max(64, input/2)`.
    pub fn build(
        view_widths: &[usize],
        num_classes: usize,
        hidden: Option<&[usize]>,
        etmc: bool,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if view_widths.is_empty() {
            return Err(ModelError::ViewCountMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut rng = PortableRng::seed_from_u64(seed);
        let stack = |input: usize, rng: &mut PortableRng| -> Result<EvidentialNet, ModelError> {
            let mut widths = vec![input];
            match hidden {
                Some(h) => widths.extend_from_slice(h),
                None => widths.push((input / 2).max(64)),
            }
            widths.push(num_classes);
            EvidentialNet::random(&widths, rng)
        };
        let view_nets = view_widths
            .iter()
            .map(|&w| stack(w, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        let pseudo_net = if etmc {
            Some(stack(view_widths.iter().sum(), &mut rng)?)
        } else {
            None
        };
        Ok(Self {
            view_nets,
            pseudo_net,
            num_classes,
        })
    }

    pub fn from_nets(
        view_nets: Vec<EvidentialNet>,
        pseudo_net: Option<EvidentialNet>,
    ) -> Result<Self, ModelError> {
        let first = view_nets.first().ok_or(ModelError::NoLayers)?;
        let num_classes = first.num_classes();
        for net in view_nets.iter().chain(&pseudo_net) {
            if net.num_classes() != num_classes {
                return Err(ModelError::ClassCountMismatch {
                    model: num_classes,
                    dataset: net.num_classes(),
                });
            }
        }
        if let Some(pseudo) = &pseudo_net {
            let total: usize = view_nets.iter().map(|n| n.input_width()).sum();
            if pseudo.input_width() != total {
                return Err(ModelError::WidthMismatch {
                    expected: total,
                    got: pseudo.input_width(),
                });
            }
        }
        Ok(Self {
            view_nets,
            pseudo_net,
            num_classes,
        })
    }

    pub fn num_views(&self) -> usize {
        self.view_nets.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn is_etmc(&self) -> bool {
        self.pseudo_net.is_some()
    }

    pub fn view_widths(&self) -> Vec<usize> {
        self.view_nets.iter().map(|n| n.input_width()).collect()
    }

    pub fn view_nets(&self) -> &[EvidentialNet] {
        &self.view_nets
    }

    pub fn pseudo_net(&self) -> Option<&EvidentialNet> {
        self.pseudo_net.as_ref()
    }

    fn check_views(&self, got: usize) -> Result<(), ModelError> {
        if got != self.view_nets.len() {
            return Err(ModelError::ViewCountMismatch {
                expected: self.view_nets.len(),
                got,
            });
        }
        Ok(())
    }

    fn concat_features(xs: &[ArrayView1<'_, f64>]) -> Array1<f64> {
        let total: usize = xs.iter().map(|x| x.len()).sum();
        let mut out = Array1::zeros(total);
        let mut offset = 0;
        for x in xs {
            out.slice_mut(ndarray::s![offset..offset + x.len()])
                .assign(x);
            offset += x.len();
        }
        out
    }

    /// Per-view opinions, their fused opinion (pseudo-view included when
    /// present), and the fused opinion's Dirichlet parameters.
    pub fn forward_fused(
        &self,
        xs: &[ArrayView1<'_, f64>],
    ) -> Result<(Vec<SubjectiveOpinion>, SubjectiveOpinion, DirichletParams), ModelError> {
        self.check_views(xs.len())?;
        let mut opinions = Vec::with_capacity(xs.len() + 1);
        for (net, x) in self.view_nets.iter().zip(xs) {
            opinions.push(opinion_from_dirichlet(&forward_view(net, *x)?));
        }
        if let Some(pseudo) = &self.pseudo_net {
            let features = Self::concat_features(xs);
            opinions.push(opinion_from_dirichlet(&forward_view(
                pseudo,
                features.view(),
            )?));
        }
        let fused = fusion::combine_all(&opinions)?;
        let fused_dirichlet = dirichlet_from_opinion(&fused)?;
        Ok((opinions, fused, fused_dirichlet))
    }

    /// Predicted class (argmax of the fused Dirichlet mean, lowest index on
    /// ties), fused opinion, and expected class probabilities.
    pub fn predict(&self, xs: &[ArrayView1<'_, f64>]) -> Result<Prediction, ModelError> {
        let (_, fused, dirichlet) = self.forward_fused(xs)?;
        let probabilities = expected_probabilities(&dirichlet);
        Ok(Prediction {
            class: argmax(&probabilities),
            opinion: fused,
            probabilities,
        })
    }

    fn dataset_views(
        &self,
        ds: &MultiViewDataset,
        rows: &[usize],
    ) -> Result<Vec<Array2<f64>>, ModelError> {
        self.check_views(ds.num_views())?;
        if ds.num_classes() != self.num_classes {
            return Err(ModelError::ClassCountMismatch {
                model: self.num_classes,
                dataset: ds.num_classes(),
            });
        }
        Ok((0..ds.num_views())
            .map(|m| ds.view(m).select(Axis(0), rows))
            .collect())
    }

    /// Mean over the batch of the per-sample losses: fused term plus one term
    /// per view (plus the pseudo-view term when present).
    pub fn batch_loss(
        &self,
        views: &[Array2<f64>],
        labels: &[usize],
        lambda: f64,
    ) -> Result<f64, ModelError> {
        Ok(self.batch_pass(views, labels, lambda, false)?.0)
    }

    /// [`Self::batch_loss`] together with its gradients for every net
    /// (pseudo-view last), backpropagated through the fusion fold.
    pub fn batch_loss_and_grads(
        &self,
        views: &[Array2<f64>],
        labels: &[usize],
        lambda: f64,
    ) -> Result<(f64, Vec<NetGradients>), ModelError> {
        let (loss, grads) = self.batch_pass(views, labels, lambda, true)?;
        Ok((loss, grads.expect("gradients were requested")))
    }

    /// Shared forward (and optional backward) pass over a batch.
    fn batch_pass(
        &self,
        views: &[Array2<f64>],
        labels: &[usize],
        lambda: f64,
        with_grads: bool,
    ) -> Result<(f64, Option<Vec<NetGradients>>), ModelError> {
        self.check_views(views.len())?;
        let batch = labels.len();
        if batch == 0 || views.iter().any(|v| v.nrows() != batch) {
            return Err(ModelError::BadConfig(
                "batch views and labels must be non-empty and aligned".into(),
            ));
        }

        // Forward through every net, pseudo-view last.
        let mut caches = Vec::with_capacity(views.len() + 1);
        for (net, view) in self.view_nets.iter().zip(views) {
            caches.push(net.forward_cached(view.view())?);
        }
        if let Some(pseudo) = &self.pseudo_net {
            let width: usize = views.iter().map(|v| v.ncols()).sum();
            let mut concat = Array2::zeros((batch, width));
            let mut offset = 0;
            for view in views {
                concat
                    .slice_mut(ndarray::s![.., offset..offset + view.ncols()])
                    .assign(view);
                offset += view.ncols();
            }
            caches.push(pseudo.forward_cached(concat.view())?);
        }
        let branches = caches.len();
        let k = self.num_classes;

        let mut total_loss = 0.0;
        let mut alpha_grads: Vec<Array2<f64>> = if with_grads {
            (0..branches).map(|_| Array2::zeros((batch, k))).collect()
        } else {
            Vec::new()
        };

        for i in 0..batch {
            let label = OneHotLabel::new(labels[i], k)?;
            let branch_params: Vec<DirichletParams> = caches
                .iter()
                .map(|c| DirichletParams::new(c.alphas.row(i).to_vec()))
                .collect::<Result<_, _>>()?;
            let branch_opinions: Vec<SubjectiveOpinion> =
                branch_params.iter().map(opinion_from_dirichlet).collect();

            // Left fold, keeping every intermediate for the backward pass.
            let mut folded = Vec::with_capacity(branches);
            folded.push(branch_opinions[0].clone());
            for m in 1..branches {
                let next = fusion::combine(&folded[m - 1], &branch_opinions[m])?;
                folded.push(next);
            }
            let fused = folded.last().expect("at least one branch");
            let fused_params = dirichlet_from_opinion(fused)?;

            total_loss += loss::sample_loss(&fused_params, &label, lambda)?;
            for params in &branch_params {
                total_loss += loss::sample_loss(params, &label, lambda)?;
            }
            if !with_grads {
                continue;
            }

            // Fused-loss gradient pulled back to the fused opinion's masses:
            // alpha_k = b_k * S + 1 with S = K/u.
            let fused_alpha_grad = loss::sample_loss_grad(&fused_params, &label, lambda)?;
            let strength = fused_params.strength();
            let mut grad = OpinionGrad {
                belief: fused_alpha_grad.iter().map(|g| g * strength).collect(),
                uncertainty: -(strength / fused.uncertainty())
                    * fused_alpha_grad
                        .iter()
                        .zip(fused.belief())
                        .map(|(g, b)| g * b)
                        .sum::<f64>(),
            };

            // Back through the fold, then through each branch's mass map.
            let mut branch_grads: Vec<OpinionGrad> =
                (0..branches).map(|_| OpinionGrad::zeros(k)).collect();
            for m in (1..branches).rev() {
                let (left, right) =
                    fusion::combine_vjp(&folded[m - 1], &branch_opinions[m], &folded[m], &grad);
                branch_grads[m] = right;
                grad = left;
            }
            branch_grads[0] = grad;

            // Opinion masses to concentration parameters, Eq. b = (a-1)/S,
            // u = K/S, plus each branch's own loss term.
            for (m, (params, opinion)) in
                branch_params.iter().zip(&branch_opinions).enumerate()
            {
                let direct = loss::sample_loss_grad(params, &label, lambda)?;
                let s = params.strength();
                let g = &branch_grads[m];
                let belief_dot: f64 = g
                    .belief
                    .iter()
                    .zip(opinion.belief())
                    .map(|(gb, b)| gb * b)
                    .sum();
                let uncertainty_term = g.uncertainty * k as f64 / (s * s);
                for j in 0..k {
                    alpha_grads[m][[i, j]] =
                        direct[j] + g.belief[j] / s - belief_dot / s - uncertainty_term;
                }
            }
        }

        let mean_loss = total_loss / batch as f64;
        if !with_grads {
            return Ok((mean_loss, None));
        }

        // alpha -> pre-activation (softplus'), then batched backprop per net.
        let nets = self.view_nets.iter().chain(self.pseudo_net.iter());
        let mut net_grads = Vec::with_capacity(branches);
        for (m, (net, cache)) in nets.zip(&caches).enumerate() {
            let z = cache.pre_activations.last().expect("at least one layer");
            let mut grad_output = alpha_grads[m].clone();
            grad_output.zip_mut_with(z, |g, &zv| *g *= sigmoid(zv));
            grad_output.mapv_inplace(|g| g / batch as f64);
            net_grads.push(net.backward(cache, grad_output));
        }
        Ok((mean_loss, Some(net_grads)))
    }

    /// Trains in place with Adam; bitwise deterministic for a given config.
    pub fn train(
        &mut self,
        ds: &MultiViewDataset,
        cfg: &TrainConfig,
    ) -> Result<TrainReport, ModelError> {
        cfg.validate()?;
        self.check_views(ds.num_views())?;
        if ds.num_classes() != self.num_classes {
            return Err(ModelError::ClassCountMismatch {
                model: self.num_classes,
                dataset: ds.num_classes(),
            });
        }
        if cfg.epochs == 0 {
            return Ok(TrainReport {
                epoch_losses: Vec::new(),
                final_train_accuracy: None,
            });
        }
        let schedule = AnnealSchedule::new(cfg.anneal_epochs)?;
        let mut rng = PortableRng::seed_from_u64(cfg.seed);
        let mut optimizer = AdamState::new(self, cfg.learning_rate, cfg.weight_decay);
        let n = ds.num_samples();
        let mut order: Vec<usize> = (0..n).collect();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs as usize);

        for epoch in 0..cfg.epochs {
            let lambda = schedule.lambda(epoch);
            rng.shuffle(&mut order);
            let mut epoch_loss = 0.0;
            for (batch_index, rows) in order.chunks(cfg.batch_size).enumerate() {
                let views = self.dataset_views(ds, rows)?;
                let labels: Vec<usize> = rows.iter().map(|&r| ds.labels()[r]).collect();
                let (batch_loss, grads) = self.batch_loss_and_grads(&views, &labels, lambda)?;
                if !batch_loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss {
                        epoch,
                        batch: batch_index,
                    });
                }
                optimizer.step(self, &grads);
                epoch_loss += batch_loss * rows.len() as f64;
            }
            epoch_losses.push(epoch_loss / n as f64);
        }

        let accuracy = self.accuracy_on(ds)?;
        Ok(TrainReport {
            epoch_losses,
            final_train_accuracy: Some(accuracy),
        })
    }

    /// Fraction of dataset rows whose fused prediction matches the label.
    pub fn accuracy_on(&self, ds: &MultiViewDataset) -> Result<f64, ModelError> {
        let mut correct = 0usize;
        for i in 0..ds.num_samples() {
            let xs: Vec<ArrayView1<'_, f64>> =
                (0..ds.num_views())
                .map(|m| ds.view(m).index_axis_move(Axis(0), i))
                .collect();
            if self.predict(&xs)?.class == ds.labels()[i] {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.num_samples() as f64)
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam with additive L2 weight decay; moments are kept per tensor,
/// indexed like the model's nets with the pseudo-view last.
struct AdamState {
    learning_rate: f64,
    weight_decay: f64,
    step: u64,
    m_weights: Vec<Vec<Array2<f64>>>,
    v_weights: Vec<Vec<Array2<f64>>>,
    m_biases: Vec<Vec<Array1<f64>>>,
    v_biases: Vec<Vec<Array1<f64>>>,
}

impl AdamState {
    fn new(model: &TmcModel, learning_rate: f64, weight_decay: f64) -> Self {
        let mut m_weights = Vec::new();
        let mut v_weights = Vec::new();
        let mut m_biases = Vec::new();
        let mut v_biases = Vec::new();
        for net in model.view_nets.iter().chain(model.pseudo_net.iter()) {
            m_weights.push(
                net.layers
                    .iter()
                    .map(|l| Array2::zeros(l.weights.dim()))
                    .collect(),
            );
            v_weights.push(
                net.layers
                    .iter()
                    .map(|l| Array2::zeros(l.weights.dim()))
                    .collect(),
            );
            m_biases.push(
                net.layers
                    .iter()
                    .map(|l| Array1::zeros(l.biases.len()))
                    .collect(),
            );
            v_biases.push(
                net.layers
                    .iter()
                    .map(|l| Array1::zeros(l.biases.len()))
                    .collect(),
            );
        }
        Self {
            learning_rate,
            weight_decay,
            step: 0,
            m_weights,
            v_weights,
            m_biases,
            v_biases,
        }
    }

    fn step(&mut self, model: &mut TmcModel, grads: &[NetGradients]) {
        self.step += 1;
        let correction1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let correction2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        let scale = self.learning_rate * correction2.sqrt() / correction1;
        let decay = self.weight_decay;

        let nets = model
            .view_nets
            .iter_mut()
            .chain(model.pseudo_net.iter_mut());
        for (n, (net, grad)) in nets.zip(grads).enumerate() {
            for (l, layer) in net.layers.iter_mut().enumerate() {
                ndarray::Zip::from(&mut layer.weights)
                    .and(&grad.weights[l])
                    .and(&mut self.m_weights[n][l])
                    .and(&mut self.v_weights[n][l])
                    .for_each(|t, &g, m, v| {
                        let g = g + decay * *t;
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                        *t -= scale * *m / (v.sqrt() + ADAM_EPS);
                    });
                ndarray::Zip::from(&mut layer.biases)
                    .and(&grad.biases[l])
                    .and(&mut self.m_biases[n][l])
                    .and(&mut self.v_biases[n][l])
                    .for_each(|t, &g, m, v| {
                        let g = g + decay * *t;
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                        *t -= scale * *m / (v.sqrt() + ADAM_EPS);
                    });
            }
        }
    }
}

/// Current checkpoint schema version.
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Serialized weights of one net: row-major weight matrices plus biases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetWeights {
    /// `(input, output)` of each layer.
    pub shapes: Vec<(usize, usize)>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetWeights {
    fn from_net(net: &EvidentialNet) -> Self {
        Self {
            shapes: net
                .layers
                .iter()
                .map(|l| (l.weights.nrows(), l.weights.ncols()))
                .collect(),
            weights: net
                .layers
                .iter()
                .map(|l| l.weights.iter().cloned().collect())
                .collect(),
            biases: net.layers.iter().map(|l| l.biases.to_vec()).collect(),
        }
    }

    fn to_net(&self) -> Result<EvidentialNet, ModelError> {
        let mut layers = Vec::with_capacity(self.shapes.len());
        for ((shape, weights), biases) in self.shapes.iter().zip(&self.weights).zip(&self.biases) {
            let matrix = Array2::from_shape_vec(*shape, weights.clone()).map_err(|e| {
                ModelError::BadConfig(format!("weight shape mismatch in checkpoint: {e}"))
            })?;
            layers.push(DenseLayer::new(matrix, Array1::from_vec(biases.clone()))?);
        }
        EvidentialNet::from_layers(layers)
    }
}

/// Everything needed to rebuild a trained pipeline from one JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub num_classes: usize,
    pub etmc: bool,
    pub view_widths: Vec<usize>,
    pub view_nets: Vec<NetWeights>,
    pub pseudo_net: Option<NetWeights>,
    pub train_config: TrainConfig,
    pub test_fraction: f64,
    pub standardization: StandardizeStats,
}

impl Checkpoint {
    pub fn from_model(
        model: &TmcModel,
        train_config: &TrainConfig,
        test_fraction: f64,
        standardization: &StandardizeStats,
    ) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            num_classes: model.num_classes(),
            etmc: model.is_etmc(),
            view_widths: model.view_widths(),
            view_nets: model.view_nets.iter().map(NetWeights::from_net).collect(),
            pseudo_net: model.pseudo_net.as_ref().map(NetWeights::from_net),
            train_config: train_config.clone(),
            test_fraction,
            standardization: standardization.clone(),
        }
    }

    pub fn to_model(&self) -> Result<TmcModel, ModelError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(ModelError::FormatVersion(self.format_version));
        }
        let view_nets = self
            .view_nets
            .iter()
            .map(NetWeights::to_net)
            .collect::<Result<Vec<_>, _>>()?;
        let pseudo_net = self
            .pseudo_net
            .as_ref()
            .map(NetWeights::to_net)
            .transpose()?;
        let model = TmcModel::from_nets(view_nets, pseudo_net)?;
        if model.num_classes() != self.num_classes || model.view_widths() != self.view_widths {
            return Err(ModelError::BadConfig(
                "checkpoint metadata disagrees with stored weights".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| ModelError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, json + "\n").map_err(|e| ModelError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| ModelError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MultiViewDataset;
    use ndarray::array;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    /// Net with one affine layer whose output is the bias, independent of
    /// input: alpha = softplus(bias) + 1.
    fn constant_net(input: usize, biases: &[f64]) -> EvidentialNet {
        let layer = DenseLayer::new(
            Array2::zeros((input, biases.len())),
            Array1::from_vec(biases.to_vec()),
        )
        .unwrap();
        EvidentialNet::from_layers(vec![layer]).unwrap()
    }

    /// Bias value whose softplus equals the requested evidence.
    fn bias_for_evidence(e: f64) -> f64 {
        (e.exp() - 1.0).ln()
    }

    #[test]
    fn zero_initialized_head_gives_ln2_evidence() {
        let net = constant_net(3, &[0.0, 0.0]);
        let d = forward_view(&net, array![1.0, -2.0, 0.5].view()).unwrap();
        for &a in d.alpha() {
            assert_close(a, 1.0 + std::f64::consts::LN_2, 1e-12);
        }
    }

    #[test]
    fn random_net_outputs_valid_alphas() {
        let mut rng = PortableRng::seed_from_u64(1);
        let net = EvidentialNet::random(&[5, 8, 3], &mut rng).unwrap();
        for _ in 0..50 {
            let x = Array1::from_shape_fn(5, |_| rng.normal() * 10.0);
            let d = forward_view(&net, x.view()).unwrap();
            assert!(d.alpha().iter().all(|&a| a >= 1.0));
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let net = constant_net(3, &[0.0, 0.0]);
        assert!(matches!(
            forward_view(&net, array![1.0, 2.0].view()),
            Err(ModelError::WidthMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    fn worked_opinion_model() -> TmcModel {
        // Opinions {b=[0.6,0.2],u=0.2} and {b=[0.7,0.1],u=0.2} correspond to
        // alpha [7,3] and [8,2], i.e. evidence [6,2] and [7,1].
        let net1 = constant_net(2, &[bias_for_evidence(6.0), bias_for_evidence(2.0)]);
        let net2 = constant_net(2, &[bias_for_evidence(7.0), bias_for_evidence(1.0)]);
        TmcModel::from_nets(vec![net1, net2], None).unwrap()
    }

    #[test]
    fn forward_fused_reproduces_worked_example() {
        let model = worked_opinion_model();
        let x = array![0.0, 0.0];
        let (opinions, fused, dirichlet) = model.forward_fused(&[x.view(), x.view()]).unwrap();
        assert_close(opinions[0].belief()[0], 0.6, 1e-12);
        assert_close(opinions[1].belief()[0], 0.7, 1e-12);
        assert_close(fused.belief()[0], 0.85, 1e-12);
        assert_close(fused.belief()[1], 0.10, 1e-12);
        assert_close(fused.uncertainty(), 0.05, 1e-12);
        assert_close(dirichlet.alpha()[0], 35.0, 1e-9);
        assert_close(dirichlet.alpha()[1], 5.0, 1e-9);
    }

    #[test]
    fn single_view_fused_equals_view() {
        let net = constant_net(2, &[bias_for_evidence(6.0), bias_for_evidence(2.0)]);
        let model = TmcModel::from_nets(vec![net], None).unwrap();
        let x = array![0.3, -0.1];
        let (opinions, fused, _) = model.forward_fused(&[x.view()]).unwrap();
        assert_eq!(opinions[0], fused);
    }

    #[test]
    fn vacuous_view_does_not_move_the_fused_opinion() {
        // Second net emits ~zero evidence, i.e. a near-vacuous opinion.
        let informative = constant_net(2, &[bias_for_evidence(6.0), bias_for_evidence(2.0)]);
        let vacuous = constant_net(2, &[-40.0, -40.0]);
        let model = TmcModel::from_nets(vec![informative, vacuous], None).unwrap();
        let x = array![0.0, 0.0];
        let (_, fused, _) = model.forward_fused(&[x.view(), x.view()]).unwrap();
        assert_close(fused.belief()[0], 0.6, 1e-9);
        assert_close(fused.uncertainty(), 0.2, 1e-9);
    }

    #[test]
    fn predict_argmax_and_tie_break() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        let model = worked_opinion_model();
        let x = array![0.0, 0.0];
        let p = model.predict(&[x.view(), x.view()]).unwrap();
        assert_eq!(p.class, 0);
        assert_close(p.probabilities[0], 0.875, 1e-9);
    }

    #[test]
    fn batch_loss_single_view_is_twice_sample_loss() {
        let net = constant_net(1, &[bias_for_evidence(3.0), bias_for_evidence(1.0)]);
        let model = TmcModel::from_nets(vec![net], None).unwrap();
        let views = vec![array![[0.0], [0.0]]];
        let labels = vec![0usize, 1usize];
        let lambda = 0.7;
        let batch = model.batch_loss(&views, &labels, lambda).unwrap();
        let alpha = DirichletParams::new(vec![4.0, 2.0]).unwrap();
        let mut expected = 0.0;
        for &l in &labels {
            expected += 2.0
                * loss::sample_loss(&alpha, &OneHotLabel::new(l, 2).unwrap(), lambda).unwrap();
        }
        assert_close(batch, expected / 2.0, 1e-9);
    }

    #[test]
    fn batch_loss_two_views_matches_manual_composition() {
        let model = worked_opinion_model();
        let views = vec![array![[0.0, 0.0]], array![[0.0, 0.0]]];
        let labels = vec![0usize];
        let lambda = 0.25;
        let batch = model.batch_loss(&views, &labels, lambda).unwrap();

        let y = OneHotLabel::new(0, 2).unwrap();
        let v1 = DirichletParams::new(vec![7.0, 3.0]).unwrap();
        let v2 = DirichletParams::new(vec![8.0, 2.0]).unwrap();
        let fused = DirichletParams::new(vec![35.0, 5.0]).unwrap();
        let expected = loss::sample_loss(&fused, &y, lambda).unwrap()
            + loss::sample_loss(&v1, &y, lambda).unwrap()
            + loss::sample_loss(&v2, &y, lambda).unwrap();
        assert_close(batch, expected, 1e-9);
    }

    #[test]
    fn lambda_zero_strips_kl_terms() {
        let model = worked_opinion_model();
        let views = vec![array![[0.0, 0.0]], array![[0.0, 0.0]]];
        let labels = vec![1usize];
        let batch = model.batch_loss(&views, &labels, 0.0).unwrap();
        let y = OneHotLabel::new(1, 2).unwrap();
        let expected =
            loss::expected_nll(&DirichletParams::new(vec![35.0, 5.0]).unwrap(), &y).unwrap()
                + loss::expected_nll(&DirichletParams::new(vec![7.0, 3.0]).unwrap(), &y).unwrap()
                + loss::expected_nll(&DirichletParams::new(vec![8.0, 2.0]).unwrap(), &y).unwrap();
        assert_close(batch, expected, 1e-10);
    }

    /// Minimum |hidden pre-activation| across nets; finite differences near
    /// the ReLU kink are meaningless, so such draws get rejected.
    fn kink_margin(model: &TmcModel, views: &[Array2<f64>]) -> f64 {
        let mut all_views: Vec<Array2<f64>> = views.to_vec();
        if model.pseudo_net.is_some() {
            let batch = views[0].nrows();
            let width: usize = views.iter().map(|v| v.ncols()).sum();
            let mut concat = Array2::zeros((batch, width));
            let mut offset = 0;
            for view in views {
                concat
                    .slice_mut(ndarray::s![.., offset..offset + view.ncols()])
                    .assign(view);
                offset += view.ncols();
            }
            all_views.push(concat);
        }
        let mut margin = f64::INFINITY;
        for (net, view) in model
            .view_nets
            .iter()
            .chain(model.pseudo_net.iter())
            .zip(&all_views)
        {
            let cache = net.forward_cached(view.view()).unwrap();
            for z in &cache.pre_activations[..cache.pre_activations.len() - 1] {
                for v in z {
                    margin = margin.min(v.abs());
                }
            }
        }
        margin
    }

    /// Finite-difference check of every weight and bias on a tiny model.
    fn gradient_check(etmc: bool, seed: u64) {
        let mut rng = PortableRng::seed_from_u64(seed);
        let (model, views) = loop {
            let net1 = EvidentialNet::random(&[3, 4, 2], &mut rng).unwrap();
            let net2 = EvidentialNet::random(&[4, 4, 2], &mut rng).unwrap();
            let pseudo = if etmc {
                Some(EvidentialNet::random(&[7, 4, 2], &mut rng).unwrap())
            } else {
                None
            };
            let model = TmcModel::from_nets(vec![net1, net2], pseudo).unwrap();
            let views = vec![
                Array2::from_shape_fn((5, 3), |_| rng.normal()),
                Array2::from_shape_fn((5, 4), |_| rng.normal()),
            ];
            if kink_margin(&model, &views) > 1e-3 {
                break (model, views);
            }
        };
        let labels = vec![0usize, 1, 0, 1, 1];
        let lambda = 0.6;
        let (_, grads) = model.batch_loss_and_grads(&views, &labels, lambda).unwrap();

        let h = 1e-5;
        let branches = model.view_nets.len() + usize::from(etmc);
        for n in 0..branches {
            let layer_count = if n < model.view_nets.len() {
                model.view_nets[n].layers.len()
            } else {
                model.pseudo_net.as_ref().unwrap().layers.len()
            };
            for l in 0..layer_count {
                let eval = |entry: Entry, delta: f64| -> f64 {
                    let mut rebuilt = model.clone();
                    let net = if n < rebuilt.view_nets.len() {
                        &mut rebuilt.view_nets[n]
                    } else {
                        rebuilt.pseudo_net.as_mut().unwrap()
                    };
                    match entry {
                        Entry::Weight(r, c) => net.layers[l].weights[[r, c]] += delta,
                        Entry::Bias(j) => net.layers[l].biases[j] += delta,
                    }
                    rebuilt.batch_loss(&views, &labels, lambda).unwrap()
                };
                let source = if n < model.view_nets.len() {
                    &model.view_nets[n]
                } else {
                    model.pseudo_net.as_ref().unwrap()
                };
                let (rows, cols) = source.layers[l].weights.dim();
                for r in 0..rows {
                    for c in 0..cols {
                        let fd = (eval(Entry::Weight(r, c), h) - eval(Entry::Weight(r, c), -h))
                            / (2.0 * h);
                        let analytic = grads[n].weights[l][[r, c]];
                        let scale = analytic.abs().max(fd.abs()).max(1e-2);
                        assert!(
                            (analytic - fd).abs() / scale <= 1e-4,
                            "net {n} layer {l} weight ({r},{c}): {analytic} vs fd {fd}"
                        );
                    }
                }
                for j in 0..source.layers[l].biases.len() {
                    let fd = (eval(Entry::Bias(j), h) - eval(Entry::Bias(j), -h)) / (2.0 * h);
                    let analytic = grads[n].biases[l][j];
                    let scale = analytic.abs().max(fd.abs()).max(1e-2);
                    assert!(
                        (analytic - fd).abs() / scale <= 1e-4,
                        "net {n} layer {l} bias {j}: {analytic} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[derive(Clone, Copy)]
    enum Entry {
        Weight(usize, usize),
        Bias(usize),
    }

    #[test]
    fn gradients_match_finite_differences_tmc() {
        gradient_check(false, 41);
    }

    #[test]
    fn gradients_match_finite_differences_etmc() {
        gradient_check(true, 43);
    }

    fn blob_dataset(n_per_class: usize, seed: u64, separation: f64) -> MultiViewDataset {
        // Two Gaussian blobs per view, centers separation apart on each axis.
        let mut rng = PortableRng::seed_from_u64(seed);
        let n = 2 * n_per_class;
        let mut v0 = Array2::zeros((n, 2));
        let mut v1 = Array2::zeros((n, 3));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let center = if class == 0 {
                -separation / 2.0
            } else {
                separation / 2.0
            };
            for j in 0..2 {
                v0[[i, j]] = center + rng.normal();
            }
            for j in 0..3 {
                v1[[i, j]] = -center + rng.normal();
            }
            labels.push(class);
        }
        MultiViewDataset::from_parts(vec![v0, v1], vec!["x".into(), "y".into()], labels, 2)
            .unwrap()
    }

    #[test]
    fn training_learns_separable_blobs() {
        let ds = blob_dataset(100, 5, 6.0);
        let mut model = TmcModel::build(&[2, 3], 2, Some(&[8]), false, 7).unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 32,
            learning_rate: 3e-3,
            weight_decay: 1e-4,
            anneal_epochs: 50,
            seed: 7,
        };
        let report = model.train(&ds, &cfg).unwrap();
        assert_eq!(report.epoch_losses.len(), 60);
        let accuracy = report.final_train_accuracy.unwrap();
        assert!(accuracy >= 0.95, "train accuracy {accuracy}");
        // Loss trend: means over consecutive 5-epoch windows do not increase.
        let windows: Vec<f64> = report
            .epoch_losses
            .chunks(5)
            .map(|w| w.iter().sum::<f64>() / w.len() as f64)
            .collect();
        for pair in windows.windows(2) {
            assert!(pair[1] <= pair[0] + 0.05, "loss windows rose: {windows:?}");
        }
        // Evidence non-negativity after optimization (architectural).
        for i in 0..ds.num_samples() {
            let xs = vec![
                ds.view(0).index_axis_move(Axis(0), i),
                ds.view(1).index_axis_move(Axis(0), i),
            ];
            let (_, _, d) = model.forward_fused(&xs).unwrap();
            assert!(d.alpha().iter().all(|&a| a >= 1.0));
        }
    }

    #[test]
    fn zero_epochs_leaves_model_unchanged() {
        let ds = blob_dataset(10, 5, 6.0);
        let mut model = TmcModel::build(&[2, 3], 2, Some(&[4]), false, 3).unwrap();
        let before = model.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let report = model.train(&ds, &cfg).unwrap();
        assert!(report.epoch_losses.is_empty());
        assert!(report.final_train_accuracy.is_none());
        assert_eq!(model, before);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let ds = blob_dataset(20, 9, 6.0);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            seed: 11,
            ..TrainConfig::default()
        };
        let run = || {
            let mut model = TmcModel::build(&[2, 3], 2, Some(&[4]), true, 11).unwrap();
            model.train(&ds, &cfg).unwrap();
            model
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
    }

    #[test]
    fn dropping_a_view_never_lowers_uncertainty() {
        let ds = blob_dataset(40, 13, 4.0);
        let mut model = TmcModel::build(&[2, 3], 2, Some(&[8]), false, 19).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 20,
            seed: 19,
            ..TrainConfig::default()
        };
        model.train(&ds, &cfg).unwrap();
        for i in 0..ds.num_samples() {
            let xs = vec![
                ds.view(0).index_axis_move(Axis(0), i),
                ds.view(1).index_axis_move(Axis(0), i),
            ];
            let (opinions, fused, _) = model.forward_fused(&xs).unwrap();
            for dropped in 0..opinions.len() {
                let remainder: Vec<SubjectiveOpinion> = opinions
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| *m != dropped)
                    .map(|(_, o)| o.clone())
                    .collect();
                let partial = fusion::combine_all(&remainder).unwrap();
                assert!(fused.uncertainty() <= partial.uncertainty() + 1e-9);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let ds = blob_dataset(15, 23, 6.0);
        let mut model = TmcModel::build(&[2, 3], 2, None, true, 23).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 10,
            seed: 23,
            ..TrainConfig::default()
        };
        model.train(&ds, &cfg).unwrap();
        let stats = crate::data::fit_standardization(&ds).unwrap();
        let checkpoint = Checkpoint::from_model(&model, &cfg, 0.2, &stats);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        checkpoint.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.to_model().unwrap(), model);
        assert_eq!(loaded.standardization, stats);
        assert_eq!(loaded.test_fraction, 0.2);
    }

    #[test]
    fn checkpoint_rejects_unknown_version() {
        let model = worked_opinion_model();
        let stats = StandardizeStats {
            means: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            scales: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        };
        let mut checkpoint = Checkpoint::from_model(&model, &TrainConfig::default(), 0.2, &stats);
        checkpoint.format_version = 99;
        assert!(matches!(
            checkpoint.to_model(),
            Err(ModelError::FormatVersion(99))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
