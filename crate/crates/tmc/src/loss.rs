//! Variational Dirichlet classification objective.
//!
//! Minimized per-sample loss:
//!
//! ```text
//! L(alpha, y, lambda) = psi(S) - psi(alpha_t)
//!                     + lambda * KL[Dir(alpha_tilde) || Dir(1, ..., 1)]
//! ```
//!
//! The first term is the Dirichlet expectation of the cross-entropy
//! (`t` is the ground-truth class, `S = sum(alpha)`); the second pushes every
//! non-target concentration toward 1, where `alpha_tilde` equals `alpha` with
//! the target component replaced by 1 so the true class is never penalized.
//! `lambda` is ramped from 0 to 1 over the first `anneal_epochs` epochs to
//! keep the regularizer from flattening the distribution early in training.

use crate::opinion::DirichletParams;
use crate::special::{digamma_raw, log_gamma_raw, trigamma_raw};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("label has {label} classes but alpha has {alpha}")]
    ClassCountMismatch { label: usize, alpha: usize },
    #[error("label index {index} out of range for {num_classes} classes")]
    LabelOutOfRange { index: usize, num_classes: usize },
    #[error("label vector is not one-hot")]
    NotOneHot,
    #[error("KL weight must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),
    #[error("anneal_epochs must be positive")]
    ZeroAnnealEpochs,
}

/// Ground-truth class as a one-hot vector, stored by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHotLabel {
    index: usize,
    num_classes: usize,
}

impl OneHotLabel {
    pub fn new(index: usize, num_classes: usize) -> Result<Self, LossError> {
        if index >= num_classes {
            return Err(LossError::LabelOutOfRange { index, num_classes });
        }
        Ok(Self { index, num_classes })
    }

    /// Parses a `{0, 1}` vector with exactly one 1.
    pub fn from_vec(y: &[f64]) -> Result<Self, LossError> {
        let mut index = None;
        for (i, &v) in y.iter().enumerate() {
            if v == 1.0 {
                if index.replace(i).is_some() {
                    return Err(LossError::NotOneHot);
                }
            } else if v != 0.0 {
                return Err(LossError::NotOneHot);
            }
        }
        match index {
            Some(i) => Self::new(i, y.len()),
            None => Err(LossError::NotOneHot),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Concentrations with the target component replaced by 1:
/// `alpha_tilde = y + (1 - y) .* alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedParams {
    alpha_tilde: Vec<f64>,
}

impl AdjustedParams {
    pub fn values(&self) -> &[f64] {
        &self.alpha_tilde
    }
}

pub fn adjusted_params(
    d: &DirichletParams,
    y: &OneHotLabel,
) -> Result<AdjustedParams, LossError> {
    check_match(d, y)?;
    let mut alpha_tilde = d.alpha().to_vec();
    alpha_tilde[y.index()] = 1.0;
    Ok(AdjustedParams { alpha_tilde })
}

/// Expected negative log-likelihood under the Dirichlet:
/// `psi(S) - psi(alpha_t) >= 0`.
pub fn expected_nll(d: &DirichletParams, y: &OneHotLabel) -> Result<f64, LossError> {
    check_match(d, y)?;
    Ok(digamma_raw(d.strength()) - digamma_raw(d.alpha()[y.index()]))
}

/// `KL[Dir(alpha_tilde) || Dir(1, ..., 1)]`, in closed form:
///
/// ```text
/// ln Gamma(S~) - ln Gamma(K) - sum_k ln Gamma(a~_k)
///   + sum_k (a~_k - 1) (psi(a~_k) - psi(S~))
/// ```
pub fn kl_to_uniform(adjusted: &AdjustedParams) -> f64 {
    let alpha = adjusted.values();
    let k = alpha.len() as f64;
    let strength: f64 = alpha.iter().sum();
    let psi_strength = digamma_raw(strength);
    let mut kl = log_gamma_raw(strength) - log_gamma_raw(k);
    for &a in alpha {
        kl -= log_gamma_raw(a);
        kl += (a - 1.0) * (digamma_raw(a) - psi_strength);
    }
    kl
}

/// Full per-sample loss `expected_nll + lambda * kl_to_uniform(adjusted)`.
pub fn sample_loss(d: &DirichletParams, y: &OneHotLabel, lambda: f64) -> Result<f64, LossError> {
    check_lambda(lambda)?;
    let nll = expected_nll(d, y)?;
    if lambda == 0.0 {
        return Ok(nll);
    }
    Ok(nll + lambda * kl_to_uniform(&adjusted_params(d, y)?))
}

/// Analytic gradient of [`sample_loss`] with respect to each `alpha_k`:
///
/// ```text
/// d/d alpha_j = psi'(S) - [j = t] psi'(alpha_t)
///             + lambda * [j != t] ((alpha_j - 1) psi'(alpha_j) - (S~ - K) psi'(S~))
/// ```
pub fn sample_loss_grad(
    d: &DirichletParams,
    y: &OneHotLabel,
    lambda: f64,
) -> Result<Vec<f64>, LossError> {
    check_lambda(lambda)?;
    check_match(d, y)?;
    let alpha = d.alpha();
    let k = alpha.len();
    let target = y.index();
    let tri_strength = trigamma_raw(d.strength());

    let mut grad = vec![tri_strength; k];
    grad[target] -= trigamma_raw(alpha[target]);

    if lambda != 0.0 {
        let adjusted = adjusted_params(d, y)?;
        let adj_strength: f64 = adjusted.values().iter().sum();
        let tri_adj_strength = trigamma_raw(adj_strength);
        let excess = adj_strength - k as f64;
        for (j, g) in grad.iter_mut().enumerate() {
            if j != target {
                *g += lambda
                    * ((alpha[j] - 1.0) * trigamma_raw(alpha[j]) - excess * tri_adj_strength);
            }
        }
    }
    Ok(grad)
}

fn check_match(d: &DirichletParams, y: &OneHotLabel) -> Result<(), LossError> {
    if d.num_classes() != y.num_classes() {
        return Err(LossError::ClassCountMismatch {
            label: y.num_classes(),
            alpha: d.num_classes(),
        });
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), LossError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LossError::LambdaOutOfRange(lambda));
    }
    Ok(())
}

/// Linear KL-annealing schedule: `lambda(epoch) = min(1, epoch / anneal_epochs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    anneal_epochs: u32,
}

impl AnnealSchedule {
    pub fn new(anneal_epochs: u32) -> Result<Self, LossError> {
        if anneal_epochs == 0 {
            return Err(LossError::ZeroAnnealEpochs);
        }
        Ok(Self { anneal_epochs })
    }

    pub fn anneal_epochs(&self) -> u32 {
        self.anneal_epochs
    }

    pub fn lambda(&self, epoch: u32) -> f64 {
        (f64::from(epoch) / f64::from(self.anneal_epochs)).min(1.0)
    }
}
