//! Dirichlet concentration parameters, evidence, and subjective opinions,
//! with the conversions between them.
//!
//! A classifier head emits non-negative evidence `e`, giving concentration
//! parameters `alpha = e + 1` with strength `S = sum(alpha)`. The associated
//! subjective opinion assigns belief `b_k = (alpha_k - 1)/S` to each class
//! and uncertainty `u = K/S` to the frame, so that `u + sum(b_k) = 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the `u + sum(b) = 1` normalization check.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpinionError {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("concentration parameter alpha[{index}] = {value} is below 1")]
    ConcentrationBelowOne { index: usize, value: f64 },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("negative evidence e[{index}] = {value}")]
    NegativeEvidence { index: usize, value: f64 },
    #[error("negative belief mass b[{index}] = {value}")]
    NegativeBelief { index: usize, value: f64 },
    #[error("uncertainty mass must lie in (0, 1], got {0}")]
    UncertaintyOutOfRange(f64),
    #[error("masses must satisfy u + sum(b) = 1, got {0}")]
    NotNormalized(f64),
}

/// Concentration parameters of a Dirichlet distribution over `K >= 2` classes.
///
/// Every component is at least 1; anything smaller signals an upstream
/// activation bug and is rejected rather than clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self, OpinionError> {
        if alpha.len() < 2 {
            return Err(OpinionError::TooFewClasses(alpha.len()));
        }
        for (index, &value) in alpha.iter().enumerate() {
            if !value.is_finite() {
                return Err(OpinionError::NonFinite { index, value });
            }
            if value < 1.0 {
                return Err(OpinionError::ConcentrationBelowOne { index, value });
            }
        }
        Ok(Self { alpha })
    }

    /// The uniform Dirichlet `alpha = (1, ..., 1)` (zero evidence).
    pub fn uniform(k: usize) -> Result<Self, OpinionError> {
        Self::new(vec![1.0; k])
    }

    /// `alpha = e + 1` from non-negative evidence.
    pub fn from_evidence(evidence: &Evidence) -> Self {
        Self {
            alpha: evidence.values().iter().map(|e| e + 1.0).collect(),
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Dirichlet strength `S = sum(alpha)`.
    pub fn strength(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Evidence vector `e = alpha - 1`.
    pub fn evidence(&self) -> Evidence {
        Evidence {
            values: self.alpha.iter().map(|a| a - 1.0).collect(),
        }
    }
}

/// Non-negative per-class evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    values: Vec<f64>,
}

impl Evidence {
    pub fn new(values: Vec<f64>) -> Result<Self, OpinionError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(OpinionError::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(OpinionError::NegativeEvidence { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A subjective opinion: per-class belief masses plus an uncertainty mass.
///
/// Serialized as `{"belief": [...], "uncertainty": u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOpinion")]
pub struct SubjectiveOpinion {
    belief: Vec<f64>,
    uncertainty: f64,
}

#[derive(Deserialize)]
struct RawOpinion {
    belief: Vec<f64>,
    uncertainty: f64,
}

impl TryFrom<RawOpinion> for SubjectiveOpinion {
    type Error = OpinionError;

    fn try_from(raw: RawOpinion) -> Result<Self, OpinionError> {
        SubjectiveOpinion::new(raw.belief, raw.uncertainty)
    }
}

impl SubjectiveOpinion {
    pub fn new(belief: Vec<f64>, uncertainty: f64) -> Result<Self, OpinionError> {
        if belief.len() < 2 {
            return Err(OpinionError::TooFewClasses(belief.len()));
        }
        for (index, &value) in belief.iter().enumerate() {
            if !value.is_finite() {
                return Err(OpinionError::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(OpinionError::NegativeBelief { index, value });
            }
        }
        if !uncertainty.is_finite() || uncertainty <= 0.0 || uncertainty > 1.0 + NORMALIZATION_TOL
        {
            return Err(OpinionError::UncertaintyOutOfRange(uncertainty));
        }
        let total = uncertainty + belief.iter().sum::<f64>();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(OpinionError::NotNormalized(total));
        }
        Ok(Self {
            belief,
            uncertainty,
        })
    }

    /// Constructor for masses the caller guarantees; used where normalization
    /// holds by construction and in derivative probes that intentionally step
    /// off the simplex.
    pub(crate) fn new_unchecked(belief: Vec<f64>, uncertainty: f64) -> Self {
        Self {
            belief,
            uncertainty,
        }
    }

    /// The fully uncertain opinion: zero belief, `u = 1`.
    pub fn vacuous(k: usize) -> Result<Self, OpinionError> {
        Self::new(vec![0.0; k], 1.0)
    }

    pub fn belief(&self) -> &[f64] {
        &self.belief
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    pub fn num_classes(&self) -> usize {
        self.belief.len()
    }

    pub fn max_belief(&self) -> f64 {
        self.belief.iter().cloned().fold(0.0, f64::max)
    }

    /// Same belief proportions, rescaled so the uncertainty becomes `u_new`.
    ///
    /// Requires `u < 1` (belief proportions of a vacuous opinion are
    /// undefined). Used to probe how the fused uncertainty co-varies with an
    /// operand's uncertainty while its belief direction is held fixed.
    pub fn with_uncertainty(&self, u_new: f64) -> Result<Self, OpinionError> {
        if self.uncertainty >= 1.0 {
            return Err(OpinionError::UncertaintyOutOfRange(self.uncertainty));
        }
        if !(u_new > 0.0 && u_new <= 1.0) {
            return Err(OpinionError::UncertaintyOutOfRange(u_new));
        }
        let scale = (1.0 - u_new) / (1.0 - self.uncertainty);
        Self::new(self.belief.iter().map(|b| b * scale).collect(), u_new)
    }
}

/// Belief and uncertainty masses of a Dirichlet: `b_k = (alpha_k - 1)/S`,
/// `u = K/S`.
pub fn opinion_from_dirichlet(d: &DirichletParams) -> SubjectiveOpinion {
    let s = d.strength();
    let belief = d.alpha().iter().map(|a| (a - 1.0) / s).collect();
    SubjectiveOpinion::new_unchecked(belief, d.num_classes() as f64 / s)
}

/// Recovers concentration parameters from an opinion:
/// `S = K/u`, `e_k = b_k * S`, `alpha_k = e_k + 1`.
pub fn dirichlet_from_opinion(o: &SubjectiveOpinion) -> Result<DirichletParams, OpinionError> {
    if o.uncertainty() <= 0.0 {
        // Unreachable through validated construction, rejected anyway.
        return Err(OpinionError::UncertaintyOutOfRange(o.uncertainty()));
    }
    let s = o.num_classes() as f64 / o.uncertainty();
    DirichletParams::new(o.belief().iter().map(|b| b * s + 1.0).collect())
}

/// Mean of the Dirichlet distribution, `mu_hat_k = alpha_k / S`.
pub fn expected_probabilities(d: &DirichletParams) -> Vec<f64> {
    let s = d.strength();
    d.alpha().iter().map(|a| a / s).collect()
}
