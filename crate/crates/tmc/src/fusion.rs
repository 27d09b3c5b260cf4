//! Reduced Dempster-Shafer combination of subjective opinions.
//!
//! Two opinions over the same `K` classes combine as
//!
//! ```text
//! b_k = (b1_k*b2_k + b1_k*u2 + b2_k*u1) / (1 - C)
//! u   = u1*u2 / (1 - C)
//! C   = sum_{i != j} b1_i * b2_j
//! ```
//!
//! where `C` measures the belief mass the two opinions assign to mutually
//! exclusive classes. Total conflict (`C -> 1`) leaves the rule undefined and
//! is surfaced as an error. Multi-view fusion is the left-to-right fold of
//! this rule over the view order, which commutes and associates up to
//! floating-point error.
//!
//! The module also exposes executable forms of the rule's guarantees:
//! integrating an opinion whose target belief dominates cannot lower the
//! target belief; any degradation is bounded in closed form; and the fused
//! uncertainty never exceeds either operand's.

use crate::opinion::SubjectiveOpinion;
use thiserror::Error;

/// Slack used when verifying the combination-rule guarantees numerically.
pub const PROP_TOL: f64 = 1e-9;

/// `1 - C` at or below this is treated as total conflict.
pub const TOTAL_CONFLICT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("class counts differ: {left} vs {right}")]
    ClassCountMismatch { left: usize, right: usize },
    #[error("total conflict: C = {conflict} leaves the combination undefined")]
    TotalConflict { conflict: f64 },
    #[error("cannot fold an empty list of opinions")]
    EmptyFold,
    #[error("target class {target} out of range for {k} classes")]
    TargetOutOfRange { target: usize, k: usize },
    #[error(
        "accuracy-gain guarantee needs b_target of the added opinion ({target_belief}) \
         to be at least the largest original belief ({max_original})"
    )]
    AccuracyPreconditionUnmet {
        target_belief: f64,
        max_original: f64,
    },
}

/// Belief mass two opinions place on mutually exclusive classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictMeasure(f64);

impl ConflictMeasure {
    /// `C = sum_{i != j} b1_i b2_j = (sum b1)(sum b2) - sum_k b1_k b2_k`.
    pub fn between(
        o1: &SubjectiveOpinion,
        o2: &SubjectiveOpinion,
    ) -> Result<Self, FusionError> {
        if o1.num_classes() != o2.num_classes() {
            return Err(FusionError::ClassCountMismatch {
                left: o1.num_classes(),
                right: o2.num_classes(),
            });
        }
        let total1: f64 = o1.belief().iter().sum();
        let total2: f64 = o2.belief().iter().sum();
        let aligned: f64 = o1
            .belief()
            .iter()
            .zip(o2.belief())
            .map(|(a, b)| a * b)
            .sum();
        Ok(Self((total1 * total2 - aligned).max(0.0)))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_total(&self) -> bool {
        1.0 - self.0 <= TOTAL_CONFLICT_TOL
    }
}

/// Combines two opinions with the reduced combination rule.
pub fn combine(
    o1: &SubjectiveOpinion,
    o2: &SubjectiveOpinion,
) -> Result<SubjectiveOpinion, FusionError> {
    let conflict = ConflictMeasure::between(o1, o2)?;
    if conflict.is_total() {
        return Err(FusionError::TotalConflict {
            conflict: conflict.value(),
        });
    }
    let scale = 1.0 / (1.0 - conflict.value());
    let (u1, u2) = (o1.uncertainty(), o2.uncertainty());
    let belief: Vec<f64> = o1
        .belief()
        .iter()
        .zip(o2.belief())
        .map(|(b1, b2)| (b1 * b2 + b1 * u2 + b2 * u1) * scale)
        .collect();
    Ok(SubjectiveOpinion::new_unchecked(belief, u1 * u2 * scale))
}

/// Left-to-right fold of `combine` over the view order.
pub fn combine_all(opinions: &[SubjectiveOpinion]) -> Result<SubjectiveOpinion, FusionError> {
    let (first, rest) = opinions.split_first().ok_or(FusionError::EmptyFold)?;
    let mut fused = first.clone();
    for o in rest {
        fused = combine(&fused, o)?;
    }
    Ok(fused)
}

/// Guarantee: when the added opinion's target belief is at least the largest
/// original belief, fusing cannot lower the target belief.
///
/// Rejects pairs that do not meet the precondition. Returns whether
/// `b_target(fused) >= b_target(original)` (slack [`PROP_TOL`]); always true
/// under the precondition.
pub fn check_accuracy_gain(
    original: &SubjectiveOpinion,
    additional: &SubjectiveOpinion,
    target: usize,
) -> Result<bool, FusionError> {
    if target >= additional.num_classes() {
        return Err(FusionError::TargetOutOfRange {
            target,
            k: additional.num_classes(),
        });
    }
    let target_belief = additional.belief()[target];
    let max_original = original.max_belief();
    if target_belief < max_original {
        return Err(FusionError::AccuracyPreconditionUnmet {
            target_belief,
            max_original,
        });
    }
    let fused = combine(original, additional)?;
    Ok(fused.belief()[target] >= original.belief()[target] - PROP_TOL)
}

/// Measured drop of the target belief after fusing, with its closed-form cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationBound {
    /// `b_target(original) - b_target(fused)`; negative when fusing helped.
    pub degradation: f64,
    /// `b_t^o (1 + u^o)(1 - u^a) / (1 + u^o (1 - u^a))`.
    pub bound: f64,
}

impl DegradationBound {
    pub fn holds(&self) -> bool {
        self.degradation <= self.bound + PROP_TOL
    }
}

/// Guarantee: the drop of any target belief caused by integrating another
/// opinion never exceeds a bound that vanishes as the added opinion becomes
/// vacuous.
pub fn check_degradation_bound(
    original: &SubjectiveOpinion,
    additional: &SubjectiveOpinion,
    target: usize,
) -> Result<DegradationBound, FusionError> {
    if target >= original.num_classes() {
        return Err(FusionError::TargetOutOfRange {
            target,
            k: original.num_classes(),
        });
    }
    let fused = combine(original, additional)?;
    let b_orig = original.belief()[target];
    let (u_orig, u_add) = (original.uncertainty(), additional.uncertainty());
    Ok(DegradationBound {
        degradation: b_orig - fused.belief()[target],
        bound: b_orig * (1.0 + u_orig) * (1.0 - u_add) / (1.0 + u_orig * (1.0 - u_add)),
    })
}

/// Guarantee: fused uncertainty never exceeds either operand's,
/// `u <= min(u^o, u^a)` (slack [`PROP_TOL`]).
pub fn check_uncertainty_reduction(
    original: &SubjectiveOpinion,
    additional: &SubjectiveOpinion,
) -> Result<bool, FusionError> {
    let fused = combine(original, additional)?;
    let cap = original.uncertainty().min(additional.uncertainty());
    Ok(fused.uncertainty() <= cap + PROP_TOL)
}

/// Guarantee: fused uncertainty co-varies with an operand's uncertainty.
///
/// Raising the original opinion's uncertainty to `raised_u` while keeping its
/// belief proportions fixed must not lower the fused uncertainty.
pub fn check_uncertainty_correlation(
    original: &SubjectiveOpinion,
    additional: &SubjectiveOpinion,
    raised_u: f64,
) -> Result<bool, FusionError> {
    let raised = original
        .with_uncertainty(raised_u.max(original.uncertainty()))
        .map_err(|_| FusionError::TotalConflict { conflict: 1.0 })?;
    let low = combine(original, additional)?;
    let high = combine(&raised, additional)?;
    Ok(high.uncertainty() >= low.uncertainty() - PROP_TOL)
}

/// Gradient of a scalar with respect to one opinion's masses.
#[derive(Debug, Clone)]
pub(crate) struct OpinionGrad {
    pub belief: Vec<f64>,
    pub uncertainty: f64,
}

impl OpinionGrad {
    pub fn zeros(k: usize) -> Self {
        Self {
            belief: vec![0.0; k],
            uncertainty: 0.0,
        }
    }

}

/// Vector-Jacobian product of `combine`: pulls a gradient on the fused
/// opinion back onto both operands. `fused` must be `combine(o1, o2)`.
pub(crate) fn combine_vjp(
    o1: &SubjectiveOpinion,
    o2: &SubjectiveOpinion,
    fused: &SubjectiveOpinion,
    grad_out: &OpinionGrad,
) -> (OpinionGrad, OpinionGrad) {
    let k = o1.num_classes();
    let conflict = ConflictMeasure::between(o1, o2).expect("operands already combined");
    let inv_denom = 1.0 / (1.0 - conflict.value());
    let total1: f64 = o1.belief().iter().sum();
    let total2: f64 = o2.belief().iter().sum();
    let (u1, u2) = (o1.uncertainty(), o2.uncertainty());

    // Shared term from differentiating the 1/(1 - C) normalizer:
    // (grad_b . b_fused + grad_u * u_fused) / (1 - C).
    let mut renorm = grad_out.uncertainty * fused.uncertainty();
    for i in 0..k {
        renorm += grad_out.belief[i] * fused.belief()[i];
    }
    renorm *= inv_denom;

    let mut g1 = OpinionGrad::zeros(k);
    let mut g2 = OpinionGrad::zeros(k);
    for i in 0..k {
        let (b1, b2) = (o1.belief()[i], o2.belief()[i]);
        // dC/db1_i = total2 - b2_i; dC/db2_i = total1 - b1_i.
        g1.belief[i] = grad_out.belief[i] * (b2 + u2) * inv_denom + (total2 - b2) * renorm;
        g2.belief[i] = grad_out.belief[i] * (b1 + u1) * inv_denom + (total1 - b1) * renorm;
        g1.uncertainty += grad_out.belief[i] * b2 * inv_denom;
        g2.uncertainty += grad_out.belief[i] * b1 * inv_denom;
    }
    g1.uncertainty += grad_out.uncertainty * u2 * inv_denom;
    g2.uncertainty += grad_out.uncertainty * u1 * inv_denom;
    (g1, g2)
}

/// Draws an opinion uniformly over the extended simplex
/// (`K` beliefs plus uncertainty summing to one).
pub fn sample_opinion(k: usize, rng: &mut crate::rng::PortableRng) -> SubjectiveOpinion {
    loop {
        let draws: Vec<f64> = (0..=k).map(|_| -rng.uniform_open().ln()).collect();
        let total: f64 = draws.iter().sum();
        let uncertainty = draws[k] / total;
        if uncertainty > 0.0 {
            let belief = draws[..k].iter().map(|d| d / total).collect();
            return SubjectiveOpinion::new_unchecked(belief, uncertainty);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::PortableRng;

    fn opinion(belief: &[f64], u: f64) -> SubjectiveOpinion {
        SubjectiveOpinion::new(belief.to_vec(), u).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn worked_two_view_example() {
        let o1 = opinion(&[0.6, 0.2], 0.2);
        let o2 = opinion(&[0.7, 0.1], 0.2);
        let c = ConflictMeasure::between(&o1, &o2).unwrap();
        assert_close(c.value(), 0.2, 1e-15);
        let fused = combine(&o1, &o2).unwrap();
        assert_close(fused.belief()[0], 0.85, 1e-12);
        assert_close(fused.belief()[1], 0.10, 1e-12);
        assert_close(fused.uncertainty(), 0.05, 1e-12);
    }

    #[test]
    fn vacuous_is_identity() {
        let o = opinion(&[0.6, 0.2], 0.2);
        let vac = SubjectiveOpinion::vacuous(2).unwrap();
        for fused in [combine(&o, &vac).unwrap(), combine(&vac, &o).unwrap()] {
            assert_close(fused.belief()[0], 0.6, 1e-12);
            assert_close(fused.belief()[1], 0.2, 1e-12);
            assert_close(fused.uncertainty(), 0.2, 1e-12);
        }
    }

    #[test]
    fn conflicting_evidence_raises_uncertainty() {
        // Nearly disjoint single-class opinions: C = (1 - eps)^2, and the
        // fused masses reduce to b = (1-eps)/(2-eps), u = eps/(2-eps).
        let eps = 1e-3;
        let o1 = opinion(&[1.0 - eps, 0.0], eps);
        let o2 = opinion(&[0.0, 1.0 - eps], eps);
        let c = ConflictMeasure::between(&o1, &o2).unwrap();
        assert_close(c.value(), (1.0 - eps) * (1.0 - eps), 1e-15);
        let fused = combine(&o1, &o2).unwrap();
        assert_close(fused.belief()[0], (1.0 - eps) / (2.0 - eps), 1e-12);
        assert_close(fused.belief()[1], (1.0 - eps) / (2.0 - eps), 1e-12);
        assert_close(fused.uncertainty(), eps / (2.0 - eps), 1e-12);
        // Far above the no-conflict product u1*u2/(1 - 0) = eps^2.
        assert!(fused.uncertainty() > 100.0 * eps * eps);
    }

    #[test]
    fn total_conflict_is_an_error() {
        let o1 = opinion(&[1.0, 0.0], f64::MIN_POSITIVE);
        let o2 = opinion(&[0.0, 1.0], f64::MIN_POSITIVE);
        assert!(matches!(
            combine(&o1, &o2),
            Err(FusionError::TotalConflict { .. })
        ));
    }

    #[test]
    fn class_count_mismatch() {
        let o1 = opinion(&[0.5, 0.3], 0.2);
        let o2 = opinion(&[0.3, 0.3, 0.2], 0.2);
        assert!(matches!(
            combine(&o1, &o2),
            Err(FusionError::ClassCountMismatch { .. })
        ));
    }

    #[test]
    fn fold_single_and_identity_absorption() {
        let o = opinion(&[0.6, 0.2], 0.2);
        let vac = SubjectiveOpinion::vacuous(2).unwrap();
        assert!(matches!(combine_all(&[]), Err(FusionError::EmptyFold)));
        let single = combine_all(std::slice::from_ref(&o)).unwrap();
        assert_eq!(single, o);
        let absorbed = combine_all(&[o.clone(), vac.clone(), vac]).unwrap();
        assert_close(absorbed.belief()[0], 0.6, 1e-12);
        assert_close(absorbed.uncertainty(), 0.2, 1e-12);
    }

    #[test]
    fn commutative_and_associative() {
        let mut rng = PortableRng::seed_from_u64(21);
        for _ in 0..5000 {
            let a = sample_opinion(3, &mut rng);
            let b = sample_opinion(3, &mut rng);
            let c = sample_opinion(3, &mut rng);
            let ab = combine(&a, &b).unwrap();
            let ba = combine(&b, &a).unwrap();
            for (x, y) in ab.belief().iter().zip(ba.belief()) {
                assert_close(*x, *y, 1e-12);
            }
            assert_close(ab.uncertainty(), ba.uncertainty(), 1e-12);

            let left = combine(&ab, &c).unwrap();
            let right = combine(&a, &combine(&b, &c).unwrap()).unwrap();
            for (x, y) in left.belief().iter().zip(right.belief()) {
                assert_close(*x, *y, 1e-9);
            }
            assert_close(left.uncertainty(), right.uncertainty(), 1e-9);

            let total = left.uncertainty() + left.belief().iter().sum::<f64>();
            assert_close(total, 1.0, 1e-9);
        }
    }

    #[test]
    fn accuracy_gain_holds_under_precondition() {
        let mut rng = PortableRng::seed_from_u64(22);
        for _ in 0..5000 {
            let additional = sample_opinion(4, &mut rng);
            let target = argmax(additional.belief());
            // Scale the original's beliefs until its largest stays below the
            // added opinion's target belief, so the precondition holds.
            let raw = sample_opinion(4, &mut rng);
            let cap = additional.belief()[target];
            let max_raw = raw.max_belief();
            let original = if max_raw > cap {
                let scale = cap / max_raw * rng.uniform();
                let belief: Vec<f64> = raw.belief().iter().map(|b| b * scale).collect();
                let u = 1.0 - belief.iter().sum::<f64>();
                SubjectiveOpinion::new(belief, u).unwrap()
            } else {
                raw
            };
            assert!(check_accuracy_gain(&original, &additional, target).unwrap());
        }
    }

    #[test]
    fn accuracy_gain_rejects_unmet_precondition() {
        let original = opinion(&[0.6, 0.2], 0.2);
        let vacuous = SubjectiveOpinion::vacuous(2).unwrap();
        assert!(matches!(
            check_accuracy_gain(&original, &vacuous, 0),
            Err(FusionError::AccuracyPreconditionUnmet { .. })
        ));
    }

    #[test]
    fn degradation_bound_holds() {
        let mut rng = PortableRng::seed_from_u64(23);
        for _ in 0..5000 {
            let original = sample_opinion(3, &mut rng);
            let additional = sample_opinion(3, &mut rng);
            let target = (rng.next_u64() % 3) as usize;
            let check = check_degradation_bound(&original, &additional, target).unwrap();
            assert!(
                check.holds(),
                "degradation {} exceeds bound {}",
                check.degradation,
                check.bound
            );
        }
    }

    #[test]
    fn vacuous_addition_never_degrades() {
        let original = opinion(&[0.6, 0.2], 0.2);
        let vacuous = SubjectiveOpinion::vacuous(2).unwrap();
        let check = check_degradation_bound(&original, &vacuous, 0).unwrap();
        assert_close(check.degradation, 0.0, 1e-12);
        assert_close(check.bound, 0.0, 1e-12);
        assert!(check.holds());
    }

    #[test]
    fn self_fusion_sharpens_dominant_belief() {
        let o = opinion(&[0.6, 0.2], 0.2);
        let check = check_degradation_bound(&o, &o, 0).unwrap();
        assert!(check.degradation <= 0.0);
        assert!(check.holds());
    }

    #[test]
    fn uncertainty_reduction_holds() {
        let mut rng = PortableRng::seed_from_u64(24);
        for _ in 0..5000 {
            let a = sample_opinion(3, &mut rng);
            let b = sample_opinion(3, &mut rng);
            assert!(check_uncertainty_reduction(&a, &b).unwrap());
        }
        // Vacuous + vacuous keeps u = 1 exactly.
        let vac = SubjectiveOpinion::vacuous(2).unwrap();
        let fused = combine(&vac, &vac).unwrap();
        assert_close(fused.uncertainty(), 1.0, 1e-12);
        // The worked pair fuses to u = 0.05 <= min(0.2, 0.2).
        let o1 = opinion(&[0.6, 0.2], 0.2);
        let o2 = opinion(&[0.7, 0.1], 0.2);
        assert!(check_uncertainty_reduction(&o1, &o2).unwrap());
    }

    #[test]
    fn uncertainty_correlation_monotone() {
        let mut rng = PortableRng::seed_from_u64(25);
        for _ in 0..5000 {
            let original = sample_opinion(3, &mut rng);
            if original.uncertainty() >= 1.0 {
                continue;
            }
            let additional = sample_opinion(3, &mut rng);
            let raised = original.uncertainty() + (1.0 - original.uncertainty()) * rng.uniform();
            assert!(check_uncertainty_correlation(&original, &additional, raised).unwrap());
        }
    }

    #[test]
    fn combine_vjp_matches_finite_differences() {
        let mut rng = PortableRng::seed_from_u64(26);
        for _ in 0..200 {
            let o1 = sample_opinion(3, &mut rng);
            let o2 = sample_opinion(3, &mut rng);
            let fused = combine(&o1, &o2).unwrap();
            // Random linear functional of the fused masses.
            let w: Vec<f64> = (0..3).map(|_| rng.uniform() * 2.0 - 1.0).collect();
            let wu = rng.uniform() * 2.0 - 1.0;
            let grad_out = OpinionGrad {
                belief: w.clone(),
                uncertainty: wu,
            };
            let (g1, g2) = combine_vjp(&o1, &o2, &fused, &grad_out);

            let eval = |o1: &SubjectiveOpinion, o2: &SubjectiveOpinion| -> f64 {
                let f = combine(o1, o2).unwrap();
                f.belief().iter().zip(&w).map(|(b, w)| b * w).sum::<f64>()
                    + wu * f.uncertainty()
            };
            let h = 1e-6;
            for i in 0..3 {
                let mut up = o1.belief().to_vec();
                up[i] += h;
                let mut down = o1.belief().to_vec();
                down[i] -= h;
                // Perturbed masses no longer sum to one; the rule itself never
                // uses that invariant, so evaluate through raw construction.
                let fd = (eval(&raw(&up, o1.uncertainty()), &o2)
                    - eval(&raw(&down, o1.uncertainty()), &o2))
                    / (2.0 * h);
                assert_close(g1.belief[i], fd, 1e-5);
            }
            let fd_u = (eval(&raw(o1.belief(), o1.uncertainty() + h), &o2)
                - eval(&raw(o1.belief(), o1.uncertainty() - h), &o2))
                / (2.0 * h);
            assert_close(g1.uncertainty, fd_u, 1e-5);

            let fd_b2 = {
                let mut up = o2.belief().to_vec();
                up[1] += h;
                let mut down = o2.belief().to_vec();
                down[1] -= h;
                (eval(&o1, &raw(&up, o2.uncertainty())) - eval(&o1, &raw(&down, o2.uncertainty())))
                    / (2.0 * h)
            };
            assert_close(g2.belief[1], fd_b2, 1e-5);
        }
    }

    // Off-simplex construction for finite-difference probes.
    fn raw(belief: &[f64], u: f64) -> SubjectiveOpinion {
        SubjectiveOpinion::new_unchecked(belief.to_vec(), u)
    }

    fn argmax(values: &[f64]) -> usize {
        values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    }
}
