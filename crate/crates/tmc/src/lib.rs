//! Trusted multi-view classification.
//!
//! Per-view evidential classifiers emit Dirichlet opinions that are fused by
//! a reduced Dempster-Shafer combination rule and trained with a variational
//! Dirichlet objective. The crate bundles the numerics (special functions,
//! opinions, fusion, loss), a small feedforward model with hand-derived
//! gradients, dataset plumbing, uncertainty-aware evaluation, and the CLI
//! glue behind the `tmc` binary.

pub mod cli;
pub mod data;
pub mod eval;
pub mod fusion;
pub mod loss;
pub mod model;
pub mod opinion;
pub mod rng;
pub mod special;
