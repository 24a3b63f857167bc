//! Bayesian additive regression trees with permutation-based variable
//! selection.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: the backfitting Gibbs sampler over a sum of regression trees,
//! variable inclusion proportions, the permutation null and its three
//! thresholding rules, cross-validated strategy choice, informed split
//! priors, the simulation generators and the evaluation metrics. File
//! formats, the command line and thread pools live in the `bartvs` crate.
//!
//! Work that fans out over independent chains (restarts, permutations, folds)
//! goes through an [`exec::Executor`], so callers decide how it is scheduled.
//! Every chain draws from its own generator stream derived from a master seed
//! and a task index, which keeps results independent of scheduling.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod datagen;
pub mod error;
pub mod exec;
pub mod inclusion;
pub mod math;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod selection;
pub mod split_prior;
pub mod study;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use model::{
    Dataset, DecisionTree, Forest, Hyperparams, MoveProbs, SamplerMode, SplitRule,
    Standardization,
};
pub use sampler::{run_chain, PosteriorSamples};
pub use selection::{NullProportionMatrix, SelectionConfig, SelectionResult, Strategy};
