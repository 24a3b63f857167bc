//! Variable inclusion proportions.
//!
//! Within one retained sample, the proportion for variable `k` is the share
//! of all splitting rules in the ensemble that split on `k`. Samples whose
//! trees are all stumps have no splitting rules; they are flagged and left
//! out of posterior means.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::model::{Dataset, Forest, Hyperparams};
use crate::rng::{derive_seed, RESTART};
use crate::sampler::{run_chain_with, PosteriorSamples};

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionVector {
    pub proportions: Vec<f64>,
    pub all_stump: bool,
}

pub fn per_sample_proportions(forest: &Forest, k: usize) -> InclusionVector {
    let mut counts = vec![0usize; k];
    let mut total = 0usize;
    for tree in &forest.trees {
        for v in tree.split_variables() {
            counts[v] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return InclusionVector { proportions: vec![0.0; k], all_stump: true };
    }
    let proportions = counts.iter().map(|&c| c as f64 / total as f64).collect();
    InclusionVector { proportions, all_stump: false }
}

/// Mean of the non-flagged inclusion vectors.
pub fn mean_of_vectors(vectors: &[InclusionVector]) -> Result<Vec<f64>> {
    let kept: Vec<&InclusionVector> = vectors.iter().filter(|v| !v.all_stump).collect();
    let first = kept.first().ok_or(Error::NoSplitsInPosterior)?;
    let mut mean = vec![0.0; first.proportions.len()];
    for v in &kept {
        for (m, p) in mean.iter_mut().zip(&v.proportions) {
            *m += p;
        }
    }
    let n = kept.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

pub fn posterior_mean_proportions(samples: &PosteriorSamples) -> Result<Vec<f64>> {
    mean_of_vectors(&samples.inclusion)
}

/// Arithmetic mean of equally long vectors.
pub fn average(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; rows.first().map_or(0, Vec::len)];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Posterior mean proportions averaged over `hp.n_restarts` chains; chain
/// `r` is seeded from `(master_seed, r)`.
///
/// A chain whose every retained sample is all stumps carries no information
/// about the proportions and is left out; if every chain is like that the
/// result is [`Error::NoSplitsInPosterior`].
pub fn restart_averaged_proportions<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    master_seed: u64,
    exec: &E,
) -> Result<Vec<f64>> {
    hp.validate()?;
    let runs = exec.map(hp.n_restarts, |r| {
        let seed = derive_seed(master_seed, &[RESTART, r as u64]);
        run_chain_with(dataset, hp, split_weights, seed, false)
            .and_then(|s| posterior_mean_proportions(&s))
    });
    let mut kept = Vec::with_capacity(runs.len());
    for run in runs {
        match run {
            Ok(p) => kept.push(p),
            Err(Error::NoSplitsInPosterior) => {}
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoSplitsInPosterior);
    }
    Ok(average(&kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecisionTree, SplitRule};

    fn tree_with(vars: &[usize]) -> DecisionTree {
        let mut t = DecisionTree::stump(0.0);
        let mut leaf = DecisionTree::ROOT;
        for &v in vars {
            let (l, _) = t.grow(leaf, SplitRule { variable: v, value: 0.0 });
            leaf = l;
        }
        t
    }

    #[test]
    fn counts_splits_across_trees() {
        let f = Forest { trees: vec![tree_with(&[0, 0]), tree_with(&[2])], sigma_sq: 1.0 };
        let v = per_sample_proportions(&f, 3);
        assert!(!v.all_stump);
        assert_eq!(v.proportions, vec![2.0 / 3.0, 0.0, 1.0 / 3.0]);
    }

    #[test]
    fn hand_counted_three_tree_forest() {
        // splits: tree A {1, 3, 1}, tree B {}, tree C {0, 1}; 5 rules in total
        let f = Forest {
            trees: vec![tree_with(&[1, 3, 1]), DecisionTree::stump(0.0), tree_with(&[0, 1])],
            sigma_sq: 1.0,
        };
        let v = per_sample_proportions(&f, 4);
        assert_eq!(v.proportions, vec![0.2, 0.6, 0.0, 0.2]);
    }

    #[test]
    fn all_stumps_are_flagged() {
        let f = Forest { trees: vec![DecisionTree::stump(0.0); 3], sigma_sq: 1.0 };
        let v = per_sample_proportions(&f, 2);
        assert!(v.all_stump);
        assert_eq!(v.proportions, vec![0.0, 0.0]);
    }

    #[test]
    fn flagged_samples_are_excluded() {
        let a = InclusionVector { proportions: vec![1.0, 0.0], all_stump: false };
        let b = InclusionVector { proportions: vec![0.0, 1.0], all_stump: false };
        let z = InclusionVector { proportions: vec![0.0, 0.0], all_stump: true };
        assert_eq!(mean_of_vectors(&[a.clone(), b]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(mean_of_vectors(&[z.clone(), a]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(mean_of_vectors(&[z.clone(), z]), Err(Error::NoSplitsInPosterior));
    }
}
