//! Backfitting Gibbs sampler for the sum-of-trees model.
//!
//! Each iteration visits the trees in order. For tree `t` the partial
//! residuals `y - Σ_{s≠t} g_s` are formed from cached fits, one structural
//! move is proposed and accepted or rejected with the leaf values integrated
//! out, and the leaf values are then redrawn from their conjugate normal
//! conditionals. The residual variance is drawn last, from its scaled
//! inverse chi-squared conditional given all trees.

mod candidates;
mod likelihood;
mod moves;
mod prior;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

pub use candidates::SplitCandidates;
pub use likelihood::{
    draw_leaf_values, draw_sigma_sq, leaf_posterior, log_marginal_from_stats, node_log_marginal,
    SigmaPrior,
};
pub use moves::{mh_log_ratio, move_kind_probs, node_members, propose_move, MoveKind, MoveProposal};
pub use prior::{draw_rule, log_tree_structure_prior, rule_log_prob, subtree_terms, TermContext};

use crate::error::{Error, Result};
use crate::inclusion::{per_sample_proportions, InclusionVector};
use crate::math::{log, sqrt};
use crate::model::{Dataset, DecisionTree, Forest, Hyperparams, NodeId, SamplerMode, Standardization};
use crate::rng::{rng_from_seed, ChainRng};

/// Proposal and acceptance counts per move kind (grow, prune, change).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveStats {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
}

impl MoveStats {
    pub fn acceptance_rate(&self) -> f64 {
        let p: u64 = self.proposed.iter().sum();
        let a: u64 = self.accepted.iter().sum();
        if p == 0 {
            0.0
        } else {
            a as f64 / p as f64
        }
    }
}

/// Retained draws from one chain.
#[derive(Debug, Clone)]
pub struct PosteriorSamples {
    pub forests: Vec<Forest>,
    pub sigma_sq_draws: Vec<f64>,
    pub inclusion: Vec<InclusionVector>,
    pub standardization: Standardization,
    pub move_stats: MoveStats,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.sigma_sq_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_sq_draws.is_empty()
    }

    /// Posterior mean prediction at `x` on the response scale.
    pub fn posterior_mean_prediction(&self, x: &[f64]) -> Result<f64> {
        if self.forests.is_empty() {
            return Err(Error::EmptySamples);
        }
        let total: f64 = self.forests.iter().map(|f| f.predict(x, &self.standardization)).sum();
        Ok(total / self.forests.len() as f64)
    }
}

/// Mutable state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub forest: Forest,
    /// `leaf_of[t][i]`: leaf of tree `t` holding observation `i`.
    leaf_of: Vec<Vec<NodeId>>,
    /// `tree_fit[t][i]`: leaf value of tree `t` at observation `i`.
    tree_fit: Vec<Vec<f64>>,
    total_fit: Vec<f64>,
    rng: ChainRng,
    pub iteration: usize,
    pub stats: MoveStats,
}

/// A chain bound to its dataset and settings.
pub struct Chain<'a> {
    data: &'a Dataset,
    response: Vec<f64>,
    standardization: Standardization,
    cands: SplitCandidates,
    weights: Vec<f64>,
    hp: Hyperparams,
    tau_sq: f64,
    sigma_prior: SigmaPrior,
    state: ChainState,
    scratch: Vec<f64>,
}

fn check_weights(weights: &[f64], k: usize) -> Result<()> {
    if weights.len() != k {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} split weights for {} predictors",
            weights.len(),
            k
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("split weights must be positive and finite".into()));
    }
    Ok(())
}

impl<'a> Chain<'a> {
    /// Standardizes the response, calibrates the variance prior and draws
    /// the initial state from the priors: every tree a stump with a leaf
    /// value from the leaf prior, and `sigma_sq` from its prior.
    pub fn new(data: &'a Dataset, hp: &Hyperparams, split_weights: &[f64], seed: u64) -> Result<Self> {
        hp.validate()?;
        check_weights(split_weights, data.k())?;
        let (response, standardization) = Standardization::fit(data.response())?;
        let sigma_prior = SigmaPrior::calibrate(data, &response, hp.nu, hp.q);
        let tau_sq = hp.leaf_prior_variance();
        let mut rng = rng_from_seed(seed);
        let n = data.n();
        let mut trees = Vec::with_capacity(hp.m);
        let mut tree_fit = Vec::with_capacity(hp.m);
        let mut total_fit = vec![0.0; n];
        for _ in 0..hp.m {
            let z: f64 = rng.sample(StandardNormal);
            let mu = sqrt(tau_sq) * z;
            trees.push(DecisionTree::stump(mu));
            tree_fit.push(vec![mu; n]);
            total_fit.iter_mut().for_each(|f| *f += mu);
        }
        let sigma_sq = draw_sigma_sq(&[], sigma_prior.nu, sigma_prior.lambda, &mut rng);
        let state = ChainState {
            forest: Forest { trees, sigma_sq },
            leaf_of: vec![vec![DecisionTree::ROOT; n]; hp.m],
            tree_fit,
            total_fit,
            rng,
            iteration: 0,
            stats: MoveStats::default(),
        };
        Ok(Self {
            data,
            response,
            standardization,
            cands: SplitCandidates::new(data),
            weights: split_weights.to_vec(),
            hp: hp.clone(),
            tau_sq,
            sigma_prior,
            state,
            scratch: vec![0.0; n],
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn standardized_response(&self) -> &[f64] {
        &self.response
    }

    pub fn sigma_prior(&self) -> SigmaPrior {
        self.sigma_prior
    }

    pub fn leaf_prior_variance(&self) -> f64 {
        self.tau_sq
    }

    /// Partial residuals for tree `t` from the cached fits.
    pub fn partial_residuals(&self, t: usize) -> Vec<f64> {
        let s = &self.state;
        (0..self.data.n())
            .map(|i| self.response[i] - s.total_fit[i] + s.tree_fit[t][i])
            .collect()
    }

    /// Largest absolute gap between the cached partial residuals and the
    /// ones recomputed by routing every observation through every tree.
    pub fn cache_discrepancy(&self) -> f64 {
        let s = &self.state;
        let n = self.data.n();
        let fresh: Vec<Vec<f64>> = s
            .forest
            .trees
            .iter()
            .map(|tree| (0..n).map(|i| tree.leaf_value(tree.route_row(self.data, i))).collect())
            .collect();
        let mut worst: f64 = 0.0;
        for t in 0..fresh.len() {
            for i in 0..n {
                let others: f64 = (0..fresh.len()).filter(|&u| u != t).map(|u| fresh[u][i]).sum();
                let exact = self.response[i] - others;
                let cached = self.response[i] - s.total_fit[i] + s.tree_fit[t][i];
                worst = worst.max((exact - cached).abs());
            }
        }
        worst
    }

    /// One full sweep over the trees followed by the variance draw.
    pub fn gibbs_iteration(&mut self) -> Result<()> {
        let n = self.data.n();
        let mode = self.hp.mode;
        for t in 0..self.hp.m {
            {
                let s = &self.state;
                for i in 0..n {
                    self.scratch[i] = self.response[i] - s.total_fit[i] + s.tree_fit[t][i];
                }
            }
            if mode != SamplerMode::FixedStructure {
                self.structural_step(t);
            }
            let s = &mut self.state;
            let tree = &mut s.forest.trees[t];
            if mode == SamplerMode::PriorOnly {
                for leaf in tree.leaves() {
                    let z: f64 = s.rng.sample(StandardNormal);
                    tree.set_leaf_value(leaf, sqrt(self.tau_sq) * z);
                }
            } else {
                draw_leaf_values(
                    tree,
                    &s.leaf_of[t],
                    &self.scratch,
                    s.forest.sigma_sq,
                    self.tau_sq,
                    &mut s.rng,
                )?;
            }
            let fit = &mut s.tree_fit[t];
            for i in 0..n {
                let new = tree.leaf_value(s.leaf_of[t][i]);
                s.total_fit[i] += new - fit[i];
                fit[i] = new;
            }
        }
        let s = &mut self.state;
        // Re-sum so that rounding never accumulates across iterations.
        for i in 0..n {
            s.total_fit[i] = s.tree_fit.iter().map(|f| f[i]).sum();
        }
        let (nu, lambda) = (self.sigma_prior.nu, self.sigma_prior.lambda);
        s.forest.sigma_sq = if mode == SamplerMode::PriorOnly {
            draw_sigma_sq(&[], nu, lambda, &mut s.rng)
        } else {
            for i in 0..n {
                self.scratch[i] = self.response[i] - s.total_fit[i];
            }
            draw_sigma_sq(&self.scratch, nu, lambda, &mut s.rng)
        };
        s.iteration += 1;
        Ok(())
    }

    fn structural_step(&mut self, t: usize) {
        let s = &mut self.state;
        let tree = &s.forest.trees[t];
        let Some(proposal) =
            propose_move(tree, &s.leaf_of[t], &self.cands, &self.hp.move_probs, &self.weights, &mut s.rng)
        else {
            return;
        };
        let ctx = TermContext {
            data: self.data,
            cands: &self.cands,
            weights: &self.weights,
            hp: &self.hp,
            residuals: match self.hp.mode {
                SamplerMode::PriorOnly => None,
                _ => Some(&self.scratch),
            },
            sigma_sq: s.forest.sigma_sq,
            tau_sq: self.tau_sq,
        };
        let ratio = mh_log_ratio(&proposal, tree, &ctx);
        let k = proposal.kind.index();
        s.stats.proposed[k] += 1;
        let u: f64 = s.rng.random();
        if log(u) < ratio {
            s.stats.accepted[k] += 1;
            let MoveProposal { tree: new_tree, node, members, .. } = proposal;
            for &i in &members {
                s.leaf_of[t][i] = new_tree.route_from(node, |j| self.data.value(i, j));
            }
            s.forest.trees[t] = new_tree;
        }
    }
}

/// Runs `n_burn` discarded and `n_post` retained iterations from a
/// prior-initialized state. Deterministic given `seed`.
pub fn run_chain(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    seed: u64,
) -> Result<PosteriorSamples> {
    run_chain_with(dataset, hp, split_weights, seed, true)
}

/// As [`run_chain`]; with `keep_forests == false` only the variance draws and
/// inclusion vectors are retained.
pub fn run_chain_with(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    seed: u64,
    keep_forests: bool,
) -> Result<PosteriorSamples> {
    if hp.n_post == 0 {
        return Err(Error::NoRetainedSamples);
    }
    let mut chain = Chain::new(dataset, hp, split_weights, seed)?;
    for _ in 0..hp.n_burn {
        chain.gibbs_iteration()?;
    }
    let k = dataset.k();
    let mut forests = Vec::with_capacity(if keep_forests { hp.n_post } else { 0 });
    let mut sigma_sq_draws = Vec::with_capacity(hp.n_post);
    let mut inclusion = Vec::with_capacity(hp.n_post);
    for _ in 0..hp.n_post {
        chain.gibbs_iteration()?;
        let forest = &chain.state.forest;
        sigma_sq_draws.push(forest.sigma_sq);
        inclusion.push(per_sample_proportions(forest, k));
        if keep_forests {
            forests.push(forest.clone());
        }
    }
    Ok(PosteriorSamples {
        forests,
        sigma_sq_draws,
        inclusion,
        standardization: chain.standardization,
        move_stats: chain.state.stats,
    })
}
