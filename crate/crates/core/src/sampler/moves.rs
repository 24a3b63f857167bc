//! Metropolis–Hastings proposals on a single tree: grow a leaf, prune a node
//! whose children are both leaves, or change the rule of an internal node.

use alloc::vec::Vec;
use rand::Rng;

use super::candidates::SplitCandidates;
use super::prior::{draw_rule, rule_log_prob, subtree_terms, TermContext};
use crate::math::log;
use crate::model::{DecisionTree, MoveProbs, NodeId, SplitRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Grow,
    Prune,
    Change,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Grow, MoveKind::Prune, MoveKind::Change];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone)]
pub struct MoveProposal {
    pub kind: MoveKind,
    /// The grown leaf, the pruned node or the node whose rule changes.
    pub node: NodeId,
    pub new_rule: Option<SplitRule>,
    pub old_rule: Option<SplitRule>,
    /// Observations reaching `node`; identical in the old and new trees.
    pub members: Vec<usize>,
    pub log_forward: f64,
    pub log_reverse: f64,
    pub tree: DecisionTree,
}

/// Move probabilities available for `tree`: a stump can only grow.
pub fn move_kind_probs(tree: &DecisionTree, probs: &MoveProbs) -> MoveProbs {
    if tree.is_stump() {
        MoveProbs { grow: 1.0, prune: 0.0, change: 0.0 }
    } else {
        *probs
    }
}

/// Observations whose leaf lies at or below `node`.
pub fn node_members(tree: &DecisionTree, leaf_of: &[NodeId], node: NodeId) -> Vec<usize> {
    if tree.node(node).is_leaf() {
        (0..leaf_of.len()).filter(|&i| leaf_of[i] == node).collect()
    } else {
        (0..leaf_of.len()).filter(|&i| tree.is_within(leaf_of[i], node)).collect()
    }
}

fn pick<R: Rng + ?Sized>(items: &[NodeId], rng: &mut R) -> NodeId {
    items[rng.random_range(0..items.len())]
}

/// Draws a proposal for `tree`. `None` when the drawn move has no legal
/// realisation (a GROW at a leaf no variable can split); the chain then
/// stays put.
pub fn propose_move<R: Rng + ?Sized>(
    tree: &DecisionTree,
    leaf_of: &[NodeId],
    cands: &SplitCandidates,
    probs: &MoveProbs,
    split_weights: &[f64],
    rng: &mut R,
) -> Option<MoveProposal> {
    let here = move_kind_probs(tree, probs);
    let u: f64 = rng.random();
    let kind = if u < here.grow {
        MoveKind::Grow
    } else if u < here.grow + here.prune {
        MoveKind::Prune
    } else {
        MoveKind::Change
    };
    match kind {
        MoveKind::Grow => {
            let leaves = tree.leaves();
            let leaf = pick(&leaves, rng);
            let members = node_members(tree, leaf_of, leaf);
            let (rule, rule_lp) = draw_rule(&members, cands, split_weights, rng)?;
            let mut new_tree = tree.clone();
            new_tree.grow(leaf, rule);
            let there = move_kind_probs(&new_tree, probs);
            let log_forward = log(here.grow) - log(leaves.len() as f64) + rule_lp;
            let log_reverse = log(there.prune) - log(new_tree.prunable_nodes().len() as f64);
            Some(MoveProposal {
                kind,
                node: leaf,
                new_rule: Some(rule),
                old_rule: None,
                members,
                log_forward,
                log_reverse,
                tree: new_tree,
            })
        }
        MoveKind::Prune => {
            let prunable = tree.prunable_nodes();
            let node = pick(&prunable, rng);
            let members = node_members(tree, leaf_of, node);
            let old_rule = tree.node(node).rule().expect("prunable node has a rule");
            let old_lp = rule_log_prob(&old_rule, &members, cands, split_weights)?;
            let mut new_tree = tree.clone();
            new_tree.prune(node, 0.0);
            let there = move_kind_probs(&new_tree, probs);
            let log_forward = log(here.prune) - log(prunable.len() as f64);
            let log_reverse = log(there.grow) - log(new_tree.leaf_count() as f64) + old_lp;
            Some(MoveProposal {
                kind,
                node,
                new_rule: None,
                old_rule: Some(old_rule),
                members,
                log_forward,
                log_reverse,
                tree: new_tree,
            })
        }
        MoveKind::Change => {
            let internal = tree.internal_nodes();
            let node = pick(&internal, rng);
            let members = node_members(tree, leaf_of, node);
            let old_rule = tree.node(node).rule().expect("internal node has a rule");
            let (rule, new_lp) = draw_rule(&members, cands, split_weights, rng)?;
            let old_lp = rule_log_prob(&old_rule, &members, cands, split_weights)?;
            let mut new_tree = tree.clone();
            new_tree.set_rule(node, rule);
            let pick_lp = log(here.change) - log(internal.len() as f64);
            Some(MoveProposal {
                kind,
                node,
                new_rule: Some(rule),
                old_rule: Some(old_rule),
                members,
                log_forward: pick_lp + new_lp,
                log_reverse: pick_lp + old_lp,
                tree: new_tree,
            })
        }
    }
}

/// Log acceptance ratio of `proposal` from `old_tree`.
///
/// Only the subtree below the proposal site is evaluated; every node outside
/// it keeps its data, rule and depth, so its prior and likelihood terms
/// cancel. Proposals that empty a node or give zero prior probability score
/// negative infinity, as does any NaN.
pub fn mh_log_ratio(
    proposal: &MoveProposal,
    old_tree: &DecisionTree,
    ctx: &TermContext<'_>,
) -> f64 {
    let new = subtree_terms(&proposal.tree, proposal.node, &proposal.members, ctx);
    let old = subtree_terms(old_tree, proposal.node, &proposal.members, ctx);
    let ratio = match (new, old) {
        (None, _) => f64::NEG_INFINITY,
        (Some(_), None) => f64::INFINITY,
        (Some((np, nl)), Some((op, ol))) => {
            (np + nl + proposal.log_reverse) - (op + ol + proposal.log_forward)
        }
    };
    if ratio.is_nan() {
        f64::NEG_INFINITY
    } else {
        ratio
    }
}
