//! Tree-structure prior.
//!
//! A node at depth `d` is internal with probability `alpha (1 + d)^-beta`.
//! An internal node's rule picks its variable with probability proportional to
//! the split weights among variables that can still split the node, then a
//! split value uniformly among the node's candidates.

use alloc::vec::Vec;
use rand::Rng;

use super::candidates::SplitCandidates;
use crate::math::log;
use crate::model::{Dataset, DecisionTree, Hyperparams, NodeId, NodeKind, SplitRule};

/// Log-probability of `rule` at a node holding `members`, or `None` when the
/// rule is not one the proposal could have produced there.
pub fn rule_log_prob(
    rule: &SplitRule,
    members: &[usize],
    cands: &SplitCandidates,
    weights: &[f64],
) -> Option<f64> {
    if !cands.can_split(rule.variable, members) {
        return None;
    }
    let total: f64 = (0..cands.k())
        .filter(|&v| cands.can_split(v, members))
        .map(|v| weights[v])
        .sum();
    let mut ranks = Vec::new();
    cands.candidate_ranks(rule.variable, members, &mut ranks);
    let rank = cands.rank_of(rule.variable, rule.value)?;
    ranks.binary_search(&rank).ok()?;
    Some(log(weights[rule.variable] / total) - log(ranks.len() as f64))
}

/// Draws a splitting rule for a node holding `members`, returning the rule
/// and its log-probability. `None` if no variable can split the node.
pub fn draw_rule<R: Rng + ?Sized>(
    members: &[usize],
    cands: &SplitCandidates,
    weights: &[f64],
    rng: &mut R,
) -> Option<(SplitRule, f64)> {
    let available: Vec<usize> = (0..cands.k()).filter(|&v| cands.can_split(v, members)).collect();
    if available.is_empty() {
        return None;
    }
    let total: f64 = available.iter().map(|&v| weights[v]).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut variable = *available.last().unwrap();
    for &v in &available {
        acc += weights[v];
        if target < acc {
            variable = v;
            break;
        }
    }
    let mut ranks = Vec::new();
    cands.candidate_ranks(variable, members, &mut ranks);
    let rank = ranks[rng.random_range(0..ranks.len())];
    let rule = SplitRule { variable, value: cands.value(variable, rank) };
    let lp = log(weights[variable] / total) - log(ranks.len() as f64);
    Some((rule, lp))
}

/// Inputs shared by the prior and likelihood evaluation of a subtree.
pub struct TermContext<'a> {
    pub data: &'a Dataset,
    pub cands: &'a SplitCandidates,
    pub weights: &'a [f64],
    pub hp: &'a Hyperparams,
    /// `None` drops the likelihood (prior-only sampling).
    pub residuals: Option<&'a [f64]>,
    pub sigma_sq: f64,
    pub tau_sq: f64,
}

/// Log structure prior and log marginal likelihood of the subtree rooted at
/// `node`, given the observations reaching it. `None` when some node is empty
/// or holds a rule with zero prior probability.
pub fn subtree_terms(
    tree: &DecisionTree,
    node: NodeId,
    members: &[usize],
    ctx: &TermContext<'_>,
) -> Option<(f64, f64)> {
    if members.is_empty() {
        return None;
    }
    let n = tree.node(node);
    let p_split = ctx.hp.split_probability(n.depth);
    match n.kind {
        NodeKind::Leaf { .. } => {
            let lik = match ctx.residuals {
                Some(r) => {
                    let (sum, sum_sq) = members.iter().fold((0.0, 0.0), |(s, ss), &i| {
                        (s + r[i], ss + r[i] * r[i])
                    });
                    super::likelihood::log_marginal_from_stats(
                        members.len(),
                        sum,
                        sum_sq,
                        ctx.sigma_sq,
                        ctx.tau_sq,
                    )
                }
                None => 0.0,
            };
            Some((log(1.0 - p_split), lik))
        }
        NodeKind::Internal { rule, left, right } => {
            let rule_lp = rule_log_prob(&rule, members, ctx.cands, ctx.weights)?;
            let col = ctx.data.column(rule.variable);
            let (lm, rm): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&i| rule.goes_left(col[i]));
            let (lp, ll) = subtree_terms(tree, left, &lm, ctx)?;
            let (rp, rl) = subtree_terms(tree, right, &rm, ctx)?;
            Some((log(p_split) + rule_lp + lp + rp, ll + rl))
        }
    }
}

/// Log prior of a whole tree structure over `data`: the sum over internal
/// nodes of `log(p_split(d)) + log(rule probability)` plus the sum over
/// leaves of `log(1 - p_split(d))`. Negative infinity for trees the sampler
/// cannot reach (empty nodes, rules outside the node's candidates).
pub fn log_tree_structure_prior(
    tree: &DecisionTree,
    data: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
) -> f64 {
    let cands = SplitCandidates::new(data);
    let ctx = TermContext {
        data,
        cands: &cands,
        weights: split_weights,
        hp,
        residuals: None,
        sigma_sq: 1.0,
        tau_sq: 1.0,
    };
    let all: Vec<usize> = (0..data.n()).collect();
    subtree_terms(tree, DecisionTree::ROOT, &all, &ctx).map_or(f64::NEG_INFINITY, |(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn one_column(values: Vec<f64>) -> Dataset {
        let n = values.len();
        Dataset::new(vec![values], vec![0.0; n], Dataset::default_names(1)).unwrap()
    }

    #[test]
    fn stump_prior_is_log_one_minus_alpha() {
        let data = one_column(vec![1.0, 2.0, 3.0]);
        let hp = Hyperparams::default();
        let lp = log_tree_structure_prior(&DecisionTree::stump(0.0), &data, &hp, &[1.0]);
        assert!((lp - log(0.05)).abs() < 1e-15);
    }

    #[test]
    fn single_split_prior_by_hand() {
        // four distinct values: three candidate splits at the root
        let data = one_column(vec![1.0, 2.0, 3.0, 4.0]);
        let hp = Hyperparams::default();
        let mut t = DecisionTree::stump(0.0);
        t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 3.0 });
        let expected = log(0.95) + log(1.0 / 3.0) + 2.0 * log(1.0 - 0.95 / 4.0);
        let lp = log_tree_structure_prior(&t, &data, &hp, &[1.0]);
        assert!((lp - expected).abs() < 1e-14, "{lp} vs {expected}");
    }

    #[test]
    fn prior_invariant_to_weight_scale() {
        let data = Dataset::new(
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![4.0, 1.0, 3.0, 2.0], vec![0.0, 0.0, 1.0, 1.0]],
            vec![0.0; 4],
            Dataset::default_names(3),
        )
        .unwrap();
        let hp = Hyperparams::default();
        let mut t = DecisionTree::stump(0.0);
        let (l, _) = t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 3.0 });
        t.grow(l, SplitRule { variable: 1, value: 4.0 });
        let w = [0.3, 1.7, 2.0];
        let w2: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let a = log_tree_structure_prior(&t, &data, &hp, &w);
        let b = log_tree_structure_prior(&t, &data, &hp, &w2);
        assert!(a.is_finite());
        assert_eq!(a, b);
    }

    #[test]
    fn empty_child_or_foreign_value_has_zero_prior() {
        let data = one_column(vec![1.0, 2.0, 3.0, 4.0]);
        let hp = Hyperparams::default();
        let mut t = DecisionTree::stump(0.0);
        t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 1.0 });
        assert_eq!(log_tree_structure_prior(&t, &data, &hp, &[1.0]), f64::NEG_INFINITY);
        let mut t = DecisionTree::stump(0.0);
        t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 2.5 });
        assert_eq!(log_tree_structure_prior(&t, &data, &hp, &[1.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn drawn_rules_have_matching_probability() {
        use rand::SeedableRng;
        let data = Dataset::new(
            vec![vec![1.0, 2.0, 2.0, 5.0, 7.0], vec![3.0, 3.0, 3.0, 3.0, 3.0], vec![0.0, 1.0, 0.0, 1.0, 0.0]],
            vec![0.0; 5],
            Dataset::default_names(3),
        )
        .unwrap();
        let cands = SplitCandidates::new(&data);
        let members = [0, 1, 2, 3, 4];
        let mut rng = crate::rng::ChainRng::seed_from_u64(3);
        for _ in 0..200 {
            let (rule, lp) = draw_rule(&members, &cands, &[1.0, 5.0, 2.0], &mut rng).unwrap();
            assert_ne!(rule.variable, 1, "constant column cannot split");
            let again = rule_log_prob(&rule, &members, &cands, &[1.0, 5.0, 2.0]).unwrap();
            assert!((lp - again).abs() < 1e-15);
        }
        // variable 0: weight 1 of 3 available, 3 candidates (2, 5, 7)
        let lp = rule_log_prob(&SplitRule { variable: 0, value: 5.0 }, &members, &cands, &[1.0, 5.0, 2.0]);
        assert!((lp.unwrap() - log(1.0 / 3.0 / 3.0)).abs() < 1e-15);
    }
}
