//! Datasets, regression trees, forests and sampler hyperparameters.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An `n x K` predictor matrix (stored column-major), a response vector and
/// column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    k: usize,
    columns: Vec<f64>,
    response: Vec<f64>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from predictor columns.
    pub fn new(columns: Vec<Vec<f64>>, response: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let n = response.len();
        let k = columns.len();
        if k == 0 {
            return Err(Error::InvalidDataset("at least one predictor is required".into()));
        }
        if n < 2 {
            return Err(Error::InvalidDataset("at least two observations are required".into()));
        }
        if names.len() != k {
            return Err(Error::InvalidDataset(format!(
                "{} names given for {} predictors",
                names.len(),
                k
            )));
        }
        let mut flat = Vec::with_capacity(n * k);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "predictor {} has {} rows, response has {}",
                    names[j],
                    col.len(),
                    n
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value in predictor {} at row {}",
                    names[j], i
                )));
            }
            flat.extend(col);
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite response at row {i}")));
        }
        Ok(Self { n, k, columns: flat, response, names })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>, names: Vec<String>) -> Result<Self> {
        let k = names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::InvalidDataset(format!("row {bad} does not have {k} values")));
        }
        let columns = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(columns, response, names)
    }

    /// Default column names `x1, ..., xK`.
    pub fn default_names(k: usize) -> Vec<String> {
        (1..=k).map(|j| format!("x{j}")).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.columns.chunks_exact(self.n)
    }

    #[inline]
    pub fn value(&self, row: usize, j: usize) -> f64 {
        self.columns[j * self.n + row]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.k).map(|j| self.value(i, j)).collect()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Same predictors, new response.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.n {
            return Err(Error::InvalidDataset("response length does not match".into()));
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite response".into()));
        }
        Ok(Self { response, ..self.clone() })
    }

    /// Keeps the listed predictor columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let columns = indices.iter().map(|&j| self.column(j).to_vec()).collect();
        let names = indices.iter().map(|&j| self.names[j].clone()).collect();
        Self::new(columns, self.response.clone(), names)
    }

    /// Keeps the listed observations, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let columns = self
            .columns()
            .map(|col| rows.iter().map(|&i| col[i]).collect())
            .collect();
        let response = rows.iter().map(|&i| self.response[i]).collect();
        Self::new(columns, response, self.names.clone())
    }
}

/// Affine map of the response onto `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub shift: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization { shift: 0.0, scale: 1.0 };

    /// Range standardization: the minimum maps to -0.5 and the maximum to 0.5.
    pub fn fit(response: &[f64]) -> Result<(Vec<f64>, Standardization)> {
        if response.len() < 2 {
            return Err(Error::InvalidDataset("at least two observations are required".into()));
        }
        let (lo, hi) = response
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let scale = hi - lo;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateResponse);
        }
        let std = Standardization { shift: lo + 0.5 * scale, scale };
        Ok((response.iter().map(|&v| std.apply(v)).collect(), std))
    }

    #[inline]
    pub fn apply(&self, value: f64) -> f64 {
        (value - self.shift) / self.scale
    }

    #[inline]
    pub fn invert(&self, value: f64) -> f64 {
        value * self.scale + self.shift
    }
}

/// `x[variable] < value` routes left, otherwise right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRule {
    pub variable: usize,
    pub value: f64,
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: f64) -> bool {
        x < self.value
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf { value: f64 },
    Internal { rule: SplitRule, left: NodeId, right: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub depth: u32,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn rule(&self) -> Option<SplitRule> {
        match self.kind {
            NodeKind::Internal { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        match self.kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// A binary regression tree stored in an arena.
///
/// Node ids stay valid across grow/prune/change edits; slots released by a
/// prune are reused by later grows. Traversals always start at the root, so
/// released slots are never visited.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    free: Vec<NodeId>,
}

impl DecisionTree {
    pub const ROOT: NodeId = 0;

    pub fn stump(value: f64) -> Self {
        Self {
            nodes: vec![Node { kind: NodeKind::Leaf { value }, parent: None, depth: 0 }],
            free: Vec::new(),
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn is_stump(&self) -> bool {
        self.nodes[Self::ROOT].is_leaf()
    }

    /// Node ids of the subtree rooted at `id`, in pre-order.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            out.push(cur);
            if let Some((l, r)) = self.nodes[cur].children() {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.subtree(Self::ROOT)
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.node_ids().into_iter().filter(|&id| self.nodes[id].is_leaf()).collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.node_ids().into_iter().filter(|&id| !self.nodes[id].is_leaf()).collect()
    }

    /// Internal nodes whose two children are both leaves.
    pub fn prunable_nodes(&self) -> Vec<NodeId> {
        self.node_ids()
            .into_iter()
            .filter(|&id| match self.nodes[id].children() {
                Some((l, r)) => self.nodes[l].is_leaf() && self.nodes[r].is_leaf(),
                None => false,
            })
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    /// Variables used by the splitting rules, one entry per internal node.
    pub fn split_variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.node_ids().into_iter().filter_map(|id| self.nodes[id].rule().map(|r| r.variable))
    }

    /// True if `node` is `ancestor` or lies below it.
    pub fn is_within(&self, mut node: NodeId, ancestor: NodeId) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        match self.free.pop() {
            Some(id) => {
                self.nodes[id] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    /// Splits a leaf; both children start with the leaf's value.
    pub fn grow(&mut self, leaf: NodeId, rule: SplitRule) -> (NodeId, NodeId) {
        let value = match self.nodes[leaf].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Internal { .. } => panic!("grow target {leaf} is not a leaf"),
        };
        let depth = self.nodes[leaf].depth + 1;
        let child = |parent| Node { kind: NodeKind::Leaf { value }, parent: Some(parent), depth };
        let left = self.alloc(child(leaf));
        let right = self.alloc(child(leaf));
        self.nodes[leaf].kind = NodeKind::Internal { rule, left, right };
        (left, right)
    }

    /// Collapses an internal node whose children are leaves into a leaf.
    pub fn prune(&mut self, node: NodeId, value: f64) {
        let (l, r) = self.nodes[node].children().expect("prune target must be internal");
        assert!(
            self.nodes[l].is_leaf() && self.nodes[r].is_leaf(),
            "prune target must have two leaf children"
        );
        self.free.push(r);
        self.free.push(l);
        self.nodes[node].kind = NodeKind::Leaf { value };
    }

    pub fn set_rule(&mut self, node: NodeId, new_rule: SplitRule) {
        match &mut self.nodes[node].kind {
            NodeKind::Internal { rule, .. } => *rule = new_rule,
            NodeKind::Leaf { .. } => panic!("node {node} has no rule"),
        }
    }

    pub fn set_leaf_value(&mut self, leaf: NodeId, new_value: f64) {
        match &mut self.nodes[leaf].kind {
            NodeKind::Leaf { value } => *value = new_value,
            NodeKind::Internal { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    pub fn leaf_value(&self, leaf: NodeId) -> f64 {
        match self.nodes[leaf].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Internal { .. } => panic!("node {leaf} is not a leaf"),
        }
    }

    /// Routes starting from `from` using `feature(variable)` lookups.
    #[inline]
    pub fn route_from<F: Fn(usize) -> f64>(&self, from: NodeId, feature: F) -> NodeId {
        let mut cur = from;
        while let NodeKind::Internal { rule, left, right } = self.nodes[cur].kind {
            cur = if rule.goes_left(feature(rule.variable)) { left } else { right };
        }
        cur
    }

    /// Leaf reached by observation `row` of `data`.
    #[inline]
    pub fn route_row(&self, data: &Dataset, row: usize) -> NodeId {
        self.route_from(Self::ROOT, |j| data.value(row, j))
    }

    /// Leaf value reached by the predictor vector `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.leaf_value(self.route_from(Self::ROOT, |j| x[j]))
    }

    /// Checks the structural invariants: two children per internal node,
    /// consistent parent links and depths, and `leaves = internal + 1`.
    pub fn check_structure(&self) -> core::result::Result<(), String> {
        let ids = self.node_ids();
        let mut internal = 0;
        for &id in &ids {
            let node = &self.nodes[id];
            if let Some((l, r)) = node.children() {
                internal += 1;
                for c in [l, r] {
                    if self.nodes[c].parent != Some(id) {
                        return Err(format!("node {c} has wrong parent"));
                    }
                    if self.nodes[c].depth != node.depth + 1 {
                        return Err(format!("node {c} has wrong depth"));
                    }
                }
                if l == r {
                    return Err(format!("node {id} has identical children"));
                }
            }
        }
        if ids.len() != 2 * internal + 1 {
            return Err("leaf count is not internal count + 1".into());
        }
        Ok(())
    }
}

/// The sum-of-trees state at one Gibbs iteration, on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub sigma_sq: f64,
}

impl Forest {
    /// Sum of the tree predictions on the standardized scale.
    pub fn predict_standardized(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum()
    }

    /// Sum of the tree predictions mapped back to the response scale.
    pub fn predict(&self, x: &[f64], std: &Standardization) -> f64 {
        std.invert(self.predict_standardized(x))
    }

    pub fn split_count(&self) -> usize {
        self.trees.iter().map(|t| t.split_variables().count()).sum()
    }
}

/// Probabilities of the three structural proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveProbs {
    pub grow: f64,
    pub prune: f64,
    pub change: f64,
}

impl Default for MoveProbs {
    fn default() -> Self {
        Self { grow: 0.28, prune: 0.28, change: 0.44 }
    }
}

/// What the sampler targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerMode {
    /// The full posterior.
    #[default]
    Posterior,
    /// Tree structures from their prior: the likelihood is dropped from the
    /// acceptance ratio and leaf values and variance come from their priors.
    PriorOnly,
    /// No structural moves; only leaf values and variance are updated.
    FixedStructure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Number of trees.
    pub m: usize,
    /// Split probability at depth `d` is `alpha * (1 + d)^-beta`.
    pub tree_prior_alpha: f64,
    pub tree_prior_beta: f64,
    /// Leaf prior standard deviation is `0.5 / (k_mu * sqrt(m))`.
    pub k_mu: f64,
    /// Degrees of freedom of the scaled inverse chi-squared variance prior.
    pub nu: f64,
    /// Prior mass below the data-based variance estimate.
    pub q: f64,
    pub n_burn: usize,
    pub n_post: usize,
    pub n_restarts: usize,
    pub move_probs: MoveProbs,
    pub mode: SamplerMode,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            m: 20,
            tree_prior_alpha: 0.95,
            tree_prior_beta: 2.0,
            k_mu: 2.0,
            nu: 3.0,
            q: 0.9,
            n_burn: 250,
            n_post: 1000,
            n_restarts: 5,
            move_probs: MoveProbs::default(),
            mode: SamplerMode::Posterior,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidHyperparams(msg.into()));
        if self.m < 1 {
            return bad("m must be at least 1");
        }
        if !(self.tree_prior_alpha > 0.0 && self.tree_prior_alpha < 1.0) {
            return bad("tree prior alpha must lie in (0, 1)");
        }
        if !(self.tree_prior_beta >= 0.0) {
            return bad("tree prior beta must be nonnegative");
        }
        if !(self.k_mu > 0.0) {
            return bad("k_mu must be positive");
        }
        if !(self.nu > 0.0) {
            return bad("nu must be positive");
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad("q must lie in (0, 1)");
        }
        if self.n_restarts < 1 {
            return bad("at least one restart is required");
        }
        let mp = self.move_probs;
        if [mp.grow, mp.prune, mp.change].iter().any(|p| !(*p >= 0.0)) {
            return bad("move probabilities must be nonnegative");
        }
        if (mp.grow + mp.prune + mp.change - 1.0).abs() > 1e-9 {
            return bad("move probabilities must sum to 1");
        }
        if mp.grow == 0.0 && self.mode != SamplerMode::FixedStructure {
            return bad("grow probability must be positive");
        }
        Ok(())
    }

    /// Prior variance of each leaf value on the standardized scale.
    pub fn leaf_prior_variance(&self) -> f64 {
        let sd = 0.5 / (self.k_mu * crate::math::sqrt(self.m as f64));
        sd * sd
    }

    /// Prior probability that a node at `depth` is internal.
    pub fn split_probability(&self, depth: u32) -> f64 {
        self.tree_prior_alpha * crate::math::pow(1.0 + depth as f64, -self.tree_prior_beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn names(k: usize) -> Vec<String> {
        Dataset::default_names(k)
    }

    #[test]
    fn standardize_examples() {
        let (z, s) = Standardization::fit(&[0.0, 10.0]).unwrap();
        assert_eq!(z, vec![-0.5, 0.5]);
        assert_eq!(s, Standardization { shift: 5.0, scale: 10.0 });

        assert_eq!(Standardization::fit(&[2.0, 2.0, 2.0]), Err(Error::DegenerateResponse));
        assert_eq!(Error::DegenerateResponse.to_string(), "degenerate response");

        let (z, _) = Standardization::fit(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(z, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![1.0, 2.0]], vec![1.0], names(1)).is_err());
        assert!(Dataset::new(vec![], vec![1.0, 2.0], names(0)).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![1.0, 2.0], names(1)).is_err());
        assert!(Dataset::new(vec![vec![1.0, f64::NAN]], vec![1.0, 2.0], names(1)).is_err());
        assert!(Dataset::new(vec![vec![1.0, 2.0]], vec![1.0, f64::INFINITY], names(1)).is_err());
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![0.0, 1.0], names(2))
            .unwrap();
        assert_eq!(d.column(1), &[2.0, 4.0]);
        assert_eq!(d.row(1), vec![3.0, 4.0]);
        let s = d.select_columns(&[1]).unwrap();
        assert_eq!(s.names(), &["x2".to_string()]);
        let r = d.select_rows(&[1, 0]).unwrap();
        assert_eq!(r.response(), &[1.0, 0.0]);
        assert_eq!(r.column(0), &[3.0, 1.0]);
    }

    #[test]
    fn stump_and_single_split_prediction() {
        let t = DecisionTree::stump(0.3);
        assert_eq!(t.predict(&[123.0, -4.0]), 0.3);

        let mut t = DecisionTree::stump(0.0);
        let (l, r) = t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 0.5 });
        t.set_leaf_value(l, -1.0);
        t.set_leaf_value(r, 1.0);
        assert_eq!(t.predict(&[0.2]), -1.0);
        // the boundary value goes right
        assert_eq!(t.predict(&[0.5]), 1.0);
        assert_eq!(t.predict(&[0.9]), 1.0);
    }

    /// x0 < 0.5 ? (x1 < 2 ? 1 : 2) : 3
    fn depth_two() -> DecisionTree {
        let mut t = DecisionTree::stump(0.0);
        let (l, r) = t.grow(DecisionTree::ROOT, SplitRule { variable: 0, value: 0.5 });
        let (ll, lr) = t.grow(l, SplitRule { variable: 1, value: 2.0 });
        t.set_leaf_value(ll, 1.0);
        t.set_leaf_value(lr, 2.0);
        t.set_leaf_value(r, 3.0);
        t
    }

    #[test]
    fn depth_two_routing_by_hand() {
        let t = depth_two();
        assert_eq!(t.predict(&[0.1, 1.0]), 1.0);
        assert_eq!(t.predict(&[0.1, 2.0]), 2.0);
        assert_eq!(t.predict(&[0.7, 0.0]), 3.0);
        assert!(t.check_structure().is_ok());
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.internal_nodes().len(), 2);
        assert_eq!(t.prunable_nodes().len(), 1);
    }

    #[test]
    fn forest_sums_trees() {
        let f = Forest { trees: vec![DecisionTree::stump(0.1), DecisionTree::stump(0.2)], sigma_sq: 1.0 };
        assert!((f.predict(&[0.0], &Standardization::IDENTITY) - 0.3).abs() < 1e-15);

        let single = Forest { trees: vec![depth_two()], sigma_sq: 1.0 };
        let std = Standardization { shift: 10.0, scale: 2.0 };
        assert_eq!(single.predict(&[0.1, 5.0], &std), 2.0 * 2.0 + 10.0);

        // hand sum: 1.0 + 0.1 + 3.0 (x = (0.1, 1.0)), then 4.1 * 2 + 10
        let mut third = DecisionTree::stump(0.0);
        let (l, r) = third.grow(DecisionTree::ROOT, SplitRule { variable: 1, value: 1.0 });
        third.set_leaf_value(l, -7.0);
        third.set_leaf_value(r, 3.0);
        let f = Forest { trees: vec![depth_two(), DecisionTree::stump(0.1), third], sigma_sq: 1.0 };
        assert!((f.predict_standardized(&[0.1, 1.0]) - 4.1).abs() < 1e-12);
        assert!((f.predict(&[0.1, 1.0], &std) - 18.2).abs() < 1e-12);
    }

    #[test]
    fn prune_reuses_slots() {
        let mut t = depth_two();
        let (l, _) = t.node(DecisionTree::ROOT).children().unwrap();
        t.prune(l, 5.0);
        assert_eq!(t.leaf_count(), 2);
        assert!(t.check_structure().is_ok());
        let before = t.nodes.len();
        t.grow(l, SplitRule { variable: 0, value: 0.1 });
        assert_eq!(t.nodes.len(), before);
        assert!(t.check_structure().is_ok());
        assert_eq!(t.predict(&[0.05, 0.0]), 5.0);
    }

    #[test]
    fn default_hyperparams_are_valid() {
        let hp = Hyperparams::default();
        hp.validate().unwrap();
        assert!((hp.split_probability(0) - 0.95).abs() < 1e-15);
        assert!((hp.split_probability(1) - 0.2375).abs() < 1e-15);
        let bad = Hyperparams { move_probs: MoveProbs { grow: 0.5, prune: 0.5, change: 0.5 }, ..hp };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn standardization_round_trip(v in proptest::collection::vec(-1e6f64..1e6, 2..50)) {
            let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - v.iter().cloned().fold(f64::INFINITY, f64::min);
            proptest::prop_assume!(spread > 1e-6);
            let (z, s) = Standardization::fit(&v).unwrap();
            for (orig, zi) in v.iter().zip(&z) {
                let back = s.invert(*zi);
                proptest::prop_assert!((back - orig).abs() <= 1e-12 * orig.abs().max(s.scale));
                proptest::prop_assert!(*zi >= -0.5 - 1e-15 && *zi <= 0.5 + 1e-15);
            }
        }
    }
}
