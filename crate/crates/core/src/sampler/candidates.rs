//! Per-column split candidates.
//!
//! Each predictor column is reduced to dense ranks over its sorted distinct
//! values. A node's candidate split values for a variable are the distinct
//! values present among the node's observations, minus the smallest one
//! (splitting there would leave the left child empty).

use alloc::vec::Vec;

use crate::model::Dataset;

#[derive(Debug, Clone)]
pub struct SplitCandidates {
    distinct: Vec<Vec<f64>>,
    ranks: Vec<Vec<u32>>,
}

impl SplitCandidates {
    pub fn new(data: &Dataset) -> Self {
        let mut distinct = Vec::with_capacity(data.k());
        let mut ranks = Vec::with_capacity(data.k());
        for col in data.columns() {
            let mut values = col.to_vec();
            values.sort_unstable_by(|a, b| a.total_cmp(b));
            values.dedup();
            let r = col
                .iter()
                .map(|v| values.partition_point(|d| d < v) as u32)
                .collect();
            distinct.push(values);
            ranks.push(r);
        }
        Self { distinct, ranks }
    }

    pub fn k(&self) -> usize {
        self.distinct.len()
    }

    /// True if the variable takes at least two distinct values in the node.
    #[inline]
    pub fn can_split(&self, var: usize, members: &[usize]) -> bool {
        let r = &self.ranks[var];
        match members.first() {
            Some(&first) => {
                let first = r[first];
                members.iter().any(|&i| r[i] != first)
            }
            None => false,
        }
    }

    /// Sorted candidate ranks for `var` among `members` (smallest value excluded).
    pub fn candidate_ranks(&self, var: usize, members: &[usize], out: &mut Vec<u32>) {
        let r = &self.ranks[var];
        out.clear();
        out.extend(members.iter().map(|&i| r[i]));
        out.sort_unstable();
        out.dedup();
        if !out.is_empty() {
            out.remove(0);
        }
    }

    pub fn rank_of(&self, var: usize, value: f64) -> Option<u32> {
        self.distinct[var]
            .binary_search_by(|d| d.total_cmp(&value))
            .ok()
            .map(|r| r as u32)
    }

    pub fn value(&self, var: usize, rank: u32) -> f64 {
        self.distinct[var][rank as usize]
    }
}
