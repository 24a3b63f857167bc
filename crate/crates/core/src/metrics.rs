//! Selection accuracy, prediction error and the nested variance
//! decomposition of restart experiments.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(selected: &[usize], true_set: &[usize], p: usize) -> ConfusionCounts {
    let mut is_sel = vec![false; p];
    let mut is_true = vec![false; p];
    selected.iter().for_each(|&j| is_sel[j] = true);
    true_set.iter().for_each(|&j| is_true[j] = true);
    let mut c = ConfusionCounts::default();
    for j in 0..p {
        match (is_sel[j], is_true[j]) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and their harmonic mean. Every 0/0 is taken as 0.
pub fn precision_recall_f1(c: &ConfusionCounts) -> Accuracy {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Accuracy { precision, recall, f1 }
}

pub fn rmse(predictions: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(predictions.len(), actual.len(), "length mismatch");
    let ss: f64 = predictions.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    sqrt(ss / predictions.len() as f64)
}

/// `(rmse_null - rmse_method) / num_pred`; undefined when nothing was
/// selected.
pub fn rmse_reduction_per_predictor(rmse_null: f64, rmse_method: f64, num_pred: usize) -> Result<f64> {
    if num_pred == 0 {
        return Err(Error::UndefinedMetric("RMSE reduction per predictor needs at least one predictor"));
    }
    Ok((rmse_null - rmse_method) / num_pred as f64)
}

/// Inclusion proportions `p[i][j][k]` for dataset `i`, run `j`, variable `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedProportions {
    pub values: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedDecomposition {
    /// `s_ik`: spread across runs within dataset `i`, per variable.
    pub within_dataset: Vec<Vec<f64>>,
    /// `s_k`: spread of the per-dataset means across datasets.
    pub across_datasets: Vec<f64>,
    /// `s`: spread of the per-variable grand means across variables.
    pub across_variables: f64,
    /// Grand mean over every dataset, run and variable.
    pub grand_mean: f64,
}

/// Standard deviations with population divisors (`1/J`, `1/I`, `1/K`).
pub fn nested_variance_decomposition(p: &NestedProportions) -> Result<NestedDecomposition> {
    let v = &p.values;
    let i_n = v.len();
    let j_n = v.first().map_or(0, Vec::len);
    let k_n = v.first().and_then(|d| d.first()).map_or(0, Vec::len);
    if i_n == 0 || j_n == 0 || k_n == 0 {
        return Err(Error::InvalidArgument("the proportion array must be non-empty".into()));
    }
    if v.iter().any(|d| d.len() != j_n || d.iter().any(|r| r.len() != k_n)) {
        return Err(Error::InvalidArgument("the proportion array is ragged".into()));
    }
    let mut dataset_means = vec![vec![0.0; k_n]; i_n];
    let mut within = vec![vec![0.0; k_n]; i_n];
    for i in 0..i_n {
        for k in 0..k_n {
            let m = v[i].iter().map(|r| r[k]).sum::<f64>() / j_n as f64;
            let ss: f64 = v[i].iter().map(|r| (r[k] - m) * (r[k] - m)).sum();
            dataset_means[i][k] = m;
            within[i][k] = sqrt(ss / j_n as f64);
        }
    }
    let mut variable_means = vec![0.0; k_n];
    let mut across = vec![0.0; k_n];
    for k in 0..k_n {
        let m = dataset_means.iter().map(|d| d[k]).sum::<f64>() / i_n as f64;
        let ss: f64 = dataset_means.iter().map(|d| (d[k] - m) * (d[k] - m)).sum();
        variable_means[k] = m;
        across[k] = sqrt(ss / i_n as f64);
    }
    let grand = variable_means.iter().sum::<f64>() / k_n as f64;
    let ss: f64 = variable_means.iter().map(|m| (m - grand) * (m - grand)).sum();
    Ok(NestedDecomposition {
        within_dataset: within,
        across_datasets: across,
        across_variables: sqrt(ss / k_n as f64),
        grand_mean: grand,
    })
}

/// Mean and standard error of the mean (divisor `n - 1`; zero for `n = 1`).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, sqrt(var / n))
}
