//! Informed prior weights on splitting variables.
//!
//! A variable with prior importance probability `m_k` gets splitting weight
//! `1 + c * m_k`; `c = 0` recovers uniform splitting. Permutation-null runs
//! always use uniform weights, whatever prior the caller supplies, since the
//! permuted response is unrelated to every predictor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Influence grid searched when a prior is supplied.
pub const DEFAULT_C_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 10_000.0];

/// Clamp range applied to file-supplied probabilities on request.
pub const CLAMP_RANGE: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub probabilities: Vec<f64>,
    pub c: f64,
}

impl PriorSpec {
    pub fn new(probabilities: Vec<f64>, c: f64) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidArgument(format!("prior probability {p} outside [0, 1]")));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("prior influence c = {c} must be >= 0")));
        }
        Ok(Self { probabilities, c })
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.probabilities.clone(), c)
    }

    /// Clamps every probability into [`CLAMP_RANGE`].
    pub fn clamped(mut self) -> Self {
        let (lo, hi) = CLAMP_RANGE;
        self.probabilities.iter_mut().for_each(|p| *p = p.clamp(lo, hi));
        self
    }
}

/// `w_k = 1 + c * m_k`.
pub fn compute_weights(spec: &PriorSpec) -> Vec<f64> {
    spec.probabilities.iter().map(|m| 1.0 + spec.c * m).collect()
}

pub fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0; k]
}

/// Weight 2 on `true_set`, 1 elsewhere.
pub fn doubled_weight_spec(true_set: &[usize], k: usize) -> Result<Vec<f64>> {
    let mut w = uniform_weights(k);
    for &j in true_set {
        if j >= k {
            return Err(Error::InvalidArgument(format!("variable index {j} out of range")));
        }
        w[j] = 2.0;
    }
    Ok(w)
}

/// Probability that a splitting rule picks each variable (all variables
/// available).
pub fn selection_probabilities(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}
