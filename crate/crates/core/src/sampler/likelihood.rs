//! Conjugate pieces: the leaf-integrated marginal likelihood, leaf value
//! draws and the residual-variance draw.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::{chi_squared_quantile, log, ols_residual_variance, sample_variance, sqrt, LN_2PI};
use crate::model::{Dataset, DecisionTree, NodeId};

/// Log of `∫ Π N(r_i | mu, sigma_sq) N(mu | 0, tau_sq) dmu` from the
/// sufficient statistics of the node.
pub fn log_marginal_from_stats(n: usize, sum: f64, sum_sq: f64, sigma_sq: f64, tau_sq: f64) -> f64 {
    let nf = n as f64;
    let denom = sigma_sq + nf * tau_sq;
    -0.5 * nf * (LN_2PI + log(sigma_sq)) - 0.5 * sum_sq / sigma_sq
        + 0.5 * log(sigma_sq / denom)
        + 0.5 * tau_sq * sum * sum / (sigma_sq * denom)
}

pub fn node_log_marginal(residuals: &[f64], sigma_sq: f64, tau_sq: f64) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::EmptyNode);
    }
    let sum: f64 = residuals.iter().sum();
    let sum_sq: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(log_marginal_from_stats(residuals.len(), sum, sum_sq, sigma_sq, tau_sq))
}

/// Posterior mean and variance of a leaf value given `n` residuals summing to
/// `sum`.
pub fn leaf_posterior(n: usize, sum: f64, sigma_sq: f64, tau_sq: f64) -> (f64, f64) {
    let precision = n as f64 / sigma_sq + 1.0 / tau_sq;
    ((sum / sigma_sq) / precision, 1.0 / precision)
}

/// Redraws every leaf value of `tree` from its conditional posterior.
/// `leaf_of[i]` is the leaf holding observation `i`.
pub fn draw_leaf_values<R: Rng + ?Sized>(
    tree: &mut DecisionTree,
    leaf_of: &[NodeId],
    residuals: &[f64],
    sigma_sq: f64,
    tau_sq: f64,
    rng: &mut R,
) -> Result<()> {
    let leaves = tree.leaves();
    let slots = leaves.iter().copied().max().unwrap_or(0) + 1;
    let mut count = alloc::vec![0usize; slots];
    let mut sum = alloc::vec![0.0f64; slots];
    for (&leaf, &r) in leaf_of.iter().zip(residuals) {
        count[leaf] += 1;
        sum[leaf] += r;
    }
    for leaf in leaves {
        if count[leaf] == 0 {
            return Err(Error::EmptyNode);
        }
        let (mean, var) = leaf_posterior(count[leaf], sum[leaf], sigma_sq, tau_sq);
        let z: f64 = rng.sample(StandardNormal);
        tree.set_leaf_value(leaf, mean + sqrt(var) * z);
    }
    Ok(())
}

/// Draws `sigma_sq` from its scaled inverse chi-squared conditional:
/// `(nu * lambda + Σ r²) / X` with `X ~ χ²(nu + n)`.
pub fn draw_sigma_sq<R: Rng + ?Sized>(residuals: &[f64], nu: f64, lambda: f64, rng: &mut R) -> f64 {
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    let df = nu + residuals.len() as f64;
    let x: f64 = ChiSquared::new(df).expect("positive degrees of freedom").sample(rng);
    (nu * lambda + ss) / x.max(f64::MIN_POSITIVE)
}

/// Scaled inverse chi-squared prior on the residual variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPrior {
    pub nu: f64,
    pub lambda: f64,
    /// Data-based variance estimate the prior was calibrated against.
    pub sigma_hat_sq: f64,
}

impl SigmaPrior {
    /// Chooses `lambda` so that the prior puts mass `q` below `sigma_hat_sq`.
    ///
    /// `sigma_hat_sq` is the residual variance of a least-squares fit of the
    /// (standardized) response on all predictors when `n > K + 1` and the fit
    /// is well posed, otherwise the sample variance of the response.
    pub fn calibrate(data: &Dataset, response: &[f64], nu: f64, q: f64) -> Self {
        let fallback = || sample_variance(response);
        let sigma_hat_sq = if data.n() > data.k() + 1 {
            let cols: Vec<&[f64]> = data.columns().collect();
            match ols_residual_variance(&cols, response) {
                Some(v) if v > 0.0 && v.is_finite() => v,
                _ => fallback(),
            }
        } else {
            fallback()
        };
        Self::from_estimate(sigma_hat_sq, nu, q)
    }

    pub fn from_estimate(sigma_hat_sq: f64, nu: f64, q: f64) -> Self {
        // P(sigma_sq < s) = P(X > nu * lambda / s) = q, X ~ χ²(nu)
        let lambda = sigma_hat_sq * chi_squared_quantile(1.0 - q, nu) / nu;
        Self { nu, lambda, sigma_hat_sq }
    }
}
