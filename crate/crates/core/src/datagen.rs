//! Synthetic data for the three simulation settings: pure noise, a sparse
//! linear model and the Friedman benchmark function.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::{sin, sqrt};
use crate::model::Dataset;
use crate::rng::{derive_rng, ChainRng, DATASET};

pub const DEFAULT_N: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Null,
    Linear,
    Friedman,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Null => "null",
            ScenarioKind::Linear => "linear",
            ScenarioKind::Friedman => "friedman",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "null" => Some(ScenarioKind::Null),
            "linear" => Some(ScenarioKind::Linear),
            "friedman" => Some(ScenarioKind::Friedman),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    /// Number of active predictors.
    pub p0: usize,
    pub sigma_sq: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidArgument(m));
        if self.n < 2 || self.p < 1 {
            return bad(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p));
        }
        if !(self.sigma_sq >= 0.0) || !self.sigma_sq.is_finite() {
            return bad(format!("noise variance {} must be >= 0", self.sigma_sq));
        }
        match self.kind {
            ScenarioKind::Null if self.p0 != 0 => bad("the null scenario has no active predictors".into()),
            ScenarioKind::Linear if self.p0 > self.p => bad(format!("p0 = {} exceeds p = {}", self.p0, self.p)),
            ScenarioKind::Friedman if self.p < 5 || self.p0 != 5 => {
                bad("the Friedman scenario needs p >= 5 and exactly 5 active predictors".into())
            }
            _ => Ok(()),
        }
    }

    /// Generates the dataset and the indices of the active predictors.
    pub fn generate(&self) -> Result<(Dataset, Vec<usize>)> {
        self.validate()?;
        match self.kind {
            ScenarioKind::Null => Ok((gen_null(self.n, self.p, self.seed)?, Vec::new())),
            ScenarioKind::Linear => gen_linear(self.n, self.p, self.p0, self.sigma_sq, self.seed),
            ScenarioKind::Friedman => gen_friedman(self.n, self.p, self.sigma_sq, self.seed),
        }
    }
}

fn normal_columns(rng: &mut ChainRng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..p).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

/// Predictors and response all iid standard normal.
pub fn gen_null(n: usize, p: usize, seed: u64) -> Result<Dataset> {
    let mut rng = derive_rng(seed, &[DATASET]);
    let cols = normal_columns(&mut rng, n, p);
    let y = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Dataset::new(cols, y, Dataset::default_names(p))
}

/// `y = X beta + e` with `beta = (1, ..., 1, 0, ..., 0)` (`p0` ones) and
/// `e ~ N(0, sigma_sq)`.
pub fn gen_linear(n: usize, p: usize, p0: usize, sigma_sq: f64, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if p0 > p {
        return Err(Error::InvalidArgument(format!("p0 = {p0} exceeds p = {p}")));
    }
    let mut rng = derive_rng(seed, &[DATASET]);
    let cols = normal_columns(&mut rng, n, p);
    let sd = sqrt(sigma_sq);
    let y = (0..n)
        .map(|i| {
            let signal: f64 = cols[..p0].iter().map(|c| c[i]).sum();
            let z: f64 = rng.sample(StandardNormal);
            signal + sd * z
        })
        .collect();
    Ok((Dataset::new(cols, y, Dataset::default_names(p))?, (0..p0).collect()))
}

/// `10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5` at the first five
/// entries of `x`.
pub fn friedman_mean(x: &[f64]) -> f64 {
    10.0 * sin(core::f64::consts::PI * x[0] * x[1])
        + 20.0 * (x[2] - 0.5) * (x[2] - 0.5)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

/// Uniform(0, 1) predictors and the Friedman mean plus `N(0, sigma_sq)` noise.
pub fn gen_friedman(n: usize, p: usize, sigma_sq: f64, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    if p < 5 {
        return Err(Error::InvalidArgument(format!("the Friedman function needs p >= 5, got {p}")));
    }
    let mut rng = derive_rng(seed, &[DATASET]);
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let sd = sqrt(sigma_sq);
    let y = (0..n)
        .map(|i| {
            let x = [cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]];
            let z: f64 = rng.sample(StandardNormal);
            friedman_mean(&x) + sd * z
        })
        .collect();
    Ok((Dataset::new(cols, y, Dataset::default_names(p))?, (0..5).collect()))
}
