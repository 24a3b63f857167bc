//! Serialized forms of command results.

use serde::Serialize;

use bartvs_core::selection::{CvChoice, SelectionResult};
use bartvs_core::Hyperparams;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HyperparamReport {
    pub trees: usize,
    pub burn: usize,
    pub post: usize,
    pub restarts: usize,
    pub tree_prior_alpha: f64,
    pub tree_prior_beta: f64,
    pub k_mu: f64,
    pub nu: f64,
    pub q: f64,
    pub move_probs: [f64; 3],
}

impl From<&Hyperparams> for HyperparamReport {
    fn from(hp: &Hyperparams) -> Self {
        Self {
            trees: hp.m,
            burn: hp.n_burn,
            post: hp.n_post,
            restarts: hp.n_restarts,
            tree_prior_alpha: hp.tree_prior_alpha,
            tree_prior_beta: hp.tree_prior_beta,
            k_mu: hp.k_mu,
            nu: hp.nu,
            q: hp.q,
            move_probs: [hp.move_probs.grow, hp.move_probs.prune, hp.move_probs.change],
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SelectConfigReport {
    pub data: String,
    pub response_col: String,
    pub hyperparams: HyperparamReport,
    pub strategy: String,
    pub alpha: f64,
    pub permutations: usize,
    pub permutation_restarts: usize,
    pub prior_file: Option<String>,
    pub c_grid: Option<Vec<f64>>,
    pub clamp_prior: bool,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VariableRow {
    pub name: String,
    pub proportion: f64,
    pub prior_probability: Option<f64>,
    pub selected: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct StrategyReport {
    pub strategy: String,
    pub thresholds: Vec<f64>,
    pub selected: Vec<String>,
    pub c_star: Option<f64>,
}

impl StrategyReport {
    pub fn new(r: &SelectionResult, names: &[String]) -> Self {
        Self {
            strategy: r.strategy.name().to_owned(),
            thresholds: r.thresholds.clone(),
            selected: r.selected.iter().map(|&j| names[j].clone()).collect(),
            c_star: r.c_star,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CvError {
    pub strategy: String,
    pub c: Option<f64>,
    pub squared_error: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CvReport {
    pub folds: usize,
    pub winner: String,
    pub c: Option<f64>,
    pub errors: Vec<CvError>,
}

impl From<&CvChoice> for CvReport {
    fn from(c: &CvChoice) -> Self {
        Self {
            folds: c.folds,
            winner: c.strategy.name().to_owned(),
            c: c.c,
            errors: c
                .errors
                .iter()
                .map(|(s, c, e)| CvError { strategy: s.name().to_owned(), c: *c, squared_error: *e })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SelectionSummary {
    /// Requested strategy.
    pub strategy: String,
    /// Thresholding rule that produced `selected`.
    pub rule: String,
    pub c: Option<f64>,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SeedReport {
    pub master: u64,
    pub derivation: &'static str,
}

pub const SEED_DERIVATION: &str =
    "chain seeds are splitmix64 folds of the master seed over (task kind, task index) paths";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Runtime {
    pub seconds: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SelectReport {
    pub command: &'static str,
    pub config: SelectConfigReport,
    pub result: SelectionSummary,
    pub variables: Vec<VariableRow>,
    pub strategies: Vec<StrategyReport>,
    pub cv: Option<CvReport>,
    pub permutations_used: usize,
    pub seeds: SeedReport,
    pub runtime: Runtime,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimulateConfigReport {
    pub scenario: String,
    pub n: usize,
    pub p: Vec<usize>,
    pub p0: Vec<usize>,
    pub sigma_sq: Vec<f64>,
    pub replicates: usize,
    pub strategies: Vec<String>,
    pub prior: String,
    pub hyperparams: HyperparamReport,
    pub alpha: f64,
    pub permutations: usize,
    pub permutation_restarts: usize,
    pub folds: usize,
    pub seed: u64,
}

/// One line of the simulation table. Data rows carry a replicate index;
/// summary rows carry means with standard errors.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimulationRow {
    pub row_type: &'static str,
    pub scenario: String,
    pub n: usize,
    pub p: usize,
    pub p0: usize,
    pub sigma_sq: f64,
    pub prior: String,
    pub strategy: String,
    pub replicate: Option<usize>,
    pub seed: Option<u64>,
    pub cv_winner: Option<String>,
    pub n_selected: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_se: Option<f64>,
    pub recall_se: Option<f64>,
    pub f1_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SimulateReport {
    pub command: &'static str,
    pub config: SimulateConfigReport,
    pub table: String,
    pub data_rows: usize,
    pub summary_rows: usize,
    pub seeds: SeedReport,
    pub runtime: Runtime,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DiagnoseConfigReport {
    pub n: usize,
    pub p: usize,
    pub datasets: usize,
    pub hyperparams: HyperparamReport,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DiagnoseReport {
    pub command: &'static str,
    pub config: DiagnoseConfigReport,
    /// `proportions[i][j][k]`: dataset `i`, restart `j`, variable `k`.
    pub proportions: Vec<Vec<Vec<f64>>>,
    pub grand_mean: f64,
    pub expected_mean: f64,
    pub within_dataset_sd: Vec<Vec<f64>>,
    pub across_datasets_sd: Vec<f64>,
    pub across_variables_sd: f64,
    pub mean_within_dataset_sd: f64,
    pub mean_across_datasets_sd: f64,
    /// Whether the spread between datasets exceeds the spread between
    /// restarts on average.
    pub datasets_dominate: bool,
    pub seeds: SeedReport,
    pub runtime: Runtime,
}
