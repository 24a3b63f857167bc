//! Permutation-null variable selection.
//!
//! The response is permuted `P` times and the model refit to each permuted
//! response with uniform split weights, giving a `P x K` matrix of null
//! inclusion proportions. Three rules turn that matrix into thresholds:
//!
//! * **local**: variable `k` is selected when its proportion exceeds the
//!   `1 - alpha` quantile of its own null column;
//! * **global max**: one threshold for all variables, the `1 - alpha` quantile
//!   of the per-permutation maxima;
//! * **global SE**: `m_k + C* s_k` from the column means and standard
//!   deviations, with `C*` the smallest multiplier giving simultaneous
//!   `1 - alpha` coverage of every column.
//!
//! Cross-validation picks among the rules (and among prior influence values)
//! by held-out squared error.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::inclusion::restart_averaged_proportions;
use crate::math::sqrt;
use crate::model::{Dataset, Hyperparams};
use crate::rng::{self, derive_rng, derive_seed};
use crate::sampler::run_chain;
use crate::split_prior::{compute_weights, uniform_weights, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Local,
    GlobalMax,
    GlobalSe,
    CvBest,
}

impl Strategy {
    /// The three thresholding rules, most stringent first.
    pub const THRESHOLDS: [Strategy; 3] = [Strategy::GlobalMax, Strategy::GlobalSe, Strategy::Local];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Local => "local",
            Strategy::GlobalMax => "global-max",
            Strategy::GlobalSe => "global-se",
            Strategy::CvBest => "cv",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "local" => Some(Strategy::Local),
            "global-max" => Some(Strategy::GlobalMax),
            "global-se" => Some(Strategy::GlobalSe),
            "cv" => Some(Strategy::CvBest),
            _ => None,
        }
    }
}

/// Null inclusion proportions, one row per permuted-response run.
#[derive(Debug, Clone, PartialEq)]
pub struct NullProportionMatrix {
    rows: Vec<Vec<f64>>,
    k: usize,
}

impl NullProportionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidArgument("the null matrix needs at least one permutation".into())
        })?;
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("null matrix rows must share a positive length".into()));
        }
        Ok(Self { rows, k })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn permutations(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Settings shared by the permutation procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub alpha: f64,
    /// Number of permuted-response runs `P`.
    pub permutations: usize,
    /// Chains averaged per permuted-response run.
    pub permutation_restarts: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { alpha: 0.05, permutations: 100, permutation_restarts: 1 }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.permutations < 1 {
            return Err(Error::InvalidArgument("at least one permutation is required".into()));
        }
        if self.permutation_restarts < 1 {
            return Err(Error::InvalidArgument("permutation restarts must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// The winning configuration of a cross-validated selection.
#[derive(Debug, Clone, PartialEq)]
pub struct CvChoice {
    pub strategy: Strategy,
    pub c: Option<f64>,
    /// Total held-out squared error per (strategy, c) candidate.
    pub errors: Vec<(Strategy, Option<f64>, f64)>,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMetadata {
    pub permutations: usize,
    pub permutation_restarts: usize,
    pub master_seed: u64,
    /// Prior influence used for the unpermuted run, if a prior was given.
    pub c: Option<f64>,
    pub cv: Option<CvChoice>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub strategy: Strategy,
    /// Per-variable thresholds (the global max threshold is broadcast).
    pub thresholds: Vec<f64>,
    /// `{ k : proportions[k] > thresholds[k] }`, ascending.
    pub selected: Vec<usize>,
    pub proportions: Vec<f64>,
    pub alpha: f64,
    /// The global SE multiplier, when that rule produced the thresholds.
    pub c_star: Option<f64>,
    pub metadata: Option<SelectionMetadata>,
}

fn finish(strategy: Strategy, p: &[f64], thresholds: Vec<f64>, alpha: f64, c_star: Option<f64>) -> SelectionResult {
    let selected = (0..p.len()).filter(|&k| p[k] > thresholds[k]).collect();
    SelectionResult {
        strategy,
        thresholds,
        selected,
        proportions: p.to_vec(),
        alpha,
        c_star,
        metadata: None,
    }
}

/// Lower empirical quantile: the smallest order statistic `x_(j)` with
/// `j / n >= level`.
///
/// This is the one quantile definition used by every thresholding rule.
pub fn empirical_quantile(values: &[f64], level: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let j = (1..=n).find(|&j| j as f64 / n as f64 >= level).unwrap_or(n);
    sorted[j - 1]
}

fn check_shapes(p: &[f64], null: &NullProportionMatrix, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if p.len() != null.k() {
        return Err(Error::InvalidArgument(format!(
            "{} proportions against a null matrix with {} columns",
            p.len(),
            null.k()
        )));
    }
    Ok(())
}

pub fn threshold_local(p: &[f64], null: &NullProportionMatrix, alpha: f64) -> Result<SelectionResult> {
    check_shapes(p, null, alpha)?;
    let thresholds = (0..null.k())
        .map(|j| empirical_quantile(&null.column(j), 1.0 - alpha))
        .collect();
    Ok(finish(Strategy::Local, p, thresholds, alpha, None))
}

pub fn threshold_global_max(p: &[f64], null: &NullProportionMatrix, alpha: f64) -> Result<SelectionResult> {
    check_shapes(p, null, alpha)?;
    let maxima: Vec<f64> = null
        .rows()
        .iter()
        .map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let g = empirical_quantile(&maxima, 1.0 - alpha);
    Ok(finish(Strategy::GlobalMax, p, vec![g; null.k()], alpha, None))
}

/// Column means and sample standard deviations (divisor `P - 1`).
pub fn column_moments(null: &NullProportionMatrix) -> Vec<(f64, f64)> {
    let n = null.permutations() as f64;
    (0..null.k())
        .map(|j| {
            let col = null.column(j);
            // summation can leave a constant column with a one-ulp spread
            if col.iter().all(|v| *v == col[0]) {
                return (col[0], 0.0);
            }
            let m = col.iter().sum::<f64>() / n;
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            (m, sqrt(ss / (n - 1.0)))
        })
        .collect()
}

fn coverage_count(permutations: usize, alpha: f64) -> usize {
    (1..=permutations)
        .find(|&c| c as f64 / permutations as f64 > 1.0 - alpha)
        .unwrap_or(permutations)
}

/// Smallest `C >= 0` such that every column has more than a `1 - alpha`
/// fraction of its values at or below `m_k + C s_k`.
///
/// Coverage of column `k` only changes when `m_k + C s_k` crosses one of its
/// values, so the infimum is attained at one of the candidates
/// `(p_{k,i} - m_k) / s_k` or at zero. For each column the smallest covering
/// candidate is the order statistic `x_(c)` with `c` the smallest count
/// satisfying `c / P > 1 - alpha`; `C*` is the largest of the per-column
/// requirements. Columns with `s_k = 0` are covered at every `C`.
pub fn global_se_multiplier(null: &NullProportionMatrix, alpha: f64) -> f64 {
    global_se_thresholds(null, alpha).0
}

/// `C*` and the thresholds `m_k + C* s_k`.
///
/// Each threshold is at least the column's covering order statistic `x_(c)`,
/// which holds exactly in real arithmetic; the bound is re-imposed after
/// rounding so the rule stays nested inside the local one.
pub fn global_se_thresholds(null: &NullProportionMatrix, alpha: f64) -> (f64, Vec<f64>) {
    let needed = coverage_count(null.permutations(), alpha);
    let moments = column_moments(null);
    let covering: Vec<f64> = (0..null.k())
        .map(|j| {
            let mut col = null.column(j);
            col.sort_unstable_by(|a, b| a.total_cmp(b));
            col[needed - 1]
        })
        .collect();
    let c_star = moments
        .iter()
        .zip(&covering)
        .filter(|((_, s), _)| *s > 0.0)
        .map(|((m, s), x)| ((x - m) / s).max(0.0))
        .fold(0.0, f64::max);
    let thresholds = moments
        .iter()
        .zip(&covering)
        .map(|((m, s), x)| (m + c_star * s).max(*x))
        .collect();
    (c_star, thresholds)
}

pub fn threshold_global_se(p: &[f64], null: &NullProportionMatrix, alpha: f64) -> Result<SelectionResult> {
    check_shapes(p, null, alpha)?;
    if null.permutations() < 2 {
        return Err(Error::InvalidArgument("the global SE rule needs at least two permutations".into()));
    }
    let (c_star, thresholds) = global_se_thresholds(null, alpha);
    Ok(finish(Strategy::GlobalSe, p, thresholds, alpha, Some(c_star)))
}

pub fn apply_threshold(
    strategy: Strategy,
    p: &[f64],
    null: &NullProportionMatrix,
    alpha: f64,
) -> Result<SelectionResult> {
    match strategy {
        Strategy::Local => threshold_local(p, null, alpha),
        Strategy::GlobalMax => threshold_global_max(p, null, alpha),
        Strategy::GlobalSe => threshold_global_se(p, null, alpha),
        Strategy::CvBest => Err(Error::InvalidArgument("cv is not a thresholding rule".into())),
    }
}

/// Refits the model to `P` permutations of the response with uniform split
/// weights. Predictors are never modified. Runs whose chains never split are
/// left out of the matrix.
pub fn permutation_null<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<NullProportionMatrix> {
    config.validate()?;
    let weights = uniform_weights(dataset.k());
    let perm_hp = Hyperparams { n_restarts: config.permutation_restarts, ..hp.clone() };
    let runs = exec.map(config.permutations, |p| {
        let mut y = dataset.response().to_vec();
        y.shuffle(&mut derive_rng(master_seed, &[rng::PERMUTATION, p as u64]));
        let permuted = dataset.with_response(y)?;
        let seed = derive_seed(master_seed, &[rng::PERMUTATION_CHAIN, p as u64]);
        restart_averaged_proportions(&permuted, &perm_hp, &weights, seed, &crate::exec::Sequential)
    });
    let mut rows = Vec::with_capacity(runs.len());
    for run in runs {
        match run {
            Ok(r) => rows.push(r),
            Err(Error::NoSplitsInPosterior) => {}
            Err(e) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::NoSplitsInPosterior);
    }
    NullProportionMatrix::new(rows)
}

/// Proportions from the unpermuted response and the permutation null,
/// computed once and shared by every thresholding rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationEvidence {
    pub proportions: Vec<f64>,
    pub null: NullProportionMatrix,
}

impl PermutationEvidence {
    pub fn threshold(&self, strategy: Strategy, alpha: f64) -> Result<SelectionResult> {
        apply_threshold(strategy, &self.proportions, &self.null, alpha)
    }
}

const UNPERMUTED: u64 = 0x5eed_0001;
const NULL_RUNS: u64 = 0x5eed_0002;

/// The null matrix for `dataset` under `master_seed`.
pub fn null_for<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<NullProportionMatrix> {
    permutation_null(dataset, hp, config, derive_seed(master_seed, &[NULL_RUNS]), exec)
}

/// Restart-averaged proportions for the unpermuted response under
/// `master_seed`. Every prior weighting of the same data shares the chain
/// seeds.
pub fn proportions_for<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    master_seed: u64,
    exec: &E,
) -> Result<Vec<f64>> {
    restart_averaged_proportions(dataset, hp, split_weights, derive_seed(master_seed, &[UNPERMUTED]), exec)
}

/// Unpermuted proportions (with `split_weights`) plus the permutation null.
pub fn gather_evidence<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<PermutationEvidence> {
    let proportions = proportions_for(dataset, hp, split_weights, master_seed, exec)?;
    let null = null_for(dataset, hp, config, master_seed, exec)?;
    Ok(PermutationEvidence { proportions, null })
}

/// Runs one thresholding rule end to end.
pub fn select_with_strategy<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    split_weights: &[f64],
    strategy: Strategy,
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<SelectionResult> {
    let evidence = gather_evidence(dataset, hp, split_weights, config, master_seed, exec)?;
    let mut result = evidence.threshold(strategy, config.alpha)?;
    result.metadata = Some(SelectionMetadata {
        permutations: evidence.null.permutations(),
        permutation_restarts: config.permutation_restarts,
        master_seed,
        c: None,
        cv: None,
    });
    Ok(result)
}

/// Where the unpermuted run's split weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitPrior {
    Uniform,
    /// Fixed weights, not tuned.
    Fixed(Vec<f64>),
    /// `1 + c * m_k` weights, with `c` chosen from the grid.
    Informed { probabilities: Vec<f64>, c_grid: Vec<f64> },
}

impl SplitPrior {
    /// `(c, weights)` candidates to compare.
    pub fn candidates(&self, k: usize) -> Result<Vec<(Option<f64>, Vec<f64>)>> {
        match self {
            SplitPrior::Uniform => Ok(vec![(None, uniform_weights(k))]),
            SplitPrior::Fixed(w) => {
                if w.len() != k {
                    return Err(Error::InvalidArgument("split weight count does not match K".into()));
                }
                Ok(vec![(None, w.clone())])
            }
            SplitPrior::Informed { probabilities, c_grid } => {
                if probabilities.len() != k {
                    return Err(Error::InvalidArgument("prior probability count does not match K".into()));
                }
                if c_grid.is_empty() {
                    return Err(Error::InvalidArgument("the c grid is empty".into()));
                }
                c_grid
                    .iter()
                    .map(|&c| {
                        let spec = PriorSpec::new(probabilities.clone(), c)?;
                        Ok((Some(c), compute_weights(&spec)))
                    })
                    .collect()
            }
        }
    }
}

/// Assigns observations to `folds` folds after a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, master_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut derive_rng(master_seed, &[rng::FOLD_ASSIGNMENT]));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    fold_of
}

fn set_key(selected: &[usize]) -> u64 {
    selected.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &j| {
        (h ^ (j as u64 + 1)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Squared error on `test` of a model refit on `train` using only
/// `selected` (uniform weights, one chain). An empty selection predicts the
/// training mean.
fn refit_error(
    train: &Dataset,
    test: &Dataset,
    selected: &[usize],
    hp: &Hyperparams,
    seed: u64,
) -> Result<f64> {
    let y = test.response();
    if selected.is_empty() {
        let mean = train.response().iter().sum::<f64>() / train.n() as f64;
        return Ok(y.iter().map(|v| (v - mean) * (v - mean)).sum());
    }
    let sub_train = train.select_columns(selected)?;
    let sub_test = test.select_columns(selected)?;
    let samples = run_chain(&sub_train, hp, &uniform_weights(selected.len()), seed)?;
    let mut total = 0.0;
    for i in 0..sub_test.n() {
        let pred = samples.posterior_mean_prediction(&sub_test.row(i))?;
        total += (pred - y[i]) * (pred - y[i]);
    }
    Ok(total)
}

/// Cross-validated choice among thresholding rules and prior influence
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub strategies: Vec<Strategy>,
    pub folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { strategies: Strategy::THRESHOLDS.to_vec(), folds: 5 }
    }
}

/// Everything the full-data rerun of a cross-validated selection produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// The winner, tagged [`Strategy::CvBest`] with the choice in metadata.
    pub best: SelectionResult,
    /// Every thresholding rule applied to the winning prior's evidence.
    pub per_strategy: Vec<SelectionResult>,
    pub evidence: PermutationEvidence,
}

/// For every fold and every (strategy, c) candidate: select on the training
/// part, refit using only the selected variables and accumulate squared error
/// on the held-out part. The candidate with the smallest total wins and is
/// rerun on the full data with the same seed derivation as
/// [`select_with_strategy`].
///
/// Ties go to the candidate listed first: strategies in the order
/// [`Strategy::THRESHOLDS`] (most stringent first), then smaller `c`.
pub fn select_cv_best<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    prior: &SplitPrior,
    cv: &CvConfig,
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<CvOutcome> {
    let mut out = select_cv_best_each(dataset, hp, core::slice::from_ref(prior), cv, config, master_seed, exec)?;
    Ok(out.remove(0))
}

/// [`select_cv_best`] for several split priors on the same data. Nulls and
/// refits do not depend on the prior, so they are computed once; each
/// outcome equals a separate call with that prior.
pub fn select_cv_best_each<E: Executor>(
    dataset: &Dataset,
    hp: &Hyperparams,
    priors: &[SplitPrior],
    cv: &CvConfig,
    config: &SelectionConfig,
    master_seed: u64,
    exec: &E,
) -> Result<Vec<CvOutcome>> {
    config.validate()?;
    if cv.folds < 2 || cv.folds > dataset.n() {
        return Err(Error::InvalidArgument(format!("{} folds for {} observations", cv.folds, dataset.n())));
    }
    if priors.is_empty() {
        return Err(Error::InvalidArgument("no split prior to evaluate".into()));
    }
    let strategies: Vec<Strategy> = Strategy::THRESHOLDS
        .iter()
        .copied()
        .filter(|s| cv.strategies.contains(s))
        .collect();
    if strategies.is_empty() {
        return Err(Error::InvalidArgument("no thresholding strategy to compare".into()));
    }
    let candidates = priors
        .iter()
        .map(|p| p.candidates(dataset.k()))
        .collect::<Result<Vec<_>>>()?;
    let fold_of = fold_assignment(dataset.n(), cv.folds, master_seed);

    // errors[prior][candidate * strategies + strategy], per fold
    let per_fold: Vec<Result<Vec<Vec<f64>>>> = exec.map(cv.folds, |f| {
        let train_rows: Vec<usize> = (0..dataset.n()).filter(|&i| fold_of[i] != f).collect();
        let test_rows: Vec<usize> = (0..dataset.n()).filter(|&i| fold_of[i] == f).collect();
        let train = dataset.select_rows(&train_rows)?;
        let test = dataset.select_rows(&test_rows)?;
        let fold_seed = derive_seed(master_seed, &[rng::FOLD, f as u64]);
        let null = null_for(&train, hp, config, fold_seed, exec)?;
        // identical selected sets share one refit, whichever prior chose them
        let mut cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut fold_errors = Vec::with_capacity(priors.len());
        for prior_cands in &candidates {
            let mut errors = Vec::with_capacity(prior_cands.len() * strategies.len());
            for (_, weights) in prior_cands {
                let p = proportions_for(&train, hp, weights, fold_seed, exec)?;
                for &s in &strategies {
                    let sel = apply_threshold(s, &p, &null, config.alpha)?.selected;
                    let err = match cache.get(&sel) {
                        Some(e) => *e,
                        None => {
                            let seed = derive_seed(fold_seed, &[rng::REFIT, set_key(&sel)]);
                            let e = refit_error(&train, &test, &sel, hp, seed)?;
                            cache.insert(sel, e);
                            e
                        }
                    };
                    errors.push(err);
                }
            }
            fold_errors.push(errors);
        }
        Ok(fold_errors)
    });

    let mut totals: Vec<Vec<f64>> = candidates.iter().map(|c| vec![0.0; c.len() * strategies.len()]).collect();
    for fold in per_fold {
        for (tot, errs) in totals.iter_mut().zip(fold?) {
            for (t, e) in tot.iter_mut().zip(errs) {
                *t += e;
            }
        }
    }

    let full_null = null_for(dataset, hp, config, master_seed, exec)?;
    let rank = |s: Strategy| strategies.iter().position(|&x| x == s).unwrap();
    let mut outcomes = Vec::with_capacity(priors.len());
    for (prior_cands, tot) in candidates.iter().zip(totals) {
        let mut labelled = Vec::with_capacity(tot.len());
        for (ci, (c, _)) in prior_cands.iter().enumerate() {
            for (si, &s) in strategies.iter().enumerate() {
                labelled.push((s, *c, tot[ci * strategies.len() + si]));
            }
        }
        // strategy order first, then c order
        let mut order: Vec<usize> = (0..labelled.len()).collect();
        order.sort_by(|&a, &b| {
            labelled[a]
                .2
                .total_cmp(&labelled[b].2)
                .then(rank(labelled[a].0).cmp(&rank(labelled[b].0)))
                .then(a.cmp(&b))
        });
        let (best_strategy, best_c, _) = labelled[order[0]];
        let best_weights = &prior_cands
            .iter()
            .find(|(c, _)| *c == best_c)
            .expect("winner comes from the candidates")
            .1;

        let proportions = proportions_for(dataset, hp, best_weights, master_seed, exec)?;
        let evidence = PermutationEvidence { proportions, null: full_null.clone() };
        let metadata = SelectionMetadata {
            permutations: evidence.null.permutations(),
            permutation_restarts: config.permutation_restarts,
            master_seed,
            c: best_c,
            cv: Some(CvChoice { strategy: best_strategy, c: best_c, errors: labelled, folds: cv.folds }),
        };
        let per_strategy = Strategy::THRESHOLDS
            .iter()
            .map(|&s| {
                let mut r = evidence.threshold(s, config.alpha)?;
                r.metadata = Some(SelectionMetadata { cv: None, ..metadata.clone() });
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = evidence.threshold(best_strategy, config.alpha)?;
        best.strategy = Strategy::CvBest;
        best.metadata = Some(metadata);
        outcomes.push(CvOutcome { best, per_strategy, evidence });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn null(rows: Vec<Vec<f64>>) -> NullProportionMatrix {
        NullProportionMatrix::new(rows).unwrap()
    }

    fn column(values: &[f64]) -> NullProportionMatrix {
        null(values.iter().map(|v| vec![*v]).collect())
    }

    #[test]
    fn local_zero_null_selects_any_positive() {
        let n = column(&[0.0; 5]);
        let r = threshold_local(&[0.01], &n, 0.05).unwrap();
        assert_eq!(r.selected, vec![0]);
    }

    #[test]
    fn local_quantile_by_hand() {
        // j = 3 is the smallest order with j / 4 >= 0.75
        let n = column(&[0.04, 0.01, 0.03, 0.02]);
        let r = threshold_local(&[0.03], &n, 0.25).unwrap();
        assert_eq!(r.thresholds, vec![0.03]);
        assert!(r.selected.is_empty(), "equal to threshold is not selected");
        let r = threshold_local(&[0.031], &n, 0.25).unwrap();
        assert_eq!(r.selected, vec![0]);
        // alpha = 0.05 needs the maximum
        assert_eq!(threshold_local(&[0.0], &n, 0.05).unwrap().thresholds, vec![0.04]);
    }

    #[test]
    fn quantile_levels_avoid_rounding_traps() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert_eq!(empirical_quantile(&values, 1.0 - 0.05), 95.0);
        assert_eq!(empirical_quantile(&values, 0.5), 50.0);
        assert_eq!(empirical_quantile(&[3.0], 0.95), 3.0);
    }

    #[test]
    fn global_max_by_hand() {
        let n = null(vec![vec![0.6, 0.4], vec![0.7, 0.3]]);
        let r = threshold_global_max(&[0.65, 0.1], &n, 0.5).unwrap();
        assert_eq!(r.thresholds, vec![0.6, 0.6]);
        assert_eq!(r.selected, vec![0]);
        let r = threshold_global_max(&[0.6, 0.59], &n, 0.5).unwrap();
        assert!(r.selected.is_empty());
    }

    #[test]
    fn global_max_with_one_variable_is_local() {
        let n = column(&[0.2, 0.9, 0.4, 0.5, 0.7]);
        for alpha in [0.05, 0.2, 0.5, 0.9] {
            let a = threshold_local(&[0.6], &n, alpha).unwrap();
            let b = threshold_global_max(&[0.6], &n, alpha).unwrap();
            assert_eq!(a.thresholds, b.thresholds);
            assert_eq!(a.selected, b.selected);
        }
    }

    #[test]
    fn global_se_by_hand() {
        let n = column(&[0.1, 0.2, 0.3, 0.4]);
        let r = threshold_global_se(&[0.4], &n, 0.05).unwrap();
        let s = (0.05f64 / 3.0).sqrt();
        assert!((s - 0.129_099_444_873_580_56).abs() < 1e-15);
        let c = r.c_star.unwrap();
        assert!((c - 0.15 / s).abs() < 1e-12);
        assert!((c - 1.161_895).abs() < 1e-6);
        assert!((r.thresholds[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn global_se_large_alpha_enumerated() {
        // alpha = 0.6: coverage must exceed 0.4, i.e. 2 of 4 values; the
        // candidate C = 0 covers {0.1, 0.2} already.
        let n = column(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(global_se_multiplier(&n, 0.6), 0.0);
        // alpha = 0.3: coverage > 0.7 needs 3 values, reached at x = 0.3
        let s = (0.05f64 / 3.0).sqrt();
        assert!((global_se_multiplier(&n, 0.3) - 0.05 / s).abs() < 1e-12);
    }

    #[test]
    fn global_se_constant_columns() {
        let n = null(vec![vec![0.2, 0.5, 0.3], vec![0.2, 0.5, 0.3], vec![0.2, 0.5, 0.3]]);
        let r = threshold_global_se(&[0.25, 0.5, 0.1], &n, 0.05).unwrap();
        assert_eq!(r.c_star, Some(0.0));
        assert_eq!(r.thresholds, vec![0.2, 0.5, 0.3]);
        assert_eq!(r.selected, vec![0]);
    }

    #[test]
    fn constant_column_with_inexact_mean_has_zero_spread() {
        // 0.37 * 7 / 7 does not round-trip through the summed mean
        let n = column(&[0.37; 7]);
        assert_eq!(column_moments(&n), vec![(0.37, 0.0)]);
        let mixed = null((0..7).map(|i| vec![0.37, i as f64 / 10.0]).collect());
        let (_, t) = global_se_thresholds(&mixed, 0.05);
        assert_eq!(t[0], 0.37);
    }

    #[test]
    fn global_se_requires_two_permutations() {
        let n = column(&[0.3]);
        assert!(threshold_global_se(&[0.1], &n, 0.05).is_err());
    }

    #[test]
    fn shape_and_alpha_checks() {
        let n = column(&[0.1, 0.2]);
        assert!(threshold_local(&[0.1, 0.2], &n, 0.05).is_err());
        assert!(threshold_local(&[0.1], &n, 0.0).is_err());
        assert!(threshold_local(&[0.1], &n, 1.0).is_err());
        assert!(NullProportionMatrix::new(vec![]).is_err());
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 5, 9);
        assert_eq!(a, fold_assignment(23, 5, 9));
        assert_ne!(a, fold_assignment(23, 5, 10));
        for f in 0..5 {
            let size = a.iter().filter(|&&x| x == f).count();
            assert!(size == 4 || size == 5);
        }
    }

    fn selection_from(rows: &[Vec<f64>], p: &[f64], alpha: f64) -> [Vec<usize>; 3] {
        let n = null(rows.to_vec());
        [
            threshold_local(p, &n, alpha).unwrap().selected,
            threshold_global_max(p, &n, alpha).unwrap().selected,
            threshold_global_se(p, &n, alpha).unwrap().selected,
        ]
    }

    proptest::proptest! {
        #[test]
        fn stringent_rules_nest_in_local(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 2..30),
            p in proptest::collection::vec(0.0f64..1.0, 4),
            alpha in 0.01f64..0.99,
        ) {
            let [local, gmax, gse] = selection_from(&rows, &p, alpha);
            proptest::prop_assert!(gmax.iter().all(|k| local.contains(k)));
            proptest::prop_assert!(gse.iter().all(|k| local.contains(k)));
        }

        #[test]
        fn smaller_alpha_never_selects_more(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 2..30),
            p in proptest::collection::vec(0.0f64..1.0, 3),
            a in 0.01f64..0.98,
            da in 0.0f64..0.5,
        ) {
            let hi = (a + da).min(0.99);
            let strict = selection_from(&rows, &p, a);
            let loose = selection_from(&rows, &p, hi);
            for (s, l) in strict.iter().zip(&loose) {
                proptest::prop_assert!(s.iter().all(|k| l.contains(k)));
            }
        }

        #[test]
        fn permuting_variables_permutes_selections(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 2..20),
            p in proptest::collection::vec(0.0f64..1.0, 4),
            alpha in 0.01f64..0.99,
        ) {
            let perm = [2usize, 0, 3, 1];
            let prow: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
            let pp: Vec<f64> = perm.iter().map(|&j| p[j]).collect();
            let orig = selection_from(&rows, &p, alpha);
            let moved = selection_from(&prow, &pp, alpha);
            for (o, m) in orig.iter().zip(&moved) {
                let mut mapped: Vec<usize> = m.iter().map(|&i| perm[i]).collect();
                mapped.sort();
                proptest::prop_assert_eq!(o, &mapped);
            }
        }
    }
}
