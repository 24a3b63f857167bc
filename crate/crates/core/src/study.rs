//! Simulation-study building blocks: one replicate of a scenario under a
//! choice of strategies and prior, and the nested restart experiment on null
//! data.

use alloc::format;
use alloc::vec::Vec;
use rand::seq::index;

use crate::datagen::{gen_null, ScenarioSpec};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::inclusion::posterior_mean_proportions;
use crate::metrics::{confusion, precision_recall_f1, Accuracy, NestedProportions};
use crate::model::Hyperparams;
use crate::rng::{self, derive_rng, derive_seed};
use crate::sampler::run_chain;
use crate::selection::{
    gather_evidence, select_cv_best, select_cv_best_each, CvConfig, SelectionConfig, SplitPrior, Strategy,
};
use crate::split_prior::{doubled_weight_spec, uniform_weights};

/// Prior information given to the unpermuted runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorScheme {
    Uninformative,
    /// Doubled weight on the true predictors.
    Correct,
    /// Doubled weight on a random set of spurious predictors the size of the
    /// true set.
    Incorrect,
}

impl PriorScheme {
    pub fn name(self) -> &'static str {
        match self {
            PriorScheme::Uninformative => "uninformative",
            PriorScheme::Correct => "correct",
            PriorScheme::Incorrect => "incorrect",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uninformative" | "none" => Some(PriorScheme::Uninformative),
            "correct" => Some(PriorScheme::Correct),
            "incorrect" => Some(PriorScheme::Incorrect),
            _ => None,
        }
    }
}

/// Split weights for `scheme`. The spurious subset for
/// [`PriorScheme::Incorrect`] is drawn from `seed`.
pub fn scheme_weights(scheme: PriorScheme, true_set: &[usize], p: usize, seed: u64) -> Result<Vec<f64>> {
    match scheme {
        PriorScheme::Uninformative => Ok(uniform_weights(p)),
        PriorScheme::Correct => doubled_weight_spec(true_set, p),
        PriorScheme::Incorrect => {
            let spurious: Vec<usize> = (0..p).filter(|j| !true_set.contains(j)).collect();
            if spurious.len() < true_set.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} spurious predictors cannot stand in for {} true ones",
                    spurious.len(),
                    true_set.len()
                )));
            }
            let mut r = derive_rng(seed, &[rng::PRIOR_SUBSET]);
            let mut chosen: Vec<usize> = index::sample(&mut r, spurious.len(), true_set.len())
                .into_iter()
                .map(|i| spurious[i])
                .collect();
            chosen.sort_unstable();
            doubled_weight_spec(&chosen, p)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub selected: Vec<usize>,
    pub accuracy: Accuracy,
    /// Winning thresholding rule when `strategy` is [`Strategy::CvBest`].
    pub cv_winner: Option<Strategy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub true_set: Vec<usize>,
    pub outcomes: Vec<StrategyOutcome>,
}

/// Study-level settings shared by every replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub hp: Hyperparams,
    pub selection: SelectionConfig,
    pub strategies: Vec<Strategy>,
    pub scheme: PriorScheme,
    pub folds: usize,
}

/// Seed of replicate `r` under `master_seed`.
pub fn replicate_seed(master_seed: u64, r: usize) -> u64 {
    derive_seed(master_seed, &[rng::DATASET, r as u64])
}

/// Generates replicate `r` of `scenario` and runs every requested strategy.
/// The thresholding rules share one set of permutation evidence.
pub fn run_replicate<E: Executor>(
    scenario: &ScenarioSpec,
    study: &StudyConfig,
    master_seed: u64,
    r: usize,
    exec: &E,
) -> Result<ReplicateOutcome> {
    let seed = replicate_seed(master_seed, r);
    let spec = ScenarioSpec { seed, ..scenario.clone() };
    let (data, true_set) = spec.generate()?;
    let p = data.k();
    let weights = scheme_weights(study.scheme, &true_set, p, seed)?;
    let score = |selected: &[usize]| precision_recall_f1(&confusion(selected, &true_set, p));

    let mut outcomes = Vec::with_capacity(study.strategies.len());
    let needs_evidence = study.strategies.iter().any(|s| *s != Strategy::CvBest);
    let evidence = if needs_evidence {
        Some(gather_evidence(&data, &study.hp, &weights, &study.selection, seed, exec)?)
    } else {
        None
    };
    for &strategy in &study.strategies {
        let outcome = match (strategy, &evidence) {
            (Strategy::CvBest, _) => {
                let cv = CvConfig { strategies: Strategy::THRESHOLDS.to_vec(), folds: study.folds };
                let prior = SplitPrior::Fixed(weights.clone());
                let out = select_cv_best(&data, &study.hp, &prior, &cv, &study.selection, seed, exec)?;
                let winner = out.best.metadata.as_ref().and_then(|m| m.cv.as_ref()).map(|c| c.strategy);
                StrategyOutcome {
                    strategy,
                    accuracy: score(&out.best.selected),
                    selected: out.best.selected,
                    cv_winner: winner,
                }
            }
            (_, Some(ev)) => {
                let sel = ev.threshold(strategy, study.selection.alpha)?.selected;
                StrategyOutcome { strategy, accuracy: score(&sel), selected: sel, cv_winner: None }
            }
            (_, None) => unreachable!("evidence is gathered for thresholding rules"),
        };
        outcomes.push(outcome);
    }
    Ok(ReplicateOutcome { replicate: r, seed, true_set, outcomes })
}

/// Runs `replicates` replicates in order; `exec` parallelises inside each.
pub fn run_study<E: Executor>(
    scenario: &ScenarioSpec,
    study: &StudyConfig,
    replicates: usize,
    master_seed: u64,
    exec: &E,
) -> Result<Vec<ReplicateOutcome>> {
    (0..replicates).map(|r| run_replicate(scenario, study, master_seed, r, exec)).collect()
}

/// Replicate `r` of `scenario` under each prior scheme, every one selected
/// by cross-validation. Schemes share the permutation nulls and refits.
pub fn run_prior_comparison<E: Executor>(
    scenario: &ScenarioSpec,
    study: &StudyConfig,
    schemes: &[PriorScheme],
    master_seed: u64,
    r: usize,
    exec: &E,
) -> Result<Vec<(PriorScheme, StrategyOutcome)>> {
    let seed = replicate_seed(master_seed, r);
    let spec = ScenarioSpec { seed, ..scenario.clone() };
    let (data, true_set) = spec.generate()?;
    let p = data.k();
    let priors = schemes
        .iter()
        .map(|&s| scheme_weights(s, &true_set, p, seed).map(SplitPrior::Fixed))
        .collect::<Result<Vec<_>>>()?;
    let cv = CvConfig { strategies: Strategy::THRESHOLDS.to_vec(), folds: study.folds };
    let outs = select_cv_best_each(&data, &study.hp, &priors, &cv, &study.selection, seed, exec)?;
    Ok(schemes
        .iter()
        .zip(outs)
        .map(|(&scheme, out)| {
            let winner = out.best.metadata.as_ref().and_then(|m| m.cv.as_ref()).map(|c| c.strategy);
            let accuracy = precision_recall_f1(&confusion(&out.best.selected, &true_set, p));
            let outcome = StrategyOutcome {
                strategy: Strategy::CvBest,
                selected: out.best.selected,
                accuracy,
                cv_winner: winner,
            };
            (scheme, outcome)
        })
        .collect())
}

/// `datasets` null datasets (`n` x `k`), each fit `restarts` times with
/// independent chains: `p[i][j]` is the posterior-mean inclusion vector of
/// run `j` on dataset `i`.
pub fn nested_null_experiment<E: Executor>(
    n: usize,
    k: usize,
    datasets: usize,
    restarts: usize,
    hp: &Hyperparams,
    master_seed: u64,
    exec: &E,
) -> Result<NestedProportions> {
    if datasets == 0 || restarts == 0 {
        return Err(Error::InvalidArgument("need at least one dataset and one restart".into()));
    }
    let weights = uniform_weights(k);
    let cells = exec.map(datasets * restarts, |t| {
        let (i, j) = (t / restarts, t % restarts);
        let data = gen_null(n, k, replicate_seed(master_seed, i))?;
        let seed = derive_seed(master_seed, &[rng::DATASET, i as u64, rng::RESTART, j as u64]);
        let samples = run_chain(&data, hp, &weights, seed)?;
        posterior_mean_proportions(&samples)
    });
    let mut values: Vec<Vec<Vec<f64>>> = Vec::with_capacity(datasets);
    let mut cells = cells.into_iter();
    for _ in 0..datasets {
        values.push(cells.by_ref().take(restarts).collect::<Result<Vec<_>>>()?);
    }
    Ok(NestedProportions { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn scheme_weights_double_the_right_columns() {
        let t = [0, 1];
        assert_eq!(scheme_weights(PriorScheme::Uninformative, &t, 4, 1).unwrap(), vec![1.0; 4]);
        assert_eq!(scheme_weights(PriorScheme::Correct, &t, 4, 1).unwrap(), vec![2.0, 2.0, 1.0, 1.0]);
        for seed in 0..20 {
            let w = scheme_weights(PriorScheme::Incorrect, &t, 10, seed).unwrap();
            assert_eq!(&w[..2], &[1.0, 1.0]);
            assert_eq!(w.iter().filter(|v| **v == 2.0).count(), 2);
            assert_eq!(w, scheme_weights(PriorScheme::Incorrect, &t, 10, seed).unwrap());
        }
        assert!(scheme_weights(PriorScheme::Incorrect, &[0, 1, 2], 5, 0).is_err());
    }

    #[test]
    fn replicate_seeds_differ() {
        assert_ne!(replicate_seed(1, 0), replicate_seed(1, 1));
        assert_ne!(replicate_seed(1, 0), replicate_seed(2, 0));
    }
}
