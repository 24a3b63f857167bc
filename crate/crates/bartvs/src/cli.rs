//! Argument parsing and the `select`, `simulate`, `diagnose` and `generate`
//! commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bartvs_core::datagen::{ScenarioKind, ScenarioSpec, DEFAULT_N};
use bartvs_core::metrics::{mean_and_se, nested_variance_decomposition};
use bartvs_core::selection::{gather_evidence, select_cv_best, CvConfig, SplitPrior};
use bartvs_core::split_prior::DEFAULT_C_GRID;
use bartvs_core::study::{nested_null_experiment, run_replicate, PriorScheme, StudyConfig};
use bartvs_core::{Executor, Hyperparams, SelectionConfig, Strategy};

use crate::error::{CliError, CliResult};
use crate::exec::RayonExecutor;
use crate::io;
use crate::report::*;

#[derive(Debug, Parser)]
#[command(name = "bartvs", version, about = "Variable selection with Bayesian additive regression trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select predictors of a response in a CSV dataset.
    Select(SelectArgs),
    /// Run a simulation grid and tabulate precision, recall and F1.
    Simulate(SimulateArgs),
    /// Restart-variability experiment on null data.
    Diagnose(DiagnoseArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 20)]
    pub trees: usize,
    /// Burn-in iterations per chain.
    #[arg(long, default_value_t = 250)]
    pub burn: usize,
    /// Retained iterations per chain.
    #[arg(long, default_value_t = 1000)]
    pub post: usize,
    /// Chains averaged for the unpermuted response.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

impl ModelArgs {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            m: self.trees,
            n_burn: self.burn,
            n_post: self.post,
            n_restarts: self.restarts,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PermutationArgs {
    /// Permuted-response runs.
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    /// Chains averaged per permuted-response run.
    #[arg(long, default_value_t = 1)]
    pub permutation_restarts: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

impl PermutationArgs {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            alpha: self.alpha,
            permutations: self.permutations,
            permutation_restarts: self.permutation_restarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Local,
    GlobalMax,
    GlobalSe,
    Cv,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Local => Strategy::Local,
            StrategyArg::GlobalMax => Strategy::GlobalMax,
            StrategyArg::GlobalSe => Strategy::GlobalSe,
            StrategyArg::Cv => Strategy::CvBest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Null,
    Linear,
    Friedman,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Null => ScenarioKind::Null,
            ScenarioArg::Linear => ScenarioKind::Linear,
            ScenarioArg::Friedman => ScenarioKind::Friedman,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Uninformative,
    Correct,
    Incorrect,
}

impl From<PriorArg> for PriorScheme {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Uninformative => PriorScheme::Uninformative,
            PriorArg::Correct => PriorScheme::Correct,
            PriorArg::Incorrect => PriorScheme::Incorrect,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub response_col: String,
    #[arg(long, value_enum, default_value_t = StrategyArg::Cv)]
    pub strategy: StrategyArg,
    /// `name,probability` lines giving prior inclusion probabilities.
    #[arg(long)]
    pub prior_file: Option<PathBuf>,
    /// Prior influence values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Clamp prior probabilities into [0.05, 0.95].
    #[arg(long)]
    pub clamp_prior: bool,
    /// JSON report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-variable CSV.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub perm: PermutationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    /// Predictor counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<usize>,
    /// Active predictor counts (linear scenario), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p0: Vec<usize>,
    /// Noise variances, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma_sq: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "local,global-max,global-se")]
    pub strategies: Vec<StrategyArg>,
    #[arg(long, value_enum, default_value_t = PriorArg::Uninformative)]
    pub prior: PriorArg,
    /// CSV table path; the resolved configuration goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub perm: PermutationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub p: usize,
    /// Null datasets; each is fit `--restarts` times.
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub p0: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "y")]
    pub response_col: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Select(a) => cmd_select(&a).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(&a).map(|_| ()),
        Command::Diagnose(a) => cmd_diagnose(&a).map(|_| ()),
        Command::Generate(a) => cmd_generate(&a),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_select(a: &SelectArgs) -> CliResult<SelectReport> {
    let started = Instant::now();
    let exec = RayonExecutor::new(a.model.workers)?;
    let hp = a.model.hyperparams();
    hp.validate()?;
    let config = a.perm.selection();
    config.validate()?;
    let strategy = Strategy::from(a.strategy);
    if a.prior_file.is_none() && (a.c_grid.is_some() || a.clamp_prior) {
        return Err(CliError::Validation("--c-grid and --clamp-prior need --prior-file".into()));
    }
    let data = io::read_dataset(&a.data, &a.response_col)?;
    let names = data.names().to_vec();

    let probabilities = match &a.prior_file {
        Some(path) => Some(io::read_prior_file(path, &names, a.clamp_prior)?),
        None => None,
    };
    let prior = match &probabilities {
        None => SplitPrior::Uniform,
        Some(m) => {
            let c_grid = a.c_grid.clone().unwrap_or_else(|| DEFAULT_C_GRID.to_vec());
            if strategy != Strategy::CvBest && c_grid.len() != 1 {
                return Err(CliError::Validation(
                    "a prior file with a fixed strategy needs exactly one --c-grid value".into(),
                ));
            }
            SplitPrior::Informed { probabilities: m.clone(), c_grid }
        }
    };

    let (best, per_strategy, proportions, cv, permutations_used) = if strategy == Strategy::CvBest {
        let cv_config = CvConfig { folds: a.perm.folds, ..Default::default() };
        let out = select_cv_best(&data, &hp, &prior, &cv_config, &config, a.model.seed, &exec)?;
        let cv = out.best.metadata.as_ref().and_then(|m| m.cv.as_ref()).map(CvReport::from);
        let used = out.evidence.null.permutations();
        (out.best, out.per_strategy, out.evidence.proportions, cv, used)
    } else {
        let (c, weights) = prior.candidates(data.k())?.remove(0);
        let evidence = gather_evidence(&data, &hp, &weights, &config, a.model.seed, &exec)?;
        let per_strategy = Strategy::THRESHOLDS
            .iter()
            .map(|&s| evidence.threshold(s, config.alpha))
            .collect::<Result<Vec<_>, _>>()?;
        let mut best = per_strategy.iter().find(|r| r.strategy == strategy).expect("thresholding rule").clone();
        best.metadata = Some(bartvs_core::selection::SelectionMetadata {
            permutations: evidence.null.permutations(),
            permutation_restarts: config.permutation_restarts,
            master_seed: a.model.seed,
            c,
            cv: None,
        });
        (best, per_strategy, evidence.proportions.clone(), None, evidence.null.permutations())
    };

    let meta = best.metadata.as_ref();
    let c = meta.and_then(|m| m.c);
    let rule = cv.as_ref().map_or(strategy.name().to_owned(), |cv| cv.winner.clone());
    let report = SelectReport {
        command: "select",
        config: SelectConfigReport {
            data: display(&a.data),
            response_col: a.response_col.clone(),
            hyperparams: HyperparamReport::from(&hp),
            strategy: strategy.name().to_owned(),
            alpha: config.alpha,
            permutations: config.permutations,
            permutation_restarts: config.permutation_restarts,
            prior_file: a.prior_file.as_deref().map(display),
            c_grid: match &prior {
                SplitPrior::Informed { c_grid, .. } => Some(c_grid.clone()),
                _ => None,
            },
            clamp_prior: a.clamp_prior,
            folds: a.perm.folds,
            seed: a.model.seed,
        },
        result: SelectionSummary {
            strategy: strategy.name().to_owned(),
            rule,
            c,
            selected: best.selected.iter().map(|&j| names[j].clone()).collect(),
        },
        variables: (0..names.len())
            .map(|j| VariableRow {
                name: names[j].clone(),
                proportion: proportions[j],
                prior_probability: probabilities.as_ref().map(|m| m[j]),
                selected: best.selected.contains(&j),
            })
            .collect(),
        strategies: per_strategy.iter().map(|r| StrategyReport::new(r, &names)).collect(),
        cv,
        permutations_used,
        seeds: SeedReport { master: a.model.seed, derivation: SEED_DERIVATION },
        runtime: Runtime { seconds: started.elapsed().as_secs_f64(), workers: exec.workers() },
    };
    if let Some(path) = &a.csv_out {
        write_variable_csv(path, &report)?;
    }
    io::write_json(&a.out, &report)?;
    Ok(report)
}

fn write_variable_csv(path: &Path, report: &SelectReport) -> CliResult<()> {
    io::atomic_write(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["variable".to_owned(), "proportion".to_owned(), "selected".to_owned()];
        for s in &report.strategies {
            let tag = s.strategy.replace('-', "_");
            header.push(format!("threshold_{tag}"));
            header.push(format!("selected_{tag}"));
        }
        out.write_record(&header)?;
        for (j, v) in report.variables.iter().enumerate() {
            let mut row = vec![v.name.clone(), v.proportion.to_string(), v.selected.to_string()];
            for s in &report.strategies {
                row.push(s.thresholds[j].to_string());
                row.push(s.selected.contains(&v.name).to_string());
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<SimulateReport> {
    let started = Instant::now();
    let exec = RayonExecutor::new(a.model.workers)?;
    let hp = a.model.hyperparams();
    hp.validate()?;
    let selection = a.perm.selection();
    selection.validate()?;
    let kind = ScenarioKind::from(a.scenario);
    if a.replicates == 0 || a.strategies.is_empty() {
        return Err(CliError::Validation("need at least one replicate and one strategy".into()));
    }
    let p0s: Vec<usize> = match kind {
        ScenarioKind::Null => vec![0],
        ScenarioKind::Friedman => vec![5],
        ScenarioKind::Linear if a.p0.is_empty() => {
            return Err(CliError::Validation("the linear scenario needs --p0".into()))
        }
        ScenarioKind::Linear => a.p0.clone(),
    };
    if kind != ScenarioKind::Linear && !a.p0.is_empty() && a.p0 != p0s {
        return Err(CliError::Validation(format!("--p0 is fixed at {} for this scenario", p0s[0])));
    }
    let strategies: Vec<Strategy> = a.strategies.iter().map(|&s| s.into()).collect();
    let study = StudyConfig {
        hp: hp.clone(),
        selection: selection.clone(),
        strategies: strategies.clone(),
        scheme: a.prior.into(),
        folds: a.perm.folds,
    };
    let mut cells = Vec::new();
    for &p in &a.p {
        for &p0 in &p0s {
            for &sigma_sq in &a.sigma_sq {
                let spec = ScenarioSpec { kind, n: a.n, p, p0, sigma_sq, seed: 0 };
                spec.validate()?;
                cells.push(spec);
            }
        }
    }

    let mut data_rows = Vec::new();
    let mut summary_rows = Vec::new();
    for (ci, spec) in cells.iter().enumerate() {
        let cell_seed = bartvs_core::rng::derive_seed(a.model.seed, &[ci as u64]);
        let reps = exec.map(a.replicates, |r| run_replicate(spec, &study, cell_seed, r, &bartvs_core::Sequential));
        let reps = reps.into_iter().collect::<Result<Vec<_>, _>>()?;
        let base = |strategy: Strategy| SimulationRow {
            row_type: "data",
            scenario: kind.name().to_owned(),
            n: spec.n,
            p: spec.p,
            p0: spec.p0,
            sigma_sq: spec.sigma_sq,
            prior: study.scheme.name().to_owned(),
            strategy: strategy.name().to_owned(),
            replicate: None,
            seed: None,
            cv_winner: None,
            n_selected: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            precision_se: None,
            recall_se: None,
            f1_se: None,
        };
        for (si, &strategy) in strategies.iter().enumerate() {
            let mut cols: [Vec<f64>; 4] = Default::default();
            for rep in &reps {
                let o = &rep.outcomes[si];
                let row = SimulationRow {
                    replicate: Some(rep.replicate),
                    seed: Some(rep.seed),
                    cv_winner: o.cv_winner.map(|s| s.name().to_owned()),
                    n_selected: o.selected.len() as f64,
                    precision: o.accuracy.precision,
                    recall: o.accuracy.recall,
                    f1: o.accuracy.f1,
                    ..base(strategy)
                };
                for (c, v) in cols.iter_mut().zip([row.n_selected, row.precision, row.recall, row.f1]) {
                    c.push(v);
                }
                data_rows.push(row);
            }
            let [ns, pr, re, f1] = cols.map(|c| mean_and_se(&c));
            summary_rows.push(SimulationRow {
                row_type: "summary",
                n_selected: ns.0,
                precision: pr.0,
                recall: re.0,
                f1: f1.0,
                precision_se: Some(pr.1),
                recall_se: Some(re.1),
                f1_se: Some(f1.1),
                ..base(strategy)
            });
        }
    }

    io::atomic_write(&a.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        for row in data_rows.iter().chain(&summary_rows) {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    })?;
    let report = SimulateReport {
        command: "simulate",
        config: SimulateConfigReport {
            scenario: kind.name().to_owned(),
            n: a.n,
            p: a.p.clone(),
            p0: p0s,
            sigma_sq: a.sigma_sq.clone(),
            replicates: a.replicates,
            strategies: strategies.iter().map(|s| s.name().to_owned()).collect(),
            prior: study.scheme.name().to_owned(),
            hyperparams: HyperparamReport::from(&hp),
            alpha: selection.alpha,
            permutations: selection.permutations,
            permutation_restarts: selection.permutation_restarts,
            folds: a.perm.folds,
            seed: a.model.seed,
        },
        table: display(&a.out),
        data_rows: data_rows.len(),
        summary_rows: summary_rows.len(),
        seeds: SeedReport { master: a.model.seed, derivation: SEED_DERIVATION },
        runtime: Runtime { seconds: started.elapsed().as_secs_f64(), workers: exec.workers() },
    };
    io::write_json(&sidecar_path(&a.out), &report)?;
    Ok(report)
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> CliResult<DiagnoseReport> {
    let started = Instant::now();
    let exec = RayonExecutor::new(a.model.workers)?;
    let hp = a.model.hyperparams();
    hp.validate()?;
    let nested = nested_null_experiment(a.n, a.p, a.datasets, hp.n_restarts, &hp, a.model.seed, &exec)?;
    let d = nested_variance_decomposition(&nested)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let within: Vec<f64> = d.within_dataset.iter().flatten().copied().collect();
    let mean_within = mean(&within);
    let mean_across = mean(&d.across_datasets);
    let report = DiagnoseReport {
        command: "diagnose",
        config: DiagnoseConfigReport {
            n: a.n,
            p: a.p,
            datasets: a.datasets,
            hyperparams: HyperparamReport::from(&hp),
            seed: a.model.seed,
        },
        proportions: nested.values,
        grand_mean: d.grand_mean,
        expected_mean: 1.0 / a.p as f64,
        within_dataset_sd: d.within_dataset,
        across_datasets_sd: d.across_datasets,
        across_variables_sd: d.across_variables,
        mean_within_dataset_sd: mean_within,
        mean_across_datasets_sd: mean_across,
        datasets_dominate: mean_across > mean_within,
        seeds: SeedReport { master: a.model.seed, derivation: SEED_DERIVATION },
        runtime: Runtime { seconds: started.elapsed().as_secs_f64(), workers: exec.workers() },
    };
    io::write_json(&a.out, &report)?;
    Ok(report)
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let kind = ScenarioKind::from(a.scenario);
    let p0 = if kind == ScenarioKind::Friedman { 5 } else { a.p0 };
    let spec = ScenarioSpec { kind, n: a.n, p: a.p, p0, sigma_sq: a.sigma_sq, seed: a.seed };
    let (data, _) = spec.generate()?;
    if data.names().iter().any(|n| n == &a.response_col) {
        return Err(CliError::Validation(format!("response name {:?} clashes with a predictor", a.response_col)));
    }
    io::write_dataset(&a.out, &data, &a.response_col)
}
