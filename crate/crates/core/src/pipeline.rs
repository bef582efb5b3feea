//! End-to-end benchmark: split, fit the weak learners, pick `epsilon` with
//! one of the tuners, then score every learner and COBRA on the test rows.
//!
//! All randomness comes from `RunConfig::seed` through
//! [`crate::rng::derive_seed`], one sub-seed per stage.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cobra::{alpha_grid, predict_batch, AggregationSet, CobraParams};
use crate::data::{self, split_indices, Dataset, SplitSpec, StandardizationParams};
use crate::learners::{fit_all, predict_all, FittedLearner, LearnerKind, LearnerSpec};
use crate::metrics::{timed, EvalReport};
use crate::rng::{derive_seed, stage};
use crate::search::{build_folds, grid_search, make_folds, randomized_search, CvSplit, SearchResult, SearchSpace};
use crate::smooth::{GradientDescentConfig, SmoothObjective, SmoothingParams, TuneTrace, TuningSet, Variant};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuner {
    Controlled,
    Grid,
    Randomized,
}

impl Tuner {
    pub fn name(self) -> &'static str {
        match self {
            Tuner::Controlled => "controlled",
            Tuner::Grid => "grid",
            Tuner::Randomized => "random",
        }
    }
}

/// Where the controlled tuner measures its smoothed loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "fraction", rename_all = "snake_case")]
pub enum TuningSource {
    /// The aggregation rows themselves, each predicted from all the others.
    LeaveOneOut,
    /// Sum of the loss over the cross-validation folds: each fold refits
    /// the learners on its own `D_k`, aggregates over its own `D_l` and is
    /// scored on its held-out rows.
    CrossValidated,
    /// A disjoint slice of the training rows, taken before the `D_k`/`D_l`
    /// split.
    Holdout(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub target: String,
    pub subsample: Option<usize>,
    pub seed: u64,
    pub train_fraction: f64,
    pub machine_fraction: f64,
    pub standardize: bool,
    pub learner: LearnerSpec,
    pub tuner: Tuner,
    /// Steepness on the standardized response scale; the kernel works on
    /// differences divided by the training-target standard deviation.
    pub smoothing: SmoothingParams,
    pub gradient: GradientDescentConfig,
    pub tuning_source: TuningSource,
    pub folds: usize,
    pub grid_size: usize,
    pub random_draws: usize,
    pub alpha_search: bool,
    pub threads: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(data: impl Into<PathBuf>, target: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            data: data.into(),
            target: target.into(),
            subsample: None,
            seed: 0,
            train_fraction: 0.8,
            machine_fraction: 0.5,
            standardize: true,
            learner: LearnerSpec::default(),
            tuner: Tuner::Controlled,
            smoothing: SmoothingParams {
                beta: 50.0,
                variant: Variant::SumExp,
            },
            gradient: GradientDescentConfig::default(),
            tuning_source: TuningSource::LeaveOneOut,
            folds: 5,
            grid_size: 60,
            random_draws: 30,
            alpha_search: false,
            threads: 1,
            out_dir: out_dir.into(),
        }
    }

    pub fn learner_specs(&self) -> Vec<LearnerSpec> {
        self.learner.standard_trio()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub name: String,
    pub learner: String,
    pub mse: f64,
    pub r2: f64,
}

/// Saved predictor: feature scaling, fitted learners and the aggregation
/// memory with the chosen parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CobraModel {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub standardization: Option<StandardizationParams>,
    pub learners: Vec<FittedLearner>,
    pub aggregation: AggregationSet,
    pub params: CobraParams,
}

impl CobraModel {
    pub fn predict(&self, ds: &Dataset) -> Result<(Vec<f64>, usize)> {
        let features = match &self.standardization {
            Some(s) => s.transform(&ds.features)?,
            None => ds.features.clone(),
        };
        let preds = predict_all(&self.learners, features.view())?;
        let out = predict_batch(&self.aggregation, &preds, &self.params)?;
        let empty = out.empty_count();
        Ok((out.predictions, empty))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub rows: usize,
    pub train: usize,
    pub test: usize,
    pub machine: usize,
    pub aggregation: usize,
    pub tuning: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub run: u64,
    pub subsample: u64,
    pub train_test: u64,
    pub cobra_split: u64,
    pub folds: u64,
    pub random_search: u64,
    pub tuning_split: u64,
}

impl StageSeeds {
    pub fn derive(seed: u64) -> Self {
        StageSeeds {
            run: seed,
            subsample: derive_seed(seed, stage::SUBSAMPLE),
            train_test: derive_seed(seed, stage::TRAIN_TEST),
            cobra_split: derive_seed(seed, stage::COBRA_SPLIT),
            folds: derive_seed(seed, stage::FOLDS),
            random_search: derive_seed(seed, stage::RANDOM_SEARCH),
            tuning_split: derive_seed(seed, stage::TUNING_SPLIT),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub tuner: Tuner,
    pub estimators: Vec<EstimatorRow>,
    pub cobra: EstimatorRow,
    pub params: CobraParams,
    /// Seconds spent selecting `epsilon` (and `alpha`).
    pub tuning_seconds: f64,
    pub total_seconds: f64,
    pub trace: Option<TuneTrace>,
    pub search: Option<SearchResult>,
    /// Training-target standard deviation the smoothing kernel was scaled by.
    pub response_scale: f64,
    pub empty_neighbourhoods: usize,
    pub scatter: Vec<(f64, f64)>,
    pub sizes: SplitSizes,
    pub seeds: StageSeeds,
    pub model: CobraModel,
}

impl RunReport {
    pub fn best_learner_mse(&self) -> f64 {
        self.estimators.iter().map(|e| e.mse).fold(f64::INFINITY, f64::min)
    }

    pub fn best_learner_r2(&self) -> f64 {
        self.estimators.iter().map(|e| e.r2).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Rows of the report in table order: estimators, then COBRA.
pub fn table_rows(report: &RunReport) -> Vec<EstimatorRow> {
    let mut rows = report.estimators.clone();
    rows.push(report.cobra.clone());
    rows
}

fn learner_name(kind: LearnerKind) -> &'static str {
    match kind {
        LearnerKind::Ridge => "ridge",
        LearnerKind::Lasso => "lasso",
        LearnerKind::Tree => "tree",
    }
}

fn population_std(v: &Array1<f64>) -> f64 {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

struct Prepared {
    train: Dataset,
    test: Dataset,
    /// Rows of `train` the controlled tuner may use for a holdout.
    tuning_rows: Vec<usize>,
    machine_rows: Vec<usize>,
    aggregation_rows: Vec<usize>,
    standardization: Option<StandardizationParams>,
    n_rows: usize,
}

fn prepare(config: &RunConfig, seeds: &StageSeeds) -> Result<Prepared> {
    let mut ds = data::load_csv(&config.data, &config.target)?;
    let n_rows = ds.n_rows();
    if let Some(n) = config.subsample {
        ds = data::subsample(&ds, n, seeds.subsample)?;
    }
    let (mut train, mut test) = data::train_test_split(
        &ds,
        SplitSpec {
            train_fraction: config.train_fraction,
            seed: seeds.train_test,
        },
    )?;
    let standardization = if config.standardize {
        let params = data::standardize_fit(&train);
        train = data::standardize_apply(&train, &params)?;
        test = data::standardize_apply(&test, &params)?;
        Some(params)
    } else {
        None
    };

    let (tuning_rows, cobra_rows) = match config.tuning_source {
        TuningSource::LeaveOneOut | TuningSource::CrossValidated => (vec![], (0..train.n_rows()).collect::<Vec<_>>()),
        TuningSource::Holdout(f) => split_indices(train.n_rows(), f, seeds.tuning_split)?,
    };
    let (dk, dl) = split_indices(cobra_rows.len(), config.machine_fraction, seeds.cobra_split)?;
    Ok(Prepared {
        machine_rows: dk.into_iter().map(|i| cobra_rows[i]).collect(),
        aggregation_rows: dl.into_iter().map(|i| cobra_rows[i]).collect(),
        tuning_rows,
        train,
        test,
        standardization,
        n_rows,
    })
}

enum TuneOutcome {
    Controlled(TuneTrace),
    Search(SearchResult),
}

/// Runs one benchmark in memory; nothing is written.
pub fn run_in_memory(config: &RunConfig) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    config.smoothing.validate()?;
    config.gradient.validate()?;
    let seeds = StageSeeds::derive(config.seed);
    let prep = prepare(config, &seeds)?;
    let specs = config.learner_specs();

    let dk = prep.train.select(&prep.machine_rows);
    let dl = prep.train.select(&prep.aggregation_rows);
    let models = fit_all(&specs, &dk)?;
    let aggregation = AggregationSet::from_predictions(predict_all(&models, dl.features.view())?, dl.targets.clone())?;
    let scale = population_std(&prep.train.targets);
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let folds = make_folds(prep.train.n_rows(), config.folds, seeds.folds)?;
    let cv_split = CvSplit {
        machine_fraction: config.machine_fraction,
        seed: seeds.cobra_split,
    };
    let alphas = config.alpha_search.then(|| alpha_grid(specs.len()));
    let spread = aggregation.max_spread();

    let (outcome, tuning_seconds) = timed(|| -> Result<TuneOutcome> {
        Ok(match config.tuner {
            Tuner::Controlled => {
                let parts = match config.tuning_source {
                    TuningSource::LeaveOneOut => vec![scaled_pair(
                        &aggregation.machine_preds,
                        &aggregation.responses,
                        &aggregation,
                        scale,
                    )?],
                    TuningSource::CrossValidated => build_folds(&prep.train, &specs, &folds, cv_split)?
                        .into_iter()
                        .map(|f| scaled_pair(&f.held_out_preds.0, &f.held_out_targets, &f.aggregation, scale))
                        .collect::<Result<Vec<_>>>()?,
                    TuningSource::Holdout(_) => {
                        let held = prep.train.select(&prep.tuning_rows);
                        let preds = predict_all(&models, held.features.view())?;
                        vec![scaled_pair(&preds.0, &held.targets, &aggregation, scale)?]
                    }
                };
                let objective = if config.tuning_source == TuningSource::LeaveOneOut {
                    SmoothObjective::leave_one_out(&parts[0].1, &parts[0].0, config.smoothing)?
                } else {
                    SmoothObjective::new(parts.iter().map(|(t, a)| (t, a)).collect(), config.smoothing)?
                };
                let gd = GradientDescentConfig {
                    epsilon_init: config.gradient.epsilon_init.map(|e| e / scale),
                    ..config.gradient
                };
                let mut trace = objective.tune(&gd)?;
                rescale_trace(&mut trace, scale);
                TuneOutcome::Controlled(trace)
            }
            Tuner::Grid => {
                let space = SearchSpace::linear_grid(spread, config.grid_size, alphas.clone());
                TuneOutcome::Search(grid_search(&prep.train, &specs, &space, &folds, cv_split)?)
            }
            Tuner::Randomized => {
                let space = SearchSpace::Random {
                    lo: 0.0,
                    hi: spread,
                    draws: config.random_draws,
                    seed: seeds.random_search,
                    alphas: alphas.clone(),
                };
                TuneOutcome::Search(randomized_search(&prep.train, &specs, &space, &folds, cv_split)?)
            }
        })
    })?;

    let (params, trace, search) = match outcome {
        TuneOutcome::Controlled(trace) => (CobraParams::unanimous(trace.epsilon_star), Some(trace), None),
        TuneOutcome::Search(result) => (result.params(), None, Some(result)),
    };

    let y_test = prep.test.targets.to_vec();
    let test_preds = predict_all(&models, prep.test.features.view())?;
    let mut estimators = Vec::new();
    for (m, model) in models.iter().enumerate() {
        let eval = EvalReport::evaluate(&y_test, &test_preds.0.column(m).to_vec())?;
        estimators.push(EstimatorRow {
            name: format!("Estimator #{m}"),
            learner: learner_name(model.kind()).to_string(),
            mse: eval.mse,
            r2: eval.r2,
        });
    }
    let batch = predict_batch(&aggregation, &test_preds, &params)?;
    let eval = EvalReport::evaluate(&y_test, &batch.predictions)?;
    let cobra = EstimatorRow {
        name: "COBRA".into(),
        learner: "cobra".into(),
        mse: eval.mse,
        r2: eval.r2,
    };

    Ok(RunReport {
        tuner: config.tuner,
        estimators,
        cobra,
        params,
        tuning_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        trace,
        search,
        response_scale: scale,
        empty_neighbourhoods: batch.empty_count(),
        scatter: y_test.iter().copied().zip(batch.predictions.iter().copied()).collect(),
        sizes: SplitSizes {
            rows: prep.n_rows,
            train: prep.train.n_rows(),
            test: prep.test.n_rows(),
            machine: prep.machine_rows.len(),
            aggregation: prep.aggregation_rows.len(),
            tuning: prep.tuning_rows.len(),
        },
        seeds,
        model: CobraModel {
            feature_names: prep.train.feature_names.clone(),
            target_name: prep.train.target_name.clone(),
            standardization: prep.standardization,
            learners: models,
            aggregation,
            params,
        },
    })
}

fn scaled_pair(
    preds: &ndarray::Array2<f64>,
    targets: &Array1<f64>,
    agg: &AggregationSet,
    scale: f64,
) -> Result<(TuningSet, AggregationSet)> {
    Ok((
        TuningSet::new(preds / scale, targets / scale)?,
        AggregationSet::new(&agg.machine_preds / scale, &agg.responses / scale)?,
    ))
}

/// Back to raw target units: `epsilon` scales by `s`, the loss by `s^2`
/// and its derivative by `s`.
fn rescale_trace(trace: &mut TuneTrace, scale: f64) {
    for r in &mut trace.records {
        r.epsilon *= scale;
        r.loss *= scale * scale;
        r.gradient *= scale;
    }
    trace.epsilon_star *= scale;
}

/// Human-readable table, nine decimals.
pub fn format_table(report: &RunReport) -> String {
    let mut s = String::new();
    for row in table_rows(report) {
        let label = format!("{}:", row.name);
        s.push_str(&format!("{label:<14} MSE = {:.9}   R2 = {:.9}\n", row.mse, row.r2));
    }
    s
}

pub fn write_metrics_csv(report: &RunReport, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "estimator,learner,mse,r2")?;
    for row in table_rows(report) {
        writeln!(out, "{},{},{},{}", row.name, row.learner, row.mse, row.r2)?;
    }
    Ok(())
}

/// Parses a `metrics.csv` back into rows.
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<EstimatorRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        let num = |i: usize| -> Result<f64> {
            r[i].parse::<f64>()
                .map_err(|_| Error::InvalidDataset(format!("bad number `{}` in {}", &r[i], path.display())))
        };
        rows.push(EstimatorRow {
            name: r[0].to_string(),
            learner: r[1].to_string(),
            mse: num(2)?,
            r2: num(3)?,
        });
    }
    Ok(rows)
}

pub fn write_scatter_csv(scatter: &[(f64, f64)], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "y_true,y_pred")?;
    for (t, p) in scatter {
        writeln!(out, "{t},{p}")?;
    }
    Ok(())
}

/// Scatter pairs from a completed run directory.
pub fn read_scatter(dir: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = dir.as_ref().join("scatter.csv");
    let mut reader = csv::Reader::from_path(&path)?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["y_true", "y_pred"] {
        return Err(Error::InvalidDataset(format!(
            "{} has an unexpected header",
            path.display()
        )));
    }
    reader
        .records()
        .map(|r| {
            let r = r?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidDataset(format!("bad number `{s}`")))
            };
            Ok((parse(&r[0])?, parse(&r[1])?))
        })
        .collect()
}

/// `summary.json` contents. Wall-clock values live under `"timing"` only.
pub fn summary_json(config: &RunConfig, report: &RunReport) -> serde_json::Value {
    let alpha = match report.params.agreement {
        crate::cobra::Agreement::Unanimous => None,
        crate::cobra::Agreement::Fraction(a) => Some(a),
    };
    // the output location is not part of the experiment
    let mut config_json = serde_json::to_value(config).expect("config serializes");
    if let Some(obj) = config_json.as_object_mut() {
        obj.remove("out_dir");
    }
    json!({
        "tuner": report.tuner.name(),
        "config": config_json,
        "seeds": report.seeds,
        "sizes": report.sizes,
        "epsilon_star": report.params.epsilon,
        "alpha_star": alpha,
        "response_scale": report.response_scale,
        "effective_beta": config.smoothing.beta / report.response_scale,
        "empty_neighbourhoods": report.empty_neighbourhoods,
        "termination": report.trace.as_ref().map(|t| t.termination),
        "iterations": report.trace.as_ref().map(|t| t.iterations()),
        "search_cv_mse": report.search.as_ref().map(|s| s.cv_mse),
        "search_candidates": report.search.as_ref().map(|s| s.table.len()),
        "metrics": table_rows(report),
        "timing": {
            "tuning_seconds": report.tuning_seconds,
            "total_seconds": report.total_seconds,
        },
    })
}

/// Writes every file, removing the ones already written if a later one
/// fails.
fn write_all(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<Vec<PathBuf>> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

fn report_files(config: &RunConfig, report: &RunReport) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut metrics = Vec::new();
    write_metrics_csv(report, &mut metrics).expect("in-memory write");
    let mut scatter = Vec::new();
    write_scatter_csv(&report.scatter, &mut scatter).expect("in-memory write");
    let mut files = vec![
        ("metrics.csv", metrics),
        ("metrics.txt", format_table(report).into_bytes()),
        (
            "summary.json",
            serde_json::to_vec_pretty(&summary_json(config, report))?,
        ),
        ("scatter.csv", scatter),
        ("model.json", serde_json::to_vec_pretty(&report.model)?),
    ];
    if let Some(trace) = &report.trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).expect("in-memory write");
        files.push(("trace.csv", buf));
    }
    if let Some(search) = &report.search {
        let mut buf = Vec::new();
        search.write_table_csv(&mut buf).expect("in-memory write");
        files.push(("search.csv", buf));
    }
    Ok(files)
}

/// Runs the benchmark and writes `metrics.csv`, `metrics.txt`,
/// `summary.json`, `scatter.csv`, `model.json`, plus `trace.csv`
/// (controlled) or `search.csv` (grid / random) into `config.out_dir`.
pub fn run_benchmark(config: &RunConfig) -> Result<RunReport> {
    let report = run_in_memory(config)?;
    write_all(&config.out_dir, report_files(config, &report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerRow {
    pub tuner: Tuner,
    pub wall_seconds: f64,
    pub epsilon_star: f64,
    pub alpha_star: Option<f64>,
    pub test_mse: f64,
    pub test_r2: f64,
}

pub fn write_tuners_csv(rows: &[TunerRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "tuner,wall_seconds,epsilon_star,alpha_star,test_mse,test_r2")?;
    for r in rows {
        let alpha = r.alpha_star.map(|a| a.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:.3},{},{},{},{}",
            r.tuner.name(),
            r.wall_seconds,
            r.epsilon_star,
            alpha,
            r.test_mse,
            r.test_r2
        )?;
    }
    Ok(())
}

/// Runs each tuner on identical splits and budgets. Per-tuner outputs go to
/// `out_dir/<tuner>/`, the comparison to `out_dir/tuners.csv`.
pub fn compare_tuners(config: &RunConfig, tuners: &[Tuner]) -> Result<Vec<TunerRow>> {
    if tuners.len() < 2 {
        return Err(Error::InvalidParameter("comparison needs at least two tuners".into()));
    }
    if tuners.iter().enumerate().any(|(i, t)| tuners[..i].contains(t)) {
        return Err(Error::InvalidParameter(
            "each tuner may appear once in a comparison".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut outputs = Vec::new();
    for &tuner in tuners {
        let cfg = RunConfig {
            tuner,
            out_dir: config.out_dir.join(tuner.name()),
            ..config.clone()
        };
        let report =
            run_in_memory(&cfg).map_err(|e| Error::InvalidParameter(format!("tuner {}: {e}", tuner.name())))?;
        rows.push(TunerRow {
            tuner,
            wall_seconds: report.tuning_seconds,
            epsilon_star: report.params.epsilon,
            alpha_star: match report.params.agreement {
                crate::cobra::Agreement::Fraction(a) => Some(a),
                crate::cobra::Agreement::Unanimous => None,
            },
            test_mse: report.cobra.mse,
            test_r2: report.cobra.r2,
        });
        outputs.push((cfg, report));
    }
    for (cfg, report) in &outputs {
        write_all(&cfg.out_dir, report_files(cfg, report)?)?;
    }
    let mut buf = Vec::new();
    write_tuners_csv(&rows, &mut buf).expect("in-memory write");
    write_all(&config.out_dir, vec![("tuners.csv", buf)])?;
    Ok(rows)
}
