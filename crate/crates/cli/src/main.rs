use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cobra_core::pipeline::{self, CobraModel, RunConfig, Tuner, TuningSource};
use cobra_core::{data, LearnerSpec, SmoothingParams, Variant};

/// Discrete COBRA benchmark: fits ridge, lasso and a regression tree, picks
/// the agreement threshold epsilon and scores everything on a test split.
#[derive(Debug, Parser)]
#[command(name = "cobra-bench", version)]
struct Cli {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column
    #[arg(long)]
    target: String,
    /// Draw this many rows before splitting
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8, value_parser = fraction)]
    train_frac: f64,
    /// Share of the training rows used to fit the learners; the rest form
    /// the aggregation set
    #[arg(long, default_value_t = 0.5, value_parser = fraction)]
    machine_frac: f64,
    /// One tuner, or a comma-separated list to compare several
    #[arg(long, value_enum, value_delimiter = ',', default_value = "controlled")]
    tuner: Vec<TunerArg>,
    /// Kernel steepness on the standardized response scale
    #[arg(long, default_value_t = 50.0, value_parser = positive)]
    beta: f64,
    #[arg(long, value_enum, default_value = "sumexp")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    step_tol: f64,
    /// Starting epsilon on the raw target scale (default: half the widest
    /// prediction gap)
    #[arg(long)]
    epsilon_init: Option<f64>,
    /// Where the controlled tuner measures its loss: `loo`, `cv`, or
    /// `holdout:F` for a disjoint fraction F of the training rows
    #[arg(long, default_value = "loo", value_parser = tuning_source)]
    tuning_source: TuningSource,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 60)]
    grid_size: usize,
    #[arg(long, default_value_t = 30)]
    random_draws: usize,
    /// Also search the agreement fraction alpha over {1/M, ..., 1}
    #[arg(long)]
    alpha_search: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Keep raw feature scales
    #[arg(long)]
    no_standardize: bool,
    #[arg(long, default_value_t = 1.0)]
    ridge_lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    lasso_lambda: f64,
    #[arg(long, default_value_t = 6)]
    tree_depth: usize,
    #[arg(long, default_value_t = 5)]
    tree_min_leaf: usize,
    /// Skip training: predict `--data` with a saved model.json and write
    /// predictions.csv
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TunerArg {
    Controlled,
    Grid,
    Random,
}

impl From<TunerArg> for Tuner {
    fn from(t: TunerArg) -> Self {
        match t {
            TunerArg::Controlled => Tuner::Controlled,
            TunerArg::Grid => Tuner::Grid,
            TunerArg::Random => Tuner::Randomized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Sumexp,
    Maxexp,
}

fn fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn tuning_source(s: &str) -> Result<TuningSource, String> {
    match s {
        "loo" => Ok(TuningSource::LeaveOneOut),
        "cv" => Ok(TuningSource::CrossValidated),
        _ => match s.strip_prefix("holdout:") {
            Some(f) => fraction(f).map(TuningSource::Holdout),
            None => Err(format!("unknown tuning source `{s}` (expected loo, cv or holdout:F)")),
        },
    }
}

fn config(cli: &Cli) -> RunConfig {
    let mut c = RunConfig::new(&cli.data, &cli.target, &cli.out);
    c.subsample = cli.subsample;
    c.seed = cli.seed;
    c.train_fraction = cli.train_frac;
    c.machine_fraction = cli.machine_frac;
    c.standardize = !cli.no_standardize;
    c.learner = LearnerSpec {
        ridge_lambda: cli.ridge_lambda,
        lasso_lambda: cli.lasso_lambda,
        tree_max_depth: cli.tree_depth,
        tree_min_leaf: cli.tree_min_leaf,
        ..LearnerSpec::default()
    };
    c.tuner = cli.tuner[0].into();
    c.smoothing = SmoothingParams {
        beta: cli.beta,
        variant: match cli.variant {
            VariantArg::Sumexp => Variant::SumExp,
            VariantArg::Maxexp => Variant::MaxExp,
        },
    };
    c.gradient.learning_rate = cli.lr;
    c.gradient.max_iters = cli.max_iters;
    c.gradient.grad_tol = cli.grad_tol;
    c.gradient.step_tol = cli.step_tol;
    c.gradient.epsilon_init = cli.epsilon_init;
    c.tuning_source = cli.tuning_source;
    c.folds = cli.folds;
    c.grid_size = cli.grid_size;
    c.random_draws = cli.random_draws;
    c.alpha_search = cli.alpha_search;
    c.threads = cli.threads;
    c
}

fn predict(cli: &Cli, model_path: &PathBuf) -> cobra_core::Result<()> {
    let model = CobraModel::load(model_path)?;
    let ds = data::load_csv(&cli.data, &model.target_name)?;
    let (preds, empty) = model.predict(&ds)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| cobra_core::Error::io(&cli.out, e))?;
    let scatter: Vec<(f64, f64)> = ds.targets.iter().copied().zip(preds).collect();
    let mut buf = Vec::new();
    pipeline::write_scatter_csv(&scatter, &mut buf).expect("in-memory write");
    let path = cli.out.join("predictions.csv");
    std::fs::write(&path, buf).map_err(|e| cobra_core::Error::io(&path, e))?;
    println!(
        "{} rows predicted ({empty} empty neighbourhoods) -> {}",
        scatter.len(),
        path.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> cobra_core::Result<()> {
    if let Some(model_path) = &cli.model {
        return predict(cli, model_path);
    }
    let cfg = config(cli);
    if cli.tuner.len() > 1 {
        let tuners: Vec<Tuner> = cli.tuner.iter().map(|&t| t.into()).collect();
        let rows = pipeline::compare_tuners(&cfg, &tuners)?;
        println!(
            "{:<12} {:>10} {:>12} {:>14} {:>12}",
            "tuner", "seconds", "epsilon", "test_mse", "test_r2"
        );
        for r in rows {
            println!(
                "{:<12} {:>10.3} {:>12.6} {:>14.9} {:>12.9}",
                r.tuner.name(),
                r.wall_seconds,
                r.epsilon_star,
                r.test_mse,
                r.test_r2
            );
        }
        return Ok(());
    }
    let report = pipeline::run_benchmark(&cfg)?;
    print!("{}", pipeline::format_table(&report));
    println!(
        "epsilon* = {:.6}  ({} tuner, {:.3} s, {} empty neighbourhoods)",
        report.params.epsilon,
        report.tuner.name(),
        report.tuning_seconds,
        report.empty_neighbourhoods
    );
    if let Some(t) = &report.trace {
        println!("stopped after {} iterations: {:?}", t.iterations(), t.termination);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
