//! Cross-validated grid and randomized search over the COBRA threshold.
//!
//! Every candidate is scored by [`cv_score`], which refits the weak learners
//! inside each fold, so the cost of a search grows linearly with the number
//! of candidates.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cobra::{predict_batch, AggregationSet, CobraParams};
use crate::data::{split_indices, Dataset};
use crate::learners::{fit_all, predict_all, LearnerSpec, PredictionMatrix};
use crate::metrics::mse;
use crate::rng::{derive_seed, permutation, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Fold index of every row.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn in_fold(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Balanced shuffled assignment: row `perm[i]` goes to fold `i mod k`.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("{k} folds for {n} rows")));
    }
    let mut assignment = vec![0; n];
    for (i, row) in permutation(n, seed).into_iter().enumerate() {
        assignment[row] = i % k;
    }
    Ok(FoldPlan { n, k, seed, assignment })
}

/// Row indices (into the searched dataset) used by one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPartition {
    pub machine_rows: Vec<usize>,
    pub aggregation_rows: Vec<usize>,
    pub held_out_rows: Vec<usize>,
}

/// How in-fold rows are divided between learner training and aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSplit {
    pub machine_fraction: f64,
    pub seed: u64,
}

pub fn fold_partitions(folds: &FoldPlan, split: CvSplit) -> Result<Vec<FoldPartition>> {
    (0..folds.k)
        .map(|f| {
            let in_fold = folds.in_fold(f);
            let (dk, dl) = split_indices(in_fold.len(), split.machine_fraction, derive_seed(split.seed, f as u64))?;
            Ok(FoldPartition {
                machine_rows: dk.into_iter().map(|i| in_fold[i]).collect(),
                aggregation_rows: dl.into_iter().map(|i| in_fold[i]).collect(),
                held_out_rows: folds.held_out(f),
            })
        })
        .collect()
}

/// Learners refit on one fold: the fold's aggregation set plus machine
/// predictions for its held-out rows.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub aggregation: AggregationSet,
    pub held_out_preds: PredictionMatrix,
    pub held_out_targets: ndarray::Array1<f64>,
}

pub fn build_fold(train: &Dataset, specs: &[LearnerSpec], part: &FoldPartition) -> Result<FoldData> {
    let dk = train.select(&part.machine_rows);
    let dl = train.select(&part.aggregation_rows);
    let held = train.select(&part.held_out_rows);
    let models = fit_all(specs, &dk)?;
    let aggregation = AggregationSet::from_predictions(predict_all(&models, dl.features.view())?, dl.targets)?;
    Ok(FoldData {
        aggregation,
        held_out_preds: predict_all(&models, held.features.view())?,
        held_out_targets: held.targets,
    })
}

pub fn build_folds(train: &Dataset, specs: &[LearnerSpec], folds: &FoldPlan, split: CvSplit) -> Result<Vec<FoldData>> {
    let parts = fold_partitions(folds, split)?;
    parts.par_iter().map(|p| build_fold(train, specs, p)).collect()
}

fn fold_mse(fold: &FoldData, params: &CobraParams) -> Result<f64> {
    let out = predict_batch(&fold.aggregation, &fold.held_out_preds, params)?;
    mse(fold.held_out_targets.as_slice().expect("contiguous"), &out.predictions)
}

/// Mean held-out MSE of discrete COBRA across folds, refitting the
/// learners inside every fold.
pub fn cv_score(
    train: &Dataset,
    specs: &[LearnerSpec],
    params: &CobraParams,
    folds: &FoldPlan,
    split: CvSplit,
) -> Result<f64> {
    if folds.n != train.n_rows() {
        return Err(Error::LengthMismatch(folds.n, train.n_rows()));
    }
    let data = build_folds(train, specs, folds, split)?;
    let scores = data.iter().map(|f| fold_mse(f, params)).collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchSpace {
    Grid {
        epsilons: Vec<f64>,
        alphas: Option<Vec<f64>>,
    },
    Random {
        lo: f64,
        hi: f64,
        draws: usize,
        seed: u64,
        alphas: Option<Vec<f64>>,
    },
}

impl SearchSpace {
    /// `size` evenly spaced values from 0 to `hi` inclusive.
    pub fn linear_grid(hi: f64, size: usize, alphas: Option<Vec<f64>>) -> Self {
        let epsilons = match size {
            0 => vec![],
            1 => vec![hi],
            _ => (0..size).map(|i| hi * i as f64 / (size - 1) as f64).collect(),
        };
        SearchSpace::Grid { epsilons, alphas }
    }

    /// Candidate `(epsilon, alpha)` pairs in evaluation order.
    pub fn candidates(&self) -> Result<Vec<(f64, Option<f64>)>> {
        match self {
            SearchSpace::Grid { epsilons, alphas } => {
                if epsilons.is_empty() || epsilons.iter().any(|e| e.is_nan() || *e < 0.0) {
                    return Err(Error::InvalidParameter("grid needs non-negative epsilons".into()));
                }
                let mut eps = epsilons.clone();
                eps.sort_by(f64::total_cmp);
                Ok(match alphas {
                    None => eps.into_iter().map(|e| (e, None)).collect(),
                    Some(a) => eps
                        .iter()
                        .flat_map(|&e| a.iter().map(move |&al| (e, Some(al))))
                        .collect(),
                })
            }
            SearchSpace::Random {
                lo,
                hi,
                draws,
                seed,
                alphas,
            } => {
                if !(*lo >= 0.0 && lo <= hi) || *draws == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "random range [{lo}, {hi}] with {draws} draws"
                    )));
                }
                let mut rng = rng_from_seed(*seed);
                Ok((0..*draws)
                    .map(|_| {
                        let e = lo + (hi - lo) * rng.gen::<f64>();
                        let a = alphas.as_ref().map(|a| a[rng.gen_range(0..a.len())]);
                        (e, a)
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub cv_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_epsilon: f64,
    pub best_alpha: Option<f64>,
    pub cv_mse: f64,
    pub table: Vec<CandidateScore>,
    pub wall_time: f64,
}

impl SearchResult {
    pub fn params(&self) -> CobraParams {
        match self.best_alpha {
            Some(a) => CobraParams::fraction(self.best_epsilon, a),
            None => CobraParams::unanimous(self.best_epsilon),
        }
    }

    /// `epsilon,alpha,cv_mse`; `alpha` is empty for unanimous candidates.
    pub fn write_table_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "epsilon,alpha,cv_mse")?;
        for c in &self.table {
            let alpha = c.alpha.map(|a| a.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", c.epsilon, alpha, c.cv_mse)?;
        }
        Ok(())
    }

    pub fn save_table_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_table_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Lowest score wins; ties go to the smaller epsilon, then smaller alpha.
fn pick_best(table: &[CandidateScore]) -> Option<CandidateScore> {
    table.iter().copied().min_by(|a, b| {
        a.cv_mse
            .total_cmp(&b.cv_mse)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.alpha.unwrap_or(1.0).total_cmp(&b.alpha.unwrap_or(1.0)))
    })
}

fn run_search(
    train: &Dataset,
    specs: &[LearnerSpec],
    space: &SearchSpace,
    folds: &FoldPlan,
    split: CvSplit,
) -> Result<SearchResult> {
    let start = Instant::now();
    let candidates = space.candidates()?;
    let table = candidates
        .par_iter()
        .map(|&(epsilon, alpha)| {
            let params = match alpha {
                Some(a) => CobraParams::fraction(epsilon, a),
                None => CobraParams::unanimous(epsilon),
            };
            let cv_mse = cv_score(train, specs, &params, folds, split)?;
            Ok(CandidateScore { epsilon, alpha, cv_mse })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = pick_best(&table).ok_or(Error::Empty)?;
    Ok(SearchResult {
        best_epsilon: best.epsilon,
        best_alpha: best.alpha,
        cv_mse: best.cv_mse,
        table,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn grid_search(
    train: &Dataset,
    specs: &[LearnerSpec],
    space: &SearchSpace,
    folds: &FoldPlan,
    split: CvSplit,
) -> Result<SearchResult> {
    if !matches!(space, SearchSpace::Grid { .. }) {
        return Err(Error::InvalidParameter("grid_search needs a grid space".into()));
    }
    run_search(train, specs, space, folds, split)
}

pub fn randomized_search(
    train: &Dataset,
    specs: &[LearnerSpec],
    space: &SearchSpace,
    folds: &FoldPlan,
    split: CvSplit,
) -> Result<SearchResult> {
    if !matches!(space, SearchSpace::Random { .. }) {
        return Err(Error::InvalidParameter("randomized_search needs a random space".into()));
    }
    run_search(train, specs, space, folds, split)
}
