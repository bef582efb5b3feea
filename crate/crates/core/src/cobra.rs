//! Discrete COBRA: a query is predicted by averaging the responses of the
//! aggregation rows whose machine predictions all lie within `epsilon` of
//! the query's machine predictions (or, in the relaxed form, at least a
//! fraction `alpha` of them do). An empty neighbourhood predicts 0.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::learners::PredictionMatrix;
use crate::{Error, Result};

/// `machine_preds[(i, m)] = r_m(X_i)` over the aggregation rows, paired
/// with their responses `Y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationSet {
    pub machine_preds: Array2<f64>,
    pub responses: Array1<f64>,
}

impl AggregationSet {
    pub fn new(machine_preds: Array2<f64>, responses: Array1<f64>) -> Result<Self> {
        let (l, m) = machine_preds.dim();
        if l == 0 || m == 0 {
            return Err(Error::Empty);
        }
        if responses.len() != l {
            return Err(Error::LengthMismatch(l, responses.len()));
        }
        if machine_preds.iter().chain(responses.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("aggregation set has non-finite entries".into()));
        }
        Ok(AggregationSet {
            machine_preds,
            responses,
        })
    }

    pub fn from_predictions(preds: PredictionMatrix, responses: Array1<f64>) -> Result<Self> {
        AggregationSet::new(preds.0, responses)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn n_machines(&self) -> usize {
        self.machine_preds.ncols()
    }

    /// Largest `|r_m(X_i) - r_m(X_j)|` over all row pairs and machines.
    pub fn max_spread(&self) -> f64 {
        self.machine_preds
            .columns()
            .into_iter()
            .map(|c| {
                let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "alpha", rename_all = "snake_case")]
pub enum Agreement {
    Unanimous,
    /// At least `alpha * M` machines must agree; `alpha` in `{1/M, ..., 1}`.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CobraParams {
    pub epsilon: f64,
    pub agreement: Agreement,
}

impl CobraParams {
    pub fn unanimous(epsilon: f64) -> Self {
        CobraParams {
            epsilon,
            agreement: Agreement::Unanimous,
        }
    }

    pub fn fraction(epsilon: f64, alpha: f64) -> Self {
        CobraParams {
            epsilon,
            agreement: Agreement::Fraction(alpha),
        }
    }

    /// Number of machines that must agree, given `M` machines.
    pub fn required_machines(&self, n_machines: usize) -> Result<usize> {
        match self.agreement {
            Agreement::Unanimous => Ok(n_machines),
            Agreement::Fraction(alpha) => {
                let k = alpha * n_machines as f64;
                let rounded = k.round();
                if (k - rounded).abs() > 1e-9 || rounded < 1.0 || rounded > n_machines as f64 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha {alpha} is not in {{1/{n_machines}, ..., 1}}"
                    )));
                }
                Ok(rounded as usize)
            }
        }
    }

    pub fn validate(&self, n_machines: usize) -> Result<usize> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must be >= 0",
                self.epsilon
            )));
        }
        self.required_machines(n_machines)
    }
}

/// The full agreement grid `{1/M, 2/M, ..., 1}`.
pub fn alpha_grid(n_machines: usize) -> Vec<f64> {
    (1..=n_machines).map(|k| k as f64 / n_machines as f64).collect()
}

fn check_query(agg: &AggregationSet, query: ArrayView1<'_, f64>) -> Result<()> {
    if query.len() != agg.n_machines() {
        return Err(Error::DimensionMismatch {
            expected: agg.n_machines(),
            got: query.len(),
        });
    }
    Ok(())
}

/// Which aggregation rows enter the neighbourhood of `query`. Agreement is
/// the weak inequality `|r_m(x) - r_m(X_i)| <= epsilon`.
pub fn accepted_rows(agg: &AggregationSet, query: ArrayView1<'_, f64>, params: &CobraParams) -> Result<Vec<bool>> {
    check_query(agg, query)?;
    let need = params.validate(agg.n_machines())?;
    let eps = params.epsilon;
    Ok(agg
        .machine_preds
        .outer_iter()
        .map(|row| {
            let agree = row
                .iter()
                .zip(query.iter())
                .filter(|(a, q)| (*a - *q).abs() <= eps)
                .count();
            agree >= need
        })
        .collect())
}

/// Normalized indicator weights; all zero when nothing is accepted.
pub fn discrete_weights(agg: &AggregationSet, query: ArrayView1<'_, f64>, params: &CobraParams) -> Result<Vec<f64>> {
    let accepted = accepted_rows(agg, query, params)?;
    let count = accepted.iter().filter(|&&a| a).count();
    if count == 0 {
        return Ok(vec![0.0; accepted.len()]);
    }
    let w = 1.0 / count as f64;
    Ok(accepted.into_iter().map(|a| if a { w } else { 0.0 }).collect())
}

/// Relaxed weights: at least `alpha * M` machines must agree.
pub fn discrete_weights_alpha(
    agg: &AggregationSet,
    query: ArrayView1<'_, f64>,
    epsilon: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    discrete_weights(agg, query, &CobraParams::fraction(epsilon, alpha))
}

/// Mean response over the neighbourhood and the neighbourhood size.
fn neighbourhood_mean(agg: &AggregationSet, query: ArrayView1<'_, f64>, params: &CobraParams) -> Result<(f64, usize)> {
    let accepted = accepted_rows(agg, query, params)?;
    let (sum, count) = accepted
        .iter()
        .zip(agg.responses.iter())
        .filter(|(a, _)| **a)
        .fold((0.0, 0usize), |(s, c), (_, y)| (s + y, c + 1));
    Ok(if count == 0 {
        (0.0, 0)
    } else {
        (sum / count as f64, count)
    })
}

pub fn predict_discrete(agg: &AggregationSet, query: ArrayView1<'_, f64>, params: &CobraParams) -> Result<f64> {
    Ok(neighbourhood_mean(agg, query, params)?.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPrediction {
    pub predictions: Vec<f64>,
    /// `true` where the neighbourhood was empty and the prediction is the
    /// conventional 0.
    pub empty: Vec<bool>,
}

impl BatchPrediction {
    pub fn empty_count(&self) -> usize {
        self.empty.iter().filter(|&&e| e).count()
    }
}

pub fn predict_batch(
    agg: &AggregationSet,
    queries: &PredictionMatrix,
    params: &CobraParams,
) -> Result<BatchPrediction> {
    let mut predictions = Vec::with_capacity(queries.n_points());
    let mut empty = Vec::with_capacity(queries.n_points());
    for q in queries.0.outer_iter() {
        let (p, count) = neighbourhood_mean(agg, q, params)?;
        predictions.push(p);
        empty.push(count == 0);
    }
    Ok(BatchPrediction { predictions, empty })
}
