//! Smooth surrogate of the COBRA indicator weight and gradient tuning of
//! the threshold `epsilon`.
//!
//! For an aggregation row `i` and a query `x`, let `d_m = |r_m(X_i) - r_m(x)|`.
//! The indicator `1{max_m d_m < eps}` is replaced by
//!
//! ```text
//! SumExp:  phi = e^{b eps} / (e^{b eps} + sum_m e^{b d_m})
//! MaxExp:  phi = e^{b eps} / (e^{b eps} + e^{b max_m d_m})
//! ```
//!
//! with steepness `b = beta`. Dividing out `e^{b eps}` gives the raw weight
//! `w_i = 1 / (e^{b eps} + ...)`, and the smoothed prediction is the
//! self-normalized mean `p = sum_i w_i Y_i / sum_i w_i`. Since
//! `w_i' = -b e^{b eps} w_i^2 = -b phi_i w_i`, the derivative is
//!
//! ```text
//! p' = -b * sum_i pi_i phi_i (Y_i - p),    pi_i = w_i / sum_k w_k
//! ```
//!
//! and the loss `SL(eps) = sum_j (p_j - Y~_j)^2` has
//! `SL' = sum_j 2 (p_j - Y~_j) p_j'`.
//!
//! Everything is evaluated in the log domain: `ln(e^{b eps} + sum_m e^{b d_m})`
//! is a log-sum-exp shifted by its largest exponent, and the normalized
//! weights `pi_i` are formed from `ln phi_i` after subtracting the row
//! maximum, so nothing overflows for `|b d|` far beyond `10^4`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cobra::AggregationSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `e^{b eps} / (e^{b eps} + sum_m e^{b d_m})`
    SumExp,
    /// `e^{b eps} / (e^{b eps} + e^{b max_m d_m})`
    MaxExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub beta: f64,
    pub variant: Variant,
}

impl SmoothingParams {
    pub fn new(beta: f64, variant: Variant) -> Result<Self> {
        let p = SmoothingParams { beta, variant };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta {} must be finite and > 0",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Rows `(X~_j, Y~_j)` the smoothed loss is measured on.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningSet {
    pub machine_preds: Array2<f64>,
    pub targets: Array1<f64>,
}

impl TuningSet {
    pub fn new(machine_preds: Array2<f64>, targets: Array1<f64>) -> Result<Self> {
        if machine_preds.nrows() == 0 || machine_preds.ncols() == 0 {
            return Err(Error::Empty);
        }
        if targets.len() != machine_preds.nrows() {
            return Err(Error::LengthMismatch(machine_preds.nrows(), targets.len()));
        }
        if machine_preds.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tuning set has non-finite entries".into()));
        }
        Ok(TuningSet { machine_preds, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// `ln(e^a + sum_k e^{b_k})`, shifted by the largest exponent.
fn log_sum_exp(a: f64, rest: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = rest.clone().fold(a, f64::max);
    let s = (a - top).exp() + rest.map(|v| (v - top).exp()).sum::<f64>();
    top + s.ln()
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln phi` for one set of per-machine absolute differences.
fn log_phi(diffs: impl Iterator<Item = f64> + Clone, epsilon: f64, beta: f64, variant: Variant) -> f64 {
    let be = beta * epsilon;
    match variant {
        Variant::SumExp => be - log_sum_exp(be, diffs.map(|d| beta * d)),
        Variant::MaxExp => {
            let worst = diffs.fold(f64::NEG_INFINITY, f64::max);
            -softplus(beta * (worst - epsilon))
        }
    }
}

/// The softened indicator of `max(diffs) < epsilon`.
pub fn phi_beta(diffs: &[f64], epsilon: f64, beta: f64, variant: Variant) -> f64 {
    log_phi(diffs.iter().copied(), epsilon, beta, variant).exp()
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

/// `ln phi_i` for every aggregation row against one query.
fn row_log_phis(agg: &AggregationSet, query: ArrayView1<'_, f64>, epsilon: f64, s: &SmoothingParams) -> Vec<f64> {
    agg.machine_preds
        .outer_iter()
        .map(|row| {
            let diffs = row.into_iter().zip(query.iter()).map(|(a, q)| (a - q).abs());
            log_phi(diffs, epsilon, s.beta, s.variant)
        })
        .collect()
}

/// As [`row_log_phis`], with row `skip` (if any) given zero weight.
fn row_log_phis_except(
    agg: &AggregationSet,
    query: ArrayView1<'_, f64>,
    skip: Option<usize>,
    epsilon: f64,
    s: &SmoothingParams,
) -> Vec<f64> {
    let mut logs = row_log_phis(agg, query, epsilon, s);
    if let Some(i) = skip {
        logs[i] = f64::NEG_INFINITY;
    }
    logs
}

/// Unnormalized smooth weights `phi_i` for each aggregation row.
pub fn smooth_weights(
    agg: &AggregationSet,
    query: ArrayView1<'_, f64>,
    epsilon: f64,
    smoothing: &SmoothingParams,
) -> Result<Vec<f64>> {
    check_query(agg, query)?;
    Ok(row_log_phis(agg, query, epsilon, smoothing)
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Self-normalized weights `pi_i = w_i / sum_k w_k`.
pub fn normalized_smooth_weights(
    agg: &AggregationSet,
    query: ArrayView1<'_, f64>,
    epsilon: f64,
    smoothing: &SmoothingParams,
) -> Result<Vec<f64>> {
    check_query(agg, query)?;
    let logs = row_log_phis(agg, query, epsilon, smoothing);
    Ok(normalize(&logs))
}

fn normalize(log_phis: &[f64]) -> Vec<f64> {
    let top = log_phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_phis.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// `(p, dp/deps)` for one query, from its `ln phi_i`.
fn predict_with_derivative(agg: &AggregationSet, logs: &[f64], s: &SmoothingParams) -> (f64, f64) {
    let pi = normalize(logs);
    let p: f64 = pi.iter().zip(agg.responses.iter()).map(|(w, y)| w * y).sum();
    let slope: f64 = pi
        .iter()
        .zip(logs)
        .zip(agg.responses.iter())
        .map(|((w, lp), y)| w * lp.exp() * (y - p))
        .sum();
    (p, -s.beta * slope)
}

/// Smoothed COBRA prediction `p(eps; x)`.
pub fn smooth_predict(
    agg: &AggregationSet,
    query: ArrayView1<'_, f64>,
    epsilon: f64,
    smoothing: &SmoothingParams,
) -> Result<f64> {
    check_query(agg, query)?;
    let logs = row_log_phis(agg, query, epsilon, smoothing);
    Ok(normalize(&logs)
        .iter()
        .zip(agg.responses.iter())
        .map(|(w, y)| w * y)
        .sum())
}

fn check_pair(tuning: &TuningSet, agg: &AggregationSet) -> Result<()> {
    if tuning.machine_preds.ncols() != agg.n_machines() {
        return Err(Error::DimensionMismatch {
            expected: agg.n_machines(),
            got: tuning.machine_preds.ncols(),
        });
    }
    Ok(())
}

/// `SL(eps) = sum_j (p(eps; X~_j) - Y~_j)^2`.
pub fn squared_loss(
    tuning: &TuningSet,
    agg: &AggregationSet,
    epsilon: f64,
    smoothing: &SmoothingParams,
) -> Result<f64> {
    check_pair(tuning, agg)?;
    Ok(SmoothObjective::single(tuning, agg, *smoothing).loss(epsilon))
}

/// Analytic `dSL/deps`.
pub fn loss_gradient(
    tuning: &TuningSet,
    agg: &AggregationSet,
    epsilon: f64,
    smoothing: &SmoothingParams,
) -> Result<f64> {
    check_pair(tuning, agg)?;
    Ok(SmoothObjective::single(tuning, agg, *smoothing)
        .loss_and_gradient(epsilon)
        .1)
}

/// Sum of smoothed losses over one or more (tuning, aggregation) pairs
/// sharing a single `epsilon`, e.g. one pair per cross-validation fold.
#[derive(Debug, Clone)]
pub struct SmoothObjective<'a> {
    parts: Vec<Part<'a>>,
    smoothing: SmoothingParams,
}

#[derive(Debug, Clone, Copy)]
struct Part<'a> {
    tuning: &'a TuningSet,
    agg: &'a AggregationSet,
    /// Tuning row `j` is aggregation row `j` and is left out of its own
    /// neighbourhood.
    leave_one_out: bool,
}

type Query<'a> = (&'a AggregationSet, ArrayView1<'a, f64>, Option<usize>, f64);

impl<'a> SmoothObjective<'a> {
    pub fn new(parts: Vec<(&'a TuningSet, &'a AggregationSet)>, smoothing: SmoothingParams) -> Result<Self> {
        smoothing.validate()?;
        if parts.is_empty() {
            return Err(Error::Empty);
        }
        let parts = parts
            .into_iter()
            .map(|(tuning, agg)| {
                check_pair(tuning, agg)?;
                Ok(Part {
                    tuning,
                    agg,
                    leave_one_out: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SmoothObjective { parts, smoothing })
    }

    /// Tunes on the aggregation rows themselves: `agg` doubles as the
    /// tuning set and each row is predicted from all the others.
    pub fn leave_one_out(agg: &'a AggregationSet, tuning: &'a TuningSet, smoothing: SmoothingParams) -> Result<Self> {
        smoothing.validate()?;
        check_pair(tuning, agg)?;
        if tuning.machine_preds != agg.machine_preds || tuning.targets != agg.responses {
            return Err(Error::InvalidParameter(
                "leave-one-out tuning set must equal the aggregation set".into(),
            ));
        }
        if agg.len() < 2 {
            return Err(Error::InvalidParameter(
                "leave-one-out needs at least two aggregation rows".into(),
            ));
        }
        Ok(SmoothObjective {
            parts: vec![Part {
                tuning,
                agg,
                leave_one_out: true,
            }],
            smoothing,
        })
    }

    fn single(tuning: &'a TuningSet, agg: &'a AggregationSet, smoothing: SmoothingParams) -> Self {
        SmoothObjective {
            parts: vec![Part {
                tuning,
                agg,
                leave_one_out: false,
            }],
            smoothing,
        }
    }

    pub fn n_queries(&self) -> usize {
        self.parts.iter().map(|p| p.tuning.len()).sum()
    }

    fn queries(&self) -> impl Iterator<Item = Query<'a>> + '_ {
        self.parts.iter().flat_map(|p| {
            let (a, loo) = (p.agg, p.leave_one_out);
            p.tuning
                .machine_preds
                .outer_iter()
                .zip(p.tuning.targets.iter())
                .enumerate()
                .map(move |(j, (q, &y))| (a, q, loo.then_some(j), y))
        })
    }

    /// Per-query terms are computed in parallel and summed in query order,
    /// so results do not depend on the thread count.
    fn per_query<T: Send>(&self, epsilon: f64, f: impl Fn(&AggregationSet, &[f64], f64) -> T + Sync) -> Vec<T> {
        let s = self.smoothing;
        let items: Vec<_> = self.queries().collect();
        items
            .into_par_iter()
            .map(|(a, q, skip, y)| f(a, &row_log_phis_except(a, q, skip, epsilon, &s), y))
            .collect()
    }

    pub fn loss(&self, epsilon: f64) -> f64 {
        self.per_query(epsilon, |a, logs, y| {
            let p: f64 = normalize(logs).iter().zip(a.responses.iter()).map(|(w, r)| w * r).sum();
            (p - y).powi(2)
        })
        .into_iter()
        .sum()
    }

    pub fn loss_and_gradient(&self, epsilon: f64) -> (f64, f64) {
        let s = self.smoothing;
        self.per_query(epsilon, |a, logs, y| {
            let (p, dp) = predict_with_derivative(a, logs, &s);
            ((p - y).powi(2), 2.0 * (p - y) * dp)
        })
        .into_iter()
        .fold((0.0, 0.0), |(l, g), (dl, dg)| (l + dl, g + dg))
    }

    /// Half of the largest per-machine difference between any query and
    /// any aggregation row.
    pub fn default_epsilon_init(&self) -> f64 {
        let mut widest = 0.0f64;
        for &Part { tuning: t, agg: a, .. } in &self.parts {
            for m in 0..a.n_machines() {
                let (lo, hi) = column_range(t.machine_preds.column(m));
                let (alo, ahi) = column_range(a.machine_preds.column(m));
                widest = widest.max((hi - alo).abs()).max((ahi - lo).abs());
            }
        }
        0.5 * widest
    }

    /// Projected gradient descent on `epsilon >= 0`.
    ///
    /// Each iteration proposes `max(0, eps - lr * SL'(eps))` (with `SL'`
    /// divided by the row count when `mean_loss` is set); a proposal
    /// that raises the loss halves `lr` (the halving persists) and is
    /// retried. Stops when `|SL'| < grad_tol`, when the accepted or
    /// proposed move is shorter than `step_tol`, or after `max_iters`.
    pub fn tune(&self, config: &GradientDescentConfig) -> Result<TuneTrace> {
        config.validate()?;
        let mut eps = config.epsilon_init.unwrap_or_else(|| self.default_epsilon_init());
        let mut lr = config.learning_rate;
        let per_row = if config.mean_loss {
            1.0 / self.n_queries() as f64
        } else {
            1.0
        };
        let (mut loss, mut grad) = self.loss_and_gradient(eps);
        let mut records = vec![TraceRecord {
            iteration: 0,
            epsilon: eps,
            loss,
            gradient: grad,
        }];

        let mut termination = Termination::MaxIters;
        'outer: for iteration in 1..=config.max_iters {
            if (per_row * grad).abs() < config.grad_tol {
                termination = Termination::GradTol;
                break;
            }
            loop {
                let proposal = (eps - lr * per_row * grad).max(0.0);
                if (proposal - eps).abs() < config.step_tol {
                    termination = Termination::StepTol;
                    break 'outer;
                }
                let (l, g) = self.loss_and_gradient(proposal);
                if l <= loss {
                    (eps, loss, grad) = (proposal, l, g);
                    break;
                }
                lr *= 0.5;
            }
            records.push(TraceRecord {
                iteration,
                epsilon: eps,
                loss,
                gradient: grad,
            });
        }
        // the last accepted iterate never reached the gradient test
        if termination == Termination::MaxIters && (per_row * grad).abs() < config.grad_tol {
            termination = Termination::GradTol;
        }
        Ok(TuneTrace {
            records,
            epsilon_star: eps,
            termination,
            final_learning_rate: lr,
        })
    }
}

fn column_range(col: ArrayView1<'_, f64>) -> (f64, f64) {
    col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientDescentConfig {
    /// `None` starts from [`SmoothObjective::default_epsilon_init`].
    pub epsilon_init: Option<f64>,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Step on `SL / n` (the mean squared error over the `n` tuning rows)
    /// instead of the raw sum; `grad_tol` then applies to `SL' / n`.
    pub mean_loss: bool,
}

impl Default for GradientDescentConfig {
    fn default() -> Self {
        GradientDescentConfig {
            epsilon_init: None,
            learning_rate: 1.0,
            max_iters: 200,
            grad_tol: 1e-6,
            step_tol: 1e-8,
            mean_loss: true,
        }
    }
}

impl GradientDescentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if let Some(e) = self.epsilon_init {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon_init {e} must be >= 0")));
            }
        }
        if !positive(self.learning_rate) || !positive(self.grad_tol) || !positive(self.step_tol) {
            return Err(Error::InvalidParameter(
                "learning rate and tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    StepTol,
    MaxIters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub epsilon: f64,
    pub loss: f64,
    pub gradient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub records: Vec<TraceRecord>,
    pub epsilon_star: f64,
    pub termination: Termination,
    pub final_learning_rate: f64,
}

impl TuneTrace {
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// `iteration,epsilon,loss,gradient`, one line per accepted iterate.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iteration,epsilon,loss,gradient")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.iteration, r.epsilon, r.loss, r.gradient)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Gradient descent on a single (tuning, aggregation) pair.
pub fn tune_epsilon(
    tuning: &TuningSet,
    agg: &AggregationSet,
    smoothing: &SmoothingParams,
    config: &GradientDescentConfig,
) -> Result<TuneTrace> {
    SmoothObjective::new(vec![(tuning, agg)], *smoothing)?.tune(config)
}

/// Builds a tuning set from raw prediction and target views.
pub fn tuning_set_from(preds: ArrayView2<'_, f64>, targets: ArrayView1<'_, f64>) -> Result<TuningSet> {
    TuningSet::new(preds.to_owned(), targets.to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    const SUM: Variant = Variant::SumExp;
    const MAX: Variant = Variant::MaxExp;

    fn sp(beta: f64, variant: Variant) -> SmoothingParams {
        SmoothingParams::new(beta, variant).unwrap()
    }

    #[test]
    fn phi_examples() {
        for beta in [0.1, 1.0, 37.0] {
            assert!((phi_beta(&[0.7], 0.7, beta, SUM) - 0.5).abs() < 1e-15);
            assert!((phi_beta(&[0.7], 0.7, beta, MAX) - 0.5).abs() < 1e-15);
        }
        assert!((phi_beta(&[0.0, 0.0], 0.0, 1.0, SUM) - 1.0 / 3.0).abs() < 1e-15);
        // logistic(5) = 1 / (1 + e^-5)
        assert!((phi_beta(&[0.5], 1.0, 10.0, MAX) - 0.993_307_149_075_715_2).abs() < 1e-15);
    }

    #[test]
    fn phi_survives_huge_exponents() {
        let v = phi_beta(&[3.0, 2.0], 1.0, 1e4, SUM);
        assert!(v.is_finite() && v >= 0.0);
        let v = phi_beta(&[0.5, 0.2], 1.5, 1e4, SUM);
        assert!((v - 1.0).abs() < 1e-12);
        assert!(phi_beta(&[1e300], 0.0, 1e4, MAX).is_finite());
    }

    #[test]
    fn identical_row_weight() {
        let agg = AggregationSet::new(array![[1.0, 2.0], [5.0, 5.0]], array![1.0, 2.0]).unwrap();
        let w = smooth_weights(&agg, array![1.0, 2.0].view(), 0.0, &sp(1.0, SUM)).unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
        let w = smooth_weights(&agg, array![1.0, 2.0].view(), 0.3, &sp(2.0, SUM)).unwrap();
        let e = (0.6f64).exp();
        assert!((w[0] - e / (e + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn weights_increase_with_epsilon() {
        let agg = AggregationSet::new(array![[1.0, 2.0], [5.0, 5.0], [0.0, 2.5]], array![1.0, 2.0, 3.0]).unwrap();
        for v in [SUM, MAX] {
            let a = smooth_weights(&agg, array![1.2, 2.0].view(), 0.5, &sp(2.0, v)).unwrap();
            let b = smooth_weights(&agg, array![1.2, 2.0].view(), 0.6, &sp(2.0, v)).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| y > x));
        }
    }

    #[test]
    fn equidistant_rows_give_plain_mean() {
        let agg = AggregationSet::new(array![[1.0, 0.0], [-1.0, 0.5], [0.0, 1.0]], array![3.0, 6.0, 9.0]).unwrap();
        let p = smooth_predict(&agg, array![0.0, 0.0].view(), 0.4, &sp(25.0, MAX)).unwrap();
        assert!((p - 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_returns_its_response() {
        let agg = AggregationSet::new(array![[10.0, -3.0]], array![42.5]).unwrap();
        for (eps, beta) in [(0.0, 1.0), (3.0, 100.0), (0.2, 1e4)] {
            for v in [SUM, MAX] {
                let p = smooth_predict(&agg, array![0.0, 0.0].view(), eps, &sp(beta, v)).unwrap();
                assert_eq!(p, 42.5);
            }
        }
    }

    #[test]
    fn zero_residual_loss_and_gradient() {
        let agg = AggregationSet::new(array![[1.0, 2.0], [2.0, 0.5], [3.0, 3.0]], array![1.0, 4.0, -2.0]).unwrap();
        let q = array![[1.5, 1.0], [2.5, 2.0]];
        let s = sp(3.0, SUM);
        let eps0 = 0.8;
        let targets: Array1<f64> = q
            .outer_iter()
            .map(|r| smooth_predict(&agg, r, eps0, &s).unwrap())
            .collect();
        let t = TuningSet::new(q, targets).unwrap();
        assert!(squared_loss(&t, &agg, eps0, &s).unwrap() < 1e-28);
        assert!(loss_gradient(&t, &agg, eps0, &s).unwrap().abs() < 1e-12);

        let trace = tune_epsilon(
            &t,
            &agg,
            &s,
            &GradientDescentConfig {
                epsilon_init: Some(eps0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(trace.termination, Termination::GradTol);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.epsilon_star, eps0);
    }

    #[test]
    fn single_row_loss_is_squared_residual() {
        let agg = AggregationSet::new(array![[0.0], [1.0]], array![2.0, 4.0]).unwrap();
        let s = sp(1.0, MAX);
        let q = array![[0.5]];
        let p = smooth_predict(&agg, q.row(0), 0.1, &s).unwrap();
        let t = TuningSet::new(q, array![p + 1.5]).unwrap();
        assert!((squared_loss(&t, &agg, 0.1, &s).unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn flat_kernel_limit() {
        let agg = AggregationSet::new(array![[0.0, 1.0], [3.0, 0.0], [1.0, 1.0]], array![1.0, 2.0, 6.0]).unwrap();
        let t = TuningSet::new(array![[0.5, 0.5], [2.0, 2.0]], array![0.0, 10.0]).unwrap();
        let s = sp(1e-9, SUM);
        let p = smooth_predict(&agg, array![0.5, 0.5].view(), 0.7, &s).unwrap();
        assert!((p - 3.0).abs() < 1e-7);
        assert!(loss_gradient(&t, &agg, 0.7, &s).unwrap().abs() < 1e-6);
    }

    #[test]
    fn projection_keeps_epsilon_nonnegative() {
        // loss falls as epsilon falls, so the tuner hits the boundary
        let agg = AggregationSet::new(array![[0.0], [1.0], [2.0]], array![0.0, 5.0, 10.0]).unwrap();
        let t = TuningSet::new(array![[0.0], [2.0]], array![0.0, 10.0]).unwrap();
        let s = sp(4.0, SUM);
        let trace = tune_epsilon(
            &t,
            &agg,
            &s,
            &GradientDescentConfig {
                epsilon_init: Some(1.0),
                learning_rate: 5.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(trace.records.iter().all(|r| r.epsilon >= 0.0));
        assert_eq!(trace.epsilon_star, 0.0);
        assert_ne!(trace.termination, Termination::MaxIters);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,epsilon,loss,gradient\n0,1,"));
        assert_eq!(text.lines().count(), trace.records.len() + 1);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(SmoothingParams::new(0.0, SUM).is_err());
        assert!(SmoothingParams::new(f64::INFINITY, SUM).is_err());
        let cfg = GradientDescentConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let agg = AggregationSet::new(array![[0.0, 1.0]], array![1.0]).unwrap();
        let t = TuningSet::new(array![[0.0]], array![1.0]).unwrap();
        assert!(squared_loss(&t, &agg, 0.1, &sp(1.0, SUM)).is_err());
    }
}
