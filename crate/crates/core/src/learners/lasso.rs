use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::LinearModel;
use crate::data::{fit_columns, Dataset};

/// Lasso fit reported in original feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    #[serde(flatten)]
    pub model: LinearModel,
    pub sweeps: usize,
    pub converged: bool,
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// `(1/2n) |y - X beta|^2 + lambda |beta|_1` for centered `y` and
/// standardized `X`.
pub fn lasso_objective(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, beta: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let beta = ArrayView1::from(beta);
    let r = &y - &x.dot(&beta);
    r.dot(&r) / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Cyclic coordinate descent on standardized features and centered target.
/// Returns `(beta, objective after each sweep, converged)`.
pub(crate) fn coordinate_descent(
    z: &Array2<f64>,
    yc: &Array1<f64>,
    lambda: f64,
    max_sweeps: usize,
    tol: f64,
) -> (Vec<f64>, Vec<f64>, bool) {
    let (n, d) = z.dim();
    let nf = n as f64;
    // (1/n)|z_j|^2 is 1 for a standardized column and 0 for a constant one
    let col_sq: Vec<f64> = z.columns().into_iter().map(|c| c.dot(&c) / nf).collect();
    let mut beta = vec![0.0; d];
    let mut resid = yc.clone();
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..max_sweeps {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if col_sq[j] <= 0.0 {
                continue;
            }
            let col = z.column(j);
            let rho = col.dot(&resid) / nf + col_sq[j] * beta[j];
            let updated = soft_threshold(rho, lambda) / col_sq[j];
            let delta = updated - beta[j];
            if delta != 0.0 {
                resid.scaled_add(-delta, &col);
                beta[j] = updated;
            }
            max_delta = max_delta.max(delta.abs());
        }
        history.push(lasso_objective(z.view(), yc.view(), &beta, lambda));
        if max_delta < tol {
            converged = true;
            break;
        }
    }
    (beta, history, converged)
}

pub fn fit_lasso(ds: &Dataset, lambda: f64, max_sweeps: usize, tol: f64) -> LassoModel {
    fit_lasso_traced(ds, lambda, max_sweeps, tol).0
}

/// As [`fit_lasso`], also returning the objective after every sweep.
pub(crate) fn fit_lasso_traced(ds: &Dataset, lambda: f64, max_sweeps: usize, tol: f64) -> (LassoModel, Vec<f64>) {
    let scaler = fit_columns(&ds.features);
    let z = scaler.transform(&ds.features).expect("scaler fitted on these columns");
    let y_mean = ds.targets.mean().unwrap_or(0.0);
    let yc = &ds.targets - y_mean;
    let (beta_std, history, converged) = coordinate_descent(&z, &yc, lambda, max_sweeps, tol);

    let coefficients: Vec<f64> = beta_std.iter().zip(&scaler.stds).map(|(b, s)| b / s).collect();
    let intercept = y_mean - coefficients.iter().zip(&scaler.means).map(|(b, m)| b * m).sum::<f64>();
    let model = LassoModel {
        model: LinearModel::new(intercept, coefficients).clamped_to(ds.features.view()),
        sweeps: history.len(),
        converged,
    };
    (model, history)
}
