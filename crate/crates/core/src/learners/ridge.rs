use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// `y = intercept + x . coefficients`, with each input first clamped to
/// `input_range` (the per-column span of the fitting data) when one is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_range: Vec<(f64, f64)>,
}

impl LinearModel {
    pub fn new(intercept: f64, coefficients: Vec<f64>) -> Self {
        LinearModel {
            intercept,
            coefficients,
            input_range: Vec::new(),
        }
    }

    /// Records the column ranges of `x` so predictions never extrapolate
    /// beyond the fitting data along any single feature.
    pub(crate) fn clamped_to(mut self, x: ArrayView2<'_, f64>) -> Self {
        self.input_range = x
            .columns()
            .into_iter()
            .map(|c| {
                c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect();
        self
    }

    pub(crate) fn predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let beta = Array1::from(self.coefficients.clone());
        if self.input_range.is_empty() {
            return x.dot(&beta) + self.intercept;
        }
        let mut x = x.to_owned();
        for (mut col, &(lo, hi)) in x.columns_mut().into_iter().zip(&self.input_range) {
            col.mapv_inplace(|v| v.clamp(lo, hi));
        }
        x.dot(&beta) + self.intercept
    }
}

/// Ridge regression on centered data: `(Xc'Xc + lambda I) beta = Xc'yc`,
/// intercept recovered from the column means and never penalized.
pub fn fit_ridge(ds: &Dataset, lambda: f64) -> Result<LinearModel> {
    let x = &ds.features;
    let y = &ds.targets;
    let x_mean = x.mean_axis(Axis(0)).ok_or(Error::Empty)?;
    let y_mean = y.mean().ok_or(Error::Empty)?;
    let xc = x - &x_mean;
    let yc = y - y_mean;

    let mut gram = xc.t().dot(&xc);
    for j in 0..gram.nrows() {
        gram[[j, j]] += lambda;
    }
    let rhs = xc.t().dot(&yc);
    let beta = cholesky_solve(gram, rhs).ok_or(Error::Singular { lambda })?;
    let intercept = y_mean - x_mean.dot(&beta);
    Ok(LinearModel::new(intercept, beta.to_vec()).clamped_to(x.view()))
}

/// Solves `A z = b` for symmetric positive definite `A`; `None` when a
/// pivot collapses relative to the largest diagonal entry.
fn cholesky_solve(mut a: Array2<f64>, b: Array1<f64>) -> Option<Array1<f64>> {
    let d = a.nrows();
    let scale = a
        .diag()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    // lower factor overwrites the lower triangle of a
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= a[[j, k]] * a[[j, k]];
        }
        if diag.is_nan() || diag <= 1e-12 * scale {
            return None;
        }
        let l_jj = diag.sqrt();
        a[[j, j]] = l_jj;
        for i in j + 1..d {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / l_jj;
        }
    }
    let mut z = b;
    for i in 0..d {
        let mut s = z[i];
        for k in 0..i {
            s -= a[[i, k]] * z[k];
        }
        z[i] = s / a[[i, i]];
    }
    for i in (0..d).rev() {
        let mut s = z[i];
        for k in i + 1..d {
            s -= a[[k, i]] * z[k];
        }
        z[i] = s / a[[i, i]];
    }
    Some(z)
}
