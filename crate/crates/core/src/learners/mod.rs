//! Weak learners `r_m` behind one fit/predict contract.

mod lasso;
mod ridge;
mod tree;

pub use lasso::{fit_lasso, lasso_objective, LassoModel};
pub use ridge::{fit_ridge, LinearModel};
pub use tree::{fit_tree, TreeModel, TreeNode};

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Ridge,
    Lasso,
    Tree,
}

/// Hyperparameters for one weak learner. Only the fields of `kind` are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub ridge_lambda: f64,
    pub lasso_lambda: f64,
    pub lasso_max_sweeps: usize,
    pub lasso_tol: f64,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            kind: LearnerKind::Ridge,
            ridge_lambda: 1.0,
            lasso_lambda: 0.1,
            lasso_max_sweeps: 1000,
            lasso_tol: 1e-6,
            tree_max_depth: 6,
            tree_min_leaf: 5,
        }
    }
}

impl LearnerSpec {
    pub fn with_kind(self, kind: LearnerKind) -> Self {
        LearnerSpec { kind, ..self }
    }

    /// Ridge, lasso and tree sharing this spec's hyperparameters, in that
    /// order (estimators #0, #1, #2).
    pub fn standard_trio(self) -> Vec<LearnerSpec> {
        [LearnerKind::Ridge, LearnerKind::Lasso, LearnerKind::Tree]
            .into_iter()
            .map(|k| self.with_kind(k))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match self.kind {
            LearnerKind::Ridge if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) => {
                bad("ridge lambda must be finite and >= 0")
            }
            LearnerKind::Lasso if !(self.lasso_lambda >= 0.0 && self.lasso_lambda.is_finite()) => {
                bad("lasso lambda must be finite and >= 0")
            }
            LearnerKind::Lasso if self.lasso_tol.is_nan() || self.lasso_tol <= 0.0 => bad("lasso tol must be > 0"),
            LearnerKind::Tree if self.tree_min_leaf == 0 => bad("tree min_leaf must be >= 1"),
            _ => Ok(()),
        }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<FittedLearner> {
        self.validate()?;
        Ok(match self.kind {
            LearnerKind::Ridge => FittedLearner::Ridge(fit_ridge(ds, self.ridge_lambda)?),
            LearnerKind::Lasso => {
                FittedLearner::Lasso(fit_lasso(ds, self.lasso_lambda, self.lasso_max_sweeps, self.lasso_tol))
            }
            LearnerKind::Tree => FittedLearner::Tree(fit_tree(ds, self.tree_max_depth, self.tree_min_leaf)),
        })
    }
}

/// A fitted, immutable weak learner. Serializes to JSON with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedLearner {
    Ridge(LinearModel),
    Lasso(LassoModel),
    Tree(TreeModel),
}

impl FittedLearner {
    pub fn kind(&self) -> LearnerKind {
        match self {
            FittedLearner::Ridge(_) => LearnerKind::Ridge,
            FittedLearner::Lasso(_) => LearnerKind::Lasso,
            FittedLearner::Tree(_) => LearnerKind::Tree,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FittedLearner::Ridge(m) => m.coefficients.len(),
            FittedLearner::Lasso(m) => m.model.coefficients.len(),
            FittedLearner::Tree(t) => t.n_features,
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(match self {
            FittedLearner::Ridge(m) => m.predict(x),
            FittedLearner::Lasso(m) => m.model.predict(x),
            FittedLearner::Tree(t) => x.outer_iter().map(|row| t.predict_row(row)).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `n_points x M` matrix with entry `(i, m) = r_m(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix(pub Array2<f64>);

impl PredictionMatrix {
    pub fn n_points(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_machines(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }
}

pub fn fit_all(specs: &[LearnerSpec], ds: &Dataset) -> Result<Vec<FittedLearner>> {
    specs.iter().map(|s| s.fit(ds)).collect()
}

pub fn predict_all(models: &[FittedLearner], x: ArrayView2<'_, f64>) -> Result<PredictionMatrix> {
    if models.is_empty() {
        return Err(Error::Empty);
    }
    let mut out = Array2::zeros((x.nrows(), models.len()));
    for (m, model) in models.iter().enumerate() {
        out.column_mut(m).assign(&model.predict(x)?);
    }
    Ok(PredictionMatrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line_data() -> Dataset {
        let x = Array2::from_shape_fn((12, 2), |(i, j)| {
            (i as f64) * (j as f64 + 1.0).sqrt() + (i * j % 3) as f64
        });
        let y = x.column(0).mapv(|v| 3.0 * v - 1.0) + x.column(1).mapv(|v| 0.5 * v);
        Dataset::from_arrays(x, y).unwrap()
    }

    #[test]
    fn affine_prediction() {
        let m = FittedLearner::Ridge(LinearModel::new(1.0, vec![2.0]));
        let p = m.predict(array![[3.0]].view()).unwrap();
        assert_eq!(p[0], 7.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let ds = line_data();
        let model = LearnerSpec::default().fit(&ds).unwrap();
        let err = model.predict(Array2::zeros((3, 5)).view()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 5 }));
        assert!(predict_all(&[model], Array2::zeros((1, 1)).view()).is_err());
    }

    #[test]
    fn predict_all_columns_match_individual_calls() {
        let ds = line_data();
        let models = fit_all(&LearnerSpec::default().standard_trio(), &ds).unwrap();
        let pm = predict_all(&models, ds.features.view()).unwrap();
        assert_eq!(pm.0.dim(), (12, 3));
        for (m, model) in models.iter().enumerate() {
            let p = model.predict(ds.features.view()).unwrap();
            assert_eq!(pm.0.column(m).to_vec(), p.to_vec());
            assert_eq!(model.predict(ds.features.view()).unwrap(), p);
        }
        let single = predict_all(&models[2..], ds.features.view()).unwrap();
        assert_eq!(single.0.column(0), pm.0.column(2));
    }

    #[test]
    fn json_round_trip_all_kinds() {
        let ds = line_data();
        for model in fit_all(&LearnerSpec::default().standard_trio(), &ds).unwrap() {
            let text = model.to_json().unwrap();
            assert!(text.contains("\"kind\""));
            let back = FittedLearner::from_json(&text).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let ds = line_data();
        let s = LearnerSpec {
            ridge_lambda: -1.0,
            ..Default::default()
        };
        assert!(s.fit(&ds).is_err());
        let s = LearnerSpec {
            tree_min_leaf: 0,
            ..Default::default()
        }
        .with_kind(LearnerKind::Tree);
        assert!(s.fit(&ds).is_err());
    }
}
