//! Dataset ingestion, seeded splitting and feature standardization.

use std::fs::File;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::rng::permutation;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        targets: Array1<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!("shape {n}x{d} is empty")));
        }
        if targets.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} targets for {n} feature rows",
                targets.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {d} columns",
                feature_names.len()
            )));
        }
        if features.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite value".into()));
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
            target_name: target_name.into(),
        })
    }

    /// Unnamed dataset, columns called `x0..x{d-1}` and target `y`.
    pub fn from_arrays(features: Array2<f64>, targets: Array1<f64>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(features, targets, names, "y")
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
        }
    }
}

/// Reads a headed CSV. Every column other than `target_column` becomes a
/// feature, in file order.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let d = feature_names.len();
    let mut flat = Vec::new();
    let mut targets = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidDataset(format!(
                "row {} has {} fields, header has {}",
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let value = cell
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    row: row + 1,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?;
            if j == target_idx {
                targets.push(value);
            } else {
                flat.push(value);
            }
        }
    }
    let n = targets.len();
    let features = Array2::from_shape_vec((n, d), flat).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(features, Array1::from(targets), feature_names, target_column)
}

/// Writes features in column order followed by the target. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = ds.feature_names.clone();
    header.push(ds.target_name.clone());
    writer.write_record(&header)?;
    for (row, y) in ds.features.outer_iter().zip(ds.targets.iter()) {
        let record: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| v.to_string()).collect();
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// `floor(fraction * n)`, tolerant of representation error such as
/// `0.7 * 10 = 7.000000000000001`.
fn first_side_len(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Index partition of `0..n` into a first side of `floor(fraction * n)`
/// shuffled rows and the remainder.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidSplit(format!("fraction {fraction} not in (0, 1)")));
    }
    let k = first_side_len(fraction, n);
    if k == 0 || k == n {
        return Err(Error::InvalidSplit(format!(
            "fraction {fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut perm = permutation(n, seed);
    let rest = perm.split_off(k);
    Ok((perm, rest))
}

pub fn train_test_split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n_rows(), spec.train_fraction, spec.seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Splits training data into the machine-training part `D_k` and the
/// aggregation part `D_l`.
pub fn split_for_cobra(train: &Dataset, machine_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (dk, dl) = split_indices(train.n_rows(), machine_fraction, seed)?;
    Ok((train.select(&dk), train.select(&dl)))
}

/// `n` rows drawn without replacement.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || n > ds.n_rows() {
        return Err(Error::InvalidSplit(format!(
            "subsample of {n} rows from {}",
            ds.n_rows()
        )));
    }
    let mut perm = permutation(ds.n_rows(), seed);
    perm.truncate(n);
    Ok(ds.select(&perm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Column means and population standard deviations. Constant columns get
/// `std = 1` so they standardize to zero.
pub fn standardize_fit(ds: &Dataset) -> StandardizationParams {
    fit_columns(&ds.features)
}

pub(crate) fn fit_columns(x: &Array2<f64>) -> StandardizationParams {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut stds = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        means.push(mean);
        stds.push(if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 });
    }
    StandardizationParams { means, stds }
}

impl StandardizationParams {
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: x.ncols(),
            });
        }
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.stds[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn inverse(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: z.ncols(),
            });
        }
        let mut out = z.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.means[j], self.stds[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }
}

pub fn standardize_apply(ds: &Dataset, params: &StandardizationParams) -> Result<Dataset> {
    Ok(Dataset {
        features: params.transform(&ds.features)?,
        ..ds.clone()
    })
}

pub fn standardize_invert(ds: &Dataset, params: &StandardizationParams) -> Result<Dataset> {
    Ok(Dataset {
        features: params.inverse(&ds.features)?,
        ..ds.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::collections::HashSet;
    use std::io::Write;

    fn toy(n: usize) -> Dataset {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let y = Array1::from_shape_fn(n, |i| i as f64);
        Dataset::from_arrays(x, y).unwrap()
    }

    #[test]
    fn load_reports_bad_cell_position() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b,y\n1,2,3\n4,abc,6").unwrap();
        let err = load_csv(f.path(), "y").unwrap_err();
        match err {
            Error::BadCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_rejects_nan_and_missing_target() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,y\n1,NaN").unwrap();
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::BadCell { .. })));
        assert!(matches!(load_csv(f.path(), "z"), Err(Error::MissingTarget(_))));
        assert!(matches!(load_csv("/nonexistent/file.csv", "y"), Err(Error::Io { .. })));
    }

    #[test]
    fn load_moves_target_out_of_features() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,y,b\n1,10,2\n3,30,4").unwrap();
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(ds.features, array![[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(ds.targets, array![10.0, 30.0]);
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let ds = toy(506);
        let (tr, te) = train_test_split(
            &ds,
            SplitSpec {
                train_fraction: 0.8,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!((tr.n_rows(), te.n_rows()), (404, 102));
        let (dk, dl) = split_for_cobra(&tr, 0.5, 3).unwrap();
        assert_eq!((dk.n_rows(), dl.n_rows()), (202, 202));

        let (a, b) = train_test_split(
            &toy(2),
            SplitSpec {
                train_fraction: 0.5,
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!((a.n_rows(), b.n_rows()), (1, 1));
    }

    #[test]
    fn split_is_partition_and_seeded() {
        let (a, b) = split_indices(404, 0.5, 11).unwrap();
        let (a2, b2) = split_indices(404, 0.5, 11).unwrap();
        assert_eq!((&a, &b), (&a2, &b2));
        let all: HashSet<usize> = a.iter().chain(b.iter()).copied().collect();
        assert_eq!(all.len(), 404);
        let (c, _) = split_indices(404, 0.5, 12).unwrap();
        assert_eq!(c.len(), a.len());
        assert_ne!(c, a);
    }

    #[test]
    fn degenerate_splits_error() {
        let ds = toy(10);
        assert!(split_for_cobra(&ds, 1.0, 0).is_err());
        assert!(split_for_cobra(&ds, 0.01, 0).is_err());
        assert!(subsample(&ds, 0, 0).is_err());
        assert!(subsample(&ds, 11, 0).is_err());
    }

    #[test]
    fn full_subsample_is_permutation() {
        let ds = toy(30);
        let s = subsample(&ds, 30, 5).unwrap();
        let mut ys: Vec<f64> = s.targets.to_vec();
        ys.sort_by(f64::total_cmp);
        assert_eq!(ys, ds.targets.to_vec());
    }

    #[test]
    fn standardize_known_column() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        let ds = Dataset::from_arrays(x, array![0.0, 1.0, 2.0]).unwrap();
        let p = standardize_fit(&ds);
        assert!((p.means[0] - 2.0).abs() < 1e-15);
        assert!((p.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(p.stds[1], 1.0);
        let z = standardize_apply(&ds, &p).unwrap();
        let expect = [-1.2247, 0.0, 1.2247];
        for (v, e) in z.features.column(0).iter().zip(expect) {
            assert!((v - e).abs() < 1e-4);
        }
        assert!(z.features.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_round_trip() {
        let x = Array2::from_shape_fn((20, 3), |(i, j)| {
            ((i * 7 + j * 13) % 11) as f64 * 3.7 - 4.0 + j as f64 * 1e3
        });
        let ds = Dataset::from_arrays(x, Array1::zeros(20)).unwrap();
        let p = standardize_fit(&ds);
        let back = standardize_invert(&standardize_apply(&ds, &p).unwrap(), &p).unwrap();
        for (a, b) in back.features.iter().zip(ds.features.iter()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }
}
