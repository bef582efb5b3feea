use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub r2: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Self> {
        Ok(EvalReport {
            mse: mse(y_true, y_pred)?,
            r2: r2(y_true, y_pred)?,
            n: y_true.len(),
        })
    }
}

fn check(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

fn sum_sq_residual(y_true: &[f64], y_pred: &[f64]) -> f64 {
    y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum()
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    Ok(sum_sq_residual(y_true, y_pred) / y_true.len() as f64)
}

/// `1 - SS_res / SS_tot`, with `SS_tot` taken about the mean of `y_true`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    if y_true.len() < 2 {
        return Err(Error::InvalidParameter("r2 needs at least two points".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(1.0 - sum_sq_residual(y_true, y_pred) / ss_tot)
}

/// Runs `f` and returns its result with the elapsed wall time in seconds,
/// rounded to milliseconds.
pub fn timed<T, E>(f: impl FnOnce() -> std::result::Result<T, E>) -> std::result::Result<(T, f64), E> {
    let start = Instant::now();
    let out = f()?;
    let secs = (start.elapsed().as_secs_f64() * 1e3).round() / 1e3;
    Ok((out, secs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mse(&[3.0, 1.0, 2.0], &[4.0, 1.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(mse(&[], &[]), Err(Error::Empty)));
    }

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(r2(&y, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((r2(&y, &[1.0, 2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(r2(&[4.0, 4.0], &[1.0, 2.0]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn r2_mse_identity() {
        let y = [3.0, -1.0, 4.5, 2.0, 0.0];
        let p = [2.5, 0.0, 4.0, 2.5, -1.0];
        let mean = y.iter().sum::<f64>() / 5.0;
        let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let lhs = r2(&y, &p).unwrap();
        let rhs = 1.0 - 5.0 * mse(&y, &p).unwrap() / ss_tot;
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn timing() {
        let (v, t) = timed(|| Ok::<_, Error>(5)).unwrap();
        assert_eq!(v, 5);
        assert!(t < 1e-3);
        let (_, t) = timed(|| {
            std::thread::sleep(std::time::Duration::from_millis(100));
            Ok::<_, Error>(())
        })
        .unwrap();
        assert!((0.099..0.5).contains(&t));
        assert!(timed(|| Err::<(), _>(Error::Empty)).is_err());
    }
}
