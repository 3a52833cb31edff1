//! Least-squares slope fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("abscissae have zero spread")]
    Degenerate,
    #[error("log-log fit needs positive finite samples, got ({0}, {1})")]
    NonPositive(f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// The samples as given (not log-transformed).
    pub samples: Vec<(f64, f64)>,
    pub log_log: bool,
}

impl SlopeFit {
    pub fn predict(&self, x: f64) -> f64 {
        if self.log_log {
            (self.intercept + self.slope * x.ln()).exp()
        } else {
            self.intercept + self.slope * x
        }
    }
}

/// Ordinary least squares of `y` on `x`, or of `ln y` on `ln x` when `log_log`.
pub fn fit_slope(samples: &[(f64, f64)], log_log: bool) -> Result<SlopeFit, FitError> {
    if samples.len() < 3 {
        return Err(FitError::TooFewSamples(samples.len()));
    }
    let mut pts = Vec::with_capacity(samples.len());
    for &(x, y) in samples {
        if log_log {
            if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
                return Err(FitError::NonPositive(x, y));
            }
            pts.push((x.ln(), y.ln()));
        } else {
            pts.push((x, y));
        }
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * pts.iter().map(|p| p.0 * p.0).sum::<f64>().max(f64::MIN_POSITIVE) {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(SlopeFit { slope, intercept, r2, samples: samples.to_vec(), log_log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_laws() {
        let sq: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, (i * i) as f64)).collect();
        let f = fit_slope(&sq, true).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.predict(7.0) - 49.0).abs() < 1e-9);

        let p: Vec<(f64, f64)> = [2.0, 3.0, 5.0, 8.0].iter().map(|&x: &f64| (x, 0.3 * x.powf(-1.5))).collect();
        assert!((fit_slope(&p, true).unwrap().slope + 1.5).abs() < 1e-12);

        let flat: Vec<(f64, f64)> = (1..5).map(|i| (i as f64, 4.0)).collect();
        let f = fit_slope(&flat, true).unwrap();
        assert!(f.slope.abs() < 1e-14);
    }

    #[test]
    fn linear_fit() {
        let s = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)];
        let f = fit_slope(&s, false).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_slope(&[(1.0, 1.0), (2.0, 2.0)], false), Err(FitError::TooFewSamples(2)));
        assert_eq!(fit_slope(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)], false), Err(FitError::Degenerate));
        assert!(matches!(fit_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 3.0)], true), Err(FitError::NonPositive(..))));
    }
}
