//! Ordinary least squares in log-log coordinates and small aggregation
//! helpers shared by the experiment drivers.

use crate::{Error, Result};

/// Result of a least-squares line fit on log-transformed data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Fitted slope of `ln y` against `ln x`.
    pub slope: f64,
    /// Fitted intercept in log coordinates.
    pub intercept: f64,
    /// Standard error of the slope, estimated from the fit residuals.
    pub stderr: f64,
    /// Number of points used.
    pub points: usize,
}

/// Fits `ln y = intercept + slope * ln x` by ordinary least squares.
///
/// The slope standard error is `sqrt(SSR / (k - 2) / Sxx)` where `SSR` is the
/// residual sum of squares; an exact power law therefore reports a standard
/// error of zero.
///
/// # Arguments
///
/// * `points` - `(x, y)` pairs; at least 3 are required and both coordinates
///   must be strictly positive so the logarithms exist.
///
/// # Errors
///
/// [`Error::InvalidArgument`] when fewer than 3 points are supplied or any
/// coordinate is not strictly positive and finite.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !(x > 0.0) || !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "slope fit requires strictly positive finite points, got ({x}, {y})"
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "slope fit requires at least two distinct x values".to_string(),
        ));
    }
    let sxy: f64 = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = logs
        .iter()
        .map(|p| {
            let fitted = intercept + slope * p.0;
            (p.1 - fitted).powi(2)
        })
        .sum();
    let df = k - 2.0;
    let variance = if df > 0.0 { (ssr / df / sxx).max(0.0) } else { 0.0 };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr: variance.sqrt(),
        points: points.len(),
    })
}

/// Returns the sample mean and the standard error of the mean.
///
/// The standard error uses the unbiased sample variance; with fewer than two
/// values it is reported as zero.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
