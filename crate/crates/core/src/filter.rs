//! Closed-form spectral filter of averaged gradient descent.
//!
//! Averaging the first `t` iterates of the linear gradient recursion (zero
//! start, step `gamma`) acts on a spectral component with symbol `x` as
//! multiplication by `x * filter_gd(t, gamma, x)`, with the leftover mass
//! given by `residual_gd(t, gamma, x)`. The two satisfy
//! `x * q_t(x) + r_t(x) = 1`.

use crate::{Error, Result};

/// Series cutoff: below `t * gamma * x = 0.5` the alternating expansion of
/// the filter converges geometrically and avoids cancellation.
const SERIES_THRESHOLD: f64 = 0.5;
const SERIES_REL_TOL: f64 = 1e-18;
const SERIES_MAX_TERMS: usize = 60;

fn check_inputs(t: u64, gamma: f64, x: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "filter iteration count must be at least 1".to_string(),
        ));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "filter step size must be positive and finite, got {gamma}"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "filter argument must be nonnegative and finite, got {x}"
        )));
    }
    let z = gamma * x;
    if z > 1.0 {
        return Err(Error::Unstable { gamma, rho: x });
    }
    Ok(z)
}

/// Residual factor `r_t(x) = (1 - (1 - gamma x)^t) / (gamma t x)`.
///
/// Exact limits are used at the boundary: `r_t(0) = 1`, `r_t(1/gamma) = 1/t`,
/// and `r_1 = 1` for every admissible `x`.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for `t = 0`, a nonpositive step or a negative
/// `x`; [`Error::Unstable`] when `gamma * x > 1`.
pub fn residual_gd(t: u64, gamma: f64, x: f64) -> Result<f64> {
    let z = check_inputs(t, gamma, x)?;
    if t == 1 {
        return Ok(1.0);
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z == 1.0 {
        return Ok(1.0 / t as f64);
    }
    let tf = t as f64;
    // 1 - (1-z)^t through expm1/ln_1p keeps precision for small z.
    let value = -f64::exp_m1(tf * f64::ln_1p(-z)) / (tf * z);
    Ok(value)
}

/// Last-iterate residual factor `(1 - gamma x)^t`.
///
/// Computed as `exp(t ln_1p(-gamma x))` so small `gamma x` and large `t`
/// keep full precision; `r(0) = 1` and `r(1/gamma) = 0` exactly.
///
/// # Errors
///
/// Same conditions as [`residual_gd`].
pub fn last_residual_gd(t: u64, gamma: f64, x: f64) -> Result<f64> {
    let z = check_inputs(t, gamma, x)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    if z == 1.0 {
        return Ok(0.0);
    }
    Ok(f64::exp(t as f64 * f64::ln_1p(-z)))
}

/// Averaged-iteration filter `q_t(x) = (1 - r_t(x)) / x`.
///
/// At `x = 0` the removable singularity is filled with the analytic limit
/// `gamma (t - 1) / 2`; the first iterate average is identically zero.
///
/// # Errors
///
/// Same conditions as [`residual_gd`].
pub fn filter_gd(t: u64, gamma: f64, x: f64) -> Result<f64> {
    let z = check_inputs(t, gamma, x)?;
    if t == 1 {
        return Ok(0.0);
    }
    let tf = t as f64;
    if tf * z < SERIES_THRESHOLD {
        // q_t = gamma * sum_{j>=0} (-z)^j * C(t, j+2) / t, starting at
        // (t-1)/2 with term ratio -z (t-j-2) / (j+3).
        let mut term = (tf - 1.0) / 2.0;
        let mut sum = term;
        for j in 0..SERIES_MAX_TERMS {
            let jf = j as f64;
            term *= -z * (tf - jf - 2.0) / (jf + 3.0);
            if term == 0.0 {
                break;
            }
            sum += term;
            if term.abs() < SERIES_REL_TOL * sum.abs() {
                break;
            }
        }
        return Ok(gamma * sum);
    }
    let r = residual_gd(t, gamma, x)?;
    Ok((1.0 - r) / x)
}
