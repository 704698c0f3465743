//! Averaged gradient descent on the empirical least-squares objective, its
//! noiseless population analogue, and a ridge comparator.
//!
//! In basis coordinates the update reads
//! `theta_t = theta_{t-1} + gamma (b - M theta_{t-1})` with
//! `M = Lambda G P`, where `G = E^T E / n` is the Gram matrix of basis
//! evaluations at the sample points, `Lambda` and `P` are the diagonal
//! symbol matrices, and `b = Lambda Q E^T y / n`. The operator is applied in
//! exactly this asymmetric order; the averaged iterate is
//! `avg_t = (1/t) sum_{s=0}^{t-1} theta_s`, so the first average is zero.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::TorusBasis;
use crate::data::Dataset;
use crate::filter;
use crate::spectral::{FunctionCoeffs, SpectrumSpec, POWER_SUM_OVERFLOW};
use crate::{Error, Result};

const POWER_ITERATIONS: usize = 200;

/// Settings for one gradient descent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GDConfig {
    /// Step size; must keep `gamma * rho < 1` against the empirical radius.
    pub gamma: f64,
    /// Number of iterations to perform.
    pub t_max: u64,
    /// Stride between error records; the initial and final states are always
    /// recorded.
    pub record_every: u64,
    /// Whether averaged iterates and their errors are tracked.
    pub averaging: bool,
}

impl GDConfig {
    /// Validates the step size and stride.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] for a nonpositive step or a zero stride.
    pub fn new(gamma: f64, t_max: u64, record_every: u64, averaging: bool) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive and finite, got {gamma}"
            )));
        }
        if record_every == 0 {
            return Err(Error::InvalidArgument(
                "record stride must be at least 1".to_string(),
            ));
        }
        Ok(Self {
            gamma,
            t_max,
            record_every,
            averaging,
        })
    }
}

/// One recorded point of a run: squared weighted-norm errors per requested
/// evaluation exponent, for the raw iterate and (when tracked) the average.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Iteration counter the record was taken at.
    pub t: u64,
    /// Squared errors of the raw iterate, aligned with `gammas_eval`.
    pub error_sq_raw: Vec<f64>,
    /// Squared errors of the averaged iterate, when averaging is on.
    pub error_sq_avg: Option<Vec<f64>>,
}

/// Error history of a run plus the final iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    gammas_eval: Vec<f64>,
    records: Vec<TrajectoryRecord>,
    final_raw: FunctionCoeffs,
    final_averaged: Option<FunctionCoeffs>,
}

impl Trajectory {
    /// Evaluation exponents the errors were computed for.
    pub fn gammas_eval(&self) -> &[f64] {
        &self.gammas_eval
    }

    /// All recorded points in iteration order.
    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    /// Final raw iterate.
    pub fn final_raw(&self) -> &FunctionCoeffs {
        &self.final_raw
    }

    /// Final averaged iterate, when averaging was on.
    pub fn final_averaged(&self) -> Option<&FunctionCoeffs> {
        self.final_averaged.as_ref()
    }

    /// Squared error at iteration `t` for evaluation exponent index
    /// `gamma_idx`, if that iteration was recorded.
    pub fn error_sq(&self, t: u64, gamma_idx: usize, averaged: bool) -> Option<f64> {
        let record = self.records.iter().find(|r| r.t == t)?;
        if averaged {
            record.error_sq_avg.as_ref()?.get(gamma_idx).copied()
        } else {
            record.error_sq_raw.get(gamma_idx).copied()
        }
    }

    /// Iteration (at least 1) minimizing the averaged squared error for the
    /// given evaluation exponent, with the attained value.
    pub fn argmin_averaged(&self, gamma_idx: usize) -> Option<(u64, f64)> {
        let mut best: Option<(u64, f64)> = None;
        for record in &self.records {
            if record.t == 0 {
                continue;
            }
            let err = record.error_sq_avg.as_ref()?.get(gamma_idx).copied()?;
            if best.map_or(true, |(_, b)| err < b) {
                best = Some((record.t, err));
            }
        }
        best
    }

    /// Writes records as CSV with columns `t, gamma_eval, error_sq,
    /// averaged_flag`; averaged rows follow raw rows for each record.
    ///
    /// # Errors
    ///
    /// I/O and CSV failures.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["t", "gamma_eval", "error_sq", "averaged_flag"])?;
        for record in &self.records {
            for (k, &g) in self.gammas_eval.iter().enumerate() {
                writer.write_record([
                    record.t.to_string(),
                    format!("{g}"),
                    format!("{}", record.error_sq_raw[k]),
                    "false".to_string(),
                ])?;
            }
            if let Some(avg) = &record.error_sq_avg {
                for (k, &g) in self.gammas_eval.iter().enumerate() {
                    writer.write_record([
                        record.t.to_string(),
                        format!("{g}"),
                        format!("{}", avg[k]),
                        "true".to_string(),
                    ])?;
                }
            }
        }
        writer.flush().map_err(Error::Io)?;
        Ok(())
    }
}

/// Precomputed empirical quantities of one dataset: Gram matrix, right-hand
/// side, diagonal symbols, and a spectral radius estimate.
#[derive(Debug, Clone)]
pub struct EmpiricalSystem {
    n_modes: usize,
    gram: Vec<f64>,
    b: Vec<f64>,
    lambda: Vec<f64>,
    p_w: Vec<f64>,
    rho_hat: f64,
}

impl EmpiricalSystem {
    /// Evaluates the basis at every sample point and assembles `G`, `b` and
    /// the power-iteration radius estimate. Costs `O(n N^2)` once; every
    /// subsequent iteration is `O(N^2)`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] when the dataset dimension disagrees with
    /// the spec.
    pub fn build(data: &Dataset, spec: &SpectrumSpec) -> Result<Self> {
        if data.dimension() != spec.dimension() {
            return Err(Error::InvalidArgument(format!(
                "dataset dimension {} differs from spec dimension {}",
                data.dimension(),
                spec.dimension()
            )));
        }
        let model = spec.diagonal_model();
        Self::build_with_model(
            data,
            model.lambda(),
            model.p_weights(),
            model.q_weights(),
        )
    }

    /// Same assembly as [`EmpiricalSystem::build`] but with explicit
    /// per-mode eigenvalues and symbol vectors instead of power laws.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] when the vectors disagree in length, are
    /// empty, or contain nonpositive entries.
    pub fn build_with_model(
        data: &Dataset,
        lambda: &[f64],
        p_w: &[f64],
        q_w: &[f64],
    ) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != p_w.len() || lambda.len() != q_w.len() {
            return Err(Error::InvalidArgument(format!(
                "model vectors disagree in length: {} / {} / {}",
                lambda.len(),
                p_w.len(),
                q_w.len()
            )));
        }
        if lambda
            .iter()
            .chain(p_w)
            .chain(q_w)
            .any(|&v| !v.is_finite() || v <= 0.0)
        {
            return Err(Error::InvalidArgument(
                "model vectors must be positive and finite".to_string(),
            ));
        }
        let n = data.n();
        let n_modes = lambda.len();
        let basis = TorusBasis::new(data.dimension(), n_modes)?;

        let mut design = vec![0.0f64; n * n_modes];
        design
            .par_chunks_mut(n_modes)
            .enumerate()
            .try_for_each(|(j, row)| basis.row(data.point(j), row))?;

        // Upper triangle of G = E^T E / n, one row per task, then mirrored.
        let inv_n = 1.0 / n as f64;
        let upper: Vec<Vec<f64>> = (0..n_modes)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0f64; n_modes - i];
                for j in 0..n {
                    let e_row = &design[j * n_modes..(j + 1) * n_modes];
                    let e_ji = e_row[i];
                    for (offset, slot) in row.iter_mut().enumerate() {
                        *slot += e_ji * e_row[i + offset];
                    }
                }
                for slot in row.iter_mut() {
                    *slot *= inv_n;
                }
                row
            })
            .collect();
        let mut gram = vec![0.0f64; n_modes * n_modes];
        for (i, row) in upper.iter().enumerate() {
            for (offset, &v) in row.iter().enumerate() {
                let k = i + offset;
                gram[i * n_modes + k] = v;
                gram[k * n_modes + i] = v;
            }
        }

        let mut b = vec![0.0f64; n_modes];
        for (i, slot) in b.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += design[j * n_modes + i] * data.ys()[j];
            }
            *slot = lambda[i] * q_w[i] * acc * inv_n;
        }

        let mut system = Self {
            n_modes,
            gram,
            b,
            lambda: lambda.to_vec(),
            p_w: p_w.to_vec(),
            rho_hat: 0.0,
        };
        system.rho_hat = system.estimate_radius();
        Ok(system)
    }

    /// Power-iteration estimate of the spectral radius of `Lambda G P`.
    pub fn spectral_radius(&self) -> f64 {
        self.rho_hat
    }

    /// Number of retained modes.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `Lambda G P` shares its spectrum with the symmetric matrix
    /// `D^(1/2) G D^(1/2)`, `D = diag(lambda_i p_i)`, so plain power
    /// iteration from the all-ones vector converges to the radius.
    fn estimate_radius(&self) -> f64 {
        let n = self.n_modes;
        let d_sqrt: Vec<f64> = self
            .lambda
            .iter()
            .zip(&self.p_w)
            .map(|(&l, &p)| (l * p).sqrt())
            .collect();
        let mut v = vec![1.0f64; n];
        let mut w = vec![0.0f64; n];
        for _ in 0..POWER_ITERATIONS {
            for i in 0..n {
                w[i] = d_sqrt[i] * v[i];
            }
            self.gram_mul(&w, &mut v);
            let mut norm_sq = 0.0;
            for i in 0..n {
                v[i] *= d_sqrt[i];
                norm_sq += v[i] * v[i];
            }
            let norm = norm_sq.sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for value in v.iter_mut() {
                *value /= norm;
            }
        }
        // Rayleigh quotient of the normalized final vector.
        for i in 0..n {
            w[i] = d_sqrt[i] * v[i];
        }
        let mut gv = vec![0.0f64; n];
        self.gram_mul(&w, &mut gv);
        let mut quotient = 0.0;
        for i in 0..n {
            quotient += v[i] * d_sqrt[i] * gv[i];
        }
        quotient.max(0.0)
    }

    fn gram_mul(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_modes;
        for (i, slot) in out.iter_mut().enumerate() {
            let row = &self.gram[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for k in 0..n {
                acc += row[k] * x[k];
            }
            *slot = acc;
        }
    }

    /// Runs averaged gradient descent against this system.
    ///
    /// # Errors
    ///
    /// [`Error::Unstable`] when `gamma * rho_hat >= 1`;
    /// [`Error::Diverged`] when any coefficient leaves the overflow guard;
    /// [`Error::IndexOutOfRange`] when the target exceeds the mode count.
    pub fn run(
        &self,
        config: &GDConfig,
        target: &FunctionCoeffs,
        gammas_eval: &[f64],
    ) -> Result<Trajectory> {
        if target.len() > self.n_modes {
            return Err(Error::IndexOutOfRange {
                index: target.len(),
                max: self.n_modes,
            });
        }
        if config.gamma * self.rho_hat >= 1.0 {
            return Err(Error::Unstable {
                gamma: config.gamma,
                rho: self.rho_hat,
            });
        }
        let n = self.n_modes;
        let mut padded_target = vec![0.0f64; n];
        padded_target[..target.len()].copy_from_slice(target.coeffs());
        let weights: Vec<Vec<f64>> = gammas_eval
            .iter()
            .map(|&g| self.lambda.iter().map(|&l| l.powf(-g)).collect())
            .collect();

        let error_sq = |theta: &[f64]| -> Vec<f64> {
            weights
                .iter()
                .map(|w| {
                    let mut acc = 0.0;
                    for i in 0..n {
                        let diff = theta[i] - padded_target[i];
                        acc += w[i] * diff * diff;
                    }
                    acc
                })
                .collect()
        };

        let mut theta = vec![0.0f64; n];
        let mut sum = vec![0.0f64; n];
        let mut averaged = vec![0.0f64; n];
        let mut records = Vec::new();
        let initial = error_sq(&theta);
        records.push(TrajectoryRecord {
            t: 0,
            error_sq_raw: initial.clone(),
            error_sq_avg: config.averaging.then(|| initial),
        });

        let mut p_theta = vec![0.0f64; n];
        let mut g_vec = vec![0.0f64; n];
        for t in 1..=config.t_max {
            for i in 0..n {
                sum[i] += theta[i];
            }
            for i in 0..n {
                p_theta[i] = self.p_w[i] * theta[i];
            }
            self.gram_mul(&p_theta, &mut g_vec);
            let mut max_abs = 0.0f64;
            for i in 0..n {
                theta[i] += config.gamma * (self.b[i] - self.lambda[i] * g_vec[i]);
                max_abs = max_abs.max(theta[i].abs());
            }
            if max_abs > POWER_SUM_OVERFLOW {
                return Err(Error::Diverged { iteration: t });
            }
            if t % config.record_every == 0 || t == config.t_max {
                let error_sq_avg = config.averaging.then(|| {
                    let inv_t = 1.0 / t as f64;
                    for i in 0..n {
                        averaged[i] = sum[i] * inv_t;
                    }
                    error_sq(&averaged)
                });
                records.push(TrajectoryRecord {
                    t,
                    error_sq_raw: error_sq(&theta),
                    error_sq_avg,
                });
            }
        }

        let final_averaged = config.averaging.then(|| {
            if config.t_max == 0 {
                FunctionCoeffs::new(vec![0.0; n])
            } else {
                let inv_t = 1.0 / config.t_max as f64;
                FunctionCoeffs::new(sum.iter().map(|&s| s * inv_t).collect())
            }
        });
        Ok(Trajectory {
            gammas_eval: gammas_eval.to_vec(),
            records,
            final_raw: FunctionCoeffs::new(theta),
            final_averaged,
        })
    }

    /// Runs the same recursion as [`EmpiricalSystem::run`] without averaging
    /// and returns the squared distance of the iterate to `target` after
    /// every step, measured in the diagonal norm given by `weights`. Entry
    /// `t - 1` of the result belongs to iteration `t`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] for a bad step size or weight vector;
    /// [`Error::Unstable`] when `gamma * rho_hat >= 1`;
    /// [`Error::Diverged`] on overflow;
    /// [`Error::IndexOutOfRange`] when the target exceeds the mode count.
    pub fn raw_error_curve(
        &self,
        gamma: f64,
        t_max: u64,
        target: &FunctionCoeffs,
        weights: &[f64],
    ) -> Result<Vec<f64>> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive and finite, got {gamma}"
            )));
        }
        if target.len() > self.n_modes {
            return Err(Error::IndexOutOfRange {
                index: target.len(),
                max: self.n_modes,
            });
        }
        if weights.len() != self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "weight vector has length {}, expected {}",
                weights.len(),
                self.n_modes
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidArgument(
                "error weights must be finite and nonnegative".to_string(),
            ));
        }
        if gamma * self.rho_hat >= 1.0 {
            return Err(Error::Unstable {
                gamma,
                rho: self.rho_hat,
            });
        }
        let n = self.n_modes;
        let mut padded_target = vec![0.0f64; n];
        padded_target[..target.len()].copy_from_slice(target.coeffs());
        let mut theta = vec![0.0f64; n];
        let mut p_theta = vec![0.0f64; n];
        let mut g_vec = vec![0.0f64; n];
        let mut curve = Vec::with_capacity(t_max as usize);
        for t in 1..=t_max {
            for i in 0..n {
                p_theta[i] = self.p_w[i] * theta[i];
            }
            self.gram_mul(&p_theta, &mut g_vec);
            let mut max_abs = 0.0f64;
            for i in 0..n {
                theta[i] += gamma * (self.b[i] - self.lambda[i] * g_vec[i]);
                max_abs = max_abs.max(theta[i].abs());
            }
            if max_abs > POWER_SUM_OVERFLOW {
                return Err(Error::Diverged { iteration: t });
            }
            let mut err = 0.0;
            for i in 0..n {
                let diff = theta[i] - padded_target[i];
                err += weights[i] * diff * diff;
            }
            curve.push(err);
        }
        Ok(curve)
    }

    /// Solves the regularized normal system `(Lambda G P + lam I) theta = b`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] for a nonpositive `lam`;
    /// [`Error::SingularSystem`] when the LU solve fails.
    pub fn ridge(&self, lam: f64) -> Result<FunctionCoeffs> {
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ridge parameter must be positive and finite, got {lam}"
            )));
        }
        let n = self.n_modes;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                let mut value = self.lambda[i] * self.gram[i * n + k] * self.p_w[k];
                if i == k {
                    value += lam;
                }
                m[(i, k)] = value;
            }
        }
        let rhs = DVector::from_column_slice(&self.b);
        let solution = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        Ok(FunctionCoeffs::new(solution.iter().copied().collect()))
    }
}

/// Builds the empirical system for `data` and runs averaged gradient descent.
///
/// # Errors
///
/// See [`EmpiricalSystem::build`] and [`EmpiricalSystem::run`].
pub fn gd_run(
    data: &Dataset,
    spec: &SpectrumSpec,
    config: &GDConfig,
    target: &FunctionCoeffs,
    gammas_eval: &[f64],
) -> Result<Trajectory> {
    EmpiricalSystem::build(data, spec)?.run(config, target, gammas_eval)
}

/// Solves the ridge-regularized empirical system for `data`.
///
/// # Errors
///
/// See [`EmpiricalSystem::ridge`].
pub fn ridge_oracle(data: &Dataset, spec: &SpectrumSpec, lam: f64) -> Result<FunctionCoeffs> {
    EmpiricalSystem::build(data, spec)?.ridge(lam)
}

/// Runs the averaged recursion on the noiseless infinite-data diagonal
/// operator and returns the averaged iterate with its weighted-norm errors
/// against the target, one per entry of `gammas_eval`.
///
/// # Errors
///
/// [`Error::Unstable`] when `gamma * max_i(lambda_i p_i) > 1`;
/// [`Error::IndexOutOfRange`] when the target exceeds the truncation.
pub fn population_gd(
    spec: &SpectrumSpec,
    target: &FunctionCoeffs,
    t: u64,
    gamma: f64,
    gammas_eval: &[f64],
) -> Result<(FunctionCoeffs, Vec<f64>)> {
    if target.len() > spec.n_trunc() {
        return Err(Error::IndexOutOfRange {
            index: target.len(),
            max: spec.n_trunc(),
        });
    }
    let n = target.len();
    let model = spec.diagonal_model();
    let x: Vec<f64> = (0..n)
        .map(|i| model.lambda()[i] * model.p_weights()[i])
        .collect();
    let rho = x.iter().fold(0.0f64, |a, &v| a.max(v));
    if gamma * rho > 1.0 {
        return Err(Error::Unstable { gamma, rho });
    }
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let ratio = model.p_weights()[i] / model.q_weights()[i];
            model.lambda()[i] * model.q_weights()[i] * ratio * target.coeffs()[i]
        })
        .collect();

    let mut theta = vec![0.0f64; n];
    // Compensated accumulation keeps the long-horizon average at full
    // precision.
    let mut sum = vec![0.0f64; n];
    let mut comp = vec![0.0f64; n];
    for _ in 0..t {
        for i in 0..n {
            let y = theta[i] - comp[i];
            let s = sum[i] + y;
            comp[i] = (s - sum[i]) - y;
            sum[i] = s;
        }
        for i in 0..n {
            theta[i] += gamma * (b[i] - x[i] * theta[i]);
        }
    }
    let averaged: Vec<f64> = if t == 0 {
        vec![0.0; n]
    } else {
        sum.iter().map(|&s| s / t as f64).collect()
    };

    let errors = gammas_eval
        .iter()
        .map(|&g| {
            let mut acc = 0.0;
            for i in 0..n {
                let w = model.lambda()[i].powf(-g);
                let diff = averaged[i] - target.coeffs()[i];
                acc += w * diff * diff;
            }
            acc.sqrt()
        })
        .collect();
    Ok((FunctionCoeffs::new(averaged), errors))
}

/// Closed-form averaged iterate: mode `i` of the target is scaled by
/// `q_t(lambda_i p_i) * lambda_i * q_i * (p_i / q_i)`.
///
/// # Errors
///
/// [`Error::Unstable`] propagated from the filter when any
/// `gamma * lambda_i p_i` exceeds 1.
pub fn population_filter(
    spec: &SpectrumSpec,
    target: &FunctionCoeffs,
    t: u64,
    gamma: f64,
) -> Result<FunctionCoeffs> {
    if target.len() > spec.n_trunc() {
        return Err(Error::IndexOutOfRange {
            index: target.len(),
            max: spec.n_trunc(),
        });
    }
    let model = spec.diagonal_model();
    let mut out = Vec::with_capacity(target.len());
    for (i, &a) in target.coeffs().iter().enumerate() {
        let x = model.lambda()[i] * model.p_weights()[i];
        let q_filter = filter::filter_gd(t, gamma, x)?;
        let ratio = model.p_weights()[i] / model.q_weights()[i];
        out.push(q_filter * model.lambda()[i] * model.q_weights()[i] * ratio * a);
    }
    Ok(FunctionCoeffs::new(out))
}

/// Recomputes the recursion straight from the per-point definition,
/// without a Gram matrix, as an independent reference route.
///
/// Returns the raw and averaged coefficient vectors after each of the first
/// `t_max` iterations. Costs `O(t n N^2)`; meant for cross-checks on small
/// problems, not for production runs.
///
/// # Errors
///
/// Basis construction failures for unsupported dimensions.
pub fn dense_reference_iterates(
    data: &Dataset,
    spec: &SpectrumSpec,
    gamma: f64,
    t_max: u64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let n_modes = spec.n_trunc();
    let basis = TorusBasis::new(spec.dimension(), n_modes)?;
    let model = spec.diagonal_model();
    let n = data.n();
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![0.0; n_modes];
        basis.row(data.point(j), &mut row)?;
        rows.push(row);
    }
    let mut theta = vec![0.0f64; n_modes];
    let mut sum = vec![0.0f64; n_modes];
    let mut out = Vec::new();
    for t in 1..=t_max {
        for i in 0..n_modes {
            sum[i] += theta[i];
        }
        let mut next = theta.clone();
        for i in 0..n_modes {
            let mut acc = 0.0;
            for j in 0..n {
                let mut fitted = 0.0;
                for k in 0..n_modes {
                    fitted += theta[k] * model.p_weights()[k] * rows[j][k];
                }
                acc += rows[j][i] * (model.q_weights()[i] * data.ys()[j] - fitted);
            }
            next[i] += gamma * model.lambda()[i] * acc / n as f64;
        }
        theta = next;
        let avg: Vec<f64> = sum.iter().map(|&s| s / t as f64).collect();
        out.push((theta.clone(), avg));
    }
    Ok(out)
}
