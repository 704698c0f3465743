//! Torus PDE objectives in Fourier coordinates: operator symbol sets for
//! variational and residual formulations, fitted power-law equivalents, the
//! gradient-augmented objective with its integration-by-parts identity, and
//! a stopping-time experiment shared across the formulations.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::TorusBasis;
use crate::data::{grid_from_image, mix_seed, NoiseModel};
use crate::gd::EmpiricalSystem;
use crate::spectral::{FunctionCoeffs, SpectrumSpec};
use crate::{bounds, stats, Error, Result};

/// Squared angular frequency of basis index `j`: (2 pi |m|)^2.
fn omega_sq(basis: &TorusBasis, j: usize) -> Result<f64> {
    Ok(4.0 * std::f64::consts::PI * std::f64::consts::PI * basis.freq_norm_sq(j)? as f64)
}

/// Formulation a symbol set encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorName {
    Drm,
    Pinn,
    SobolevPinn,
}

impl std::fmt::Display for OperatorName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OperatorName::Drm => "drm",
            OperatorName::Pinn => "pinn",
            OperatorName::SobolevPinn => "sobolev_pinn",
        };
        f.write_str(s)
    }
}

/// Per-mode multipliers of the objective-side and data-side operators of one
/// formulation, with fitted power-law equivalents.
#[derive(Debug, Clone)]
pub struct PdeOperatorSet {
    name: OperatorName,
    dimension: usize,
    a1_symbol: Vec<f64>,
    a2_symbol: Vec<f64>,
    equivalent_p: f64,
    equivalent_q: f64,
}

impl PdeOperatorSet {
    pub fn name(&self) -> OperatorName {
        self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.a1_symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a1_symbol.is_empty()
    }

    /// Objective-side multiplier per mode.
    pub fn a1_symbol(&self) -> &[f64] {
        &self.a1_symbol
    }

    /// Data-side multiplier per mode.
    pub fn a2_symbol(&self) -> &[f64] {
        &self.a2_symbol
    }

    /// Fitted power-law exponent of the objective-side symbol, in the sign
    /// convention of the diagonal model (more negative = steeper growth).
    pub fn equivalent_p(&self) -> f64 {
        self.equivalent_p
    }

    /// Fitted power-law exponent of the data-side symbol.
    pub fn equivalent_q(&self) -> f64 {
        self.equivalent_q
    }
}

/// Least-squares power-law exponent of a symbol over the mode index, skipping
/// the constant mode, returned in the diagonal-model sign convention.
fn fitted_exponent(symbol: &[f64]) -> Result<f64> {
    let points: Vec<(f64, f64)> = symbol
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &v)| ((j + 1) as f64, v))
        .collect();
    Ok(-stats::fit_slope(&points)?.slope)
}

fn assemble(
    name: OperatorName,
    dimension: usize,
    len: usize,
    weight: f64,
) -> Result<PdeOperatorSet> {
    if len < 8 {
        return Err(Error::InvalidArgument(format!(
            "symbol set needs at least 8 modes to fit exponents, got {len}"
        )));
    }
    let basis = TorusBasis::new(dimension, len)?;
    let mut a1 = Vec::with_capacity(len);
    let mut a2 = Vec::with_capacity(len);
    for j in 0..len {
        let w2 = omega_sq(&basis, j)?;
        let base = 1.0 + w2;
        match name {
            OperatorName::Drm => {
                a1.push(base);
                a2.push(1.0);
            }
            OperatorName::Pinn => {
                a1.push(base * base);
                a2.push(base);
            }
            OperatorName::SobolevPinn => {
                a1.push((weight + w2) * base * base);
                a2.push((weight + w2) * base);
            }
        }
    }
    if a1.iter().chain(&a2).any(|&v| v < 1.0) {
        return Err(Error::InvalidArgument(
            "operator symbols fell below one; increase the gradient weight".to_string(),
        ));
    }
    let equivalent_p = fitted_exponent(&a1)?;
    let equivalent_q = fitted_exponent(&a2)?;
    Ok(PdeOperatorSet {
        name,
        dimension,
        a1_symbol: a1,
        a2_symbol: a2,
        equivalent_p,
        equivalent_q,
    })
}

/// Variational (energy) formulation: objective symbol 1 + omega^2, data
/// symbol 1.
pub fn drm_operators(dimension: usize, len: usize) -> Result<PdeOperatorSet> {
    assemble(OperatorName::Drm, dimension, len, 0.0)
}

/// Residual formulation: objective symbol (1 + omega^2)^2, data symbol
/// 1 + omega^2.
pub fn pinn_operators(dimension: usize, len: usize) -> Result<PdeOperatorSet> {
    assemble(OperatorName::Pinn, dimension, len, 0.0)
}

/// Gradient-augmented residual formulation with weight `weight` on the plain
/// residual term: objective symbol (weight + omega^2)(1 + omega^2)^2, data
/// symbol (weight + omega^2)(1 + omega^2).
///
/// # Errors
///
/// [`Error::InvalidArgument`] when `weight < 1`, which would push the
/// constant mode's symbol below one.
pub fn sobolev_pinn_operators(dimension: usize, len: usize, weight: f64) -> Result<PdeOperatorSet> {
    if !(weight.is_finite() && weight >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient weight {weight} must be at least 1"
        )));
    }
    assemble(OperatorName::SobolevPinn, dimension, len, weight)
}

/// Both evaluation routes of the gradient-augmented objective.
#[derive(Debug, Clone, Copy)]
pub struct SobolevObjective {
    /// Mode-wise value of weight * |residual|^2 + |grad residual|^2.
    pub direct: f64,
    /// Same quantity with the gradient cross term rewritten through
    /// integration by parts.
    pub expanded: f64,
}

impl SobolevObjective {
    pub fn value(&self) -> f64 {
        self.direct
    }
}

/// Evaluates the gradient-augmented objective of the residual formulation at
/// `u` against right-hand side `f`, through both algebraic routes.
///
/// # Errors
///
/// [`Error::IndexOutOfRange`] when a coefficient vector exceeds the basis;
/// [`Error::InvalidArgument`] for a negative or non-finite weight.
pub fn sobolev_objective(
    u: &FunctionCoeffs,
    f: &FunctionCoeffs,
    weight: f64,
    basis: &TorusBasis,
) -> Result<SobolevObjective> {
    if !(weight.is_finite() && weight >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "objective weight {weight} must be nonnegative"
        )));
    }
    let len = u.len().max(f.len());
    if len > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: len,
            max: basis.len(),
        });
    }
    let coeff = |v: &FunctionCoeffs, j: usize| v.coeffs().get(j).copied().unwrap_or(0.0);
    let mut direct = 0.0f64;
    let mut expanded = 0.0f64;
    for j in 0..len {
        let w2 = omega_sq(basis, j)?;
        let au = (1.0 + w2) * coeff(u, j);
        let fj = coeff(f, j);
        let r = au - fj;
        direct += weight * r * r + w2 * r * r;
        expanded += weight * r * r + (w2 * au * au - 2.0 * w2 * au * fj + w2 * fj * fj);
    }
    Ok(SobolevObjective { direct, expanded })
}

/// Absolute discrepancy of the integration-by-parts identity
/// |grad(u - f)|^2 = |grad u|^2 - 2 omega^2 u f + |grad f|^2, summed over
/// modes and evaluated through both sides as written.
pub fn ibp_identity_check(
    u: &FunctionCoeffs,
    f: &FunctionCoeffs,
    basis: &TorusBasis,
) -> Result<f64> {
    let len = u.len().max(f.len());
    if len > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: len,
            max: basis.len(),
        });
    }
    let coeff = |v: &FunctionCoeffs, j: usize| v.coeffs().get(j).copied().unwrap_or(0.0);
    let mut lhs = 0.0f64;
    let mut rhs = 0.0f64;
    for j in 0..len {
        let w2 = omega_sq(basis, j)?;
        let uj = coeff(u, j);
        let fj = coeff(f, j);
        let d = uj - fj;
        lhs += w2 * d * d;
        rhs += w2 * uj * uj - 2.0 * w2 * uj * fj + w2 * fj * fj;
    }
    Ok((lhs - rhs).abs())
}

/// One stopping-time measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelRow {
    pub operator: String,
    pub n: usize,
    pub replication: u64,
    pub t_opt: u64,
    pub err_at_t_opt: f64,
}

/// Fitted growth of the empirical stopping time for one formulation.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorSlope {
    pub operator: String,
    pub slope: f64,
    pub stderr: f64,
    /// Schedule growth exponent predicted from the fitted symbol exponents.
    pub theory_exponent: f64,
}

/// Rows and fitted slopes of a shared stopping-time experiment.
#[derive(Debug, Clone)]
pub struct AccelerationTable {
    pub rows: Vec<AccelRow>,
    pub slopes: Vec<OperatorSlope>,
}

impl AccelerationTable {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["operator", "n", "replication", "t_opt", "err_at_t_opt"])?;
        for row in &self.rows {
            w.write_record([
                row.operator.clone(),
                format!("{}", row.n),
                format!("{}", row.replication),
                format!("{}", row.t_opt),
                format!("{}", row.err_at_t_opt),
            ])?;
        }
        w.flush().map_err(Error::from)?;
        Ok(())
    }

    /// Single-line JSON summary of the fitted slopes.
    pub fn slopes_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            slopes: &'a [OperatorSlope],
        }
        serde_json::to_string(&Summary {
            slopes: &self.slopes,
        })
        .expect("slope serialization cannot fail")
    }
}

/// Diagonal-model prediction for how the empirical stopping time should grow
/// with n for this formulation, from its fitted symbol exponents.
pub fn predicted_stopping_exponent(
    spec_base: &SpectrumSpec,
    operators: &PdeOperatorSet,
) -> Result<f64> {
    let pseudo = SpectrumSpec::builder(
        spec_base.alpha(),
        operators.equivalent_p().min(0.0),
        operators.equivalent_q().min(0.0),
        spec_base.beta(),
    )
    .mu(spec_base.mu())
    .n_trunc(spec_base.n_trunc())
    .dimension(spec_base.dimension())
    .build()?;
    bounds::growth_exponent(&pseudo)
}

fn optimal_stop(
    system: &EmpiricalSystem,
    gamma: f64,
    target: &FunctionCoeffs,
    weights: &[f64],
    t_cap: u64,
) -> Result<(u64, f64)> {
    let mut t_max = 64u64.min(t_cap);
    loop {
        let curve = system.raw_error_curve(gamma, t_max, target, weights)?;
        let mut t_opt = 0u64;
        let mut best = f64::INFINITY;
        for (idx, &err) in curve.iter().enumerate() {
            if err < best {
                best = err;
                t_opt = idx as u64 + 1;
            }
        }
        if t_opt == 0 {
            return Err(Error::InvalidArgument("empty error curve".to_string()));
        }
        if t_opt < t_max || t_max >= t_cap {
            return Ok((t_opt, best));
        }
        t_max = (t_max * 2).min(t_cap);
    }
}

/// Runs every formulation on the same equispaced datasets, stops each run at
/// the iteration minimizing the error of the last iterate in the norm
/// weighted by the squared forward ratio, then fits log t_opt against log n
/// per formulation.
///
/// Datasets depend only on (n, replication), so formulations are compared on
/// identical samples; all formulations must share the forward map a1/a2.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for mismatched operator sets, an empty grid,
/// or a base model that is not one-dimensional; propagated sampling,
/// descent, and fitting errors.
#[allow(clippy::too_many_arguments)]
pub fn acceleration_experiment(
    spec_base: &SpectrumSpec,
    operators: &[PdeOperatorSet],
    target: &FunctionCoeffs,
    n_grid: &[usize],
    replications: u64,
    noise: &NoiseModel,
    seed: u64,
    gamma_safety: f64,
    t_cap: u64,
) -> Result<AccelerationTable> {
    if operators.is_empty() || n_grid.is_empty() || replications == 0 {
        return Err(Error::InvalidArgument(
            "experiment needs operators, a sample grid, and replications".to_string(),
        ));
    }
    if !(gamma_safety > 0.0 && gamma_safety < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "step safety factor {gamma_safety} must sit in (0, 1)"
        )));
    }
    if spec_base.dimension() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the stopping-time experiment uses a one-dimensional equispaced design, \
             got dimension {}",
            spec_base.dimension()
        )));
    }
    let n_modes = spec_base.n_trunc();
    if target.len() > n_modes {
        return Err(Error::IndexOutOfRange {
            index: target.len(),
            max: n_modes,
        });
    }
    for op in operators {
        if op.len() != n_modes || op.dimension() != spec_base.dimension() {
            return Err(Error::InvalidArgument(format!(
                "operator set {} does not match the base model layout",
                op.name()
            )));
        }
    }
    let ratio: Vec<f64> = operators[0]
        .a1_symbol()
        .iter()
        .zip(operators[0].a2_symbol())
        .map(|(a1, a2)| a1 / a2)
        .collect();
    for op in &operators[1..] {
        for (j, (a1, a2)) in op.a1_symbol().iter().zip(op.a2_symbol()).enumerate() {
            if ((a1 / a2) - ratio[j]).abs() > 1e-9 * ratio[j] {
                return Err(Error::InvalidArgument(
                    "formulations disagree on the forward map".to_string(),
                ));
            }
        }
    }
    let f_star = FunctionCoeffs::new(
        target
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, &a)| ratio[j] * a)
            .collect(),
    );
    let stop_weights: Vec<f64> = ratio.iter().map(|r| r * r).collect();
    let lambda: Vec<f64> = (1..=n_modes)
        .map(|i| spec_base.c_lambda() * (i as f64).powf(-spec_base.alpha()))
        .collect();

    let tasks: Vec<(usize, u64)> = n_grid
        .iter()
        .flat_map(|&n| (0..replications).map(move |rep| (n, rep)))
        .collect();
    let per_task: Vec<Result<Vec<AccelRow>>> = tasks
        .par_iter()
        .map(|&(n, rep)| {
            let data = grid_from_image(&f_star, n, noise, mix_seed(seed, n as u64, rep))?;
            let mut rows = Vec::with_capacity(operators.len());
            for op in operators {
                let system =
                    EmpiricalSystem::build_with_model(&data, &lambda, op.a1_symbol(), op.a2_symbol())?;
                let gamma = gamma_safety / system.spectral_radius();
                let (t_opt, err) = optimal_stop(&system, gamma, target, &stop_weights, t_cap)?;
                rows.push(AccelRow {
                    operator: op.name().to_string(),
                    n,
                    replication: rep,
                    t_opt,
                    err_at_t_opt: err,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::with_capacity(tasks.len() * operators.len());
    for task_rows in per_task {
        rows.extend(task_rows?);
    }

    let mut slopes = Vec::with_capacity(operators.len());
    for op in operators {
        let name = op.name().to_string();
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.operator == name)
            .map(|r| (r.n as f64, r.t_opt as f64))
            .collect();
        let fit = stats::fit_slope(&points)?;
        slopes.push(OperatorSlope {
            operator: name,
            slope: fit.slope,
            stderr: fit.stderr,
            theory_exponent: predicted_stopping_exponent(spec_base, op)?,
        });
    }
    Ok(AccelerationTable { rows, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PI2_4: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

    #[test]
    fn drm_symbols_follow_the_dispersion_relation() {
        let set = drm_operators(1, 16).unwrap();
        assert_eq!(set.a1_symbol()[0], 1.0);
        assert_eq!(set.a1_symbol()[1], 1.0 + PI2_4);
        assert_eq!(set.a1_symbol()[2], 1.0 + PI2_4);
        assert_eq!(set.a1_symbol()[3], 1.0 + 4.0 * PI2_4);
        assert!(set.a2_symbol().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn pinn_symbols_square_the_variational_set() {
        let drm = drm_operators(1, 64).unwrap();
        let pinn = pinn_operators(1, 64).unwrap();
        for j in 0..64 {
            assert_eq!(pinn.a1_symbol()[j], drm.a1_symbol()[j] * drm.a1_symbol()[j]);
            assert_eq!(pinn.a2_symbol()[j], drm.a1_symbol()[j]);
        }
    }

    #[test]
    fn gradient_weighted_set_validates_its_weight() {
        assert!(sobolev_pinn_operators(1, 32, 0.5).is_err());
        let set = sobolev_pinn_operators(1, 32, 1.0).unwrap();
        assert_eq!(set.a1_symbol()[0], 1.0);
        assert_eq!(set.a2_symbol()[0], 1.0);
        let drm = drm_operators(1, 32).unwrap();
        for j in 0..32 {
            let w2 = drm.a1_symbol()[j] - 1.0;
            let expect_a1 = w2 * drm.a1_symbol()[j] * drm.a1_symbol()[j]
                + 1.0 * drm.a1_symbol()[j] * drm.a1_symbol()[j];
            let expect_a2 = w2 * drm.a1_symbol()[j] + 1.0 * drm.a1_symbol()[j];
            assert!((set.a1_symbol()[j] - expect_a1).abs() <= 1e-9 * expect_a1);
            assert!((set.a2_symbol()[j] - expect_a2).abs() <= 1e-9 * expect_a2);
        }
        assert!(set.a1_symbol().iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn fitted_exponents_track_the_dimension() {
        for d in [1usize, 2] {
            let drm = drm_operators(d, 512).unwrap();
            let pinn = pinn_operators(d, 512).unwrap();
            let want = 2.0 / d as f64;
            assert!(
                (drm.equivalent_p() + want).abs() <= 0.1,
                "drm p {} vs {} in d={d}",
                drm.equivalent_p(),
                -want
            );
            assert!(drm.equivalent_q().abs() <= 0.05);
            assert!(
                (pinn.equivalent_p() + 2.0 * want).abs() <= 0.1,
                "pinn p {} vs {} in d={d}",
                pinn.equivalent_p(),
                -2.0 * want
            );
            assert!((pinn.equivalent_q() + want).abs() <= 0.1);
        }
    }

    #[test]
    fn objective_on_a_unit_sine_with_zero_rhs() {
        let basis = TorusBasis::new(1, 8).unwrap();
        let u = FunctionCoeffs::new(vec![0.0, 0.0, 1.0]);
        let f = FunctionCoeffs::new(vec![]);
        let obj = sobolev_objective(&u, &f, 0.0, &basis).unwrap();
        let expected = PI2_4 * (1.0 + PI2_4) * (1.0 + PI2_4);
        assert!((obj.direct - expected).abs() <= 1e-12 * expected);
        assert!((obj.expanded - expected).abs() <= 1e-12 * expected);
        assert_eq!(obj.value(), obj.direct);
    }

    fn random_decaying(len: usize, seed: u64) -> FunctionCoeffs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..len)
            .map(|j| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                (2.0 * u - 1.0) / ((j + 1) * (j + 1)) as f64
            })
            .collect();
        FunctionCoeffs::new(coeffs)
    }

    #[test]
    fn objective_routes_agree_on_random_functions() {
        let basis = TorusBasis::new(1, 64).unwrap();
        for seed in 0..20 {
            let u = random_decaying(64, 1000 + seed);
            let f = random_decaying(64, 2000 + seed);
            let obj = sobolev_objective(&u, &f, 0.7, &basis).unwrap();
            let tol = 1e-10 * obj.direct.abs().max(1.0);
            assert!(
                (obj.direct - obj.expanded).abs() <= tol,
                "routes disagree: {} vs {}",
                obj.direct,
                obj.expanded
            );
        }
    }

    #[test]
    fn ibp_identity_holds_to_rounding() {
        let basis = TorusBasis::new(1, 64).unwrap();
        for seed in 0..20 {
            let u = random_decaying(64, 3000 + seed);
            let f = random_decaying(64, 4000 + seed);
            let gap = ibp_identity_check(&u, &f, &basis).unwrap();
            assert!(gap <= 1e-10, "identity breaks: {gap}");
        }
        let u = FunctionCoeffs::new(vec![0.0, 1.0]);
        let f = FunctionCoeffs::new(vec![0.0, 0.5]);
        let gap = ibp_identity_check(&u, &f, &basis).unwrap();
        assert!(gap <= 1e-12);
    }

    #[test]
    fn objective_rejects_oversized_inputs() {
        let basis = TorusBasis::new(1, 4).unwrap();
        let u = FunctionCoeffs::new(vec![0.0; 8]);
        let f = FunctionCoeffs::new(vec![]);
        assert!(sobolev_objective(&u, &f, 0.0, &basis).is_err());
        assert!(ibp_identity_check(&u, &f, &basis).is_err());
    }

    #[test]
    fn long_runs_converge_to_the_pde_solution_for_both_formulations() {
        let len = 16usize;
        let basis = TorusBasis::new(1, len).unwrap();
        let f: Vec<f64> = (0..len).map(|j| 1.0 / (j + 1) as f64).collect();
        for set in [drm_operators(1, len).unwrap(), pinn_operators(1, len).unwrap()] {
            let lambda: Vec<f64> = (1..=len).map(|i| (i as f64).powf(-2.0)).collect();
            let rho = lambda
                .iter()
                .zip(set.a1_symbol())
                .map(|(l, a)| l * a)
                .fold(0.0f64, f64::max);
            let gamma = 0.9 / rho;
            let t = 10_000_000_000_000u64;
            for j in 0..8 {
                let x = lambda[j] * set.a1_symbol()[j];
                let r = filter::residual_gd(t, gamma, x).unwrap();
                let w2 = omega_sq(&basis, j).unwrap();
                let solution = f[j] / (1.0 + w2);
                let iterate = (1.0 - r) * solution;
                assert!(
                    (iterate - solution).abs() <= 1e-8 * solution.abs().max(1.0),
                    "{} mode {j} still {r} away",
                    set.name()
                );
            }
        }
    }

    #[test]
    fn residual_formulation_progresses_faster_on_high_modes() {
        let len = 64usize;
        let drm = drm_operators(1, len).unwrap();
        let pinn = pinn_operators(1, len).unwrap();
        let lambda: Vec<f64> = (1..=len).map(|i| (i as f64).powf(-6.0)).collect();
        let progress = |set: &PdeOperatorSet, j: usize| {
            let rho = lambda
                .iter()
                .zip(set.a1_symbol())
                .map(|(l, a)| l * a)
                .fold(0.0f64, f64::max);
            let gamma = 0.9 / rho;
            let x = lambda[j] * set.a1_symbol()[j];
            1.0 - filter::residual_gd(100, gamma, x).unwrap()
        };
        for j in [32usize, 48] {
            let fast = progress(&pinn, j);
            let slow = progress(&drm, j);
            assert!(
                fast > slow,
                "mode {j}: residual progress {fast} not above variational {slow}"
            );
        }
    }

    fn small_experiment(ops: Vec<PdeOperatorSet>) -> AccelerationTable {
        let spec = SpectrumSpec::builder(6.0, 0.0, 0.0, 7.0 / 6.0)
            .mu(1.0 / 6.0)
            .n_trunc(32)
            .build()
            .unwrap();
        let target = spec.make_target(0.05, 1.0).unwrap();
        let noise = NoiseModel::gaussian(0.2).unwrap();
        acceleration_experiment(
            &spec,
            &ops,
            &target,
            &[64, 128],
            2,
            &noise,
            77,
            0.9,
            1 << 14,
        )
        .unwrap()
    }

    #[test]
    fn experiment_emits_rows_and_slopes() {
        let ops = vec![drm_operators(1, 32).unwrap(), pinn_operators(1, 32).unwrap()];
        let table = small_experiment(ops);
        assert_eq!(table.rows.len(), 8);
        assert_eq!(table.slopes.len(), 2);
        for s in &table.slopes {
            assert!(s.theory_exponent.is_finite() && s.theory_exponent > 0.0);
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "operator,n,replication,t_opt,err_at_t_opt"
        );
        assert_eq!(text.lines().count(), 9);
        let parsed: serde_json::Value = serde_json::from_str(&table.slopes_json()).unwrap();
        assert_eq!(parsed["slopes"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn experiment_is_deterministic_across_thread_counts() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let ops = vec![drm_operators(1, 32).unwrap(), pinn_operators(1, 32).unwrap()];
                small_experiment(ops)
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.rows, b.rows);
        for (x, y) in a.slopes.iter().zip(&b.slopes) {
            assert_eq!(x.slope.to_bits(), y.slope.to_bits());
        }
    }

    #[test]
    fn identical_formulations_share_datasets_and_results() {
        let ops = vec![drm_operators(1, 32).unwrap(), drm_operators(1, 32).unwrap()];
        let table = small_experiment(ops);
        for pair in table.rows.chunks(2) {
            assert_eq!(pair[0].t_opt, pair[1].t_opt);
            assert_eq!(pair[0].err_at_t_opt.to_bits(), pair[1].err_at_t_opt.to_bits());
        }
        assert_eq!(
            table.slopes[0].slope.to_bits(),
            table.slopes[1].slope.to_bits()
        );
    }

    #[test]
    fn mismatched_operator_layouts_are_rejected() {
        let spec = SpectrumSpec::builder(6.0, 0.0, 0.0, 7.0 / 6.0)
            .mu(1.0 / 6.0)
            .n_trunc(32)
            .build()
            .unwrap();
        let target = spec.make_target(0.05, 1.0).unwrap();
        let noise = NoiseModel::gaussian(0.2).unwrap();
        let ops = vec![drm_operators(1, 16).unwrap()];
        assert!(acceleration_experiment(
            &spec,
            &ops,
            &target,
            &[64],
            1,
            &noise,
            1,
            0.9,
            1 << 10
        )
        .is_err());
    }

    #[test]
    fn experiment_requires_a_one_dimensional_model() {
        let spec = SpectrumSpec::builder(6.0, 0.0, 0.0, 7.0 / 6.0)
            .mu(1.0 / 6.0)
            .n_trunc(32)
            .dimension(2)
            .build()
            .unwrap();
        let target = spec.make_target(0.05, 1.0).unwrap();
        let noise = NoiseModel::gaussian(0.2).unwrap();
        let ops = vec![drm_operators(2, 32).unwrap()];
        assert!(acceleration_experiment(
            &spec,
            &ops,
            &target,
            &[64],
            1,
            &noise,
            1,
            0.9,
            1 << 10
        )
        .is_err());
    }

    #[test]
    fn stopping_time_lengthens_when_noise_shrinks() {
        let spec = SpectrumSpec::builder(6.0, 0.0, 0.0, 7.0 / 6.0)
            .mu(1.0 / 6.0)
            .n_trunc(32)
            .build()
            .unwrap();
        let target = spec.make_target(0.05, 1.0).unwrap();
        let ops = vec![drm_operators(1, 32).unwrap()];
        let run = |sigma: f64| {
            let noise = NoiseModel::gaussian(sigma).unwrap();
            let table = acceleration_experiment(
                &spec,
                &ops,
                &target,
                &[256, 512],
                4,
                &noise,
                11,
                0.9,
                1 << 16,
            )
            .unwrap();
            let mut ts: Vec<u64> = table.rows.iter().map(|r| r.t_opt).collect();
            ts.sort_unstable();
            ts[ts.len() / 2]
        };
        let noisy = run(0.5);
        let quiet = run(0.005);
        assert!(
            quiet > 2 * noisy,
            "median stop {quiet} under low noise vs {noisy} under high noise"
        );
    }
}
