//! Monte Carlo rate experiment: run the scheduled estimator across a sample
//! size grid, compare against the in-window optimum, and fit decay slopes.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use specfilter_core::bounds::{self, Regime, StoppingPlan};
use specfilter_core::data::{mix_seed, sample_dataset};
use specfilter_core::gd::{EmpiricalSystem, GDConfig};
use specfilter_core::{stats, Error as CoreError};

use crate::config::ExperimentConfig;

/// Result of one (sample size, replication, evaluation norm) cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RateOutcome {
    Measured {
        err_sq_scheduled: f64,
        err_sq_opt: f64,
        t_opt: u64,
    },
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub replication: u64,
    pub gamma_eval: f64,
    pub t_star: u64,
    pub outcome: RateOutcome,
}

/// Fitted decay and its checks for one evaluation norm.
#[derive(Debug, Clone, Serialize)]
pub struct GammaSummary {
    pub gamma_eval: f64,
    /// Log-log slope of the mean scheduled-stop squared error against n.
    pub slope_scheduled: f64,
    pub stderr_scheduled: f64,
    /// Log-log slope of the mean optimal-stop squared error against n.
    pub slope_opt: f64,
    pub stderr_opt: f64,
    pub upper_exponent: f64,
    pub lower_exponent: f64,
    /// Whether the scheduled slope sits inside the theoretical window;
    /// absent when the source level lies below the embedding order.
    pub sandwich_pass: Option<bool>,
    /// Scheduled over optimal mean error at the largest sample size.
    pub gap_ratio: f64,
    /// Gap verdict; enforced only in the constant-step regime.
    pub gap_pass: Option<bool>,
    /// Weighted mass of the target above the truncation, for the record.
    pub target_tail_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatesReport {
    pub regime: String,
    pub growth_exponent: f64,
    pub gamma_scaling_exponent: f64,
    pub n_used: Vec<usize>,
    pub n_diverged: Vec<usize>,
    pub per_gamma: Vec<GammaSummary>,
    pub passed: bool,
    #[serde(skip)]
    pub rows: Vec<RateRow>,
}

/// Weighted squared mass of the power-law target above the truncation level,
/// four thousand explicit terms plus an integral remainder.
fn target_tail_mass(cfg: &ExperimentConfig, gamma_eval: f64) -> f64 {
    let spec = &cfg.spec;
    let expo = spec.alpha() * (spec.beta() - gamma_eval) + 1.0 + 2.0 * cfg.target.delta;
    let c = cfg.target.scale.powi(2) * spec.c_lambda().powf(spec.beta() - gamma_eval);
    if expo <= 1.0 {
        return f64::INFINITY;
    }
    let n0 = spec.n_trunc();
    let mut sum = 0.0f64;
    for i in (n0 + 1)..=(n0 + 4096) {
        sum += c * (i as f64).powf(-expo);
    }
    let edge = n0 as f64 + 4096.5;
    sum + c * edge.powf(1.0 - expo) / (expo - 1.0)
}

fn mean_over(rows: &[RateRow], n: usize, gamma_eval: f64, scheduled: bool) -> f64 {
    let values: Vec<f64> = rows
        .iter()
        .filter(|r| r.n == n && r.gamma_eval == gamma_eval)
        .filter_map(|r| match &r.outcome {
            RateOutcome::Measured {
                err_sq_scheduled,
                err_sq_opt,
                ..
            } => Some(if scheduled {
                *err_sq_scheduled
            } else {
                *err_sq_opt
            }),
            RateOutcome::Diverged => None,
        })
        .collect();
    stats::mean_and_stderr(&values).0
}

/// Runs the full rate experiment and writes `rates.csv` and `slopes.json`.
pub fn run_rates(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<RatesReport> {
    let spec = cfg.spec.clone();
    let target = cfg.target()?;
    let noise = cfg.noise_model()?;

    let mut plans: BTreeMap<usize, StoppingPlan> = BTreeMap::new();
    for &n in &cfg.n_grid {
        plans.insert(n, bounds::stopping_schedule(&spec, n as u64, &cfg.gammas_eval)?);
    }
    let first_plan = plans
        .values()
        .next()
        .context("rates mode needs a nonempty n_grid")?;
    let regime = first_plan.regime;
    let growth_exponent = first_plan.growth_exponent;
    let gamma_scaling = first_plan.gamma_rule.scaling_exponent;
    let n_ref = cfg.n_grid[0] as f64;

    let tasks: Vec<(usize, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |rep| (n, rep)))
        .collect();

    let per_task: Vec<anyhow::Result<Vec<RateRow>>> = tasks
        .par_iter()
        .map(|&(n, rep)| {
            let plan = &plans[&n];
            let seed = mix_seed(cfg.seed, n as u64, rep);
            let data = sample_dataset(&spec, &target, n, &noise, seed)?;
            let system = EmpiricalSystem::build(&data, &spec)?;
            let gamma = cfg.rates.gamma_safety / system.spectral_radius()
                * (n as f64 / n_ref).powf(gamma_scaling);
            let t_max = ((plan.t_star_steps as f64 * cfg.rates.opt_scan_factor).ceil() as u64)
                .max(plan.t_star_steps)
                .max(8);
            let config = GDConfig::new(gamma, t_max, 1, true)?;
            let mut rows = Vec::with_capacity(cfg.gammas_eval.len());
            match system.run(&config, &target, &cfg.gammas_eval) {
                Ok(traj) => {
                    for (idx, &g) in cfg.gammas_eval.iter().enumerate() {
                        let err_sq_scheduled = traj
                            .error_sq(plan.t_star_steps, idx, true)
                            .context("scheduled stop missing from the trajectory record")?;
                        let (t_opt, err_sq_opt) = traj
                            .argmin_averaged(idx)
                            .context("trajectory has no post-start records")?;
                        rows.push(RateRow {
                            n,
                            replication: rep,
                            gamma_eval: g,
                            t_star: plan.t_star_steps,
                            outcome: RateOutcome::Measured {
                                err_sq_scheduled,
                                err_sq_opt,
                                t_opt,
                            },
                        });
                    }
                }
                Err(CoreError::Diverged { .. }) | Err(CoreError::Unstable { .. }) => {
                    for &g in &cfg.gammas_eval {
                        rows.push(RateRow {
                            n,
                            replication: rep,
                            gamma_eval: g,
                            t_star: plan.t_star_steps,
                            outcome: RateOutcome::Diverged,
                        });
                    }
                }
                Err(e) => return Err(e.into()),
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::with_capacity(tasks.len() * cfg.gammas_eval.len());
    for task_rows in per_task {
        rows.extend(task_rows?);
    }

    let n_diverged: Vec<usize> = cfg
        .n_grid
        .iter()
        .copied()
        .filter(|&n| {
            rows.iter()
                .any(|r| r.n == n && r.outcome == RateOutcome::Diverged)
        })
        .collect();
    let n_used: Vec<usize> = cfg
        .n_grid
        .iter()
        .copied()
        .filter(|n| !n_diverged.contains(n))
        .collect();
    let largest_n = *n_used
        .last()
        .context("every sample size diverged; nothing to fit")?;

    let mut per_gamma = Vec::with_capacity(cfg.gammas_eval.len());
    let mut all_pass = n_diverged.is_empty();
    for (idx, &g) in cfg.gammas_eval.iter().enumerate() {
        let sched_points: Vec<(f64, f64)> = n_used
            .iter()
            .map(|&n| (n as f64, mean_over(&rows, n, g, true)))
            .collect();
        let opt_points: Vec<(f64, f64)> = n_used
            .iter()
            .map(|&n| (n as f64, mean_over(&rows, n, g, false)))
            .collect();
        let sched_fit = stats::fit_slope(&sched_points)?;
        let opt_fit = stats::fit_slope(&opt_points)?;
        let upper = first_plan.upper_exponents[idx];
        let lower = first_plan.lower_exponents[idx];

        let sandwich_pass = if spec.beta() >= spec.mu() {
            let tol = cfg.rates.sandwich_tolerance;
            let ok = sched_fit.slope >= -lower - tol && sched_fit.slope <= -upper + tol;
            Some(ok)
        } else {
            None
        };
        let gap_ratio = mean_over(&rows, largest_n, g, true) / mean_over(&rows, largest_n, g, false);
        let gap_pass = if regime == Regime::ConstLr {
            Some(gap_ratio <= cfg.rates.gap_factor)
        } else {
            None
        };
        all_pass = all_pass
            && sandwich_pass.unwrap_or(true)
            && gap_pass.unwrap_or(true)
            && gap_ratio.is_finite();

        per_gamma.push(GammaSummary {
            gamma_eval: g,
            slope_scheduled: sched_fit.slope,
            stderr_scheduled: sched_fit.stderr,
            slope_opt: opt_fit.slope,
            stderr_opt: opt_fit.stderr,
            upper_exponent: upper,
            lower_exponent: lower,
            sandwich_pass,
            gap_ratio,
            gap_pass,
            target_tail_mass: target_tail_mass(cfg, g),
        });
    }

    let report = RatesReport {
        regime: regime.to_string(),
        growth_exponent,
        gamma_scaling_exponent: gamma_scaling,
        n_used,
        n_diverged,
        per_gamma,
        passed: all_pass,
        rows,
    };
    write_rates_csv(&report, &out_dir.join("rates.csv"))?;
    let json = serde_json::to_string_pretty(&report).context("serializing slope report")?;
    std::fs::write(out_dir.join("slopes.json"), json + "\n")?;
    Ok(report)
}

fn write_rates_csv(report: &RatesReport, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "replication",
        "gamma_eval",
        "err_sq_scheduled",
        "err_sq_opt",
        "t_star",
        "t_opt",
    ])?;
    for row in &report.rows {
        let (sched, opt, t_opt) = match &row.outcome {
            RateOutcome::Measured {
                err_sq_scheduled,
                err_sq_opt,
                t_opt,
            } => (
                format!("{err_sq_scheduled}"),
                format!("{err_sq_opt}"),
                format!("{t_opt}"),
            ),
            RateOutcome::Diverged => (
                "diverged".to_string(),
                "diverged".to_string(),
                "diverged".to_string(),
            ),
        };
        w.write_record([
            format!("{}", row.n),
            format!("{}", row.replication),
            format!("{}", row.gamma_eval),
            sched,
            opt,
            format!("{}", row.t_star),
            t_opt,
        ])?;
    }
    w.flush()?;
    Ok(())
}
