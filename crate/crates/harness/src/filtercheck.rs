//! Route-identity verification: the iterative population recursion against
//! the closed-form filter, and the fast empirical path against a dense
//! per-point reference recursion.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use specfilter_core::data::{mix_seed, sample_dataset};
use specfilter_core::gd::{self, EmpiricalSystem, GDConfig};
use specfilter_core::spectral::SpectrumSpec;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct FilterCheckReport {
    pub population_t_max: u64,
    pub population_gamma: f64,
    pub population_max_dev: f64,
    pub dense_modes: usize,
    pub dense_samples: usize,
    pub dense_t_max: u64,
    pub dense_gamma: f64,
    pub empirical_max_dev: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Runs both identity checks and writes `filtercheck.json`.
pub fn run_filtercheck(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<FilterCheckReport> {
    let fc = &cfg.filtercheck;
    let spec = &cfg.spec;
    let target = cfg.target()?;

    let model = spec.diagonal_model();
    let x_max = model
        .lambda()
        .iter()
        .zip(model.p_weights())
        .map(|(l, p)| l * p)
        .fold(0.0f64, f64::max);
    let population_gamma = fc.population_gamma_safety / x_max;
    let mut population_max_dev = 0.0f64;
    for t in 1..=fc.population_t_max {
        let (iterated, _) = gd::population_gd(spec, &target, t, population_gamma, &[])?;
        let filtered = gd::population_filter(spec, &target, t, population_gamma)?;
        for (a, b) in iterated.coeffs().iter().zip(filtered.coeffs()) {
            population_max_dev = population_max_dev.max((a - b).abs());
        }
    }

    let small_spec = SpectrumSpec::builder(spec.alpha(), spec.p(), spec.q(), spec.beta())
        .mu(spec.mu())
        .c_lambda(spec.c_lambda())
        .c_p(spec.c_p())
        .c_q(spec.c_q())
        .n_trunc(fc.dense_modes)
        .dimension(spec.dimension())
        .build()?;
    let small_target = small_spec.make_target(cfg.target.delta, cfg.target.scale)?;
    let noise = cfg.noise_model()?;
    let data = sample_dataset(
        &small_spec,
        &small_target,
        fc.dense_samples,
        &noise,
        mix_seed(cfg.seed, fc.dense_modes as u64, 0),
    )?;
    let system = EmpiricalSystem::build(&data, &small_spec)?;
    let dense_gamma = fc.dense_gamma_safety / system.spectral_radius();
    let dense = gd::dense_reference_iterates(&data, &small_spec, dense_gamma, fc.dense_t_max)?;
    let mut empirical_max_dev = 0.0f64;
    for t in 1..=fc.dense_t_max {
        let config = GDConfig::new(dense_gamma, t, t, true)?;
        let traj = system.run(&config, &small_target, &[0.0])?;
        let (dense_raw, dense_avg) = &dense[(t - 1) as usize];
        let raw = traj.final_raw();
        let avg = traj
            .final_averaged()
            .context("averaging was requested but not recorded")?;
        for i in 0..fc.dense_modes {
            empirical_max_dev = empirical_max_dev.max((raw.coeffs()[i] - dense_raw[i]).abs());
            empirical_max_dev = empirical_max_dev.max((avg.coeffs()[i] - dense_avg[i]).abs());
        }
    }

    let report = FilterCheckReport {
        population_t_max: fc.population_t_max,
        population_gamma,
        population_max_dev,
        dense_modes: fc.dense_modes,
        dense_samples: fc.dense_samples,
        dense_t_max: fc.dense_t_max,
        dense_gamma,
        empirical_max_dev,
        tolerance: fc.tolerance,
        passed: population_max_dev <= fc.tolerance && empirical_max_dev <= fc.tolerance,
    };
    let json = serde_json::to_string_pretty(&report).context("serializing filter check")?;
    std::fs::write(out_dir.join("filtercheck.json"), json + "\n")?;
    Ok(report)
}
