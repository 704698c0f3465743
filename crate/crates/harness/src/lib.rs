//! Batch experiment driver around `specfilter-core`: configuration loading,
//! Monte Carlo rate runs, phase sweeps, bound suites, lower-bound
//! certification, PDE stopping comparisons, and route-identity checks, all
//! deterministic in (config, seed) at any thread count.

pub mod boundsuite;
pub mod config;
pub mod filtercheck;
pub mod lowerbound;
pub mod pderun;
pub mod phase;
pub mod rates;

use std::path::Path;

use config::{ExperimentConfig, Mode};

/// Outcome of one dispatched run: overall verdict plus one summary line per
/// check for the log.
pub struct RunOutcome {
    pub passed: bool,
    pub lines: Vec<String>,
}

/// Dispatches the configured mode, writing outputs into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    match cfg.mode {
        Mode::Rates => {
            let r = rates::run_rates(cfg, out_dir)?;
            let mut lines = vec![format!(
                "regime={} growth_exponent={:.6} diverged_ns={:?}",
                r.regime, r.growth_exponent, r.n_diverged
            )];
            for g in &r.per_gamma {
                lines.push(format!(
                    "gamma_eval={} slope={:.4} stderr={:.4} upper={:.4} lower={:.4} sandwich={:?} gap_ratio={:.3} gap={:?}",
                    g.gamma_eval,
                    g.slope_scheduled,
                    g.stderr_scheduled,
                    g.upper_exponent,
                    g.lower_exponent,
                    g.sandwich_pass,
                    g.gap_ratio,
                    g.gap_pass
                ));
            }
            Ok(RunOutcome {
                passed: r.passed,
                lines,
            })
        }
        Mode::Phase => {
            let r = phase::run_phase(cfg, out_dir)?;
            Ok(RunOutcome {
                passed: r.passed,
                lines: vec![format!(
                    "cells={} labels_match={} monotone={} all_regimes={}",
                    r.cells.len(),
                    r.labels_match_curves,
                    r.monotone_in_beta,
                    r.all_regimes_present
                )],
            })
        }
        Mode::Bounds => {
            let r = boundsuite::run_bounds(cfg, out_dir)?;
            let mut lines: Vec<String> = r
                .suites
                .iter()
                .map(|s| format!("spec={} suite_passed={}", s.label, s.suite_passed))
                .collect();
            lines.push(format!(
                "negative_control_failed={} filter_passed={}",
                r.control_failed_as_expected, r.filter_passed
            ));
            Ok(RunOutcome {
                passed: r.passed,
                lines,
            })
        }
        Mode::Lowerbound => {
            let r = lowerbound::run_lowerbound(cfg, out_dir)?;
            let mut lines = vec![format!(
                "codebook m={} words={} min_hamming={} passed={}",
                r.codebook.m,
                r.codebook.word_count,
                r.codebook.min_pairwise_hamming,
                r.codebook.passed
            )];
            for f in &r.families {
                lines.push(format!(
                    "epsilon={} m={} certified={} exponent_match={}",
                    f.epsilon, f.m, f.certification.passed, f.exponent_match
                ));
            }
            lines.push(format!(
                "showcase epsilon={} certified={} failure_prob={:.4}",
                r.showcase.epsilon,
                r.showcase.certification.passed,
                r.showcase.fano.failure_prob_lower_bound
            ));
            Ok(RunOutcome {
                passed: r.passed,
                lines,
            })
        }
        Mode::Pde => {
            let r = pderun::run_pde(cfg, out_dir)?;
            let mut lines: Vec<String> = r
                .slopes
                .iter()
                .map(|s| {
                    format!(
                        "operator={} slope={:.4} stderr={:.4} theory={:.4}",
                        s.operator, s.slope, s.stderr, s.theory_exponent
                    )
                })
                .collect();
            lines.push(format!(
                "ordering_pass={:?} theory_pass={}",
                r.ordering_pass, r.theory_pass
            ));
            Ok(RunOutcome {
                passed: r.passed,
                lines,
            })
        }
        Mode::Filtercheck => {
            let r = filtercheck::run_filtercheck(cfg, out_dir)?;
            Ok(RunOutcome {
                passed: r.passed,
                lines: vec![format!(
                    "population_max_dev={:.3e} empirical_max_dev={:.3e} tolerance={:.1e}",
                    r.population_max_dev, r.empirical_max_dev, r.tolerance
                )],
            })
        }
    }
}
