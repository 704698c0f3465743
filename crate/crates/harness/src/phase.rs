//! Regime phase diagram over the (alpha, beta) plane with both rate
//! exponents per cell and consistency checks on the printed boundaries.

use std::path::Path;

use serde::Serialize;
use specfilter_core::bounds::{self, RateBound, Regime};
use specfilter_core::spectral::SpectrumSpec;

use crate::config::{ExperimentConfig, MuRule};

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCell {
    pub alpha: f64,
    pub beta: f64,
    pub regime: String,
    pub upper_exponent: f64,
    pub lower_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub labels_match_curves: bool,
    pub monotone_in_beta: bool,
    pub all_regimes_present: bool,
    pub passed: bool,
    #[serde(skip)]
    pub cells: Vec<PhaseCell>,
}

fn axis(min: f64, max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

fn regime_rank(r: Regime) -> u8 {
    match r {
        Regime::SubOptimal => 0,
        Regime::ConstLr => 1,
        Regime::SmallLrNIter => 2,
    }
}

/// Independent reclassification straight from the two boundary curves.
fn classify_from_curves(alpha: f64, beta: f64, p: f64, q: f64, mu: f64) -> Regime {
    let iter_curve = (alpha + 2.0 * q - p - 1.0) / alpha;
    let capacity_curve = (mu * alpha + 2.0 * q - p + 1.0) / alpha;
    if beta > iter_curve.max(capacity_curve) {
        Regime::SmallLrNIter
    } else if beta < iter_curve.min(capacity_curve) {
        Regime::SubOptimal
    } else {
        Regime::ConstLr
    }
}

/// Sweeps the grid and writes `phase.csv`.
pub fn run_phase(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<PhaseReport> {
    let p = cfg.spec.p();
    let q = cfg.spec.q();
    let gamma_eval = cfg.gammas_eval.first().copied().unwrap_or(0.0);
    let alphas = axis(cfg.phase.alpha_min, cfg.phase.alpha_max, cfg.phase.alpha_points);
    let betas = axis(cfg.phase.beta_min, cfg.phase.beta_max, cfg.phase.beta_points);

    let mut cells = Vec::with_capacity(alphas.len() * betas.len());
    let mut labels_match = true;
    let mut monotone = true;
    let mut seen = [false; 3];
    for &alpha in &alphas {
        let mu = match cfg.phase.mu_rule {
            MuRule::InverseAlpha => 1.0 / alpha,
            MuRule::Fixed => cfg.spec.mu(),
        };
        let mut prev_rank = 0u8;
        for (bi, &beta) in betas.iter().enumerate() {
            let spec = SpectrumSpec::builder(alpha, p, q, beta)
                .mu(mu)
                .n_trunc(2)
                .build()?;
            let regime = bounds::regime_classify(&spec);
            labels_match =
                labels_match && regime == classify_from_curves(alpha, beta, p, q, mu);
            let rank = regime_rank(regime);
            if bi > 0 && rank < prev_rank {
                monotone = false;
            }
            prev_rank = rank;
            seen[rank as usize] = true;
            let upper =
                bounds::rate_exponent(&spec, gamma_eval, RateBound::Upper).unwrap_or(f64::NAN);
            let lower =
                bounds::rate_exponent(&spec, gamma_eval, RateBound::Lower).unwrap_or(f64::NAN);
            cells.push(PhaseCell {
                alpha,
                beta,
                regime: regime.to_string(),
                upper_exponent: upper,
                lower_exponent: lower,
            });
        }
    }

    let all_present = seen.iter().all(|&s| s);
    let report = PhaseReport {
        labels_match_curves: labels_match,
        monotone_in_beta: monotone,
        all_regimes_present: all_present,
        passed: labels_match && monotone && all_present,
        cells,
    };
    write_phase_csv(&report, &out_dir.join("phase.csv"))?;
    Ok(report)
}

fn write_phase_csv(report: &PhaseReport, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["alpha", "beta", "regime", "upper_exponent", "lower_exponent"])?;
    for cell in &report.cells {
        w.write_record([
            format!("{}", cell.alpha),
            format!("{}", cell.beta),
            cell.regime.clone(),
            format!("{}", cell.upper_exponent),
            format!("{}", cell.lower_exponent),
        ])?;
    }
    w.flush()?;
    Ok(())
}
