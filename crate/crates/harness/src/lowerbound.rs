//! Minimax lower-bound certification: packing codebook, budgeted hypothesis
//! families across separation scales, and information-theoretic failure
//! bounds with an exponent cross-check.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use specfilter_core::bounds::{self, RateBound};
use specfilter_core::data::mix_seed;
use specfilter_core::minimax::{self, FamilyReport, FanoBound};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CodebookSummary {
    pub m: usize,
    pub word_count: usize,
    pub min_pairwise_hamming: usize,
    pub required_words: usize,
    pub required_hamming: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyOutcome {
    pub epsilon: f64,
    pub m: usize,
    pub word_count: usize,
    pub certification: FamilyReport,
    pub fano: FanoBound,
    pub lower_exponent: f64,
    /// Fano exponent against the lower rate exponent, to machine precision.
    pub exponent_match: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShowcaseOutcome {
    pub epsilon: f64,
    pub m: usize,
    pub certification: FamilyReport,
    pub fano: FanoBound,
    pub failure_prob_informative: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerboundReport {
    pub codebook: CodebookSummary,
    pub families: Vec<FamilyOutcome>,
    pub showcase: ShowcaseOutcome,
    pub passed: bool,
}

/// Runs the certification pipeline and writes `lowerbound.json`.
pub fn run_lowerbound(cfg: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<LowerboundReport> {
    let spec = &cfg.spec;
    let lb = &cfg.lowerbound;
    let gamma = lb.gamma_eval;
    let lower_exponent = bounds::rate_exponent(spec, gamma, RateBound::Lower)?;
    let match_tol = 1e-14 * lower_exponent.abs().max(1.0);

    let code = minimax::gilbert_varshamov(lb.codebook_m, cfg.seed, lb.codebook_tries)?;
    let required_hamming = lb.codebook_m.div_ceil(8);
    let required_words = 1usize << required_hamming;
    let codebook = CodebookSummary {
        m: code.m(),
        word_count: code.word_count(),
        min_pairwise_hamming: code.min_pairwise_hamming(),
        required_words,
        required_hamming,
        passed: code.word_count() >= required_words
            && code.min_pairwise_hamming() >= required_hamming,
    };

    let mut families = Vec::with_capacity(lb.epsilons.len());
    let mut families_pass = true;
    for (idx, &epsilon) in lb.epsilons.iter().enumerate() {
        let m = minimax::budget_m(spec, epsilon, gamma, lb.budget_c).with_context(|| {
            format!("no block length fits the packing budgets at epsilon {epsilon}")
        })?;
        let fam_code =
            minimax::gilbert_varshamov(m, mix_seed(cfg.seed, m as u64, idx as u64), lb.codebook_tries)?;
        let family =
            minimax::build_hypotheses(spec, epsilon, m, &fam_code, gamma, lb.budget_c)?;
        let certification = minimax::certify_family(&family, spec, lb.beta_norm_cap)?;
        let fano = minimax::fano_bound(&family, spec, lb.fano_n, lb.fano_sigma)?;
        let exponent_match =
            (fano.epsilon_rate_exponent + lower_exponent).abs() <= match_tol;
        families_pass = families_pass && certification.passed && exponent_match;
        families.push(FamilyOutcome {
            epsilon,
            m,
            word_count: fam_code.word_count(),
            certification,
            fano,
            lower_exponent,
            exponent_match,
        });
    }

    let showcase_family = minimax::build_hypotheses(
        spec,
        lb.showcase_epsilon,
        lb.codebook_m,
        &code,
        gamma,
        lb.budget_c,
    )?;
    let showcase_cert = minimax::certify_family(&showcase_family, spec, lb.beta_norm_cap)?;
    let showcase_fano = minimax::fano_bound(&showcase_family, spec, lb.fano_n, lb.fano_sigma)?;
    let p = showcase_fano.failure_prob_lower_bound;
    let showcase = ShowcaseOutcome {
        epsilon: lb.showcase_epsilon,
        m: lb.codebook_m,
        certification: showcase_cert,
        fano: showcase_fano,
        failure_prob_informative: p > 0.0 && p < 1.0,
    };

    let passed = codebook.passed
        && families_pass
        && showcase.certification.passed
        && showcase.failure_prob_informative;
    let report = LowerboundReport {
        codebook,
        families,
        showcase,
        passed,
    };
    let json = serde_json::to_string_pretty(&report).context("serializing lower-bound report")?;
    std::fs::write(out_dir.join("lowerbound.json"), json + "\n")?;
    Ok(report)
}
