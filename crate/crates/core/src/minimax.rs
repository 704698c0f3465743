//! Packing-based lower bounds: randomized codebook search, separated
//! hypothesis families in a weighted norm, and the information-theoretic
//! floor on the achievable rate.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::spectral::{FunctionCoeffs, NormValue, OperatorKind, SpectrumSpec};
use crate::{Error, Result};

/// Binary code over m positions with a guaranteed minimum pairwise distance.
#[derive(Debug, Clone)]
pub struct Codebook {
    m: usize,
    words: Vec<Vec<u64>>,
    min_pairwise_hamming: usize,
}

impl Codebook {
    /// Number of binary positions per word.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of words, including the all-zeros word.
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Smallest pairwise Hamming distance, verified exhaustively.
    pub fn min_pairwise_hamming(&self) -> usize {
        self.min_pairwise_hamming
    }

    /// Bit `pos` of word `word`.
    pub fn bit(&self, word: usize, pos: usize) -> bool {
        (self.words[word][pos / 64] >> (pos % 64)) & 1 == 1
    }

    /// Hamming distance between two words.
    pub fn hamming(&self, i: usize, j: usize) -> usize {
        self.words[i]
            .iter()
            .zip(&self.words[j])
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Number of set bits in a word.
    pub fn weight(&self, word: usize) -> usize {
        self.words[word]
            .iter()
            .map(|a| a.count_ones() as usize)
            .sum()
    }

    /// Word as a 0/1 string, lowest position first.
    pub fn bitstring(&self, word: usize) -> String {
        (0..self.m)
            .map(|pos| if self.bit(word, pos) { '1' } else { '0' })
            .collect()
    }
}

fn hamming_blocks(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

/// Randomized greedy packing: grows a code of 2^ceil(m/8) words over m
/// positions with pairwise Hamming distance at least ceil(m/8), starting
/// from the all-zeros word.
///
/// # Errors
///
/// [`Error::SearchBudgetExhausted`] when `max_tries` candidates were drawn
/// before the code reached full size; [`Error::InvalidArgument`] for m < 8.
pub fn gilbert_varshamov(m: usize, seed: u64, max_tries: u64) -> Result<Codebook> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!(
            "codebook needs at least 8 positions, got {m}"
        )));
    }
    let dmin = m.div_ceil(8);
    let want = 1usize << dmin;
    let blocks = m.div_ceil(64);
    let spare_bits = blocks * 64 - m;
    let last_mask = if spare_bits == 0 {
        u64::MAX
    } else {
        u64::MAX >> spare_bits
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<Vec<u64>> = vec![vec![0u64; blocks]];
    let mut tries = 0u64;
    while words.len() < want {
        if tries >= max_tries {
            return Err(Error::SearchBudgetExhausted { tries });
        }
        tries += 1;
        let mut candidate: Vec<u64> = (0..blocks).map(|_| rng.next_u64()).collect();
        candidate[blocks - 1] &= last_mask;
        if words
            .iter()
            .all(|w| hamming_blocks(w, &candidate) >= dmin)
        {
            words.push(candidate);
        }
    }
    let mut min_pairwise = usize::MAX;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            min_pairwise = min_pairwise.min(hamming_blocks(&words[i], &words[j]));
        }
    }
    assert!(min_pairwise >= dmin, "packing verification failed");
    Ok(Codebook {
        m,
        words,
        min_pairwise_hamming: min_pairwise,
    })
}

/// Separated hypothesis family indexed by a codebook.
#[derive(Debug, Clone)]
pub struct HypothesisFamily {
    epsilon: f64,
    m: usize,
    gamma_eval: f64,
    code: Codebook,
    hypotheses: Vec<FunctionCoeffs>,
    images: Vec<FunctionCoeffs>,
}

impl HypothesisFamily {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gamma_eval(&self) -> f64 {
        self.gamma_eval
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn code(&self) -> &Codebook {
        &self.code
    }

    pub fn hypothesis(&self, i: usize) -> &FunctionCoeffs {
        &self.hypotheses[i]
    }

    /// Image of hypothesis i under the forward symbol ratio.
    pub fn image(&self, i: usize) -> &FunctionCoeffs {
        &self.images[i]
    }

    /// Writes the family as JSON: epsilon, m, codewords as bitstrings, and
    /// the per-hypothesis coefficient vectors.
    pub fn write_json<W: std::io::Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Export<'a> {
            epsilon: f64,
            m: usize,
            gamma_eval: f64,
            codewords: Vec<String>,
            hypotheses: Vec<&'a [f64]>,
        }
        let export = Export {
            epsilon: self.epsilon,
            m: self.m,
            gamma_eval: self.gamma_eval,
            codewords: (0..self.code.word_count())
                .map(|w| self.code.bitstring(w))
                .collect(),
            hypotheses: self.hypotheses.iter().map(|h| h.coeffs()).collect(),
        };
        serde_json::to_writer_pretty(writer, &export)
            .map_err(|e| Error::InvalidArgument(format!("family export failed: {e}")))?;
        Ok(())
    }
}

/// Builds one hypothesis per codeword, supported on modes m+1..=2m with
/// per-mode size sqrt(epsilon/m) in the evaluation norm.
///
/// # Errors
///
/// [`Error::FamilyBudgetViolated`] when m exceeds either packing budget;
/// [`Error::IndexOutOfRange`] when 2m exceeds the truncation;
/// [`Error::InvalidArgument`] for inconsistent inputs.
pub fn build_hypotheses(
    spec: &SpectrumSpec,
    epsilon: f64,
    m: usize,
    code: &Codebook,
    gamma_eval: f64,
    budget_c: f64,
) -> Result<HypothesisFamily> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "separation scale {epsilon} must be positive"
        )));
    }
    if !(budget_c.is_finite() && budget_c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "budget constant {budget_c} must be positive"
        )));
    }
    if m != code.m() {
        return Err(Error::InvalidArgument(format!(
            "codebook covers {} positions but the family asks for {m}",
            code.m()
        )));
    }
    if 2 * m > spec.n_trunc() {
        return Err(Error::IndexOutOfRange {
            index: 2 * m,
            max: spec.n_trunc(),
        });
    }
    let alpha = spec.alpha();
    let beta = spec.beta();
    let mu = spec.mu();
    if gamma_eval >= beta || gamma_eval >= mu {
        return Err(Error::InvalidArgument(format!(
            "evaluation exponent {gamma_eval} must sit below both smoothness ({beta}) and embedding ({mu}) exponents"
        )));
    }
    let source_limit = budget_c * epsilon.powf(-1.0 / (alpha * (beta - gamma_eval)));
    if m as f64 > source_limit {
        return Err(Error::FamilyBudgetViolated {
            budget: "source".to_string(),
            m,
            limit: source_limit,
        });
    }
    let embedding_limit = budget_c * epsilon.powf(-1.0 / (alpha * (mu - gamma_eval)));
    if m as f64 > embedding_limit {
        return Err(Error::FamilyBudgetViolated {
            budget: "embedding".to_string(),
            m,
            limit: embedding_limit,
        });
    }
    let scale = (epsilon / m as f64).sqrt();
    let mut hypotheses = Vec::with_capacity(code.word_count());
    let mut images = Vec::with_capacity(code.word_count());
    for w in 0..code.word_count() {
        let mut coeffs = vec![0.0f64; 2 * m];
        for i in 1..=m {
            if code.bit(w, i - 1) {
                let (lam, _, _) = spec.eigenvalues(m + i)?;
                coeffs[m + i - 1] = scale * lam.powf(gamma_eval / 2.0);
            }
        }
        let u = FunctionCoeffs::new(coeffs);
        let f = spec.apply_operator(&u, OperatorKind::SymbolRatio)?;
        hypotheses.push(u);
        images.push(f);
    }
    Ok(HypothesisFamily {
        epsilon,
        m,
        gamma_eval,
        code: code.clone(),
        hypotheses,
        images,
    })
}

/// Norm and separation certificate for a hypothesis family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub epsilon: f64,
    pub m: usize,
    pub word_count: usize,
    pub max_beta_norm: f64,
    pub max_mu_norm: f64,
    pub min_separation_sq: f64,
    pub separation_floor: f64,
    pub beta_norm_cap: f64,
    pub pairs_checked: usize,
    /// Largest relative gap between measured pairwise separation and the
    /// code-distance identity epsilon/m times the Hamming distance.
    pub identity_max_rel_err: f64,
    pub passed: bool,
}

fn finite_norm(value: NormValue, what: &str) -> Result<f64> {
    match value {
        NormValue::Finite(v) => Ok(v),
        NormValue::Diverged => Err(Error::InvalidArgument(format!(
            "{what} diverged while certifying the family"
        ))),
    }
}

/// Measures the family's norms and pairwise separations from scratch and
/// compares them to the construction's guarantees.
pub fn certify_family(
    family: &HypothesisFamily,
    spec: &SpectrumSpec,
    beta_norm_cap: f64,
) -> Result<FamilyReport> {
    let mut max_beta_norm = 0.0f64;
    let mut max_mu_norm = 0.0f64;
    for u in &family.hypotheses {
        let b = finite_norm(spec.power_norm(u, spec.beta())?, "source norm")?;
        let m = finite_norm(spec.power_norm(u, spec.mu())?, "embedding norm")?;
        max_beta_norm = max_beta_norm.max(b);
        max_mu_norm = max_mu_norm.max(m);
    }
    let count = family.len();
    let mut min_separation_sq = f64::INFINITY;
    let mut identity_max_rel_err = 0.0f64;
    let mut pairs_checked = 0usize;
    let per_bit = family.epsilon / family.m as f64;
    for i in 0..count {
        for j in (i + 1)..count {
            let a = family.hypotheses[i].coeffs();
            let b = family.hypotheses[j].coeffs();
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let sep = finite_norm(
                spec.power_norm(&FunctionCoeffs::new(diff), family.gamma_eval)?,
                "separation norm",
            )?;
            let sep_sq = sep * sep;
            let predicted = per_bit * family.code.hamming(i, j) as f64;
            let rel = (sep_sq - predicted).abs() / predicted.max(f64::MIN_POSITIVE);
            identity_max_rel_err = identity_max_rel_err.max(rel);
            min_separation_sq = min_separation_sq.min(sep_sq);
            pairs_checked += 1;
        }
    }
    let separation_floor = family.epsilon / 8.0;
    let passed = max_beta_norm <= beta_norm_cap
        && min_separation_sq >= separation_floor * (1.0 - 1e-9)
        && identity_max_rel_err <= 1e-9;
    Ok(FamilyReport {
        epsilon: family.epsilon,
        m: family.m,
        word_count: count,
        max_beta_norm,
        max_mu_norm,
        min_separation_sq,
        separation_floor,
        beta_norm_cap,
        pairs_checked,
        identity_max_rel_err,
        passed,
    })
}

/// Information-theoretic floor derived from a hypothesis family.
#[derive(Debug, Clone, Serialize)]
pub struct FanoBound {
    /// Upper bound on the mutual information between index and sample.
    pub mutual_info_bound: f64,
    /// Lower bound on the identification failure probability, clamped to [0, 1].
    pub failure_prob_lower_bound: f64,
    /// Exponent of the implied separation scale epsilon(n) ~ n^exponent.
    pub epsilon_rate_exponent: f64,
}

/// Bounds the mutual information through the images' mean squared spread and
/// converts it to a failure-probability and rate floor.
///
/// # Errors
///
/// [`Error::InvalidArgument`] for nonpositive noise level, fewer than two
/// hypotheses, or an empty sample.
pub fn fano_bound(
    family: &HypothesisFamily,
    spec: &SpectrumSpec,
    n: u64,
    sigma: f64,
) -> Result<FanoBound> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level {sigma} must be positive"
        )));
    }
    if family.len() < 2 {
        return Err(Error::InvalidArgument(
            "information bound needs at least two hypotheses".to_string(),
        ));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let count = family.len() as f64;
    let base = family.images[0].coeffs();
    let mut spread = 0.0f64;
    for img in &family.images {
        for (a, b) in img.coeffs().iter().zip(base) {
            let d = a - b;
            spread += d * d;
        }
    }
    let sigma_bar = sigma;
    let mutual_info_bound = n as f64 / (2.0 * sigma_bar * sigma_bar * count) * spread;
    let failure_prob_lower_bound =
        (1.0 - (mutual_info_bound + std::f64::consts::LN_2) / count.ln()).clamp(0.0, 1.0);
    let s = spec.beta().max(spec.mu());
    let epsilon_rate_exponent = -(s - family.gamma_eval) * spec.alpha()
        / (s * spec.alpha() + 2.0 * (spec.p() - spec.q()) + 1.0);
    Ok(FanoBound {
        mutual_info_bound,
        failure_prob_lower_bound,
        epsilon_rate_exponent,
    })
}

/// Largest multiple of 8 (at least 8) fitting both packing budgets for the
/// given separation scale, or None when even 8 does not fit.
pub fn budget_m(spec: &SpectrumSpec, epsilon: f64, gamma_eval: f64, budget_c: f64) -> Option<usize> {
    let alpha = spec.alpha();
    let beta = spec.beta();
    let mu = spec.mu();
    if gamma_eval >= beta || gamma_eval >= mu || epsilon <= 0.0 || budget_c <= 0.0 {
        return None;
    }
    let source = budget_c * epsilon.powf(-1.0 / (alpha * (beta - gamma_eval)));
    let embedding = budget_c * epsilon.powf(-1.0 / (alpha * (mu - gamma_eval)));
    let cap = source.min(embedding).floor();
    if cap < 8.0 {
        return None;
    }
    let m = (cap as usize / 8) * 8;
    Some(m)
}
