//! Diagonal spectral model shared by every other module.
//!
//! A [`SpectrumSpec`] fixes three power-law symbol families on a common
//! orthonormal basis: kernel eigenvalues `lambda_i = c_lambda * i^-alpha` and
//! two operator symbols `p_i = c_p * i^-p`, `q_i = c_q * i^-q`. Functions are
//! stored as coefficient vectors in that basis and all norms are weighted
//! coefficient sums.

use serde::{Deserialize, Serialize};

use crate::basis::TorusBasis;
use crate::{Error, Result};

/// Partial sums above this value make a norm query report divergence.
pub const POWER_SUM_OVERFLOW: f64 = 1e12;

/// Power-law spectral model: decay exponents, scale constants and truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrumSpec")]
pub struct SpectrumSpec {
    alpha: f64,
    p: f64,
    q: f64,
    beta: f64,
    mu: f64,
    c_lambda: f64,
    c_p: f64,
    c_q: f64,
    n_trunc: usize,
    dimension: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrumSpec {
    alpha: f64,
    p: f64,
    q: f64,
    beta: f64,
    mu: Option<f64>,
    c_lambda: Option<f64>,
    c_p: Option<f64>,
    c_q: Option<f64>,
    n_trunc: Option<usize>,
    dimension: Option<usize>,
}

impl TryFrom<RawSpectrumSpec> for SpectrumSpec {
    type Error = Error;

    fn try_from(raw: RawSpectrumSpec) -> Result<Self> {
        let mut builder = SpectrumSpec::builder(raw.alpha, raw.p, raw.q, raw.beta);
        if let Some(mu) = raw.mu {
            builder = builder.mu(mu);
        }
        if let Some(c) = raw.c_lambda {
            builder = builder.c_lambda(c);
        }
        if let Some(c) = raw.c_p {
            builder = builder.c_p(c);
        }
        if let Some(c) = raw.c_q {
            builder = builder.c_q(c);
        }
        if let Some(n) = raw.n_trunc {
            builder = builder.n_trunc(n);
        }
        if let Some(d) = raw.dimension {
            builder = builder.dimension(d);
        }
        builder.build()
    }
}

/// Builder for [`SpectrumSpec`]; unset optional fields take their defaults.
#[derive(Debug, Clone)]
pub struct SpectrumSpecBuilder {
    alpha: f64,
    p: f64,
    q: f64,
    beta: f64,
    mu: Option<f64>,
    c_lambda: f64,
    c_p: f64,
    c_q: f64,
    n_trunc: usize,
    dimension: usize,
}

impl SpectrumSpecBuilder {
    /// Sets the embedding order; defaults to `1 / alpha`.
    pub fn mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    /// Sets the eigenvalue scale constant (default 1).
    pub fn c_lambda(mut self, c: f64) -> Self {
        self.c_lambda = c;
        self
    }

    /// Sets the p-symbol scale constant (default 1).
    pub fn c_p(mut self, c: f64) -> Self {
        self.c_p = c;
        self
    }

    /// Sets the q-symbol scale constant (default 1).
    pub fn c_q(mut self, c: f64) -> Self {
        self.c_q = c;
        self
    }

    /// Sets the number of retained modes (default 512).
    pub fn n_trunc(mut self, n: usize) -> Self {
        self.n_trunc = n;
        self
    }

    /// Sets the torus dimension for the basis (default 1).
    pub fn dimension(mut self, d: usize) -> Self {
        self.dimension = d;
        self
    }

    /// Validates all fields and produces the spec.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSpec`] when any constraint fails: `alpha > 1`,
    /// `alpha + p > 0`, `p <= 0`, `q <= 0`, `beta >= 0`, `mu` in `(0, 1]`,
    /// positive scale constants, `n_trunc >= 1`, `dimension >= 1`.
    pub fn build(self) -> Result<SpectrumSpec> {
        let mu = self.mu.unwrap_or(1.0 / self.alpha);
        let spec = SpectrumSpec {
            alpha: self.alpha,
            p: self.p,
            q: self.q,
            beta: self.beta,
            mu,
            c_lambda: self.c_lambda,
            c_p: self.c_p,
            c_q: self.c_q,
            n_trunc: self.n_trunc,
            dimension: self.dimension,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl SpectrumSpec {
    /// Starts a builder from the four exponents that have no defaults.
    pub fn builder(alpha: f64, p: f64, q: f64, beta: f64) -> SpectrumSpecBuilder {
        SpectrumSpecBuilder {
            alpha,
            p,
            q,
            beta,
            mu: None,
            c_lambda: 1.0,
            c_p: 1.0,
            c_q: 1.0,
            n_trunc: 512,
            dimension: 1,
        }
    }

    /// Checks every field constraint; builders and deserialization call this.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        if !self.alpha.is_finite() || self.alpha <= 1.0 {
            return fail(format!("alpha must be finite and > 1, got {}", self.alpha));
        }
        if !self.p.is_finite() || self.p > 0.0 {
            return fail(format!("p must be finite and <= 0, got {}", self.p));
        }
        if !self.q.is_finite() || self.q > 0.0 {
            return fail(format!("q must be finite and <= 0, got {}", self.q));
        }
        if self.alpha + self.p <= 0.0 {
            return fail(format!(
                "alpha + p must be positive, got {} + {}",
                self.alpha, self.p
            ));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return fail(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 || self.mu > 1.0 {
            return fail(format!("mu must lie in (0, 1], got {}", self.mu));
        }
        for (name, c) in [
            ("c_lambda", self.c_lambda),
            ("c_p", self.c_p),
            ("c_q", self.c_q),
        ] {
            if !c.is_finite() || c <= 0.0 {
                return fail(format!("{name} must be finite and positive, got {c}"));
            }
        }
        if self.n_trunc == 0 {
            return fail("n_trunc must be at least 1".to_string());
        }
        if self.dimension == 0 {
            return fail("dimension must be at least 1".to_string());
        }
        Ok(())
    }

    /// Kernel decay exponent.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Symbol exponent of the p family.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Symbol exponent of the q family.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Source condition order.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Embedding order.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Eigenvalue scale constant.
    pub fn c_lambda(&self) -> f64 {
        self.c_lambda
    }

    /// p-symbol scale constant.
    pub fn c_p(&self) -> f64 {
        self.c_p
    }

    /// q-symbol scale constant.
    pub fn c_q(&self) -> f64 {
        self.c_q
    }

    /// Number of retained modes.
    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// Torus dimension.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Returns `(lambda_i, p_i, q_i)` for the 1-based mode index `i`.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] unless `1 <= i <= n_trunc`.
    pub fn eigenvalues(&self, i: usize) -> Result<(f64, f64, f64)> {
        if i == 0 || i > self.n_trunc {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: self.n_trunc,
            });
        }
        let x = i as f64;
        Ok((
            self.c_lambda * x.powf(-self.alpha),
            self.c_p * x.powf(-self.p),
            self.c_q * x.powf(-self.q),
        ))
    }

    /// Precomputes all three symbol arrays for fast repeated access.
    pub fn diagonal_model(&self) -> DiagonalModel {
        let mut lambda = Vec::with_capacity(self.n_trunc);
        let mut p_w = Vec::with_capacity(self.n_trunc);
        let mut q_w = Vec::with_capacity(self.n_trunc);
        for i in 1..=self.n_trunc {
            let (l, pw, qw) = self.eigenvalues(i).expect("index within truncation");
            lambda.push(l);
            p_w.push(pw);
            q_w.push(qw);
        }
        DiagonalModel {
            lambda,
            p_w,
            q_w,
        }
    }

    /// Weighted coefficient norm `(sum_i lambda_i^-gamma a_i^2)^(1/2)`.
    ///
    /// `gamma = 0` recovers the plain L2 norm. Partial sums beyond
    /// [`POWER_SUM_OVERFLOW`], and non-finite inputs, report
    /// [`NormValue::Diverged`] instead of a number.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] when the coefficient vector is longer than
    /// `n_trunc`.
    pub fn power_norm(&self, u: &FunctionCoeffs, gamma: f64) -> Result<NormValue> {
        if u.len() > self.n_trunc {
            return Err(Error::IndexOutOfRange {
                index: u.len(),
                max: self.n_trunc,
            });
        }
        let mut sum = 0.0f64;
        for (j, &a) in u.coeffs().iter().enumerate() {
            let i = (j + 1) as f64;
            let lambda = self.c_lambda * i.powf(-self.alpha);
            let term = lambda.powf(-gamma) * a * a;
            if !term.is_finite() {
                return Ok(NormValue::Diverged);
            }
            sum += term;
            if sum.abs() > POWER_SUM_OVERFLOW {
                return Ok(NormValue::Diverged);
            }
        }
        Ok(NormValue::Finite(sum.sqrt()))
    }

    /// Multiplies coefficients by one of the diagonal symbol families.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] when the input is longer than `n_trunc`;
    /// [`Error::InvalidArgument`] when a ratio symbol would divide by zero.
    pub fn apply_operator(&self, u: &FunctionCoeffs, which: OperatorKind) -> Result<FunctionCoeffs> {
        if u.len() > self.n_trunc {
            return Err(Error::IndexOutOfRange {
                index: u.len(),
                max: self.n_trunc,
            });
        }
        let mut out = Vec::with_capacity(u.len());
        for (j, &a) in u.coeffs().iter().enumerate() {
            let i = (j + 1) as f64;
            let factor = match which {
                OperatorKind::PSymbol => self.c_p * i.powf(-self.p),
                OperatorKind::QSymbol => self.c_q * i.powf(-self.q),
                OperatorKind::SymbolRatio => {
                    let q_i = self.c_q * i.powf(-self.q);
                    if q_i == 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "ratio symbol divides by zero at mode {}",
                            j + 1
                        )));
                    }
                    self.c_p * i.powf(-self.p) / q_i
                }
                OperatorKind::CovariancePower(s) => {
                    (self.c_lambda * i.powf(-self.alpha)).powf(s)
                }
            };
            out.push(factor * a);
        }
        Ok(FunctionCoeffs::new(out))
    }

    /// Builds the canonical target `a_i = scale * lambda_i^(beta/2) * i^-(1/2+delta)`.
    ///
    /// The coefficient vector has length `n_trunc`. Its squared beta-norm is
    /// `scale^2 * sum i^-(1+2 delta)`, finite for every positive `delta`.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] when `delta <= 0` or `scale` is not finite.
    pub fn make_target(&self, delta: f64, scale: f64) -> Result<FunctionCoeffs> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "target decay margin must be positive, got {delta}"
            )));
        }
        if !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target scale must be finite, got {scale}"
            )));
        }
        let mut coeffs = Vec::with_capacity(self.n_trunc);
        for i in 1..=self.n_trunc {
            let x = i as f64;
            let lambda = self.c_lambda * x.powf(-self.alpha);
            coeffs.push(scale * lambda.powf(0.5 * self.beta) * x.powf(-(0.5 + delta)));
        }
        Ok(FunctionCoeffs::new(coeffs))
    }

    /// Derived validation quantities and textual warnings for this spectrum.
    pub fn diagnostics(&self) -> SpectrumDiagnostics {
        let mut kernel_sup_sq = 0.0;
        let mut embedding_sum = 0.0;
        let mut trace_power = 0.0;
        for i in 1..=self.n_trunc {
            let x = i as f64;
            let lambda = self.c_lambda * x.powf(-self.alpha);
            let sup_sq = if i == 1 { 1.0 } else { 2.0 };
            kernel_sup_sq += lambda * sup_sq;
            embedding_sum += lambda.powf(self.mu) * sup_sq;
            trace_power += lambda.powf(1.0 / self.alpha);
        }
        let embedding_diverges = self.mu * self.alpha <= 1.0;
        let mut warnings = Vec::new();
        if embedding_diverges {
            warnings.push(format!(
                "embedding sum sum_i lambda_i^mu sup|e_i|^2 diverges with mode count \
                 (mu * alpha = {} <= 1); truncated value at n_trunc={} is {embedding_sum}",
                self.mu * self.alpha,
                self.n_trunc
            ));
        }
        SpectrumDiagnostics {
            kernel_sup_sq,
            embedding_sum,
            embedding_diverges,
            trace_power,
            warnings,
        }
    }
}

/// Derived quantities reported by [`SpectrumSpec::diagnostics`].
#[derive(Debug, Clone)]
pub struct SpectrumDiagnostics {
    /// Truncated bound on `sup_x k(x, x)`: `sum_i lambda_i sup|e_i|^2`.
    pub kernel_sup_sq: f64,
    /// Truncated embedding sum `sum_i lambda_i^mu sup|e_i|^2`.
    pub embedding_sum: f64,
    /// True when the embedding sum grows without bound in the mode count.
    pub embedding_diverges: bool,
    /// Truncated trace of the covariance raised to `1/alpha`.
    pub trace_power: f64,
    /// Human-readable warnings; empty when the spectrum is numerically safe.
    pub warnings: Vec<String>,
}

/// Selector for the diagonal operators acting on coefficient vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// Multiply mode `i` by `p_i / q_i`.
    SymbolRatio,
    /// Multiply mode `i` by `p_i`.
    PSymbol,
    /// Multiply mode `i` by `q_i`.
    QSymbol,
    /// Multiply mode `i` by `lambda_i^s`.
    CovariancePower(f64),
}

/// A function stored as coefficients in the shared orthonormal basis.
///
/// Slot `j` (0-based) holds the coefficient of basis function `j`, which the
/// spectral model addresses as mode `i = j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionCoeffs {
    coeffs: Vec<f64>,
}

impl FunctionCoeffs {
    /// Wraps a coefficient vector.
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Borrows the coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when no coefficients are stored.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Consumes the wrapper and returns the raw vector.
    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }
}

/// Outcome of a norm query: a number, or a flag when the weighted sum left
/// the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormValue {
    /// The norm is finite and equals the wrapped value.
    Finite(f64),
    /// Partial sums exceeded [`POWER_SUM_OVERFLOW`] or were not finite.
    Diverged,
}

impl NormValue {
    /// Returns the value when finite.
    pub fn finite(self) -> Option<f64> {
        match self {
            NormValue::Finite(v) => Some(v),
            NormValue::Diverged => None,
        }
    }

    /// Unwraps the finite value, panicking on divergence.
    pub fn unwrap_finite(self) -> f64 {
        self.finite().expect("norm diverged")
    }

    /// True when the query diverged.
    pub fn is_diverged(self) -> bool {
        matches!(self, NormValue::Diverged)
    }
}

/// Precomputed symbol arrays `lambda_i`, `p_i`, `q_i` for `i = 1..=n_trunc`.
#[derive(Debug, Clone)]
pub struct DiagonalModel {
    lambda: Vec<f64>,
    p_w: Vec<f64>,
    q_w: Vec<f64>,
}

impl DiagonalModel {
    /// Number of modes.
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    /// True when no modes are stored.
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Kernel eigenvalues in mode order.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// p-symbol values in mode order.
    pub fn p_weights(&self) -> &[f64] {
        &self.p_w
    }

    /// q-symbol values in mode order.
    pub fn q_weights(&self) -> &[f64] {
        &self.q_w
    }
}

/// Pointwise synthesis `sum_j a_j e_j(x)` against a torus basis.
///
/// # Errors
///
/// [`Error::InvalidArgument`] when the coefficient vector is longer than the
/// basis or `x` has the wrong dimension.
pub fn eval_function(u: &FunctionCoeffs, basis: &TorusBasis, x: &[f64]) -> Result<f64> {
    if u.len() > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "function has {} coefficients but basis has {} functions",
            u.len(),
            basis.len()
        )));
    }
    let mut row = vec![0.0; basis.len()];
    basis.row(x, &mut row)?;
    Ok(u.coeffs()
        .iter()
        .zip(row.iter())
        .map(|(&a, &e)| a * e)
        .sum())
}
