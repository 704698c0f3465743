//! Numerical laboratory for linear inverse problems solved by early-stopped,
//! averaged gradient descent in a shared eigenbasis.
//!
//! Everything operates on a diagonal model: a kernel spectrum `lambda_i`,
//! two operator symbol sequences `p_i`, `q_i`, and functions represented by
//! their coefficients in a common orthonormal Fourier basis on the torus.
//! The crate provides:
//!
//! - [`spectral`]: the diagonal model ([`spectral::SpectrumSpec`]), power
//!   norms, operator application, and target construction.
//! - [`basis`]: the real Fourier basis on `T^d` with deterministic mode
//!   ordering and pointwise evaluation.
//! - [`data`]: seeded sampling of noisy observation datasets.
//! - [`filter`]: the scalar spectral filter of averaged gradient descent and
//!   its residual, with the analytic bounds they satisfy.
//! - [`gd`]: the empirical iteration (design-matrix fast path, dense
//!   reference oracle, diagonal population dynamics, ridge comparator).
//! - [`bounds`]: regime classification, stopping schedules, rate exponents,
//!   and exact spectral evaluation of bias/variance functionals with
//!   envelope ratio checks.
//! - [`minimax`]: binary packing codebooks and separated hypothesis families
//!   with information-theoretic failure bounds.
//! - [`pde`]: torus PDE operator symbol sets (variational and residual
//!   objectives), integration-by-parts identities, and the
//!   iterations-to-optimum experiment.
//! - [`stats`]: log-log slope fitting and replication aggregation.
//!
//! # Example
//!
//! ```
//! use specfilter_core::spectral::SpectrumSpec;
//! use specfilter_core::{filter, gd};
//!
//! let spec = SpectrumSpec::builder(2.0, 0.0, 0.0, 1.0)
//!     .n_trunc(32)
//!     .build()
//!     .unwrap();
//! let target = spec.make_target(0.05, 1.0).unwrap();
//!
//! // Averaged gradient descent on the noiseless population operator equals
//! // the closed-form spectral filter, mode by mode.
//! let t = 64;
//! let gamma = 0.5;
//! let (iterated, _) = gd::population_gd(&spec, &target, t, gamma, &[0.0]).unwrap();
//! let filtered = gd::population_filter(&spec, &target, t, gamma).unwrap();
//! for (a, b) in iterated.coeffs().iter().zip(filtered.coeffs()) {
//!     assert!((a - b).abs() <= 1e-12);
//! }
//! let _ = filter::filter_gd(t, gamma, 0.25).unwrap();
//! ```

pub mod basis;
pub mod bounds;
pub mod data;
pub mod filter;
pub mod gd;
pub mod minimax;
pub mod pde;
pub mod spectral;
pub mod stats;

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A 1-based mode index fell outside the retained spectrum.
    #[error("mode index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    /// A model description violated one of its invariants.
    #[error("invalid spectrum: {0}")]
    InvalidSpec(String),

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A learning rate exceeded the stability limit of the operator it was
    /// applied to (`gamma * spectral_radius` must stay at or below 1).
    #[error("unstable step size: gamma {gamma} against spectral radius {rho}")]
    Unstable { gamma: f64, rho: f64 },

    /// An iterate exceeded the overflow guard; carries the first bad step.
    #[error("iteration diverged at step {iteration}")]
    Diverged { iteration: u64 },

    /// A linear solve hit a numerically singular system.
    #[error("linear system is singular")]
    SingularSystem,

    /// A dataset with zero observations was requested.
    #[error("dataset must contain at least one observation")]
    EmptyDataset,

    /// Randomized codebook search ran out of attempts; retry with a larger
    /// budget (existence is guaranteed, the search is randomized).
    #[error("codebook search exhausted {tries} attempts; increase max_tries")]
    SearchBudgetExhausted { tries: u64 },

    /// A hypothesis-family size violated one of its named admissibility
    /// budgets.
    #[error("block length m={m} violates the {budget} budget (limit {limit:.3})")]
    FamilyBudgetViolated {
        budget: String,
        m: usize,
        limit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
