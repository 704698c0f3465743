//! Experiment configuration: one TOML file drives one run mode. Unknown keys
//! are rejected everywhere so typos fail loudly instead of silently using a
//! default, while omitted keys fall back per field.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use specfilter_core::data::NoiseModel;
use specfilter_core::spectral::{FunctionCoeffs, SpectrumSpec};

/// Which experiment the configuration describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rates,
    Phase,
    Bounds,
    Lowerbound,
    Pde,
    Filtercheck,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Rates => "rates",
            Mode::Phase => "phase",
            Mode::Bounds => "bounds",
            Mode::Lowerbound => "lowerbound",
            Mode::Pde => "pde",
            Mode::Filtercheck => "filtercheck",
        };
        f.write_str(s)
    }
}

macro_rules! default_fns {
    ($($name:ident: $ty:ty = $value:expr;)*) => {
        $(fn $name() -> $ty { $value })*
    };
}

default_fns! {
    d_replications: u64 = 1;
    d_gammas: Vec<f64> = vec![0.0];
    d_delta: f64 = 0.05;
    d_scale: f64 = 1.0;
    d_sigma: f64 = 0.0;
    d_opt_scan: f64 = 6.0;
    d_gap: f64 = 3.0;
    d_safety: f64 = 0.9;
    d_sandwich: f64 = 0.15;
    d_alpha_min: f64 = 1.2;
    d_alpha_max: f64 = 4.0;
    d_alpha_points: usize = 15;
    d_beta_min: f64 = 0.05;
    d_beta_max: f64 = 2.2;
    d_beta_points: usize = 44;
    d_mu_rule: MuRule = MuRule::InverseAlpha;
    d_grid_min: f64 = 1e-6;
    d_grid_max: f64 = 1.0;
    d_grid_points: usize = 25;
    d_true: bool = true;
    d_control_shift: f64 = 0.2;
    d_filter_gamma: f64 = 0.5;
    d_filter_t_max: u64 = 1024;
    d_filter_x_points: usize = 512;
    d_epsilons: Vec<f64> = vec![1e-1, 1e-2, 1e-3];
    d_budget_c: f64 = 3.0;
    d_beta_norm_cap: f64 = 6.5;
    d_zero: f64 = 0.0;
    d_codebook_m: usize = 64;
    d_codebook_tries: u64 = 200_000;
    d_showcase_epsilon: f64 = 2e-3;
    d_fano_n: u64 = 4000;
    d_fano_sigma: f64 = 1.0;
    d_operators: Vec<String> = vec!["drm".to_string(), "pinn".to_string()];
    d_sobolev_weight: f64 = 1.0;
    d_t_cap: u64 = 1 << 18;
    d_slope_tol: f64 = 0.15;
    d_pop_t_max: u64 = 1000;
    d_pop_safety: f64 = 0.7;
    d_dense_modes: usize = 8;
    d_dense_samples: usize = 32;
    d_dense_t_max: u64 = 64;
    d_identity_tol: f64 = 1e-12;
}

/// Full experiment description loaded from one TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub spec: SpectrumSpec,
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "d_replications")]
    pub replications: u64,
    #[serde(default = "d_gammas")]
    pub gammas_eval: Vec<f64>,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub lowerbound: LowerboundSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub filtercheck: FilterCheckSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    /// Extra polynomial decay margin of the target beyond the source level.
    #[serde(default = "d_delta")]
    pub delta: f64,
    /// Multiplicative amplitude of the target.
    #[serde(default = "d_scale")]
    pub scale: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            delta: d_delta(),
            scale: d_scale(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Gaussian observation noise standard deviation.
    #[serde(default = "d_sigma")]
    pub sigma: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { sigma: d_sigma() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// The optimum search scans iterations up to this multiple of the
    /// scheduled stopping time.
    #[serde(default = "d_opt_scan")]
    pub opt_scan_factor: f64,
    /// Largest tolerated ratio of scheduled-stop error to optimal-stop error
    /// at the largest sample size, enforced in the constant-step regime.
    #[serde(default = "d_gap")]
    pub gap_factor: f64,
    /// Base step size as a fraction of the inverse estimated radius.
    #[serde(default = "d_safety")]
    pub gamma_safety: f64,
    /// Half-width of the slope window around the theoretical exponents.
    #[serde(default = "d_sandwich")]
    pub sandwich_tolerance: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            opt_scan_factor: d_opt_scan(),
            gap_factor: d_gap(),
            gamma_safety: d_safety(),
            sandwich_tolerance: d_sandwich(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    /// Set the embedding order to 1/alpha at every grid cell.
    InverseAlpha,
    /// Use the embedding order of the base spectrum everywhere.
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default = "d_alpha_min")]
    pub alpha_min: f64,
    #[serde(default = "d_alpha_max")]
    pub alpha_max: f64,
    #[serde(default = "d_alpha_points")]
    pub alpha_points: usize,
    #[serde(default = "d_beta_min")]
    pub beta_min: f64,
    #[serde(default = "d_beta_max")]
    pub beta_max: f64,
    #[serde(default = "d_beta_points")]
    pub beta_points: usize,
    #[serde(default = "d_mu_rule")]
    pub mu_rule: MuRule,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            alpha_min: d_alpha_min(),
            alpha_max: d_alpha_max(),
            alpha_points: d_alpha_points(),
            beta_min: d_beta_min(),
            beta_max: d_beta_max(),
            beta_points: d_beta_points(),
            mu_rule: d_mu_rule(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "d_grid_min")]
    pub grid_min: f64,
    #[serde(default = "d_grid_max")]
    pub grid_max: f64,
    #[serde(default = "d_grid_points")]
    pub grid_points: usize,
    #[serde(default = "d_true")]
    pub include_tail: bool,
    /// Envelope exponent offset used for the deliberate negative control.
    #[serde(default = "d_control_shift")]
    pub control_shift: f64,
    #[serde(default = "d_filter_gamma")]
    pub filter_gamma: f64,
    #[serde(default = "d_filter_t_max")]
    pub filter_t_max: u64,
    #[serde(default = "d_filter_x_points")]
    pub filter_x_points: usize,
    /// Additional spectra checked with the same grid.
    #[serde(default)]
    pub extra_specs: Vec<SpectrumSpec>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            grid_min: d_grid_min(),
            grid_max: d_grid_max(),
            grid_points: d_grid_points(),
            include_tail: d_true(),
            control_shift: d_control_shift(),
            filter_gamma: d_filter_gamma(),
            filter_t_max: d_filter_t_max(),
            filter_x_points: d_filter_x_points(),
            extra_specs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerboundSection {
    /// Separation scales for the budgeted families.
    #[serde(default = "d_epsilons")]
    pub epsilons: Vec<f64>,
    /// Constant in front of both packing budgets.
    #[serde(default = "d_budget_c")]
    pub budget_c: f64,
    /// Certification cap on the hypotheses' source norms.
    #[serde(default = "d_beta_norm_cap")]
    pub beta_norm_cap: f64,
    /// Norm exponent in which separation is certified.
    #[serde(default = "d_zero")]
    pub gamma_eval: f64,
    /// Block length of the standalone codebook run.
    #[serde(default = "d_codebook_m")]
    pub codebook_m: usize,
    #[serde(default = "d_codebook_tries")]
    pub codebook_tries: u64,
    /// Separation scale of the large-codebook showcase family.
    #[serde(default = "d_showcase_epsilon")]
    pub showcase_epsilon: f64,
    /// Sample size entering the information bound.
    #[serde(default = "d_fano_n")]
    pub fano_n: u64,
    /// Noise level entering the information bound.
    #[serde(default = "d_fano_sigma")]
    pub fano_sigma: f64,
}

impl Default for LowerboundSection {
    fn default() -> Self {
        Self {
            epsilons: d_epsilons(),
            budget_c: d_budget_c(),
            beta_norm_cap: d_beta_norm_cap(),
            gamma_eval: d_zero(),
            codebook_m: d_codebook_m(),
            codebook_tries: d_codebook_tries(),
            showcase_epsilon: d_showcase_epsilon(),
            fano_n: d_fano_n(),
            fano_sigma: d_fano_sigma(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    /// Formulations to compare; any of "drm", "pinn", "sobolev_pinn".
    #[serde(default = "d_operators")]
    pub operators: Vec<String>,
    #[serde(default = "d_sobolev_weight")]
    pub sobolev_weight: f64,
    #[serde(default = "d_safety")]
    pub gamma_safety: f64,
    /// Hard ceiling on the optimum search horizon.
    #[serde(default = "d_t_cap")]
    pub t_cap: u64,
    /// Allowed gap between each fitted stopping slope and its prediction.
    #[serde(default = "d_slope_tol")]
    pub slope_tolerance: f64,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            operators: d_operators(),
            sobolev_weight: d_sobolev_weight(),
            gamma_safety: d_safety(),
            t_cap: d_t_cap(),
            slope_tolerance: d_slope_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterCheckSection {
    #[serde(default = "d_pop_t_max")]
    pub population_t_max: u64,
    #[serde(default = "d_pop_safety")]
    pub population_gamma_safety: f64,
    /// Mode count of the small dense-recursion cross-check.
    #[serde(default = "d_dense_modes")]
    pub dense_modes: usize,
    #[serde(default = "d_dense_samples")]
    pub dense_samples: usize,
    #[serde(default = "d_dense_t_max")]
    pub dense_t_max: u64,
    #[serde(default = "d_safety")]
    pub dense_gamma_safety: f64,
    /// Largest allowed absolute deviation between the two routes.
    #[serde(default = "d_identity_tol")]
    pub tolerance: f64,
}

impl Default for FilterCheckSection {
    fn default() -> Self {
        Self {
            population_t_max: d_pop_t_max(),
            population_gamma_safety: d_pop_safety(),
            dense_modes: d_dense_modes(),
            dense_samples: d_dense_samples(),
            dense_t_max: d_dense_t_max(),
            dense_gamma_safety: d_safety(),
            tolerance: d_identity_tol(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a configuration from TOML text.
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("parsing configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a configuration file.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading configuration file {}", path.display()))?;
        Self::from_toml_str(&text)
    }

    /// Serializes the configuration back to TOML.
    pub fn to_toml_string(&self) -> anyhow::Result<String> {
        toml::to_string(self).context("serializing configuration")
    }

    /// Structural checks beyond what field types enforce.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.noise.sigma.is_finite() && self.noise.sigma >= 0.0) {
            bail!("noise sigma {} must be finite and nonnegative", self.noise.sigma);
        }
        if !(self.target.delta > 0.0 && self.target.scale.is_finite()) {
            bail!(
                "target section needs a positive delta and finite scale, got ({}, {})",
                self.target.delta,
                self.target.scale
            );
        }
        for &g in &self.gammas_eval {
            if !g.is_finite() {
                bail!("evaluation norm exponent {g} is not finite");
            }
        }
        match self.mode {
            Mode::Rates => {
                self.check_grid(4, 1.5)?;
                if self.replications == 0 {
                    bail!("rates mode needs at least one replication");
                }
                if self.gammas_eval.is_empty() {
                    bail!("rates mode needs at least one evaluation norm exponent");
                }
                if !(self.rates.opt_scan_factor >= 1.0) {
                    bail!("opt_scan_factor must be at least 1");
                }
                if !(self.rates.gamma_safety > 0.0 && self.rates.gamma_safety < 1.0) {
                    bail!("gamma_safety must sit strictly inside (0, 1)");
                }
            }
            Mode::Pde => {
                self.check_grid(3, 0.0)?;
                if self.replications == 0 {
                    bail!("pde mode needs at least one replication");
                }
                if self.spec.dimension() != 1 {
                    bail!(
                        "pde mode runs on an equispaced one-dimensional design, got dimension {}",
                        self.spec.dimension()
                    );
                }
                if self.pde.operators.is_empty() {
                    bail!("pde mode needs at least one operator set");
                }
                for name in &self.pde.operators {
                    if !matches!(name.as_str(), "drm" | "pinn" | "sobolev_pinn") {
                        bail!("unknown operator set {name}");
                    }
                }
            }
            Mode::Phase => {
                let p = &self.phase;
                if p.alpha_points < 2 || p.beta_points < 2 {
                    bail!("phase grid needs at least 2 points per axis");
                }
                if !(p.alpha_min > 1.0 && p.alpha_max > p.alpha_min) {
                    bail!("phase alpha range must satisfy 1 < alpha_min < alpha_max");
                }
                if !(p.beta_min > 0.0 && p.beta_max > p.beta_min) {
                    bail!("phase beta range must satisfy 0 < beta_min < beta_max");
                }
            }
            Mode::Lowerbound => {
                if self.lowerbound.epsilons.is_empty() {
                    bail!("lowerbound mode needs at least one epsilon");
                }
            }
            Mode::Bounds | Mode::Filtercheck => {}
        }
        Ok(())
    }

    fn check_grid(&self, min_points: usize, min_decades: f64) -> anyhow::Result<()> {
        if self.n_grid.len() < min_points {
            bail!(
                "{} mode needs an n_grid with at least {min_points} points, got {}",
                self.mode,
                self.n_grid.len()
            );
        }
        for w in self.n_grid.windows(2) {
            if w[1] <= w[0] {
                bail!("n_grid must be strictly increasing, got {:?}", self.n_grid);
            }
        }
        let first = self.n_grid[0];
        let last = self.n_grid[self.n_grid.len() - 1];
        if first == 0 {
            bail!("n_grid entries must be positive");
        }
        let decades = (last as f64 / first as f64).log10();
        if decades < min_decades {
            bail!(
                "n_grid spans {decades:.2} decades, needs at least {min_decades} for slope fits"
            );
        }
        Ok(())
    }

    pub fn noise_model(&self) -> anyhow::Result<NoiseModel> {
        Ok(NoiseModel::gaussian(self.noise.sigma)?)
    }

    pub fn target(&self) -> anyhow::Result<FunctionCoeffs> {
        Ok(self.spec.make_target(self.target.delta, self.target.scale)?)
    }
}
