//! Random dataset generation for the observation model `y = (A u*)(x) + noise`.
//!
//! Sampling is fully deterministic in the seed: a counter-based generator is
//! seeded once per dataset and consumed in a fixed order, first all point
//! coordinates, then all noise draws.

use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::TorusBasis;
use crate::spectral::{eval_function, FunctionCoeffs, OperatorKind, SpectrumSpec};
use crate::{Error, Result};

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Observation noise description: Gaussian standard deviation plus the
/// moment-condition scale recorded for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Gaussian standard deviation; zero means exact observations.
    pub sigma: f64,
    /// Bernstein moment scale; Gaussian noise satisfies the moment condition
    /// with this equal to `sigma`.
    pub moment_scale: f64,
}

impl NoiseModel {
    /// Gaussian noise with standard deviation `sigma` and matching moment scale.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] when `sigma` is negative or not finite.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise standard deviation must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            moment_scale: sigma,
        })
    }
}

/// A sampled dataset: `n` points on the torus with noisy observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
}

impl Dataset {
    /// Assembles a dataset from raw parts; used by deserialization.
    ///
    /// # Errors
    ///
    /// [`Error::EmptyDataset`] when `n = 0`; [`Error::InvalidArgument`] when
    /// the buffer lengths disagree with `n` and `d`.
    pub fn from_parts(
        xs: Vec<f64>,
        ys: Vec<f64>,
        d: usize,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = ys.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if d == 0 {
            return Err(Error::InvalidArgument(
                "dataset dimension must be positive".to_string(),
            ));
        }
        if xs.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "coordinate buffer has length {}, expected {} * {}",
                xs.len(),
                n,
                d
            )));
        }
        Ok(Self {
            xs,
            ys,
            n,
            d,
            sigma,
            seed,
        })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient torus dimension of the sample points.
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Noise standard deviation the dataset was drawn with.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Seed the dataset was drawn with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Observed values.
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Coordinates of point `j`.
    pub fn point(&self, j: usize) -> &[f64] {
        &self.xs[j * self.d..(j + 1) * self.d]
    }

    /// All coordinates, row-major.
    pub fn xs_flat(&self) -> &[f64] {
        &self.xs
    }

    /// Writes the dataset to CSV: a metadata header `(n, d, sigma, seed)`
    /// followed by one row per observation holding the coordinates and `y`.
    ///
    /// # Errors
    ///
    /// I/O and CSV formatting failures.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().flexible(true).from_path(path)?;
        writer.write_record(["n", "d", "sigma", "seed"])?;
        writer.write_record([
            self.n.to_string(),
            self.d.to_string(),
            format!("{}", self.sigma),
            self.seed.to_string(),
        ])?;
        let mut columns: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).collect();
        columns.push("y".to_string());
        writer.write_record(&columns)?;
        for j in 0..self.n {
            let mut row: Vec<String> =
                self.point(j).iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", self.ys[j]));
            writer.write_record(&row)?;
        }
        writer.flush().map_err(Error::Io)?;
        Ok(())
    }

    /// Reads a dataset written by [`Dataset::write_csv`].
    ///
    /// # Errors
    ///
    /// I/O, CSV and numeric parse failures, or inconsistent row counts.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(false)
            .from_path(path)?;
        let mut records = reader.records();
        let bad = |msg: &str| Error::InvalidArgument(format!("dataset csv: {msg}"));
        let header = records.next().ok_or_else(|| bad("missing header"))??;
        if header.iter().collect::<Vec<_>>() != ["n", "d", "sigma", "seed"] {
            return Err(bad("header must be n,d,sigma,seed"));
        }
        let meta = records.next().ok_or_else(|| bad("missing metadata row"))??;
        if meta.len() != 4 {
            return Err(bad("metadata row must have 4 fields"));
        }
        let parse_err = |field: &str| bad(&format!("cannot parse {field}"));
        let n: usize = meta[0].parse().map_err(|_| parse_err("n"))?;
        let d: usize = meta[1].parse().map_err(|_| parse_err("d"))?;
        let sigma: f64 = meta[2].parse().map_err(|_| parse_err("sigma"))?;
        let seed: u64 = meta[3].parse().map_err(|_| parse_err("seed"))?;
        let _columns = records.next().ok_or_else(|| bad("missing column row"))??;
        let mut xs = Vec::with_capacity(n * d);
        let mut ys = Vec::with_capacity(n);
        for record in records {
            let record = record?;
            if record.len() != d + 1 {
                return Err(bad("data row width mismatch"));
            }
            for k in 0..d {
                xs.push(record[k].parse().map_err(|_| parse_err("coordinate"))?);
            }
            ys.push(record[d].parse().map_err(|_| parse_err("y"))?);
        }
        if ys.len() != n {
            return Err(bad("row count disagrees with header"));
        }
        Self::from_parts(xs, ys, d, sigma, seed)
    }
}

/// Uniform draw in the half-open interval `[0, 1)`, one 64-bit word per draw.
fn unit_halfopen(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * INV_2_53
}

/// Uniform draw in the open interval `(0, 1)`, safe for inverse CDFs.
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * INV_2_53
}

/// Derives a fresh 64-bit seed from a base seed and two task indices.
///
/// The mixing is a fixed avalanche permutation, so distinct `(a, b)` pairs
/// give statistically independent streams while staying reproducible.
pub fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    fn scramble(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    scramble(scramble(base.wrapping_add(scramble(a))).wrapping_add(scramble(b ^ 0x517C_C1B7_2722_0A95)))
}

/// Samples `n` uniform torus points and observes `f* = (ratio symbol) u*`
/// there, plus Gaussian noise.
///
/// The generator is seeded with `seed` and consumed in a fixed order: the
/// `n * d` coordinates first, then (only when `sigma > 0`) the `n` noise
/// draws via the normal inverse CDF.
///
/// # Errors
///
/// [`Error::EmptyDataset`] when `n = 0`; propagated spectral errors when the
/// target does not fit the truncation.
pub fn sample_dataset(
    spec: &SpectrumSpec,
    target: &FunctionCoeffs,
    n: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    let f_star = spec.apply_operator(target, OperatorKind::SymbolRatio)?;
    sample_from_image(&f_star, spec.dimension(), n, noise, seed)
}

/// Samples `n` uniform torus points and observes the given regression
/// function there, plus Gaussian noise, with the same generator layout as
/// [`sample_dataset`].
///
/// # Errors
///
/// [`Error::EmptyDataset`] when `n = 0`.
pub fn sample_from_image(
    f_star: &FunctionCoeffs,
    dimension: usize,
    n: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = dimension;
    let basis = TorusBasis::new(d, f_star.len().max(1))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n * d);
    for _ in 0..n * d {
        xs.push(unit_halfopen(&mut rng));
    }
    let mut ys = Vec::with_capacity(n);
    for j in 0..n {
        ys.push(eval_function(f_star, &basis, &xs[j * d..(j + 1) * d])?);
    }
    if noise.sigma > 0.0 {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        for y in ys.iter_mut() {
            *y += noise.sigma * normal.inverse_cdf(unit_open(&mut rng));
        }
    }
    Dataset::from_parts(xs, ys, d, noise.sigma, seed)
}

/// Observes the given regression function at the `n` equispaced points
/// `x_j = j / n` of the one-dimensional torus, plus Gaussian noise.
///
/// When `n` exceeds twice the highest retained frequency, the basis columns
/// are exactly orthonormal under the grid average, so the empirical Gram
/// matrix equals the identity up to rounding. The generator is seeded with
/// `seed` and consumed only for the `n` noise draws, in point order.
///
/// # Errors
///
/// [`Error::EmptyDataset`] when `n = 0`.
pub fn grid_from_image(
    f_star: &FunctionCoeffs,
    n: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let basis = TorusBasis::new(1, f_star.len().max(1))?;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let mut ys = Vec::with_capacity(n);
    for x in &xs {
        ys.push(eval_function(f_star, &basis, std::slice::from_ref(x))?);
    }
    if noise.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        for y in ys.iter_mut() {
            *y += noise.sigma * normal.inverse_cdf(unit_open(&mut rng));
        }
    }
    Dataset::from_parts(xs, ys, 1, noise.sigma, seed)
}
