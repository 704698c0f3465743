//! Real trigonometric orthonormal basis on the d-dimensional unit torus.
//!
//! Index 0 is the constant function 1. Every further pair of indices comes
//! from one integer frequency vector `m` whose first nonzero coordinate is
//! positive: first `sqrt(2) * cos(2 pi m . x)`, then `sqrt(2) * sin(2 pi m . x)`.
//! Frequency vectors are ordered by exact squared Euclidean norm and ties are
//! broken lexicographically, which fixes the basis ordering completely.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Orthonormal real Fourier basis on the torus `[0, 1)^d`.
#[derive(Debug, Clone)]
pub struct TorusBasis {
    dimension: usize,
    len: usize,
    reps: Vec<Vec<i64>>,
}

impl TorusBasis {
    /// Builds a basis with `len` functions on the `dimension`-dimensional torus.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidSpec`] when `dimension` or `len` is zero.
    pub fn new(dimension: usize, len: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSpec("basis dimension must be positive".into()));
        }
        if len == 0 {
            return Err(Error::InvalidSpec("basis length must be positive".into()));
        }
        let needed_reps = len / 2;
        let reps = canonical_representatives(dimension, needed_reps);
        Ok(Self {
            dimension,
            len,
            reps,
        })
    }

    /// Dimension of the underlying torus.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of basis functions available through [`TorusBasis::eval`].
    pub fn len(&self) -> usize {
        self.len
    }

    /// Returns true when no basis function is available.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Exact squared Euclidean norm of the frequency vector behind index `j`.
    ///
    /// The constant function reports 0.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] when `j >= len()`.
    pub fn freq_norm_sq(&self, j: usize) -> Result<u64> {
        if j >= self.len {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.len,
            });
        }
        if j == 0 {
            return Ok(0);
        }
        let rep = &self.reps[(j - 1) / 2];
        Ok(rep.iter().map(|&c| (c * c) as u64).sum())
    }

    /// Evaluates basis function `j` at the point `x`.
    ///
    /// # Errors
    ///
    /// [`Error::IndexOutOfRange`] when `j >= len()`;
    /// [`Error::InvalidArgument`] when `x.len()` differs from the torus
    /// dimension.
    pub fn eval(&self, j: usize, x: &[f64]) -> Result<f64> {
        if j >= self.len {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.len,
            });
        }
        self.check_point(x)?;
        if j == 0 {
            return Ok(1.0);
        }
        let rep = &self.reps[(j - 1) / 2];
        let phase = 2.0 * PI * dot(rep, x);
        let value = if (j - 1) % 2 == 0 {
            phase.cos()
        } else {
            phase.sin()
        };
        Ok(std::f64::consts::SQRT_2 * value)
    }

    /// Evaluates every basis function at `x` into `out` in index order.
    ///
    /// Each frequency vector is projected onto `x` once and shared between its
    /// cosine and sine entries, which makes this the preferred routine for
    /// building design matrices.
    ///
    /// # Errors
    ///
    /// [`Error::InvalidArgument`] when `x.len()` differs from the torus
    /// dimension or `out.len()` differs from `len()`.
    pub fn row(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_point(x)?;
        if out.len() != self.len {
            return Err(Error::InvalidArgument(format!(
                "output row has length {}, basis has {} functions",
                out.len(),
                self.len
            )));
        }
        out[0] = 1.0;
        for (k, rep) in self.reps.iter().enumerate() {
            let cos_idx = 1 + 2 * k;
            if cos_idx >= self.len {
                break;
            }
            let phase = 2.0 * PI * dot(rep, x);
            let (sin, cos) = phase.sin_cos();
            out[cos_idx] = std::f64::consts::SQRT_2 * cos;
            if cos_idx + 1 < self.len {
                out[cos_idx + 1] = std::f64::consts::SQRT_2 * sin;
            }
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, basis expects {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }
}

fn dot(rep: &[i64], x: &[f64]) -> f64 {
    rep.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum()
}

/// Enumerates the first `needed` nonzero frequency vectors whose first
/// nonzero coordinate is positive, ordered by squared norm then
/// lexicographically.
fn canonical_representatives(dimension: usize, needed: usize) -> Vec<Vec<i64>> {
    if needed == 0 {
        return Vec::new();
    }
    let mut radius: i64 = ((needed as f64).powf(1.0 / dimension as f64).ceil() as i64).max(1);
    loop {
        let radius_sq = (radius * radius) as u64;
        let mut reps: Vec<(u64, Vec<i64>)> = Vec::new();
        let mut coord = vec![-radius; dimension];
        'scan: loop {
            let norm_sq: u64 = coord.iter().map(|&c| (c * c) as u64).sum();
            if norm_sq > 0 && norm_sq <= radius_sq {
                if let Some(first) = coord.iter().find(|&&c| c != 0) {
                    if *first > 0 {
                        reps.push((norm_sq, coord.clone()));
                    }
                }
            }
            for axis in (0..dimension).rev() {
                if coord[axis] < radius {
                    coord[axis] += 1;
                    continue 'scan;
                }
                coord[axis] = -radius;
            }
            break;
        }
        // Every vector with squared norm at most radius^2 lies inside the
        // scanned box, so having `needed` of them proves the prefix is
        // complete under the (norm, lex) order.
        if reps.len() >= needed {
            reps.sort();
            return reps.into_iter().take(needed).map(|(_, v)| v).collect();
        }
        radius *= 2;
    }
}
