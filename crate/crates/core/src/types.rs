//! Shared constants, the gauge function `G`, unit-ball volumes and the
//! sample container used throughout the crate.

use std::f64::consts::PI;

use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant, `-int_0^inf e^{-t} log t dt`.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MathConstants {
    pub euler_gamma: f64,
    /// `exp(euler_gamma)`.
    pub gamma_tilde: f64,
}

impl MathConstants {
    pub fn new() -> Self {
        MathConstants {
            euler_gamma: EULER_GAMMA,
            gamma_tilde: EULER_GAMMA.exp(),
        }
    }
}

impl Default for MathConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// `exp(EULER_GAMMA)`.
pub fn gamma_tilde() -> f64 {
    EULER_GAMMA.exp()
}

/// Natural log of the volume of the unit Euclidean ball in `R^d`.
pub fn log_unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let half = d as f64 / 2.0;
    Ok(half * PI.ln() - ln_gamma(half + 1.0))
}

/// Volume `pi^{d/2} / Gamma(d/2 + 1)` of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    log_unit_ball_volume(d).map(f64::exp)
}

/// The convex gauge `G(t) = 0` for `t < 1` and `t log t` for `t >= 1`.
pub fn g_function(t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "G is defined for finite t >= 0, got {t}"
        )));
    }
    Ok(g_unchecked(t))
}

/// `G` without argument validation. Callers guarantee `t` is finite and nonnegative.
#[inline]
pub(crate) fn g_unchecked(t: f64) -> f64 {
    if t < 1.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// An `N x d` batch of observations stored row-major.
///
/// Construction validates `N >= 2`, `d >= 1` and finiteness of every
/// coordinate; the set is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    source_tag: String,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, dim: usize, source_tag: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSample("dimension must be at least 1".into()));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidSample(format!(
                "{} coordinates do not form rows of length {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if n < 2 {
            return Err(Error::InvalidSample(format!("need at least 2 points, got {n}")));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "non-finite coordinate in row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(SampleSet {
            points,
            n,
            dim,
            source_tag: source_tag.into(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], source_tag: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidSample(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::new(flat, dim, source_tag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Applies `f` to every coordinate row, keeping the dimension.
    pub fn map_rows(
        &self,
        source_tag: impl Into<String>,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Self> {
        let mut out = vec![0.0; self.points.len()];
        for (src, dst) in self.rows().zip(out.chunks_exact_mut(self.dim)) {
            f(src, dst);
        }
        Self::new(out, self.dim, source_tag)
    }
}

/// Squared Euclidean distance. Both neighbor backends share this routine so
/// their outputs agree bit for bit.
#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
