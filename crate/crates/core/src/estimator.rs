//! The Kozachenko-Leonenko entropy estimate and its per-point decomposition.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::neighbors::{nn_distances_tree, NnDistances, NnMethod};
use crate::seed::rng_from_seed;
use crate::stats::mean;
use crate::types::{log_unit_ball_volume, SampleSet, EULER_GAMMA};

/// `H_N` together with the pieces it is assembled from.
///
/// `zeta[i] = d log rho_i + log V_d + gamma + log(N - 1)`, so `h_n` is the
/// mean of `zeta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub h_n: f64,
    pub n: usize,
    pub dim: usize,
    pub log_rho_bar: f64,
    pub zeta: Vec<f64>,
    pub method: NnMethod,
    pub source_tag: String,
}

impl EntropyEstimate {
    /// The additive constant `log V_d + gamma + log(N - 1)`.
    pub fn offset(&self) -> f64 {
        offset(self.n, self.dim)
    }
}

fn offset(n: usize, dim: usize) -> f64 {
    // dim >= 1 and n >= 2 are guaranteed by SampleSet.
    log_unit_ball_volume(dim).expect("dim >= 1") + EULER_GAMMA + ((n - 1) as f64).ln()
}

pub fn kl_entropy(sample: &SampleSet, nn: &NnDistances) -> Result<EntropyEstimate> {
    if nn.rho.len() != sample.n() {
        return Err(Error::DimensionMismatch {
            expected: sample.n(),
            got: nn.rho.len(),
        });
    }
    if nn.rho.contains(&0.0) {
        return Err(Error::DuplicatePoints {
            pairs: nn.duplicate_indices.clone(),
        });
    }
    let d = sample.dim() as f64;
    let c = offset(sample.n(), sample.dim());
    let log_rho: Vec<f64> = nn.rho.iter().map(|r| r.ln()).collect();
    let log_rho_bar = mean(&log_rho);
    let zeta: Vec<f64> = log_rho.iter().map(|l| d * l + c).collect();
    Ok(EntropyEstimate {
        h_n: d * log_rho_bar + c,
        n: sample.n(),
        dim: sample.dim(),
        log_rho_bar,
        zeta,
        method: nn.method,
        source_tag: sample.source_tag().to_owned(),
    })
}

/// Adds i.i.d. uniform noise on `[-jitter_scale, jitter_scale]^d` to every
/// point before estimating with the tree backend. A zero scale is a no-op.
pub fn kl_entropy_with_jitter(
    sample: &SampleSet,
    jitter_scale: f64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if jitter_scale == 0.0 {
        return kl_entropy(sample, &nn_distances_tree(sample));
    }
    let jittered = jitter(sample, jitter_scale, seed)?;
    kl_entropy(&jittered, &nn_distances_tree(&jittered))
}

/// Copy of `sample` with i.i.d. uniform noise on `[-scale, scale]` added to
/// every coordinate. The source tag records the scale and seed.
pub fn jitter(sample: &SampleSet, scale: f64, seed: u64) -> Result<SampleSet> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "jitter scale must be finite and >= 0, got {scale}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let tag = format!("{}+jitter(scale={scale:e},seed={seed})", sample.source_tag());
    sample.map_rows(tag, |src, dst| {
        for (s, d) in src.iter().zip(dst.iter_mut()) {
            *d = if scale == 0.0 { *s } else { s + rng.random_range(-scale..=scale) };
        }
    })
}

/// Convenience wrapper computing the neighbors with `method` first.
pub fn kl_entropy_with(sample: &SampleSet, method: NnMethod) -> Result<EntropyEstimate> {
    kl_entropy(sample, &crate::neighbors::nn_distances(sample, method))
}
