//! Nearest-neighbor distances within a sample.
//!
//! `rho[i]` is the Euclidean distance from row `i` to the closest other row.
//! The self-match is excluded by index, so an exact duplicate shows up as a
//! neighbor at distance zero and is reported in `duplicate_indices`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kdtree::KdTree;
use crate::types::{squared_distance, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NnMethod {
    Brute,
    Tree,
}

impl std::fmt::Display for NnMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NnMethod::Brute => "brute",
            NnMethod::Tree => "tree",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnDistances {
    pub rho: Vec<f64>,
    pub method: NnMethod,
    /// Pairs `(i, j)` with `i < j` at distance exactly zero, sorted.
    pub duplicate_indices: Vec<(usize, usize)>,
}

impl NnDistances {
    pub fn has_duplicates(&self) -> bool {
        !self.duplicate_indices.is_empty()
    }
}

pub fn nn_distances(sample: &SampleSet, method: NnMethod) -> NnDistances {
    match method {
        NnMethod::Brute => nn_distances_brute(sample),
        NnMethod::Tree => nn_distances_tree(sample),
    }
}

/// All-pairs reference implementation, `O(N^2 d)`.
pub fn nn_distances_brute(sample: &SampleSet) -> NnDistances {
    let n = sample.n();
    let per_point: Vec<(f64, Vec<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = sample.point(i);
            let mut best = f64::INFINITY;
            let mut dups = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d2 = squared_distance(p, sample.point(j));
                if d2 < best {
                    best = d2;
                }
                if d2 == 0.0 && j > i {
                    dups.push((i, j));
                }
            }
            (best.sqrt(), dups)
        })
        .collect();
    let mut rho = Vec::with_capacity(n);
    let mut duplicate_indices = Vec::new();
    for (r, d) in per_point {
        rho.push(r);
        duplicate_indices.extend(d);
    }
    NnDistances {
        rho,
        method: NnMethod::Brute,
        duplicate_indices,
    }
}

/// kd-tree implementation with the same output as [`nn_distances_brute`].
pub fn nn_distances_tree(sample: &SampleSet) -> NnDistances {
    let tree = KdTree::build(sample);
    let rho: Vec<f64> = (0..sample.n())
        .into_par_iter()
        .map(|i| tree.nearest_excluding(i).sqrt())
        .collect();
    let mut duplicate_indices = Vec::new();
    for (i, _) in rho.iter().enumerate().filter(|(_, r)| **r == 0.0) {
        tree.for_each_within(i, 0.0, |j| {
            if j > i {
                duplicate_indices.push((i, j));
            }
        });
    }
    duplicate_indices.sort_unstable();
    NnDistances {
        rho,
        method: NnMethod::Tree,
        duplicate_indices,
    }
}
