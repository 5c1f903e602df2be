//! Monte Carlo convergence studies of the estimator against analytic entropies.

use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{AnalyticDensity, DensitySpec};
use crate::error::{Error, Result};
use crate::estimator::kl_entropy_with;
use crate::neighbors::NnMethod;
use crate::seed::derive_seed;
use crate::stats::{mean, sample_covariance, sample_variance, std_error};

/// Default sample-size grid of a convergence study.
pub const DEFAULT_N_GRID: [usize; 5] = [250, 500, 1000, 2000, 4000];

/// Seed of replication `rep` at sample size `n`.
pub fn cell_seed(master_seed: u64, n: usize, rep: usize) -> u64 {
    derive_seed(master_seed, &[n as u64, rep as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerN {
    pub n: usize,
    /// Replications that produced an estimate.
    pub reps_ok: usize,
    pub mean_h: f64,
    pub bias: f64,
    pub var_h: f64,
    /// Mean of `(H_N - H)^2` over replications.
    pub mse: f64,
    /// `bias^2 + var_h (reps - 1) / reps`.
    pub mse_recombined: f64,
    pub se_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub rep: usize,
    pub h_n: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub density_spec: DensitySpec,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub per_n: Vec<PerN>,
    pub h_true: f64,
    pub master_seed: u64,
    pub failures: Vec<ReplicateFailure>,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
}

fn summarize(n: usize, values: &[f64], h_true: f64) -> PerN {
    let k = values.len();
    let mean_h = mean(values);
    let bias = mean_h - h_true;
    let var_h = sample_variance(values);
    let sq: Vec<f64> = values.iter().map(|h| (h - h_true).powi(2)).collect();
    PerN {
        n,
        reps_ok: k,
        mean_h,
        bias,
        var_h,
        mse: mean(&sq),
        mse_recombined: bias * bias + var_h * (k as f64 - 1.0) / k as f64,
        se_mean: std_error(values),
    }
}

/// Runs `reps` replications at each sample size of `n_grid`.
///
/// Replication `(n, rep)` samples `n` points with seed
/// [`cell_seed`]`(master_seed, n, rep)`. Failed replications (duplicate
/// points) are listed in `failures` and left out of the aggregates. The
/// report does not depend on `backend`.
pub fn convergence_study(
    density: &AnalyticDensity,
    n_grid: &[usize],
    reps: usize,
    master_seed: u64,
    backend: NnMethod,
) -> Result<ConvergenceReport> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("n_grid must not be empty".into()));
    }
    if let Some(&n) = n_grid.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidArgument(format!("every n must be >= 2, got {n}")));
    }
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("reps must be >= 2, got {reps}")));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let h_true = density.analytic_entropy();
    let cells: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&n| (0..reps).map(move |rep| (n, rep)))
        .collect();
    let outcomes: Vec<std::result::Result<ReplicateRecord, ReplicateFailure>> = cells
        .par_iter()
        .map(|&(n, rep)| {
            let seed = cell_seed(master_seed, n, rep);
            density
                .sample(n, seed)
                .and_then(|s| kl_entropy_with(&s, backend))
                .map(|est| ReplicateRecord { n, rep, h_n: est.h_n, seed })
                .map_err(|e| ReplicateFailure { n, rep, seed, message: e.to_string() })
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let per_n = grid
        .iter()
        .map(|&n| {
            let values: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.h_n).collect();
            summarize(n, &values, h_true)
        })
        .collect();
    Ok(ConvergenceReport {
        density_spec: density.spec().clone(),
        n_grid: grid,
        reps,
        per_n,
        h_true,
        master_seed,
        failures,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    pub n: usize,
    pub reps: usize,
    pub master_seed: u64,
    /// Direct sample variance of `H_N` across replications.
    pub var_h: f64,
    pub var_zeta1: f64,
    pub cov_zeta12: f64,
    pub cov_std_error: f64,
    /// `var_zeta1 / n + (n - 1) / n * cov_zeta12`.
    pub recombined: f64,
    pub difference: f64,
    pub difference_std_error: f64,
    pub holds: bool,
}

/// Checks `var(H_N) = var(zeta_1)/N + (N-1)/N cov(zeta_1, zeta_2)` from
/// per-replication `H_N` values and the first two per-point contributions.
pub fn variance_decomposition_from_replicates(
    n: usize,
    h: &[f64],
    zeta1: &[f64],
    zeta2: &[f64],
) -> Result<VarianceDecomposition> {
    let reps = h.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n must be >= 3, got {n}")));
    }
    if reps < 2 || zeta1.len() != reps || zeta2.len() != reps {
        return Err(Error::InvalidArgument(
            "need at least two replicates of equal length".into(),
        ));
    }
    let nf = n as f64;
    let w = (nf - 1.0) / nf;
    let var_h = sample_variance(h);
    let var_zeta1 = sample_variance(zeta1);
    let cov_zeta12 = sample_covariance(zeta1, zeta2);
    let recombined = var_zeta1 / nf + w * cov_zeta12;
    let (mh, m1, m2) = (mean(h), mean(zeta1), mean(zeta2));
    let cross: Vec<f64> = zeta1.iter().zip(zeta2).map(|(a, b)| (a - m1) * (b - m2)).collect();
    let influence: Vec<f64> = (0..reps)
        .map(|k| (zeta1[k] - m1).powi(2) / nf + w * cross[k] - (h[k] - mh).powi(2))
        .collect();
    let difference = recombined - var_h;
    let difference_std_error = std_error(&influence);
    Ok(VarianceDecomposition {
        n,
        reps,
        master_seed: 0,
        var_h,
        var_zeta1,
        cov_zeta12,
        cov_std_error: std_error(&cross),
        recombined,
        difference,
        difference_std_error,
        holds: difference.abs() <= 3.0 * difference_std_error,
    })
}

/// Runs `reps` replications at sample size `n` (seeds as in
/// [`convergence_study`]) and checks the variance decomposition.
pub fn variance_decomposition(
    density: &AnalyticDensity,
    n: usize,
    reps: usize,
    master_seed: u64,
) -> Result<VarianceDecomposition> {
    if reps < 100 {
        return Err(Error::InvalidArgument(format!("reps must be >= 100, got {reps}")));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("n must be >= 3, got {n}")));
    }
    let triples: Vec<(f64, f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let sample = density.sample(n, cell_seed(master_seed, n, rep))?;
            let est = kl_entropy_with(&sample, NnMethod::Tree)?;
            Ok((est.h_n, est.zeta[0], est.zeta[1]))
        })
        .collect::<Result<_>>()?;
    let h: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let z1: Vec<f64> = triples.iter().map(|t| t.1).collect();
    let z2: Vec<f64> = triples.iter().map(|t| t.2).collect();
    let mut report = variance_decomposition_from_replicates(n, &h, &z1, &z2)?;
    report.master_seed = master_seed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_replicates_give_two_point_variance() {
        let g = AnalyticDensity::standard_normal(1).unwrap();
        let rep = convergence_study(&g, &[50], 2, 7, NnMethod::Tree).unwrap();
        let h: Vec<f64> = rep.records.iter().map(|r| r.h_n).collect();
        assert_eq!(h.len(), 2);
        assert_abs_diff_eq!(rep.per_n[0].var_h, (h[0] - h[1]).powi(2) / 2.0, epsilon = 1e-14);
        assert_eq!(rep.records[1].seed, cell_seed(7, 50, 1));
    }

    #[test]
    fn mse_forms_agree_and_dominate_bias() {
        let g = AnalyticDensity::standard_normal(1).unwrap();
        let rep = convergence_study(&g, &[400, 100], 30, 1, NnMethod::Tree).unwrap();
        assert_eq!(rep.n_grid, vec![100, 400]);
        for p in &rep.per_n {
            assert_abs_diff_eq!(p.mse, p.mse_recombined, epsilon = 1e-12);
            assert!(p.mse >= p.bias * p.bias - 1e-12);
            assert_eq!(p.reps_ok, 30);
        }
    }

    #[test]
    fn backends_agree_bitwise() {
        let g = AnalyticDensity::standard_normal(2).unwrap();
        let a = convergence_study(&g, &[64, 300], 5, 3, NnMethod::Tree).unwrap();
        let b = convergence_study(&g, &[64, 300], 5, 3, NnMethod::Brute).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_and_uniform_bias() {
        let g = AnalyticDensity::standard_normal(1).unwrap();
        let rep = convergence_study(&g, &[4000], 100, 0, NnMethod::Tree).unwrap();
        assert!(rep.per_n[0].bias.abs() < 0.02, "{:?}", rep.per_n);
        let u = AnalyticDensity::unit_cube(1).unwrap();
        let rep = convergence_study(&u, &[4000], 100, 0, NnMethod::Tree).unwrap();
        assert!(rep.per_n[0].bias.abs() < 0.03, "{:?}", rep.per_n);
    }

    #[test]
    fn invalid_arguments() {
        let g = AnalyticDensity::standard_normal(1).unwrap();
        assert!(convergence_study(&g, &[1], 2, 0, NnMethod::Tree).is_err());
        assert!(convergence_study(&g, &[10], 1, 0, NnMethod::Tree).is_err());
        assert!(convergence_study(&g, &[], 2, 0, NnMethod::Tree).is_err());
        assert!(variance_decomposition(&g, 2, 100, 0).is_err());
        assert!(variance_decomposition(&g, 10, 99, 0).is_err());
    }

    #[test]
    fn degenerate_replicates_give_zero_terms() {
        let h = vec![1.5; 200];
        let z = vec![0.25; 200];
        let rep = variance_decomposition_from_replicates(10, &h, &z, &z).unwrap();
        assert_eq!(rep.var_h, 0.0);
        assert_eq!(rep.var_zeta1, 0.0);
        assert_eq!(rep.cov_zeta12, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn decomposition_and_covariance_trend() {
        let g = AnalyticDensity::standard_normal(1).unwrap();
        let rep = variance_decomposition(&g, 512, 2000, 0).unwrap();
        assert!(rep.holds, "{rep:?}");
        let small = variance_decomposition(&g, 64, 2000, 1).unwrap();
        let large = variance_decomposition(&g, 1024, 2000, 1).unwrap();
        let joint = (small.cov_std_error.powi(2) + large.cov_std_error.powi(2)).sqrt();
        assert!(large.cov_zeta12.abs() <= small.cov_zeta12.abs() + 3.0 * joint);
    }
}
