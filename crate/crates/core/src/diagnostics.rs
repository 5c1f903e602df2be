//! Simulation of the rescaled nearest-neighbor statistic
//! `xi_{N,x} = (N-1) V_d gamma_tilde min_j rho^d(x, X_j)` and comparison of its
//! law with the exponential limit and with the exact finite-`N` distribution.

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::local_average;
use crate::densities::AnalyticDensity;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::mean;
use crate::types::{gamma_tilde, log_unit_ball_volume, squared_distance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalLawReport {
    pub x: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub ks_distance: f64,
    pub empirical_mean_log: f64,
    /// `-log f(x)`.
    pub target_mean_log: f64,
    /// `f(x) / gamma_tilde`.
    pub rate: f64,
    pub seed: u64,
}

fn check_point(density: &AnalyticDensity, x: &[f64]) -> Result<f64> {
    let f = density.pdf(x)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("query point must be finite".into()));
    }
    if f <= 0.0 {
        return Err(Error::OutsideSupport { x: x.to_vec() });
    }
    Ok(f)
}

/// `reps` independent realizations of `xi_{N,x}`, each from `N - 1` fresh
/// draws. Realization `k` uses the seed `derive_seed(seed, [k])`.
pub fn simulate_xi(
    density: &AnalyticDensity,
    x: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("N must be >= 2, got {n}")));
    }
    if reps < 1 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    if x.len() != density.dim() {
        return Err(Error::DimensionMismatch {
            expected: density.dim(),
            got: x.len(),
        });
    }
    let d = density.dim();
    let scale = (n - 1) as f64 * log_unit_ball_volume(d)?.exp() * gamma_tilde();
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, &[rep as u64]);
            let mut rng = rng_from_seed(rep_seed);
            let mut y = vec![0.0; d];
            let mut min_d2 = f64::INFINITY;
            for _ in 1..n {
                density.draw(&mut rng, &mut y);
                min_d2 = min_d2.min(squared_distance(x, &y));
            }
            let xi = scale * min_d2.powf(0.5 * d as f64);
            if xi == 0.0 {
                return Err(Error::ZeroRealization { seed: rep_seed, rep });
            }
            Ok(xi)
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and a
/// continuous reference CDF.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band at confidence `1 - alpha`.
pub fn dkw_epsilon(reps: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * reps as f64)).sqrt()
}

/// CDF of the limit law `Exp(f(x) / gamma_tilde)`.
pub fn limit_cdf(rate: f64, u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        -(-rate * u).exp_m1()
    }
}

/// Compares the simulated law of `xi_{N,x}` with its exponential limit.
pub fn conditional_law_report(
    density: &AnalyticDensity,
    x: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<ConditionalLawReport> {
    let f = check_point(density, x)?;
    let rate = f / gamma_tilde();
    let xi = simulate_xi(density, x, n, reps, seed)?;
    let logs: Vec<f64> = xi.iter().map(|v| v.ln()).collect();
    Ok(ConditionalLawReport {
        x: x.to_vec(),
        n,
        reps,
        ks_distance: ks_distance(&xi, |u| limit_cdf(rate, u)),
        empirical_mean_log: mean(&logs),
        target_mean_log: -f.ln(),
        rate,
        seed,
    })
}

/// Radius `r_N(u) = (u / (V_d gamma_tilde (N - 1)))^{1/d}` at which
/// `xi_{N,x} <= u` holds.
pub fn xi_radius(d: usize, n: usize, u: f64) -> Result<f64> {
    let log_vd = log_unit_ball_volume(d)?;
    let denom = log_vd + crate::types::EULER_GAMMA + ((n - 1) as f64).ln();
    Ok(((u.ln() - denom) / d as f64).exp())
}

/// Exact `F_{N,x}(u) = 1 - (1 - P(B(x, r_N(u))))^{N-1}`. The ball mass
/// comes from the closed form when available, else from `mc_n` Monte Carlo
/// points seeded with `seed`.
pub fn exact_conditional_cdf(
    density: &AnalyticDensity,
    x: &[f64],
    n: usize,
    u: f64,
    mc_n: usize,
    seed: u64,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("N must be >= 2, got {n}")));
    }
    if !(u >= 0.0) {
        return Err(Error::InvalidArgument(format!("u must be >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    if u.is_infinite() {
        return Ok(1.0);
    }
    let d = density.dim();
    let r = xi_radius(d, n, u)?;
    let mass = match density.ball_mass_exact(x, r) {
        Some(m) => m,
        None => {
            let avg = local_average(density, x, r, mc_n, seed)?.value;
            avg * (log_unit_ball_volume(d)? + d as f64 * r.ln()).exp()
        }
    };
    let p = mass.clamp(0.0, 1.0);
    if p >= 1.0 {
        return Ok(1.0);
    }
    Ok((-((n - 1) as f64 * (-p).ln_1p()).exp_m1()).clamp(0.0, 1.0))
}

/// KS distance between simulated `xi_{N,x}` and the exact finite-`N` CDF,
/// together with the DKW half-width at confidence `1 - alpha`.
pub fn simulation_formula_gap(
    density: &AnalyticDensity,
    x: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
    mc_n: usize,
    alpha: f64,
) -> Result<(f64, f64)> {
    check_point(density, x)?;
    let xi = simulate_xi(density, x, n, reps, seed)?;
    let cdf: Vec<f64> = xi
        .par_iter()
        .map(|&u| exact_conditional_cdf(density, x, n, u, mc_n, derive_seed(seed, &[u.to_bits(), 2])))
        .collect::<Result<_>>()?;
    let mut pairs: Vec<(f64, f64)> = xi.into_iter().zip(cdf).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = pairs.len() as f64;
    let ks = pairs
        .iter()
        .enumerate()
        .map(|(i, &(_, f))| (f - i as f64 / m).max((i + 1) as f64 / m - f))
        .fold(0.0, f64::max);
    Ok((ks, dkw_epsilon(reps, alpha)))
}
