//! Numerical evaluation of the local ball averages `I_f`, their truncated
//! maximal and minimal functions `M_f`, `m_f`, and the global functionals
//! `K_f`, `K_{f,2}`, `Q_f`, `T_f` whose finiteness controls the estimator.
//!
//! All routines are deterministic given their seed. Work over outer points is
//! parallel, with the sub-seed of point `i` given by [`point_seed`].

use std::collections::BTreeMap;
use std::f64::consts::E;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{AnalyticDensity, DensitySpec};
use crate::error::{Error, Result};
use crate::quad::integrate_to_infinity;
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{mean, std_error};
use crate::types::{g_unchecked, log_unit_ball_volume, squared_distance};

/// Default Monte Carlo sample count per ball average.
pub const DEFAULT_MC_N: usize = 4096;
/// Default number of log-spaced radii in the sup/inf search.
pub const DEFAULT_GRID: usize = 64;
/// Smallest candidate radius, relative to the truncation radius.
pub const GRID_SPAN: f64 = 1e-4;
/// Cap on redraws of a coincident pair per outer point.
pub const MAX_REDRAWS: usize = 100;

const GRID_REFINEMENTS: usize = 4;
const GRID_REL_TOL: f64 = 1e-3;

/// Sub-seed used for outer point `i` of a functional estimate.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[i as u64])
}

/// Sub-seed used for the ball averages at outer point `i`.
pub fn ball_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, &[i as u64, 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocalKind {
    #[serde(rename = "I")]
    Average,
    #[serde(rename = "M")]
    Maximal,
    #[serde(rename = "m")]
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFunctionalValue {
    pub x: Vec<f64>,
    #[serde(rename = "r_or_R")]
    pub radius: f64,
    pub value: f64,
    /// Monte Carlo standard error of `value`; zero on exact paths.
    pub std_error: f64,
    pub kind: LocalKind,
    pub grid_points: usize,
    pub used_exact_ball_mass: bool,
}

/// Fixed uniform draws in the unit ball, reused across radii so that ball
/// averages at different radii share their random numbers.
struct UnitBallDraws {
    dim: usize,
    points: Vec<f64>,
}

impl UnitBallDraws {
    fn new(dim: usize, n: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut points = vec![0.0; n * dim];
        for p in points.chunks_exact_mut(dim) {
            loop {
                for v in p.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    let radius = rng.random::<f64>().powf(1.0 / dim as f64);
                    p.iter_mut().for_each(|v| *v *= radius / norm);
                    break;
                }
            }
        }
        UnitBallDraws { dim, points }
    }
}

/// Evaluates `I_f(x, r)` for many radii around one center.
struct BallAverager<'a> {
    density: &'a AnalyticDensity,
    x: &'a [f64],
    log_vd: f64,
    mc_n: usize,
    seed: u64,
    draws: Option<UnitBallDraws>,
}

#[derive(Debug, Clone, Copy)]
struct Average {
    value: f64,
    std_error: f64,
    exact: bool,
}

impl<'a> BallAverager<'a> {
    fn new(density: &'a AnalyticDensity, x: &'a [f64], mc_n: usize, seed: u64) -> Result<Self> {
        if x.len() != density.dim() {
            return Err(Error::DimensionMismatch {
                expected: density.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("probe point must be finite".into()));
        }
        Ok(BallAverager {
            density,
            x,
            log_vd: log_unit_ball_volume(density.dim())?,
            mc_n,
            seed,
            draws: None,
        })
    }

    fn at(&mut self, r: f64) -> Result<Average> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be > 0, got {r}")));
        }
        let d = self.density.dim();
        if let Some(mass) = self.density.ball_mass_exact(self.x, r) {
            let value = mass / (d as f64 * r.ln() + self.log_vd).exp();
            return Ok(Average { value, std_error: 0.0, exact: true });
        }
        if self.mc_n == 0 {
            return Err(Error::InvalidArgument(
                "no closed-form ball mass available and mc_n = 0".into(),
            ));
        }
        let (mc_n, seed) = (self.mc_n, self.seed);
        let draws = self.draws.get_or_insert_with(|| UnitBallDraws::new(d, mc_n, seed));
        let mut y = vec![0.0; d];
        let values: Vec<f64> = draws
            .points
            .chunks_exact(draws.dim)
            .map(|u| {
                for ((yk, xk), uk) in y.iter_mut().zip(self.x).zip(u) {
                    *yk = xk + r * uk;
                }
                self.density.pdf_unchecked(&y)
            })
            .collect();
        Ok(Average {
            value: mean(&values),
            std_error: std_error(&values),
            exact: false,
        })
    }
}

/// `I_f(x, r)`, the average of `f` over the closed ball `B(x, r)`.
///
/// Uses the closed-form ball mass when the density provides one and
/// otherwise `mc_n` uniform points in the ball.
pub fn local_average(
    density: &AnalyticDensity,
    x: &[f64],
    r: f64,
    mc_n: usize,
    seed: u64,
) -> Result<LocalFunctionalValue> {
    let avg = BallAverager::new(density, x, mc_n, seed)?.at(r)?;
    Ok(LocalFunctionalValue {
        x: x.to_vec(),
        radius: r,
        value: avg.value,
        std_error: avg.std_error,
        kind: LocalKind::Average,
        grid_points: 1,
        used_exact_ball_mass: avg.exact,
    })
}

/// Radii `R * GRID_SPAN^{1 - k/(grid-1)}` for `k = 0..grid`.
fn radius_grid(big_r: f64, grid: usize) -> Vec<f64> {
    let steps = (grid - 1) as f64;
    (0..grid)
        .map(|k| {
            if k + 1 == grid {
                big_r
            } else {
                big_r * GRID_SPAN.powf(1.0 - k as f64 / steps)
            }
        })
        .collect()
}

fn extremum(
    density: &AnalyticDensity,
    x: &[f64],
    big_r: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
    kind: LocalKind,
) -> Result<LocalFunctionalValue> {
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::InvalidArgument(format!("R must be > 0, got {big_r}")));
    }
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid must be >= 2, got {grid}")));
    }
    let mut averager = BallAverager::new(density, x, mc_n, seed)?;
    let better = |a: f64, b: f64| match kind {
        LocalKind::Maximal => a > b,
        _ => a < b,
    };
    // The r -> 0 limit, f(x), is always a candidate.
    let mut best = Average {
        value: density.pdf_unchecked(x),
        std_error: 0.0,
        exact: true,
    };
    let mut all_exact = true;
    let mut cache: BTreeMap<u64, Average> = BTreeMap::new();
    let mut points = grid;
    let mut previous: Option<f64> = None;
    for refinement in 0..=GRID_REFINEMENTS {
        for r in radius_grid(big_r, points) {
            let key = r.to_bits();
            let avg = match cache.get(&key) {
                Some(a) => *a,
                None => {
                    let a = averager.at(r)?;
                    cache.insert(key, a);
                    a
                }
            };
            all_exact &= avg.exact;
            if better(avg.value, best.value) {
                best = avg;
            }
        }
        if let Some(prev) = previous {
            let moved = (best.value - prev).abs();
            if moved <= GRID_REL_TOL * prev.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        previous = Some(best.value);
        if refinement < GRID_REFINEMENTS {
            points = 2 * points - 1;
        }
    }
    Ok(LocalFunctionalValue {
        x: x.to_vec(),
        radius: big_r,
        value: best.value,
        std_error: best.std_error,
        kind,
        grid_points: cache.len(),
        used_exact_ball_mass: all_exact,
    })
}

/// `M_f(x, R) = sup_{0 < r <= R} I_f(x, r)`, searched over `{f(x)}` and a
/// log-spaced radius grid on `[1e-4 R, R]` that is doubled until the
/// supremum moves by less than 0.1%.
pub fn maximal_function(
    density: &AnalyticDensity,
    x: &[f64],
    big_r: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<LocalFunctionalValue> {
    extremum(density, x, big_r, grid, mc_n, seed, LocalKind::Maximal)
}

/// `m_f(x, R) = inf_{0 < r <= R} I_f(x, r)` over the same candidate set as
/// [`maximal_function`].
pub fn minimal_function(
    density: &AnalyticDensity,
    x: &[f64],
    big_r: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<LocalFunctionalValue> {
    extremum(density, x, big_r, grid, mc_n, seed, LocalKind::Minimal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionalKind {
    K,
    K2,
    Q,
    T,
}

/// Monte Carlo estimate of one global functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalEstimate {
    pub kind: FunctionalKind,
    pub params: BTreeMap<String, f64>,
    /// Infinite when divergent (serialized as `null`).
    pub value: f64,
    pub std_error: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub divergent_at: Option<Vec<f64>>,
}

impl FunctionalEstimate {
    pub fn is_divergent(&self) -> bool {
        self.divergent_at.is_some() || self.flags.iter().any(|f| f == "divergent")
    }
}

fn summarize(
    kind: FunctionalKind,
    params: BTreeMap<String, f64>,
    contributions: Vec<(f64, Vec<f64>)>,
    n_inner: usize,
    seed: u64,
    mut flags: Vec<String>,
) -> FunctionalEstimate {
    let n_outer = contributions.len();
    let divergent_at = contributions
        .iter()
        .find(|(v, _)| !v.is_finite())
        .map(|(_, x)| x.clone());
    let (value, std_err) = if divergent_at.is_some() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let values: Vec<f64> = contributions.iter().map(|(v, _)| *v).collect();
        let (m, se) = (mean(&values), std_error(&values));
        if m.is_finite() && se.is_finite() {
            (m, se)
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    };
    if let Some(x) = &divergent_at {
        flags.push("divergent".into());
        flags.push(format!("divergent_at={x:?}"));
    } else if !value.is_finite() {
        flags.push("divergent".into());
    }
    FunctionalEstimate {
        kind,
        params,
        value,
        std_error: std_err,
        n_outer,
        n_inner,
        seed,
        flags,
        divergent_at,
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Inner integrand of `K_f` (`squared = false`) or `K_{f,2}` (`squared = true`):
/// `G(|log rho(x, y)|)` or `G(log^2 rho(x, y))`. Infinite when `x = y`.
pub fn k_integrand(x: &[f64], y: &[f64], squared: bool) -> f64 {
    let d2 = squared_distance(x, y);
    if d2 == 0.0 {
        return f64::INFINITY;
    }
    let log_rho = 0.5 * d2.ln();
    let t = if squared { log_rho * log_rho } else { log_rho.abs() };
    g_unchecked(t)
}

/// Nested Monte Carlo estimate of
/// `K_f(eps0) = E_x[(E_y G(|log rho(x, y)|))^{1 + eps0}]`, or of `K_{f,2}`
/// when `squared` is set.
pub fn functional_k(
    density: &AnalyticDensity,
    eps0: f64,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
    squared: bool,
) -> Result<FunctionalEstimate> {
    check_positive("eps0", eps0)?;
    if n_outer < 100 || n_inner < 100 {
        return Err(Error::InvalidArgument(format!(
            "n_outer and n_inner must be >= 100, got {n_outer} and {n_inner}"
        )));
    }
    let d = density.dim();
    let per_point: Vec<(f64, Vec<f64>, usize, bool)> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(point_seed(seed, i));
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            density.draw(&mut rng, &mut x);
            let mut redraws = 0usize;
            let mut capped = false;
            let mut inner = Vec::with_capacity(n_inner);
            for _ in 0..n_inner {
                loop {
                    density.draw(&mut rng, &mut y);
                    let v = k_integrand(&x, &y, squared);
                    if v.is_finite() {
                        inner.push(v);
                        break;
                    }
                    redraws += 1;
                    if redraws > MAX_REDRAWS {
                        capped = true;
                        inner.push(f64::INFINITY);
                        break;
                    }
                }
                if capped {
                    break;
                }
            }
            let value = if capped {
                f64::INFINITY
            } else {
                mean(&inner).powf(1.0 + eps0)
            };
            (value, x, redraws, capped)
        })
        .collect();
    let redraws: usize = per_point.iter().map(|p| p.2).sum();
    let mut flags = Vec::new();
    if redraws > 0 {
        flags.push(format!("coincident_redraws={redraws}"));
    }
    if per_point.iter().any(|p| p.3) {
        flags.push("redraw_cap_exceeded".into());
    }
    let params = BTreeMap::from([("eps0".to_owned(), eps0)]);
    let kind = if squared { FunctionalKind::K2 } else { FunctionalKind::K };
    let contributions = per_point.into_iter().map(|(v, x, _, _)| (v, x)).collect();
    Ok(summarize(kind, params, contributions, n_inner, seed, flags))
}

/// Draws `n` probe points from the density. With `interior_margin = Some(m)`
/// only points whose `m`-ball stays inside the support are kept.
pub fn draw_probe_points(
    density: &AnalyticDensity,
    n: usize,
    seed: u64,
    interior_margin: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    const MAX_TRIES: usize = 10_000;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(point_seed(seed, i));
            let mut x = vec![0.0; density.dim()];
            for _ in 0..MAX_TRIES {
                density.draw(&mut rng, &mut x);
                match interior_margin {
                    Some(m) if !density.is_interior(&x, m) => continue,
                    _ => return Ok(x),
                }
            }
            Err(Error::InvalidArgument(format!(
                "could not draw an interior probe point with margin {interior_margin:?}"
            )))
        })
        .collect()
}

/// Draws `n` probe points from a Gaussian density, keeping only those within
/// `k_sigma` marginal standard deviations of the mean in every coordinate.
pub fn gaussian_probe_points(
    density: &AnalyticDensity,
    n: usize,
    seed: u64,
    k_sigma: f64,
) -> Result<Vec<Vec<f64>>> {
    let DensitySpec::Gaussian { mean, cov } = density.spec() else {
        return Err(Error::InvalidArgument(format!(
            "gaussian probe points need a gaussian density, got {}",
            density.family_name()
        )));
    };
    check_positive("k_sigma", k_sigma)?;
    let half: Vec<f64> = (0..mean.len()).map(|i| k_sigma * cov[i][i].sqrt()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(point_seed(seed, i));
            let mut x = vec![0.0; density.dim()];
            loop {
                density.draw(&mut rng, &mut x);
                if x.iter().zip(mean).zip(&half).all(|((v, m), h)| (v - m).abs() <= *h) {
                    return Ok(x);
                }
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn local_power_functional(
    density: &AnalyticDensity,
    xs: &[Vec<f64>],
    big_r: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
    kind: LocalKind,
    exponent: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    xs.par_iter()
        .enumerate()
        .map(|(i, x)| {
            let local = extremum(density, x, big_r, grid, mc_n, ball_seed(seed, i), kind)?;
            let v = if local.value <= 0.0 && exponent < 0.0 {
                f64::INFINITY
            } else {
                local.value.powf(exponent)
            };
            Ok((v, x.clone()))
        })
        .collect()
}

/// `Q_f(eps1, R1) = E_x M_f(x, R1)^{eps1}` evaluated at the given probe points.
pub fn functional_q_at(
    density: &AnalyticDensity,
    xs: &[Vec<f64>],
    eps1: f64,
    r1: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<FunctionalEstimate> {
    check_positive("eps1", eps1)?;
    check_positive("R1", r1)?;
    if xs.is_empty() {
        return Err(Error::InvalidArgument("need at least one probe point".into()));
    }
    let contributions = local_power_functional(density, xs, r1, grid, mc_n, seed, LocalKind::Maximal, eps1)?;
    let params = BTreeMap::from([("eps1".to_owned(), eps1), ("r1".to_owned(), r1)]);
    Ok(summarize(FunctionalKind::Q, params, contributions, mc_n, seed, Vec::new()))
}

/// Monte Carlo estimate of `Q_f(eps1, R1)` over `n_outer` draws from `f`.
pub fn functional_q(
    density: &AnalyticDensity,
    eps1: f64,
    r1: f64,
    n_outer: usize,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<FunctionalEstimate> {
    let xs = draw_probe_points(density, n_outer, seed, None)?;
    functional_q_at(density, &xs, eps1, r1, grid, mc_n, seed)
}

/// `T_f(eps2, R2) = E_x m_f(x, R2)^{-eps2}` at the given probe points.
/// A vanishing `m_f` raises the divergence flag with the offending point.
pub fn functional_t_at(
    density: &AnalyticDensity,
    xs: &[Vec<f64>],
    eps2: f64,
    r2: f64,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<FunctionalEstimate> {
    if !(eps2 > 0.0 && eps2 < 1.0) {
        return Err(Error::InvalidArgument(format!("eps2 must lie in (0, 1), got {eps2}")));
    }
    check_positive("R2", r2)?;
    if xs.is_empty() {
        return Err(Error::InvalidArgument("need at least one probe point".into()));
    }
    let contributions = local_power_functional(density, xs, r2, grid, mc_n, seed, LocalKind::Minimal, -eps2)?;
    let params = BTreeMap::from([("eps2".to_owned(), eps2), ("r2".to_owned(), r2)]);
    Ok(summarize(FunctionalKind::T, params, contributions, mc_n, seed, Vec::new()))
}

/// Monte Carlo estimate of `T_f(eps2, R2)` over `n_outer` draws from `f`.
pub fn functional_t(
    density: &AnalyticDensity,
    eps2: f64,
    r2: f64,
    n_outer: usize,
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<FunctionalEstimate> {
    let xs = draw_probe_points(density, n_outer, seed, None)?;
    functional_t_at(density, &xs, eps2, r2, grid, mc_n, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationEntry {
    pub x: Vec<f64>,
    pub m_hat: f64,
    pub std_error: f64,
    pub bound: f64,
    pub margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinorizationReport {
    pub r: f64,
    pub lambda_min: f64,
    /// `exp(-R^2 / (2 lambda_min))`.
    pub c: f64,
    pub all_ok: bool,
    pub entries: Vec<MinorizationEntry>,
}

/// Checks `m_f(x, R) >= c f(x)` with `c = exp(-R^2 / (2 lambda_min))` at each
/// probe point. A margin counts as satisfied when it is at least
/// `-3 * std_error` (plus a rounding allowance).
pub fn check_gaussian_minorization(
    density: &AnalyticDensity,
    big_r: f64,
    xs: &[Vec<f64>],
    grid: usize,
    mc_n: usize,
    seed: u64,
) -> Result<MinorizationReport> {
    let lambda_min = density.lambda_min().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "minorization check applies to gaussian densities, got {}",
            density.family_name()
        ))
    })?;
    check_positive("R", big_r)?;
    let c = (-big_r * big_r / (2.0 * lambda_min)).exp();
    let entries: Vec<MinorizationEntry> = xs
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let m = minimal_function(density, x, big_r, grid, mc_n, ball_seed(seed, i))?;
            let bound = c * density.pdf_unchecked(x);
            let margin = m.value - bound;
            let tol = 3.0 * m.std_error + 1e-12 * bound;
            Ok(MinorizationEntry {
                x: x.clone(),
                m_hat: m.value,
                std_error: m.std_error,
                bound,
                margin,
                ok: margin >= -tol,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MinorizationReport {
        r: big_r,
        lambda_min,
        c,
        all_ok: entries.iter().all(|e| e.ok),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogMomentReport {
    pub rate: f64,
    pub quad_tol: f64,
    /// Integrals over `(0, 1/e]`.
    pub identity1: IdentityCheck,
    /// Integrals over `(e, inf)`.
    pub identity2: IdentityCheck,
    pub all_ok: bool,
}

/// Verifies the two integration-by-parts identities for `G(|log u|)`-type
/// moments with the exponential distribution function `F(u) = 1 - e^{-rate u}`:
///
/// ```text
/// int_(0,1/e] (-log u) log(-log u) dF(u) = int_(0,1/e] F(u) (log(-log u) + 1) / u du
/// int_(e,inf) log u log log u dF(u)      = int_(e,inf) (1 - F(u)) (log log u + 1) / u du
/// ```
///
/// Each side is integrated separately after the substitution `u = e^{-s}`
/// (first identity) or `u = e^{s}` (second), which turns both ranges into
/// `s in [1, inf)` and removes the endpoint singularities.
pub fn verify_log_moment_identities(rate: f64, quad_tol: f64) -> Result<LogMomentReport> {
    check_positive("rate", rate)?;
    check_positive("quad_tol", quad_tol)?;
    let abs_tol = quad_tol * 1e-3;
    let q = |f: &dyn Fn(f64) -> f64| integrate_to_infinity(f, 1.0, abs_tol, 1e-13).map(|r| r.value);

    // dF(u) = rate e^{-rate u} du, u = e^{-s}, du = -e^{-s} ds.
    let lhs1 = q(&|s: f64| {
        let u = (-s).exp();
        s * s.ln() * rate * (-rate * u).exp() * u
    })?;
    // F(u) du / u = F(e^{-s}) ds.
    let rhs1 = q(&|s: f64| -(-rate * (-s).exp()).exp_m1() * (s.ln() + 1.0))?;
    // u = e^{s}, du = e^{s} ds.
    let lhs2 = q(&|s: f64| {
        let u = s.exp();
        s * s.ln() * rate * (-rate * u).exp() * u
    })?;
    let rhs2 = q(&|s: f64| (-rate * s.exp()).exp() * (s.ln() + 1.0))?;

    let check = |lhs: f64, rhs: f64| {
        let abs_diff = (lhs - rhs).abs();
        IdentityCheck { lhs, rhs, abs_diff, ok: abs_diff <= quad_tol }
    };
    let identity1 = check(lhs1, rhs1);
    let identity2 = check(lhs2, rhs2);
    Ok(LogMomentReport {
        rate,
        quad_tol,
        all_ok: identity1.ok && identity2.ok,
        identity1,
        identity2,
    })
}

/// Upper limit `1/e` of the first identity's range, for reference.
pub const INV_E: f64 = 1.0 / E;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub p: f64,
    pub n_pairs: usize,
    pub seed: u64,
    pub value: f64,
    pub std_error: f64,
    pub half_value: f64,
    pub half_std_error: f64,
    pub stable: bool,
    pub flags: Vec<String>,
}

/// `|log rho(x, y)|^p`.
pub fn log_distance_moment(x: &[f64], y: &[f64], p: f64) -> f64 {
    let d2 = squared_distance(x, y);
    (0.5 * d2.ln()).abs().powf(p)
}

/// Monte Carlo estimate of `E |log rho(X1, X2)|^p` over independent pairs,
/// with a stability verdict comparing the full run to its first half.
pub fn check_condition_a(
    density: &AnalyticDensity,
    p: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<ConditionAReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be > 1, got {p}")));
    }
    if n_pairs < 4 {
        return Err(Error::InvalidArgument(format!("n_pairs must be >= 4, got {n_pairs}")));
    }
    let d = density.dim();
    let values: Vec<f64> = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(point_seed(seed, k));
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            density.draw(&mut rng, &mut x);
            density.draw(&mut rng, &mut y);
            log_distance_moment(&x, &y, p)
        })
        .collect();
    let mut flags = Vec::new();
    let (value, se) = (mean(&values), std_error(&values));
    let half = &values[..n_pairs / 2];
    let (half_value, half_se) = (mean(half), std_error(half));
    let finite = value.is_finite() && se.is_finite();
    if !finite {
        flags.push("divergent".into());
    }
    let stable = finite && (value - half_value).abs() <= 3.0 * (se * se + half_se * half_se).sqrt();
    if finite && !stable {
        flags.push("unstable".into());
    }
    Ok(ConditionAReport {
        p,
        n_pairs,
        seed,
        value: if finite { value } else { f64::INFINITY },
        std_error: if finite { se } else { f64::INFINITY },
        half_value,
        half_std_error: half_se,
        stable,
        flags,
    })
}
