//! Ground-truth densities: Gaussian, uniform box and one-dimensional
//! exponential.
//!
//! Each density can be evaluated, sampled exactly and, where a closed form
//! exists, integrated over Euclidean balls. Specifications are read from JSON:
//!
//! ```json
//! {"family":"gaussian","mean":[0,0],"cov":[[1,0],[0,1]]}
//! {"family":"uniform_box","lower":[0],"upper":[1]}
//! {"family":"exponential","rate":2.0}
//! ```

use std::f64::consts::{E, PI, SQRT_2};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::types::{log_unit_ball_volume, SampleSet};

/// Serialized form of a density, exactly as it appears in JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    Exponential { rate: f64 },
}

impl DensitySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let message = e.to_string();
            Error::InvalidDensity {
                field: offending_field(&message),
                reason: message,
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("density spec serializes")
    }
}

fn offending_field(message: &str) -> String {
    if message.contains("variant") || message.contains("`family`") {
        return "family".into();
    }
    if let Some(start) = message.find("field `") {
        let rest = &message[start + 7..];
        if let Some(end) = rest.find('`') {
            return rest[..end].to_owned();
        }
    }
    "document".into()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    AllSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    HalfLine,
}

#[derive(Debug, Clone)]
enum Model {
    Gaussian {
        mean: Vec<f64>,
        /// Lower Cholesky factor of the covariance, row-major.
        chol: Vec<f64>,
        /// Inverse of `chol`, row-major lower triangular.
        chol_inv: Vec<f64>,
        log_det: f64,
        lambda_min: f64,
        lambda_max: f64,
    },
    Uniform {
        lower: Vec<f64>,
        upper: Vec<f64>,
        log_volume: f64,
    },
    Exponential {
        rate: f64,
    },
}

/// A validated, immutable density with cached factorizations.
#[derive(Debug, Clone)]
pub struct AnalyticDensity {
    spec: DensitySpec,
    dim: usize,
    model: Model,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidDensity {
        field: field.into(),
        reason: reason.into(),
    }
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(())
}

impl AnalyticDensity {
    pub fn from_spec(spec: DensitySpec) -> Result<Self> {
        let (dim, model) = match &spec {
            DensitySpec::Gaussian { mean, cov } => {
                check_finite("mean", mean)?;
                let d = mean.len();
                if cov.len() != d || cov.iter().any(|row| row.len() != d) {
                    return Err(invalid("cov", format!("must be a {d}x{d} matrix")));
                }
                let flat: Vec<f64> = cov.iter().flatten().copied().collect();
                check_finite("cov", &flat)?;
                for i in 0..d {
                    for j in 0..i {
                        let (a, b) = (cov[i][j], cov[j][i]);
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(invalid("cov", "matrix is not symmetric"));
                        }
                    }
                }
                let m = DMatrix::from_row_slice(d, d, &flat);
                let m = (&m + m.transpose()) * 0.5;
                let eig = m.clone().symmetric_eigen();
                let lambda_min = eig.eigenvalues.min();
                let lambda_max = eig.eigenvalues.max();
                if !(lambda_min > 0.0 && lambda_min >= 1e-12 * lambda_max) {
                    return Err(invalid(
                        "cov",
                        format!("matrix is singular or not positive definite (eigenvalues in [{lambda_min:e}, {lambda_max:e}])"),
                    ));
                }
                let l = m
                    .cholesky()
                    .ok_or_else(|| invalid("cov", "Cholesky factorization failed"))?
                    .unpack();
                let l_inv = l
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| invalid("cov", "Cholesky factor is not invertible"))?;
                let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
                let row_major = |mat: &DMatrix<f64>| -> Vec<f64> {
                    (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| if j <= i { mat[(i, j)] } else { 0.0 }).collect()
                };
                (
                    d,
                    Model::Gaussian {
                        mean: mean.clone(),
                        chol: row_major(&l),
                        chol_inv: row_major(&l_inv),
                        log_det,
                        lambda_min,
                        lambda_max,
                    },
                )
            }
            DensitySpec::UniformBox { lower, upper } => {
                check_finite("lower", lower)?;
                check_finite("upper", upper)?;
                if lower.len() != upper.len() {
                    return Err(invalid("upper", "length differs from `lower`"));
                }
                if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] < upper[k])) {
                    return Err(invalid("upper", format!("upper[{k}] must exceed lower[{k}]")));
                }
                let log_volume = lower.iter().zip(upper).map(|(l, u)| (u - l).ln()).sum();
                if !f64::is_finite(log_volume) {
                    return Err(invalid("upper", "box volume is not representable"));
                }
                (
                    lower.len(),
                    Model::Uniform {
                        lower: lower.clone(),
                        upper: upper.clone(),
                        log_volume,
                    },
                )
            }
            DensitySpec::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(invalid("rate", format!("must be finite and > 0, got {rate}")));
                }
                (1, Model::Exponential { rate: *rate })
            }
        };
        Ok(AnalyticDensity { spec, dim, model })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_spec(DensitySpec::from_json(text)?)
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_spec(DensitySpec::Gaussian { mean, cov })
    }

    pub fn standard_normal(d: usize) -> Result<Self> {
        let cov = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::gaussian(vec![0.0; d], cov)
    }

    pub fn uniform_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::from_spec(DensitySpec::UniformBox { lower, upper })
    }

    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::uniform_box(vec![0.0; d], vec![1.0; d])
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::from_spec(DensitySpec::Exponential { rate })
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family_name(&self) -> &'static str {
        match self.model {
            Model::Gaussian { .. } => "gaussian",
            Model::Uniform { .. } => "uniform_box",
            Model::Exponential { .. } => "exponential",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.model, Model::Gaussian { .. })
    }

    pub fn support(&self) -> Support {
        match &self.model {
            Model::Gaussian { .. } => Support::AllSpace,
            Model::Uniform { lower, upper, .. } => Support::Box {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            Model::Exponential { .. } => Support::HalfLine,
        }
    }

    /// Smallest covariance eigenvalue, for Gaussians.
    pub fn lambda_min(&self) -> Option<f64> {
        match self.model {
            Model::Gaussian { lambda_min, .. } => Some(lambda_min),
            _ => None,
        }
    }

    pub fn lambda_max(&self) -> Option<f64> {
        match self.model {
            Model::Gaussian { lambda_max, .. } => Some(lambda_max),
            _ => None,
        }
    }

    /// `sup_x f(x)`.
    pub fn max_density(&self) -> f64 {
        match &self.model {
            Model::Gaussian { log_det, .. } => {
                (-0.5 * (self.dim as f64 * (2.0 * PI).ln() + log_det)).exp()
            }
            Model::Uniform { log_volume, .. } => (-log_volume).exp(),
            Model::Exponential { rate } => *rate,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.pdf_unchecked(x))
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.log_pdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn pdf_unchecked(&self, x: &[f64]) -> f64 {
        self.log_pdf_unchecked(x).exp()
    }

    pub(crate) fn log_pdf_unchecked(&self, x: &[f64]) -> f64 {
        match &self.model {
            Model::Gaussian { mean, chol_inv, log_det, .. } => {
                let d = self.dim;
                let mut q = 0.0;
                for i in 0..d {
                    let row = &chol_inv[i * d..i * d + i + 1];
                    let z: f64 = row.iter().zip(x).zip(mean).map(|((l, xi), m)| l * (xi - m)).sum();
                    q += z * z;
                }
                -0.5 * (q + d as f64 * (2.0 * PI).ln() + log_det)
            }
            Model::Uniform { lower, upper, log_volume } => {
                let inside = x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| l <= v && v <= u);
                if inside {
                    -log_volume
                } else {
                    f64::NEG_INFINITY
                }
            }
            Model::Exponential { rate } => {
                if x[0] >= 0.0 {
                    rate.ln() - rate * x[0]
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Writes one exact draw into `out` (length `dim`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match &self.model {
            Model::Gaussian { mean, chol, .. } => {
                let d = self.dim;
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                // Lower-triangular product in place, last row first.
                for i in (0..d).rev() {
                    let row = &chol[i * d..i * d + i + 1];
                    let s: f64 = row.iter().zip(out.iter()).map(|(l, z)| l * z).sum();
                    out[i] = mean[i] + s;
                }
            }
            Model::Uniform { lower, upper, .. } => {
                for ((v, l), u) in out.iter_mut().zip(lower).zip(upper) {
                    *v = l + (u - l) * rng.random::<f64>();
                }
            }
            Model::Exponential { rate } => {
                let u: f64 = rng.random();
                out[0] = -(-u).ln_1p() / rate;
            }
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("sample size must be >= 2, got {n}")));
        }
        let mut rng = rng_from_seed(seed);
        let mut points = vec![0.0; n * self.dim];
        for row in points.chunks_exact_mut(self.dim) {
            self.draw(&mut rng, row);
        }
        SampleSet::new(points, self.dim, format!("{} n={n} seed={seed}", self.family_name()))
    }

    /// Closed-form differential entropy in nats.
    pub fn analytic_entropy(&self) -> f64 {
        match &self.model {
            Model::Gaussian { log_det, .. } => 0.5 * (self.dim as f64 * (2.0 * PI * E).ln() + log_det),
            Model::Uniform { log_volume, .. } => *log_volume,
            Model::Exponential { rate } => 1.0 - rate.ln(),
        }
    }

    /// Exact probability of the closed ball `B(x, r)` when a closed form is
    /// available: 1-D families, a uniform box when the ball lies inside it or
    /// misses it entirely. `None` means the caller should integrate
    /// numerically.
    pub fn ball_mass_exact(&self, x: &[f64], r: f64) -> Option<f64> {
        if x.len() != self.dim || !(r > 0.0) {
            return None;
        }
        match &self.model {
            Model::Gaussian { mean, chol, .. } if self.dim == 1 => {
                let sigma = chol[0];
                let a = (x[0] - r - mean[0]) / sigma;
                let b = (x[0] + r - mean[0]) / sigma;
                Some(normal_interval(a, b))
            }
            Model::Gaussian { .. } => None,
            Model::Uniform { lower, upper, log_volume } => {
                let d = self.dim;
                if d == 1 {
                    let lo = (x[0] - r).max(lower[0]);
                    let hi = (x[0] + r).min(upper[0]);
                    return Some(((hi - lo).max(0.0) / (upper[0] - lower[0])).min(1.0));
                }
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (l, u))| v - r >= *l && v + r <= *u);
                if inside {
                    let log_ball = d as f64 * r.ln() + log_unit_ball_volume(d).ok()?;
                    return Some((log_ball - log_volume).exp().min(1.0));
                }
                let gap2: f64 = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (l, u))| {
                        let g = (l - v).max(v - u).max(0.0);
                        g * g
                    })
                    .sum();
                if gap2 > r * r {
                    Some(0.0)
                } else {
                    None
                }
            }
            Model::Exponential { rate } => {
                let lo = (x[0] - r).max(0.0);
                let hi = x[0] + r;
                if hi <= 0.0 {
                    return Some(0.0);
                }
                // e^{-rate lo} - e^{-rate hi}
                Some(-(-rate * lo).exp() * (-rate * (hi - lo)).exp_m1())
            }
        }
    }

    /// Whether every closed ball of radius `margin` around `x` stays inside
    /// the support.
    pub fn is_interior(&self, x: &[f64], margin: f64) -> bool {
        match &self.model {
            Model::Gaussian { .. } => true,
            Model::Uniform { lower, upper, .. } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| v - margin > *l && v + margin < *u),
            Model::Exponential { .. } => x[0] - margin > 0.0,
        }
    }
}

fn std_normal_upper(t: f64) -> f64 {
    0.5 * erfc(t / SQRT_2)
}

/// `Phi(b) - Phi(a)` evaluated on whichever tail keeps precision.
fn normal_interval(a: f64, b: f64) -> f64 {
    let p = if a >= 0.0 {
        std_normal_upper(a) - std_normal_upper(b)
    } else if b <= 0.0 {
        std_normal_upper(-b) - std_normal_upper(-a)
    } else {
        1.0 - std_normal_upper(-a) - std_normal_upper(b)
    };
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::stats::{mean, std_error};
    use approx::assert_abs_diff_eq;

    #[test]
    fn pdf_examples() {
        let n1 = AnalyticDensity::standard_normal(1).unwrap();
        assert_abs_diff_eq!(n1.pdf(&[0.0]).unwrap(), 0.3989422804014327, epsilon = 1e-15);
        let u = AnalyticDensity::unit_cube(1).unwrap();
        assert_eq!(u.pdf(&[0.5]).unwrap(), 1.0);
        assert_eq!(u.pdf(&[2.0]).unwrap(), 0.0);
        let ex = AnalyticDensity::exponential(2.0).unwrap();
        assert_abs_diff_eq!(ex.pdf(&[0.5]).unwrap(), 2.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(ex.pdf(&[-0.5]).unwrap(), 0.0);
        assert!(matches!(n1.pdf(&[0.0, 1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn correlated_gaussian_pdf_matches_direct_formula() {
        let cov = vec![vec![2.0, 0.6], vec![0.6, 1.0]];
        let g = AnalyticDensity::gaussian(vec![1.0, -1.0], cov).unwrap();
        let x = [0.3, 0.2];
        let det: f64 = 2.0 * 1.0 - 0.36;
        let inv = [[1.0 / det, -0.6 / det], [-0.6 / det, 2.0 / det]];
        let dx = [x[0] - 1.0, x[1] + 1.0];
        let q = dx[0] * (inv[0][0] * dx[0] + inv[0][1] * dx[1]) + dx[1] * (inv[1][0] * dx[0] + inv[1][1] * dx[1]);
        let expected = (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
        assert_abs_diff_eq!(g.pdf(&x).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(g.lambda_min().unwrap(), 1.5 - (0.25f64 + 0.36).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(AnalyticDensity::gaussian(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]]).is_err());
        assert!(AnalyticDensity::gaussian(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
        assert!(AnalyticDensity::gaussian(vec![0.0], vec![vec![-1.0]]).is_err());
        assert!(AnalyticDensity::gaussian(vec![], vec![]).is_err());
        assert!(AnalyticDensity::uniform_box(vec![0.0], vec![0.0]).is_err());
        assert!(AnalyticDensity::uniform_box(vec![0.0, 1.0], vec![1.0]).is_err());
        let err = AnalyticDensity::exponential(-1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidDensity { ref field, .. } if field == "rate"));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let d = AnalyticDensity::from_json(r#"{"family":"gaussian","mean":[0,1],"cov":[[1,0],[0,2]]}"#).unwrap();
        assert_eq!(d.dim(), 2);
        let again = DensitySpec::from_json(&d.spec().to_json()).unwrap();
        assert_eq!(&again, d.spec());
        let field = |text: &str| match AnalyticDensity::from_json(text) {
            Err(Error::InvalidDensity { field, .. }) => field,
            other => panic!("expected density error, got {other:?}"),
        };
        assert_eq!(field(r#"{"family":"gaussian","cov":[[1]]}"#), "mean");
        assert_eq!(field(r#"{"family":"cauchy"}"#), "family");
        assert_eq!(field(r#"{"family":"exponential","rate":-1}"#), "rate");
        assert_eq!(field(r#"{"family":"uniform_box","lower":[0],"upper":[1],"extra":1}"#), "extra");
        assert_eq!(field("not json"), "document");
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        let u = AnalyticDensity::unit_cube(1).unwrap();
        let s = u.sample(10_000, 3).unwrap();
        assert!(s.points().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(s, u.sample(10_000, 3).unwrap());
        assert_ne!(s, u.sample(10_000, 4).unwrap());
        assert!(u.sample(1, 3).is_err());
        let ex = AnalyticDensity::exponential(0.5).unwrap();
        assert!(ex.sample(1000, 1).unwrap().points().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn gaussian_sample_mean() {
        let cov = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
        let g = AnalyticDensity::gaussian(vec![1.0, -2.0], cov).unwrap();
        let s = g.sample(10_000, 11).unwrap();
        let sigma_max = g.lambda_max().unwrap().sqrt();
        for (k, target) in [1.0, -2.0].iter().enumerate() {
            let col: Vec<f64> = s.rows().map(|r| r[k]).collect();
            assert!((mean(&col) - target).abs() < 4.0 / 100.0 * sigma_max);
        }
        // Sample covariance entry.
        let c01: Vec<f64> = s.rows().map(|r| (r[0] - 1.0) * (r[1] + 2.0)).collect();
        assert!((mean(&c01) - 0.5).abs() < 0.06);
    }

    #[test]
    fn entropy_closed_forms() {
        let n1 = AnalyticDensity::standard_normal(1).unwrap();
        assert_abs_diff_eq!(n1.analytic_entropy(), 1.4189385332046727, epsilon = 1e-14);
        assert_abs_diff_eq!(AnalyticDensity::unit_cube(3).unwrap().analytic_entropy(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(AnalyticDensity::exponential(1.0).unwrap().analytic_entropy(), 1.0, epsilon = 1e-15);
        let n2 = AnalyticDensity::standard_normal(2).unwrap();
        assert_abs_diff_eq!(n2.analytic_entropy(), (2.0 * PI * E).ln(), epsilon = 1e-14);
    }

    fn entropy_by_quadrature(d: &AnalyticDensity, a: f64, b: f64) -> f64 {
        integrate(
            |x| {
                let f = d.pdf(&[x]).unwrap();
                if f > 0.0 { -f * f.ln() } else { 0.0 }
            },
            a,
            b,
            1e-13,
            0.0,
        )
        .unwrap()
        .value
    }

    #[test]
    fn entropy_matches_quadrature() {
        for (mu, var) in [(0.0f64, 1.0f64), (0.3, 2.5), (-4.0, 0.01)] {
            let g = AnalyticDensity::gaussian(vec![mu], vec![vec![var]]).unwrap();
            let s = f64::sqrt(var);
            let h = entropy_by_quadrature(&g, mu - 10.0 * s, mu + 10.0 * s);
            assert_abs_diff_eq!(h, 0.5 * (2.0 * PI * E * var).ln(), epsilon = 1e-8);
        }
        for rate in [0.1, 1.0, 10.0] {
            let ex = AnalyticDensity::exponential(rate).unwrap();
            let h = entropy_by_quadrature(&ex, 0.0, 60.0 / rate);
            assert_abs_diff_eq!(h, 1.0 - f64::ln(rate), epsilon = 1e-8);
        }
    }

    #[test]
    fn ball_mass_examples() {
        let n1 = AnalyticDensity::standard_normal(1).unwrap();
        assert_abs_diff_eq!(n1.ball_mass_exact(&[0.0], 1.0).unwrap(), 0.6826894921370859, epsilon = 1e-14);
        let u = AnalyticDensity::unit_cube(1).unwrap();
        assert_eq!(u.ball_mass_exact(&[0.5], 0.25), Some(0.5));
        assert_eq!(u.ball_mass_exact(&[0.0], 0.5), Some(0.5));
        let u2 = AnalyticDensity::unit_cube(2).unwrap();
        assert_abs_diff_eq!(u2.ball_mass_exact(&[0.5, 0.5], 0.25).unwrap(), PI / 16.0, epsilon = 1e-15);
        assert_eq!(u2.ball_mass_exact(&[3.0, 3.0], 0.5), Some(0.0));
        assert_eq!(u2.ball_mass_exact(&[0.0, 0.5], 0.25), None);
        assert_eq!(AnalyticDensity::standard_normal(2).unwrap().ball_mass_exact(&[0.0, 0.0], 1.0), None);
        let ex = AnalyticDensity::exponential(1.0).unwrap();
        assert_abs_diff_eq!(ex.ball_mass_exact(&[1.0], 1.0).unwrap(), 1.0 - (-2.0f64).exp(), epsilon = 1e-15);
        assert_eq!(ex.ball_mass_exact(&[-3.0], 1.0), Some(0.0));
    }

    #[test]
    fn ball_mass_against_quadrature() {
        let g = AnalyticDensity::gaussian(vec![0.7], vec![vec![0.4]]).unwrap();
        for (x, r) in [(0.0, 0.3), (2.5, 1.2), (-6.0, 0.5)] {
            let q = integrate(|y| g.pdf(&[y]).unwrap(), x - r, x + r, 1e-15, 0.0).unwrap().value;
            assert_abs_diff_eq!(g.ball_mass_exact(&[x], r).unwrap(), q, epsilon = 1e-13);
        }
    }

    #[test]
    fn ball_mass_monotone_and_saturates() {
        let cases = [
            (AnalyticDensity::standard_normal(1).unwrap(), vec![0.4]),
            (AnalyticDensity::unit_cube(1).unwrap(), vec![0.2]),
            (AnalyticDensity::exponential(2.0).unwrap(), vec![1.0]),
        ];
        for (d, x) in &cases {
            let mut prev = 0.0;
            for k in 0..200 {
                let r = 1e-3 * 1.07f64.powi(k);
                let m = d.ball_mass_exact(x, r).unwrap();
                assert!(m >= prev, "{} not monotone at r={r}", d.family_name());
                prev = m;
            }
            assert!(d.ball_mass_exact(x, 1e3).unwrap() >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn gaussian_mode_is_maximum() {
        let cov = vec![vec![1.0, 0.3], vec![0.3, 0.5]];
        let g = AnalyticDensity::gaussian(vec![0.5, 0.5], cov).unwrap();
        let peak = g.pdf(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(peak, g.max_density(), epsilon = 1e-15);
        let mut rng = rng_from_seed(5);
        for _ in 0..1000 {
            let dx: f64 = rng.random_range(-1.0..1.0);
            let dy: f64 = rng.random_range(-1.0..1.0);
            assert!(g.pdf(&[0.5 + dx, 0.5 + dy]).unwrap() <= peak);
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        let cases: Vec<(AnalyticDensity, Vec<f64>, Vec<f64>)> = vec![
            (
                AnalyticDensity::gaussian(vec![1.0, 0.0], vec![vec![1.0, 0.2], vec![0.2, 0.5]]).unwrap(),
                vec![-9.0, -8.0],
                vec![11.0, 8.0],
            ),
            (AnalyticDensity::uniform_box(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap(), vec![0.0, -1.0], vec![2.0, 1.0]),
            (AnalyticDensity::exponential(0.5).unwrap(), vec![0.0], vec![80.0]),
        ];
        for (density, lo, hi) in cases {
            let mut rng = rng_from_seed(17);
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let mut x = vec![0.0; lo.len()];
            let values: Vec<f64> = (0..100_000)
                .map(|_| {
                    for ((v, a), b) in x.iter_mut().zip(&lo).zip(&hi) {
                        *v = rng.random_range(*a..*b);
                    }
                    vol * density.pdf(&x).unwrap()
                })
                .collect();
            let (m, se) = (mean(&values), std_error(&values));
            assert!((m - 1.0).abs() <= 3.0 * se.max(1e-12), "{}: {m} +- {se}", density.family_name());
        }
    }
}
