//! Kozachenko-Leonenko nearest-neighbor estimation of differential Shannon
//! entropy (in nats), together with numerical tools for the local and global
//! functionals that control its asymptotic behavior.
//!
//! The estimate for an i.i.d. sample `X_1..X_N` in `R^d` is
//!
//! ```text
//! H_N = d * log(rho_bar) + log(V_d) + gamma + log(N - 1)
//! ```
//!
//! where `rho_bar` is the geometric mean of the nearest-neighbor distances,
//! `V_d` the unit-ball volume and `gamma` the Euler-Mascheroni constant.
//!
//! ```
//! use entrokl::{kl_entropy, nn_distances_tree, SampleSet};
//!
//! let sample = SampleSet::from_rows(&[vec![0.0], vec![1.0]], "doc").unwrap();
//! let nn = nn_distances_tree(&sample);
//! let est = kl_entropy(&sample, &nn).unwrap();
//! assert!((est.h_n - 1.2703628454614782).abs() < 1e-12);
//! ```

pub mod cli;
pub mod conditions;
pub mod densities;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod io;
pub mod kdtree;
pub mod neighbors;
pub mod quad;
pub mod seed;
pub mod stats;
pub mod types;

pub use conditions::{FunctionalEstimate, FunctionalKind, LocalFunctionalValue, LocalKind};
pub use densities::{AnalyticDensity, DensitySpec, Support};
pub use diagnostics::ConditionalLawReport;
pub use error::{Error, Result};
pub use estimator::{kl_entropy, kl_entropy_with, kl_entropy_with_jitter, EntropyEstimate};
pub use experiments::{convergence_study, ConvergenceReport};
pub use neighbors::{nn_distances, nn_distances_brute, nn_distances_tree, NnDistances, NnMethod};
pub use types::{g_function, unit_ball_volume, MathConstants, SampleSet, EULER_GAMMA};
