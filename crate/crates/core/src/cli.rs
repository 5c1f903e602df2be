//! The `entrokl` command line.
//!
//! Exit codes: 0 success, 2 input or flag error, 3 duplicate points,
//! 4 a finiteness or condition check failed, 5 some experiment replications
//! failed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::conditions::{
    check_condition_a, check_gaussian_minorization, draw_probe_points, functional_k,
    functional_q_at, functional_t_at, gaussian_probe_points, verify_log_moment_identities,
    DEFAULT_GRID, DEFAULT_MC_N,
};
use crate::densities::{AnalyticDensity, Support};
use crate::diagnostics::conditional_law_report;
use crate::error::Error;
use crate::estimator::{jitter, kl_entropy_with};
use crate::experiments::{convergence_study, DEFAULT_N_GRID};
use crate::io::{
    format_f64, parse_count_list, parse_vector, points_to_csv, read_points, to_json_string,
    write_output,
};
use crate::neighbors::{nn_distances_tree, NnMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DUPLICATES: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "entrokl", version, about = "Nearest-neighbor differential entropy estimation")]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true, env = "ENTROKL_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Brute,
    Tree,
}

impl From<Backend> for NnMethod {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Brute => NnMethod::Brute,
            Backend::Tree => NnMethod::Tree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Functional {
    #[value(name = "K")]
    K,
    #[value(name = "K2")]
    K2,
    #[value(name = "Q")]
    Q,
    #[value(name = "T")]
    T,
    #[value(name = "A")]
    A,
    #[value(name = "minorization")]
    Minorization,
    #[value(name = "lemmaG")]
    LemmaG,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the entropy of a points CSV file.
    Estimate {
        points: PathBuf,
        #[arg(long, value_enum, default_value = "tree")]
        backend: Backend,
        /// Half-width of uniform noise added to every coordinate.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a sample from a density JSON file and write it as CSV.
    Sample {
        density: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a condition functional or run a condition check.
    Conditions {
        /// Density JSON file (not needed for lemmaG).
        density: Option<PathBuf>,
        #[arg(long, value_enum)]
        functional: Functional,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Moment order for condition A.
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Rate of the exponential law used by lemmaG.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
        #[arg(long, default_value_t = 1e-6)]
        quad_tol: f64,
        /// Outer sample count (probe points, or pairs for A).
        #[arg(long, default_value_t = 1000)]
        n_outer: usize,
        #[arg(long, default_value_t = 1000)]
        n_inner: usize,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_MC_N)]
        mc_n: usize,
        /// Minorization probes lie within this many standard deviations of the mean.
        #[arg(long, default_value_t = 3.0)]
        probe_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the rescaled nearest-neighbor statistic at a point with its limit law.
    Diagnose {
        density: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 4096)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence study against the analytic entropy.
    Converge {
        density: PathBuf,
        /// Comma-separated sample sizes.
        #[arg(long)]
        n_grid: Option<String>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "tree")]
        backend: Backend,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DuplicatePoints { .. } => EXIT_DUPLICATES,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

#[derive(Serialize)]
struct EstimateOutput {
    h_n: f64,
    n: usize,
    dim: usize,
    log_rho_bar: f64,
    method: NnMethod,
    duplicates_handled: bool,
    jitter: f64,
    seed: u64,
}

fn load_density(path: &Path) -> std::result::Result<AnalyticDensity, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(AnalyticDensity::from_json(&text)?)
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> std::result::Result<(), Failure> {
    Ok(write_output(out, &to_json_string(value)?)?)
}

fn exit_for(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_estimate(
    points: &Path,
    backend: Backend,
    jitter_scale: f64,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let sample = read_points(points)?;
    let (est, handled) = if jitter_scale != 0.0 {
        let had_duplicates = nn_distances_tree(&sample).has_duplicates();
        let jittered = jitter(&sample, jitter_scale, seed)?;
        (kl_entropy_with(&jittered, backend.into())?, had_duplicates)
    } else {
        (kl_entropy_with(&sample, backend.into())?, false)
    };
    emit(
        out,
        &EstimateOutput {
            h_n: est.h_n,
            n: est.n,
            dim: est.dim,
            log_rho_bar: est.log_rho_bar,
            method: est.method,
            duplicates_handled: handled,
            jitter: jitter_scale,
            seed,
        },
    )?;
    Ok(EXIT_OK)
}

fn cmd_sample(density: &Path, n: usize, seed: u64, out: Option<&Path>) -> CmdResult {
    let density = load_density(density)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("--n must be >= 2, got {n}")).into());
    }
    let sample = density.sample(n, seed)?;
    write_output(out, &points_to_csv(&sample))?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_conditions(
    density: Option<&Path>,
    functional: Functional,
    eps: f64,
    r: f64,
    p: f64,
    rate: f64,
    quad_tol: f64,
    n_outer: usize,
    n_inner: usize,
    grid: usize,
    mc_n: usize,
    probe_sigma: f64,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    if functional == Functional::LemmaG {
        let report = verify_log_moment_identities(rate, quad_tol)?;
        emit(out, &report)?;
        return Ok(exit_for(report.all_ok));
    }
    let path = density.ok_or_else(|| Failure {
        code: EXIT_INPUT,
        message: "a density JSON file is required for this functional".into(),
    })?;
    let density = load_density(path)?;
    match functional {
        Functional::K | Functional::K2 => {
            let est = functional_k(&density, eps, n_outer, n_inner, seed, functional == Functional::K2)?;
            emit(out, &est)?;
            Ok(exit_for(!est.is_divergent()))
        }
        Functional::Q => {
            let xs = draw_probe_points(&density, n_outer, seed, None)?;
            let est = functional_q_at(&density, &xs, eps, r, grid, mc_n, seed)?;
            emit(out, &est)?;
            Ok(exit_for(!est.is_divergent()))
        }
        Functional::T => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidArgument(format!("--eps must lie in (0, 1) for T, got {eps}")).into());
            }
            let margin = matches!(density.support(), Support::Box { .. }).then_some(r);
            let xs = draw_probe_points(&density, n_outer, seed, margin)?;
            let est = functional_t_at(&density, &xs, eps, r, grid, mc_n, seed)?;
            emit(out, &est)?;
            Ok(exit_for(!est.is_divergent()))
        }
        Functional::A => {
            let report = check_condition_a(&density, p, n_outer, seed)?;
            emit(out, &report)?;
            Ok(exit_for(report.stable))
        }
        Functional::Minorization => {
            let xs = gaussian_probe_points(&density, n_outer, seed, probe_sigma)?;
            let report = check_gaussian_minorization(&density, r, &xs, grid, mc_n, seed)?;
            emit(out, &report)?;
            Ok(exit_for(report.all_ok))
        }
        Functional::LemmaG => unreachable!("handled above"),
    }
}

fn cmd_diagnose(
    density: &Path,
    x: &str,
    n: usize,
    reps: usize,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let density = load_density(density)?;
    let x = parse_vector(x)?;
    let report = conditional_law_report(&density, &x, n, reps, seed)?;
    emit(out, &report)?;
    Ok(EXIT_OK)
}

fn cmd_converge(
    density: &Path,
    n_grid: Option<&str>,
    reps: usize,
    seed: u64,
    backend: Backend,
    out_json: Option<&Path>,
    out_csv: Option<&Path>,
) -> CmdResult {
    let density = load_density(density)?;
    let grid = match n_grid {
        Some(text) => parse_count_list(text)?,
        None => DEFAULT_N_GRID.to_vec(),
    };
    let report = convergence_study(&density, &grid, reps, seed, backend.into())?;
    for f in &report.failures {
        eprintln!("replication failed: n={} rep={} seed={}: {}", f.n, f.rep, f.seed, f.message);
    }
    emit(out_json, &report)?;
    if let Some(path) = out_csv {
        let mut csv = String::from("n,rep,h_n,seed\n");
        for r in &report.records {
            csv.push_str(&format!("{},{},{},{}\n", r.n, r.rep, format_f64(r.h_n), r.seed));
        }
        write_output(Some(path), &csv)?;
    }
    Ok(if report.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Estimate { points, backend, jitter, seed, out } => {
            cmd_estimate(&points, backend, jitter, seed, out.as_deref())
        }
        Command::Sample { density, n, seed, out } => cmd_sample(&density, n, seed, out.as_deref()),
        Command::Conditions {
            density,
            functional,
            eps,
            r,
            p,
            rate,
            quad_tol,
            n_outer,
            n_inner,
            grid,
            mc_n,
            probe_sigma,
            seed,
            out,
        } => cmd_conditions(
            density.as_deref(),
            functional,
            eps,
            r,
            p,
            rate,
            quad_tol,
            n_outer,
            n_inner,
            grid,
            mc_n,
            probe_sigma,
            seed,
            out.as_deref(),
        ),
        Command::Diagnose { density, x, n, reps, seed, out } => {
            cmd_diagnose(&density, &x, n, reps, seed, out.as_deref())
        }
        Command::Converge { density, n_grid, reps, seed, backend, out_json, out_csv } => cmd_converge(
            &density,
            n_grid.as_deref(),
            reps,
            seed,
            backend,
            out_json.as_deref(),
            out_csv.as_deref(),
        ),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Failure {
            code: EXIT_INPUT,
            message: "--threads must be >= 1".into(),
        }),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure { code: EXIT_INPUT, message: e.to_string() }),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
