//! Experiment orchestration: seeded Gaussian initial configurations,
//! multi-seed benchmark runs, the statistical indicators `T`, `sigma^2` and
//! `A`, and report emission.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geom::{overlap_area, pairs, Configuration, PackingProblem};
use crate::potential::potential_value;
use crate::solvers::{run_solver, Method, SolverParams, Status};
use crate::{Error, Result};

/// One benchmark: a method on a problem, repeated over `seeds` Gaussian
/// initial configurations with per-seed streams `base_seed + l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: PackingProblem,
    pub method: Method,
    pub params: SolverParams,
    pub seeds: usize,
    pub base_seed: u64,
}

/// Result of a single seeded run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub status: Status,
    /// Iterations in inner-step accounting (the `T_l` of the indicators).
    pub iterations: usize,
    /// Outer iterations only, for the alternative reading.
    pub outer_iterations: usize,
    pub final_w: f64,
    /// Per-seed overlap proportion `sum A_ij / (N A_total)`; only defined
    /// for planar problems.
    pub final_overlap: Option<f64>,
    /// Relative error after each outer iteration (CSV export only).
    #[serde(skip)]
    pub rel_errors: Vec<f64>,
}

/// Aggregated indicators over a seed set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub n: usize,
    pub dim: usize,
    pub diameter: f64,
    pub seeds: usize,
    pub converged: usize,
    /// Mean convergence time over converged seeds (inner-step accounting).
    pub t_mean: Option<f64>,
    /// Mean convergence time in outer iterations.
    pub t_outer_mean: Option<f64>,
    /// Unbiased variance of the convergence time; absent for fewer than two
    /// converged seeds.
    pub sigma2: Option<f64>,
    /// Mean proportion of overlapping area per sphere over converged seeds.
    pub a_mean: Option<f64>,
    pub w_mean: Option<f64>,
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub records: Vec<SeedRecord>,
}

/// Draw `N * b` independent standard-normal coordinates from a ChaCha8
/// stream; identical seeds give bit-identical configurations.
pub fn sample_initial_configuration(seed: u64, problem: &PackingProblem) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..problem.n * problem.dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Configuration::new(coords, problem.dim).expect("shape by construction")
}

/// Overlap proportion `sum_{i<j} A_ij / (N A_total)` of a configuration,
/// with `A_total = N pi (d/2)^2` (planar problems only).
pub fn overlap_proportion(x: &Configuration, problem: &PackingProblem) -> Option<f64> {
    if problem.dim != 2 {
        return None;
    }
    let d = problem.diameter;
    let n = problem.n as f64;
    let a_total = n * std::f64::consts::PI * (d / 2.0) * (d / 2.0);
    let sum: f64 = pairs(problem.n)
        .map(|p| overlap_area(x.point(p.k), x.point(p.l), d))
        .sum();
    Some(sum / (n * a_total))
}

/// Run one seed: sample, solve, measure.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRecord> {
    let x0 = sample_initial_configuration(seed, &config.problem);
    let mut params = config.params.clone();
    params.fallback_seed = seed;
    let trace = run_solver(config.method, x0, params, config.problem)?;
    Ok(SeedRecord {
        seed,
        status: trace.status,
        iterations: trace.total_iterations,
        outer_iterations: trace.outer_iterations,
        final_w: potential_value(&trace.final_state.x),
        final_overlap: overlap_proportion(&trace.final_state.x, &config.problem),
        rel_errors: trace.rel_errors,
    })
}

/// Aggregate per-seed records into the statistical indicators.
///
/// `T` and `sigma^2` are computed over converged seeds only; non-converged
/// seeds stay in `records` with their status.
pub fn compute_indicators(
    config: &ExperimentConfig,
    records: Vec<SeedRecord>,
) -> Result<ExperimentReport> {
    let conv: Vec<&SeedRecord> = records
        .iter()
        .filter(|r| r.status == Status::Converged)
        .collect();
    if conv.is_empty() && !records.is_empty() {
        return Err(Error::NoConvergedRuns);
    }
    let p = conv.len();
    let mean = |vals: &[f64]| -> Option<f64> {
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let ts: Vec<f64> = conv.iter().map(|r| r.iterations as f64).collect();
    let touter: Vec<f64> = conv.iter().map(|r| r.outer_iterations as f64).collect();
    let t_mean = mean(&ts);
    let sigma2 = if p >= 2 {
        let tm = t_mean.unwrap();
        Some(ts.iter().map(|t| (t - tm) * (t - tm)).sum::<f64>() / (p as f64 - 1.0))
    } else {
        None
    };
    let a_vals: Vec<f64> = conv.iter().filter_map(|r| r.final_overlap).collect();
    let w_vals: Vec<f64> = conv.iter().map(|r| r.final_w).collect();
    Ok(ExperimentReport {
        method: config.method,
        n: config.problem.n,
        dim: config.problem.dim,
        diameter: config.problem.diameter,
        seeds: records.len(),
        converged: p,
        t_mean,
        t_outer_mean: mean(&touter),
        sigma2,
        a_mean: mean(&a_vals),
        w_mean: mean(&w_vals),
        w_min: w_vals.iter().copied().reduce(f64::min),
        w_max: w_vals.iter().copied().reduce(f64::max),
        records,
    })
}

/// Run every seed of the experiment and aggregate. Deterministic given the
/// config: seeds are processed in index order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut records = Vec::with_capacity(config.seeds);
    for l in 0..config.seeds {
        let seed = config.base_seed.wrapping_add(l as u64);
        records.push(run_seed(config, seed)?);
    }
    compute_indicators(config, records)
}

/// JSON summary (stable field names, no timestamps).
pub fn report_to_json(report: &ExperimentReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Io {
        context: "serializing report".into(),
        source: std::io::Error::other(e),
    })
}

/// Per-iteration relative-error curves, one row per outer iteration:
/// `seed,iter,rel_error`.
pub fn write_rel_error_csv<W: std::io::Write>(records: &[SeedRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io_err = |e: csv::Error| Error::Io {
        context: "writing rel-error csv".into(),
        source: std::io::Error::other(e),
    };
    wtr.write_record(["seed", "iter", "rel_error"]).map_err(io_err)?;
    for r in records {
        for (i, e) in r.rel_errors.iter().enumerate() {
            wtr.write_record(&[r.seed.to_string(), (i + 1).to_string(), e.to_string()])
                .map_err(io_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::Io {
        context: "writing rel-error csv".into(),
        source: e,
    })?;
    Ok(())
}
