//! Benchmark CLI for the sphere-packing solvers.
//!
//! Subcommands: `solve` (one seeded run), `bench` (multi-seed indicators),
//! `stability` (1D two-sphere analyzer), `sweep-c` (damping sweep).
//!
//! All numeric flags can also come from a JSON config file (`--config`);
//! command-line flags override file values. Exit codes: 0 converged,
//! 2 budget exhausted, 3 diverged.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use packing::constraints::ConstraintForm;
use packing::geom::{Configuration, PackingProblem};
use packing::harness::{
    overlap_proportion, report_to_json, run_experiment, sample_initial_configuration,
    write_rel_error_csv, ExperimentConfig,
};
use packing::potential::potential_value;
use packing::solvers::{Method, SolverParams, SolverRun, Status};
use packing::stability::{analyze, integrate_two_sphere, OdeSystemId};

#[derive(Parser)]
#[command(name = "packing", about = "Sphere-packing solvers and benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one seeded initial configuration.
    Solve(SolveArgs),
    /// Run a method over many seeds and report the indicators T, sigma2, A.
    Bench(BenchArgs),
    /// Analyze (and optionally integrate) a 1D two-sphere ODE system.
    Stability(StabilityArgs),
    /// Sweep the damping parameter c and report iteration counts.
    SweepC(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Aha,
    Daha,
    Nap,
    Nav,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Aha => Method::Aha,
            MethodArg::Daha => Method::Daha,
            MethodArg::Nap => Method::Nap,
            MethodArg::Nav => Method::Nav,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Ns,
    S,
}

impl From<FormArg> for ConstraintForm {
    fn from(f: FormArg) -> ConstraintForm {
        match f {
            FormArg::Ns => ConstraintForm::NonSmooth,
            FormArg::S => ConstraintForm::Smooth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    AhaNs,
    AhaS,
    DahaNs,
    DahaS,
}

impl From<SystemArg> for OdeSystemId {
    fn from(s: SystemArg) -> OdeSystemId {
        match s {
            SystemArg::AhaNs => OdeSystemId::AHA_NS,
            SystemArg::AhaS => OdeSystemId::AHA_S,
            SystemArg::DahaNs => OdeSystemId::DAHA_NS,
            SystemArg::DahaS => OdeSystemId::DAHA_S,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

/// Flags shared by `solve`, `bench` and `sweep-c`. Everything is optional
/// here so a config file can fill the gaps; `resolve` applies defaults.
#[derive(Args, Default)]
struct ProblemFlags {
    /// JSON config file mirroring these flags (flags override the file).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<MethodArg>,
    #[arg(long)]
    form: Option<FormArg>,
    /// Number of spheres.
    #[arg(long)]
    n: Option<usize>,
    /// Space dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Damping parameter (DAHA).
    #[arg(long)]
    c: Option<f64>,
    /// Cross-term weight (DAHA); defaults to sqrt(alpha * beta).
    #[arg(long)]
    gamma: Option<f64>,
    /// Euler time step (NAV).
    #[arg(long)]
    tau: Option<f64>,
    /// Outer relative-error tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Inner-loop tolerance (NAP/NAV).
    #[arg(long)]
    eps_inner: Option<f64>,
    /// Inner iteration cap per outer iteration (NAP/NAV).
    #[arg(long)]
    inner_cap: Option<usize>,
    /// Outer iteration budget.
    #[arg(long)]
    max_outer: Option<usize>,
}

/// JSON mirror of the flags; unknown keys are rejected to catch typos.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    method: Option<String>,
    form: Option<String>,
    n: Option<usize>,
    dim: Option<usize>,
    diameter: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    c: Option<f64>,
    gamma: Option<f64>,
    tau: Option<f64>,
    eps: Option<f64>,
    eps_inner: Option<f64>,
    inner_cap: Option<usize>,
    max_outer: Option<usize>,
    seed: Option<u64>,
    seeds: Option<usize>,
    base_seed: Option<u64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, String> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| format!("reading config {}: {e}", p.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("parsing config {}: {e}", p.display()))
        }
    }
}

fn parse_variant<T: ValueEnum>(s: &str, what: &str) -> Result<T, String> {
    T::from_str(s, true).map_err(|e| format!("invalid {what} {s:?} in config file: {e}"))
}

struct Resolved {
    method: Method,
    problem: PackingProblem,
    params: SolverParams,
}

impl ProblemFlags {
    fn resolve(&self, file: &FileConfig) -> Result<Resolved, String> {
        let method: Method = match (self.method, &file.method) {
            (Some(m), _) => m.into(),
            (None, Some(s)) => parse_variant::<MethodArg>(s, "method")?.into(),
            (None, None) => return Err("missing --method (or \"method\" in config)".into()),
        };
        let form: ConstraintForm = match (self.form, &file.form) {
            (Some(f), _) => f.into(),
            (None, Some(s)) => parse_variant::<FormArg>(s, "form")?.into(),
            (None, None) => return Err("missing --form (or \"form\" in config)".into()),
        };
        let alpha = self
            .alpha
            .or(file.alpha)
            .ok_or("missing --alpha (or \"alpha\" in config)")?;
        let beta = self
            .beta
            .or(file.beta)
            .ok_or("missing --beta (or \"beta\" in config)")?;
        let problem = PackingProblem::new(
            self.n.or(file.n).unwrap_or(7),
            self.dim.or(file.dim).unwrap_or(2),
            self.diameter.or(file.diameter).unwrap_or(1.0),
        )
        .map_err(|e| e.to_string())?;
        let mut params = SolverParams::new(alpha, beta, form);
        if let Some(c) = self.c.or(file.c) {
            params.c = c;
        }
        if let Some(g) = self.gamma.or(file.gamma) {
            params.gamma = Some(g);
        }
        if let Some(t) = self.tau.or(file.tau) {
            params.tau = t;
        }
        if let Some(e) = self.eps.or(file.eps) {
            params.epsilon = e;
        }
        if let Some(e) = self.eps_inner.or(file.eps_inner) {
            params.epsilon_inner = e;
        }
        if let Some(i) = self.inner_cap.or(file.inner_cap) {
            params.inner_cap = i;
        }
        if let Some(m) = self.max_outer.or(file.max_outer) {
            params.max_outer = m;
        }
        params.validate(method).map_err(|e| e.to_string())?;
        Ok(Resolved {
            method,
            problem,
            params,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: ProblemFlags,
    /// Seed for the Gaussian initial configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for outputs (rel_error.csv, final.csv, dumps).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration indices at which to dump the configuration as CSV.
    #[arg(long, value_delimiter = ',')]
    dump_at: Vec<usize>,
    /// Print iter, rel_error and max sphere spread every K iterations.
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: ProblemFlags,
    /// Number of seeded runs.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// json: indicator summary; csv: per-iteration rel_error curves.
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, value_enum)]
    system: SystemArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    diameter: f64,
    /// Also integrate the nonlinear system and write a trajectory CSV.
    #[arg(long)]
    integrate: bool,
    #[arg(long, default_value_t = 0.2)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Trajectory CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ProblemFlags,
    #[arg(long, default_value_t = 0.5)]
    c_min: f64,
    #[arg(long, default_value_t = 10.0)]
    c_max: f64,
    #[arg(long, default_value_t = 0.5)]
    c_step: f64,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn status_exit(status: Status) -> ExitCode {
    match status {
        Status::Converged => ExitCode::SUCCESS,
        Status::BudgetExhausted => ExitCode::from(2),
        Status::Diverged => ExitCode::from(3),
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("writing {}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| format!("writing stdout: {e}")),
    }
}

fn write_configuration_csv(path: &Path, x: &Configuration) -> Result<(), String> {
    let mut out = String::from("sphere");
    for c in 0..x.dim() {
        out.push_str(&format!(",x{c}"));
    }
    out.push('\n');
    for i in 0..x.n() {
        out.push_str(&i.to_string());
        for v in x.point(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| format!("writing {}: {e}", path.display()))
}

/// Twice the largest center distance from the centroid: an upper proxy for
/// the inter-sphere spread, logged so dispersion regimes are observable.
fn max_spread(x: &Configuration) -> f64 {
    let n = x.n();
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.point(i)) {
            *m += v / n as f64;
        }
    }
    let mut max2: f64 = 0.0;
    for i in 0..n {
        let r2: f64 = x
            .point(i)
            .iter()
            .zip(&mean)
            .map(|(v, m)| (v - m) * (v - m))
            .sum();
        max2 = max2.max(r2);
    }
    2.0 * max2.sqrt()
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let file = load_file_config(args.common.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let resolved = args.common.resolve(&file)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    }

    let x0 = sample_initial_configuration(seed, &resolved.problem);
    let mut params = resolved.params;
    params.fallback_seed = seed;
    let mut run = SolverRun::new(resolved.method, x0, params, resolved.problem)
        .map_err(|e| e.to_string())?;

    let mut dump_at = args.dump_at.clone();
    dump_at.sort_unstable();
    let status = loop {
        let iter = run.outer_iterations();
        if dump_at.binary_search(&iter).is_ok() {
            if let Some(dir) = &args.out {
                write_configuration_csv(&dir.join(format!("dump_{iter}.csv")), &run.state.x)?;
            }
        }
        if let Some(k) = args.log_every {
            if k > 0 && iter % k == 0 {
                let rel = run.rel_errors.last().copied().unwrap_or(f64::NAN);
                eprintln!(
                    "iter {iter} rel_error {rel:.3e} spread {:.6}",
                    max_spread(&run.state.x)
                );
            }
        }
        if let Some(status) = run.step() {
            break status;
        }
    };

    let trace = run.run();
    let w = potential_value(&trace.final_state.x);
    let a = overlap_proportion(&trace.final_state.x, &resolved.problem);
    let summary = serde_json::json!({
        "method": resolved.method.to_string(),
        "status": trace.status,
        "seed": seed,
        "outer_iterations": trace.outer_iterations,
        "total_iterations": trace.total_iterations,
        "final_w": w,
        "final_overlap": a,
        "final_rel_error": trace.rel_errors.last(),
        "kkt": {
            "stationarity": trace.kkt.stationarity,
            "complementarity": trace.kkt.complementarity,
            "feasibility": trace.kkt.feasibility,
        },
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());

    if let Some(dir) = &args.out {
        write_configuration_csv(&dir.join("final.csv"), &trace.final_state.x)?;
        let f = fs::File::create(dir.join("rel_error.csv"))
            .map_err(|e| format!("creating rel_error.csv: {e}"))?;
        let record = packing::harness::SeedRecord {
            seed,
            status: trace.status,
            iterations: trace.total_iterations,
            outer_iterations: trace.outer_iterations,
            final_w: w,
            final_overlap: a,
            rel_errors: trace.rel_errors.clone(),
        };
        write_rel_error_csv(std::slice::from_ref(&record), f).map_err(|e| e.to_string())?;
    }
    Ok(status_exit(status))
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, String> {
    let file = load_file_config(args.common.config.as_deref())?;
    let resolved = args.common.resolve(&file)?;
    let config = ExperimentConfig {
        problem: resolved.problem,
        method: resolved.method,
        params: resolved.params,
        seeds: args.seeds.or(file.seeds).unwrap_or(20),
        base_seed: args.base_seed.or(file.base_seed).unwrap_or(0),
    };
    if config.seeds == 0 {
        return Err("--seeds must be at least 1".into());
    }
    let report = run_experiment(&config).map_err(|e| e.to_string())?;
    let bytes = match args.report {
        ReportFormat::Json => {
            let mut s = report_to_json(&report).map_err(|e| e.to_string())?;
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => {
            let mut buf = Vec::new();
            write_rel_error_csv(&report.records, &mut buf).map_err(|e| e.to_string())?;
            buf
        }
    };
    write_output(args.out.as_deref(), &bytes)?;
    // Worst status across seeds decides the exit code.
    let worst = report
        .records
        .iter()
        .map(|r| r.status)
        .max_by_key(|s| match s {
            Status::Converged => 0,
            Status::BudgetExhausted => 1,
            Status::Diverged => 2,
        })
        .unwrap_or(Status::Converged);
    Ok(status_exit(worst))
}

fn cmd_stability(args: StabilityArgs) -> Result<ExitCode, String> {
    let id: OdeSystemId = args.system.into();
    let report = analyze(id, args.alpha, args.beta, args.c, args.diameter);
    let eigs: Vec<serde_json::Value> = report
        .eigenvalues
        .iter()
        .map(|e| serde_json::json!({"re": e.re, "im": e.im}))
        .collect();
    let jac: Vec<Vec<f64>> = report
        .jacobian
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let summary = serde_json::json!({
        "system": args.system.to_possible_value().unwrap().get_name().to_string(),
        "jacobian": jac,
        "char_coeffs": report.char_coeffs,
        "eigenvalues": eigs,
        "classification": format!("{:?}", report.classification),
        "sufficient_condition_holds": report.sufficient_condition_holds,
    });
    println!("{}", serde_json::to_string_pretty(&summary).unwrap());

    if args.integrate {
        let traj = integrate_two_sphere(
            id, args.alpha, args.beta, args.c, args.diameter, args.x0, 0.0, args.dt, args.steps,
        )
        .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).map_err(|e| e.to_string())?;
        write_output(args.out.as_deref(), &buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    let file = load_file_config(args.common.config.as_deref())?;
    let resolved = args.common.resolve(&file)?;
    if resolved.method != Method::Daha {
        return Err("sweep-c only applies to the damped method (--method daha)".into());
    }
    if !(args.c_step.is_finite() && args.c_step > 0.0) || args.c_max < args.c_min {
        return Err("invalid c range".into());
    }
    let mut out = String::from("c,max_iterations,converged,seeds\n");
    let mut c = args.c_min;
    while c <= args.c_max + 1e-12 {
        let mut params = resolved.params.clone();
        params.c = c;
        let config = ExperimentConfig {
            problem: resolved.problem,
            method: Method::Daha,
            params,
            seeds: args.seeds,
            base_seed: args.base_seed,
        };
        let mut max_iter = 0usize;
        let mut converged = 0usize;
        for l in 0..config.seeds {
            let seed = config.base_seed.wrapping_add(l as u64);
            let rec = packing::harness::run_seed(&config, seed).map_err(|e| e.to_string())?;
            max_iter = max_iter.max(rec.iterations);
            if rec.status == Status::Converged {
                converged += 1;
            }
        }
        out.push_str(&format!("{c},{max_iter},{converged},{}\n", config.seeds));
        c += args.c_step;
    }
    write_output(args.out.as_deref(), out.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Stability(args) => cmd_stability(args),
        Command::SweepC(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
