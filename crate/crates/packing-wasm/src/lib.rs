//! wasm-bindgen bindings for the browser demo: a stepwise packing solver,
//! the 1D two-sphere stability analyzer, and two-sphere trajectories for
//! phase portraits.

use wasm_bindgen::prelude::*;

use packing::constraints::ConstraintForm;
use packing::geom::PackingProblem;
use packing::harness::{overlap_proportion, sample_initial_configuration};
use packing::potential::potential_value;
use packing::solvers::{Method, SolverParams, SolverRun, Status};
use packing::stability::{analyze, integrate_two_sphere, OdeSystemId};

fn parse_method(s: &str) -> Result<Method, JsError> {
    match s {
        "aha" => Ok(Method::Aha),
        "daha" => Ok(Method::Daha),
        "nap" => Ok(Method::Nap),
        "nav" => Ok(Method::Nav),
        _ => Err(JsError::new("method must be one of aha, daha, nap, nav")),
    }
}

fn parse_form(s: &str) -> Result<ConstraintForm, JsError> {
    match s {
        "ns" => Ok(ConstraintForm::NonSmooth),
        "s" => Ok(ConstraintForm::Smooth),
        _ => Err(JsError::new("form must be ns or s")),
    }
}

fn parse_system(s: &str) -> Result<OdeSystemId, JsError> {
    match s {
        "aha-ns" => Ok(OdeSystemId::AHA_NS),
        "aha-s" => Ok(OdeSystemId::AHA_S),
        "daha-ns" => Ok(OdeSystemId::DAHA_NS),
        "daha-s" => Ok(OdeSystemId::DAHA_S),
        _ => Err(JsError::new(
            "system must be one of aha-ns, aha-s, daha-ns, daha-s",
        )),
    }
}

/// A planar packing run the page can advance a few iterations at a time and
/// draw between calls.
#[wasm_bindgen]
pub struct DemoSolver {
    run: SolverRun,
    status: Option<Status>,
}

#[wasm_bindgen]
impl DemoSolver {
    /// Gaussian initial configuration of `n` unit-diameter spheres in the
    /// plane; `method` is one of `aha`, `daha`, `nap`, `nav` and `form` is
    /// `ns` or `s`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        method: &str,
        form: &str,
        n: usize,
        alpha: f64,
        beta: f64,
        c: f64,
        seed: u64,
    ) -> Result<DemoSolver, JsError> {
        let method = parse_method(method)?;
        let problem =
            PackingProblem::new(n, 2, 1.0).map_err(|e| JsError::new(&e.to_string()))?;
        let mut params = SolverParams::new(alpha, beta, parse_form(form)?);
        params.c = c;
        params.fallback_seed = seed;
        params
            .validate(method)
            .map_err(|e| JsError::new(&e.to_string()))?;
        let x0 = sample_initial_configuration(seed, &problem);
        let run = SolverRun::new(method, x0, params, problem)
            .map_err(|e| JsError::new(&e.to_string()))?;
        Ok(DemoSolver { run, status: None })
    }

    /// Advance up to `k` outer iterations; returns false once the run has
    /// terminated.
    pub fn advance(&mut self, k: usize) -> bool {
        for _ in 0..k {
            self.status = self.run.step();
            if self.status.is_some() {
                return false;
            }
        }
        true
    }

    /// Flattened sphere centers `[x0, y0, x1, y1, ...]`.
    pub fn positions(&self) -> Vec<f64> {
        self.run.state.x.as_slice().to_vec()
    }

    pub fn iterations(&self) -> usize {
        self.run.outer_iterations()
    }

    pub fn rel_error(&self) -> f64 {
        self.run.rel_errors.last().copied().unwrap_or(f64::NAN)
    }

    pub fn potential(&self) -> f64 {
        potential_value(&self.run.state.x)
    }

    pub fn overlap(&self) -> f64 {
        overlap_proportion(&self.run.state.x, &self.run.problem).unwrap_or(f64::NAN)
    }

    pub fn status(&self) -> String {
        match self.status {
            None => "running".into(),
            Some(Status::Converged) => "converged".into(),
            Some(Status::BudgetExhausted) => "budget_exhausted".into(),
            Some(Status::Diverged) => "diverged".into(),
        }
    }
}

/// Classify a 1D two-sphere system; returns a JSON string with eigenvalues,
/// classification and the sufficient-condition verdict.
#[wasm_bindgen]
pub fn analyze_system(
    system: &str,
    alpha: f64,
    beta: f64,
    c: f64,
    d: f64,
) -> Result<String, JsError> {
    let report = analyze(parse_system(system)?, alpha, beta, c, d);
    let eigs: Vec<serde_json::Value> = report
        .eigenvalues
        .iter()
        .map(|e| serde_json::json!({"re": e.re, "im": e.im}))
        .collect();
    Ok(serde_json::json!({
        "eigenvalues": eigs,
        "classification": format!("{:?}", report.classification),
        "sufficient_condition_holds": report.sufficient_condition_holds,
    })
    .to_string())
}

/// Integrate a 1D two-sphere system and return the trajectory flattened as
/// `[t, x, lambda, t, x, lambda, ...]` for phase-portrait drawing.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn two_sphere_trajectory(
    system: &str,
    alpha: f64,
    beta: f64,
    c: f64,
    d: f64,
    x0: f64,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    let traj = integrate_two_sphere(parse_system(system)?, alpha, beta, c, d, x0, 0.0, dt, steps)
        .map_err(|e| JsError::new(&e.to_string()))?;
    let mut out = Vec::with_capacity(3 * traj.len());
    for i in 0..traj.len() {
        out.push(traj.t[i]);
        out.push(traj.x[i]);
        out.push(traj.lambda[i]);
    }
    Ok(out)
}
