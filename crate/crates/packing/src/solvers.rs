//! The four iterative packing algorithms (AHA, DAHA, NAP, NAV), their
//! stopping criteria and a uniform driver producing traces.
//!
//! All methods share the multiplier projection `max{0, .}` and are
//! semi-implicit: multiplier updates are evaluated at the new positions.

use serde::{Deserialize, Serialize};

use crate::constraints::{
    constraint_gradient, fallback_unit_direction, ConstraintForm, COINCIDENCE_THRESHOLD,
};
use crate::geom::{relative_error, Configuration, MultiplierSet, PackingProblem, NORM_FLOOR};
use crate::potential::potential_gradient;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Aha,
    Daha,
    Nap,
    Nav,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Aha => "aha",
            Method::Daha => "daha",
            Method::Nap => "nap",
            Method::Nav => "nav",
        };
        f.write_str(s)
    }
}

/// Numerical parameters shared by all methods. `c` and `gamma` only act on
/// DAHA, `tau` and the inner-loop controls only on the nested methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub alpha: f64,
    pub beta: f64,
    /// Damping coefficient (DAHA). `c = 2` reduces DAHA to a one-step method.
    pub c: f64,
    /// Cross-term weight (DAHA). `None` defaults to `sqrt(alpha * beta)`,
    /// which recovers the original damped scheme exactly.
    pub gamma: Option<f64>,
    /// Euler time step (NAV).
    pub tau: f64,
    pub form: ConstraintForm,
    /// Outer-loop tolerance on the relative error of consecutive iterates.
    pub epsilon: f64,
    /// Inner-loop tolerance (NAP/NAV).
    pub epsilon_inner: f64,
    /// Maximum inner-loop iterations per outer iteration (NAP/NAV).
    pub inner_cap: usize,
    /// Outer-iteration budget.
    pub max_outer: usize,
    /// Seed for the deterministic unit-direction fallback used by the
    /// non-smooth gradient when a pair is coincident.
    pub fallback_seed: u64,
}

impl SolverParams {
    pub fn new(alpha: f64, beta: f64, form: ConstraintForm) -> Self {
        Self {
            alpha,
            beta,
            c: 2.0,
            gamma: None,
            tau: 0.1,
            form,
            epsilon: 1e-6,
            epsilon_inner: 1e-9,
            inner_cap: 10,
            max_outer: 1_000_000,
            fallback_seed: 0,
        }
    }

    /// Effective cross-term weight.
    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| (self.alpha * self.beta).sqrt())
    }

    pub fn validate(&self, method: Method) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha) || !positive(self.beta) {
            return Err(Error::InvalidParameter("alpha and beta must be positive".into()));
        }
        if !positive(self.epsilon) || !positive(self.epsilon_inner) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.c < 0.0 {
            return Err(Error::InvalidParameter("c must be non-negative".into()));
        }
        if let Some(g) = self.gamma {
            if g < 0.0 {
                return Err(Error::InvalidParameter("gamma must be non-negative".into()));
            }
        }
        if matches!(method, Method::Nap | Method::Nav) && self.inner_cap < 1 {
            return Err(Error::InvalidParameter("inner_cap must be >= 1".into()));
        }
        if method == Method::Nav {
            if !positive(self.tau) {
                return Err(Error::InvalidParameter("tau must be positive for NAV".into()));
            }
            if self.form != ConstraintForm::NonSmooth {
                return Err(Error::InvalidParameter(
                    "NAV supports only the non-smooth constraint form".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Full iterate of a solver run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Configuration,
    /// Previous configuration (DAHA history); equals `x` at iteration 0.
    pub x_prev: Configuration,
    /// Velocities (NAV); zero otherwise.
    pub v: Configuration,
    pub lambdas: MultiplierSet,
    pub iter: usize,
}

impl SolverState {
    pub fn initial(x0: Configuration, problem: &PackingProblem) -> Self {
        let n = problem.n;
        let dim = problem.dim;
        Self {
            x_prev: x0.clone(),
            v: Configuration::zeros(n, dim),
            lambdas: MultiplierSet::zeros(problem.pair_count()),
            x: x0,
            iter: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    BudgetExhausted,
    Diverged,
}

/// Residuals of the KKT system at a state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KktResidual {
    /// `|grad W(X) + sum lambda grad phi(X)|`
    pub stationarity: f64,
    /// `max |lambda_{kl} phi_{kl}(X)|`
    pub complementarity: f64,
    /// `max(0, max phi_{kl}(X))`
    pub feasibility: f64,
}

/// Record of one solver run.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    /// Relative error after each outer iteration.
    pub rel_errors: Vec<f64>,
    /// Inner iterations per outer step (empty for AHA/DAHA).
    pub inner_counts: Vec<usize>,
    /// Iterations in inner-step accounting: one per inner step for NAP/NAV,
    /// one per step for AHA/DAHA.
    pub total_iterations: usize,
    /// Outer iterations only.
    pub outer_iterations: usize,
    pub status: Status,
    pub final_state: SolverState,
    pub kkt: KktResidual,
}

fn mix_seed(base: u64, iter: usize, pair: usize) -> u64 {
    base ^ (iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (pair as u64)
}

/// Accumulate `sum lambda grad phi` (into `lg`) and optionally
/// `sum phi lambda grad phi` (into `phi_lg`) over all pairs at `x`.
///
/// Pairs with a zero multiplier contribute nothing to either sum and are
/// skipped without computing the distance.
#[allow(clippy::too_many_arguments)]
fn accumulate_multiplier_forces(
    form: ConstraintForm,
    x: &Configuration,
    lambdas: &MultiplierSet,
    d: f64,
    seed: u64,
    iter: usize,
    lg: &mut [f64],
    mut phi_lg: Option<&mut [f64]>,
) {
    let n = x.n();
    let b = x.dim();
    let xs = x.as_slice();
    let lam = lambdas.as_slice();
    let mut diff = [0.0f64; 8];
    debug_assert!(b <= 8);
    let mut lin = 0usize;
    for k in 0..n {
        let ko = k * b;
        for l in (k + 1)..n {
            let l_val = lam[lin];
            if l_val != 0.0 {
                let lo = l * b;
                let mut dist2 = 0.0;
                for c in 0..b {
                    let dv = xs[ko + c] - xs[lo + c];
                    diff[c] = dv;
                    dist2 += dv * dv;
                }
                let dist = dist2.sqrt();
                // g_k per form; phi for the cross term.
                match form {
                    ConstraintForm::Smooth => {
                        let phi = d * d - dist2;
                        for c in 0..b {
                            let g = -2.0 * diff[c];
                            lg[ko + c] += l_val * g;
                            lg[lo + c] -= l_val * g;
                            if let Some(out) = phi_lg.as_deref_mut() {
                                out[ko + c] += phi * l_val * g;
                                out[lo + c] -= phi * l_val * g;
                            }
                        }
                    }
                    ConstraintForm::NonSmooth => {
                        let phi = d - dist;
                        if dist <= COINCIDENCE_THRESHOLD {
                            let u = fallback_unit_direction(mix_seed(seed, iter, lin), b);
                            for (dc, uc) in diff.iter_mut().zip(&u) {
                                *dc = -uc;
                            }
                        } else {
                            for dc in diff.iter_mut().take(b) {
                                *dc /= dist;
                            }
                        }
                        for c in 0..b {
                            let g = -diff[c];
                            lg[ko + c] += l_val * g;
                            lg[lo + c] -= l_val * g;
                            if let Some(out) = phi_lg.as_deref_mut() {
                                out[ko + c] += phi * l_val * g;
                                out[lo + c] -= phi * l_val * g;
                            }
                        }
                    }
                }
            }
            lin += 1;
        }
    }
}

/// Projected multiplier update `lambda = max{0, lambda + beta phi(x)}` over
/// all pairs, evaluated at (new) positions `x`.
pub fn update_multipliers(
    form: ConstraintForm,
    x: &Configuration,
    lambdas: &mut MultiplierSet,
    d: f64,
    beta: f64,
) {
    let n = x.n();
    let b = x.dim();
    let xs = x.as_slice();
    let lam = lambdas.as_mut_slice();
    let mut lin = 0usize;
    for k in 0..n {
        let ko = k * b;
        for l in (k + 1)..n {
            let lo = l * b;
            let mut dist2 = 0.0;
            for c in 0..b {
                let dv = xs[ko + c] - xs[lo + c];
                dist2 += dv * dv;
            }
            let phi = match form {
                ConstraintForm::Smooth => d * d - dist2,
                ConstraintForm::NonSmooth => d - dist2.sqrt(),
            };
            let t = lam[lin] + beta * phi;
            lam[lin] = if t > 0.0 { t } else { 0.0 };
            lin += 1;
        }
    }
}

/// One Arrow-Hurwicz step:
/// `X^{n+1} = X^n - alpha [grad W + sum lambda grad phi]` followed by the
/// projected multiplier update at the new positions.
pub fn aha_step(state: &mut SolverState, params: &SolverParams, problem: &PackingProblem) {
    let d = problem.diameter;
    let mut force = potential_gradient(&state.x);
    accumulate_multiplier_forces(
        params.form,
        &state.x,
        &state.lambdas,
        d,
        params.fallback_seed,
        state.iter,
        force.as_mut_slice(),
        None,
    );
    let mut x_new = state.x.clone();
    for (xn, f) in x_new.as_mut_slice().iter_mut().zip(force.as_slice()) {
        *xn -= params.alpha * f;
    }
    update_multipliers(params.form, &x_new, &mut state.lambdas, d, params.beta);
    state.x_prev = std::mem::replace(&mut state.x, x_new);
    state.iter += 1;
}

/// One damped Arrow-Hurwicz step (two-step scheme with damping `c` and
/// cross-term weight `gamma`; `gamma^2 = alpha beta` recovers the original
/// damped scheme, `c = 2` removes the dependence on `X^{n-1}`).
pub fn daha_step(state: &mut SolverState, params: &SolverParams, problem: &PackingProblem) {
    let d = problem.diameter;
    let n = problem.n;
    let b = problem.dim;
    let mut lg = vec![0.0; n * b];
    let mut phi_lg = vec![0.0; n * b];
    accumulate_multiplier_forces(
        params.form,
        &state.x,
        &state.lambdas,
        d,
        params.fallback_seed,
        state.iter,
        &mut lg,
        Some(&mut phi_lg),
    );
    let grad_w = potential_gradient(&state.x);
    let denom = 1.0 + params.c / 2.0;
    let a2 = params.alpha * params.alpha / denom;
    let g2 = params.gamma() * params.gamma() / denom;
    let prev_coeff = (1.0 - params.c / 2.0) / denom;
    let cur_coeff = 2.0 / denom;

    let mut x_new = Configuration::zeros(n, b);
    {
        let out = x_new.as_mut_slice();
        let xc = state.x.as_slice();
        let xp = state.x_prev.as_slice();
        let gw = grad_w.as_slice();
        for i in 0..n * b {
            out[i] = cur_coeff * xc[i] - prev_coeff * xp[i] - a2 * (gw[i] + lg[i]) - g2 * phi_lg[i];
        }
    }
    update_multipliers(params.form, &x_new, &mut state.lambdas, d, params.beta);
    state.x_prev = std::mem::replace(&mut state.x, x_new);
    state.iter += 1;
}

/// Frozen linearization data at an outer-loop reference configuration:
/// per-pair values `phi(X^p)` and gradients `grad phi(X^p)`.
struct Linearization {
    phi_ref: Vec<f64>,
    /// `g_k` blocks, `pair_count * dim`; `g_l = -g_k`.
    grads: Vec<f64>,
}

impl Linearization {
    fn at(form: ConstraintForm, x_ref: &Configuration, d: f64, seed: u64, iter: usize) -> Self {
        let n = x_ref.n();
        let b = x_ref.dim();
        let pair_count = n * (n - 1) / 2;
        let mut phi_ref = vec![0.0; pair_count];
        let mut grads = vec![0.0; pair_count * b];
        let mut lin = 0usize;
        for k in 0..n {
            for l in (k + 1)..n {
                phi_ref[lin] = form.value_from_distance(x_ref.pair_distance(k, l), d);
                let g = constraint_gradient(form, x_ref, k, l, d, mix_seed(seed, iter, lin));
                grads[lin * b..(lin + 1) * b].copy_from_slice(&g.g_k);
                lin += 1;
            }
        }
        Self { phi_ref, grads }
    }

    /// `phi^p(X) = phi(X^p) + g . (X - X^p)` for pair `lin`.
    fn value_at(&self, lin: usize, x: &Configuration, x_ref: &Configuration, k: usize, l: usize) -> f64 {
        let b = x.dim();
        let g = &self.grads[lin * b..(lin + 1) * b];
        let mut corr = 0.0;
        for (c, gc) in g.iter().enumerate() {
            let dk = x.point(k)[c] - x_ref.point(k)[c];
            let dl = x.point(l)[c] - x_ref.point(l)[c];
            corr += gc * (dk - dl);
        }
        self.phi_ref[lin] + corr
    }
}

/// Driver for a single solver run; steps one outer iteration at a time so
/// callers (CLI, benchmarks, the browser demo) can observe intermediates.
pub struct SolverRun {
    pub method: Method,
    pub params: SolverParams,
    pub problem: PackingProblem,
    pub state: SolverState,
    pub rel_errors: Vec<f64>,
    pub inner_counts: Vec<usize>,
    pub total_iterations: usize,
    status: Option<Status>,
}

impl SolverRun {
    pub fn new(
        method: Method,
        x0: Configuration,
        params: SolverParams,
        problem: PackingProblem,
    ) -> Result<Self> {
        params.validate(method)?;
        if x0.n() != problem.n || x0.dim() != problem.dim {
            return Err(Error::ShapeMismatch {
                expected: problem.n * problem.dim,
                got: x0.n() * x0.dim(),
            });
        }
        Ok(Self {
            method,
            params,
            problem,
            state: SolverState::initial(x0, &problem),
            rel_errors: Vec::new(),
            inner_counts: Vec::new(),
            total_iterations: 0,
            status: None,
        })
    }

    pub fn status(&self) -> Option<Status> {
        self.status
    }

    pub fn outer_iterations(&self) -> usize {
        self.rel_errors.len()
    }

    /// Perform one outer iteration. Returns the final status once the run
    /// has terminated, `None` while it is still going.
    pub fn step(&mut self) -> Option<Status> {
        if let Some(s) = self.status {
            return Some(s);
        }
        if self.outer_iterations() >= self.params.max_outer {
            self.status = Some(Status::BudgetExhausted);
            return self.status;
        }
        let rel = match self.method {
            Method::Aha | Method::Daha => {
                if self.method == Method::Aha {
                    aha_step(&mut self.state, &self.params, &self.problem);
                } else {
                    daha_step(&mut self.state, &self.params, &self.problem);
                }
                self.total_iterations += 1;
                relative_error(&self.state.x, &self.state.x_prev)
            }
            Method::Nap => self.nap_outer(),
            Method::Nav => self.nav_outer(),
        };
        let rel = match rel {
            Ok(r) if r.is_finite() && self.state.x.all_finite() && self.state.lambdas.all_finite() => r,
            _ => {
                self.rel_errors.push(f64::NAN);
                self.status = Some(Status::Diverged);
                return self.status;
            }
        };
        self.rel_errors.push(rel);
        if rel < self.params.epsilon {
            self.status = Some(Status::Converged);
        } else if self.outer_iterations() >= self.params.max_outer {
            self.status = Some(Status::BudgetExhausted);
        }
        self.status
    }

    /// Inner loop of the nested algorithm for the positions: Arrow-Hurwicz
    /// iterations against the constraints linearized at `X^p`.
    fn nap_outer(&mut self) -> Result<f64> {
        let d = self.problem.diameter;
        let n = self.problem.n;
        let b = self.problem.dim;
        let x_ref = self.state.x.clone();
        let linz = Linearization::at(
            self.params.form,
            &x_ref,
            d,
            self.params.fallback_seed,
            self.state.iter,
        );
        let mut x = x_ref.clone();
        let mut inner = 0usize;
        for _ in 0..self.params.inner_cap {
            let mut force = potential_gradient(&x);
            {
                let fs = force.as_mut_slice();
                let lam = self.state.lambdas.as_slice();
                let mut lin = 0usize;
                for k in 0..n {
                    for l in (k + 1)..n {
                        let lv = lam[lin];
                        if lv != 0.0 {
                            let g = &linz.grads[lin * b..(lin + 1) * b];
                            for c in 0..b {
                                fs[k * b + c] += lv * g[c];
                                fs[l * b + c] -= lv * g[c];
                            }
                        }
                        lin += 1;
                    }
                }
            }
            let mut x_next = x.clone();
            for (xn, f) in x_next.as_mut_slice().iter_mut().zip(force.as_slice()) {
                *xn -= self.params.alpha * f;
            }
            // Projected multiplier step on the linearized constraints at the
            // new positions.
            {
                let lam = self.state.lambdas.as_mut_slice();
                let mut lin = 0usize;
                for k in 0..n {
                    for l in (k + 1)..n {
                        let phi = linz.value_at(lin, &x_next, &x_ref, k, l);
                        let t = lam[lin] + self.params.beta * phi;
                        lam[lin] = if t > 0.0 { t } else { 0.0 };
                        lin += 1;
                    }
                }
            }
            inner += 1;
            self.total_iterations += 1;
            if !x_next.all_finite() {
                self.inner_counts.push(inner);
                self.state.x = x_next;
                self.state.iter += 1;
                return Ok(f64::NAN);
            }
            let rel_inner = relative_error(&x_next, &x)?;
            x = x_next;
            if rel_inner < self.params.epsilon_inner {
                break;
            }
        }
        self.inner_counts.push(inner);
        self.state.x_prev = std::mem::replace(&mut self.state.x, x);
        self.state.iter += 1;
        relative_error(&self.state.x, &x_ref)
    }

    /// Inner loop of the nested algorithm for the velocities, followed by
    /// the Euler position update `X^{p+1} = X^p + tau V^{p+1}`.
    fn nav_outer(&mut self) -> Result<f64> {
        let d = self.problem.diameter;
        let n = self.problem.n;
        let b = self.problem.dim;
        let tau = self.params.tau;
        let x_ref = self.state.x.clone();
        let x_norm = x_ref.norm();
        if x_norm <= NORM_FLOOR {
            return Err(Error::DegenerateNorm { floor: NORM_FLOOR });
        }
        let linz = Linearization::at(
            self.params.form,
            &x_ref,
            d,
            self.params.fallback_seed,
            self.state.iter,
        );
        let grad_w = potential_gradient(&x_ref);
        let mut v = self.state.v.clone();
        let mut inner = 0usize;
        for _ in 0..self.params.inner_cap {
            // V^{n+1} = V^n - alpha (V^n + grad W(X^p) + tau sum mu grad phi^p)
            let mut force = grad_w.clone();
            {
                let fs = force.as_mut_slice();
                let mus = self.state.lambdas.as_slice();
                let mut lin = 0usize;
                for k in 0..n {
                    for l in (k + 1)..n {
                        let mv = mus[lin];
                        if mv != 0.0 {
                            let g = &linz.grads[lin * b..(lin + 1) * b];
                            for c in 0..b {
                                fs[k * b + c] += tau * mv * g[c];
                                fs[l * b + c] -= tau * mv * g[c];
                            }
                        }
                        lin += 1;
                    }
                }
            }
            let mut v_next = v.clone();
            {
                let vn = v_next.as_mut_slice();
                let fv = force.as_slice();
                let vc = v.as_slice();
                for i in 0..n * b {
                    vn[i] = vc[i] - self.params.alpha * (vc[i] + fv[i]);
                }
            }
            // mu^{n+1} = max{0, mu + beta phi^p(X^p + tau V^{n+1})}
            // with phi^p(X^p + tau V) = phi(X^p) + tau g . V.
            {
                let mus = self.state.lambdas.as_mut_slice();
                let vs = v_next.as_slice();
                let mut lin = 0usize;
                for k in 0..n {
                    for l in (k + 1)..n {
                        let g = &linz.grads[lin * b..(lin + 1) * b];
                        let mut gv = 0.0;
                        for c in 0..b {
                            gv += g[c] * (vs[k * b + c] - vs[l * b + c]);
                        }
                        let phi = linz.phi_ref[lin] + tau * gv;
                        let t = mus[lin] + self.params.beta * phi;
                        mus[lin] = if t > 0.0 { t } else { 0.0 };
                        lin += 1;
                    }
                }
            }
            inner += 1;
            self.total_iterations += 1;
            if !v_next.all_finite() {
                self.inner_counts.push(inner);
                self.state.v = v_next;
                self.state.iter += 1;
                return Ok(f64::NAN);
            }
            // Velocity stopping test |dV| / |X^p| < eps_inner / tau,
            // equivalent to the position test on the Euler-updated iterates.
            let dv = v_next
                .as_slice()
                .iter()
                .zip(v.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            v = v_next;
            if dv / x_norm < self.params.epsilon_inner / tau {
                break;
            }
        }
        self.inner_counts.push(inner);
        let mut x_new = x_ref.clone();
        for (xn, vv) in x_new.as_mut_slice().iter_mut().zip(v.as_slice()) {
            *xn += tau * vv;
        }
        self.state.v = v;
        self.state.x_prev = std::mem::replace(&mut self.state.x, x_new);
        self.state.iter += 1;
        relative_error(&self.state.x, &x_ref)
    }

    /// Run to termination.
    pub fn run(mut self) -> SolverTrace {
        let status = loop {
            if let Some(s) = self.step() {
                break s;
            }
        };
        if self.method == Method::Nav {
            // Report the equivalent position multipliers lambda = tau mu so
            // the KKT residual is method-agnostic.
            for m in self.state.lambdas.as_mut_slice() {
                *m *= self.params.tau;
            }
        }
        let kkt = kkt_residual(&self.state, &self.params, &self.problem);
        SolverTrace {
            rel_errors: self.rel_errors,
            inner_counts: self.inner_counts,
            total_iterations: self.total_iterations,
            outer_iterations: self.state.iter,
            status,
            final_state: self.state,
            kkt,
        }
    }
}

/// Initialize with zero multipliers and velocities and iterate until the
/// outer stopping criterion holds or the budget is exhausted.
pub fn run_solver(
    method: Method,
    x0: Configuration,
    params: SolverParams,
    problem: PackingProblem,
) -> Result<SolverTrace> {
    Ok(SolverRun::new(method, x0, params, problem)?.run())
}

/// KKT residuals of a state: stationarity, complementarity and feasibility.
pub fn kkt_residual(
    state: &SolverState,
    params: &SolverParams,
    problem: &PackingProblem,
) -> KktResidual {
    let d = problem.diameter;
    let mut g = potential_gradient(&state.x);
    accumulate_multiplier_forces(
        params.form,
        &state.x,
        &state.lambdas,
        d,
        params.fallback_seed,
        state.iter,
        g.as_mut_slice(),
        None,
    );
    let stationarity = g.norm();
    let mut complementarity: f64 = 0.0;
    let mut feasibility: f64 = 0.0;
    let n = state.x.n();
    let lam = state.lambdas.as_slice();
    let mut lin = 0usize;
    for k in 0..n {
        for l in (k + 1)..n {
            let phi = params
                .form
                .value_from_distance(state.x.pair_distance(k, l), d);
            complementarity = complementarity.max((lam[lin] * phi).abs());
            feasibility = feasibility.max(phi);
            lin += 1;
        }
    }
    KktResidual {
        stationarity,
        complementarity,
        feasibility: feasibility.max(0.0),
    }
}
