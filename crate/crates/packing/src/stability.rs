//! Linear stability analysis of the two-sphere systems in one dimension:
//! Jacobians of the four associated ODE systems (one sphere fixed at the
//! origin), eigenvalue classification of the contact equilibria, sufficient
//! stability conditions for the damped systems, and semi-implicit
//! integration of the nonlinear systems.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintForm;
use crate::{Error, Result};

/// First-order (AHA) or damped second-order (DAHA) dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMethod {
    Aha,
    Daha,
}

/// One of the four analyzed two-sphere ODE systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdeSystemId {
    pub method: StabilityMethod,
    pub form: ConstraintForm,
}

impl OdeSystemId {
    pub const AHA_NS: Self = Self {
        method: StabilityMethod::Aha,
        form: ConstraintForm::NonSmooth,
    };
    pub const AHA_S: Self = Self {
        method: StabilityMethod::Aha,
        form: ConstraintForm::Smooth,
    };
    pub const DAHA_NS: Self = Self {
        method: StabilityMethod::Daha,
        form: ConstraintForm::NonSmooth,
    };
    pub const DAHA_S: Self = Self {
        method: StabilityMethod::Daha,
        form: ConstraintForm::Smooth,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    AsymptoticallyStable,
    Unstable,
    Center,
    Inconclusive,
}

/// Characteristic polynomial coefficients (monic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CharCoeffs {
    /// `lambda^2 + trace-term lambda + det`: stored as (c1, c0).
    Quadratic { c1: f64, c0: f64 },
    /// `lambda^3 + c2 lambda^2 + c1 lambda + c0`.
    Cubic { c2: f64, c1: f64, c0: f64 },
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub jacobian: DMatrix<f64>,
    pub char_coeffs: CharCoeffs,
    pub eigenvalues: Vec<Complex64>,
    pub classification: Classification,
    /// Verdict of the closed-form sufficient condition; `None` for the AHA
    /// systems, which have no such condition.
    pub sufficient_condition_holds: Option<bool>,
}

/// Default classification tolerance on eigenvalue real parts.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Jacobian of the linearized system at the contact equilibrium.
pub fn jacobian_1d(id: OdeSystemId, alpha: f64, beta: f64, c: f64, d: f64) -> DMatrix<f64> {
    match (id.method, id.form) {
        (StabilityMethod::Aha, ConstraintForm::NonSmooth) => {
            DMatrix::from_row_slice(2, 2, &[-alpha, alpha, -beta, 0.0])
        }
        (StabilityMethod::Aha, ConstraintForm::Smooth) => {
            DMatrix::from_row_slice(2, 2, &[0.0, 2.0 * d * alpha, -2.0 * d * beta, 0.0])
        }
        (StabilityMethod::Daha, ConstraintForm::NonSmooth) => DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                -alpha * alpha - alpha * beta * d,
                -c,
                alpha * alpha,
                -beta,
                0.0,
                0.0,
            ],
        ),
        (StabilityMethod::Daha, ConstraintForm::Smooth) => DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                1.0,
                0.0,
                -2.0 * alpha * beta * d * d,
                -c,
                2.0 * d * alpha * alpha,
                -2.0 * d * beta,
                0.0,
                0.0,
            ],
        ),
    }
}

/// Monic characteristic polynomial coefficients of the Jacobian, in closed
/// form per system.
pub fn char_coeffs(id: OdeSystemId, alpha: f64, beta: f64, c: f64, d: f64) -> CharCoeffs {
    match (id.method, id.form) {
        (StabilityMethod::Aha, ConstraintForm::NonSmooth) => CharCoeffs::Quadratic {
            c1: alpha,
            c0: alpha * beta,
        },
        (StabilityMethod::Aha, ConstraintForm::Smooth) => CharCoeffs::Quadratic {
            c1: 0.0,
            c0: 4.0 * d * d * alpha * beta,
        },
        (StabilityMethod::Daha, ConstraintForm::NonSmooth) => CharCoeffs::Cubic {
            c2: c,
            c1: alpha * alpha + alpha * beta * d,
            c0: beta * alpha * alpha,
        },
        (StabilityMethod::Daha, ConstraintForm::Smooth) => CharCoeffs::Cubic {
            c2: c,
            c1: 2.0 * alpha * beta * d * d,
            c0: 4.0 * d * d * beta * alpha * alpha,
        },
    }
}

/// Eigenvalue-based classification of an equilibrium of `xdot = J x`.
pub fn classify_equilibrium(jacobian: &DMatrix<f64>, tol: f64) -> Classification {
    let eig = jacobian.clone().complex_eigenvalues();
    classify_eigenvalues(eig.as_slice(), tol)
}

pub fn classify_eigenvalues(eig: &[Complex64], tol: f64) -> Classification {
    if eig.iter().all(|z| z.re < -tol) {
        Classification::AsymptoticallyStable
    } else if eig.iter().any(|z| z.re > tol) {
        Classification::Unstable
    } else if eig.iter().all(|z| z.re.abs() <= tol) && eig.iter().any(|z| z.im.abs() > tol) {
        Classification::Center
    } else {
        Classification::Inconclusive
    }
}

/// Closed-form sufficient conditions for asymptotic stability of the damped
/// systems: `(alpha + beta d) c - beta alpha > 0` (non-smooth) and
/// `c - 2 alpha > 0` (smooth). Rejected for AHA systems.
pub fn sufficient_condition(id: OdeSystemId, alpha: f64, beta: f64, c: f64, d: f64) -> Result<bool> {
    match (id.method, id.form) {
        (StabilityMethod::Daha, ConstraintForm::NonSmooth) => {
            Ok((alpha + beta * d) * c - beta * alpha > 0.0)
        }
        (StabilityMethod::Daha, ConstraintForm::Smooth) => Ok(c - 2.0 * alpha > 0.0),
        (StabilityMethod::Aha, _) => Err(Error::InvalidParameter(
            "sufficient conditions are defined only for the damped systems".into(),
        )),
    }
}

/// Full report: Jacobian, characteristic coefficients, eigenvalues,
/// classification and (for DAHA) the sufficient-condition verdict.
pub fn analyze(id: OdeSystemId, alpha: f64, beta: f64, c: f64, d: f64) -> StabilityReport {
    let jacobian = jacobian_1d(id, alpha, beta, c, d);
    let eigenvalues: Vec<Complex64> = jacobian
        .clone()
        .complex_eigenvalues()
        .as_slice()
        .to_vec();
    let classification = classify_eigenvalues(&eigenvalues, CLASSIFY_TOL);
    let sufficient_condition_holds = match id.method {
        StabilityMethod::Daha => Some(sufficient_condition(id, alpha, beta, c, d).unwrap()),
        StabilityMethod::Aha => None,
    };
    StabilityReport {
        jacobian,
        char_coeffs: char_coeffs(id, alpha, beta, c, d),
        eigenvalues,
        classification,
        sufficient_condition_holds,
    }
}

/// Largest eigenvalue real part (spectral abscissa) of a Jacobian.
pub fn spectral_abscissa(jacobian: &DMatrix<f64>) -> f64 {
    jacobian
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Trajectory of a two-sphere integration: time, position, velocity (DAHA
/// only) and multiplier.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub xdot: Option<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV export with columns `t,x[,xdot],lambda`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let ctx = "writing trajectory csv".to_string();
        let io_err = |e: csv::Error| Error::Io {
            context: ctx.clone(),
            source: std::io::Error::other(e),
        };
        if self.xdot.is_some() {
            wtr.write_record(["t", "x", "xdot", "lambda"]).map_err(io_err)?;
        } else {
            wtr.write_record(["t", "x", "lambda"]).map_err(io_err)?;
        }
        for i in 0..self.len() {
            let mut rec = vec![self.t[i].to_string(), self.x[i].to_string()];
            if let Some(v) = &self.xdot {
                rec.push(v[i].to_string());
            }
            rec.push(self.lambda[i].to_string());
            wtr.write_record(&rec).map_err(io_err)?;
        }
        wtr.flush().map_err(|e| Error::Io {
            context: ctx,
            source: e,
        })?;
        Ok(())
    }
}

fn constraint_1d(form: ConstraintForm, x: f64, d: f64) -> f64 {
    match form {
        ConstraintForm::NonSmooth => d - x.abs(),
        ConstraintForm::Smooth => d * d - x * x,
    }
}

/// Conditional multiplier law shared by all systems: hold at zero while the
/// constraint is strictly satisfied, otherwise step by `beta phi` and clamp.
fn multiplier_step(lambda: f64, phi: f64, beta: f64, dt: f64) -> f64 {
    if lambda == 0.0 && phi < 0.0 {
        0.0
    } else {
        (lambda + dt * beta * phi).max(0.0)
    }
}

/// Semi-implicit Euler integration of the chosen nonlinear two-sphere
/// system (positions first, then the multiplier at the new position).
///
/// With `dt = 1` the AHA systems reproduce the discrete algorithm exactly.
#[allow(clippy::too_many_arguments)]
pub fn integrate_two_sphere(
    id: OdeSystemId,
    alpha: f64,
    beta: f64,
    c: f64,
    d: f64,
    x0: f64,
    lambda0: f64,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    if x0 == 0.0 {
        return Err(Error::InvalidParameter("x0 must be nonzero".into()));
    }
    let cap = steps + 1;
    let mut t = Vec::with_capacity(cap);
    let mut xs = Vec::with_capacity(cap);
    let mut ls = Vec::with_capacity(cap);
    let mut vs = if id.method == StabilityMethod::Daha {
        Some(Vec::with_capacity(cap))
    } else {
        None
    };

    let mut x = x0;
    let mut v = 0.0f64;
    let mut lambda = lambda0;
    t.push(0.0);
    xs.push(x);
    ls.push(lambda);
    if let Some(vv) = vs.as_mut() {
        vv.push(v);
    }

    for step in 1..=steps {
        match id.method {
            StabilityMethod::Aha => {
                let xdot = match id.form {
                    ConstraintForm::NonSmooth => -alpha * (1.0 - lambda / x.abs()) * x,
                    ConstraintForm::Smooth => -alpha * (1.0 - 2.0 * lambda) * x,
                };
                x += dt * xdot;
            }
            StabilityMethod::Daha => {
                let accel = match id.form {
                    ConstraintForm::NonSmooth => {
                        -alpha * alpha * (1.0 - lambda / x.abs()) * x
                            + alpha * beta * lambda * (d - x.abs()) * x / x.abs()
                            - c * v
                    }
                    ConstraintForm::Smooth => {
                        -alpha * alpha * (1.0 - 2.0 * lambda) * x
                            + 2.0 * alpha * beta * lambda * (d * d - x * x) * x
                            - c * v
                    }
                };
                v += dt * accel;
                x += dt * v;
            }
        }
        let phi = constraint_1d(id.form, x, d);
        lambda = multiplier_step(lambda, phi, beta, dt);
        if !x.is_finite() || !lambda.is_finite() || !v.is_finite() {
            return Err(Error::Diverged { step });
        }
        t.push(step as f64 * dt);
        xs.push(x);
        ls.push(lambda);
        if let Some(vv) = vs.as_mut() {
            vv.push(v);
        }
    }
    Ok(Trajectory {
        t,
        x: xs,
        xdot: vs,
        lambda: ls,
    })
}

/// Outer-loop sequence of the smooth nested position algorithm in the
/// fixed-sphere frame: `X^{p+1} = (d^2 + (X^p)^2) / (2 X^p)`.
pub fn nap_outer_sequence_1d(x0: f64, d: f64, steps: usize) -> Result<Vec<f64>> {
    if x0 == 0.0 {
        return Err(Error::InvalidParameter("x0 must be nonzero".into()));
    }
    let mut seq = Vec::with_capacity(steps + 1);
    let mut x = x0;
    seq.push(x);
    for _ in 0..steps {
        x = (d * d + x * x) / (2.0 * x);
        seq.push(x);
    }
    Ok(seq)
}

/// One-iteration outer map shared by the non-smooth nested algorithms:
/// `X^{p+1} = d |X^p| / X^p`.
pub fn nonsmooth_outer_map_1d(x: f64, d: f64) -> f64 {
    d * x.abs() / x
}
