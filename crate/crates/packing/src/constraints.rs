//! Non-overlapping constraint functions in smooth and non-smooth form,
//! their gradients and linearizations about a reference configuration.
//!
//! Conventions: for a pair `(k, l)` the constraint is `phi_{kl}(X) <= 0`,
//! positive values mean overlap. Only the blocks `k` and `l` of the full
//! gradient are nonzero and they satisfy `g_l = -g_k`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::Configuration;

/// Pairs closer than this are treated as coincident for the non-smooth
/// gradient, whose unit direction is undefined there.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-12;

/// Form of the non-overlapping constraint function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ConstraintForm {
    /// `phi = d - |X_k - X_l|`
    NonSmooth,
    /// `phi = d^2 - |X_k - X_l|^2`
    Smooth,
}

impl ConstraintForm {
    /// Constraint value as a function of center separation only.
    pub fn value_from_distance(self, dist: f64, d: f64) -> f64 {
        match self {
            ConstraintForm::NonSmooth => d - dist,
            ConstraintForm::Smooth => d * d - dist * dist,
        }
    }
}

/// The nonzero blocks of `grad phi_{kl}`; `g_l` is always `-g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub k: usize,
    pub l: usize,
    pub g_k: Vec<f64>,
}

impl PairGradient {
    pub fn g_l(&self) -> Vec<f64> {
        self.g_k.iter().map(|v| -v).collect()
    }

    /// Dot product of the full (sparse) gradient with a configuration-shaped
    /// vector: `g_k . y_k + g_l . y_l = g_k . (y_k - y_l)`.
    pub fn dot(&self, y: &Configuration) -> f64 {
        let (yk, yl) = (y.point(self.k), y.point(self.l));
        self.g_k
            .iter()
            .zip(yk.iter().zip(yl))
            .map(|(g, (a, b))| g * (a - b))
            .sum()
    }
}

pub fn constraint_value(
    form: ConstraintForm,
    x: &Configuration,
    k: usize,
    l: usize,
    d: f64,
) -> f64 {
    form.value_from_distance(x.pair_distance(k, l), d)
}

/// Deterministic unit direction used for coincident pairs in the non-smooth
/// gradient: a normalized Gaussian draw from a stream keyed by `seed`.
pub fn fallback_unit_direction(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

pub fn constraint_gradient(
    form: ConstraintForm,
    x: &Configuration,
    k: usize,
    l: usize,
    d: f64,
    fallback_seed: u64,
) -> PairGradient {
    let _ = d;
    let (xk, xl) = (x.point(k), x.point(l));
    let diff: Vec<f64> = xk.iter().zip(xl).map(|(a, b)| a - b).collect();
    let dist = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let g_k = match form {
        ConstraintForm::Smooth => diff.iter().map(|v| -2.0 * v).collect(),
        ConstraintForm::NonSmooth => {
            if dist <= COINCIDENCE_THRESHOLD {
                fallback_unit_direction(fallback_seed, x.dim())
                    .into_iter()
                    .map(|v| -v)
                    .collect()
            } else {
                diff.iter().map(|v| -v / dist).collect()
            }
        }
    };
    PairGradient { k, l, g_k }
}

/// First-order expansion of `phi_{kl}` about `x_ref`, evaluated at `x`:
/// `phi^p(X) = phi(X^p) + grad phi(X^p) . (X - X^p)`.
///
/// Returns the value together with the (constant) gradient of the
/// linearization.
pub fn linearized_constraint(
    form: ConstraintForm,
    x_ref: &Configuration,
    x: &Configuration,
    k: usize,
    l: usize,
    d: f64,
    fallback_seed: u64,
) -> (f64, PairGradient) {
    let base = constraint_value(form, x_ref, k, l, d);
    let grad = constraint_gradient(form, x_ref, k, l, d, fallback_seed);
    let (xk, xl) = (x.point(k), x.point(l));
    let (rk, rl) = (x_ref.point(k), x_ref.point(l));
    let corr: f64 = grad
        .g_k
        .iter()
        .zip(xk.iter().zip(rk).map(|(a, b)| a - b))
        .map(|(g, dk)| g * dk)
        .sum::<f64>()
        + grad
            .g_l()
            .iter()
            .zip(xl.iter().zip(rl).map(|(a, b)| a - b))
            .map(|(g, dl)| g * dl)
            .sum::<f64>();
    (base + corr, grad)
}
