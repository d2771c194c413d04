//! Shared geometry and state types: problems, configurations, pair indexing,
//! norms, relative errors and the circle-overlap accuracy metric.

use crate::{Error, Result};

/// Below this norm the relative-error denominator is treated as degenerate.
pub const NORM_FLOOR: f64 = 1e-300;

/// Problem instance: `n` identical spheres of diameter `diameter` in
/// dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PackingProblem {
    pub n: usize,
    pub dim: usize,
    pub diameter: f64,
}

impl PackingProblem {
    pub fn new(n: usize, dim: usize, diameter: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidProblem("N must be >= 1".into()));
        }
        if dim < 1 {
            return Err(Error::InvalidProblem("dimension must be >= 1".into()));
        }
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidProblem("diameter must be positive".into()));
        }
        Ok(Self { n, dim, diameter })
    }

    /// Number of unordered sphere pairs, `N(N-1)/2`.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// Flat, sphere-major storage of `n` points in `dim` dimensions.
///
/// The same shape is reused for velocities and gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    data: Vec<f64>,
}

impl Configuration {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch {
                expected: dim.max(1),
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Euclidean norm of the full `n*dim` flattening.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance between the centers of spheres `k` and `l`.
    pub fn pair_distance(&self, k: usize, l: usize) -> f64 {
        let (a, b) = (self.point(k), self.point(l));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// One non-negative Lagrange multiplier per unordered sphere pair,
/// stored in [`pair_index`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSet {
    values: Vec<f64>,
}

impl MultiplierSet {
    pub fn zeros(pair_count: usize) -> Self {
        Self {
            values: vec![0.0; pair_count],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Unordered pair `(k, l)` with `k < l` and its position in the flat
/// multiplier array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub k: usize,
    pub l: usize,
    pub linear: usize,
}

/// Canonical linear index of the pair `(k, l)`, `k < l < n`, in
/// lexicographic order.
pub fn pair_index(k: usize, l: usize, n: usize) -> Result<usize> {
    if k >= l || l >= n {
        return Err(Error::InvalidPair { k, l, n });
    }
    // Pairs (0,1), (0,2), ..., (0,n-1), (1,2), ...
    Ok(k * n - k * (k + 1) / 2 + (l - k - 1))
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(linear: usize, n: usize) -> Result<PairIndex> {
    let total = n * (n - 1) / 2;
    if linear >= total {
        return Err(Error::InvalidPair { k: linear, l: linear, n });
    }
    let mut k = 0;
    let mut offset = 0;
    loop {
        let row = n - 1 - k;
        if linear < offset + row {
            let l = k + 1 + (linear - offset);
            return Ok(PairIndex { k, l, linear });
        }
        offset += row;
        k += 1;
    }
}

/// Iterate all pairs `(k, l, linear)` in canonical order.
pub fn pairs(n: usize) -> impl Iterator<Item = PairIndex> {
    (0..n).flat_map(move |k| {
        let base = k * n - k * (k + 1) / 2;
        ((k + 1)..n).map(move |l| PairIndex {
            k,
            l,
            linear: base + (l - k - 1),
        })
    })
}

/// Relative error `|X_new - X_old| / |X_old|` on the full flattening.
pub fn relative_error(x_new: &Configuration, x_old: &Configuration) -> Result<f64> {
    if x_new.data.len() != x_old.data.len() || x_new.dim != x_old.dim {
        return Err(Error::ShapeMismatch {
            expected: x_old.data.len(),
            got: x_new.data.len(),
        });
    }
    let denom = x_old.norm();
    if denom <= NORM_FLOOR {
        return Err(Error::DegenerateNorm { floor: NORM_FLOOR });
    }
    let diff = x_new
        .data
        .iter()
        .zip(&x_old.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / denom)
}

/// Area of the intersection of two disks of diameter `d` (b = 2).
///
/// With separation `delta` and radius `r = d/2`: zero for `delta >= d`,
/// the full disk area for coincident centers, otherwise the circular lens
/// `2 r^2 acos(delta / 2r) - (delta / 2) sqrt(4 r^2 - delta^2)`.
pub fn overlap_area(x_k: &[f64], x_l: &[f64], d: f64) -> f64 {
    debug_assert_eq!(x_k.len(), 2);
    debug_assert_eq!(x_l.len(), 2);
    let delta = x_k
        .iter()
        .zip(x_l)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    overlap_area_from_distance(delta, d)
}

/// Lens area as a function of center separation only.
pub fn overlap_area_from_distance(delta: f64, d: f64) -> f64 {
    let r = d / 2.0;
    if delta >= d {
        return 0.0;
    }
    if delta == 0.0 {
        return std::f64::consts::PI * r * r;
    }
    let cos_arg = (delta / (2.0 * r)).clamp(-1.0, 1.0);
    2.0 * r * r * cos_arg.acos() - (delta / 2.0) * (4.0 * r * r - delta * delta).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pair_index_basics() {
        assert_eq!(pair_index(0, 1, 2).unwrap(), 0);
        assert_eq!(pair_index(0, 1, 7).unwrap(), 0);
        assert_eq!(pair_index(5, 6, 7).unwrap(), 20);
        assert!(pair_index(1, 1, 7).is_err());
        assert!(pair_index(2, 1, 7).is_err());
        assert!(pair_index(0, 7, 7).is_err());
    }

    #[test]
    fn pair_index_roundtrip_n7() {
        for k in 0..7 {
            for l in (k + 1)..7 {
                let lin = pair_index(k, l, 7).unwrap();
                let p = pair_from_index(lin, 7).unwrap();
                assert_eq!((p.k, p.l), (k, l));
            }
        }
    }

    #[test]
    fn pair_index_bijection_up_to_64() {
        for n in 2..=64usize {
            let mut seen = vec![false; n * (n - 1) / 2];
            for p in pairs(n) {
                assert_eq!(pair_index(p.k, p.l, n).unwrap(), p.linear);
                assert!(!seen[p.linear]);
                seen[p.linear] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn relative_error_examples() {
        let a = Configuration::new(vec![1.0, 0.0], 2).unwrap();
        assert_eq!(relative_error(&a, &a).unwrap(), 0.0);

        let b = Configuration::new(vec![1.0, 1.0], 2).unwrap();
        assert_abs_diff_eq!(relative_error(&b, &a).unwrap(), 1.0);

        let old = Configuration::new(vec![3.0, 4.0], 2).unwrap();
        let new = Configuration::new(vec![3.0, 4.5], 2).unwrap();
        assert_abs_diff_eq!(relative_error(&new, &old).unwrap(), 0.1);
    }

    #[test]
    fn relative_error_degenerate_norm() {
        let zero = Configuration::zeros(1, 2);
        let one = Configuration::new(vec![1.0, 0.0], 2).unwrap();
        assert!(matches!(
            relative_error(&one, &zero),
            Err(Error::DegenerateNorm { .. })
        ));
    }

    #[test]
    fn overlap_area_examples() {
        // Tangent disks.
        assert_eq!(overlap_area(&[0.0, 0.0], &[1.0, 0.0], 1.0), 0.0);
        // Coincident centers: full disk, pi r^2 = pi / 4 for d = 1.
        assert_abs_diff_eq!(
            overlap_area(&[0.5, 0.5], &[0.5, 0.5], 1.0),
            std::f64::consts::PI / 4.0,
            epsilon = 1e-15
        );
        // d = 1, delta = 0.5 (reference value cross-checked by the
        // Monte-Carlo oracle in tests/oracles.rs).
        assert_abs_diff_eq!(
            overlap_area(&[0.0, 0.0], &[0.5, 0.0], 1.0),
            0.30709,
            epsilon = 1e-5
        );
    }

    #[test]
    fn overlap_area_continuity_and_monotonicity() {
        let d = 1.3;
        // Continuous at delta = d and delta = 0.
        assert!(overlap_area_from_distance(d - 1e-9, d) < 1e-12);
        let full = std::f64::consts::PI * (d / 2.0) * (d / 2.0);
        assert_abs_diff_eq!(overlap_area_from_distance(1e-12, d), full, epsilon = 1e-9);
        // Monotone non-increasing in delta.
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let delta = d * i as f64 / 100.0;
            let a = overlap_area_from_distance(delta, d);
            assert!(a <= prev + 1e-15);
            prev = a;
        }
    }
}
