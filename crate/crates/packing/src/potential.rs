//! Global quadratic attraction potential
//! `W(X) = (1/2N) sum_{i<j} |X_i - X_j|^2` and its exact gradient.

use crate::geom::Configuration;

/// Value of the attraction potential.
///
/// Computed in O(N b) through the identity
/// `sum_{i<j} |X_i - X_j|^2 = N sum_i |X_i - mean|^2`.
pub fn potential_value(x: &Configuration) -> f64 {
    let n = x.n();
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.point(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for (m, v) in mean.iter().zip(x.point(i)) {
            let dv = v - m;
            sum += dv * dv;
        }
    }
    // (1/2N) * N * sum = sum / 2
    0.5 * sum
}

/// Gradient of the attraction potential: component `i` equals
/// `X_i - mean(X)`, so the components always sum to zero.
pub fn potential_gradient(x: &Configuration) -> Configuration {
    let n = x.n();
    let dim = x.dim();
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.point(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut g = Configuration::zeros(n, dim);
    for i in 0..n {
        let gi = g.point_mut(i);
        for ((gv, v), m) in gi.iter_mut().zip(x.point(i)).zip(&mean) {
            *gv = v - m;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pairs;
    use approx::assert_abs_diff_eq;

    /// Direct O(N^2) transcription of the pairwise sum, kept as an oracle.
    fn potential_value_pairwise(x: &Configuration) -> f64 {
        let n = x.n();
        let mut sum = 0.0;
        for p in pairs(n) {
            let d = x.pair_distance(p.k, p.l);
            sum += d * d;
        }
        sum / (2.0 * n as f64)
    }

    #[test]
    fn value_two_spheres_1d() {
        let x = Configuration::new(vec![0.0, 1.0], 1).unwrap();
        assert_abs_diff_eq!(potential_value(&x), 0.25);
    }

    #[test]
    fn value_hexagonal_packing_is_three() {
        let mut coords = vec![0.0, 0.0];
        for j in 0..6 {
            let th = std::f64::consts::PI / 3.0 * j as f64;
            coords.push(th.cos());
            coords.push(th.sin());
        }
        let x = Configuration::new(coords, 2).unwrap();
        assert_abs_diff_eq!(potential_value(&x), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn value_coincident_is_zero() {
        let x = Configuration::new(vec![2.0, -1.0, 2.0, -1.0, 2.0, -1.0], 2).unwrap();
        assert_abs_diff_eq!(potential_value(&x), 0.0);
    }

    #[test]
    fn value_matches_pairwise_sum() {
        let mut coords = Vec::new();
        let mut s = 1u64;
        for _ in 0..16 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            coords.push((s >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0);
        }
        let x = Configuration::new(coords, 2).unwrap();
        assert_abs_diff_eq!(
            potential_value(&x),
            potential_value_pairwise(&x),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gradient_two_spheres_1d() {
        let x = Configuration::new(vec![0.0, 1.0], 1).unwrap();
        let g = potential_gradient(&x);
        assert_abs_diff_eq!(g.as_slice()[0], -0.5);
        assert_abs_diff_eq!(g.as_slice()[1], 0.5);
    }

    #[test]
    fn gradient_center_of_symmetric_configuration_vanishes() {
        let mut coords = vec![0.0, 0.0];
        for j in 0..6 {
            let th = std::f64::consts::PI / 3.0 * j as f64;
            coords.push(th.cos());
            coords.push(th.sin());
        }
        let x = Configuration::new(coords, 2).unwrap();
        let g = potential_gradient(&x);
        assert_abs_diff_eq!(g.point(0)[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.point(0)[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gradient_components_sum_to_zero() {
        let coords: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let x = Configuration::new(coords, 2).unwrap();
        let g = potential_gradient(&x);
        let mut sum = [0.0; 2];
        for i in 0..x.n() {
            for (s, v) in sum.iter_mut().zip(g.point(i)) {
                *s += v;
            }
        }
        assert_abs_diff_eq!(sum[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sum[1], 0.0, epsilon = 1e-14);
    }
}
