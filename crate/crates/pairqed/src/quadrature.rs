//! Gauss-Hermite quadrature for Gaussian ensemble averages.
//!
//! Nodes and weights are for the physicists' weight `exp(-x^2)`, computed by
//! Newton iteration on the orthonormal Hermite recurrence. Deterministic by
//! construction, which is the reason this is used instead of Monte Carlo for
//! spectral-diffusion averaging.

/// A Gauss-Hermite rule: integrates `exp(-x^2) f(x)` exactly for
/// polynomials `f` up to degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature order must be at least 1");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        let mut z = 0.0f64;
        for i in 0..m {
            // initial guesses (Numerical Recipes)
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                // orthonormal Hermite recurrence
                let mut p1 = std::f64::consts::PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                        - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // store in ascending node order
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `exp(-x^2) f(x)` over the real line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Nodes and weights for averaging over a normal distribution
    /// `N(0, sigma^2)`: returns `(offset, weight)` pairs with weights
    /// summing to 1.
    pub fn normal_rule(&self, sigma: f64) -> Vec<(f64, f64)> {
        let norm = std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (std::f64::consts::SQRT_2 * sigma * x, w / norm))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn degree_three_reference_values() {
        let q = GaussHermite::new(3);
        let expect_nodes = [-1.224744871391589, 0.0, 1.224744871391589];
        let expect_weights = [0.29540897515091935, 1.1816359006036774, 0.29540897515091935];
        for i in 0..3 {
            assert!((q.nodes()[i] - expect_nodes[i]).abs() < 1e-14);
            assert!((q.weights()[i] - expect_weights[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn moments_of_gaussian_weight() {
        for n in [1usize, 2, 5, 9, 16, 31] {
            let q = GaussHermite::new(n);
            assert!((q.integrate(|_| 1.0) - PI.sqrt()).abs() < 1e-12, "order {n}");
            if n >= 2 {
                assert!((q.integrate(|x| x * x) - PI.sqrt() / 2.0).abs() < 1e-12);
            }
            assert!(q.integrate(|x| x).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_rule_weights_sum_to_one() {
        let q = GaussHermite::new(9);
        let rule = q.normal_rule(0.37);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let var: f64 = rule.iter().map(|(x, w)| w * x * x).sum();
        assert!((var - 0.37 * 0.37).abs() < 1e-12);
    }
}
