//! Gauss–Hermite quadrature for Gaussian noise averages.
//!
//! Noise parameters are modelled as independent zero-mean Gaussians, so the
//! averaged infidelity is a tensor-product Gaussian expectation. Physicists'
//! Gauss–Hermite nodes (weight e^{-x²}) are computed from the symmetric
//! tridiagonal Jacobi matrix (Golub–Welsch); a rule with n nodes integrates
//! polynomials of degree 2n−1 exactly, so the quadratic-in-noise integrands
//! here are exact already at a handful of nodes.

use nalgebra::DMatrix;

/// Nodes and weights of the n-point physicists' Gauss–Hermite rule,
/// ∫ e^{-x²} f(x) dx ≈ Σ w_k f(x_k), sorted by node.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature needs at least one node");
    if n == 1 {
        // Jacobi matrix is the 1x1 zero; weight is the full Gaussian mass.
        return vec![(0.0, f64::sqrt(std::f64::consts::PI))];
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n - 1 {
        let off = ((k + 1) as f64 * 0.5).sqrt();
        jacobi[(k, k + 1)] = off;
        jacobi[(k + 1, k)] = off;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.row(0).iter())
        .map(|(&x, &v0)| (x, v0 * v0 * f64::sqrt(std::f64::consts::PI)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Quadrature over a single N(0, σ²) variable: Σ w_k f(x_k) ≈ E[f].
/// Weights are normalized to sum to one; a zero σ collapses to the single
/// point 0 so callers can disable a noise dimension without special-casing.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianQuadrature {
    pub fn new(sigma: f64, nodes: usize) -> Self {
        assert!(sigma >= 0.0, "standard deviation must be non-negative");
        if sigma == 0.0 || nodes == 1 {
            return GaussianQuadrature {
                points: vec![0.0],
                weights: vec![1.0],
            };
        }
        let inv_sqrt_pi = 1.0 / f64::sqrt(std::f64::consts::PI);
        let (points, weights) = gauss_hermite(nodes)
            .into_iter()
            // change of variables x -> √2 σ x maps e^{-x²} onto N(0, σ²)
            .map(|(x, w)| (std::f64::consts::SQRT_2 * sigma * x, w * inv_sqrt_pi))
            .unzip();
        GaussianQuadrature { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// E[f(X)] for X ~ N(0, σ²).
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 7, 21] {
            let total: f64 = gauss_hermite(n).iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(total, f64::sqrt(std::f64::consts::PI), max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_moments_are_exact() {
        let sigma = 0.37;
        let q = GaussianQuadrature::new(sigma, 21);
        assert_relative_eq!(q.expect(|_| 1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(q.expect(|x| x * x), sigma * sigma, max_relative = 1e-12);
        assert_relative_eq!(
            q.expect(|x| x.powi(4)),
            3.0 * sigma.powi(4),
            max_relative = 1e-11
        );
        // odd moments vanish by symmetry
        assert!(q.expect(|x| x.powi(3)).abs() < 1e-12 * sigma.powi(3));
    }

    #[test]
    fn zero_sigma_collapses_to_point_mass() {
        let q = GaussianQuadrature::new(0.0, 21);
        assert_eq!(q.len(), 1);
        assert_eq!(q.points[0], 0.0);
        assert_eq!(q.weights[0], 1.0);
    }

    #[test]
    fn doubling_nodes_is_stable_for_smooth_integrands() {
        let sigma = 1.3e-3;
        let f = |x: f64| (1.0 + x).powi(2) * (x * 5.0).cos();
        let a = GaussianQuadrature::new(sigma, 21).expect(f);
        let b = GaussianQuadrature::new(sigma, 42).expect(f);
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}
