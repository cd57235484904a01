//! Quadrature rules shared by the spectral and Green-function modules.

use crate::linalg::{c, C64};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, nodes in increasing order.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on the three-term recurrence.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Weights for integrating a linear interpolant against an oscillation:
/// returns `(φ0, φ1)` with `∫_0^1 (1-x) e^{iθx} dx = φ0` and
/// `∫_0^1 x e^{iθx} dx = φ1`.
pub fn filon_linear_weights(theta: f64) -> (C64, C64) {
    if theta.abs() < 0.1 {
        // Series in iθ: ∫ x^k e^{iθx} = Σ_m (iθ)^m / (m! (m+k+1)).
        let it = c(0.0, theta);
        let mut term = c(1.0, 0.0);
        let mut total = c(0.0, 0.0);
        let mut first = c(0.0, 0.0);
        let mut fact = 1.0;
        for m in 0..16 {
            if m > 0 {
                term *= it;
                fact *= m as f64;
            }
            total += term / (fact * (m as f64 + 1.0));
            first += term / (fact * (m as f64 + 2.0));
        }
        return (total - first, first);
    }
    let e = C64::from_polar(1.0, theta);
    let total = (e - 1.0) / c(0.0, theta);
    let first = e / c(0.0, theta) + (e - 1.0) / (theta * theta);
    (total - first, first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n} weight sum {wsum}");
            for k in 0..(2 * n) {
                let got = rule.integrate(0.0, 1.0, |x| x.powi(k as i32));
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "n={n} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn filon_weights_match_direct_quadrature() {
        let rule = GaussLegendre::new(40);
        for theta in [0.0, 1e-4, 5e-3, 0.0099, 0.0101, 0.0999, 0.1001, 0.3, 2.0, -7.5, 30.0] {
            let (p0, p1) = filon_linear_weights(theta);
            let re0 = rule.integrate(0.0, 1.0, |x| (1.0 - x) * (theta * x).cos());
            let im0 = rule.integrate(0.0, 1.0, |x| (1.0 - x) * (theta * x).sin());
            let re1 = rule.integrate(0.0, 1.0, |x| x * (theta * x).cos());
            let im1 = rule.integrate(0.0, 1.0, |x| x * (theta * x).sin());
            assert!((p0 - c(re0, im0)).norm() < 1e-14, "theta={theta}");
            assert!((p1 - c(re1, im1)).norm() < 1e-14, "theta={theta}");
        }
    }
}
