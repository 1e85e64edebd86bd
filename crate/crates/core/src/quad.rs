// SPDX-License-Identifier: Apache-2.0

//! Gauss–Legendre quadrature.

use crate::scalar::Scalar;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2·order − 1`. Nodes come from Newton
/// iteration on the Legendre recurrence, carried out in `f64`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f(s) ds` for scalar integrands.
    pub fn integrate<T: Scalar>(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| T::lit(w) * f(mid + half * T::lit(x)))
            .sum::<T>()
            * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn points<T: Scalar>(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5) * (b - a);
        let mid = T::lit(0.5) * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * T::lit(x), half * T::lit(w)))
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 20, 33] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let gl = GaussLegendre::new(10);
        for k in 0..20 {
            let v = gl.integrate(0.0, 1.0, |s: f64| s.powi(k));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "k = {k}");
        }
        let three_point = GaussLegendre::new(3);
        let v = three_point.integrate(-1.0, 2.0, |s: f64| s.powi(5) - s);
        assert!((v - (64.0 - 1.0) / 6.0 + (4.0 - 1.0) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrand() {
        let gl = GaussLegendre::new(20);
        let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
