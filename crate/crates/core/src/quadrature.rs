//! Gauss–Legendre rules on `(-1, 1)` and their use on `[0, 1]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Node count used by default for the performance index.
pub const DEFAULT_NODES: usize = 14;

/// Largest supported node count.
pub const MAX_NODES: usize = 64;

const MAX_NEWTON_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = next;
    }
    let n = n as f64;
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let dp = n * (p_prev - x * p) / (1.0 - x * x);
    (p, dp)
}

/// The `n`-point Gauss–Legendre rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_NODES {
        return Err(Error::Domain {
            what: "N",
            value: n as f64,
            domain: "[1, 64]",
        });
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..MAX_NEWTON_ITERATIONS {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if p.abs() <= 1e-15 || dx.abs() <= 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNonConvergence { n, index: i });
        }
        if n % 2 == 1 && i == half - 1 {
            x = 0.0;
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / (dp * dp * (1.0 - x * x));
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

impl QuadratureRule {
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

    /// Nodes mapped to `[0, 1]` by `t -> (t + 1) / 2`.
    pub fn unit_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|x| (x + 1.0) / 2.0)
    }

    /// `∫_0^1 f ≈ ½ Σ w_i f((t_i + 1)/2)`.
    pub fn integrate_01(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(self.unit_nodes())
            .map(|(w, t)| w * f(t))
            .sum::<f64>()
    }

    /// As [`integrate_01`](Self::integrate_01) for fallible integrands.
    pub fn try_integrate_01<E>(
        &self,
        mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<f64, E> {
        let mut acc = 0.0;
        for (w, t) in self.weights.iter().zip(self.unit_nodes()) {
            acc += w * f(t)?;
        }
        Ok(0.5 * acc)
    }

    /// `∫_a^b f` with the rule mapped affinely.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        half * self
            .weights
            .iter()
            .zip(&self.nodes)
            .map(|(w, x)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_rule() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_relative_eq!(r.weights()[0], 2.0, max_relative = 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes()[0], -x, max_relative = 1e-15);
        assert_relative_eq!(r.nodes()[1], x, max_relative = 1e-15);
        assert_relative_eq!(r.weights()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(r.weights()[1], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn structure_for_all_sizes() {
        for n in 1..=MAX_NODES {
            let r = gauss_legendre(n).unwrap();
            assert_eq!(r.len(), n);
            let sum: f64 = r.weights().iter().sum();
            assert!((sum - 2.0).abs() <= 1e-14, "n={n} sum={sum}");
            assert!(r.weights().iter().all(|w| *w > 0.0));
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]), "n={n}");
            assert!(r.nodes().iter().all(|x| x.abs() < 1.0));
            for i in 0..n {
                assert_eq!(r.nodes()[i], -r.nodes()[n - 1 - i]);
                assert_eq!(r.weights()[i], r.weights()[n - 1 - i]);
                let (p, dp) = legendre_with_derivative(n, r.nodes()[i]);
                assert!((p / dp).abs() <= 1e-15, "n={n} i={i} P={p}");
            }
        }
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
    }

    #[test]
    fn symmetric_exactness() {
        let r = gauss_legendre(14).unwrap();
        for k in 0..=27 {
            let want = if k % 2 == 1 {
                0.0
            } else {
                2.0 / (k as f64 + 1.0)
            };
            let got = r.integrate(-1.0, 1.0, |x| x.powi(k));
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "k={k}");
        }
    }

    #[test]
    fn unit_interval_examples() {
        let r2 = gauss_legendre(2).unwrap();
        assert_relative_eq!(r2.integrate_01(|_| 1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(r2.integrate_01(|t| t * t), 1.0 / 3.0, max_relative = 1e-15);
        let r14 = gauss_legendre(14).unwrap();
        let e = std::f64::consts::E;
        assert!((r14.integrate_01(f64::exp) - (e - 1.0)).abs() <= 1e-13);
    }

    #[test]
    fn unit_interval_exactness() {
        for n in [2usize, 5, 14] {
            let r = gauss_legendre(n).unwrap();
            for k in 0..(2 * n) {
                let want = 1.0 / (k as f64 + 1.0);
                let got = r.integrate_01(|t| t.powi(k as i32));
                assert!((got - want).abs() <= 1e-12 * want, "n={n} k={k}");
            }
        }
    }
}
