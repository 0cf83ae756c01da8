//! Brute-force fractional operators by composite Gauss quadrature.
//!
//! These evaluate the integral definitions directly and share nothing with
//! the operational-matrix path beyond the gamma function, so they serve as an
//! independent check of it.
//!
//! For `∫_0^t (t-s)^{α-1} y(s) ds` write `α = k + β` with `k = ⌈α⌉ - 1` and
//! `β ∈ (0, 1]`, and substitute `t - s = τ^{1/β}`:
//!
//! ```text
//! ∫_0^t (t-s)^{α-1} y(s) ds = (1/β) ∫_0^{t^β} τ^{k/β} y(t - τ^{1/β}) dτ
//! ```
//!
//! which removes the weak singularity of the kernel at `s = t`. The panels in
//! `τ` are graded towards `s = 0` by `τ = U(1 - (1 - x)^4)` with `x` uniform,
//! since `y^{(n)}` of a fractional power is itself singular there.

use crate::error::{Error, Result};
use crate::fracops::OrderFunction;
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::special::{factorial, gamma};

const PANEL_POINTS: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    subintervals: usize,
    panel: QuadratureRule,
}

impl OracleConfig {
    pub fn new(subintervals: usize) -> Result<Self> {
        if subintervals < 100 {
            return Err(Error::validation(
                "subintervals",
                "at least 100 panels are required",
            ));
        }
        Ok(Self {
            subintervals,
            panel: gauss_legendre(PANEL_POINTS)?,
        })
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    fn composite(&self, upper: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = 1.0 / self.subintervals as f64;
        let graded = |x: f64| {
            let r = 1.0 - x;
            let r3 = r * r * r;
            f(upper * (1.0 - r3 * r)) * 4.0 * upper * r3
        };
        (0..self.subintervals)
            .map(|i| {
                let a = i as f64 * h;
                self.panel.integrate(a, a + h, &graded)
            })
            .sum()
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self::new(2000).expect("valid default")
    }
}

/// `(1/Γ(α)) ∫_0^t (t-s)^{α-1} y(s) ds` for a numeric order `alpha > 0`.
pub fn rl_integral(y: impl Fn(f64) -> f64, alpha: f64, t: f64, cfg: &OracleConfig) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let k = alpha.ceil() - 1.0;
    let beta = alpha - k;
    let upper = t.powf(beta);
    let integral = cfg.composite(upper, |tau| {
        tau.powf(k / beta) * y(t - tau.powf(1.0 / beta))
    });
    integral / (beta * gamma(alpha))
}

/// Riemann–Liouville integral of order `α(t)` at `t`.
pub fn rl_integral_direct(
    y: impl Fn(f64) -> f64,
    order: &OrderFunction,
    t: f64,
    cfg: &OracleConfig,
) -> f64 {
    rl_integral(y, order.value(t), t, cfg)
}

/// Caputo derivative of numeric order `alpha ∈ (n-1, n]` from the analytic `n`-th derivative.
pub fn caputo(
    y_deriv_n: impl Fn(f64) -> f64,
    alpha: f64,
    n: u32,
    t: f64,
    cfg: &OracleConfig,
) -> f64 {
    let rest = n as f64 - alpha;
    if rest == 0.0 {
        y_deriv_n(t)
    } else {
        rl_integral(y_deriv_n, rest, t, cfg)
    }
}

/// Caputo derivative of order `α(t)` at `t`.
pub fn caputo_direct(
    y_deriv_n: impl Fn(f64) -> f64,
    order: &OrderFunction,
    n: u32,
    t: f64,
    cfg: &OracleConfig,
) -> f64 {
    caputo(y_deriv_n, order.value(t), n, t, cfg)
}

/// `Σ c_j t^{p_j}` with `p_j >= 0`, differentiated analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    terms: Vec<(f64, f64)>,
}

impl TestFunction {
    /// From `(coefficient, power)` pairs.
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        assert!(
            terms.iter().all(|(_, p)| *p >= 0.0),
            "powers must be non-negative"
        );
        Self { terms }
    }

    pub fn power(p: f64) -> Self {
        Self::new(vec![(1.0, p)])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![(c, 0.0)])
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `y^{(k)}(t)`.
    pub fn derivative(&self, k: u32, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| {
                if p.fract() == 0.0 && p < k as f64 {
                    return 0.0;
                }
                let falling: f64 = (0..k).map(|i| p - i as f64).product();
                c * falling * t.powf(p - k as f64)
            })
            .sum()
    }

    /// `y^{(i)}(0)`; infinite derivatives at the origin are not supported.
    pub fn derivative_at_zero(&self, i: u32) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| {
                if p == i as f64 {
                    c * factorial(i as usize)
                } else {
                    assert!(
                        p > i as f64 || p.fract() == 0.0,
                        "t^{p} has no finite derivative {i} at 0"
                    );
                    0.0
                }
            })
            .sum()
    }

    /// Caputo derivative by the power rule, for cross-checking the quadrature.
    pub fn caputo_closed_form(&self, alpha: f64, t: f64) -> f64 {
        let n = alpha.ceil();
        self.terms
            .iter()
            .map(|&(c, p)| {
                if p.fract() == 0.0 && p < n {
                    0.0
                } else {
                    c * gamma(p + 1.0) / gamma(p + 1.0 - alpha) * t.powf(p - alpha)
                }
            })
            .sum()
    }
}

/// Largest `|I^γ(D^γ y)(t) - y(t) + Σ_{i<⌈γ⌉} y^{(i)}(0) t^i/i!|` over `grid`.
pub fn verify_integral_of_caputo(
    y: &TestFunction,
    gamma_order: f64,
    grid: &[f64],
    cfg: &OracleConfig,
) -> f64 {
    verify_integral_of_caputo_lower(y, gamma_order, 0.0, grid, cfg)
}

/// Largest defect of `I^{α-β}(D^α y) = D^β y - Σ_{i=⌈β⌉}^{⌈α⌉-1} y^{(i)}(0) t^{i-β}/Γ(i+1-β)`
/// over `grid`; `β = 0` means the identity operator.
pub fn verify_integral_of_caputo_lower(
    y: &TestFunction,
    alpha: f64,
    beta: f64,
    grid: &[f64],
    cfg: &OracleConfig,
) -> f64 {
    let n = alpha.ceil() as u32;
    let nb = beta.ceil() as u32;
    grid.iter()
        .map(|&t| {
            let lhs = rl_integral(
                |s| caputo(|r| y.derivative(n, r), alpha, n, s, cfg),
                alpha - beta,
                t,
                cfg,
            );
            let lower = if beta == 0.0 {
                y.value(t)
            } else {
                caputo(|r| y.derivative(nb, r), beta, nb, t, cfg)
            };
            let correction: f64 = (nb..n)
                .map(|i| {
                    let e = i as f64 - beta;
                    y.derivative_at_zero(i) * t.powf(e) / gamma(e + 1.0)
                })
                .sum();
            (lhs - lower + correction).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest defect of `I^{n-α}(y^{(n)}) = D^α y - Σ_{i=⌈α⌉}^{n-1} y^{(i)}(0) t^{i-α}/Γ(i+1-α)`
/// over `grid`, with `D^α y` from the power rule.
pub fn verify_integral_of_derivative(
    y: &TestFunction,
    order: &OrderFunction,
    n: u32,
    grid: &[f64],
    cfg: &OracleConfig,
) -> f64 {
    grid.iter()
        .map(|&t| {
            let alpha = order.value(t);
            let lhs = rl_integral(|s| y.derivative(n, s), n as f64 - alpha, t, cfg);
            let correction: f64 = (alpha.ceil() as u32..n)
                .map(|i| {
                    let e = i as f64 - alpha;
                    y.derivative_at_zero(i) * t.powf(e) / gamma(e + 1.0)
                })
                .sum();
            (lhs - (y.caputo_closed_form(alpha, t) - correction)).abs()
        })
        .fold(0.0, f64::max)
}

/// `k/(count+1)`, `k = 1..=count`.
pub fn interior_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / (count + 1) as f64).collect()
}
