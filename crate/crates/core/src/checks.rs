//! Cross-checks of the operational-matrix operators against the quadrature oracle.

use std::fmt;
use std::sync::Arc;

use crate::basis::BernoulliBasis;
use crate::error::Result;
use crate::fracops::{frac_integral_monomial_with, OperationalMatrixEvaluator, OrderFunction};
use crate::oracle::{
    interior_grid, rl_integral, verify_integral_of_caputo, verify_integral_of_caputo_lower,
    verify_integral_of_derivative, OracleConfig, TestFunction,
};
use crate::special::gamma;

pub const DEFAULT_ORDERS: [&str; 5] = ["0.5", "1", "1.9", "sin(t)", "t/2"];

/// Tolerance for the monomial and basis-integral comparisons.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-7;

/// Panel count of the oracle when one oracle operator is nested inside another.
pub const NESTED_SUBINTERVALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckGroup {
    Monomial,
    OperationalMatrix,
    Identity,
}

impl fmt::Display for CheckGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckGroup::Monomial => "monomial",
            CheckGroup::OperationalMatrix => "opmatrix",
            CheckGroup::Identity => "identity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckCell {
    pub group: CheckGroup,
    pub label: String,
    pub defect: f64,
    pub tolerance: f64,
}

impl CheckCell {
    pub fn passed(&self) -> bool {
        self.defect <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub orders: Vec<OrderFunction>,
    pub max_degree: usize,
    pub points: usize,
    pub oracle: OracleConfig,
    pub nested: OracleConfig,
    /// Gamma used by the monomial rule under test; swappable for fault injection.
    pub gamma: fn(f64) -> f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            orders: DEFAULT_ORDERS
                .iter()
                .map(|s| OrderFunction::parse(s).expect("valid default order"))
                .collect(),
            max_degree: 6,
            points: 20,
            oracle: OracleConfig::default(),
            nested: OracleConfig::new(NESTED_SUBINTERVALS).expect("valid nested config"),
            gamma,
        }
    }
}

impl CheckConfig {
    /// Replaces the order set with parsed `orders`.
    pub fn with_orders<S: AsRef<str>>(mut self, orders: &[S]) -> Result<Self> {
        self.orders = orders
            .iter()
            .map(|s| OrderFunction::parse(s.as_ref()))
            .collect::<Result<_>>()?;
        Ok(self)
    }
}

/// Deterministic well-spread points in `(0, 1)`: fractional parts of `k/φ`.
pub fn check_points(count: usize) -> Vec<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    (1..=count).map(|k| (k as f64 * INV_PHI).fract()).collect()
}

/// `Γ(ν+1)/Γ(ν+1+α) t^{ν+α}` against quadrature of `t^ν`, one cell per order and `ν`.
pub fn monomial_cells(cfg: &CheckConfig) -> Vec<CheckCell> {
    let points = check_points(cfg.points);
    let mut cells = Vec::new();
    for order in &cfg.orders {
        for nu in 0..=cfg.max_degree {
            let nu = nu as f64;
            let defect = points
                .iter()
                .map(|&t| {
                    let alpha = order.value(t);
                    let rule =
                        frac_integral_monomial_with(cfg.gamma, alpha, nu, t).unwrap_or(f64::NAN);
                    let quad = rl_integral(|s| s.powf(nu), alpha, t, &cfg.oracle);
                    (rule - quad).abs()
                })
                .fold(0.0, nan_max);
            cells.push(CheckCell {
                group: CheckGroup::Monomial,
                label: format!("alpha={} nu={nu}", order.expression()),
                defect,
                tolerance: EQUIVALENCE_TOLERANCE,
            });
        }
    }
    cells
}

/// `P_t^{α(t)} B(t)` against quadrature of each `β_m`, one cell per order and `m`.
pub fn operational_matrix_cells(cfg: &CheckConfig) -> Result<Vec<CheckCell>> {
    let basis = Arc::new(BernoulliBasis::new(cfg.max_degree)?);
    let points = check_points(cfg.points);
    let mut cells = Vec::new();
    for order in &cfg.orders {
        let eval = OperationalMatrixEvaluator::new(Arc::clone(&basis), order.clone());
        let rows = points
            .iter()
            .map(|&t| eval.integral_of_basis(t))
            .collect::<Result<Vec<_>>>()?;
        for m in 0..basis.len() {
            let q = basis.q_row(m);
            let beta_m = |s: f64| q.iter().rev().fold(0.0, |acc, c| acc * s + c);
            let defect = points
                .iter()
                .zip(&rows)
                .map(|(&t, row)| {
                    (row[m] - rl_integral(beta_m, order.value(t), t, &cfg.oracle)).abs()
                })
                .fold(0.0, nan_max);
            cells.push(CheckCell {
                group: CheckGroup::OperationalMatrix,
                label: format!("alpha={} m={m}", order.expression()),
                defect,
                tolerance: EQUIVALENCE_TOLERANCE,
            });
        }
    }
    Ok(cells)
}

/// The composition rules between Caputo derivatives and Riemann–Liouville integrals.
pub fn identity_cells(cfg: &CheckConfig) -> Result<Vec<CheckCell>> {
    let grid = interior_grid(9);
    let nested = &cfg.nested;
    let cubic = TestFunction::power(3.0);
    let mut cells = Vec::new();
    let mut push = |label: &str, defect: f64, tolerance: f64| {
        cells.push(CheckCell {
            group: CheckGroup::Identity,
            label: label.to_string(),
            defect,
            tolerance,
        })
    };

    push(
        "I^1.5 D^1.5 t^3",
        verify_integral_of_caputo(&cubic, 1.5, &grid, nested),
        1e-6,
    );
    push(
        "I^0.5 D^0.5 1",
        verify_integral_of_caputo(&TestFunction::constant(1.0), 0.5, &grid, nested),
        1e-12,
    );
    push(
        "I^2 D^2 t^2",
        verify_integral_of_caputo(&TestFunction::power(2.0), 2.0, &grid, nested),
        1e-10,
    );

    let alpha = OrderFunction::constant(1.9)?;
    push(
        "I^0.1 (t^4)''",
        verify_integral_of_derivative(&TestFunction::power(4.0), &alpha, 2, &grid, &cfg.oracle),
        1e-6,
    );
    push(
        "I^1.1 (t^4 + t^2)'''",
        verify_integral_of_derivative(
            &TestFunction::new(vec![(1.0, 4.0), (1.0, 2.0)]),
            &alpha,
            3,
            &grid,
            &cfg.oracle,
        ),
        1e-6,
    );

    push(
        "I^1.5 D^1.5 t^3 - D^0",
        verify_integral_of_caputo_lower(&cubic, 1.5, 0.0, &grid, nested),
        1e-6,
    );
    push(
        "I^1 D^1.5 (t^3 + t) - D^0.5",
        verify_integral_of_caputo_lower(
            &TestFunction::new(vec![(1.0, 3.0), (1.0, 1.0)]),
            1.5,
            0.5,
            &grid,
            nested,
        ),
        1e-6,
    );
    Ok(cells)
}

/// All three groups in order.
pub fn run_checks(cfg: &CheckConfig) -> Result<Vec<CheckCell>> {
    let mut cells = monomial_cells(cfg);
    cells.extend(operational_matrix_cells(cfg)?);
    cells.extend(identity_cells(cfg)?);
    Ok(cells)
}

// NaN must count as a failure, which plain `f64::max` would swallow.
fn nan_max(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}
