//! Variable-order Riemann–Liouville integration of the Bernoulli basis.
//!
//! For an order `α(t) > 0`, `I^{α(t)} t^k = Γ(k+1)/Γ(k+1+α(t)) t^{k+α(t)}`, so
//! on monomials the integral acts as `S_t = diag(Γ(k+1)/Γ(k+1+α(t)) t^{α(t)})`
//! and on the Bernoulli vector as `P_t = Q S_t Q^{-1}`. `P_t B(t)` is the exact
//! integral of `B`; nothing is projected.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use crate::basis::BernoulliBasis;
use crate::error::{Error, Result};
use crate::expr::{Expression, Symbol};
use crate::special::gamma;

/// Number of points on which order functions are validated.
pub const VALIDATION_POINTS: usize = 1001;

/// Uniform validation grid on `(0, 1]`: `t_k = (k + 1) / 1001`.
pub fn validation_grid() -> impl Iterator<Item = f64> {
    (0..VALIDATION_POINTS).map(|k| (k + 1) as f64 / VALIDATION_POINTS as f64)
}

/// A variable fractional order `α(t)`, positive on `(0, 1]` with constant ceiling.
#[derive(Debug, Clone)]
pub struct OrderFunction {
    expr: Expression,
    ceiling: u32,
}

impl OrderFunction {
    pub fn new(expr: Expression) -> Result<Self> {
        expr.check_symbols("alpha", |s| s == Symbol::T)?;
        let mut ceiling = None;
        for t in validation_grid() {
            let a = expr.eval_t(t);
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::validation(
                    "alpha",
                    format!(
                        "`{expr}` evaluates to {a} at t = {t}; orders must be positive and finite"
                    ),
                ));
            }
            let c = a.ceil() as u32;
            match ceiling {
                None => ceiling = Some(c),
                Some(prev) if prev != c => {
                    return Err(Error::validation(
                        "alpha",
                        format!("ceil(`{expr}`) changes from {prev} to {c} near t = {t}"),
                    ))
                }
                _ => {}
            }
        }
        Ok(Self {
            expr,
            ceiling: ceiling.expect("non-empty grid"),
        })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(Expression::parse(src)?)
    }

    pub fn constant(alpha: f64) -> Result<Self> {
        Self::new(Expression::constant(alpha))
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.expr.eval_t(t)
    }

    /// `⌈α(t)⌉`, the same everywhere on `(0, 1]`.
    pub fn ceiling(&self) -> u32 {
        self.ceiling
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    /// Identity used to key cached matrices.
    pub fn key(&self) -> String {
        self.expr.canonical()
    }

    /// Whether `self(t) < other(t)` on the whole validation grid.
    pub fn below_on_grid(&self, other: &OrderFunction) -> bool {
        validation_grid().all(|t| self.value(t) < other.value(t))
    }
}

/// `Γ(ν+1)/Γ(ν+1+α) t^{ν+α}`, the order-`α` integral of `t^ν`.
pub fn frac_integral_monomial(alpha: f64, nu: f64, t: f64) -> Result<f64> {
    frac_integral_monomial_with(gamma, alpha, nu, t)
}

/// [`frac_integral_monomial`] with an explicit gamma implementation.
pub fn frac_integral_monomial_with(
    gamma_fn: impl Fn(f64) -> f64,
    alpha: f64,
    nu: f64,
    t: f64,
) -> Result<f64> {
    if nu <= -1.0 {
        return Err(Error::Domain {
            what: "nu",
            value: nu,
            domain: "(-1, inf)",
        });
    }
    if alpha <= 0.0 {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, inf)",
        });
    }
    Ok(gamma_fn(nu + 1.0) / gamma_fn(nu + 1.0 + alpha) * t.powf(nu + alpha))
}

/// Diagonal of `S_t` for a numeric order value `alpha >= 0`.
///
/// `alpha = 0` yields the identity, the integral of order zero.
pub fn s_diagonal(alpha: f64, degree: usize, t: f64) -> Vec<f64> {
    if alpha == 0.0 {
        return vec![1.0; degree + 1];
    }
    let scale = t.powf(alpha);
    (0..=degree)
        .map(|k| {
            let k = k as f64;
            gamma(k + 1.0) / gamma(k + 1.0 + alpha) * scale
        })
        .collect()
}

/// `S_t` for an order function.
pub fn eval_s(order: &OrderFunction, degree: usize, t: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(s_diagonal(order.value(t), degree, t)))
}

/// `P_t = Q S_t Q^{-1}` for a numeric order value `alpha >= 0`.
///
/// Only the lower triangle is accumulated, so the result is exactly lower
/// triangular.
pub fn operational_matrix(basis: &BernoulliBasis, alpha: f64, t: f64) -> DMatrix<f64> {
    let dim = basis.len();
    if alpha == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let s = s_diagonal(alpha, basis.degree(), t);
    DMatrix::from_fn(dim, dim, |m, j| {
        if j > m {
            return 0.0;
        }
        let q = basis.q_row(m);
        (j..=m).map(|k| q[k] * s[k] * basis.q_inv_row(k)[j]).sum()
    })
}

/// `P_t B(t)` for a numeric order value, i.e. the order-`alpha` integral of each `β_m` at `t`.
pub fn integral_of_basis(basis: &BernoulliBasis, alpha: f64, t: f64) -> Vec<f64> {
    let p = operational_matrix(basis, alpha, t);
    let b = DVector::from_vec(basis.eval_unchecked(t));
    (p * b).iter().copied().collect()
}

/// Evaluates `P_t^{α(t)}` for one basis and one order function.
#[derive(Debug, Clone)]
pub struct OperationalMatrixEvaluator {
    basis: Arc<BernoulliBasis>,
    order: OrderFunction,
}

impl OperationalMatrixEvaluator {
    pub fn new(basis: Arc<BernoulliBasis>, order: OrderFunction) -> Self {
        Self { basis, order }
    }

    pub fn basis(&self) -> &BernoulliBasis {
        &self.basis
    }

    pub fn order(&self) -> &OrderFunction {
        &self.order
    }

    pub fn eval_s(&self, t: f64) -> DMatrix<f64> {
        eval_s(&self.order, self.basis.degree(), t)
    }

    /// `P_t^{α(t)}`; the zero matrix at `t = 0`.
    pub fn eval_p(&self, t: f64) -> Result<DMatrix<f64>> {
        check_t(t)?;
        let dim = self.basis.len();
        if t == 0.0 {
            return Ok(DMatrix::zeros(dim, dim));
        }
        Ok(operational_matrix(&self.basis, self.order.value(t), t))
    }

    /// `P_t^{α(t)} B(t)`.
    pub fn integral_of_basis(&self, t: f64) -> Result<Vec<f64>> {
        check_t(t)?;
        if t == 0.0 {
            return Ok(vec![0.0; self.basis.len()]);
        }
        Ok(integral_of_basis(&self.basis, self.order.value(t), t))
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "t",
            value: t,
            domain: "(0, 1]",
        })
    }
}

type CacheMap = HashMap<(usize, String), Arc<DMatrix<f64>>>;

/// Matrices at fixed quadrature nodes, keyed by `(node index, order key)`.
#[derive(Debug, Default)]
pub struct NodeCache {
    entries: RwLock<CacheMap>,
}

impl NodeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert_with(
        &self,
        node: usize,
        key: &str,
        compute: impl FnOnce() -> DMatrix<f64>,
    ) -> Arc<DMatrix<f64>> {
        let k = (node, key.to_string());
        if let Some(hit) = self.entries.read().expect("cache lock").get(&k) {
            return Arc::clone(hit);
        }
        let value = Arc::new(compute());
        Arc::clone(
            self.entries
                .write()
                .expect("cache lock")
                .entry(k)
                .or_insert(value),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::factorial;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn evaluator(degree: usize, order: &str) -> OperationalMatrixEvaluator {
        OperationalMatrixEvaluator::new(
            Arc::new(BernoulliBasis::new(degree).unwrap()),
            OrderFunction::parse(order).unwrap(),
        )
    }

    #[test]
    fn monomial_integral() {
        assert_relative_eq!(frac_integral_monomial(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(
            frac_integral_monomial(1.5, 0.0, 1.0).unwrap(),
            4.0 / (3.0 * PI.sqrt()),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            frac_integral_monomial(0.5, 2.0, 0.81).unwrap(),
            2.0 / gamma(3.5) * 0.81f64.powf(2.5),
            max_relative = 1e-15
        );
        assert!(matches!(
            frac_integral_monomial(0.5, -1.0, 0.5),
            Err(Error::Domain { what: "nu", .. })
        ));
    }

    #[test]
    fn s_matrix() {
        let t = 0.3;
        let s = eval_s(&OrderFunction::constant(1.0).unwrap(), 1, t);
        assert_relative_eq!(s[(0, 0)], t, max_relative = 1e-15);
        assert_relative_eq!(s[(1, 1)], t / 2.0, max_relative = 1e-15);
        assert_eq!(s[(0, 1)], 0.0);

        let s = eval_s(&OrderFunction::constant(1.5).unwrap(), 1, 1.0);
        assert_relative_eq!(s[(0, 0)], 4.0 / (3.0 * PI.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(s[(1, 1)], 8.0 / (15.0 * PI.sqrt()), max_relative = 1e-15);

        let s = eval_s(&OrderFunction::parse("sin(t)/2 + 0.2").unwrap(), 4, 1e-300);
        assert!(s.iter().all(|v| v.abs() < 1e-50));
    }

    #[test]
    fn printed_first_order_matrix() {
        let ev = evaluator(1, "1");
        for t in [0.25, 0.5, 1.0] {
            let p = ev.eval_p(t).unwrap();
            assert!((p[(0, 0)] - t).abs() < 1e-15);
            assert_eq!(p[(0, 1)], 0.0);
            assert!((p[(1, 0)] + t / 4.0).abs() < 1e-15);
            assert!((p[(1, 1)] - t / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_matrix_at_origin() {
        let ev = evaluator(3, "t/2");
        assert!(ev.eval_p(0.0).unwrap().iter().all(|v| *v == 0.0));
        assert!(ev.eval_p(1.5).is_err());
    }

    #[test]
    fn basis_integral_examples() {
        let v = evaluator(1, "1").integral_of_basis(1.0).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15, "{v:?}");
        let t = 0.7;
        let v = evaluator(0, "2").integral_of_basis(t).unwrap();
        assert_relative_eq!(v[0], t * t / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn order_of_zero_is_identity() {
        let basis = BernoulliBasis::new(4).unwrap();
        let p = operational_matrix(&basis, 0.0, 0.4);
        assert_eq!(p, DMatrix::<f64>::identity(5, 5));
        assert!(s_diagonal(0.0, 4, 0.4).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn order_validation() {
        assert_eq!(OrderFunction::parse("sin(t)").unwrap().ceiling(), 1);
        assert_eq!(OrderFunction::parse("1.9").unwrap().ceiling(), 2);
        assert_eq!(OrderFunction::parse("t").unwrap().ceiling(), 1);
        assert!(OrderFunction::parse("0.5 + t").is_err()); // crosses 1
        assert!(OrderFunction::parse("t - 0.5").is_err()); // not positive
        assert!(OrderFunction::parse("1/(t - 0.5)").is_err());
        assert!(OrderFunction::parse("x").is_err());
        assert!(OrderFunction::parse("t/3")
            .unwrap()
            .below_on_grid(&OrderFunction::parse("t/2").unwrap()));
    }

    /// Term-by-term integral of the monomial expansion of `β_m`.
    fn integral_by_monomials(basis: &BernoulliBasis, m: usize, alpha: f64, t: f64) -> f64 {
        basis
            .q_row(m)
            .iter()
            .enumerate()
            .map(|(i, c)| c * frac_integral_monomial(alpha, i as f64, t).unwrap())
            .sum()
    }

    #[test]
    fn matrix_reproduces_monomial_rule() {
        let basis = BernoulliBasis::new(8).unwrap();
        for alpha in [0.3, 0.5, 1.0, 1.5, 1.9, 2.0, 2.7] {
            for k in 1..=10 {
                let t = k as f64 / 10.0;
                let v = integral_of_basis(&basis, alpha, t);
                for m in 0..=8 {
                    let want = integral_by_monomials(&basis, m, alpha, t);
                    let scale = want.abs().max(1e-3 * t.powf(alpha));
                    assert!(
                        (v[m] - want).abs() <= 1e-11 * scale,
                        "alpha={alpha} t={t} m={m}: {} vs {want}",
                        v[m]
                    );
                }
            }
        }
    }

    #[test]
    fn integer_order_matches_repeated_integration() {
        // I^2 t^k = t^{k+2} / ((k+1)(k+2))
        let basis = BernoulliBasis::new(3).unwrap();
        let t = 0.6;
        let v = integral_of_basis(&basis, 2.0, t);
        let want: Vec<f64> = (0..=3)
            .map(|m| {
                basis
                    .q_row(m)
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * factorial(i) / factorial(i + 2) * t.powi(i as i32 + 2))
                    .sum()
            })
            .collect();
        for (a, b) in v.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15, "{v:?} vs {want:?}");
        }
    }

    #[test]
    fn lower_triangular_everywhere() {
        let ev = evaluator(6, "sin(t)");
        for k in 1..=20 {
            let p = ev.eval_p(k as f64 / 20.0).unwrap();
            for i in 0..7 {
                for j in (i + 1)..7 {
                    assert_eq!(p[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn cache_reuses_entries() {
        let cache = NodeCache::new();
        let mut calls = 0;
        for _ in 0..3 {
            cache.get_or_insert_with(2, "1.5", || {
                calls += 1;
                DMatrix::identity(2, 2)
            });
        }
        cache.get_or_insert_with(3, "1.5", || DMatrix::identity(2, 2));
        assert_eq!(calls, 1);
        assert_eq!(cache.len(), 2);
    }
}
