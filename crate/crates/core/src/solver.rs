//! Reduction of a control-affine problem to `dJ/dA = 0` and its Newton solve.
//!
//! Approach I expands `x^{(n)} = Aᵀ B(t)`:
//!
//! ```text
//! x(t)         = Aᵀ P^{n} B(t)      + Σ_{i<n} x0_i t^i / i!
//! D^{α(t)} x   = Aᵀ P^{n-α(t)} B(t) + Σ_{i=⌈α⌉}^{n-1} x0_i t^{i-α} / Γ(i+1-α)
//! D^{α_j(t)} x = Aᵀ P^{n-α_j(t)} B(t) + Σ_{i=⌈α_j⌉}^{n-1} (same form)
//! ```
//!
//! Approach II expands `D^{α(t)} x = Aᵀ B(t)`:
//!
//! ```text
//! x(t)         = Aᵀ P^{α(t)} B(t) + Σ_{i<⌈α⌉} x0_i t^i / i!
//! D^{α_j(t)} x = Aᵀ P^{α(t)-α_j(t)} B(t) + Σ_{i=⌈α_j⌉}^{⌈α⌉-1} x0_i t^{i-α_j} / Γ(i+1-α_j)
//! ```
//!
//! In both cases `u = (D^{α} x - drift) / gain` and the index is
//! `J[A] ≈ ½ Σ w_i cost(t_i, x, u)` over the Gauss–Legendre nodes mapped to `[0, 1]`.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{BernoulliBasis, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::expr::Bindings;
use crate::fracops::{operational_matrix, NodeCache};
use crate::problem::ControlAffineProblem;
use crate::quadrature::QuadratureRule;
use crate::special::{factorial, rgamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    /// Expand the `n`-th classical derivative of the state.
    I,
    /// Expand the Caputo derivative of the state.
    II,
}

impl Approach {
    pub fn number(self) -> u8 {
        match self {
            Approach::I => 1,
            Approach::II => 2,
        }
    }

    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            1 => Some(Approach::I),
            2 => Some(Approach::II),
            _ => None,
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::I => "I",
            Approach::II => "II",
        })
    }
}

/// The unknown coefficients `a_0..=a_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for CoefficientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CoefficientVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when `‖∇J‖∞` falls to this value, or to the rounding floor of
    /// the finite-difference gradient if that is larger.
    pub gtol: f64,
    /// Stop when an accepted step satisfies `‖ΔA‖∞ <= step_tol · max(1, ‖A‖∞)`.
    pub step_tol: f64,
    /// Newton iterations allowed over both starts.
    pub max_iter: usize,
    /// Relative step of the central-difference gradient.
    pub gradient_step: f64,
    /// Relative step of the forward-difference Hessian.
    pub hessian_step: f64,
    /// Grow `M` until the dynamics residual drops below `tolerance`, up to `max_degree`.
    pub auto_degree: Option<AutoDegree>,
}

#[derive(Debug, Clone, Copy)]
pub struct AutoDegree {
    pub tolerance: f64,
    pub max_degree: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-12,
            step_tol: 1e-14,
            max_iter: 200,
            gradient_step: 1e-6,
            hessian_step: 1e-5,
            auto_degree: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub coefficients: CoefficientVector,
    /// Quadrature value of the performance index at the solution.
    pub performance_index: f64,
    /// Largest dynamics defect at `t_i = i/(M+1)`, `i = 1..M`.
    pub residual: f64,
    pub iterations: usize,
    /// Final `‖∇J‖∞`.
    pub gradient_norm: f64,
    /// `‖∇J‖∞` at the start of every iteration, and at the end.
    pub gradient_history: Vec<f64>,
    /// Whether the all-ones fallback start was used.
    pub restarted: bool,
    pub approach: Approach,
    pub degree: usize,
    pub nodes: usize,
}

/// Per-point pieces of the state/derivative maps: values are `Aᵀ v + offset`.
#[derive(Debug, Clone)]
struct Affine {
    v: Vec<f64>,
    offset: f64,
}

impl Affine {
    #[inline]
    fn apply(&self, a: &[f64]) -> f64 {
        self.v.iter().zip(a).map(|(v, a)| v * a).sum::<f64>() + self.offset
    }
}

#[derive(Debug, Clone)]
struct PointTerms {
    t: f64,
    alpha: f64,
    gain: f64,
    state: Affine,
    caputo: Affine,
    lower: Vec<Affine>,
}

/// A problem reduced to a function of the coefficient vector for a fixed
/// approach, degree bound and quadrature rule.
#[derive(Debug)]
pub struct DiscretizedProblem {
    problem: ControlAffineProblem,
    basis: Arc<BernoulliBasis>,
    rule: QuadratureRule,
    approach: Approach,
    cache: NodeCache,
    nodes: Vec<PointTerms>,
}

/// `Σ_{i=lo}^{hi-1} x0_i t^{i-β} / Γ(i+1-β)`.
fn initial_correction(init: &[f64], lo: u32, hi: u32, beta: f64, t: f64) -> f64 {
    (lo..hi)
        .map(|i| {
            let e = i as f64 - beta;
            init[i as usize] * t.powf(e) * rgamma(e + 1.0)
        })
        .sum()
}

/// `Σ_{i<k} x0_i t^i / i!`.
fn taylor(init: &[f64], k: u32, t: f64) -> f64 {
    (0..k as usize)
        .map(|i| init[i] * t.powi(i as i32) / factorial(i))
        .sum()
}

impl DiscretizedProblem {
    pub fn new(
        problem: &ControlAffineProblem,
        approach: Approach,
        degree: usize,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(degree));
        }
        let mut d = Self {
            problem: problem.clone(),
            basis: Arc::new(BernoulliBasis::new(degree)?),
            rule: rule.clone(),
            approach,
            cache: NodeCache::new(),
            nodes: Vec::new(),
        };
        d.nodes = rule
            .unit_nodes()
            .enumerate()
            .map(|(i, t)| d.terms(t, Some(i)))
            .collect();
        Ok(d)
    }

    pub fn problem(&self) -> &ControlAffineProblem {
        &self.problem
    }

    pub fn basis(&self) -> &BernoulliBasis {
        &self.basis
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn approach(&self) -> Approach {
        self.approach
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// Cached operational matrices (filled for the quadrature nodes at construction).
    pub fn cache(&self) -> &NodeCache {
        &self.cache
    }

    /// `P^{β} B(t)`; at quadrature nodes `P` goes through the cache.
    fn integrated_basis(
        &self,
        beta: f64,
        key: &str,
        t: f64,
        b: &[f64],
        node: Option<usize>,
    ) -> Vec<f64> {
        let p = match node {
            Some(i) => self
                .cache
                .get_or_insert_with(i, key, || operational_matrix(&self.basis, beta, t)),
            None => Arc::new(operational_matrix(&self.basis, beta, t)),
        };
        (p.as_ref() * DVector::from_column_slice(b))
            .iter()
            .copied()
            .collect()
    }

    fn terms(&self, t: f64, node: Option<usize>) -> PointTerms {
        let p = &self.problem;
        let init = p.init();
        let n = p.n();
        let alpha = p.order().value(t);
        let ceil_alpha = alpha.ceil() as u32;
        let akey = p.order().key();
        let b = self.basis.eval_unchecked(t);

        let (state, caputo, lower) = match self.approach {
            Approach::I => {
                let state = Affine {
                    v: self.integrated_basis(n as f64, &format!("{n}"), t, &b, node),
                    offset: taylor(init, n, t),
                };
                let caputo = Affine {
                    v: self.integrated_basis(n as f64 - alpha, &format!("{n}-{akey}"), t, &b, node),
                    offset: initial_correction(init, ceil_alpha, n, alpha, t),
                };
                let lower = p
                    .sub_orders()
                    .iter()
                    .map(|o| {
                        let aj = o.value(t);
                        Affine {
                            v: self.integrated_basis(
                                n as f64 - aj,
                                &format!("{n}-{}", o.key()),
                                t,
                                &b,
                                node,
                            ),
                            offset: initial_correction(init, aj.ceil() as u32, n, aj, t),
                        }
                    })
                    .collect();
                (state, caputo, lower)
            }
            Approach::II => {
                let state = Affine {
                    v: self.integrated_basis(alpha, &akey, t, &b, node),
                    offset: taylor(init, ceil_alpha, t),
                };
                let lower = p
                    .sub_orders()
                    .iter()
                    .map(|o| {
                        let aj = o.value(t);
                        Affine {
                            v: self.integrated_basis(
                                alpha - aj,
                                &format!("{akey}-{}", o.key()),
                                t,
                                &b,
                                node,
                            ),
                            offset: initial_correction(init, aj.ceil() as u32, ceil_alpha, aj, t),
                        }
                    })
                    .collect();
                let caputo = Affine { v: b, offset: 0.0 };
                (state, caputo, lower)
            }
        };
        PointTerms {
            t,
            alpha,
            gain: p.gain().eval_t(t),
            state,
            caputo,
            lower,
        }
    }

    fn check_len(&self, a: &[f64]) {
        assert_eq!(
            a.len(),
            self.basis.len(),
            "coefficient vector has the wrong length"
        );
    }

    /// `(x, D^{α} x, [D^{α_j} x], drift)` at a point.
    fn evaluate(&self, a: &[f64], pt: &PointTerms) -> (f64, f64, f64) {
        let x = pt.state.apply(a);
        let f = pt.caputo.apply(a);
        let lower: Vec<f64> = pt.lower.iter().map(|l| l.apply(a)).collect();
        let drift = self.problem.drift().eval(&Bindings {
            t: pt.t,
            x,
            u: 0.0,
            alpha: pt.alpha,
            d: &lower,
        });
        (x, f, drift)
    }

    fn integrand(&self, a: &[f64], pt: &PointTerms) -> f64 {
        let (x, f, drift) = self.evaluate(a, pt);
        let u = (f - drift) / pt.gain;
        self.problem.cost().eval(&Bindings {
            t: pt.t,
            x,
            u,
            alpha: pt.alpha,
            d: &[],
        })
    }

    /// Approximate state `x(t)`.
    pub fn state(&self, a: &[f64], t: f64) -> f64 {
        self.check_len(a);
        self.terms(t, None).state.apply(a)
    }

    /// Approximate `D^{α(t)} x` (`F[A, t]` for approach I, `Aᵀ B(t)` for approach II).
    pub fn caputo_derivative(&self, a: &[f64], t: f64) -> f64 {
        self.check_len(a);
        self.terms(t, None).caputo.apply(a)
    }

    /// Approximate control `u(t)` recovered from the dynamics.
    pub fn control(&self, a: &[f64], t: f64) -> f64 {
        self.check_len(a);
        let pt = self.terms(t, None);
        let (_, f, drift) = self.evaluate(a, &pt);
        (f - drift) / pt.gain
    }

    /// Quadrature value of `J[A]`.
    pub fn performance_index(&self, a: &[f64]) -> Result<f64> {
        self.check_len(a);
        let mut acc = 0.0;
        for (pt, w) in self.nodes.iter().zip(self.rule.weights()) {
            let g = self.integrand(a, pt);
            if !g.is_finite() {
                return Err(Error::NonFiniteCost { t: pt.t, value: g });
            }
            acc += w * g;
        }
        Ok(0.5 * acc)
    }

    /// Central-difference gradient with steps `1e-6 · max(1, |a_k|)`.
    pub fn gradient(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.gradient_with_step(a, SolveOptions::default().gradient_step)
    }

    pub fn gradient_with_step(&self, a: &[f64], rel_step: f64) -> Result<Vec<f64>> {
        let mut probe = a.to_vec();
        (0..a.len())
            .map(|k| {
                let h = rel_step * a[k].abs().max(1.0);
                probe[k] = a[k] + h;
                let up = self.performance_index(&probe)?;
                probe[k] = a[k] - h;
                let down = self.performance_index(&probe)?;
                probe[k] = a[k];
                Ok((up - down) / (2.0 * h))
            })
            .collect()
    }

    /// Forward differences of the gradient, symmetrized.
    fn hessian(&self, a: &[f64], grad: &[f64], opts: &SolveOptions) -> Result<DMatrix<f64>> {
        let dim = a.len();
        let mut h = DMatrix::zeros(dim, dim);
        let mut probe = a.to_vec();
        for k in 0..dim {
            let step = opts.hessian_step * a[k].abs().max(1.0);
            probe[k] = a[k] + step;
            let g = self.gradient_with_step(&probe, opts.gradient_step)?;
            probe[k] = a[k];
            for i in 0..dim {
                h[(i, k)] = (g[i] - grad[i]) / step;
            }
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// Largest `|D^{α} x - drift - gain·u|` over `t_i = i/(M+1)`, `i = 1..M`.
    pub fn residual(&self, a: &[f64]) -> f64 {
        self.check_len(a);
        let m = self.degree();
        (1..=m)
            .map(|i| {
                let pt = self.terms(i as f64 / (m + 1) as f64, None);
                let (_, f, drift) = self.evaluate(a, &pt);
                let u = (f - drift) / pt.gain;
                (f - drift - pt.gain * u).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `(t, x(t), u(t))` on `t_k = k / count`, `k = 1..=count`.
    pub fn sample(&self, a: &[f64], count: usize) -> Vec<SamplePoint> {
        self.check_len(a);
        (1..=count)
            .map(|k| {
                let t = k as f64 / count as f64;
                let pt = self.terms(t, None);
                let (x, f, drift) = self.evaluate(a, &pt);
                SamplePoint {
                    t,
                    x,
                    u: (f - drift) / pt.gain,
                }
            })
            .collect()
    }
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

/// Samples the solved state and control; `count >= 2`.
pub fn sample_solution(
    report: &SolveReport,
    d: &DiscretizedProblem,
    count: usize,
) -> Vec<SamplePoint> {
    assert!(count >= 2, "at least two samples are required");
    d.sample(&report.coefficients, count)
}

/// Root-mean-square state and control errors against the exact solution over the samples.
pub fn l2_errors(problem: &ControlAffineProblem, samples: &[SamplePoint]) -> Option<(f64, f64)> {
    if !problem.has_exact_solution() || samples.is_empty() {
        return None;
    }
    let (mut ex, mut eu) = (0.0, 0.0);
    for s in samples {
        ex += (s.x - problem.exact_state(s.t)?).powi(2);
        eu += (s.u - problem.exact_control(s.t)?).powi(2);
    }
    let n = samples.len() as f64;
    Some(((ex / n).sqrt(), (eu / n).sqrt()))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

enum Outcome {
    Converged,
    Stalled,
    Exhausted,
}

struct Newton<'a> {
    d: &'a DiscretizedProblem,
    opts: &'a SolveOptions,
    iterations: usize,
    history: Vec<f64>,
}

impl Newton<'_> {
    /// Rounding floor of the central-difference gradient: cancellation in
    /// `J(a+h) - J(a-h)` leaves an error of order `ε |J| / h`.
    fn gradient_noise(&self, a: &[f64]) -> Result<f64> {
        let j = self.d.performance_index(a)?;
        Ok(10.0 * f64::EPSILON * j.abs() / self.opts.gradient_step)
    }

    /// Runs from `a` until convergence, stagnation or the iteration budget.
    fn run(&mut self, a: &mut Vec<f64>) -> Result<(Outcome, Vec<f64>)> {
        let mut grad = self.d.gradient_with_step(a, self.opts.gradient_step)?;
        loop {
            let gnorm = inf_norm(&grad);
            self.history.push(gnorm);
            if gnorm <= self.opts.gtol.max(self.gradient_noise(a)?) {
                return Ok((Outcome::Converged, grad));
            }
            if self.iterations >= self.opts.max_iter {
                return Ok((Outcome::Exhausted, grad));
            }
            self.iterations += 1;

            let h = self.d.hessian(a, &grad, self.opts)?;
            let rhs = -DVector::from_column_slice(&grad);
            let dir: Vec<f64> = match h.lu().solve(&rhs) {
                Some(p) if p.iter().all(|v| v.is_finite()) => p.iter().copied().collect(),
                _ => rhs.iter().copied().collect(),
            };

            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda >= 1e-10 {
                let trial: Vec<f64> = a.iter().zip(&dir).map(|(x, p)| x + lambda * p).collect();
                if let Ok(g) = self.d.gradient_with_step(&trial, self.opts.gradient_step) {
                    if g.iter().all(|v| v.is_finite())
                        && inf_norm(&g) <= (1.0 - 1e-4 * lambda) * gnorm
                    {
                        accepted = Some((trial, g));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let Some((trial, g)) = accepted else {
                return Ok((Outcome::Stalled, grad));
            };
            let step = lambda * inf_norm(&dir);
            *a = trial;
            grad = g;
            if step <= self.opts.step_tol * inf_norm(a).max(1.0) {
                self.history.push(inf_norm(&grad));
                return Ok((Outcome::Converged, grad));
            }
        }
    }
}

/// Solves `dJ/dA = 0` by damped Newton from `A = 0`, restarting once from all ones on stagnation.
pub fn solve(
    problem: &ControlAffineProblem,
    approach: Approach,
    degree: usize,
    rule: &QuadratureRule,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let Some(auto) = opts.auto_degree else {
        let d = DiscretizedProblem::new(problem, approach, degree, rule)?;
        return solve_discretized(&d, opts);
    };
    let mut m = degree;
    loop {
        let d = DiscretizedProblem::new(problem, approach, m, rule)?;
        let report = solve_discretized(&d, opts)?;
        if report.residual < auto.tolerance || m >= auto.max_degree.min(MAX_DEGREE) {
            return Ok(report);
        }
        m += 1;
    }
}

/// [`solve`] on an already discretized problem.
pub fn solve_discretized(d: &DiscretizedProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let dim = d.basis().len();
    let mut newton = Newton {
        d,
        opts,
        iterations: 0,
        history: Vec::new(),
    };

    let mut a = vec![0.0; dim];
    let mut restarted = false;
    let (mut outcome, mut grad) = newton.run(&mut a)?;
    if matches!(outcome, Outcome::Stalled) {
        restarted = true;
        let mut b = vec![1.0; dim];
        let (o, g) = newton.run(&mut b)?;
        // Keep whichever start ended closer to stationarity.
        if matches!(o, Outcome::Converged) || inf_norm(&g) < inf_norm(&grad) {
            a = b;
            outcome = o;
            grad = g;
        }
    }

    let report = SolveReport {
        performance_index: d.performance_index(&a)?,
        residual: d.residual(&a),
        iterations: newton.iterations,
        gradient_norm: inf_norm(&grad),
        gradient_history: newton.history,
        coefficients: CoefficientVector(a),
        restarted,
        approach: d.approach(),
        degree: d.degree(),
        nodes: d.rule().len(),
    };
    match outcome {
        Outcome::Converged => Ok(report),
        Outcome::Stalled | Outcome::Exhausted => Err(Error::NonConvergence(Box::new(report))),
    }
}
