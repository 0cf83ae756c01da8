//! Spectral solvers for variable-order fractional optimal control-affine
//! problems on `[0, 1]`.
//!
//! The unknown is expanded in Bernoulli polynomials and every fractional
//! integral of the basis is taken exactly through the operational matrix
//! `P = Q S Q^{-1}`, where `Q` maps monomials to Bernoulli polynomials and
//! `S` is the diagonal action of the Riemann–Liouville integral on monomials.
//! Two discretizations are offered:
//!
//! * [`Approach::I`] expands the `n`-th classical derivative of the state,
//! * [`Approach::II`] expands the Caputo derivative of the state directly.
//!
//! Either way the performance index becomes a function of the coefficient
//! vector, evaluated with Gauss–Legendre quadrature, and the stationarity
//! system `dJ/dA = 0` is solved by a damped Newton iteration.

#![allow(clippy::needless_range_loop)]

pub mod basis;
pub mod checks;
pub mod error;
pub mod expr;
pub mod fracops;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod special;

pub use basis::{bernoulli_number, BernoulliBasis, MAX_DEGREE};
pub use error::{Error, Result};
pub use expr::{Bindings, Expression};
pub use fracops::{OperationalMatrixEvaluator, OrderFunction};
pub use problem::{builtin_example, builtin_examples, load_problem, ControlAffineProblem};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use solver::{
    l2_errors, sample_solution, solve, solve_discretized, Approach, CoefficientVector,
    DiscretizedProblem, SamplePoint, SolveOptions, SolveReport,
};
