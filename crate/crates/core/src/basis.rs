//! Bernoulli numbers, Bernoulli polynomials and the monomial change of basis.
//!
//! The basis vector is `B(t) = [β_0(t), …, β_M(t)]` with
//! `β_m(t) = Σ_i C(m, i) b_{m-i} t^i`, so `B(t) = Q T(t)` where
//! `T(t) = [1, t, …, t^M]` and `Q` is unit lower triangular. `Q` and its
//! inverse are kept as exact rationals; the float copies are taken once.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest supported degree bound.
pub const MAX_DEGREE: usize = 30;

/// Slack allowed outside `[0, 1]` when evaluating the basis.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Bernoulli numbers `b_0..=b_k` with the `t / (e^t - 1)` convention (`b_1 = -1/2`).
pub fn bernoulli_numbers(k: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(k + 1);
    b.push(BigRational::one());
    for m in 1..=k {
        // Σ_{j=0}^{m} C(m+1, j) b_j = 0
        let sum = (0..m).fold(BigRational::zero(), |acc, j| {
            acc + BigRational::from_integer(binomial(m + 1, j)) * &b[j]
        });
        b.push(-sum / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// The Bernoulli number `b_k`.
pub fn bernoulli_number(k: usize) -> BigRational {
    bernoulli_numbers(k).pop().expect("non-empty")
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

/// Bernoulli polynomials `β_0..=β_M` together with the change-of-basis matrix.
#[derive(Debug, Clone)]
pub struct BernoulliBasis {
    degree: usize,
    q: Vec<Vec<BigRational>>,
    q_inv: Vec<Vec<BigRational>>,
    q_f64: Vec<Vec<f64>>,
    q_inv_f64: Vec<Vec<f64>>,
}

impl BernoulliBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(degree));
        }
        let b = bernoulli_numbers(degree);
        let q: Vec<Vec<BigRational>> = (0..=degree)
            .map(|m| {
                (0..=m)
                    .map(|i| BigRational::from_integer(binomial(m, i)) * &b[m - i])
                    .collect()
            })
            .collect();

        // Forward substitution for Q X = I; rows of X are stored up to the diagonal.
        let mut q_inv: Vec<Vec<BigRational>> = Vec::with_capacity(degree + 1);
        for i in 0..=degree {
            let mut row = Vec::with_capacity(i + 1);
            for j in 0..=i {
                let mut v = if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                };
                for k in j..i {
                    v -= &q[i][k] * &q_inv[k][j];
                }
                row.push(v);
            }
            q_inv.push(row);
        }

        let q_f64 = q.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let q_inv_f64 = q_inv
            .iter()
            .map(|r| r.iter().map(to_f64).collect())
            .collect();
        Ok(Self {
            degree,
            q,
            q_inv,
            q_f64,
            q_inv_f64,
        })
    }

    /// Degree bound `M`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `M + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact entry `Q[m][i]` (zero above the diagonal).
    pub fn q(&self, m: usize, i: usize) -> BigRational {
        if i > m {
            BigRational::zero()
        } else {
            self.q[m][i].clone()
        }
    }

    /// Exact entry of `Q^{-1}` (zero above the diagonal).
    pub fn q_inv(&self, m: usize, i: usize) -> BigRational {
        if i > m {
            BigRational::zero()
        } else {
            self.q_inv[m][i].clone()
        }
    }

    /// Row `m` of `Q` in floating point, lowest power first.
    pub fn q_row(&self, m: usize) -> &[f64] {
        &self.q_f64[m]
    }

    /// Row `m` of `Q^{-1}` in floating point.
    pub fn q_inv_row(&self, m: usize) -> &[f64] {
        &self.q_inv_f64[m]
    }

    /// `B(t)`; fails when `t` is outside `[0, 1]` beyond [`DOMAIN_TOLERANCE`].
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        if !(-DOMAIN_TOLERANCE..=1.0 + DOMAIN_TOLERANCE).contains(&t) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                domain: "[0, 1]",
            });
        }
        Ok(self.eval_unchecked(t))
    }

    /// `B(t)` without the domain check.
    pub fn eval_unchecked(&self, t: f64) -> Vec<f64> {
        self.q_f64
            .iter()
            .map(|row| row.iter().rev().fold(0.0, |acc, &c| acc * t + c))
            .collect()
    }
}
