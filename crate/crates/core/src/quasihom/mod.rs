//! Quasi-homogeneous weights `k` with `k . alpha = 1` on the support, the
//! Euler identity `sum_i k_i x_i d_i f = f`, and the integrability exponent
//! of `|f|^{-eps}` near the origin.

mod epsilon0;
pub mod univariate;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::lp::{self, LpOutcome};
use crate::poly::{PolyError, Polynomial};
use crate::rational::{self, Rational};

pub use epsilon0::{epsilon0, BoundaryExponent, Epsilon0Config, Epsilon0Result, FaceMethod};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuasiHomError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("no positive weights solve k . alpha = 1 on the support")]
    Infeasible,
    #[error("weights do not satisfy the Euler identity for this polynomial")]
    EulerFails,
    #[error("weights must be positive")]
    NonPositive,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("sublevel estimation failed: {0}")]
    Sublevel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightStatus {
    Unique,
    Underdetermined,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub status: WeightStatus,
    /// Empty when infeasible.
    #[serde(with = "rational::serde_rational_vec")]
    pub weights: Vec<Rational>,
    /// Directions `v` with `v . alpha = 0` on the support; the solution set
    /// is `weights + span(null_basis)` intersected with the positive orthant.
    #[serde(serialize_with = "serialize_basis")]
    pub null_basis: Vec<Vec<Rational>>,
}

fn serialize_basis<S: serde::Serializer>(b: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(b.len()))?;
    for v in b {
        seq.serialize_element(&v.iter().map(rational::format).collect::<Vec<_>>())?;
    }
    seq.end()
}

impl WeightVector {
    pub fn is_feasible(&self) -> bool {
        self.status != WeightStatus::Infeasible
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.weights)
    }

    fn infeasible() -> Self {
        WeightVector { status: WeightStatus::Infeasible, weights: Vec::new(), null_basis: Vec::new() }
    }

    /// Validates user-chosen weights against `f`.
    pub fn for_polynomial(f: &Polynomial, weights: Vec<Rational>) -> Result<Self, QuasiHomError> {
        if weights.len() != f.dim() {
            return Err(PolyError::DimensionMismatch { expected: f.dim(), got: weights.len() }.into());
        }
        if weights.iter().any(|k| !k.is_positive()) {
            return Err(QuasiHomError::NonPositive);
        }
        if !f.support().iter().all(|a| rational::dot_int(&weights, &a.0) == rational::int(1)) {
            return Err(QuasiHomError::EulerFails);
        }
        let null_basis = rational::null_space(&support_rows(f), f.dim());
        let status = if null_basis.is_empty() { WeightStatus::Unique } else { WeightStatus::Underdetermined };
        Ok(WeightVector { status, weights, null_basis })
    }

    /// Another positive member of an underdetermined family: a step half
    /// way to the positivity boundary along the first null direction.
    pub fn alternate(&self) -> Option<Vec<Rational>> {
        let v = self.null_basis.first()?;
        // Largest t > 0 with weights + t v > 0.
        let limit = self
            .weights
            .iter()
            .zip(v)
            .filter(|(_, vi)| vi.is_negative())
            .map(|(k, vi)| -(k / vi))
            .min();
        let t = limit.map_or_else(|| rational::int(1), |l| l / rational::int(2));
        Some(self.weights.iter().zip(v).map(|(k, vi)| k + &t * vi).collect())
    }
}

fn support_rows(f: &Polynomial) -> Vec<Vec<Rational>> {
    f.support()
        .iter()
        .map(|a| a.0.iter().map(|&e| rational::int(e)).collect())
        .collect()
}

/// Solves `k . alpha = 1` over the support with `k > 0`.
pub fn solve_weights(f: &Polynomial) -> Result<WeightVector, QuasiHomError> {
    if f.is_zero() {
        return Err(QuasiHomError::ZeroPolynomial);
    }
    let n = f.dim();
    let rows = support_rows(f);
    // Keep an independent subset of the rows.
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for r in &rows {
        basis.push(r.clone());
        if rational::rank(&basis) < basis.len() {
            basis.pop();
        }
    }
    let augmented: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(rational::int(1));
            r
        })
        .collect();
    if rational::rank(&augmented) > basis.len() {
        return Ok(WeightVector::infeasible());
    }
    let null_basis = rational::null_space(&rows, n);

    // Minimal-norm solution B^T (B B^T)^{-1} 1.
    let m = basis.len();
    let gram: Vec<Vec<Rational>> = (0..m)
        .map(|i| (0..m).map(|j| dot(&basis[i], &basis[j])).collect())
        .collect();
    let y = solve_square(&gram, &vec![rational::int(1); m]);
    let min_norm: Vec<Rational> = (0..n)
        .map(|c| (0..m).fold(Rational::zero(), |acc, i| acc + &basis[i][c] * &y[i]))
        .collect();

    let status = if null_basis.is_empty() { WeightStatus::Unique } else { WeightStatus::Underdetermined };
    if min_norm.iter().all(|k| k.is_positive()) {
        return Ok(WeightVector { status, weights: min_norm, null_basis });
    }
    if status == WeightStatus::Unique {
        return Ok(WeightVector::infeasible());
    }
    match max_min_weights(&rows, n) {
        Some(k) => Ok(WeightVector { status, weights: k, null_basis }),
        None => Ok(WeightVector::infeasible()),
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// Gaussian elimination for a nonsingular square system.
fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Vec<Rational> {
    let m = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut r = r.clone();
            r.push(v.clone());
            r
        })
        .collect();
    for c in 0..m {
        let p = (c..m).find(|&i| !aug[i][c].is_zero()).expect("nonsingular system");
        aug.swap(c, p);
        let pivot = aug[c][c].clone();
        for v in aug[c].iter_mut() {
            *v = &*v / &pivot;
        }
        for i in 0..m {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in c..=m {
                    let t = &aug[c][j] * &f;
                    aug[i][j] -= t;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[m].clone()).collect()
}

/// Maximizes `t` subject to `A k = 1`, `k_i >= t`; returns `k` when the
/// optimum is positive.
fn max_min_weights(rows: &[Vec<Rational>], n: usize) -> Option<Vec<Rational>> {
    // k = t 1 + u with u >= 0 and t = tp - tm.
    let vars = n + 2;
    let a_eq: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            let s = rational::sum(r);
            let mut row: Vec<Rational> = r.clone();
            row.push(s.clone());
            row.push(-s);
            row
        })
        .collect();
    let b_eq = vec![rational::int(1); rows.len()];
    let mut obj = vec![Rational::zero(); vars];
    obj[n] = rational::int(1);
    obj[n + 1] = rational::int(-1);
    match lp::maximize(&obj, &a_eq, &b_eq) {
        LpOutcome::Optimal { value, x } if value.is_positive() => {
            Some((0..n).map(|i| &x[i] + &value).collect())
        }
        _ => None,
    }
}

/// Whether `sum_i k_i x_i d_i f = f` holds exactly.
pub fn euler_check(f: &Polynomial, k: &[Rational]) -> Result<bool, QuasiHomError> {
    if k.len() != f.dim() {
        return Err(PolyError::DimensionMismatch { expected: f.dim(), got: k.len() }.into());
    }
    let mut lhs = Polynomial::zero(f.dim());
    for (i, ki) in k.iter().enumerate() {
        lhs = &lhs + &f.weighted_partial(i + 1)?.scale(ki);
    }
    Ok(&lhs == f)
}
