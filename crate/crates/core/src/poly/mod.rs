//! Exact multivariate polynomials over the rationals.
//!
//! A [`Polynomial`] stores its terms in a `BTreeMap` keyed by exponent
//! vector, so iteration (and therefore floating-point evaluation) always
//! visits terms in the same lexicographic order. Zero coefficients are never
//! stored; the zero polynomial is the empty map.

mod eval;
mod parse;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

pub use eval::{flow_ratio, weighted_scale, CompiledPoly, FlowRatio};
pub use parse::{parse_polynomial, parse_polynomial_json, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: polynomial has {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("point lies on the coordinate hyperplane x{axis} = 0")]
    OnCoordinateHyperplane { axis: usize },
    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),
}

/// Multi-index `alpha`; entries may be negative for shifted supports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentVector(pub Vec<i64>);

impl ExponentVector {
    pub fn new(exponents: Vec<i64>) -> Self {
        assert!(!exponents.is_empty(), "exponent vectors need n >= 1");
        ExponentVector(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&e| e >= 0)
    }

    pub fn total_degree(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Adds `b` to every coordinate.
    pub fn shift(&self, b: i64) -> ExponentVector {
        ExponentVector(self.0.iter().map(|a| a + b).collect())
    }
}

impl From<Vec<i64>> for ExponentVector {
    fn from(v: Vec<i64>) -> Self {
        ExponentVector::new(v)
    }
}

/// A point of R^n with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, PolyError> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite(i));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<ExponentVector, Rational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "polynomials need n >= 1");
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Self::monomial(n, ExponentVector::zeros(n), c)
    }

    /// The coordinate function `x_i` (0-based `i`).
    pub fn var(n: usize, i: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        Self::monomial(n, ExponentVector(alpha), Rational::one())
    }

    pub fn monomial(n: usize, alpha: ExponentVector, c: Rational) -> Self {
        assert_eq!(alpha.dim(), n, "exponent vector length must equal n");
        let mut p = Self::zero(n);
        if !c.is_zero() {
            p.terms.insert(alpha, c);
        }
        p
    }

    /// Builds a polynomial, merging repeated exponent vectors.
    pub fn from_terms<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (ExponentVector, Rational)>,
    {
        let mut p = Self::zero(n);
        for (alpha, c) in terms {
            p.add_term(alpha, c);
        }
        p
    }

    fn add_term(&mut self, alpha: ExponentVector, c: Rational) {
        assert_eq!(alpha.dim(), self.n, "exponent vector length must equal n");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, alpha: &ExponentVector) -> Rational {
        self.terms.get(alpha).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> Vec<ExponentVector> {
        self.terms.keys().cloned().collect()
    }

    /// Largest total degree among the terms, or `None` for zero.
    pub fn degree(&self) -> Option<i64> {
        self.terms.keys().map(|a| a.total_degree()).max()
    }

    /// Returns a copy with the dimension raised to `n` (new variables absent).
    pub fn with_dim(&self, n: usize) -> Polynomial {
        assert!(n >= self.n);
        Polynomial::from_terms(
            n,
            self.terms.iter().map(|(a, c)| {
                let mut e = a.0.clone();
                e.resize(n, 0);
                (ExponentVector(e), c.clone())
            }),
        )
    }

    pub fn scale(&self, k: &Rational) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, Rational::one());
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Exact partial derivative in the 1-based variable `i`.
    pub fn partial_derivative(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i == 0 || i > self.n {
            return Err(PolyError::IndexOutOfRange { index: i, dim: self.n });
        }
        let k = i - 1;
        Ok(Polynomial::from_terms(
            self.n,
            self.terms.iter().filter(|(a, _)| a.0[k] != 0).map(|(a, c)| {
                let mut e = a.0.clone();
                let power = e[k];
                e[k] -= 1;
                (ExponentVector(e), c * BigInt::from(power))
            }),
        ))
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (1..=self.n)
            .map(|i| self.partial_derivative(i).expect("index in range"))
            .collect()
    }

    /// `x_i * d f / d x_i` for the 1-based variable `i`.
    pub fn weighted_partial(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i == 0 || i > self.n {
            return Err(PolyError::IndexOutOfRange { index: i, dim: self.n });
        }
        let k = i - 1;
        Ok(Polynomial::from_terms(
            self.n,
            self.terms
                .iter()
                .map(|(a, c)| (a.clone(), c * BigInt::from(a.0[k]))),
        ))
    }

    /// Keeps only the terms whose exponent vectors satisfy `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(&ExponentVector) -> bool) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| keep(a))
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    /// Substitutes the rational `value` for the 1-based variable `i` and
    /// drops that variable. Requires `n >= 2`.
    pub fn restrict(&self, i: usize, value: &Rational) -> Result<Polynomial, PolyError> {
        if i == 0 || i > self.n {
            return Err(PolyError::IndexOutOfRange { index: i, dim: self.n });
        }
        assert!(self.n >= 2, "cannot drop the only variable");
        let k = i - 1;
        Ok(Polynomial::from_terms(
            self.n - 1,
            self.terms.iter().map(|(a, c)| {
                let mut e = a.0.clone();
                let power = e.remove(k);
                let factor = if power >= 0 {
                    num_traits::pow(value.clone(), power as usize)
                } else {
                    num_traits::pow(value.recip(), (-power) as usize)
                };
                (ExponentVector(e), c * factor)
            }),
        ))
    }

    /// True when the polynomial has a constant or a degree-one term, i.e.
    /// when `f(0) != 0` or `grad f(0) != 0`.
    pub fn standing_assumption_violation(&self) -> Option<StandingAssumption> {
        if self.terms.keys().any(|a| a.0.iter().all(|&e| e == 0)) {
            return Some(StandingAssumption::ValueAtOrigin);
        }
        if self.terms.keys().any(|a| a.total_degree() == 1 && a.is_nonnegative()) {
            return Some(StandingAssumption::GradientAtOrigin);
        }
        None
    }

    /// Evaluates at `x` in floating point, summing terms in sorted order.
    pub fn evaluate(&self, x: &Point) -> Result<f64, PolyError> {
        CompiledPoly::new(self).eval_checked(x.coords())
    }

    fn combine(&self, other: &Polynomial, sign: i64) -> Polynomial {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        let s = rational::int(sign);
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c * &s);
        }
        out
    }
}

/// The two standing assumptions on a phase at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandingAssumption {
    ValueAtOrigin,
    GradientAtOrigin,
}

impl fmt::Display for StandingAssumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StandingAssumption::ValueAtOrigin => write!(f, "f(0) = 0 is required (constant term present)"),
            StandingAssumption::GradientAtOrigin => {
                write!(f, "\u{2207}f(0) = 0 is required (linear term present)")
            }
        }
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, -1)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&rational::int(-1))
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let mut out = Polynomial::zero(self.n);
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                out.add_term(a.add(b), c * d);
            }
        }
        out
    }
}

impl fmt::Display for Polynomial {
    /// Prints in the input grammar, so the output parses back exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (alpha, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            match (idx, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = alpha.0.iter().all(|&e| e == 0);
            if !mag.is_one() || is_const {
                factors.push(rational::format(&mag));
            }
            for (i, &e) in alpha.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
