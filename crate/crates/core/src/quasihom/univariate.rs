//! Exact univariate polynomials over Q: square-free factorization and
//! Sturm root counting.

use num_traits::{One, Signed, Zero};

use crate::poly::Polynomial;
use crate::rational::Rational;

/// Coefficients, constant term first, with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UPoly(Vec<Rational>);

impl UPoly {
    pub fn new(mut c: Vec<Rational>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly(c)
    }

    /// Converts a one-variable polynomial with nonnegative exponents.
    pub fn from_polynomial(f: &Polynomial) -> Self {
        assert_eq!(f.dim(), 1);
        let deg = f.terms().map(|(a, _)| a.0[0]).max().unwrap_or(0);
        let mut c = vec![Rational::zero(); deg as usize + 1];
        for (a, v) in f.terms() {
            assert!(a.0[0] >= 0, "negative exponent");
            c[a.0[0] as usize] = v.clone();
        }
        UPoly::new(c)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree; the zero polynomial has degree `None`.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn lead(&self) -> &Rational {
        self.0.last().expect("nonzero polynomial")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> UPoly {
        UPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    fn monic(&self) -> UPoly {
        let l = self.lead().clone();
        UPoly(self.0.iter().map(|c| c / &l).collect())
    }

    fn sub(&self, o: &UPoly) -> UPoly {
        let n = self.0.len().max(o.0.len());
        UPoly::new(
            (0..n)
                .map(|i| {
                    self.0.get(i).cloned().unwrap_or_else(Rational::zero)
                        - o.0.get(i).cloned().unwrap_or_else(Rational::zero)
                })
                .collect(),
        )
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.0.clone();
        let mut q = vec![Rational::zero(); r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let f = r.last().unwrap() / d.lead();
            for (i, c) in d.0.iter().enumerate() {
                r[k + i] -= &f * c;
            }
            q[k] = f;
            r.pop();
            while r.last().is_some_and(|x| x.is_zero()) {
                r.pop();
            }
        }
        (UPoly::new(q), UPoly::new(r))
    }

    pub fn gcd(a: &UPoly, b: &UPoly) -> UPoly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Yun's algorithm: `self = c * prod_i a_i^i` with square-free, pairwise
    /// coprime `a_i`. Returns the nonconstant `(a_i, i)`.
    pub fn square_free(&self) -> Vec<(UPoly, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let d = self.derivative();
        let mut a = UPoly::gcd(self, &d);
        let mut b = self.div_rem(&a).0;
        let mut c = d.div_rem(&a).0;
        let mut i = 1;
        loop {
            let dd = c.sub(&b.derivative());
            a = UPoly::gcd(&b, &dd);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            b = b.div_rem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = dd.div_rem(&a).0;
            i += 1;
        }
        out
    }

    fn sturm_chain(&self) -> Vec<UPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        while !chain.last().unwrap().is_zero() {
            let n = chain.len();
            let r = chain[n - 2].div_rem(&chain[n - 1]).1;
            chain.push(UPoly(r.0.iter().map(|c| -c).collect()));
        }
        chain.pop();
        chain
    }

    fn sign_changes(chain: &[UPoly], x: &Rational) -> usize {
        let signs: Vec<bool> = chain
            .iter()
            .map(|p| p.eval(x))
            .filter(|v| !v.is_zero())
            .map(|v| v.is_positive())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Number of distinct real roots in the closed interval `[a, b]`.
    pub fn count_roots(&self, a: &Rational, b: &Rational) -> usize {
        if self.degree().unwrap_or(0) == 0 {
            return 0;
        }
        // Sturm counts distinct roots in (a, b] for any polynomial.
        let chain = self.sturm_chain();
        let inner = Self::sign_changes(&chain, a) - Self::sign_changes(&chain, b);
        inner + self.eval(a).is_zero() as usize
    }

    /// Largest multiplicity among the real roots in `[a, b]`, or `None`
    /// when there are none.
    pub fn max_root_multiplicity(&self, a: &Rational, b: &Rational) -> Option<u32> {
        self.square_free()
            .into_iter()
            .filter(|(q, _)| q.count_roots(a, b) > 0)
            .map(|(_, m)| m)
            .max()
    }
}

impl One for UPoly {
    fn one() -> Self {
        UPoly(vec![Rational::one()])
    }
}

impl std::ops::Mul for UPoly {
    type Output = UPoly;
    fn mul(self, o: UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly(Vec::new());
        }
        let mut c = vec![Rational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        UPoly::new(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn up(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn yun_factors() {
        // (x - 1)^2 (x + 2)^3 x
        let p = up(&[-1, 1]) * up(&[-1, 1]) * up(&[2, 1]) * up(&[2, 1]) * up(&[2, 1]) * up(&[0, 1]);
        let sf = p.square_free();
        let mults: Vec<u32> = sf.iter().map(|(_, m)| *m).collect();
        assert_eq!(mults, vec![1, 2, 3]);
        assert_eq!(sf[1].0, up(&[-1, 1]));
    }

    #[test]
    fn sturm_counts() {
        let p = up(&[-1, 0, 1]); // roots +-1
        assert_eq!(p.count_roots(&int(-1), &int(1)), 2);
        assert_eq!(p.count_roots(&rat(-1, 2), &rat(1, 2)), 0);
        assert_eq!(p.count_roots(&int(0), &int(5)), 1);
        assert_eq!(up(&[1, 0, 1]).count_roots(&int(-10), &int(10)), 0);
    }

    #[test]
    fn multiplicity_in_window() {
        // x^2 (x - 3)^5: the quintuple root is outside [-1, 1]
        let mut p = up(&[0, 0, 1]);
        for _ in 0..5 {
            p = p * up(&[-3, 1]);
        }
        assert_eq!(p.max_root_multiplicity(&int(-1), &int(1)), Some(2));
        assert_eq!(p.max_root_multiplicity(&int(-10), &int(10)), Some(5));
        assert_eq!(up(&[1, 0, 1]).max_root_multiplicity(&int(-1), &int(1)), None);
    }
}
