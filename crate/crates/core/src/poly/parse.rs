//! Text and JSON input for phase polynomials.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr     := sign? term (('+' | '-') sign? term)*
//! term     := factor ('*' factor)*
//! factor   := rational | var ('^' uint)? | '(' expr ')' ('^' uint)?
//! rational := uint ('/' uint)?
//! var      := 'x' uint | 'x' | 'y' | 'z'
//! ```
//!
//! `x`, `y`, `z` are aliases for `x1`, `x2`, `x3`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Deserialize;
use thiserror::Error;

use super::{ExponentVector, Polynomial};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    NegativeExponent,
    FractionalExponent,
    VariableIndexZero,
    ZeroDenominator,
    ExponentTooLarge,
    BadJson(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {kind:?}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

/// Intermediate result: terms keyed by 1-based variable index so the
/// final dimension is known only after the whole input is read.
#[derive(Clone)]
struct Sparse(Vec<(Vec<(usize, i64)>, Rational)>);

impl Sparse {
    fn constant(c: Rational) -> Self {
        Sparse(vec![(Vec::new(), c)])
    }

    fn max_var(&self) -> usize {
        self.0
            .iter()
            .flat_map(|(m, _)| m.iter().map(|(v, _)| *v))
            .max()
            .unwrap_or(0)
    }

    fn mul(&self, other: &Sparse) -> Sparse {
        let mut out = Vec::with_capacity(self.0.len() * other.0.len());
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let mut m = ma.clone();
                m.extend_from_slice(mb);
                out.push((m, ca * cb));
            }
        }
        Sparse(out)
    }

    fn neg(mut self) -> Sparse {
        for (_, c) in &mut self.0 {
            *c = -c.clone();
        }
        self
    }

    fn into_polynomial(self, n: usize) -> Polynomial {
        Polynomial::from_terms(
            n,
            self.0.into_iter().map(|(m, c)| {
                let mut e = vec![0i64; n];
                for (v, p) in m {
                    e[v - 1] += p;
                }
                (ExponentVector(e), c)
            }),
        )
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

const MAX_EXPONENT: u64 = 4096;

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { kind, position: self.pos }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    /// Digits, with interior whitespace ignored.
    fn uint(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        let mut digits = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                digits.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if digits.is_empty() {
            self.pos = start;
            return Err(match self.peek() {
                Some(c) => self.err(ParseErrorKind::UnexpectedChar(c)),
                None => self.err(ParseErrorKind::UnexpectedEnd),
            });
        }
        Ok(digits.parse().expect("ascii digits"))
    }

    fn exponent(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some('-') => return Err(self.err(ParseErrorKind::NegativeExponent)),
            Some('+') => {
                self.bump();
            }
            _ => {}
        }
        let at = self.pos;
        let e = self.uint()?;
        if matches!(self.peek(), Some('/') | Some('.')) {
            return Err(self.err(ParseErrorKind::FractionalExponent));
        }
        let e: u64 = e.try_into().map_err(|_| ParseError {
            kind: ParseErrorKind::ExponentTooLarge,
            position: at,
        })?;
        if e > MAX_EXPONENT {
            return Err(ParseError { kind: ParseErrorKind::ExponentTooLarge, position: at });
        }
        Ok(e as u32)
    }

    fn expr(&mut self) -> Result<Sparse, ParseError> {
        let mut acc = Vec::new();
        let mut negate = false;
        match self.peek() {
            Some('-') => {
                self.bump();
                negate = true;
            }
            Some('+') => {
                self.bump();
            }
            _ => {}
        }
        loop {
            // A sign directly after a binary operator, as in `a + -b`.
            match self.peek() {
                Some('-') => {
                    self.bump();
                    negate = !negate;
                }
                Some('+') => {
                    self.bump();
                }
                _ => {}
            }
            let t = self.term()?;
            acc.extend(if negate { t.neg() } else { t }.0);
            match self.peek() {
                Some('+') => {
                    self.bump();
                    negate = false;
                }
                Some('-') => {
                    self.bump();
                    negate = true;
                }
                _ => break,
            }
        }
        Ok(Sparse(acc))
    }

    fn term(&mut self) -> Result<Sparse, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.bump();
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Sparse, ParseError> {
        match self.peek() {
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(c) if c.is_ascii_digit() => {
                let num = self.uint()?;
                let den = if self.peek() == Some('/') {
                    self.bump();
                    let at = self.pos;
                    let d = self.uint()?;
                    if d.is_zero() {
                        return Err(ParseError { kind: ParseErrorKind::ZeroDenominator, position: at });
                    }
                    d
                } else {
                    BigInt::one()
                };
                if self.peek() == Some('.') {
                    return Err(self.err(ParseErrorKind::UnexpectedChar('.')));
                }
                Ok(Sparse::constant(Rational::new(num, den)))
            }
            Some('x') | Some('y') | Some('z') => {
                let at = self.pos;
                let c = self.bump().expect("peeked");
                let index = if c == 'x' && self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    let idx = self.uint()?;
                    if idx.is_zero() {
                        return Err(ParseError { kind: ParseErrorKind::VariableIndexZero, position: at });
                    }
                    usize::try_from(idx).map_err(|_| ParseError {
                        kind: ParseErrorKind::ExponentTooLarge,
                        position: at,
                    })?
                } else {
                    match c {
                        'x' => 1,
                        'y' => 2,
                        _ => 3,
                    }
                };
                let power = if self.peek() == Some('^') {
                    self.bump();
                    self.exponent()?
                } else {
                    1
                };
                Ok(Sparse(vec![(vec![(index, power as i64)], Rational::one())]))
            }
            Some('(') => {
                self.bump();
                let inner = self.expr()?;
                match self.bump() {
                    Some(')') => {}
                    Some(c) => {
                        self.pos -= c.len_utf8();
                        return Err(self.err(ParseErrorKind::UnexpectedChar(c)));
                    }
                    None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
                }
                if self.peek() == Some('^') {
                    self.bump();
                    let e = self.exponent()?;
                    let mut acc = Sparse::constant(Rational::one());
                    for _ in 0..e {
                        acc = acc.mul(&inner);
                        // Merge like terms as we go so powers stay small.
                        let n = acc.max_var().max(1);
                        let merged = acc.into_polynomial(n);
                        acc = Sparse(
                            merged
                                .terms()
                                .map(|(a, c)| {
                                    let m = a
                                        .0
                                        .iter()
                                        .enumerate()
                                        .filter(|(_, &p)| p != 0)
                                        .map(|(i, &p)| (i + 1, p))
                                        .collect();
                                    (m, c.clone())
                                })
                                .collect(),
                        );
                    }
                    Ok(acc)
                } else {
                    Ok(inner)
                }
            }
            Some(c) => Err(self.err(ParseErrorKind::UnexpectedChar(c))),
        }
    }
}

/// Parses the text grammar. The dimension is the larger of the highest
/// variable index seen and `dimension_hint` (and at least one).
pub fn parse_polynomial(text: &str, dimension_hint: Option<usize>) -> Result<Polynomial, ParseError> {
    let mut parser = Parser { src: text, pos: 0 };
    let sparse = parser.expr()?;
    if let Some(c) = parser.peek() {
        return Err(parser.err(ParseErrorKind::UnexpectedChar(c)));
    }
    let n = sparse.max_var().max(dimension_hint.unwrap_or(0)).max(1);
    Ok(sparse.into_polynomial(n))
}

#[derive(Deserialize)]
struct JsonTerm {
    coeff: serde_json::Value,
    alpha: Vec<i64>,
}

#[derive(Deserialize)]
struct JsonPoly {
    n: usize,
    terms: Vec<JsonTerm>,
}

/// Parses `{"n": int, "terms": [{"coeff": "p/q", "alpha": [ints]}]}`.
/// Coefficients may also be JSON integers.
pub fn parse_polynomial_json(text: &str) -> Result<Polynomial, ParseError> {
    let bad = |msg: String| ParseError { kind: ParseErrorKind::BadJson(msg), position: 0 };
    let doc: JsonPoly = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.n == 0 {
        return Err(bad("n must be at least 1".into()));
    }
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        if t.alpha.len() != doc.n {
            return Err(bad(format!("term {i}: alpha has length {}, expected {}", t.alpha.len(), doc.n)));
        }
        if t.alpha.iter().any(|&e| e < 0) {
            return Err(ParseError { kind: ParseErrorKind::NegativeExponent, position: 0 });
        }
        let coeff = match &t.coeff {
            serde_json::Value::String(s) => {
                if let Some((_, d)) = s.split_once('/') {
                    if d.trim().parse::<BigInt>().is_ok_and(|d| d.is_zero()) {
                        return Err(ParseError { kind: ParseErrorKind::ZeroDenominator, position: 0 });
                    }
                }
                rational::parse(s).ok_or_else(|| bad(format!("term {i}: bad coefficient {s:?}")))?
            }
            serde_json::Value::Number(num) => {
                let v = num
                    .as_i64()
                    .ok_or_else(|| bad(format!("term {i}: non-integer numeric coefficient; use \"p/q\"")))?;
                rational::int(v)
            }
            other => return Err(bad(format!("term {i}: bad coefficient {other}"))),
        };
        terms.push((ExponentVector(t.alpha), coeff));
    }
    Ok(Polynomial::from_terms(doc.n, terms))
}
