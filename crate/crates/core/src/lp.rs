//! Exact two-phase simplex on a small dense rational tableau.
//!
//! Solves `maximize c.x subject to A x = b, x >= 0`. Bland's rule is used
//! for both the entering and leaving choice, so the method terminates on
//! degenerate problems.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs, one per column.
    reduced: Vec<Rational>,
    /// Current objective value.
    value: Rational,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        self.rhs[r] = &self.rhs[r] / &p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v -= &f * pr;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        let f = self.reduced[c].clone();
        if !f.is_zero() {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v -= &f * pr;
                }
            }
            self.value += &f * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations over the first `active` columns.
    /// Returns false if the objective is unbounded.
    fn optimize(&mut self, active: usize) -> bool {
        loop {
            let Some(enter) = (0..active).find(|&j| self.reduced[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Maximizes `objective . x` over `{x >= 0 : a_eq x = b_eq}`.
pub fn maximize(objective: &[Rational], a_eq: &[Vec<Rational>], b_eq: &[Rational]) -> LpOutcome {
    let n = objective.len();
    let m = a_eq.len();
    assert_eq!(b_eq.len(), m);
    assert!(a_eq.iter().all(|r| r.len() == n));

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (row, b) in a_eq.iter().zip(b_eq) {
        let flip = b.is_negative();
        let mut full: Vec<Rational> = row.iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        for k in 0..m {
            full.push(if k == rows.len() { Rational::from_integer(1.into()) } else { Rational::zero() });
        }
        rows.push(full);
        rhs.push(if flip { -b.clone() } else { b.clone() });
    }

    // Phase one: maximize -(sum of artificials).
    let mut reduced = vec![Rational::zero(); n + m];
    for j in 0..n {
        reduced[j] = rows.iter().fold(Rational::zero(), |acc, r| acc + &r[j]);
    }
    let value = -rhs.iter().fold(Rational::zero(), |acc, b| acc + b);
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect(), reduced, value };
    t.optimize(n + m);
    if !t.value.is_zero() {
        return LpOutcome::Infeasible;
    }

    // Drive zero-valued artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    for r in t.rows.iter_mut() {
        r.truncate(n);
    }

    // Phase two.
    let mut reduced: Vec<Rational> = objective.to_vec();
    let mut value = Rational::zero();
    for (r, &b) in t.basis.iter().enumerate() {
        let cb = &objective[b];
        if cb.is_zero() {
            continue;
        }
        for j in 0..n {
            reduced[j] -= cb * &t.rows[r][j];
        }
        value += cb * &t.rhs[r];
    }
    t.reduced = reduced;
    t.value = value;
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (r, &b) in t.basis.iter().enumerate() {
        x[b] = t.rhs[r].clone();
    }
    LpOutcome::Optimal { value: t.value, x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn small_maximization() {
        // max x + y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let c = vec![int(1), int(1), int(0), int(0)];
        let a = vec![vec![int(1), int(2), int(1), int(0)], vec![int(3), int(1), int(0), int(1)]];
        let b = vec![int(4), int(6)];
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, rat(14, 5));
                assert_eq!(x[0], rat(8, 5));
                assert_eq!(x[1], rat(6, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0
        let out = maximize(&[int(0), int(0)], &[vec![int(1), int(1)]], &[int(-1)]);
        assert_eq!(out, LpOutcome::Infeasible);
        // max x s.t. x - y = 0
        let out = maximize(&[int(1), int(0)], &[vec![int(1), int(-1)]], &[int(0)]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        let out = maximize(&[int(1), int(0)], &a, &[int(3), int(6)]);
        assert_eq!(out, LpOutcome::Optimal { value: int(3), x: vec![int(3), int(0)] });
    }
}
