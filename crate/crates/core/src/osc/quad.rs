//! Dense trapezoid quadrature for `int e^{i Phi(x)} phi(x) dx`.
//!
//! The amplitude vanishes on the boundary of its support box, so the
//! trapezoid rule is just `h^n` times the sum over interior nodes. Each pass
//! also sums the even-index subgrid, which is the same rule at step `2h`;
//! the difference of the two is the error estimate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cutoff::Amplitude;
use crate::poly::CompiledPoly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    /// Largest phase increment per step, in radians.
    pub theta: f64,
    /// Accept when `|I_h - I_2h| < tol (|I_h| + 1/|lambda|)`.
    pub tol: f64,
    pub min_points: usize,
    /// Budget on interior nodes per pass.
    pub max_points: u64,
    pub max_halvings: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { theta: 0.5, tol: 1e-6, min_points: 64, max_points: 2_000_000_000, max_halvings: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Grid {
    lo: Vec<f64>,
    h: Vec<f64>,
    /// Intervals per dimension (even).
    pub(crate) counts: Vec<usize>,
}

impl Grid {
    /// Step `h_k <= theta / grad_bound` on `[-r_k, r_k]`.
    pub(crate) fn new(radius: &[f64], grad_bound: f64, cfg: &QuadConfig) -> Grid {
        let counts = radius
            .iter()
            .map(|r| {
                let need = (2.0 * r * grad_bound / cfg.theta).ceil();
                let m = if need.is_finite() { (need as usize).max(cfg.min_points) } else { usize::MAX / 4 };
                m + m % 2
            })
            .collect();
        Grid::with_counts(radius, counts)
    }

    fn with_counts(radius: &[f64], counts: Vec<usize>) -> Grid {
        let lo = radius.iter().map(|r| -r).collect();
        let h = radius.iter().zip(&counts).map(|(r, &c)| 2.0 * r / c as f64).collect();
        Grid { lo, h, counts }
    }

    pub(crate) fn refined(&self) -> Grid {
        let radius: Vec<f64> = self.lo.iter().map(|l| -l).collect();
        Grid::with_counts(&radius, self.counts.iter().map(|c| 2 * c).collect())
    }

    pub(crate) fn interior_points(&self) -> u64 {
        self.counts.iter().fold(1u64, |acc, &c| acc.saturating_mul(c.saturating_sub(1) as u64))
    }

    #[inline]
    fn x(&self, k: usize, j: usize) -> f64 {
        self.lo[k] + j as f64 * self.h[k]
    }

    fn cell(&self) -> f64 {
        self.h.iter().product()
    }
}

/// Pairwise sum of per-row partial sums in index order.
fn pairwise(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
    }
}

/// Sums `int e^{i lambda (f + b . x)} phi` at steps `h` and `2h` for every
/// direction `b`, sharing the evaluation of `e^{i lambda f} phi`.
pub(crate) fn batch_sums(
    f: &CompiledPoly,
    phi: &dyn Amplitude,
    lambda: f64,
    dirs: &[Vec<f64>],
    grid: &Grid,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.counts.len();
    let nd = dirs.len();
    // tables[k][d][j] = e^{i lambda b_k x_{k,j}}
    let tables: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|k| {
            dirs.iter()
                .map(|b| (0..=grid.counts[k]).map(|j| Complex64::cis(lambda * b[k] * grid.x(k, j))).collect())
                .collect()
        })
        .collect();
    let last = n - 1;
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = (1..grid.counts[0])
        .into_par_iter()
        .map(|i| {
            let zero = Complex64::new(0.0, 0.0);
            let mut fine = vec![zero; nd];
            let mut coarse = vec![zero; nd];
            let mut x = vec![0.0; n];
            x[0] = grid.x(0, i);
            if n == 1 {
                let a = phi.eval(&x);
                if a != 0.0 {
                    let base = Complex64::cis(lambda * f.eval(&x)) * a;
                    for d in 0..nd {
                        fine[d] = base * tables[0][d][i];
                    }
                }
            } else {
                let mut line = vec![zero; grid.counts[last] + 1];
                let mid: Vec<usize> = (1..last).collect();
                let mut idx = vec![1usize; mid.len()];
                loop {
                    for (m, &k) in mid.iter().enumerate() {
                        x[k] = grid.x(k, idx[m]);
                    }
                    // Nonzero span of the line, as [lo, hi).
                    let (mut lo, mut hi) = (usize::MAX, 0);
                    for j in 1..grid.counts[last] {
                        x[last] = grid.x(last, j);
                        let a = phi.eval(&x);
                        line[j] = if a != 0.0 {
                            lo = lo.min(j);
                            hi = j + 1;
                            Complex64::cis(lambda * f.eval(&x)) * a
                        } else {
                            zero
                        };
                    }
                    if hi > 0 {
                        let (odd0, even0) = if lo % 2 == 1 { (lo, lo + 1) } else { (lo + 1, lo) };
                        let mid_even = idx.iter().all(|v| v % 2 == 0);
                        for d in 0..nd {
                            let t = &tables[last][d];
                            let mut so = zero;
                            let mut sc = zero;
                            for j in (odd0..hi).step_by(2) {
                                so += line[j] * t[j];
                            }
                            for j in (even0..hi).step_by(2) {
                                sc += line[j] * t[j];
                            }
                            let sf = so + sc;
                            let mut p = Complex64::new(1.0, 0.0);
                            for (m, &k) in mid.iter().enumerate() {
                                p *= tables[k][d][idx[m]];
                            }
                            fine[d] += p * sf;
                            if mid_even {
                                coarse[d] += p * sc;
                            }
                        }
                    }
                    // Advance the odometer over the middle dimensions.
                    let mut m = 0;
                    loop {
                        if m == mid.len() {
                            break;
                        }
                        idx[m] += 1;
                        if idx[m] < grid.counts[mid[m]] {
                            break;
                        }
                        idx[m] = 1;
                        m += 1;
                    }
                    if m == mid.len() {
                        break;
                    }
                }
                for d in 0..nd {
                    fine[d] *= tables[0][d][i];
                    coarse[d] *= tables[0][d][i];
                }
            }
            if i % 2 == 1 {
                coarse.iter_mut().for_each(|c| *c = zero);
            } else if n == 1 {
                coarse.copy_from_slice(&fine);
            }
            (fine, coarse)
        })
        .collect();
    let cell = grid.cell();
    let coarse_cell = cell * (1u64 << n) as f64;
    let mut out_f = Vec::with_capacity(nd);
    let mut out_c = Vec::with_capacity(nd);
    for d in 0..nd {
        let col_f: Vec<Complex64> = rows.iter().map(|r| r.0[d]).collect();
        let col_c: Vec<Complex64> = rows.iter().map(|r| r.1[d]).collect();
        out_f.push(pairwise(&col_f) * cell);
        out_c.push(pairwise(&col_c) * coarse_cell);
    }
    (out_f, out_c)
}

/// The same two sums for an arbitrary phase `Phi`, evaluated pointwise.
pub(crate) fn direct_sums(phase: &(dyn Fn(&[f64]) -> f64 + Sync), phi: &dyn Amplitude, grid: &Grid) -> (Complex64, Complex64) {
    let n = grid.counts.len();
    let rows: Vec<(Complex64, Complex64)> = (1..grid.counts[0])
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; n];
            let mut idx = vec![1usize; n];
            idx[0] = i;
            let (mut sf, mut sc) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            loop {
                for k in 0..n {
                    x[k] = grid.x(k, idx[k]);
                }
                let a = phi.eval(&x);
                if a != 0.0 {
                    let v = Complex64::cis(phase(&x)) * a;
                    sf += v;
                    if idx.iter().all(|j| j % 2 == 0) {
                        sc += v;
                    }
                }
                let mut k = n - 1;
                loop {
                    if k == 0 {
                        return (sf, sc);
                    }
                    idx[k] += 1;
                    if idx[k] < grid.counts[k] {
                        break;
                    }
                    idx[k] = 1;
                    k -= 1;
                }
            }
        })
        .collect();
    let f: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
    let c: Vec<Complex64> = rows.iter().map(|r| r.1).collect();
    let cell = grid.cell();
    (pairwise(&f) * cell, pairwise(&c) * cell * (1u64 << n) as f64)
}

/// `max |grad f|` over the box `[-r, r]`, from a grid including the corners.
pub(crate) fn gradient_bound(grad: &[CompiledPoly], radius: &[f64]) -> f64 {
    let n = radius.len();
    let per = match n {
        1 => 1025,
        2 => 129,
        _ => 33,
    };
    let total = (per as u64).pow(n as u32);
    let mut x = vec![0.0; n];
    let mut best: f64 = 0.0;
    for flat in 0..total {
        let mut r = flat;
        for k in 0..n {
            let j = (r % per as u64) as f64;
            r /= per as u64;
            x[k] = -radius[k] + 2.0 * radius[k] * j / (per - 1) as f64;
        }
        let g: f64 = grad.iter().map(|p| p.eval(&x).powi(2)).sum::<f64>().sqrt();
        best = best.max(g);
    }
    best
}
