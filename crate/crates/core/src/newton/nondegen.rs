//! Numerical search for zeros of face gradients off the coordinate axes.
//!
//! Each compact face polynomial is quasi-homogeneous under its witness
//! normal, so a zero of `grad f_F` in the open torus can be rescaled onto
//! the shell `max_i |x_i| = 1`. The shell is covered by the pieces
//! `x_i = +-1`, `|x_j| <= 1`, split by the signs of the free coordinates.
//!
//! The search minimizes the scale-free quantity
//! `sigma(x) = |grad f_F(x)| / |T(x)|` where `T_i(x)` is the sum of absolute
//! values of the terms of `d f_F / d x_i`. For a monomial `sigma = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compact_faces, face_polynomial, build_newton, NewtonError, SupportSet};
use crate::poly::{CompiledPoly, Polynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyConfig {
    /// Grid points per free dimension on each shell piece.
    pub resolution: usize,
    /// Degenerate when `sigma` falls below this.
    pub threshold: f64,
    /// Nondegenerate when every face keeps `sigma` above this.
    pub margin: f64,
    pub rounds: usize,
    /// Cap on grid points per face; the resolution shrinks to fit.
    pub max_points: usize,
    /// Free coordinates are kept at least this far from the axes.
    pub axis_floor: f64,
}

impl Default for NondegeneracyConfig {
    fn default() -> Self {
        NondegeneracyConfig {
            resolution: 512,
            threshold: 1e-9,
            margin: 1e-6,
            rounds: 3,
            max_points: 1 << 21,
            axis_floor: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Nondegenerate,
    Degenerate,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub grad_norm: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceRecord {
    pub points: Vec<Vec<i64>>,
    pub dim: usize,
    pub min_sigma: f64,
    /// `|grad f_F|` at the minimizer of `sigma`.
    pub grad_norm_at_min: f64,
    pub argmin: Vec<f64>,
    pub witness: Option<Witness>,
    /// Set when the smallest `sigma` was only approached near an axis.
    pub axis_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub verdict: Verdict,
    pub faces: Vec<FaceRecord>,
    pub resolution: usize,
    pub threshold: f64,
    pub margin: f64,
}

impl NondegeneracyReport {
    /// The first degenerate face and its witness.
    pub fn witness(&self) -> Option<(&FaceRecord, &Witness)> {
        self.faces.iter().find_map(|f| f.witness.as_ref().map(|w| (f, w)))
    }
}

struct FaceGradient {
    n: usize,
    partials: Vec<CompiledPoly>,
}

impl FaceGradient {
    fn new(ff: &Polynomial) -> Self {
        FaceGradient { n: ff.dim(), partials: ff.gradient().iter().map(CompiledPoly::new).collect() }
    }

    fn grad_norm(&self, x: &[f64]) -> f64 {
        self.partials.iter().map(|p| p.eval(x).powi(2)).sum::<f64>().sqrt()
    }

    fn sigma(&self, x: &[f64]) -> f64 {
        let mut g = 0.0;
        let mut t = 0.0;
        for p in &self.partials {
            g += p.eval(x).powi(2);
            t += p.eval_abs_terms(x).powi(2);
        }
        if t == 0.0 {
            return if self.partials.iter().all(|p| p.is_zero()) { 0.0 } else { f64::INFINITY };
        }
        (g / t).sqrt()
    }
}

/// One piece of the shell: `x_axis = sign`, free coordinates with fixed
/// signs and magnitudes in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct ShellPiece {
    axis: usize,
    sign: f64,
    free_signs: u32,
}

impl ShellPiece {
    fn point(&self, n: usize, mags: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let mut k = 0;
        for i in 0..n {
            if i == self.axis {
                out.push(self.sign);
            } else {
                let s = if self.free_signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                out.push(s * mags[k]);
                k += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    sigma: f64,
    mags: Vec<f64>,
}

fn for_each_grid_point(dims: usize, res: usize, mut visit: impl FnMut(&[usize], &[f64])) {
    let mut idx = vec![0usize; dims];
    let mut mags = vec![0.5 / res as f64; dims];
    loop {
        visit(&idx, &mags);
        let mut k = 0;
        loop {
            if k == dims {
                return;
            }
            idx[k] += 1;
            if idx[k] < res {
                mags[k] = (idx[k] as f64 + 0.5) / res as f64;
                break;
            }
            idx[k] = 0;
            mags[k] = 0.5 / res as f64;
            k += 1;
        }
    }
}

const BLOCKS: usize = 8;
const KEEP: usize = 4;

fn search_piece(grad: &FaceGradient, piece: ShellPiece, res: usize, rounds: usize, floor: f64) -> Candidate {
    let n = grad.n;
    let dims = n - 1;
    let mut x = Vec::with_capacity(n);
    if dims == 0 {
        piece.point(n, &[], &mut x);
        return Candidate { sigma: grad.sigma(&x), mags: Vec::new() };
    }

    // Best point in each block of the grid.
    let blocks = BLOCKS.min(res);
    let mut best: Vec<Option<Candidate>> = vec![None; blocks.pow(dims as u32)];
    for_each_grid_point(dims, res, |idx, mags| {
        piece.point(n, mags, &mut x);
        let s = grad.sigma(&x);
        let b = idx.iter().rev().fold(0, |acc, &i| acc * blocks + i * blocks / res);
        if best[b].as_ref().map_or(true, |c| s < c.sigma) {
            best[b] = Some(Candidate { sigma: s, mags: mags.to_vec() });
        }
    });
    let mut cands: Vec<Candidate> = best.into_iter().flatten().collect();
    cands.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then_with(|| a.mags.partial_cmp(&b.mags).unwrap()));
    cands.truncate(KEEP);

    cands
        .into_iter()
        .map(|c| refine(grad, piece, c, 1.0 / res as f64, rounds, floor))
        .min_by(|a, b| a.sigma.total_cmp(&b.sigma))
        .expect("at least one candidate")
}

/// Zoomed local grids followed by a compass search.
fn refine(grad: &FaceGradient, piece: ShellPiece, mut c: Candidate, mut h: f64, rounds: usize, floor: f64) -> Candidate {
    let n = grad.n;
    let dims = c.mags.len();
    let mut x = Vec::with_capacity(n);
    let eval = |m: &[f64], x: &mut Vec<f64>| {
        piece.point(n, m, x);
        grad.sigma(x)
    };
    const HALF: usize = 5;
    for _ in 0..rounds {
        let center = c.mags.clone();
        let side = 2 * HALF + 1;
        let mut trial = center.clone();
        for flat in 0..side.pow(dims as u32) {
            let mut r = flat;
            for k in 0..dims {
                let off = (r % side) as f64 - HALF as f64;
                r /= side;
                trial[k] = (center[k] + off * h).clamp(floor, 1.0);
            }
            let s = eval(&trial, &mut x);
            if s < c.sigma {
                c = Candidate { sigma: s, mags: trial.clone() };
            }
        }
        h /= HALF as f64;
    }

    let mut step = h * HALF as f64;
    let mut iters = 0;
    while step > 1e-16 && iters < 2000 {
        iters += 1;
        let mut improved = false;
        for k in 0..dims {
            for dir in [-1.0, 1.0] {
                let mut trial = c.mags.clone();
                trial[k] = (trial[k] + dir * step).clamp(floor, 1.0);
                let s = eval(&trial, &mut x);
                if s < c.sigma {
                    c = Candidate { sigma: s, mags: trial };
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    c
}

/// Searches every compact face of `N(f)` for gradient zeros off the axes.
pub fn check_nondegenerate(f: &Polynomial, config: &NondegeneracyConfig) -> Result<NondegeneracyReport, NewtonError> {
    let nd = build_newton(&SupportSet::of_polynomial(f)?)?;
    let n = f.dim();
    let dims = n - 1;
    let pieces: Vec<ShellPiece> = (0..n)
        .flat_map(|axis| {
            [1.0, -1.0]
                .into_iter()
                .flat_map(move |sign| (0..1u32 << dims).map(move |free_signs| ShellPiece { axis, sign, free_signs }))
        })
        .collect();
    let mut res = config.resolution.max(1);
    if dims > 0 {
        let per_piece = (config.max_points / pieces.len()).max(1) as f64;
        let fit = per_piece.powf(1.0 / dims as f64).floor() as usize;
        res = res.min(fit.max(BLOCKS));
    } else {
        res = 1;
    }

    let faces = compact_faces(&nd);
    let mut records = Vec::with_capacity(faces.len());
    for face in &faces {
        let ff = face_polynomial(f, &face.points)?;
        let points = face.points.iter().map(|p| p.0.clone()).collect();
        if ff.len() == 1 {
            records.push(FaceRecord {
                points,
                dim: face.dim,
                min_sigma: 1.0,
                grad_norm_at_min: f64::NAN,
                argmin: Vec::new(),
                witness: None,
                axis_limited: false,
            });
            continue;
        }
        let grad = FaceGradient::new(&ff);
        let results: Vec<Candidate> = pieces
            .par_iter()
            .map(|&piece| {
                let mut c = search_piece(&grad, piece, res, config.rounds, config.axis_floor);
                let mut x = Vec::new();
                piece.point(n, &c.mags, &mut x);
                c.mags = x;
                c
            })
            .collect();
        let best = results
            .into_iter()
            .reduce(|a, b| if b.sigma < a.sigma { b } else { a })
            .expect("shell has pieces");
        let grad_norm = grad.grad_norm(&best.mags);
        let near_axis = best.mags.iter().any(|v| v.abs() <= config.axis_floor * (1.0 + 1e-9));
        let witness = (best.sigma < config.threshold)
            .then(|| Witness { point: best.mags.clone(), grad_norm, sigma: best.sigma });
        records.push(FaceRecord {
            points,
            dim: face.dim,
            min_sigma: best.sigma,
            grad_norm_at_min: grad_norm,
            argmin: best.mags,
            witness,
            axis_limited: near_axis && best.sigma <= config.margin,
        });
    }

    let verdict = if records.iter().any(|r| r.witness.is_some()) {
        Verdict::Degenerate
    } else if records.iter().all(|r| r.min_sigma > config.margin) {
        Verdict::Nondegenerate
    } else {
        Verdict::Inconclusive
    };
    Ok(NondegeneracyReport {
        verdict,
        faces: records,
        resolution: res,
        threshold: config.threshold,
        margin: config.margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn check(text: &str) -> NondegeneracyReport {
        let f = parse_polynomial(text, None).unwrap();
        check_nondegenerate(&f, &NondegeneracyConfig::default()).unwrap()
    }

    #[test]
    fn circle_is_nondegenerate() {
        let r = check("x1^2+x2^2");
        assert_eq!(r.verdict, Verdict::Nondegenerate);
        assert_eq!(r.resolution, 512);
    }

    #[test]
    fn square_of_difference_is_degenerate() {
        let r = check("(x1-x2)^2");
        assert_eq!(r.verdict, Verdict::Degenerate);
        let (_, w) = r.witness().unwrap();
        assert!(w.sigma < 1e-9);
        assert!((w.point[0] - w.point[1]).abs() < 1e-8, "{:?}", w.point);
        assert!((w.point[0].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn monomial_is_nondegenerate() {
        let r = check("x1^2*x2^2");
        assert_eq!(r.verdict, Verdict::Nondegenerate);
        assert_eq!(r.faces.len(), 1);
    }

    #[test]
    fn cubic_edge_with_interior_root() {
        // f_F = (x1 - 2 x2)^2 (x1 + x2) on the edge.
        let r = check("(x1-2*x2)^2*(x1+x2)");
        assert_eq!(r.verdict, Verdict::Degenerate);
        let (_, w) = r.witness().unwrap();
        assert!((w.point[0] - 2.0 * w.point[1]).abs() < 1e-7, "{:?}", w.point);
    }

    #[test]
    fn three_variables() {
        assert_eq!(check("x1^2+x2^2+x3^2").verdict, Verdict::Nondegenerate);
        let r = check("(x1-x2)^2+x3^4");
        assert_eq!(r.verdict, Verdict::Degenerate, "{:#?}", r.faces);
    }

    #[test]
    fn one_variable() {
        assert_eq!(check("x1^3").verdict, Verdict::Nondegenerate);
    }
}
