//! Oscillatory integrals `I(lambda) = int e^{i lambda (f + b . x)} phi dx`,
//! the graph-measure transform `mu(l_1..l_n, l_{n+1})`, decay ladders and
//! their fits.

mod cutoff;
mod quad;
mod regions;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{self, DecayFit, FitError, FitKind};
use crate::poly::{CompiledPoly, Polynomial};
use quad::Grid;

pub use cutoff::{Amplitude, CutoffFamily, CutoffSpec, CutoffSum};
pub use quad::QuadConfig;
pub use regions::{d1_ladder, dyadic_count, measure_d1, region_index, D1Ladder, D1Measure, Region, Regions};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscError {
    #[error("quadrature supports n <= {MAX_DIM}, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: phase has {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid probe: {0}")]
    BadProbe(String),
    #[error("invalid ladder: {0}")]
    BadLadder(String),
    #[error("invalid cutoff: {0}")]
    BadCutoff(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
}

/// Phase `lambda (f(x) + b . x)` with `|b| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub lambda: f64,
    pub b: Vec<f64>,
}

impl DecayProbe {
    pub fn new(lambda: f64, b: Vec<f64>) -> Result<Self, OscError> {
        if !lambda.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(OscError::BadProbe("non-finite parameter".into()));
        }
        if norm(&b) > 1.0 + 1e-12 {
            return Err(OscError::BadProbe(format!("|b| = {} exceeds 1", norm(&b))));
        }
        Ok(DecayProbe { lambda, b })
    }

    pub fn oscillatory(n: usize, lambda: f64) -> Self {
        DecayProbe { lambda, b: vec![0.0; n] }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub probe: DecayProbe,
    pub re: f64,
    pub im: f64,
    /// `|I_h - I_2h|` at the accepted step.
    pub error: f64,
    /// Intervals per dimension at the accepted step.
    pub resolution: Vec<usize>,
    pub converged: bool,
}

impl DecaySample {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn abs(&self) -> f64 {
        self.value().norm()
    }
}

fn accepted(fine: Complex64, coarse: Complex64, lambda: f64, tol: f64) -> bool {
    (fine - coarse).norm() < tol * (fine.norm() + 1.0 / lambda.abs().max(1.0))
}

type Resolved = (Complex64, f64, Vec<usize>, bool);

/// Runs passes, halving the step until every value in the batch is
/// accepted or the budget is spent.
fn refine<F>(mut grid: Grid, lambda: f64, cfg: &QuadConfig, count: usize, mut pass: F) -> Vec<Resolved>
where
    F: FnMut(&Grid) -> (Vec<Complex64>, Vec<Complex64>),
{
    if grid.interior_points() > cfg.max_points {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        return (0..count).map(|_| (nan, f64::NAN, grid.counts.clone(), false)).collect();
    }
    let mut out: Vec<Option<Resolved>> = vec![None; count];
    let mut halvings = 0;
    loop {
        let (fine, coarse) = pass(&grid);
        let last = halvings >= cfg.max_halvings || grid.refined().interior_points() > cfg.max_points;
        for d in 0..count {
            if out[d].is_some() {
                continue;
            }
            let ok = accepted(fine[d], coarse[d], lambda, cfg.tol);
            if ok || last {
                out[d] = Some((fine[d], (fine[d] - coarse[d]).norm(), grid.counts.clone(), ok));
            }
        }
        if out.iter().all(Option::is_some) {
            break;
        }
        grid = grid.refined();
        halvings += 1;
    }
    out.into_iter().flatten().collect()
}

/// A phase compiled together with its amplitude and gradient bound.
pub struct PreparedPhase<'a> {
    compiled: CompiledPoly,
    phi: &'a dyn Amplitude,
    grad_max: f64,
    radius: Vec<f64>,
}

impl<'a> PreparedPhase<'a> {
    pub fn new(f: &Polynomial, phi: &'a dyn Amplitude) -> Result<Self, OscError> {
        let n = f.dim();
        if n == 0 || n > MAX_DIM {
            return Err(OscError::UnsupportedDimension(n));
        }
        if phi.dim() != n {
            return Err(OscError::DimensionMismatch { expected: n, got: phi.dim() });
        }
        let radius = phi.support_radius();
        if radius.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(OscError::BadCutoff("support radii must be positive".into()));
        }
        let grad: Vec<CompiledPoly> = f.gradient().iter().map(CompiledPoly::new).collect();
        let grad_max = quad::gradient_bound(&grad, &radius);
        Ok(PreparedPhase { compiled: CompiledPoly::new(f), phi, grad_max, radius })
    }

    pub fn dim(&self) -> usize {
        self.radius.len()
    }

    /// `max |grad f|` over the support box.
    pub fn gradient_bound(&self) -> f64 {
        self.grad_max
    }

    /// `I` for every direction `b` in `dirs` at one `lambda`. The step is
    /// chosen for the largest `|b|` so all directions share one grid.
    pub fn eval_batch(&self, lambda: f64, dirs: &[Vec<f64>], cfg: &QuadConfig) -> Result<Vec<DecaySample>, OscError> {
        let n = self.dim();
        let probes = dirs
            .iter()
            .map(|b| {
                if b.len() != n {
                    return Err(OscError::DimensionMismatch { expected: n, got: b.len() });
                }
                DecayProbe::new(lambda, b.clone())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bmax = dirs.iter().map(|b| norm(b)).fold(0.0, f64::max);
        let grid = Grid::new(&self.radius, lambda.abs() * (self.grad_max + bmax + 1.0), cfg);
        let results = refine(grid, lambda, cfg, dirs.len(), |g| quad::batch_sums(&self.compiled, self.phi, lambda, dirs, g));
        Ok(probes
            .into_iter()
            .zip(results)
            .map(|(probe, (v, error, resolution, converged))| DecaySample { probe, re: v.re, im: v.im, error, resolution, converged })
            .collect())
    }

    pub fn eval(&self, probe: &DecayProbe, cfg: &QuadConfig) -> Result<DecaySample, OscError> {
        let mut v = self.eval_batch(probe.lambda, std::slice::from_ref(&probe.b), cfg)?;
        Ok(v.remove(0))
    }

    /// Differences `|I_h - I_2h|` over `levels` successive halvings,
    /// starting from the resolution rule's step.
    pub fn halving_differences(&self, probe: &DecayProbe, levels: usize, cfg: &QuadConfig) -> Vec<f64> {
        let mut grid = Grid::new(&self.radius, probe.lambda.abs() * (self.grad_max + norm(&probe.b) + 1.0), cfg);
        let dirs = std::slice::from_ref(&probe.b);
        let mut out = Vec::with_capacity(levels);
        for _ in 0..levels {
            let (f, c) = quad::batch_sums(&self.compiled, self.phi, probe.lambda, dirs, &grid);
            out.push((f[0] - c[0]).norm());
            grid = grid.refined();
        }
        out
    }
}

/// `I(lambda) = int e^{i lambda (f + b . x)} phi dx`.
pub fn eval_osc_integral(f: &Polynomial, phi: &dyn Amplitude, probe: &DecayProbe, cfg: &QuadConfig) -> Result<DecaySample, OscError> {
    PreparedPhase::new(f, phi)?.eval(probe, cfg)
}

/// Value of `mu(l) = int e^{-i (l_{n+1} f(x) + sum_i l_i x_i)} phi(x) dx`,
/// evaluated pointwise from that formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuHatSample {
    pub lambdas: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub error: f64,
    pub resolution: Vec<usize>,
    pub converged: bool,
}

impl MuHatSample {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `lambdas = (l_1, .., l_n, l_{n+1})`.
pub fn eval_muhat(f: &Polynomial, phi: &dyn Amplitude, lambdas: &[f64], cfg: &QuadConfig) -> Result<MuHatSample, OscError> {
    let p = PreparedPhase::new(f, phi)?;
    let n = p.dim();
    if lambdas.len() != n + 1 {
        return Err(OscError::DimensionMismatch { expected: n + 1, got: lambdas.len() });
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(OscError::BadProbe("non-finite frequency".into()));
    }
    let top = lambdas[n];
    let lin = &lambdas[..n];
    let bound = top.abs() * (p.grad_max + 1.0) + norm(lin);
    let grid = Grid::new(&p.radius, bound, cfg);
    let phase = |x: &[f64]| -(top * p.compiled.eval(x) + lin.iter().zip(x).map(|(l, xi)| l * xi).sum::<f64>());
    let scale = top.abs().max(norm(lin));
    let (v, error, resolution, converged) = refine(grid, scale, cfg, 1, |g| {
        let (a, b) = quad::direct_sums(&phase, p.phi, g);
        (vec![a], vec![b])
    })
    .remove(0);
    Ok(MuHatSample { lambdas: lambdas.to_vec(), re: v.re, im: v.im, error, resolution, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum DirectionPolicy {
    /// `b = 0`, giving `I(lambda)`.
    OscillatoryOnly,
    /// Max of `|I_b(lambda)|` over a fixed set of `count` directions.
    WorstDirection { count: usize },
}

impl Default for DirectionPolicy {
    fn default() -> Self {
        DirectionPolicy::WorstDirection { count: DEFAULT_DIRECTIONS }
    }
}

pub const DEFAULT_DIRECTIONS: usize = 32;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// `b = 0`, then `+-e_i`, then Halton points of `[-1, 1]^n` that fall in the
/// closed unit ball.
pub fn direction_set(n: usize, count: usize) -> Vec<Vec<f64>> {
    const BASES: [u64; 3] = [2, 3, 5];
    let mut out = vec![vec![0.0; n]];
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    let mut k = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..n).map(|d| 2.0 * radical_inverse(k, BASES[d]) - 1.0).collect();
        if norm(&p) <= 1.0 {
            out.push(p);
        }
        k += 1;
    }
    out.truncate(count.max(1));
    out
}

/// One rung of a ladder: the recorded sample is the largest in modulus over
/// the direction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub sample: DecaySample,
    pub directions: usize,
    /// Directions whose quadrature did not converge.
    pub unconverged: usize,
}

pub fn ladder_lambdas(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>, OscError> {
    if !(lo >= 2.0 && hi > lo && count >= 2) {
        return Err(OscError::BadLadder(format!("need 2 <= lambda_min < lambda_max and at least 2 rungs, got [{lo}, {hi}] x {count}")));
    }
    Ok(fit::geometric_grid(lo, hi, count))
}

pub fn decay_ladder(
    f: &Polynomial,
    phi: &dyn Amplitude,
    lambdas: &[f64],
    policy: &DirectionPolicy,
    cfg: &QuadConfig,
) -> Result<Vec<LadderRung>, OscError> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 2.0 && l.is_finite())) {
        return Err(OscError::BadLadder("every lambda must be finite and >= 2".into()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(OscError::BadLadder("lambdas must increase".into()));
    }
    let p = PreparedPhase::new(f, phi)?;
    let dirs = match policy {
        DirectionPolicy::OscillatoryOnly => vec![vec![0.0; p.dim()]],
        DirectionPolicy::WorstDirection { count } => {
            if *count == 0 {
                return Err(OscError::BadLadder("direction count must be positive".into()));
            }
            direction_set(p.dim(), *count)
        }
    };
    lambdas
        .iter()
        .map(|&l| {
            let samples = p.eval_batch(l, &dirs, cfg)?;
            let unconverged = samples.iter().filter(|s| !s.converged).count();
            // First maximum wins, so b = 0 is kept on ties.
            let (mut best, mut best_abs) = (0, f64::NEG_INFINITY);
            for (i, s) in samples.iter().enumerate() {
                if s.abs() > best_abs {
                    best = i;
                    best_abs = s.abs();
                }
            }
            let mut sample = samples[best].clone();
            sample.converged = unconverged == 0;
            Ok(LadderRung { sample, directions: dirs.len(), unconverged })
        })
        .collect()
}

/// Fits the decay of the converged rungs.
pub fn fit_decay(rungs: &[LadderRung], kind: FitKind) -> Result<DecayFit, FitError> {
    let pts: Vec<(f64, f64)> = rungs
        .iter()
        .filter(|r| r.sample.converged)
        .map(|r| (r.sample.probe.lambda, r.sample.abs()))
        .collect();
    fit::fit_decay(&pts, kind)
}

/// Rows `lambda, b, re, im, abs, err`; `b` is space separated. With
/// `as_muhat` the values are `mu(lambda b, lambda) = conj(I_b(lambda))`.
pub fn write_ladder_csv<W: std::io::Write>(rungs: &[LadderRung], as_muhat: bool, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lambda", "b", "re", "im", "abs", "err"])?;
    for r in rungs {
        let s = &r.sample;
        let b: Vec<String> = s.probe.b.iter().map(|v| v.to_string()).collect();
        let im = if as_muhat { -s.im } else { s.im };
        out.write_record([
            s.probe.lambda.to_string(),
            b.join(" "),
            s.re.to_string(),
            im.to_string(),
            s.abs().to_string(),
            s.error.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
