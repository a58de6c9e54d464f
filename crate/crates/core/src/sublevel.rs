//! Monte Carlo sublevel-set measures `m({x in B : g(x) < s})` and the
//! min-integral `int_B min(1, |M g|^{-1})`.
//!
//! All thresholds share one sample set, so measures are nondecreasing in
//! `s` by construction.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fit::{self, FitError, FitKind, PowerFit};
use crate::poly::{CompiledPoly, FlowRatio, Polynomial};
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SublevelError {
    #[error("invalid box: {0}")]
    BadBox(String),
    #[error("threshold grid must be positive and increasing")]
    BadGrid,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("evaluator failed on {rate:.3}% of samples (limit 0.1%)")]
    DomainErrors { rate: f64 },
    #[error("evaluator has {got} variables, box has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("M must be nonzero")]
    ZeroM,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SublevelError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SublevelError::BadBox("bounds must be nonempty and of equal length".into()));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(SublevelError::BadBox(format!("interval {} is [{a}, {b}]", i + 1)));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// `[-r, r]^n`.
    pub fn symmetric(n: usize, r: f64) -> Self {
        BoxDomain::new(vec![-r; n], vec![r; n]).expect("valid symmetric box")
    }

    pub fn unit(n: usize) -> Self {
        Self::symmetric(n, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Evaluation failed at a sample point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainError;

/// A real function sampled by the estimators.
pub trait Evaluator: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64, DomainError>;
    /// Points removed from the domain before evaluation.
    fn excluded(&self, _x: &[f64]) -> bool {
        false
    }
}

/// `|f(x)|`.
#[derive(Debug, Clone)]
pub struct AbsPoly(CompiledPoly);

impl AbsPoly {
    pub fn new(f: &Polynomial) -> Self {
        AbsPoly(CompiledPoly::new(f))
    }
}

impl Evaluator for AbsPoly {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, DomainError> {
        let v = self.0.eval(x).abs();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainError)
        }
    }
}

/// The flow ratio `sum_i |x_i d_i f| / prod_i |x_i|` with a thin tube around
/// the coordinate hyperplanes removed.
#[derive(Debug, Clone)]
pub struct FlowRatioEval {
    ratio: FlowRatio,
    tube: f64,
}

pub const AXIS_TUBE: f64 = 1e-12;

impl FlowRatioEval {
    pub fn new(f: &Polynomial) -> Self {
        FlowRatioEval { ratio: FlowRatio::new(f), tube: AXIS_TUBE }
    }
}

impl Evaluator for FlowRatioEval {
    fn dim(&self) -> usize {
        self.ratio.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, DomainError> {
        match self.ratio.eval(x) {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(DomainError),
        }
    }

    fn excluded(&self, x: &[f64]) -> bool {
        x.iter().any(|c| c.abs() < self.tube)
    }
}

/// Wraps a closure as an [`Evaluator`].
pub struct FnEval<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnEval<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnEval { n, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Evaluator for FnEval<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> Result<f64, DomainError> {
        let v = (self.f)(x);
        if v.is_nan() {
            Err(DomainError)
        } else {
            Ok(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublevelConfig {
    pub s_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

pub const MIN_SAMPLES: usize = 10_000;

pub fn default_s_grid() -> Vec<f64> {
    fit::geometric_grid(1e-5, 1e-1, 24)
}

impl Default for SublevelConfig {
    fn default() -> Self {
        SublevelConfig { s_grid: default_s_grid(), samples: 1_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SublevelEstimate {
    pub s_grid: Vec<f64>,
    pub measures: Vec<f64>,
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    pub box_volume: f64,
    pub excluded_measure: f64,
    /// Smallest sampled value of `g`.
    pub sample_min: f64,
    /// Every sampled measure is zero.
    pub bounded_below: bool,
    pub pure: Option<PowerFit>,
    pub log_augmented: Option<PowerFit>,
    /// Why a fit is missing, when it is.
    pub fit_note: Option<String>,
}

impl SublevelEstimate {
    pub fn epsilon_hat(&self) -> Option<f64> {
        self.pure.as_ref().map(|f| f.exponent)
    }

    pub fn c_hat(&self) -> Option<f64> {
        self.pure.as_ref().map(|f| f.constant)
    }

    pub fn log_power_hat(&self) -> Option<f64> {
        self.log_augmented.as_ref().and_then(|f| f.log_power)
    }

    pub fn residual(&self) -> Option<f64> {
        self.pure.as_ref().map(|f| f.residual)
    }

    /// Rows `s, measure, stderr`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "measure", "stderr"])?;
        for ((s, m), e) in self.s_grid.iter().zip(&self.measures).zip(&self.stderr) {
            out.write_record([s.to_string(), m.to_string(), e.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// The fit window: the grid without its two extreme points.
    fn window(&self) -> std::ops::Range<usize> {
        let n = self.s_grid.len();
        if n > 7 {
            1..n - 1
        } else {
            0..n
        }
    }
}

const BLOCK: usize = 1 << 15;

struct BlockTally {
    /// `hist[j]` counts values in `[s_{j-1}, s_j)`; the last bucket is `>= s_max`.
    hist: Vec<u64>,
    excluded: u64,
    errors: u64,
    min: f64,
}

fn tally_block(g: &dyn Evaluator, bx: &BoxDomain, grid: &[f64], rng: &CounterRng, start: usize, end: usize) -> BlockTally {
    let mut t = BlockTally { hist: vec![0; grid.len() + 1], excluded: 0, errors: 0, min: f64::INFINITY };
    let mut x = vec![0.0; bx.dim()];
    for i in start..end {
        rng.point_in_box(i as u64, bx.lo(), bx.hi(), &mut x);
        if g.excluded(&x) {
            t.excluded += 1;
            continue;
        }
        match g.eval(&x) {
            Ok(v) => {
                t.min = t.min.min(v);
                t.hist[grid.partition_point(|&s| s <= v)] += 1;
            }
            Err(DomainError) => t.errors += 1,
        }
    }
    t
}

/// Estimates `m({g < s})` for every `s` on the grid.
pub fn estimate_sublevel(g: &dyn Evaluator, bx: &BoxDomain, config: &SublevelConfig) -> Result<SublevelEstimate, SublevelError> {
    if g.dim() != bx.dim() {
        return Err(SublevelError::DimensionMismatch { expected: bx.dim(), got: g.dim() });
    }
    let grid = &config.s_grid;
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SublevelError::BadGrid);
    }
    if config.samples < MIN_SAMPLES {
        return Err(SublevelError::TooFewSamples { min: MIN_SAMPLES, got: config.samples });
    }
    let n = config.samples;
    let rng = CounterRng::new(config.seed);
    let blocks: Vec<BlockTally> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| tally_block(g, bx, grid, &rng, b * BLOCK, ((b + 1) * BLOCK).min(n)))
        .collect();

    let mut hist = vec![0u64; grid.len() + 1];
    let (mut excluded, mut errors, mut min) = (0u64, 0u64, f64::INFINITY);
    for b in &blocks {
        for (h, v) in hist.iter_mut().zip(&b.hist) {
            *h += v;
        }
        excluded += b.excluded;
        errors += b.errors;
        min = min.min(b.min);
    }
    let rate = errors as f64 / n as f64;
    if rate > 1e-3 {
        return Err(SublevelError::DomainErrors { rate: 100.0 * rate });
    }

    let vol = bx.volume();
    let mut counts = Vec::with_capacity(grid.len());
    let mut acc = 0u64;
    for h in &hist[..grid.len()] {
        acc += h;
        counts.push(acc);
    }
    let measures: Vec<f64> = counts.iter().map(|&c| vol * c as f64 / n as f64).collect();
    let stderr: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n as f64;
            vol * (p * (1.0 - p) / n as f64).sqrt()
        })
        .collect();
    let bounded_below = counts.iter().all(|&c| c == 0);

    let mut est = SublevelEstimate {
        s_grid: grid.clone(),
        measures,
        stderr,
        counts,
        samples: n,
        seed: config.seed,
        box_volume: vol,
        excluded_measure: vol * excluded as f64 / n as f64,
        sample_min: min,
        bounded_below,
        pure: None,
        log_augmented: None,
        fit_note: None,
    };
    if bounded_below {
        est.fit_note = Some("bounded-below".into());
        return Ok(est);
    }
    let w = est.window();
    let pts: Vec<(f64, f64)> = w.clone().map(|j| (est.s_grid[j], est.measures[j])).collect();
    let weights: Vec<f64> = w.map(|j| est.counts[j] as f64).collect();
    match (
        fit::fit_power_law_weighted(&pts, Some(&weights), FitKind::PurePower),
        fit::fit_power_law_weighted(&pts, Some(&weights), FitKind::LogAugmented),
    ) {
        (Ok(p), Ok(l)) => {
            est.pure = Some(p);
            est.log_augmented = Some(l);
        }
        (Ok(p), Err(e)) => {
            est.pure = Some(p);
            est.fit_note = Some(e.to_string());
        }
        (Err(e), _) => est.fit_note = Some(e.to_string()),
    }
    Ok(est)
}

/// Grid lifts tried by [`estimate_sublevel_lifted`].
pub const MAX_GRID_LIFTS: usize = 2;

/// [`estimate_sublevel`], retried with the grid scaled up by a decade (at
/// most [`MAX_GRID_LIFTS`] times) while no fit exists and some sample lies
/// below the lifted grid. Meant for unnormalised targets such as the flow
/// ratio.
pub fn estimate_sublevel_lifted(g: &dyn Evaluator, bx: &BoxDomain, config: &SublevelConfig) -> Result<SublevelEstimate, SublevelError> {
    let mut est = estimate_sublevel(g, bx, config)?;
    let mut cfg = config.clone();
    for _ in 0..MAX_GRID_LIFTS {
        let top = cfg.s_grid.last().copied().unwrap_or(0.0);
        if est.pure.is_some() || est.sample_min >= 10.0 * top {
            break;
        }
        cfg.s_grid.iter_mut().for_each(|s| *s *= 10.0);
        est = estimate_sublevel(g, bx, &cfg)?;
    }
    Ok(est)
}

/// Fits `(C, delta)` so that `m({g < s}) <= C s^delta` holds on every grid
/// point: `delta` from the pure-power fit, `C` the smallest constant that
/// dominates the sampled curve.
pub fn dominating_power(est: &SublevelEstimate) -> Result<(f64, f64), FitError> {
    let delta = est
        .pure
        .as_ref()
        .map(|f| f.exponent)
        .ok_or(FitError::TooFewPoints { needed: 5, got: est.counts.iter().filter(|&&c| c > 0).count() })?;
    let c = est
        .s_grid
        .iter()
        .zip(&est.measures)
        .map(|(s, m)| m / s.powf(delta))
        .fold(0.0, f64::max);
    Ok((c, delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaCase {
    DeltaBelowOne,
    DeltaOne,
    DeltaAboveOne,
    BoundedBelow,
}

/// Monte Carlo `int min(1, |M g|^{-1})` against the three-case bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinIntegralCheck {
    pub m: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub constant: f64,
    pub delta: f64,
    pub case: LemmaCase,
    /// Multiplier on the layer-cake constants.
    pub kappa: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Layer-cake constant `D_delta`; see [`lemma_bound`].
pub fn layer_cake_constant(delta: f64) -> f64 {
    if (delta - 1.0).abs() < DELTA_ONE_BAND {
        1.0
    } else if delta < 1.0 {
        1.0 / (1.0 - delta)
    } else {
        1.0 / (delta - 1.0)
    }
}

/// Fitted exponents this close to one use the logarithmic case.
pub const DELTA_ONE_BAND: f64 = 0.05;

pub fn lemma_case(delta: f64) -> LemmaCase {
    if (delta - 1.0).abs() < DELTA_ONE_BAND {
        LemmaCase::DeltaOne
    } else if delta < 1.0 {
        LemmaCase::DeltaBelowOne
    } else {
        LemmaCase::DeltaAboveOne
    }
}

/// The three-case bound for `m({|g| < t}) <= C t^delta` on a set of
/// measure `volume`, with constants `kappa * D_delta`.
pub fn lemma_bound(c: f64, delta: f64, m: f64, volume: f64, kappa: f64) -> f64 {
    let m = m.abs();
    let d = kappa * layer_cake_constant(delta);
    match lemma_case(delta) {
        LemmaCase::DeltaBelowOne => c * d * m.powf(-delta),
        LemmaCase::DeltaOne => c * d * (1.0 + m.ln().max(0.0)) / m + volume / m,
        LemmaCase::DeltaAboveOne => c * (m.powf(-delta) + d / m) + volume / m,
        LemmaCase::BoundedBelow => unreachable!("handled by the caller"),
    }
}

/// Computes the min-integral and compares it with the bound, fitting
/// `(C, delta)` from a sublevel estimate of `g` when none is given.
pub fn min_integral_check(
    g: &dyn Evaluator,
    bx: &BoxDomain,
    m: f64,
    config: &SublevelConfig,
    fitted: Option<(f64, f64)>,
    kappa: f64,
) -> Result<MinIntegralCheck, SublevelError> {
    if m == 0.0 {
        return Err(SublevelError::ZeroM);
    }
    if g.dim() != bx.dim() {
        return Err(SublevelError::DimensionMismatch { expected: bx.dim(), got: g.dim() });
    }
    let n = config.samples;
    if n < MIN_SAMPLES {
        return Err(SublevelError::TooFewSamples { min: MIN_SAMPLES, got: n });
    }
    let rng = CounterRng::new(config.seed);
    let partial: Vec<(f64, f64, f64, u64)> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut x = vec![0.0; bx.dim()];
            let (mut s1, mut s2, mut min, mut errors) = (0.0, 0.0, f64::INFINITY, 0u64);
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                rng.point_in_box(i as u64, bx.lo(), bx.hi(), &mut x);
                if g.excluded(&x) {
                    continue;
                }
                match g.eval(&x) {
                    Ok(v) => {
                        let y = (1.0 / (m * v).abs()).min(1.0);
                        s1 += y;
                        s2 += y * y;
                        min = min.min(v.abs());
                    }
                    Err(DomainError) => errors += 1,
                }
            }
            (s1, s2, min, errors)
        })
        .collect();
    let (mut s1, mut s2, mut min, mut errors) = (0.0, 0.0, f64::INFINITY, 0u64);
    for (a, b, c, e) in partial {
        s1 += a;
        s2 += b;
        min = min.min(c);
        errors += e;
    }
    if errors as f64 > 1e-3 * n as f64 {
        return Err(SublevelError::DomainErrors { rate: 100.0 * errors as f64 / n as f64 });
    }
    let vol = bx.volume();
    let mean = s1 / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    let estimate = vol * mean;
    let stderr = vol * (var / n as f64).sqrt();

    let (constant, delta, case, bound) = match fitted {
        Some((c, d)) => (c, d, lemma_case(d), lemma_bound(c, d, m, vol, kappa)),
        None => {
            let est = estimate_sublevel(g, bx, config)?;
            if est.bounded_below {
                // |g| >= inf g on the whole box.
                let floor = est.sample_min.max(f64::MIN_POSITIVE);
                let b = vol * (1.0 / (m.abs() * floor)).min(1.0);
                (0.0, f64::INFINITY, LemmaCase::BoundedBelow, b)
            } else {
                match dominating_power(&est) {
                    Ok((c, d)) => (c, d, lemma_case(d), lemma_bound(c, d, m, vol, kappa)),
                    Err(_) => (f64::NAN, f64::NAN, LemmaCase::DeltaBelowOne, f64::NAN),
                }
            }
        }
    };
    // The bounded-below bound uses the sampled infimum, which can sit a
    // little above the true one.
    let slack = if case == LemmaCase::BoundedBelow { 3.0 * stderr } else { 0.0 };
    Ok(MinIntegralCheck {
        m,
        estimate,
        stderr,
        constant,
        delta,
        case,
        kappa,
        bound,
        within_bound: estimate <= bound * (1.0 + 1e-12) + slack,
    })
}

/// Smallest `kappa >= 1` for which the bound dominates the `|x1|` integrals
/// on `[-1, 1]^2` over the given `M` values.
pub fn calibrate_kappa(ms: &[f64], config: &SublevelConfig) -> Result<f64, SublevelError> {
    let g = FnEval::new(2, |x: &[f64]| x[0].abs());
    let bx = BoxDomain::unit(2);
    let est = estimate_sublevel(&g, &bx, config)?;
    let (c, d) = dominating_power(&est).map_err(|_| SublevelError::BadGrid)?;
    let mut kappa: f64 = 1.0;
    for &m in ms {
        let r = min_integral_check(&g, &bx, m, config, Some((c, d)), 1.0)?;
        kappa = kappa.max(r.estimate / r.bound);
    }
    Ok(kappa)
}
