//! Partition of the domain by the dominant weighted derivative
//! `|x_i d_i f|`, and the small-derivative part of each piece.

use rayon::prelude::*;
use serde::Serialize;

use super::OscError;
use crate::fit::{self, DecayFit, FitKind};
use crate::poly::{CompiledPoly, Polynomial};
use crate::rng::CounterRng;
use crate::sublevel::{BoxDomain, AXIS_TUBE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// 1-based variable index.
    Index(usize),
    /// Every weighted derivative vanishes.
    Critical,
}

/// Distinct weighted derivatives `x_j d_j f`; each keeps the smallest index
/// among the equal ones.
pub struct Regions {
    reps: Vec<usize>,
    weighted: Vec<CompiledPoly>,
    partials: Vec<CompiledPoly>,
}

impl Regions {
    pub fn new(f: &Polynomial) -> Self {
        let n = f.dim();
        let mut seen: Vec<Polynomial> = Vec::new();
        let mut reps = Vec::new();
        for i in 1..=n {
            let w = f.weighted_partial(i).expect("index in range");
            if !seen.contains(&w) {
                seen.push(w);
                reps.push(i);
            }
        }
        let partials = reps
            .iter()
            .map(|&i| CompiledPoly::new(&f.partial_derivative(i).expect("index in range")))
            .collect();
        Regions { weighted: seen.iter().map(CompiledPoly::new).collect(), reps, partials }
    }

    /// Indices that survive deduplication.
    pub fn representatives(&self) -> &[usize] {
        &self.reps
    }

    pub fn index(&self, x: &[f64]) -> Region {
        self.slot(x).map_or(Region::Critical, |s| Region::Index(self.reps[s]))
    }

    fn slot(&self, x: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_v = 0.0;
        for (s, w) in self.weighted.iter().enumerate() {
            let v = w.eval(x).abs();
            if v > best_v {
                best_v = v;
                best = Some(s);
            }
        }
        best
    }
}

pub fn region_index(f: &Polynomial, x: &[f64]) -> Region {
    Regions::new(f).index(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct D1Measure {
    pub lambda: f64,
    pub epsilon: f64,
    /// `lambda^{-1/(eps+1)}`.
    pub threshold: f64,
    /// `(region index, measure)` for each representative.
    pub per_region: Vec<(usize, f64)>,
    pub total: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Monte Carlo measure of `{x in U_i : |d_i f(x)| <= lambda^{-1/(eps+1)}
/// prod_{j != i} |x_j|}` for each region, with the coordinate axes removed.
pub fn measure_d1(f: &Polynomial, lambda: f64, epsilon: f64, bx: &BoxDomain, samples: usize, seed: u64) -> Result<D1Measure, OscError> {
    if !(lambda >= 2.0 && lambda.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(OscError::BadProbe(format!("need lambda >= 2 and eps > 0, got {lambda}, {epsilon}")));
    }
    if bx.dim() != f.dim() {
        return Err(OscError::DimensionMismatch { expected: f.dim(), got: bx.dim() });
    }
    if samples < crate::sublevel::MIN_SAMPLES {
        return Err(OscError::Sampling(format!("need at least {} samples", crate::sublevel::MIN_SAMPLES)));
    }
    let regions = Regions::new(f);
    let t = lambda.powf(-1.0 / (epsilon + 1.0));
    let rng = CounterRng::new(seed);
    const BLOCK: usize = 1 << 15;
    let k = regions.reps.len();
    let tallies: Vec<Vec<u64>> = (0..samples.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut hits = vec![0u64; k];
            let mut x = vec![0.0; bx.dim()];
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                rng.point_in_box(i as u64, bx.lo(), bx.hi(), &mut x);
                if x.iter().any(|v| v.abs() < AXIS_TUBE) {
                    continue;
                }
                let Some(s) = regions.slot(&x) else { continue };
                let i0 = regions.reps[s] - 1;
                let others: f64 = x.iter().enumerate().filter(|(j, _)| *j != i0).map(|(_, v)| v.abs()).product();
                if regions.partials[s].eval(&x).abs() <= t * others {
                    hits[s] += 1;
                }
            }
            hits
        })
        .collect();
    let mut hits = vec![0u64; k];
    for t in &tallies {
        for (h, v) in hits.iter_mut().zip(t) {
            *h += v;
        }
    }
    let vol = bx.volume();
    let total_hits: u64 = hits.iter().sum();
    let p = total_hits as f64 / samples as f64;
    Ok(D1Measure {
        lambda,
        epsilon,
        threshold: t,
        per_region: regions.reps.iter().zip(&hits).map(|(&i, &h)| (i, vol * h as f64 / samples as f64)).collect(),
        total: vol * p,
        stderr: vol * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct D1Ladder {
    pub rungs: Vec<D1Measure>,
    /// `eps / (eps + 1)`.
    pub target: f64,
    pub pure: Option<DecayFit>,
    pub log_augmented: Option<DecayFit>,
    /// Least `C` with `total <= C lambda^{-target}` on every rung.
    pub bound_constant: f64,
    pub fit_note: Option<String>,
}

pub fn d1_ladder(f: &Polynomial, lambdas: &[f64], epsilon: f64, bx: &BoxDomain, samples: usize, seed: u64) -> Result<D1Ladder, OscError> {
    let rungs = lambdas
        .iter()
        .map(|&l| measure_d1(f, l, epsilon, bx, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let target = epsilon / (epsilon + 1.0);
    let pts: Vec<(f64, f64)> = rungs.iter().map(|r| (r.lambda, r.total)).collect();
    let pure = fit::fit_decay(&pts, FitKind::PurePower);
    let log = fit::fit_decay(&pts, FitKind::LogAugmented);
    let fit_note = pure.as_ref().err().map(|e| e.to_string());
    let bound_constant = rungs.iter().map(|r| r.total * r.lambda.powf(target)).fold(0.0, f64::max);
    Ok(D1Ladder { rungs, target, pure: pure.ok(), log_augmented: log.ok(), bound_constant, fit_note })
}

/// Dyadic multi-indices `k` with `2^{-k_j} >= 1/lambda` in `n` variables:
/// `(floor(log2 lambda) + 1)^n`.
pub fn dyadic_count(n: usize, lambda: f64) -> u64 {
    assert!(lambda >= 2.0 && lambda.is_finite(), "lambda must be >= 2");
    let mut levels = 0u64;
    let mut p = 1.0f64;
    while p <= lambda {
        levels += 1;
        p *= 2.0;
    }
    levels.pow(n as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn p(t: &str) -> Polynomial {
        parse_polynomial(t, None).unwrap()
    }

    #[test]
    fn dominant_index() {
        assert_eq!(region_index(&p("x1^2+x2^2"), &[0.5, 0.2]), Region::Index(1));
        assert_eq!(region_index(&p("x1^2+x2^2"), &[0.1, -0.2]), Region::Index(2));
        assert_eq!(region_index(&p("x1^2+x2^2"), &[0.3, 0.3]), Region::Index(1));
        assert_eq!(region_index(&p("x1^2+x2^2"), &[0.0, 0.0]), Region::Critical);
    }

    #[test]
    fn equal_flows_merge() {
        let r = Regions::new(&p("x1^2*x2^2"));
        assert_eq!(r.representatives(), &[1]);
        assert_eq!(r.index(&[0.1, 0.9]), Region::Index(1));
        assert_eq!(r.index(&[-0.7, 0.2]), Region::Index(1));
    }

    #[test]
    fn symmetric_split() {
        let r = Regions::new(&p("x1^2+x2^2"));
        let rng = CounterRng::new(3);
        let mut c = [0u64; 2];
        let mut x = [0.0; 2];
        for i in 0..200_000 {
            rng.point_in_box(i, &[-1.0, -1.0], &[1.0, 1.0], &mut x);
            if let Region::Index(k) = r.index(&x) {
                c[k - 1] += 1;
            }
        }
        let ratio = c[0] as f64 / c[1] as f64;
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn dyadic_counts() {
        assert_eq!(dyadic_count(2, 2.0), 4);
        assert_eq!(dyadic_count(2, 1024.0), 121);
        assert_eq!(dyadic_count(3, 8.0), 64);
        assert_eq!(dyadic_count(2, 1023.0), 100);
    }

    #[test]
    fn d1_nested_in_lambda() {
        let f = p("x1^2*x2^2");
        let bx = BoxDomain::unit(2);
        let a = measure_d1(&f, 100.0, 1.0, &bx, 100_000, 7).unwrap();
        let b = measure_d1(&f, 1000.0, 1.0, &bx, 100_000, 7).unwrap();
        assert!(b.total <= a.total);
    }

    #[test]
    fn d1_circle_cone_is_small() {
        // In U_1, |2 x1| <= t |x2| with |x1| >= |x2| forces |x2| tiny.
        let m = measure_d1(&p("x1^2+x2^2"), 1e4, 1.0, &BoxDomain::unit(2), 200_000, 1).unwrap();
        assert_eq!(m.per_region.len(), 2);
        assert!(m.total < 1e-3, "{}", m.total);
    }
}
