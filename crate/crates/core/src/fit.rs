//! Log-log least squares for power laws, optionally with a logarithmic
//! correction factor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate design matrix")]
    DegenerateDesign,
    #[error("window spans {decades:.2} decades, need at least {needed}")]
    WindowTooSmall { decades: f64, needed: f64 },
    #[error("sample magnitude is zero or not finite")]
    ZeroMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    PurePower,
    LogAugmented,
}

/// `m(s) ~ C s^eps (1 + ln(1/s))^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFit {
    pub kind: FitKind,
    pub exponent: f64,
    pub constant: f64,
    pub log_power: Option<f64>,
    /// RMS of the residuals in `ln m`.
    pub residual: f64,
    pub points_used: usize,
}

impl PowerFit {
    pub fn predict(&self, s: f64) -> f64 {
        let log = self.log_power.map_or(1.0, |p| (1.0 + (1.0 / s).ln()).powf(p));
        self.constant * s.powf(self.exponent) * log
    }
}

/// `|v(lambda)| ~ C lambda^{-delta} (ln lambda)^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub kind: FitKind,
    pub delta: f64,
    pub constant: f64,
    pub log_power: Option<f64>,
    pub residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Weighted least squares `y ~ X beta`; returns `beta` and the unweighted
/// RMS residual.
fn least_squares(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<(Vec<f64>, f64), FitError> {
    let k = rows[0].len();
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for ((r, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for a in 0..k {
            aty[a] += wi * r[a] * yi;
            for b in 0..k {
                ata[a][b] += wi * r[a] * r[b];
            }
        }
    }
    // Scale-aware singularity test on the normal matrix.
    let scale = (0..k).map(|i| ata[i][i]).fold(0.0f64, f64::max);
    for c in 0..k {
        let p = (c..k)
            .max_by(|&i, &j| ata[i][c].abs().total_cmp(&ata[j][c].abs()))
            .expect("nonempty");
        if ata[p][c].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(FitError::DegenerateDesign);
        }
        ata.swap(c, p);
        aty.swap(c, p);
        for i in c + 1..k {
            let f = ata[i][c] / ata[c][c];
            for j in c..k {
                ata[i][j] -= f * ata[c][j];
            }
            aty[i] -= f * aty[c];
        }
    }
    let mut beta = vec![0.0; k];
    for c in (0..k).rev() {
        let s: f64 = (c + 1..k).map(|j| ata[c][j] * beta[j]).sum();
        beta[c] = (aty[c] - s) / ata[c][c];
    }
    let ss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| {
            let pred: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - pred).powi(2)
        })
        .sum();
    Ok((beta, (ss / y.len() as f64).sqrt()))
}

/// Fits `ln y = c + e ln x (+ p ln(L(x)))` with `p >= 0`, where `L` is the
/// supplied log regressor. Falls back to `p = 0` when the free fit wants a
/// negative power.
fn fit_loglog(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    kind: FitKind,
    log_regressor: impl Fn(f64) -> f64,
) -> Result<(f64, f64, Option<f64>, f64), FitError> {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let pure_rows: Vec<Vec<f64>> = x.iter().map(|&s| vec![1.0, s.ln()]).collect();
    if kind == FitKind::LogAugmented {
        let rows: Vec<Vec<f64>> = x.iter().map(|&s| vec![1.0, s.ln(), log_regressor(s).ln()]).collect();
        let (beta, res) = least_squares(&rows, &ly, w)?;
        if beta[2] >= 0.0 {
            return Ok((beta[0].exp(), beta[1], Some(beta[2]), res));
        }
    }
    let (beta, res) = least_squares(&pure_rows, &ly, w)?;
    let p = (kind == FitKind::LogAugmented).then_some(0.0);
    Ok((beta[0].exp(), beta[1], p, res))
}

/// Fits a sublevel growth law to `(s, m)` pairs with zero-measure points
/// dropped. Weights default to one.
pub fn fit_power_law_weighted(points: &[(f64, f64)], weights: Option<&[f64]>, kind: FitKind) -> Result<PowerFit, FitError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for (i, &(s, m)) in points.iter().enumerate() {
        let wi = weights.map_or(1.0, |w| w[i]);
        if s > 0.0 && m > 0.0 && m.is_finite() && wi > 0.0 {
            x.push(s);
            y.push(m);
            w.push(wi);
        }
    }
    if x.len() < 5 {
        return Err(FitError::TooFewPoints { needed: 5, got: x.len() });
    }
    let (constant, exponent, log_power, residual) = fit_loglog(&x, &y, &w, kind, |s| 1.0 + (1.0 / s).ln())?;
    Ok(PowerFit { kind, exponent, constant, log_power, residual, points_used: x.len() })
}

pub fn fit_power_law(points: &[(f64, f64)], kind: FitKind) -> Result<PowerFit, FitError> {
    fit_power_law_weighted(points, None, kind)
}

pub const MIN_DECAY_SAMPLES: usize = 6;
pub const MIN_DECAY_DECADES: f64 = 1.5;

/// Fits `ln |v| = c - delta ln lambda (+ p ln ln lambda)` to `(lambda, |v|)`.
pub fn fit_decay(samples: &[(f64, f64)], kind: FitKind) -> Result<DecayFit, FitError> {
    if samples.len() < MIN_DECAY_SAMPLES {
        return Err(FitError::TooFewPoints { needed: MIN_DECAY_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(FitError::ZeroMagnitude);
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let decades = (hi / lo).log10();
    if !(decades >= MIN_DECAY_DECADES - 1e-9) {
        return Err(FitError::WindowTooSmall { decades, needed: MIN_DECAY_DECADES });
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let w = vec![1.0; x.len()];
    let (constant, slope, log_power, residual) = fit_loglog(&x, &y, &w, kind, f64::ln)?;
    Ok(DecayFit { kind, delta: -slope, constant, log_power, residual, lambda_min: lo, lambda_max: hi })
}

/// `count` geometric points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| if i == count - 1 { hi } else { lo * (r * i as f64).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        geometric_grid(1e-5, 1e-1, 24).into_iter().map(|s| (s, f(s))).collect()
    }

    #[test]
    fn exact_power() {
        let fit = fit_power_law(&synth(|s| s), FitKind::PurePower).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let fit = fit_power_law(&synth(|s| 3.0 * s.sqrt()), FitKind::PurePower).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-12);
        assert!((fit.constant - 3.0).abs() < 1e-10);
    }

    #[test]
    fn log_augmented_recovers_log_power() {
        let pts = synth(|s| 4.0 * s * (1.0 + (1.0 / s).ln()));
        let fit = fit_power_law(&pts, FitKind::LogAugmented).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05);
        assert!((fit.log_power.unwrap() - 1.0).abs() < 0.05);
        let pure = fit_power_law(&pts, FitKind::PurePower).unwrap();
        assert!(pure.exponent < 0.95);
    }

    #[test]
    fn negative_log_power_falls_back() {
        let pts = synth(|s| s / (1.0 + (1.0 / s).ln()));
        let fit = fit_power_law(&pts, FitKind::LogAugmented).unwrap();
        assert_eq!(fit.log_power, Some(0.0));
    }

    #[test]
    fn too_few_points() {
        let pts: Vec<(f64, f64)> = vec![(0.1, 0.1), (0.01, 0.0), (0.001, 0.001)];
        assert_eq!(fit_power_law(&pts, FitKind::PurePower), Err(FitError::TooFewPoints { needed: 5, got: 2 }));
    }

    #[test]
    fn degenerate_design() {
        let pts = vec![(0.1, 0.2); 6];
        assert_eq!(fit_power_law(&pts, FitKind::PurePower), Err(FitError::DegenerateDesign));
    }

    #[test]
    fn decay_fits() {
        let lam = geometric_grid(16.0, 1024.0, 7);
        let pts: Vec<(f64, f64)> = lam.iter().map(|&l| (l, l.powf(-0.75))).collect();
        let fit = fit_decay(&pts, FitKind::PurePower).unwrap();
        assert!((fit.delta - 0.75).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = lam.iter().map(|&l| (l, l.powf(-0.5) * l.ln())).collect();
        let fit = fit_decay(&pts, FitKind::LogAugmented).unwrap();
        assert!((fit.delta - 0.5).abs() < 0.03);
        assert!((fit.log_power.unwrap() - 1.0).abs() < 0.03);
        assert!(matches!(fit_decay(&pts[..1], FitKind::PurePower), Err(FitError::TooFewPoints { .. })));
        let narrow: Vec<(f64, f64)> = geometric_grid(16.0, 64.0, 7).into_iter().map(|l| (l, 1.0 / l)).collect();
        assert!(matches!(fit_decay(&narrow, FitKind::PurePower), Err(FitError::WindowTooSmall { .. })));
        let mut zero = pts.clone();
        zero[2].1 = 0.0;
        assert_eq!(fit_decay(&zero, FitKind::PurePower), Err(FitError::ZeroMagnitude));
    }
}
