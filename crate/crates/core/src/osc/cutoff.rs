use serde::{Deserialize, Serialize};

/// Amplitude functions for the oscillatory integrals: real, compactly
/// supported in the box `[-r_i, r_i]`, and vanishing on its boundary.
pub trait Amplitude: Sync {
    fn dim(&self) -> usize;
    /// Half-widths of a box containing the support.
    fn support_radius(&self) -> Vec<f64>;
    fn eval(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffFamily {
    /// `exp(-1 / (1 - |x / rho|^2))`, zero outside the ellipsoid.
    SmoothBump,
    /// `prod_i cos^2(pi x_i / (2 rho_i))` on the box.
    CosineTensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub family: CutoffFamily,
    pub radius: Vec<f64>,
    pub amplitude: f64,
}

impl CutoffSpec {
    pub fn bump(n: usize, rho: f64) -> Self {
        CutoffSpec { family: CutoffFamily::SmoothBump, radius: vec![rho; n], amplitude: 1.0 }
    }

    pub fn cosine(n: usize, rho: f64) -> Self {
        CutoffSpec { family: CutoffFamily::CosineTensor, radius: vec![rho; n], amplitude: 1.0 }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.radius.is_empty() || self.radius.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err("cutoff radii must be positive and finite".into());
        }
        if !self.amplitude.is_finite() {
            return Err("cutoff amplitude must be finite".into());
        }
        Ok(())
    }

    /// Whether the support lies strictly inside the box `[lo, hi]`.
    pub fn inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        self.radius.iter().zip(lo.iter().zip(hi)).all(|(r, (a, b))| *a < -r && *r < *b)
    }
}

impl Amplitude for CutoffSpec {
    fn dim(&self) -> usize {
        self.radius.len()
    }

    fn support_radius(&self) -> Vec<f64> {
        self.radius.clone()
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        match self.family {
            CutoffFamily::SmoothBump => {
                let r2: f64 = x.iter().zip(&self.radius).map(|(xi, r)| (xi / r).powi(2)).sum();
                if r2 < 1.0 {
                    self.amplitude * (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            CutoffFamily::CosineTensor => {
                let mut v = self.amplitude;
                for (xi, r) in x.iter().zip(&self.radius) {
                    if xi.abs() >= *r {
                        return 0.0;
                    }
                    v *= (std::f64::consts::FRAC_PI_2 * xi / r).cos().powi(2);
                }
                v
            }
        }
    }
}

/// Pointwise sum of cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSum(pub Vec<CutoffSpec>);

impl Amplitude for CutoffSum {
    fn dim(&self) -> usize {
        self.0[0].dim()
    }

    fn support_radius(&self) -> Vec<f64> {
        let mut r = self.0[0].radius.clone();
        for c in &self.0[1..] {
            for (a, b) in r.iter_mut().zip(&c.radius) {
                *a = a.max(*b);
            }
        }
        r
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|c| c.eval(x)).sum()
    }
}
