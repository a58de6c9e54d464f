use super::{Point, PolyError, Polynomial};
use crate::rational::{self, Rational};

/// Floating-point image of a [`Polynomial`] for repeated evaluation.
///
/// Terms keep the polynomial's sorted order and are summed left to right,
/// so results are bit-reproducible.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    n: usize,
    coeffs: Vec<f64>,
    exps: Vec<Vec<i32>>,
}

impl CompiledPoly {
    pub fn new(f: &Polynomial) -> Self {
        let mut coeffs = Vec::with_capacity(f.len());
        let mut exps = Vec::with_capacity(f.len());
        for (alpha, c) in f.terms() {
            coeffs.push(rational::to_f64(c));
            exps.push(alpha.0.iter().map(|&e| e as i32).collect());
        }
        CompiledPoly { n: f.dim(), coeffs, exps }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for (c, e) in self.coeffs.iter().zip(&self.exps) {
            let mut t = *c;
            for (xi, &ei) in x.iter().zip(e) {
                if ei != 0 {
                    t *= xi.powi(ei);
                }
            }
            acc += t;
        }
        acc
    }

    /// Sum of absolute term values, the natural magnitude scale at `x`.
    #[inline]
    pub fn eval_abs_terms(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, e) in self.coeffs.iter().zip(&self.exps) {
            let mut t = c.abs();
            for (xi, &ei) in x.iter().zip(e) {
                if ei != 0 {
                    t *= xi.abs().powi(ei);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_checked(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.eval(x))
    }
}

/// The weighted gradient-flow ratio `sum_i |x_i df/dx_i| / prod_i |x_i|`.
#[derive(Debug, Clone)]
pub struct FlowRatio {
    weighted: Vec<CompiledPoly>,
}

impl FlowRatio {
    pub fn new(f: &Polynomial) -> Self {
        let weighted = (1..=f.dim())
            .map(|i| CompiledPoly::new(&f.weighted_partial(i).expect("index in range")))
            .collect();
        FlowRatio { weighted }
    }

    pub fn dim(&self) -> usize {
        self.weighted.len()
    }

    /// `sum_i |x_i df/dx_i(x)|`.
    #[inline]
    pub fn numerator(&self, x: &[f64]) -> f64 {
        self.weighted.iter().map(|w| w.eval(x).abs()).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.dim() {
            return Err(PolyError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if let Some(axis) = x.iter().position(|&c| c == 0.0) {
            return Err(PolyError::OnCoordinateHyperplane { axis: axis + 1 });
        }
        let denom: f64 = x.iter().map(|c| c.abs()).product();
        Ok(self.numerator(x) / denom)
    }
}

pub fn flow_ratio(f: &Polynomial, x: &Point) -> Result<f64, PolyError> {
    if x.dim() != f.dim() {
        return Err(PolyError::DimensionMismatch { expected: f.dim(), got: x.dim() });
    }
    FlowRatio::new(f).eval(x.coords())
}

/// Returns `(f(t^k1 x1, ..., t^kn xn), t f(x))`; the two agree for every
/// `t > 0` and `x` exactly when `f` is quasi-homogeneous with weights `k`.
pub fn weighted_scale(f: &Polynomial, weights: &[Rational], t: f64, x: &Point) -> Result<(f64, f64), PolyError> {
    if weights.len() != f.dim() {
        return Err(PolyError::DimensionMismatch { expected: f.dim(), got: weights.len() });
    }
    if x.dim() != f.dim() {
        return Err(PolyError::DimensionMismatch { expected: f.dim(), got: x.dim() });
    }
    let compiled = CompiledPoly::new(f);
    let scaled: Vec<f64> = x
        .coords()
        .iter()
        .zip(weights)
        .map(|(xi, k)| t.powf(rational::to_f64(k)) * xi)
        .collect();
    Ok((compiled.eval(&scaled), t * compiled.eval(x.coords())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::rational::rat;

    fn p(text: &str) -> Polynomial {
        parse_polynomial(text, None).unwrap()
    }

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn flow_ratio_examples() {
        assert_eq!(flow_ratio(&p("x1^2+x2^2"), &pt(&[1.0, 1.0])).unwrap(), 4.0);
        // 4 t^2 at t = 1/2
        assert_eq!(flow_ratio(&p("x1^2*x2^2"), &pt(&[0.5, 0.5])).unwrap(), 1.0);
        assert!(matches!(
            flow_ratio(&p("x1^2+x2^2"), &pt(&[0.0, 1.0])),
            Err(PolyError::OnCoordinateHyperplane { axis: 1 })
        ));
    }

    #[test]
    fn flow_ratio_lower_bound_on_unit_box() {
        // (2x^2 + 2y^2)/|xy| >= 4 by AM-GM, everywhere off the axes.
        let fr = FlowRatio::new(&p("x1^2+x2^2"));
        let m = 200;
        let mut min = f64::INFINITY;
        for i in 0..m {
            for j in 0..m {
                let x = -1.0 + (2 * i + 1) as f64 / m as f64;
                let y = -1.0 + (2 * j + 1) as f64 / m as f64;
                min = min.min(fr.eval(&[x, y]).unwrap());
            }
        }
        assert!(min >= 4.0 - 1e-12, "min = {min}");
        assert!(min < 4.0 + 1e-9);
    }

    #[test]
    fn weighted_scale_examples() {
        let (a, b) = weighted_scale(&p("x1^2+x2^2"), &[rat(1, 2), rat(1, 2)], 4.0, &pt(&[1.0, 1.0])).unwrap();
        assert_eq!((a, b), (8.0, 8.0));
        let (a, b) = weighted_scale(&p("x1^2*x2"), &[rat(1, 4), rat(1, 2)], 16.0, &pt(&[1.0, 1.0])).unwrap();
        assert_eq!((a, b), (16.0, 16.0));
        let (a, b) = weighted_scale(&p("x1^2+x2^3"), &[rat(1, 2), rat(1, 2)], 4.0, &pt(&[0.0, 1.0])).unwrap();
        assert_eq!((a, b), (8.0, 4.0));
    }
}
