use num_traits::{Signed, Zero};
use serde::Serialize;

use super::univariate::UPoly;
use super::{euler_check, QuasiHomError, WeightVector};
use crate::fit::PowerFit;
use crate::poly::Polynomial;
use crate::rational::{self, Rational};
use crate::sublevel::{estimate_sublevel, AbsPoly, BoxDomain, SublevelConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Epsilon0Config {
    pub samples: usize,
    pub seed: u64,
    pub s_grid: Vec<f64>,
    /// Also fit sublevel growth on one-variable faces, whose exponents are
    /// otherwise decided exactly.
    pub fit_one_dimensional: bool,
}

impl Default for Epsilon0Config {
    fn default() -> Self {
        Epsilon0Config {
            samples: 2_000_000,
            seed: 0,
            s_grid: crate::sublevel::default_s_grid(),
            fit_one_dimensional: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceMethod {
    /// `1 / (largest multiplicity of a real root in [-1, 1])`.
    RootMultiplicity,
    /// No zero on the face, so no constraint.
    NonVanishing,
    SublevelFit,
    IdenticallyZero,
}

/// Integrability exponent of `|f|^{-eps}` restricted to `x_axis = sign`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryExponent {
    pub axis: usize,
    pub sign: i8,
    pub restriction: String,
    pub method: FaceMethod,
    /// `None` when the face imposes no constraint.
    pub exponent: Option<f64>,
    #[serde(serialize_with = "rational::serde_rational_opt::serialize")]
    pub exact: Option<Rational>,
    pub multiplicity: Option<u32>,
    pub pure_fit: Option<PowerFit>,
    pub log_fit: Option<PowerFit>,
}

impl BoundaryExponent {
    pub fn label(&self) -> String {
        format!("x{}={}1", self.axis, if self.sign > 0 { '+' } else { '-' })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Epsilon0Result {
    pub value: f64,
    /// Present when no Monte Carlo fit took part in the minimum.
    #[serde(serialize_with = "rational::serde_rational_opt::serialize")]
    pub exact: Option<Rational>,
    #[serde(with = "rational::serde_rational")]
    pub cap: Rational,
    #[serde(with = "rational::serde_rational_vec")]
    pub weights: Vec<Rational>,
    pub faces: Vec<BoundaryExponent>,
    /// `"cap"` and/or face labels attaining the minimum.
    pub binding: Vec<String>,
    pub zero_restriction: bool,
}

fn unit_interval() -> (Rational, Rational) {
    (rational::int(-1), rational::int(1))
}

fn fit_restriction(g: &Polynomial, config: &Epsilon0Config, salt: u64) -> Result<(bool, Option<PowerFit>, Option<PowerFit>), QuasiHomError> {
    let sub = SublevelConfig { s_grid: config.s_grid.clone(), samples: config.samples, seed: config.seed ^ salt };
    let est = estimate_sublevel(&AbsPoly::new(g), &BoxDomain::unit(g.dim()), &sub)
        .map_err(|e| QuasiHomError::Sublevel(e.to_string()))?;
    Ok((est.bounded_below, est.pure, est.log_augmented))
}

fn boundary_face(f: &Polynomial, axis: usize, sign: i8, config: &Epsilon0Config) -> Result<BoundaryExponent, QuasiHomError> {
    let n = f.dim();
    let value = rational::int(sign as i64);
    let mut face = BoundaryExponent {
        axis,
        sign,
        restriction: String::new(),
        method: FaceMethod::NonVanishing,
        exponent: None,
        exact: None,
        multiplicity: None,
        pure_fit: None,
        log_fit: None,
    };
    if n == 1 {
        let v = f.terms().fold(Rational::zero(), |acc, (a, c)| {
            acc + c * num_traits::pow(value.clone(), a.0[0] as usize)
        });
        face.restriction = rational::format(&v);
        if v.is_zero() {
            face.method = FaceMethod::IdenticallyZero;
            face.exponent = Some(0.0);
            face.exact = Some(Rational::zero());
        }
        return Ok(face);
    }
    let g = f.restrict(axis, &value)?;
    face.restriction = g.to_string();
    if g.is_zero() {
        face.method = FaceMethod::IdenticallyZero;
        face.exponent = Some(0.0);
        face.exact = Some(Rational::zero());
        return Ok(face);
    }
    let salt = (axis as u64) << 1 | (sign > 0) as u64;
    if g.dim() == 1 {
        let (a, b) = unit_interval();
        if let Some(m) = UPoly::from_polynomial(&g).max_root_multiplicity(&a, &b) {
            let e = Rational::new(1.into(), m.into());
            face.method = FaceMethod::RootMultiplicity;
            face.exponent = Some(rational::to_f64(&e));
            face.exact = Some(e);
            face.multiplicity = Some(m);
        }
        if config.fit_one_dimensional {
            let (_, pure, log) = fit_restriction(&g, config, salt)?;
            face.pure_fit = pure;
            face.log_fit = log;
        }
        return Ok(face);
    }
    let (bounded, pure, log) = fit_restriction(&g, config, salt)?;
    if !bounded {
        face.method = FaceMethod::SublevelFit;
        face.exponent = log.as_ref().or(pure.as_ref()).map(|p| p.exponent);
    }
    face.pure_fit = pure;
    face.log_fit = log;
    Ok(face)
}

/// `eps_0 = min(sum k_i, boundary exponents of |f| on the faces x_i = +-1
/// of the unit box)`.
pub fn epsilon0(f: &Polynomial, k: &WeightVector, config: &Epsilon0Config) -> Result<Epsilon0Result, QuasiHomError> {
    if !k.is_feasible() {
        return Err(QuasiHomError::Infeasible);
    }
    if !euler_check(f, &k.weights)? {
        return Err(QuasiHomError::EulerFails);
    }
    let cap = k.total();
    let mut faces = Vec::with_capacity(2 * f.dim());
    for axis in 1..=f.dim() {
        for sign in [1i8, -1] {
            faces.push(boundary_face(f, axis, sign, config)?);
        }
    }
    let cap_f = rational::to_f64(&cap);
    let value = faces.iter().filter_map(|b| b.exponent).fold(cap_f, f64::min);
    let all_exact = faces.iter().all(|b| b.exponent.is_none() || b.exact.is_some());
    let exact = all_exact.then(|| {
        faces
            .iter()
            .filter_map(|b| b.exact.clone())
            .fold(cap.clone(), |m, e| if e < m { e } else { m })
    });

    let attains = |e: f64, ex: Option<&Rational>| match (&exact, ex) {
        (Some(v), Some(x)) => x == v,
        _ => (e - value).abs() <= 1e-9,
    };
    let mut binding = Vec::new();
    if attains(cap_f, Some(&cap)) {
        binding.push("cap".to_string());
    }
    for b in &faces {
        if let Some(e) = b.exponent {
            if attains(e, b.exact.as_ref()) {
                binding.push(b.label());
            }
        }
    }
    let zero_restriction = faces.iter().any(|b| b.method == FaceMethod::IdenticallyZero);
    debug_assert!(value <= cap_f);
    debug_assert!(exact.as_ref().map_or(true, |e| !e.is_negative()));
    Ok(Epsilon0Result { value, exact, cap, weights: k.weights.clone(), faces, binding, zero_restriction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::quasihom::solve_weights;
    use crate::rational::rat;

    fn quick() -> Epsilon0Config {
        Epsilon0Config { samples: 20_000, fit_one_dimensional: false, ..Epsilon0Config::default() }
    }

    fn eps(text: &str) -> Epsilon0Result {
        let f = parse_polynomial(text, None).unwrap();
        epsilon0(&f, &solve_weights(&f).unwrap(), &quick()).unwrap()
    }

    #[test]
    fn circle_cap_binds() {
        let r = eps("x1^2+x2^2");
        assert_eq!(r.exact, Some(rat(1, 1)));
        assert_eq!(r.binding, vec!["cap"]);
        assert!(r.faces.iter().all(|b| b.method == FaceMethod::NonVanishing));
    }

    #[test]
    fn square_monomial() {
        let r = eps("x1^2*x2^2");
        assert_eq!(r.exact, Some(rat(1, 2)));
        assert_eq!(r.binding.len(), 5);
    }

    #[test]
    fn both_weights_of_x1sq_x2() {
        let f = parse_polynomial("x1^2*x2", None).unwrap();
        let a = epsilon0(&f, &solve_weights(&f).unwrap(), &quick()).unwrap();
        let k = WeightVector::for_polynomial(&f, vec![rat(1, 4), rat(1, 2)]).unwrap();
        let b = epsilon0(&f, &k, &quick()).unwrap();
        assert_eq!(a.exact, Some(rat(1, 2)));
        assert_eq!(b.exact, Some(rat(1, 2)));
        assert_eq!(b.cap, rat(3, 4));
        assert_eq!(b.binding, vec!["x2=+1", "x2=-1"]);
    }

    #[test]
    fn zero_restriction_flagged() {
        // x1^2 x2^2 (x2 - 1)^2 vanishes identically on x2 = 1.
        let f = parse_polynomial("x1^2*x2^2 - 2*x1^2*x2^3 + x1^2*x2^4", None).unwrap();
        let face = boundary_face(&f, 2, 1, &quick()).unwrap();
        assert_eq!(face.method, FaceMethod::IdenticallyZero);
        assert_eq!(face.exponent, Some(0.0));
    }

    #[test]
    fn three_variable_face_fit() {
        let f = parse_polynomial("x1^2+x2^2+x3^2", None).unwrap();
        let r = epsilon0(&f, &solve_weights(&f).unwrap(), &quick()).unwrap();
        assert_eq!(r.cap, rat(3, 2));
        assert!(r.faces.iter().all(|b| b.method == FaceMethod::NonVanishing));
        assert_eq!(r.exact, Some(rat(3, 2)));
    }

    #[test]
    fn rejects_wrong_weights() {
        let f = parse_polynomial("x1^2+x2^3", None).unwrap();
        let k = WeightVector { status: super::super::WeightStatus::Unique, weights: vec![rat(1, 2), rat(1, 2)], null_basis: vec![] };
        assert_eq!(epsilon0(&f, &k, &quick()), Err(QuasiHomError::EulerFails));
    }
}
