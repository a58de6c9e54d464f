use serde::Serialize;

use super::{build_newton, NewtonError, SupportSet};
use crate::poly::Polynomial;
use crate::rational::{self, Rational};

/// Distances for `g = sum_i (x_i df/dx_i)^2` and `h = g / (x_1 ... x_n)^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingCheck {
    #[serde(with = "rational::serde_rational")]
    pub d_f: Rational,
    #[serde(with = "rational::serde_rational")]
    pub d_g: Rational,
    #[serde(with = "rational::serde_rational")]
    pub d_h: Rational,
    pub pass: bool,
}

pub fn flow_square(f: &Polynomial) -> Polynomial {
    let mut g = Polynomial::zero(f.dim());
    for i in 1..=f.dim() {
        let w = f.weighted_partial(i).expect("index in range");
        g = &g + &(&w * &w);
    }
    g
}

pub fn doubling_check(f: &Polynomial) -> Result<DoublingCheck, NewtonError> {
    let d_f = build_newton(&SupportSet::of_polynomial(f)?)?.distance;
    let g = flow_square(f);
    let g_support = SupportSet::of_polynomial(&g)?;
    let d_g = build_newton(&g_support)?.distance;
    let d_h = build_newton(&g_support.shifted(-2))?.distance;
    let two = rational::int(2);
    let pass = d_g == &two * &d_f && d_h == &d_g - &two;
    Ok(DoublingCheck { d_f, d_g, d_h, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use crate::rational::int;

    fn p(t: &str) -> Polynomial {
        parse_polynomial(t, None).unwrap()
    }

    #[test]
    fn examples() {
        for (text, df, g) in [
            ("x1^2+x2^2", 1, "4*x1^4+4*x2^4"),
            ("x1^2*x2", 2, "5*x1^4*x2^2"),
            ("x1^2*x2^2", 2, "8*x1^4*x2^4"),
        ] {
            let f = p(text);
            assert_eq!(flow_square(&f), p(g));
            let c = doubling_check(&f).unwrap();
            assert_eq!(c.d_f, int(df));
            assert_eq!(c.d_g, int(2 * df));
            assert_eq!(c.d_h, int(2 * df - 2));
            assert!(c.pass);
        }
    }
}
