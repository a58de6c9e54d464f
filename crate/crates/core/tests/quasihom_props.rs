use phasedecay::poly::{weighted_scale, ExponentVector};
use phasedecay::quasihom::{euler_check, solve_weights};
use phasedecay::rational::{self, int, rat};
use phasedecay::{Point, Polynomial, Rational};
use proptest::prelude::*;

/// Monomials `x1^a x2^b` with `a / p + b / q = 1`, so weights `(1/p, 1/q)`.
fn quasi_homogeneous() -> impl Strategy<Value = (Polynomial, Vec<Rational>)> {
    (1i64..=6, 1i64..=6, prop::collection::vec((-3i64..=3, any::<bool>()), 1..5)).prop_map(|(p, q, cs)| {
        let mut terms = Vec::new();
        for a in 0..=p {
            if (q * (p - a)) % p == 0 {
                terms.push(ExponentVector::new(vec![a, q * (p - a) / p]));
            }
        }
        let mut f = Polynomial::from_terms(2, cs.iter().zip(terms.iter().cycle()).map(|((c, _), t)| (t.clone(), int(*c))));
        if f.is_zero() {
            f = Polynomial::from_terms(2, [(ExponentVector::new(vec![p, 0]), int(1))]);
        }
        (f, vec![rat(1, p), rat(1, q)])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_identity_for_constructed_weights((f, k) in quasi_homogeneous()) {
        prop_assert!(euler_check(&f, &k).unwrap());
    }

    #[test]
    fn solved_weights_satisfy_euler((f, _) in quasi_homogeneous()) {
        let w = solve_weights(&f).unwrap();
        prop_assert!(w.is_feasible());
        prop_assert!(euler_check(&f, &w.weights).unwrap());
        for alpha in f.support() {
            prop_assert_eq!(rational::dot_int(&w.weights, alpha.as_slice()), int(1));
        }
    }

    #[test]
    fn weighted_dilation_scales_linearly((f, k) in quasi_homogeneous(), t in 0.05f64..4.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let (lhs, rhs) = weighted_scale(&f, &k, t, &Point::new(vec![x, y]).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }
}
