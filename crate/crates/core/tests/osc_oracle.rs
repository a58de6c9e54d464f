//! `x1^2 x2^2` against its two-term asymptotic for a tensor cutoff:
//! `|I(lambda)| ~ lambda^{-1/2} (A/2) |c1| |ln lambda + kappa|`.

use num_complex::Complex64;
use phasedecay::osc::{eval_osc_integral, CutoffSpec, DecayProbe, QuadConfig};
use phasedecay::parse_polynomial;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `int_0^rho (psi(x) - 1) / x dx` for `psi = cos^2(pi x / (2 rho))`, by Simpson.
fn j_integral(rho: f64) -> f64 {
    let n = 20_000;
    let h = rho / n as f64;
    let g = |x: f64| {
        if x == 0.0 {
            0.0
        } else {
            ((std::f64::consts::PI * x / (2.0 * rho)).cos().powi(2) - 1.0) / x
        }
    };
    let mut s = g(0.0) + g(rho);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn predicted(lambda: f64, rho: f64) -> f64 {
    let a = 4.0;
    let b = 4.0 * (2.0 * rho.ln() + 2.0 * j_integral(rho));
    let c1 = std::f64::consts::PI.sqrt() / 2.0;
    let c2_over_c1 = Complex64::new(0.5 * (-EULER_GAMMA - 2.0 * 2f64.ln()), std::f64::consts::FRAC_PI_4);
    let kappa = Complex64::new(2.0 * b / a, 0.0) - 2.0 * c2_over_c1;
    lambda.powf(-0.5) * (a / 2.0) * c1 * (Complex64::new(lambda.ln(), 0.0) + kappa).norm()
}

#[test]
fn product_of_squares_matches_asymptotic() {
    let f = parse_polynomial("x1^2*x2^2", None).unwrap();
    let phi = CutoffSpec::cosine(2, 0.5);
    let mut errs = Vec::new();
    for lambda in [512.0, 4096.0] {
        let s = eval_osc_integral(&f, &phi, &DecayProbe::oscillatory(2, lambda), &QuadConfig::default()).unwrap();
        assert!(s.converged);
        errs.push((s.abs() / predicted(lambda, 0.5) - 1.0).abs());
    }
    assert!(errs[1] < 2e-3, "{errs:?}");
    assert!(errs[1] < errs[0], "{errs:?}");
}
