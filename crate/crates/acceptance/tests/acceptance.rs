//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::io::Write;
use std::time::{Duration, Instant};

use phasedecay::fit::{FitKind, PowerFit};
use phasedecay::newton::{
    build_newton, check_nondegenerate, doubling_check, newton_distance, newton_distance_lp, NondegeneracyConfig, SupportSet, Verdict,
};
use phasedecay::osc::{self, CutoffSpec, DirectionPolicy, QuadConfig};
use phasedecay::quasihom::{self, Epsilon0Config, WeightStatus, WeightVector};
use phasedecay::rational::{self, rat, Rational};
use phasedecay::report::{self, AnalysisConfig, Stage};
use phasedecay::rng::CounterRng;
use phasedecay::sublevel::{self, AbsPoly, BoxDomain, FlowRatioEval, FnEval, SublevelConfig, SublevelEstimate};
use phasedecay::{parse_polynomial, Polynomial};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn p(t: &str) -> Polynomial {
    parse_polynomial(t, None).unwrap()
}

fn distance(f: &Polynomial) -> (Rational, usize) {
    let nd = build_newton(&SupportSet::of_polynomial(f).unwrap()).unwrap();
    (nd.distance.clone(), nd.diagonal_face_dim)
}

/// `max_{a in simplex} min_alpha a . alpha` over the grid of step 1/200.
fn grid_maximin(points: &[Vec<i64>], n: usize) -> f64 {
    const STEPS: i64 = 200;
    let mut best = f64::NEG_INFINITY;
    let mut eval = |a: &[f64]| {
        let v = points
            .iter()
            .map(|q| q.iter().zip(a).map(|(&e, w)| e as f64 * w).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        best = best.max(v);
    };
    let h = 1.0 / STEPS as f64;
    if n == 2 {
        for i in 0..=STEPS {
            eval(&[i as f64 * h, (STEPS - i) as f64 * h]);
        }
    } else {
        for i in 0..=STEPS {
            for j in 0..=STEPS - i {
                eval(&[i as f64 * h, j as f64 * h, (STEPS - i - j) as f64 * h]);
            }
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rng = CounterRng::new(2024);
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for case in 0..25u64 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let count = 2 + (rng.word(case, 0) % 5) as usize;
        let mut pts: Vec<Vec<i64>> = Vec::new();
        let mut k = 1;
        while pts.len() < count {
            let q: Vec<i64> = (0..n).map(|d| (rng.word(case, k * 8 + d as u64) % 9) as i64).collect();
            k += 1;
            if q.iter().any(|&e| e > 0) && !pts.contains(&q) {
                pts.push(q);
            }
        }
        let s = SupportSet::from_vecs(&pts).unwrap();
        let d = newton_distance(&build_newton(&s).unwrap());
        exact &= newton_distance_lp(&s).unwrap() == d;
        worst = worst.max((grid_maximin(&pts, n) - rational::to_f64(&d)).abs());
    }
    let t = start.elapsed();
    outcome(
        exact && worst <= 1e-2 && t < Duration::from_secs(10),
        format!("25 supports, ray-shoot == LP: {exact}, max |grid - d| = {worst:.2e}, {:.1}s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let cases = [("x1^2+x2^2", rat(1, 1), 1), ("x1^2+x2^4", rat(4, 3), 1), ("x1^2*x2^2", rat(2, 1), 0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, d, k) in cases {
        let (dd, kk) = distance(&p(t));
        pass &= dd == d && kk == k;
        parts.push(format!("{t}: d={} k={kk}", rational::format(&dd)));
    }
    outcome(pass, parts.join("; "))
}

const DOUBLING_BATTERY: [&str; 10] = [
    "x1^2+x2^2",
    "x1^2*x2",
    "x1^2*x2^2",
    "x1^2+x2^4",
    "x1^3+x2^3",
    "x1^2+x2^3",
    "x1^3-3*x1*x2^2",
    "x1^2*x2+x2^5",
    "x1^2+x2^2+x3^2",
    "x1^4+x1*x2*x3+x3^6",
];

fn criterion_3() -> Outcome {
    let mut failed = Vec::new();
    for t in DOUBLING_BATTERY {
        let c = doubling_check(&p(t)).unwrap();
        if c.d_g != &rational::int(2) * &c.d_f {
            failed.push(t);
        }
    }
    outcome(failed.is_empty(), format!("{} phases, d(g) = 2 d(f) failures: {failed:?}", DOUBLING_BATTERY.len()))
}

fn criterion_4() -> Outcome {
    let cfg = NondegeneracyConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for t in ["x1^2+x2^2", "x1^2+x2^4", "x1^3+x2^3"] {
        let start = Instant::now();
        let r = check_nondegenerate(&p(t), &cfg).unwrap();
        let el = start.elapsed();
        pass &= r.verdict == Verdict::Nondegenerate && el < Duration::from_secs(30);
        parts.push(format!("{t}: {:?} {:.1}s", r.verdict, el.as_secs_f64()));
    }
    let start = Instant::now();
    let r = check_nondegenerate(&p("(x1-x2)^2"), &cfg).unwrap();
    let el = start.elapsed();
    let witness = r.witness().map(|(_, w)| w.grad_norm);
    pass &= r.verdict == Verdict::Degenerate && witness.is_some_and(|g| g < 1e-9) && el < Duration::from_secs(30);
    parts.push(format!("(x1-x2)^2: {:?} witness |grad| = {witness:?} {:.1}s", r.verdict, el.as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let w1 = quasihom::solve_weights(&p("x1^2+x2^2")).unwrap();
    let w2 = quasihom::solve_weights(&p("x1^2 + x1*x2^3")).unwrap();
    let w3 = quasihom::solve_weights(&p("x1^2 + x2^3 + x1*x2")).unwrap();
    let mut pass = w1.weights == vec![rat(1, 2), rat(1, 2)] && w2.weights == vec![rat(1, 2), rat(1, 6)] && w3.status == WeightStatus::Infeasible;
    let mut members = 0;
    for t in DOUBLING_BATTERY {
        let f = p(t);
        let w = quasihom::solve_weights(&f).unwrap();
        if w.is_feasible() {
            members += 1;
            pass &= quasihom::euler_check(&f, &w.weights).unwrap();
        }
    }
    outcome(pass, format!("named weights exact; Euler identity checked on {members} quasi-homogeneous battery members"))
}

fn criterion_6() -> Outcome {
    let cfg = Epsilon0Config::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, want) in [("x1^2+x2^2", 1.0), ("x1^2*x2^2", 0.5)] {
        let f = p(t);
        let start = Instant::now();
        let r = quasihom::epsilon0(&f, &quasihom::solve_weights(&f).unwrap(), &cfg).unwrap();
        let el = start.elapsed();
        pass &= (r.value - want).abs() < 1e-12 && el < Duration::from_secs(60);
        parts.push(format!("{t}: {:.4} {:.1}s", r.value, el.as_secs_f64()));
    }
    let f = p("x1^2*x2");
    let w = quasihom::solve_weights(&f).unwrap();
    let alt = WeightVector::for_polynomial(&f, w.alternate().unwrap()).unwrap();
    let start = Instant::now();
    let a = quasihom::epsilon0(&f, &w, &cfg).unwrap();
    let b = quasihom::epsilon0(&f, &alt, &cfg).unwrap();
    let el = start.elapsed();
    pass &= (a.value - 0.5).abs() < 1e-12 && (a.value - b.value).abs() <= 0.05 && w.weights != alt.weights;
    pass &= el < Duration::from_secs(120);
    let show = |v: &[Rational]| v.iter().map(rational::format).collect::<Vec<_>>().join(",");
    parts.push(format!("x1^2*x2: {:.4} with ({}) and {:.4} with ({}) {:.1}s", a.value, show(&w.weights), b.value, show(&alt.weights), el.as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn fit_of(est: &SublevelEstimate, kind: FitKind) -> Option<&PowerFit> {
    match kind {
        FitKind::PurePower => est.pure.as_ref(),
        FitKind::LogAugmented => est.log_augmented.as_ref(),
    }
}

fn criterion_7() -> Outcome {
    let cfg = SublevelConfig { samples: 2_000_000, ..SublevelConfig::default() };
    let bx = BoxDomain::unit(2);
    let mut pass = true;
    let mut parts = Vec::new();
    for t in ["x1", "x1^2+x2^2"] {
        let f = parse_polynomial(t, Some(2)).unwrap();
        let est = sublevel::estimate_sublevel(&AbsPoly::new(&f), &bx, &cfg).unwrap();
        let e = fit_of(&est, FitKind::PurePower).unwrap().exponent;
        pass &= (e - 1.0).abs() <= 0.02;
        parts.push(format!("|{t}|: {e:.4}"));
    }
    let est = sublevel::estimate_sublevel(&AbsPoly::new(&p("x1*x2")), &bx, &cfg).unwrap();
    let log = fit_of(&est, FitKind::LogAugmented).unwrap();
    let lp = log.log_power.unwrap_or(0.0);
    pass &= (log.exponent - 1.0).abs() <= 0.05 && (lp - 1.0).abs() <= 0.05;
    parts.push(format!("|x1 x2|: ({:.3}, {lp:.3})", log.exponent));

    // int_{[-1,1]^2} min(1, |M g|^{-1}) in closed form.
    let mc = SublevelConfig { samples: 1_000_000, ..SublevelConfig::default() };
    let ln_1_sqrt2 = (1.0 + 2f64.sqrt()).ln();
    let mut worst: f64 = 0.0;
    for m in [10.0, 100.0, 1000.0] {
        let cases: [(Box<dyn sublevel::Evaluator>, f64); 3] = [
            (Box::new(FnEval::new(2, |x: &[f64]| x[0].abs())), 4.0 * (1.0 + f64::ln(m)) / m),
            (Box::new(FnEval::new(2, |x: &[f64]| x[0] * x[0])), 4.0 * (2.0 / m.sqrt() - 1.0 / m)),
            (
                Box::new(FnEval::new(2, |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt())),
                8.0 * ln_1_sqrt2 / m - std::f64::consts::PI / (m * m),
            ),
        ];
        for (g, exact) in cases.iter() {
            let r = sublevel::min_integral_check(g.as_ref(), &bx, m, &mc, None, 1.0).unwrap();
            worst = worst.max((r.estimate - exact).abs() / exact);
        }
    }
    pass &= worst <= 0.01;
    parts.push(format!("min-integral closed forms: max rel. error {worst:.2e}"));
    outcome(pass, parts.join("; "))
}

fn ladder_fit(t: &str, policy: &DirectionPolicy, kind: FitKind) -> (phasedecay::fit::DecayFit, f64) {
    let f = p(t);
    let phi = CutoffSpec::bump(f.dim(), 0.5);
    let lambdas = osc::ladder_lambdas(16.0, 4096.0, 12).unwrap();
    let start = Instant::now();
    let rungs = osc::decay_ladder(&f, &phi, &lambdas, policy, &QuadConfig::default()).unwrap();
    let fit = osc::fit_decay(&rungs, kind).unwrap();
    (fit, start.elapsed().as_secs_f64())
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, want, tol) in [("x1^2", 0.5, 0.05), ("x1^2+x2^2", 1.0, 0.10), ("x1^2+x2^4", 0.75, 0.07)] {
        let (fit, secs) = ladder_fit(t, &DirectionPolicy::OscillatoryOnly, FitKind::PurePower);
        let ok = (fit.delta - want).abs() <= tol && secs < 300.0;
        pass &= ok;
        parts.push(format!("{t}: {:.3} {}", fit.delta, if ok { "ok" } else { "FAIL" }));
    }
    let (fit, secs) = ladder_fit("x1^2*x2^2", &DirectionPolicy::OscillatoryOnly, FitKind::LogAugmented);
    let lp = fit.log_power.unwrap_or(0.0);
    let ok = (fit.delta - 0.5).abs() <= 0.07 && (0.5..=1.5).contains(&lp) && secs < 300.0;
    pass &= ok;
    parts.push(format!("x1^2*x2^2: ({:.3}, log {lp:.3}) {}", fit.delta, if ok { "ok" } else { "FAIL" }));
    outcome(pass, parts.join("; "))
}

const BATTERY: [&str; 4] = ["x1^2+x2^2", "x1^2*x2^2", "x1^3+x2^3", "x1^2+x2^4"];

fn flow_and_f(t: &str) -> (SublevelEstimate, SublevelEstimate) {
    let f = p(t);
    let bx = BoxDomain::unit(2);
    let cfg = SublevelConfig { samples: 2_000_000, seed: 42, ..SublevelConfig::default() };
    let fe = sublevel::estimate_sublevel(&AbsPoly::new(&f), &bx, &cfg).unwrap();
    let fl = sublevel::estimate_sublevel_lifted(&FlowRatioEval::new(&f), &bx, &SublevelConfig { seed: 43, ..cfg }).unwrap();
    (fl, fe)
}

/// `eps / (eps + 1)` from a sublevel estimate; 1 when bounded below.
fn ratio(est: &SublevelEstimate) -> f64 {
    if est.bounded_below {
        return 1.0;
    }
    let e = report::fitted_exponent(est).unwrap_or(f64::NAN);
    e / (e + 1.0)
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let policy = DirectionPolicy::WorstDirection { count: osc::DEFAULT_DIRECTIONS };
    for t in BATTERY {
        let (flow, _) = flow_and_f(t);
        let bound = ratio(&flow).min(0.5);
        let (fit, _) = ladder_fit(t, &policy, FitKind::LogAugmented);
        let ok = fit.delta >= bound - report::DECAY_TOLERANCE;
        pass &= ok;
        parts.push(format!("{t}: {:.3} >= {:.3} - 0.07 {}", fit.delta, bound, if ok { "ok" } else { "FAIL" }));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in BATTERY {
        let (flow, fe) = flow_and_f(t);
        let lhs = ratio(&flow);
        let e2 = report::fitted_exponent(&fe).unwrap_or(f64::NAN);
        let ok = lhs <= e2 + report::SUBLEVEL_TOLERANCE;
        pass &= ok;
        parts.push(format!("{t}: {lhs:.3} <= {e2:.3} + 0.05 {}", if ok { "ok" } else { "FAIL" }));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let f = p("x1^2*x2^2");
    let lambdas: Vec<f64> = (0..9).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
    let l = osc::d1_ladder(&f, &lambdas, 1.0, &BoxDomain::unit(2), 1_000_000, 42).unwrap();
    let slope = l.log_augmented.as_ref().map(|fit| fit.delta).unwrap_or(f64::NAN);
    let pure = l.pure.as_ref().map(|fit| fit.delta).unwrap_or(f64::NAN);
    let count = osc::dyadic_count(2, 1024.0);
    let pass = slope >= l.target - 0.07 && count == 121;
    outcome(pass, format!("D1 slope {slope:.3} (pure {pure:.3}) vs target {:.3} - 0.07; dyadic_count(2, 1024) = {count}", l.target))
}

fn criterion_12() -> Outcome {
    let mut cfg = AnalysisConfig::new("x1^2+x2^4");
    cfg.lambda_max = 512.0;
    cfg.ladder = 8;
    cfg.samples = 200_000;
    cfg.nondegeneracy.resolution = 128;
    cfg.stages = Stage::ALL.into_iter().collect();
    let a = report::analyze(&cfg).unwrap().to_json_string();
    let b = report::analyze(&cfg).unwrap().to_json_string();
    outcome(a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("exact geometry", criterion_1),
        ("named distances", criterion_2),
        ("doubling", criterion_3),
        ("nondegeneracy", criterion_4),
        ("quasi-homogeneity", criterion_5),
        ("eps0 values", criterion_6),
        ("sublevel oracles", criterion_7),
        ("oscillatory decay", criterion_8),
        ("worst-direction decay bound", criterion_9),
        ("sublevel exponent inequality", criterion_10),
        ("proof instrumentation", criterion_11),
        ("determinism", criterion_12),
    ];
    // libtest-style arguments: `--list`, other flags ignored, and one filter
    // that is either a criterion number or a substring of its name.
    let args: Vec<String> = std::env::args().skip(1).collect();
    let list = args.iter().any(|a| a == "--list");
    let filter = args.iter().find(|a| !a.starts_with("--"));
    let selected = |i: usize, name: &str| match filter {
        None => true,
        Some(f) => f.parse::<usize>().map_or_else(|_| name.contains(f.as_str()), |k| k == i + 1),
    };
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !selected(i, name) {
            continue;
        }
        if list {
            let _ = writeln!(out, "criterion {:>2} {name}: test", i + 1);
            continue;
        }
        let start = Instant::now();
        let o = run();
        failed += (!o.pass) as usize;
        let _ = writeln!(
            out,
            "criterion {:>2} {:<30} {} ({:.1}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        let _ = out.flush();
    }
    if failed > 0 {
        let _ = writeln!(out, "{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
