use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use phasedecay::fit::FitKind;
use phasedecay::newton::{build_newton, check_nondegenerate, doubling_check, NondegeneracyConfig, SupportSet};
use phasedecay::osc::{self, CutoffSpec, DirectionPolicy, QuadConfig};
use phasedecay::report::{self, AnalysisConfig, AnalysisError, Stage};
use phasedecay::sublevel::{self, AbsPoly, BoxDomain, Evaluator, FlowRatioEval, SublevelConfig};
use phasedecay::Polynomial;

#[derive(Parser)]
#[command(name = "phasedecay", version, about = "Newton polyhedra, sublevel growth and oscillatory decay of polynomial phases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a report.
    Analyze(AnalyzeArgs),
    /// Newton polyhedron, distance, doubling and nondegeneracy.
    Newton(NewtonArgs),
    /// Sublevel-set measures and exponent fits.
    Sublevel(SublevelArgs),
    /// A decay ladder with its fits.
    Decay(DecayArgs),
    /// The min(1, |M g|^{-1}) integral against its sublevel bound.
    Lemma31(LemmaArgs),
}

#[derive(Args)]
struct PhaseArg {
    /// Polynomial text, or @path to a file holding text or JSON.
    #[arg(long)]
    phase: String,
}

#[derive(Args)]
struct BoxArg {
    /// Interval `a,b` for one variable; repeat once per variable.
    #[arg(long = "box", value_parser = parse_interval, allow_hyphen_values = true)]
    intervals: Vec<(f64, f64)>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    phase: PhaseArg,
    #[command(flatten)]
    domain: BoxArg,
    #[arg(long, default_value_t = 16.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 4096.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 12)]
    ladder: usize,
    #[arg(long, default_value_t = osc::DEFAULT_DIRECTIONS)]
    directions: usize,
    #[arg(long, default_value = "2e6", value_parser = parse_count)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest zero order of the face polynomials (enables the case split).
    #[arg(long)]
    zero_order: Option<u32>,
    #[arg(long, default_value = "geom,qh,sublevel,decay", value_delimiter = ',')]
    stages: Vec<Stage>,
    /// Cutoff radius [default: half the box's half-width].
    #[arg(long)]
    radius: Option<f64>,
    /// Times to halve the cutoff radius when a ladder does not converge.
    #[arg(long, default_value_t = 0)]
    shrink_retries: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct NewtonArgs {
    #[command(flatten)]
    phase: PhaseArg,
    #[arg(long, default_value_t = 512)]
    resolution: usize,
}

#[derive(Args)]
struct SublevelArgs {
    #[command(flatten)]
    phase: PhaseArg,
    #[command(flatten)]
    domain: BoxArg,
    /// `f` for |f|, `flow` for the weighted flow ratio.
    #[arg(long, default_value = "f")]
    target: String,
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    phase: PhaseArg,
    #[arg(long, default_value_t = 16.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 4096.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 12)]
    ladder: usize,
    /// Direction count; 0 evaluates `b = 0` only.
    #[arg(long, default_value_t = 0)]
    directions: usize,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LemmaArgs {
    #[command(flatten)]
    phase: PhaseArg,
    #[command(flatten)]
    domain: BoxArg,
    /// Values of M.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    m: Vec<f64>,
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(a < b) {
        return Err(format!("interval needs a < b, got {a},{b}"));
    }
    Ok((a, b))
}

fn parse_count(s: &str) -> Result<usize, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s}: {e}"))?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e15) {
        return Err(format!("expected a positive integer count, got {s}"));
    }
    Ok(v as usize)
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read_phase_text(arg: &str) -> Result<String, Failure> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}"))),
        None => Ok(arg.to_string()),
    }
}

fn load_phase(arg: &PhaseArg) -> Result<Polynomial, Failure> {
    let f = report::parse_phase(&read_phase_text(&arg.phase)?)?;
    report::check_phase(&f)?;
    Ok(f)
}

fn domain(b: &BoxArg, n: usize) -> Result<BoxDomain, Failure> {
    if b.intervals.is_empty() {
        return Ok(BoxDomain::unit(n));
    }
    if b.intervals.len() != n {
        return Err(Failure::Input(format!("--box given {} times for {n} variables", b.intervals.len())));
    }
    BoxDomain::new(b.intervals.iter().map(|p| p.0).collect(), b.intervals.iter().map(|p| p.1).collect()).map_err(input)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("value serializes"));
}

fn analyze(a: AnalyzeArgs) -> Result<i32, Failure> {
    let mut cfg = AnalysisConfig::new(read_phase_text(&a.phase.phase)?);
    if !a.domain.intervals.is_empty() {
        cfg.domain = Some(a.domain.intervals.clone());
    }
    cfg.lambda_min = a.lambda_min;
    cfg.lambda_max = a.lambda_max;
    cfg.ladder = a.ladder;
    cfg.directions = a.directions;
    cfg.samples = a.samples;
    cfg.seed = a.seed;
    cfg.zero_order = a.zero_order;
    cfg.stages = a.stages.into_iter().collect();
    cfg.shrink_retries = a.shrink_retries;
    if let Some(r) = a.radius {
        let n = report::parse_phase(&cfg.phase)?.dim();
        cfg.cutoff = Some(CutoffSpec::bump(n, r));
    }
    let r = report::analyze(&cfg)?;
    r.write_json(&a.out).map_err(input)?;
    if let Some(dir) = &a.csv_dir {
        r.write_csv_bundle(dir).map_err(input)?;
    }
    if let Some(md) = &a.markdown {
        r.write_markdown(md).map_err(input)?;
    }
    eprint!("{}", r.to_markdown());
    Ok(r.status.exit_code())
}

fn newton(a: NewtonArgs) -> Result<i32, Failure> {
    let f = load_phase(&a.phase)?;
    let nd = build_newton(&SupportSet::of_polynomial(&f).map_err(input)?).map_err(input)?;
    let doubling = doubling_check(&f).map_err(input)?;
    let cfg = NondegeneracyConfig { resolution: a.resolution, ..NondegeneracyConfig::default() };
    let nondeg = check_nondegenerate(&f, &cfg).map_err(input)?;
    print_json(&json!({ "newton": nd.to_json(), "doubling": doubling, "nondegeneracy": nondeg }));
    Ok(0)
}

fn sublevel_cmd(a: SublevelArgs) -> Result<i32, Failure> {
    let f = load_phase(&a.phase)?;
    let bx = domain(&a.domain, f.dim())?;
    let cfg = SublevelConfig { samples: a.samples, seed: a.seed, ..SublevelConfig::default() };
    let abs;
    let flow;
    let g: &dyn Evaluator = match a.target.as_str() {
        "f" => {
            abs = AbsPoly::new(&f);
            &abs
        }
        "flow" => {
            flow = FlowRatioEval::new(&f);
            &flow
        }
        t => return Err(Failure::Input(format!("unknown target '{t}' (expected f or flow)"))),
    };
    let est = if a.target == "flow" {
        sublevel::estimate_sublevel_lifted(g, &bx, &cfg)
    } else {
        sublevel::estimate_sublevel(g, &bx, &cfg)
    }
    .map_err(input)?;
    if let Some(p) = &a.csv {
        write_with(p, |w| est.write_csv(w))?;
    }
    print_json(&serde_json::to_value(&est).expect("serializes"));
    Ok(0)
}

fn write_with(p: &Path, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<(), Failure> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
    std::fs::write(p, buf).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
}

fn decay(a: DecayArgs) -> Result<i32, Failure> {
    let f = load_phase(&a.phase)?;
    let phi = CutoffSpec::bump(f.dim(), a.radius);
    phi.validate().map_err(Failure::Input)?;
    let lambdas = osc::ladder_lambdas(a.lambda_min, a.lambda_max, a.ladder).map_err(input)?;
    let policy = match a.directions {
        0 => DirectionPolicy::OscillatoryOnly,
        count => DirectionPolicy::WorstDirection { count },
    };
    let rungs = osc::decay_ladder(&f, &phi, &lambdas, &policy, &QuadConfig::default()).map_err(input)?;
    if let Some(p) = &a.csv {
        write_with(p, |w| osc::write_ladder_csv(&rungs, false, w))?;
    }
    let pure = osc::fit_decay(&rungs, FitKind::PurePower).ok();
    let log = osc::fit_decay(&rungs, FitKind::LogAugmented).ok();
    print_json(&json!({ "policy": policy, "rungs": rungs, "pure": pure, "log_augmented": log }));
    if rungs.iter().any(|r| !r.sample.converged) {
        return Err(Failure::Numerical("some rungs did not converge".into()));
    }
    Ok(0)
}

fn lemma(a: LemmaArgs) -> Result<i32, Failure> {
    let f = load_phase(&a.phase)?;
    let bx = domain(&a.domain, f.dim())?;
    let cfg = SublevelConfig { samples: a.samples, seed: a.seed, ..SublevelConfig::default() };
    let kappa = sublevel::calibrate_kappa(&a.m, &cfg).map_err(input)?;
    let g = AbsPoly::new(&f);
    let checks = a
        .m
        .iter()
        .map(|&m| sublevel::min_integral_check(&g, &bx, m, &cfg, None, kappa))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let ok = checks.iter().all(|c| c.within_bound);
    print_json(&json!({ "kappa": kappa, "checks": checks }));
    Ok(if ok { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Newton(a) => newton(a),
        Command::Sublevel(a) => sublevel_cmd(a),
        Command::Decay(a) => decay(a),
        Command::Lemma31(a) => lemma(a),
    };
    match r {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
