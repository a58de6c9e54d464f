//! The end-to-end analysis of one phase and its output formats.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{DecayFit, FitKind, PowerFit};
use crate::newton::{
    build_newton, check_nondegenerate, doubling_check, DoublingCheck, NewtonJson, NondegeneracyConfig, NondegeneracyReport,
    SupportSet, Verdict,
};
use crate::osc::{self, CutoffSpec, DirectionPolicy, LadderRung, QuadConfig};
use crate::poly::{parse_polynomial, parse_polynomial_json, Polynomial};
use crate::quasihom::{self, Epsilon0Config, Epsilon0Result, WeightVector};
use crate::rational::{self, Rational};
use crate::sublevel::{self, AbsPoly, BoxDomain, FlowRatioEval, SublevelConfig, SublevelEstimate};

/// Tolerance on an empirical decay exponent below a guaranteed one.
pub const DECAY_TOLERANCE: f64 = 0.07;
/// Tolerance on `eps_1 / (eps_1 + 1) <= eps_2`.
pub const SUBLEVEL_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Geom,
    Qh,
    Sublevel,
    Decay,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Geom, Stage::Qh, Stage::Sublevel, Stage::Decay];
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "geom" => Ok(Stage::Geom),
            "qh" => Ok(Stage::Qh),
            "sublevel" => Ok(Stage::Sublevel),
            "decay" => Ok(Stage::Decay),
            other => Err(format!("unknown stage '{other}' (expected geom, qh, sublevel or decay)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Polynomial text, or a JSON term list when it starts with `{`.
    pub phase: String,
    /// `(lo, hi)` per variable; the unit box when absent.
    pub domain: Option<Vec<(f64, f64)>>,
    /// Smooth bump at half the box's half-width when absent.
    pub cutoff: Option<CutoffSpec>,
    /// Times the cutoff radius may be halved when a ladder does not converge.
    pub shrink_retries: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub ladder: usize,
    pub directions: usize,
    pub samples: usize,
    pub seed: u64,
    /// Largest zero order of the face polynomials, supplied by the user.
    pub zero_order: Option<u32>,
    pub stages: BTreeSet<Stage>,
    pub quadrature: QuadConfig,
    pub nondegeneracy: NondegeneracyConfig,
    /// Largest tolerated fraction of unconverged rungs.
    pub unconverged_limit: f64,
}

impl AnalysisConfig {
    pub fn new(phase: impl Into<String>) -> Self {
        AnalysisConfig {
            phase: phase.into(),
            domain: None,
            cutoff: None,
            shrink_retries: 0,
            lambda_min: 16.0,
            lambda_max: 4096.0,
            ladder: 12,
            directions: osc::DEFAULT_DIRECTIONS,
            samples: 2_000_000,
            seed: 42,
            zero_order: None,
            stages: Stage::ALL.into_iter().collect(),
            quadrature: QuadConfig::default(),
            nondegeneracy: NondegeneracyConfig::default(),
            unconverged_limit: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::Config(m));
        if !(self.lambda_min >= 2.0 && self.lambda_max > self.lambda_min && self.lambda_max.is_finite()) {
            return bad(format!("need 2 <= lambda-min < lambda-max, got {} and {}", self.lambda_min, self.lambda_max));
        }
        if self.ladder < 2 {
            return bad("ladder needs at least 2 rungs".into());
        }
        if self.directions == 0 || self.samples == 0 {
            return bad("direction and sample counts must be positive".into());
        }
        if self.samples < sublevel::MIN_SAMPLES {
            return bad(format!("need at least {} samples", sublevel::MIN_SAMPLES));
        }
        if !(0.0..=1.0).contains(&self.unconverged_limit) {
            return bad("unconverged limit must lie in [0, 1]".into());
        }
        if self.zero_order == Some(0) {
            return bad("zero order must be positive".into());
        }
        Ok(())
    }

    fn enabled(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("phase rejected: {0}")]
    Assumption(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct EmitError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

pub fn parse_phase(text: &str) -> Result<Polynomial, AnalysisError> {
    let t = text.trim_start();
    let r = if t.starts_with('{') { parse_polynomial_json(t) } else { parse_polynomial(t, None) };
    r.map_err(|e| AnalysisError::Parse(e.to_string()))
}

/// Rejects phases violating `f(0) = 0` or `grad f(0) = 0`.
pub fn check_phase(f: &Polynomial) -> Result<(), AnalysisError> {
    if f.is_zero() {
        return Err(AnalysisError::Assumption("the phase is identically zero".into()));
    }
    match f.standing_assumption_violation() {
        Some(v) => Err(AnalysisError::Assumption(v.to_string())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryBlock {
    pub newton: NewtonJson,
    pub distance: f64,
    /// Support of the face met by the diagonal.
    pub diagonal_face: Vec<Vec<i64>>,
    pub doubling: DoublingCheck,
    pub nondegeneracy: NondegeneracyReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiHomogeneousBlock {
    pub weights: WeightVector,
    pub euler_identity: bool,
    pub epsilon0: Option<Epsilon0Result>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SublevelBlock {
    /// `m({|f| < s})`.
    pub f: SublevelEstimate,
    /// `m({flow ratio < s})`.
    pub flow: SublevelEstimate,
    /// Exponent used downstream for `|f|`.
    pub epsilon_f: Option<f64>,
    /// Exponent used downstream for the flow ratio; `None` when the ratio
    /// is bounded below, which allows any exponent.
    pub epsilon_flow: Option<f64>,
}

/// The exponent of an estimate; the log-augmented fit when present.
/// Log-augmented exponent when that fit exists, else the pure one.
pub fn fitted_exponent(est: &SublevelEstimate) -> Option<f64> {
    est.log_augmented.as_ref().or(est.pure.as_ref()).map(|f: &PowerFit| f.exponent)
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub exponent: f64,
    #[serde(serialize_with = "rational::serde_rational_opt::serialize")]
    pub exact: Option<Rational>,
    pub log_power: Option<u32>,
    pub basis: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroOrderSplit {
    /// `"a"`, `"b"` or `"c"`.
    pub case: String,
    pub zero_order: u32,
    pub prediction: Prediction,
    /// Case b with non-integer distance also allows one log power fewer.
    pub log_power_improvable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Predictions {
    #[serde(rename = "theorem-1.1-I")]
    pub flow_bound_i: Option<Prediction>,
    #[serde(rename = "theorem-1.1-muhat")]
    pub flow_bound_muhat: Option<Prediction>,
    #[serde(rename = "corollary-1.1.1")]
    pub corollary_bound: Option<f64>,
    pub varchenko: Option<Prediction>,
    #[serde(rename = "theorem-2.2")]
    pub zero_order_split: Option<ZeroOrderSplit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub policy: DirectionPolicy,
    pub rungs: Vec<LadderRung>,
    pub pure: Option<DecayFit>,
    pub log_augmented: Option<DecayFit>,
    pub fit_note: Option<String>,
    pub unconverged_fraction: f64,
}

impl LadderReport {
    /// The decay exponent used in comparisons.
    pub fn delta(&self) -> Option<f64> {
        self.log_augmented.as_ref().or(self.pure.as_ref()).map(|f| f.delta)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalBlock {
    /// The cutoff the ladders were computed with.
    pub cutoff: CutoffSpec,
    pub shrinks: usize,
    pub decay_i: LadderReport,
    pub decay_muhat: LadderReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagStatus {
    Ok,
    Violation,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyFlag {
    pub name: String,
    /// Lower bound the empirical value must reach, up to `tolerance`.
    pub bound: Option<f64>,
    pub empirical: Option<f64>,
    pub tolerance: f64,
    pub status: FlagStatus,
    pub note: Option<String>,
}

impl ConsistencyFlag {
    fn compare(name: &str, bound: Option<f64>, empirical: Option<f64>, tolerance: f64) -> Self {
        let status = match (bound, empirical) {
            (Some(b), Some(e)) if e < b - tolerance => FlagStatus::Violation,
            (Some(_), Some(_)) => FlagStatus::Ok,
            _ => FlagStatus::Skipped,
        };
        ConsistencyFlag { name: name.into(), bound, empirical, tolerance, status, note: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStatus {
    Ok,
    Inconsistent,
    Unconverged,
}

impl ReportStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::Ok => 0,
            ReportStatus::Inconsistent => 2,
            ReportStatus::Unconverged => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub phase: String,
    pub dimension: usize,
    pub config: AnalysisConfig,
    pub geometry: Option<GeometryBlock>,
    pub quasi_homogeneous: Option<QuasiHomogeneousBlock>,
    pub sublevel: Option<SublevelBlock>,
    pub predictions: Predictions,
    pub empirical: Option<EmpiricalBlock>,
    pub consistency: Vec<ConsistencyFlag>,
    pub status: ReportStatus,
}

fn stage_err(stage: &'static str) -> impl Fn(String) -> AnalysisError {
    move |message| AnalysisError::Stage { stage, message }
}

fn analysis_box(cfg: &AnalysisConfig, n: usize) -> Result<BoxDomain, AnalysisError> {
    match &cfg.domain {
        None => Ok(BoxDomain::unit(n)),
        Some(d) => {
            if d.len() != n {
                return Err(AnalysisError::Config(format!("box has {} sides for {n} variables", d.len())));
            }
            BoxDomain::new(d.iter().map(|p| p.0).collect(), d.iter().map(|p| p.1).collect())
                .map_err(|e| AnalysisError::Config(e.to_string()))
        }
    }
}

fn geometry(f: &Polynomial, cfg: &AnalysisConfig) -> Result<GeometryBlock, AnalysisError> {
    let err = stage_err("geom");
    let nd = build_newton(&SupportSet::of_polynomial(f).map_err(|e| err(e.to_string()))?).map_err(|e| err(e.to_string()))?;
    let doubling = doubling_check(f).map_err(|e| err(e.to_string()))?;
    let nondegeneracy = check_nondegenerate(f, &cfg.nondegeneracy).map_err(|e| err(e.to_string()))?;
    Ok(GeometryBlock {
        distance: rational::to_f64(&nd.distance),
        diagonal_face: nd.diagonal_face_support.iter().map(|a| a.0.clone()).collect(),
        newton: nd.to_json(),
        doubling,
        nondegeneracy,
    })
}

fn quasi_homogeneous(f: &Polynomial, cfg: &AnalysisConfig) -> Result<QuasiHomogeneousBlock, AnalysisError> {
    let err = stage_err("qh");
    let weights = quasihom::solve_weights(f).map_err(|e| err(e.to_string()))?;
    if !weights.is_feasible() {
        return Ok(QuasiHomogeneousBlock { weights, euler_identity: false, epsilon0: None });
    }
    let euler_identity = quasihom::euler_check(f, &weights.weights).map_err(|e| err(e.to_string()))?;
    let e0cfg = Epsilon0Config { samples: cfg.samples, seed: cfg.seed, ..Epsilon0Config::default() };
    let epsilon0 = quasihom::epsilon0(f, &weights, &e0cfg).map_err(|e| err(e.to_string()))?;
    Ok(QuasiHomogeneousBlock { weights, euler_identity, epsilon0: Some(epsilon0) })
}

fn sublevel_stage(f: &Polynomial, cfg: &AnalysisConfig) -> Result<SublevelBlock, AnalysisError> {
    let err = stage_err("sublevel");
    let bx = analysis_box(cfg, f.dim())?;
    let sub = SublevelConfig { samples: cfg.samples, seed: cfg.seed, ..SublevelConfig::default() };
    let fe = sublevel::estimate_sublevel(&AbsPoly::new(f), &bx, &sub).map_err(|e| err(e.to_string()))?;
    let flow_cfg = SublevelConfig { seed: cfg.seed.wrapping_add(1), ..sub };
    let fl = sublevel::estimate_sublevel_lifted(&FlowRatioEval::new(f), &bx, &flow_cfg).map_err(|e| err(e.to_string()))?;
    Ok(SublevelBlock {
        epsilon_f: fitted_exponent(&fe),
        epsilon_flow: if fl.bounded_below { None } else { fitted_exponent(&fl) },
        f: fe,
        flow: fl,
    })
}

fn ladder(f: &Polynomial, phi: &CutoffSpec, lambdas: &[f64], policy: DirectionPolicy, cfg: &AnalysisConfig) -> Result<LadderReport, AnalysisError> {
    let rungs = osc::decay_ladder(f, phi, lambdas, &policy, &cfg.quadrature).map_err(|e| stage_err("decay")(e.to_string()))?;
    let pure = osc::fit_decay(&rungs, FitKind::PurePower);
    let log = osc::fit_decay(&rungs, FitKind::LogAugmented);
    let unconverged = rungs.iter().filter(|r| !r.sample.converged).count();
    Ok(LadderReport {
        policy,
        fit_note: pure.as_ref().err().map(|e| e.to_string()),
        pure: pure.ok(),
        log_augmented: log.ok(),
        unconverged_fraction: unconverged as f64 / rungs.len() as f64,
        rungs,
    })
}

fn decay_stage(f: &Polynomial, cfg: &AnalysisConfig) -> Result<EmpiricalBlock, AnalysisError> {
    let n = f.dim();
    if n > osc::MAX_DIM {
        return Err(AnalysisError::Config(format!("quadrature supports n <= {}, phase has n = {n}", osc::MAX_DIM)));
    }
    let bx = analysis_box(cfg, n)?;
    let mut phi = match &cfg.cutoff {
        Some(c) => c.clone(),
        None => default_cutoff(&bx)?,
    };
    phi.validate().map_err(AnalysisError::Config)?;
    if phi.radius.len() != n {
        return Err(AnalysisError::Config(format!("cutoff has {} radii for {n} variables", phi.radius.len())));
    }
    if !phi.inside(bx.lo(), bx.hi()) {
        return Err(AnalysisError::Config("cutoff support must lie strictly inside the box".into()));
    }
    let lambdas = osc::ladder_lambdas(cfg.lambda_min, cfg.lambda_max, cfg.ladder).map_err(|e| AnalysisError::Config(e.to_string()))?;
    let mut shrinks = 0;
    loop {
        let decay_i = ladder(f, &phi, &lambdas, DirectionPolicy::OscillatoryOnly, cfg)?;
        let decay_muhat = ladder(f, &phi, &lambdas, DirectionPolicy::WorstDirection { count: cfg.directions }, cfg)?;
        let converged = decay_i.unconverged_fraction <= cfg.unconverged_limit && decay_muhat.unconverged_fraction <= cfg.unconverged_limit;
        if converged || shrinks == cfg.shrink_retries {
            return Ok(EmpiricalBlock { cutoff: phi, shrinks, decay_i, decay_muhat });
        }
        phi.radius.iter_mut().for_each(|r| *r /= 2.0);
        shrinks += 1;
    }
}

/// Smooth bump with radius half the distance from the origin to each side.
fn default_cutoff(bx: &BoxDomain) -> Result<CutoffSpec, AnalysisError> {
    let radius = bx
        .lo()
        .iter()
        .zip(bx.hi())
        .map(|(a, b)| {
            if *a < 0.0 && *b > 0.0 {
                Ok(0.5 * (-a).min(*b))
            } else {
                Err(AnalysisError::Config(format!("box side [{a}, {b}] must contain 0 in its interior")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CutoffSpec { radius, ..CutoffSpec::bump(bx.dim(), 1.0) })
}

/// `eps / (eps + 1)`, with `None` meaning an unbounded exponent.
fn ratio(eps: Option<f64>) -> f64 {
    eps.map_or(1.0, |e| e / (e + 1.0))
}

fn zero_order_split(d: &Rational, n: usize, k: usize, m: u32) -> ZeroOrderSplit {
    let two = rational::int(2);
    let mr = rational::int(m as i64);
    let (case, exact, log_power) = if *d < two && m <= 2 {
        ("a", rational::rat(1, 2), None)
    } else if *d >= two && mr <= *d {
        ("b", d.recip(), Some((n - k) as u32))
    } else {
        ("c", mr.recip(), None)
    };
    ZeroOrderSplit {
        case: case.into(),
        zero_order: m,
        log_power_improvable: case == "b" && !d.is_integer(),
        prediction: Prediction {
            exponent: rational::to_f64(&exact),
            exact: Some(exact),
            log_power,
            basis: format!("d = {}, m = {m}", rational::format(d)),
        },
    }
}

pub fn analyze(cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    cfg.validate()?;
    let f = parse_phase(&cfg.phase)?;
    check_phase(&f)?;
    let n = f.dim();

    let geometry = cfg.enabled(Stage::Geom).then(|| geometry(&f, cfg)).transpose()?;
    let quasi_homogeneous = cfg.enabled(Stage::Qh).then(|| quasi_homogeneous(&f, cfg)).transpose()?;
    let sublevel = cfg.enabled(Stage::Sublevel).then(|| sublevel_stage(&f, cfg)).transpose()?;
    let empirical = cfg.enabled(Stage::Decay).then(|| decay_stage(&f, cfg)).transpose()?;

    let mut predictions = Predictions { flow_bound_i: None, flow_bound_muhat: None, corollary_bound: None, varchenko: None, zero_order_split: None };
    if let Some(s) = &sublevel {
        let r = ratio(s.epsilon_flow);
        let basis = match s.epsilon_flow {
            Some(e) => format!("flow-ratio exponent {e:.4}"),
            None => "flow ratio bounded below".to_string(),
        };
        predictions.flow_bound_i = Some(Prediction { exponent: r, exact: None, log_power: None, basis: basis.clone() });
        predictions.flow_bound_muhat = Some(Prediction { exponent: r.min(0.5), exact: None, log_power: None, basis });
        predictions.corollary_bound = Some(r);
    }
    if let Some(g) = &geometry {
        let d = &g.newton.d;
        if g.nondegeneracy.verdict == Verdict::Nondegenerate {
            let exact = d.recip();
            predictions.varchenko = Some(Prediction {
                exponent: rational::to_f64(&exact),
                exact: Some(exact),
                log_power: Some((n - 1 - g.newton.k) as u32),
                basis: format!("d = {}, k = {}", rational::format(d), g.newton.k),
            });
        }
        if let Some(m) = cfg.zero_order {
            predictions.zero_order_split = Some(zero_order_split(d, n, g.newton.k, m));
        }
    }

    let mut consistency = Vec::new();
    let delta_i = empirical.as_ref().and_then(|e| e.decay_i.delta());
    let delta_mu = empirical.as_ref().and_then(|e| e.decay_muhat.delta());
    consistency.push(ConsistencyFlag::compare(
        "theorem-1.1-I",
        predictions.flow_bound_i.as_ref().map(|p| p.exponent),
        delta_i,
        DECAY_TOLERANCE,
    ));
    consistency.push(ConsistencyFlag::compare(
        "theorem-1.1-muhat",
        predictions.flow_bound_muhat.as_ref().map(|p| p.exponent),
        delta_mu,
        DECAY_TOLERANCE,
    ));
    consistency.push(ConsistencyFlag::compare(
        "corollary-1.1.1",
        predictions.corollary_bound,
        sublevel.as_ref().and_then(|s| s.epsilon_f),
        SUBLEVEL_TOLERANCE,
    ));
    consistency.push(ConsistencyFlag::compare(
        "varchenko",
        predictions.varchenko.as_ref().map(|p| p.exponent),
        delta_i,
        DECAY_TOLERANCE,
    ));
    if let Some(t) = &predictions.zero_order_split {
        consistency.push(ConsistencyFlag::compare("theorem-2.2", Some(t.prediction.exponent), delta_mu, DECAY_TOLERANCE));
    }
    for c in consistency.iter_mut().filter(|c| c.status == FlagStatus::Skipped) {
        c.note = Some("inputs unavailable for enabled stages".into());
    }

    let unconverged = empirical.as_ref().is_some_and(|e| {
        e.decay_i.unconverged_fraction > cfg.unconverged_limit || e.decay_muhat.unconverged_fraction > cfg.unconverged_limit
    });
    let status = if unconverged {
        ReportStatus::Unconverged
    } else if consistency.iter().any(|c| c.status == FlagStatus::Violation) {
        ReportStatus::Inconsistent
    } else {
        ReportStatus::Ok
    };
    Ok(AnalysisReport {
        phase: f.to_string(),
        dimension: n,
        config: cfg.clone(),
        geometry,
        quasi_homogeneous,
        sublevel,
        predictions,
        empirical,
        consistency,
        status,
    })
}

impl AnalysisReport {
    /// Canonical JSON value: object keys sorted, rationals as `"p/q"`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Analysis of `{}`\n", self.phase);
        if let Some(g) = &self.geometry {
            let _ = writeln!(
                s,
                "- Newton distance d = {} (k = {}), nondegeneracy: {:?}",
                rational::format(&g.newton.d),
                g.newton.k,
                g.nondegeneracy.verdict
            );
        }
        if let Some(q) = &self.quasi_homogeneous {
            let w: Vec<String> = q.weights.weights.iter().map(rational::format).collect();
            let _ = write!(s, "- Weights: {:?} [{}]", q.weights.status, w.join(", "));
            if let Some(e) = &q.epsilon0 {
                let _ = write!(s, ", eps0 = {:.4} (binding: {})", e.value, e.binding.join(", "));
            }
            s.push('\n');
        }
        if let Some(b) = &self.sublevel {
            let show = |v: Option<f64>| v.map_or("unbounded".to_string(), |x| format!("{x:.4}"));
            let _ = writeln!(s, "- Sublevel exponents: |f| {}, flow ratio {}", show(b.epsilon_f), show(b.epsilon_flow));
        }
        let _ = writeln!(s, "\n| Theorem | Predicted | Empirical | Tolerance | Status |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for c in &self.consistency {
            let _ = writeln!(s, "| {} | {} | {} | {} | {:?} |", c.name, fmt(c.bound), fmt(c.empirical), c.tolerance, c.status);
        }
        let _ = writeln!(s, "\nStatus: {:?}", self.status);
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<(), EmitError> {
        write_file(path, self.to_json_string().as_bytes())
    }

    pub fn write_markdown(&self, path: &Path) -> Result<(), EmitError> {
        write_file(path, self.to_markdown().as_bytes())
    }

    /// `sublevel_f.csv`, `sublevel_flow.csv`, `decay_I.csv` and
    /// `decay_muhat.csv` for the stages that ran. Returns the paths written.
    pub fn write_csv_bundle(&self, dir: &Path) -> Result<Vec<PathBuf>, EmitError> {
        std::fs::create_dir_all(dir).map_err(|source| EmitError { path: dir.to_path_buf(), source })?;
        let mut written = Vec::new();
        let mut emit = |name: &str, body: Vec<u8>| -> Result<(), EmitError> {
            let p = dir.join(name);
            write_file(&p, &body)?;
            written.push(p);
            Ok(())
        };
        let csv_err = |name: &str, e: csv::Error| EmitError { path: dir.join(name), source: std::io::Error::other(e.to_string()) };
        if let Some(b) = &self.sublevel {
            for (name, est) in [("sublevel_f.csv", &b.f), ("sublevel_flow.csv", &b.flow)] {
                let mut buf = Vec::new();
                est.write_csv(&mut buf).map_err(|e| csv_err(name, e))?;
                emit(name, buf)?;
            }
        }
        if let Some(e) = &self.empirical {
            for (name, l, mu) in [("decay_I.csv", &e.decay_i, false), ("decay_muhat.csv", &e.decay_muhat, true)] {
                let mut buf = Vec::new();
                osc::write_ladder_csv(&l.rungs, mu, &mut buf).map_err(|e| csv_err(name, e))?;
                emit(name, buf)?;
            }
        }
        Ok(written)
    }
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), EmitError> {
    std::fs::write(path, body).map_err(|source| EmitError { path: path.to_path_buf(), source })
}

/// Reads a JSON report back as a value.
pub fn read_json(path: &Path) -> Result<serde_json::Value, EmitError> {
    let text = std::fs::read_to_string(path).map_err(|source| EmitError { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| EmitError { path: path.to_path_buf(), source: std::io::Error::new(std::io::ErrorKind::InvalidData, e) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(phase: &str) -> AnalysisConfig {
        let mut c = AnalysisConfig::new(phase);
        c.samples = 20_000;
        c.lambda_min = 4.0;
        c.lambda_max = 256.0;
        c.ladder = 7;
        c.directions = 4;
        c.nondegeneracy.resolution = 64;
        c
    }

    #[test]
    fn guards_name_the_assumption() {
        let e = analyze(&quick("x1")).unwrap_err();
        assert!(e.to_string().contains("\u{2207}f(0) = 0"), "{e}");
        let e = analyze(&quick("x1^2 + 1")).unwrap_err();
        assert!(e.to_string().contains("f(0) = 0"), "{e}");
        assert!(matches!(analyze(&quick("x1^")), Err(AnalysisError::Parse(_))));
    }

    #[test]
    fn zero_order_case_split() {
        assert_eq!(zero_order_split(&rational::rat(4, 3), 2, 1, 2).case, "a");
        assert_eq!(zero_order_split(&rational::rat(4, 3), 2, 1, 3).case, "c");
        let b = zero_order_split(&rational::rat(5, 2), 2, 0, 2);
        assert_eq!(b.case, "b");
        assert_eq!(b.prediction.log_power, Some(2));
        assert!(b.log_power_improvable);
        let c = zero_order_split(&rational::int(2), 2, 0, 3);
        assert_eq!(c.case, "c");
        assert_eq!(c.prediction.exact, Some(rational::rat(1, 3)));
    }

    #[test]
    fn stage_independence() {
        let mut c = quick("x1^2+x2^2");
        c.stages = [Stage::Geom, Stage::Qh, Stage::Sublevel].into_iter().collect();
        let r = analyze(&c).unwrap();
        assert!(r.empirical.is_none());
        assert!(r.geometry.is_some() && r.quasi_homogeneous.is_some() && r.sublevel.is_some());
        assert_eq!(r.status, ReportStatus::Ok);
        assert!(r.predictions.varchenko.is_some());
    }

    #[test]
    fn degenerate_phase_drops_varchenko() {
        let mut c = quick("x1^2 - 2*x1*x2 + x2^2");
        c.stages = [Stage::Geom, Stage::Sublevel].into_iter().collect();
        let r = analyze(&c).unwrap();
        assert_eq!(r.geometry.as_ref().unwrap().nondegeneracy.verdict, Verdict::Degenerate);
        assert!(r.predictions.varchenko.is_none());
        assert!(r.predictions.flow_bound_i.is_some());
    }

    #[test]
    fn default_cutoff_follows_the_box() {
        let bx = BoxDomain::new(vec![-2.0, -0.5], vec![1.0, 3.0]).unwrap();
        assert_eq!(default_cutoff(&bx).unwrap().radius, vec![0.5, 0.25]);
        assert!(default_cutoff(&BoxDomain::new(vec![0.0], vec![1.0]).unwrap()).is_err());
    }

    #[test]
    fn shrink_retry_halves_the_radius() {
        let mut c = quick("x1^2");
        c.stages = [Stage::Decay].into_iter().collect();
        c.quadrature.max_points = 1000;
        let stuck = analyze(&c).unwrap();
        let e = stuck.empirical.as_ref().unwrap();
        assert_eq!(e.shrinks, 0);
        assert!(e.decay_i.unconverged_fraction > c.unconverged_limit);
        assert_eq!(stuck.status, ReportStatus::Unconverged);
        c.shrink_retries = 3;
        let r = analyze(&c).unwrap();
        let e = r.empirical.as_ref().unwrap();
        assert!(e.shrinks >= 1);
        assert_eq!(e.cutoff.radius, vec![0.5 / f64::powi(2.0, e.shrinks as i32)]);
    }
}
