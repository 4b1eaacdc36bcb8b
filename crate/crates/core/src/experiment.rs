//! Reproducible command-line experiments.
//!
//! A run reads one JSON object
//!
//! ```json
//! { "experiment": "gram-psd",
//!   "space": { "kind": "reciprocal" },
//!   "params": { "points": [0.5, 1.5, 2.5] },
//!   "output": { "path": "out/gram", "format": "csv" } }
//! ```
//!
//! validates it strictly, executes the experiment and writes CSV data files
//! plus `report.json`. Complex numbers are written `[re, im]`. Output files are
//! a pure function of the configuration, the seed and the library version.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::catalog::{self, make_space, DeBrangesFunction, SchurFunction, SpaceSpec};
use crate::dynamics::{self, Classical, HamiltonianSpec};
use crate::fock::{self, OscElement, OscGenerator, WeylConvention};
use crate::linalg;
use crate::sampling;
use crate::space::{psd_check, Domain, Point, PsdTolerance, SpaceHandle};
use crate::spectral::{self, OscillatorModel, ScanOptions};
use crate::{C64, DEFAULT_SEED};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The configuration is malformed; `path` names the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{experiment} failed: {message}")]
    Run { experiment: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl ExperimentError {
    /// 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } => 2,
            _ => 1,
        }
    }
}

fn config_err(path: impl Into<String>, message: impl ToString) -> ExperimentError {
    ExperimentError::Config { path: path.into(), message: message.to_string() }
}

/// `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
pub struct Cx(pub f64, pub f64);

impl From<Cx> for C64 {
    fn from(c: Cx) -> C64 {
        C64::new(c.0, c.1)
    }
}

impl From<C64> for Cx {
    fn from(c: C64) -> Cx {
        Cx(c.re, c.im)
    }
}

fn cvec(v: &[Cx]) -> Vec<C64> {
    v.iter().map(|c| (*c).into()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlaschkeConfig {
    pub a: Cx,
    pub scale: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Euclidean { n: usize },
    HermitianSubset { n: usize },
    UnitSphere { n: usize },
    Klauder { n: usize },
    Reciprocal,
    Szego,
    /// Exactly one of `blaschke` or `polynomial`.
    Schur {
        #[serde(default)]
        blaschke: Option<BlaschkeConfig>,
        #[serde(default)]
        polynomial: Option<Vec<Cx>>,
    },
    /// Exactly one of `exponential` (τ in `e^{−iτz}`) or `linear` (a in `z + ia`).
    DeBranges {
        #[serde(default)]
        exponential: Option<f64>,
        #[serde(default)]
        linear: Option<f64>,
    },
}

impl SpaceConfig {
    pub fn to_spec(&self) -> Result<SpaceSpec, ExperimentError> {
        Ok(match self {
            SpaceConfig::Euclidean { n } => SpaceSpec::Euclidean(*n),
            SpaceConfig::HermitianSubset { n } => SpaceSpec::HermitianSubset(*n),
            SpaceConfig::UnitSphere { n } => SpaceSpec::UnitSphere(*n),
            SpaceConfig::Klauder { n } => SpaceSpec::Klauder(*n),
            SpaceConfig::Reciprocal => SpaceSpec::Reciprocal,
            SpaceConfig::Szego => SpaceSpec::Szego,
            SpaceConfig::Schur { blaschke: Some(b), polynomial: None } => {
                SpaceSpec::Schur(SchurFunction::blaschke(b.a.into(), b.scale))
            }
            SpaceConfig::Schur { blaschke: None, polynomial: Some(c) } => SpaceSpec::Schur(SchurFunction::polynomial(&cvec(c))),
            SpaceConfig::Schur { .. } => return Err(config_err("space", "schur needs exactly one of `blaschke`, `polynomial`")),
            SpaceConfig::DeBranges { exponential: Some(t), linear: None } => SpaceSpec::DeBranges(DeBrangesFunction::exponential(*t)),
            SpaceConfig::DeBranges { exponential: None, linear: Some(a) } => SpaceSpec::DeBranges(DeBrangesFunction::linear(*a)),
            SpaceConfig::DeBranges { .. } => {
                return Err(config_err("space", "de-branges needs exactly one of `exponential`, `linear`"))
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "csv_format")]
    pub format: String,
}

fn csv_format() -> String {
    "csv".into()
}

fn empty_params() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub space: Option<SpaceConfig>,
    #[serde(default = "empty_params")]
    pub params: Value,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { "<root>".to_string() } else { path }, e.into_inner())
        })
    }
}

/// One tested quantity with the tolerance it was judged against.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, relation: "<=", pass: value <= tolerance }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, relation: ">=", pass: value >= tolerance }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunReport {
    pub experiment: String,
    pub space: Option<String>,
    pub seed: u64,
    pub version: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

/// Static description of an experiment for `cohk list`.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub topic: &'static str,
    pub summary: &'static str,
    pub needs_space: bool,
    /// `(parameter, default)`.
    pub params: &'static [(&'static str, &'static str)],
}

const GEN: (&str, &str) = ("generator", "{\"omegas\": [1.0]}");
const Z: (&str, &str) = ("z", "{\"z0\": [-0.5, 0], \"z\": [[1, 0]]}");
const SEED: (&str, &str) = ("seed", "0xC0FFEE");
const HBAR: (&str, &str) = ("hbar", "1.0");

pub const EXPERIMENTS: [ExperimentInfo; 9] = [
    ExperimentInfo {
        name: "gram-psd",
        topic: "coherent spaces / positivity",
        summary: "Gram matrices of given or seeded points pass the PSD test",
        needs_space: true,
        params: &[("points", "seeded"), ("samples", "10"), ("size", "20"), ("tol_rel", "1e-10"), ("tol_abs", "1e-12"), SEED],
    },
    ExperimentInfo {
        name: "geometry-check",
        topic: "coherent manifolds / metric, 1-form, 2-form",
        summary: "closed-form G, θ, ω against finite differences; infinitesimal Cauchy-Schwarz",
        needs_space: true,
        params: &[("cases", "100"), ("tol", "1e-5"), ("cs_tol", "1e-8"), ("wtg_tol_rel", "1e-8"), SEED],
    },
    ExperimentInfo {
        name: "weyl-check",
        topic: "Fock space / Weyl relations and normal ordering",
        summary: "Weyl exchange, product, inverse, commutation and Γ normal-ordering residuals",
        needs_space: false,
        params: &[("modes", "1"), ("cases", "100"), ("convention", "\"symmetric\""), ("tol", "1e-12"), SEED],
    },
    ExperimentInfo {
        name: "ccr-check",
        topic: "Fock space / canonical commutation relations",
        summary: "ε-expansion of the shift commutator extrapolated to ε → 0",
        needs_space: false,
        params: &[
            ("p", "[[1, 0]]"),
            ("q", "[[1, 0]]"),
            ("z", "vacuum"),
            ("z_prime", "vacuum"),
            ("eps", "[0.1, 0.05, 0.025, 0.0125, 0.00625]"),
            ("tol", "1e-6"),
            SEED,
        ],
    },
    ExperimentInfo {
        name: "dynamics",
        topic: "Schrödinger dynamics / coherent-state ODE",
        summary: "RK4 label trajectory against the exact oscillator flow",
        needs_space: false,
        params: &[
            GEN,
            ("z0", Z.1),
            ("t_end", "10"),
            ("dt", "1e-3"),
            ("order_dts", "[1e-2, 5e-3, 2.5e-3]"),
            ("tol", "1e-8"),
            ("min_order", "3.9"),
            HBAR,
            SEED,
        ],
    },
    ExperimentInfo {
        name: "spectrum",
        topic: "spectral analysis / classical spectrum",
        summary: "Hann-windowed line scan and broadened spectral density",
        needs_space: false,
        params: &[
            GEN,
            Z,
            ("z_prime", "z"),
            ("periods", "200"),
            ("dt", "0.05"),
            ("e_min", "-0.5"),
            ("e_max", "7.5"),
            ("e_step", "resolution"),
            ("eta", "0.05 × smallest line spacing"),
            ("noise_floor", "1e-4"),
            HBAR,
            SEED,
        ],
    },
    ExperimentInfo {
        name: "resolvent",
        topic: "spectral analysis / resolvent",
        summary: "damped quadrature of G(E), resolvent equation and rational functions of H",
        needs_space: false,
        params: &[GEN, Z, ("z_prime", "z"), ("energies", "[[0.5, 0.1]]"), ("rational", "none"), ("tol", "1e-4"), HBAR, SEED],
    },
    ExperimentInfo {
        name: "df-propagate",
        topic: "variational dynamics / Euler-Lagrange on the coherent manifold",
        summary: "Euler-Lagrange orbit against the exact flow; action stationarity exponent",
        needs_space: false,
        params: &[
            GEN,
            ("z0", Z.1),
            ("t_end", "10"),
            ("dt", "1e-3"),
            ("action_t_end", "2π"),
            ("action_dt", "2e-3"),
            ("eps", "[0.05, 0.025, 0.0125, 0.00625]"),
            ("tol", "1e-6"),
            HBAR,
            SEED,
        ],
    },
    ExperimentInfo {
        name: "sd-residual",
        topic: "spectral analysis / Schwinger-Dyson equation",
        summary: "kernel-level Schrödinger equation and resolvent equation residuals",
        needs_space: false,
        params: &[
            GEN,
            ("cases", "100"),
            ("t_max", "2"),
            ("dt_fd", "1e-4"),
            ("tol", "1e-6"),
            ("energy", "[0.5, 0.1]"),
            ("equation_tol", "1e-4"),
            HBAR,
            SEED,
        ],
    },
];

pub fn find_experiment(name: &str) -> Option<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Human-readable table of the experiments.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for e in &EXPERIMENTS {
        let _ = writeln!(s, "{:<15} [{}]", e.name, e.topic);
        let _ = writeln!(s, "    {}", e.summary);
        if e.needs_space {
            let _ = writeln!(s, "    space: required");
        }
        for (p, d) in e.params {
            let _ = writeln!(s, "    {p:<13} default {d}");
        }
    }
    s
}

fn params<T: DeserializeOwned>(v: &Value) -> Result<T, ExperimentError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { "params".into() } else { format!("params.{path}") }, e.into_inner())
    })
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub omegas: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: Option<Cx>,
    #[serde(default)]
    pub p: Option<Vec<Cx>>,
    #[serde(default)]
    pub q: Option<Vec<Cx>>,
    #[serde(default)]
    pub x: Option<Vec<Vec<Cx>>>,
}

impl GeneratorConfig {
    fn build(&self) -> Result<OscGenerator, ExperimentError> {
        let key = "params.generator";
        let x = match (&self.omegas, &self.x) {
            (Some(_), Some(_)) => return Err(config_err(key, "give either `omegas` or `x`, not both")),
            (None, None) => OscGenerator::number(&[1.0]).x,
            (Some(w), None) => {
                if w.is_empty() {
                    return Err(config_err(format!("{key}.omegas"), "needs at least one mode"));
                }
                OscGenerator::number(w).x
            }
            (None, Some(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(config_err(format!("{key}.x"), "must be a non-empty square matrix"));
                }
                nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j].into())
            }
        };
        let n = x.nrows();
        let vec_or_zero = |v: &Option<Vec<Cx>>, name: &str| -> Result<nalgebra::DVector<C64>, ExperimentError> {
            match v {
                None => Ok(nalgebra::DVector::zeros(n)),
                Some(v) if v.len() == n => Ok(nalgebra::DVector::from_vec(cvec(v))),
                Some(v) => Err(config_err(format!("{key}.{name}"), format!("has {} entries, expected {n}", v.len()))),
            }
        };
        OscGenerator::new(self.rho.map_or(C64::from(0.0), Into::into), vec_or_zero(&self.p, "p")?, vec_or_zero(&self.q, "q")?, x)
            .map_err(|e| config_err(key, e))
    }

    fn omegas(&self) -> Option<Vec<f64>> {
        match (&self.omegas, &self.x, &self.rho, &self.p, &self.q) {
            (Some(w), None, None, None, None) => Some(w.clone()),
            (None, None, None, None, None) => Some(vec![1.0]),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlauderConfig {
    pub z0: Cx,
    pub z: Vec<Cx>,
}

impl KlauderConfig {
    fn point(&self, modes: usize, key: &str) -> Result<Point, ExperimentError> {
        if self.z.len() != modes {
            return Err(config_err(format!("{key}.z"), format!("has {} modes, expected {modes}", self.z.len())));
        }
        Ok(Point::klauder(self.z0.into(), &cvec(&self.z)))
    }
}

fn default_klauder(modes: usize) -> Point {
    let mut z = vec![C64::from(0.0); modes];
    z[0] = C64::from(1.0);
    Point::klauder(C64::new(-0.5, 0.0), &z)
}

fn klauder_or_default(cfg: &Option<KlauderConfig>, modes: usize, key: &str) -> Result<Point, ExperimentError> {
    match cfg {
        Some(c) => c.point(modes, key),
        None => Ok(default_klauder(modes)),
    }
}

/// Interprets a JSON point in the coordinates of `domain`.
pub fn parse_point(domain: Domain, v: &Value, key: &str) -> Result<Point, ExperimentError> {
    let bad = |m: &str| config_err(key, m);
    let num = |v: &Value| v.as_f64().ok_or_else(|| bad("expected a number"));
    let cx = |v: &Value| -> Result<C64, ExperimentError> {
        let c: Cx = serde_json::from_value(v.clone()).map_err(|_| bad("expected [re, im]"))?;
        Ok(c.into())
    };
    let arr = |v: &Value| v.as_array().cloned().ok_or_else(|| bad("expected an array"));
    let p = match domain {
        Domain::Real(n) => match v {
            Value::Number(_) if n == 1 => Point::Real(vec![num(v)?]),
            _ => Point::Real(arr(v)?.iter().map(num).collect::<Result<_, _>>()?),
        },
        Domain::Complex(_) | Domain::UnitSphere(_) => Point::Complex(arr(v)?.iter().map(cx).collect::<Result<_, _>>()?),
        Domain::Disk | Domain::Plane => Point::Scalar(cx(v)?),
        Domain::PositiveReal => Point::Positive(num(v)?),
        Domain::Klauder(n) => {
            let k: KlauderConfig = serde_json::from_value(v.clone()).map_err(|e| bad(&e.to_string()))?;
            k.point(n, key)?
        }
    };
    domain.check(&p).map_err(|e| bad(&e.to_string()))?;
    Ok(p)
}

struct Ctx {
    experiment: String,
    space_id: Option<String>,
    seed: u64,
    checks: Vec<Check>,
    values: BTreeMap<String, Value>,
    files: Vec<(String, String)>,
}

impl Ctx {
    fn fail(&self, e: impl ToString) -> ExperimentError {
        ExperimentError::Run { experiment: self.experiment.clone(), message: e.to_string() }
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            let line: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        self.files.push((name.into(), s));
    }
}

fn space_handle(cfg: &ExperimentConfig, required: bool) -> Result<Option<SpaceHandle>, ExperimentError> {
    match &cfg.space {
        None if required => Err(config_err("space", "this experiment needs a space")),
        None => Ok(None),
        Some(s) => Ok(Some(make_space(&s.to_spec()?).map_err(|e| config_err("space", e))?)),
    }
}

/// Runs a configuration file.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(path.display().to_string(), e))?;
    run(&ExperimentConfig::parse(&text)?, opts)
}

/// Validates and executes a configuration, then writes its outputs.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, ExperimentError> {
    let info = find_experiment(&cfg.experiment)
        .ok_or_else(|| config_err("experiment", format!("unknown experiment `{}`; see `cohk list`", cfg.experiment)))?;
    if let Some(o) = &cfg.output {
        if o.format != "csv" {
            return Err(config_err("output.format", format!("unsupported format `{}`", o.format)));
        }
    }
    if !cfg.params.is_object() {
        return Err(config_err("params", "must be an object"));
    }
    let param_seed = match cfg.params.get("seed") {
        None => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| config_err("params.seed", "must be a non-negative integer"))?),
    };
    let seed = opts.seed.or(param_seed).unwrap_or(DEFAULT_SEED);
    let space = space_handle(cfg, info.needs_space)?;
    let mut ctx = Ctx {
        experiment: info.name.into(),
        space_id: space.as_ref().map(|s| s.id().to_string()),
        seed,
        checks: Vec::new(),
        values: BTreeMap::new(),
        files: Vec::new(),
    };
    let p = &cfg.params;
    match info.name {
        "gram-psd" => gram_psd(&mut ctx, space.as_ref().expect("required"), params(p)?)?,
        "geometry-check" => geometry_check(&mut ctx, space.as_ref().expect("required"), params(p)?)?,
        "weyl-check" => weyl_check(&mut ctx, params(p)?)?,
        "ccr-check" => ccr_check(&mut ctx, params(p)?)?,
        "dynamics" => dynamics_run(&mut ctx, space.as_ref(), params(p)?)?,
        "spectrum" => spectrum_run(&mut ctx, space.as_ref(), params(p)?)?,
        "resolvent" => resolvent_run(&mut ctx, space.as_ref(), params(p)?)?,
        "df-propagate" => df_run(&mut ctx, space.as_ref(), params(p)?)?,
        "sd-residual" => sd_run(&mut ctx, space.as_ref(), params(p)?)?,
        other => unreachable!("registered experiment {other} has no runner"),
    }

    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()))
        .unwrap_or_else(|| PathBuf::from("cohk-out").join(info.name));
    let report = RunReport {
        experiment: ctx.experiment.clone(),
        space: ctx.space_id.clone(),
        seed,
        version: VERSION,
        pass: ctx.checks.iter().all(|c| c.pass),
        checks: ctx.checks.clone(),
        values: ctx.values.clone(),
        files: ctx.files.iter().map(|f| f.0.clone()).chain(std::iter::once("report.json".into())).collect(),
    };
    let io = |path: &Path, e: std::io::Error| ExperimentError::Io { path: path.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(&out_dir).map_err(|e| io(&out_dir, e))?;
    for (name, body) in &ctx.files {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    let path = out_dir.join("report.json");
    let mut body = serde_json::to_string_pretty(&report).map_err(|e| ctx.fail(e))?;
    body.push('\n');
    std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    Ok(RunOutcome { report, out_dir })
}

fn one() -> f64 {
    1.0
}

fn seed_field() -> Option<u64> {
    None
}

fn check_modes(space: Option<&SpaceHandle>, modes: usize) -> Result<(), ExperimentError> {
    match space.map(|s| s.domain()) {
        None => Ok(()),
        Some(Domain::Klauder(n)) if n == modes => Ok(()),
        Some(d) => Err(config_err("space", format!("expected klauder with n = {modes} to match the generator, got {d}"))),
    }
}

// ---------------------------------------------------------------- gram-psd

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GramParams {
    #[serde(default)]
    points: Option<Vec<Value>>,
    #[serde(default = "ten")]
    samples: usize,
    #[serde(default = "twenty")]
    size: usize,
    #[serde(default = "tol_rel")]
    tol_rel: f64,
    #[serde(default = "tol_abs")]
    tol_abs: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn ten() -> usize {
    10
}
fn twenty() -> usize {
    20
}
fn tol_rel() -> f64 {
    1e-10
}
fn tol_abs() -> f64 {
    1e-12
}

fn gram_psd(ctx: &mut Ctx, space: &SpaceHandle, p: GramParams) -> Result<(), ExperimentError> {
    let domain = space.domain();
    let sets: Vec<Vec<Point>> = match &p.points {
        Some(pts) => {
            if pts.is_empty() {
                return Err(config_err("params.points", "needs at least one point"));
            }
            vec![pts.iter().enumerate().map(|(i, v)| parse_point(domain, v, &format!("params.points[{i}]"))).collect::<Result<_, _>>()?]
        }
        None => {
            if p.samples == 0 || p.size == 0 {
                return Err(config_err("params.samples", "samples and size must be positive"));
            }
            let mut rng = sampling::rng(ctx.seed);
            (0..p.samples).map(|_| (0..p.size).map(|_| sampling::sample_point(domain, &mut rng)).collect()).collect()
        }
    };
    let tol = PsdTolerance { rel: p.tol_rel, abs: p.tol_abs };
    let mut rows = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_defect = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for (i, pts) in sets.iter().enumerate() {
        let g = space.gram(pts).map_err(|e| ctx.fail(e))?;
        let r = g.psd_check(tol).map_err(|e| ctx.fail(e))?;
        let scale = tol.abs + tol.rel * r.max_eigenvalue.max(1.0);
        worst_margin = worst_margin.min(r.min_eigenvalue / scale);
        let max_entry = g.entries.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
        worst_defect = worst_defect.max(r.hermiticity_defect / max_entry);
        min_eig = min_eig.min(r.min_eigenvalue);
        rows.push(vec![i as f64, pts.len() as f64, r.min_eigenvalue, r.max_eigenvalue, r.hermiticity_defect, f64::from(u8::from(r.pass))]);
    }
    ctx.csv("gram_psd.csv", &["sample", "size", "min_eig", "max_eig", "hermiticity_defect", "pass"], rows);
    ctx.value("min_eigenvalue", min_eig);
    ctx.checks.push(Check::at_least("min_eig / (tol_abs + tol_rel·max(1, max_eig))", worst_margin, -1.0));
    ctx.checks.push(Check::at_most("hermiticity_defect / max(1, max|entry|)", worst_defect, 1e-12));
    Ok(())
}

// ---------------------------------------------------------- geometry-check

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryParams {
    #[serde(default = "hundred")]
    cases: usize,
    #[serde(default = "geom_tol")]
    tol: f64,
    #[serde(default = "cs_tol")]
    cs_tol: f64,
    #[serde(default = "wtg_tol")]
    wtg_tol_rel: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn hundred() -> usize {
    100
}
fn geom_tol() -> f64 {
    1e-5
}
fn cs_tol() -> f64 {
    1e-8
}
fn wtg_tol() -> f64 {
    1e-8
}

fn geometry_check(ctx: &mut Ctx, space: &SpaceHandle, p: GeometryParams) -> Result<(), ExperimentError> {
    let domain = space.domain();
    let mut rng = sampling::rng(ctx.seed);
    let mut rows = Vec::new();
    let (mut g_worst, mut th_worst, mut om_worst, mut cs_worst, mut wtg_worst) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY, f64::INFINITY);
    for i in 0..p.cases {
        let z = sampling::sample_point(domain, &mut rng);
        let x = sampling::sample_tangent(domain, &z, &mut rng);
        let y = sampling::sample_tangent(domain, &z, &mut rng);
        let r = catalog::geometry_report(space, &z, &x, &y).map_err(|e| ctx.fail(e))?;
        let cs = catalog::infinitesimal_cs_margin(space, &z, &x).map_err(|e| ctx.fail(e))?;
        let wtg = catalog::wtg_matrix(space, &z, &x).map_err(|e| ctx.fail(e))?;
        let w = psd_check(&wtg, PsdTolerance { rel: p.wtg_tol_rel, abs: 0.0 }).map_err(|e| ctx.fail(e))?;
        let wtg_margin = w.min_eigenvalue / (p.wtg_tol_rel * w.max_eigenvalue.max(1.0));
        let [dg, dt, dw] = r.rel_discrepancies;
        g_worst = g_worst.max(dg);
        th_worst = th_worst.max(dt);
        om_worst = om_worst.max(dw);
        cs_worst = cs_worst.min(cs.value / cs.scale);
        wtg_worst = wtg_worst.min(wtg_margin);
        rows.push(vec![i as f64, dg, dt, dw, cs.value, cs.scale, w.min_eigenvalue]);
    }
    ctx.csv("geometry.csv", &["case", "g_rel", "theta_rel", "omega_rel", "cs_margin", "cs_scale", "wtg_min_eig"], rows);
    ctx.checks.push(Check::at_most("metric G closed form vs finite differences (relative)", g_worst, p.tol));
    ctx.checks.push(Check::at_most("1-form θ closed form vs finite differences (relative)", th_worst, p.tol));
    ctx.checks.push(Check::at_most("2-form ω closed form vs finite differences (relative)", om_worst, p.tol));
    ctx.checks.push(Check::at_least("infinitesimal Cauchy-Schwarz margin / scale", cs_worst, -p.cs_tol));
    ctx.checks.push(Check::at_least("wtG min eigenvalue / (tol_rel·max(1, max eig))", wtg_worst, -1.0));
    Ok(())
}

// -------------------------------------------------------------- weyl-check

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeylParams {
    #[serde(default = "one_usize")]
    modes: usize,
    #[serde(default = "hundred")]
    cases: usize,
    #[serde(default = "symmetric")]
    convention: String,
    #[serde(default = "weyl_tol")]
    tol: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn one_usize() -> usize {
    1
}
fn symmetric() -> String {
    "symmetric".into()
}
fn weyl_tol() -> f64 {
    1e-12
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn weyl_check(ctx: &mut Ctx, p: WeylParams) -> Result<(), ExperimentError> {
    let convention = match p.convention.as_str() {
        "symmetric" => WeylConvention::Symmetric,
        "anti-normal" => WeylConvention::AntiNormal,
        other => return Err(config_err("params.convention", format!("expected `symmetric` or `anti-normal`, got `{other}`"))),
    };
    if !(1..=3).contains(&p.modes) {
        return Err(config_err("params.modes", "must be 1, 2 or 3"));
    }
    let n = p.modes;
    let domain = Domain::Klauder(n);
    let mut rng = sampling::rng(ctx.seed);
    let mut rows = Vec::new();
    let (mut worst, mut colon, mut gc_true, mut gc_printed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..p.cases {
        let v = |rng: &mut sampling::SampleRng| sampling::complex_vector(rng, n, 0.5);
        let (a, b, c, d) = (v(&mut rng), v(&mut rng), v(&mut rng), v(&mut rng));
        let samples: Vec<(Point, Point)> =
            (0..4).map(|_| (sampling::sample_point(domain, &mut rng), sampling::sample_point(domain, &mut rng))).collect();
        let r = fock::weyl_relation_residuals(&a, &b, &c, &d, &samples, convention).map_err(|e| ctx.fail(e))?;
        let x = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            C64::from(if i == j { 1.0 } else { 0.0 }) + sampling::complex_normal(&mut rng, 0.3)
        });
        let elem = OscElement::new(sampling::complex_normal(&mut rng, 0.3), nalgebra::DVector::from_vec(v(&mut rng)), nalgebra::DVector::from_vec(v(&mut rng)), x)
            .map_err(|e| ctx.fail(e))?;
        let gc = fock::gamma_colon_residual(&elem, &samples).map_err(|e| ctx.fail(e))?;
        let phase = cdot(&a, &d) - cdot(&c, &b);
        let true_gap = (r.group_commutator - phase.exp()).norm() / phase.exp().norm().max(1.0);
        let printed_gap = (r.group_commutator - (-phase).exp()).norm() / phase.exp().norm().max(1.0);
        worst = worst.max(r.worst());
        colon = colon.max(gc);
        gc_true = gc_true.max(true_gap);
        gc_printed = gc_printed.max(printed_gap);
        rows.push(vec![i as f64, r.exchange, r.product, r.inverse, r.commutation, gc, true_gap]);
    }
    let mut e1 = vec![C64::from(0.0); n];
    e1[0] = C64::from(1.0);
    let vac = Point::klauder(C64::from(0.0), &vec![C64::from(0.0); n]);
    let w11 = fock::weyl_element(&e1, &e1, &vac, &vac).map_err(|e| ctx.fail(e))?;
    let vac_gap = (w11 - C64::from(0.5f64.exp())).norm();
    ctx.csv("weyl.csv", &["case", "exchange", "product", "inverse", "commutation", "gamma_colon", "group_commutator"], rows);
    ctx.value("vacuum_w11", Cx::from(w11));
    ctx.value("group_commutator_gap_opposite_sign", gc_printed);
    ctx.checks.push(Check::at_most("Weyl relations worst relative residual", worst, p.tol));
    ctx.checks.push(Check::at_most("Γ normal-ordering relative residual", colon, p.tol));
    ctx.checks.push(Check::at_most("group commutator vs e^{p*q' − p'*q}", gc_true, p.tol));
    ctx.checks.push(Check::at_most("|⟨0|W(e1, e1)|0⟩ − e^{1/2}|", vac_gap, p.tol));
    Ok(())
}

// --------------------------------------------------------------- ccr-check

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CcrParams {
    #[serde(default)]
    p: Option<Vec<Cx>>,
    #[serde(default)]
    q: Option<Vec<Cx>>,
    #[serde(default)]
    z: Option<KlauderConfig>,
    #[serde(default)]
    z_prime: Option<KlauderConfig>,
    #[serde(default = "ccr_eps")]
    eps: Vec<f64>,
    #[serde(default = "ccr_tol")]
    tol: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn ccr_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125, 0.00625]
}
fn ccr_tol() -> f64 {
    1e-6
}

fn ccr_check(ctx: &mut Ctx, p: CcrParams) -> Result<(), ExperimentError> {
    let pv = p.p.as_deref().map_or(vec![C64::from(1.0)], cvec);
    let qv = p.q.as_deref().map_or(vec![C64::from(1.0)], cvec);
    let n = pv.len();
    if qv.len() != n {
        return Err(config_err("params.q", format!("has {} entries, expected {n}", qv.len())));
    }
    let vac = Point::klauder(C64::from(0.0), &vec![C64::from(0.0); n]);
    let z = match &p.z {
        Some(k) => k.point(n, "params.z")?,
        None => vac.clone(),
    };
    let w = match &p.z_prime {
        Some(k) => k.point(n, "params.z_prime")?,
        None => vac,
    };
    let r = fock::ccr_epsilon_check(&pv, &qv, &z, &w, &p.eps).map_err(|e| config_err("params.eps", e))?;
    ctx.csv("ccr.csv", &["eps", "re", "im"], r.slopes.iter().map(|(e, s)| vec![*e, s.re, s.im]));
    ctx.value("limit", Cx::from(r.limit));
    ctx.value("commutator_candidate", Cx::from(r.commutator_candidate));
    ctx.value("imaginary_candidate", Cx::from(r.imaginary_candidate));
    ctx.value("gap_to_imaginary_candidate", r.gap_to_imaginary);
    ctx.checks.push(Check::at_most("extrapolated slope vs p*q·K(z, z')", r.gap_to_commutator, p.tol));
    Ok(())
}

// ---------------------------------------------------------------- dynamics

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsParams {
    #[serde(default)]
    generator: GeneratorConfig,
    #[serde(default)]
    z0: Option<KlauderConfig>,
    #[serde(default = "t_end")]
    t_end: f64,
    #[serde(default = "dt")]
    dt: f64,
    #[serde(default = "order_dts")]
    order_dts: Vec<f64>,
    #[serde(default = "dyn_tol")]
    tol: f64,
    #[serde(default = "min_order")]
    min_order: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn t_end() -> f64 {
    10.0
}
fn dt() -> f64 {
    1e-3
}
fn order_dts() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn dyn_tol() -> f64 {
    1e-8
}
fn min_order() -> f64 {
    3.9
}

fn positive(v: f64, key: &str) -> Result<(), ExperimentError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(key, "must be positive and finite"))
    }
}

/// Max coordinate error of RK4 against the exact flow, plus the trajectory.
pub fn ode_error(
    space: &SpaceHandle,
    gen: &OscGenerator,
    z0: &Point,
    t_end: f64,
    dt: f64,
    hbar: f64,
) -> Result<(f64, dynamics::Trajectory, Vec<f64>), dynamics::DynamicsError> {
    let traj = dynamics::propagate_ode(space, &HamiltonianSpec::Oscillator(gen.clone()), hbar, z0, t_end, dt)?;
    let mut errs = Vec::with_capacity(traj.points.len());
    for (k, p) in traj.points.iter().enumerate() {
        let exact = dynamics::flow_exact(gen, traj.time(k), z0, hbar)?;
        errs.push(p.coords().iter().zip(exact.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok((errs.iter().cloned().fold(0.0, f64::max), traj, errs))
}

fn dynamics_run(ctx: &mut Ctx, space: Option<&SpaceHandle>, p: DynamicsParams) -> Result<(), ExperimentError> {
    positive(p.t_end, "params.t_end")?;
    positive(p.dt, "params.dt")?;
    positive(p.hbar, "params.hbar")?;
    if p.order_dts.len() < 2 || p.order_dts.iter().any(|d| !(*d > 0.0)) {
        return Err(config_err("params.order_dts", "needs at least two positive steps"));
    }
    let gen = p.generator.build()?;
    let n = gen.modes();
    check_modes(space, n)?;
    let space = make_space(&SpaceSpec::Klauder(n)).map_err(|e| ctx.fail(e))?;
    ctx.space_id = Some(space.id().to_string());
    let z0 = klauder_or_default(&p.z0, n, "params.z0")?;
    let (err, traj, errs) = ode_error(&space, &gen, &z0, p.t_end, p.dt, p.hbar).map_err(|e| ctx.fail(e))?;
    let series = dynamics::autocorrelation(&space, &z0, &traj).map_err(|e| ctx.fail(e))?;
    let k0 = space.kernel(&z0, &z0).map_err(|e| ctx.fail(e))?.re;
    let mut drift = 0.0f64;
    let mut rows = Vec::with_capacity(traj.points.len());
    for (k, pt) in traj.points.iter().enumerate() {
        let kk = space.kernel(pt, pt).map_err(|e| ctx.fail(e))?.re;
        drift = drift.max((kk - k0).abs() / k0);
        let mut row = vec![traj.time(k)];
        row.extend(pt.coords());
        row.push(errs[k]);
        rows.push(row);
    }
    let mut header = vec!["t".to_string()];
    header.push("re_z0".into());
    header.push("im_z0".into());
    for j in 1..=n {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    header.push("error".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.csv("trajectory.csv", &header, rows);
    ctx.csv("autocorrelation.csv", &["t", "re", "im"], series.values.iter().enumerate().map(|(k, v)| vec![series.time(k), v.re, v.im]));

    let mut order_errs = Vec::new();
    for &h in &p.order_dts {
        order_errs.push(ode_error(&space, &gen, &z0, p.t_end, h, p.hbar).map_err(|e| ctx.fail(e))?.0);
    }
    let order = linalg::loglog_slope(&p.order_dts, &order_errs);
    ctx.csv("convergence.csv", &["dt", "max_error"], p.order_dts.iter().zip(&order_errs).map(|(h, e)| vec![*h, *e]));
    ctx.checks.push(Check::at_most("max coordinate error vs exact flow", err, p.tol));
    ctx.checks.push(Check::at_least("empirical convergence order", order, p.min_order));
    if gen.is_self_adjoint(1e-14) {
        ctx.checks.push(Check::at_most("relative drift of K(z(t), z(t))", drift, p.tol));
    } else {
        ctx.value("norm_drift", drift);
    }
    Ok(())
}

// ---------------------------------------------------------------- spectrum

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumParams {
    #[serde(default)]
    generator: GeneratorConfig,
    #[serde(default)]
    z: Option<KlauderConfig>,
    #[serde(default)]
    z_prime: Option<KlauderConfig>,
    #[serde(default = "periods")]
    periods: f64,
    #[serde(default = "series_dt")]
    dt: f64,
    #[serde(default = "e_min")]
    e_min: f64,
    #[serde(default = "e_max")]
    e_max: f64,
    #[serde(default)]
    e_step: Option<f64>,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default = "noise_floor")]
    noise_floor: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn periods() -> f64 {
    200.0
}
fn series_dt() -> f64 {
    0.05
}
fn e_min() -> f64 {
    -0.5
}
fn e_max() -> f64 {
    7.5
}
fn noise_floor() -> f64 {
    1e-4
}

/// Energies `Σ nⱼωⱼ ≤ e_max` of a number-operator generator.
pub fn lattice(omegas: &[f64], e_max: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    for &w in omegas {
        if !(w > 0.0) {
            return out;
        }
        let mut next = Vec::new();
        for &e in &out {
            let mut k = 0.0;
            while e + k * w <= e_max {
                next.push(e + k * w);
                k += 1.0;
            }
        }
        out = next;
    }
    out.sort_by(f64::total_cmp);
    out
}

fn spectrum_run(ctx: &mut Ctx, space: Option<&SpaceHandle>, p: SpectrumParams) -> Result<(), ExperimentError> {
    positive(p.periods, "params.periods")?;
    positive(p.dt, "params.dt")?;
    positive(p.hbar, "params.hbar")?;
    if !(p.e_max > p.e_min) {
        return Err(config_err("params.e_max", "must exceed e_min"));
    }
    let gen = p.generator.build()?;
    let n = gen.modes();
    check_modes(space, n)?;
    let model = OscillatorModel::new(gen.clone(), p.hbar).map_err(|e| ctx.fail(e))?;
    ctx.space_id = Some(model.space().id().to_string());
    let z = klauder_or_default(&p.z, n, "params.z")?;
    let w = match &p.z_prime {
        Some(k) => k.point(n, "params.z_prime")?,
        None => z.clone(),
    };
    let omega_min = p.generator.omegas().and_then(|w| w.iter().cloned().filter(|x| *x > 0.0).min_by(f64::total_cmp)).unwrap_or(1.0);
    let t_half = p.periods * TAU * p.hbar / omega_min;
    let len = (t_half / p.dt).round() as usize + 1;
    let series = model.kernel_series(&z, &w, p.dt, len).map_err(|e| ctx.fail(e))?;
    let swapped = if z == w { None } else { Some(model.kernel_series(&w, &z, p.dt, len).map_err(|e| ctx.fail(e))?) };
    let bin = TAU * p.hbar / (2.0 * series.t_end());
    let step = p.e_step.unwrap_or(bin);
    positive(step, "params.e_step")?;
    let cells = ((p.e_max - p.e_min) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=cells).map(|k| p.e_min + k as f64 * step).collect();
    let lines = spectral::spectrum_scan(&series, swapped.as_ref(), &grid, ScanOptions { hbar: p.hbar, noise_floor: p.noise_floor })
        .map_err(|e| match e {
            spectral::SpectralError::GridTooCoarse { .. } => config_err("params.e_step", e),
            e => ctx.fail(e),
        })?;
    let eta = match p.eta {
        Some(e) => e,
        None => spectral::default_eta(&lines).unwrap_or(0.05 * omega_min),
    };
    positive(eta, "params.eta")?;
    let density = spectral::spectral_density(&model, &z, &w, &grid, eta).map_err(|e| ctx.fail(e))?;
    ctx.csv("spectrum_lines.csv", &["E", "weight"], lines.iter().map(|l| vec![l.energy, l.weight]));
    ctx.csv("spectrum.csv", &["E", "density"], grid.iter().zip(&density).map(|(e, d)| vec![*e, *d]));
    ctx.value("eta", eta);
    ctx.value("lines", lines.iter().map(|l| [l.energy, l.weight]).collect::<Vec<_>>());

    if let Some(omegas) = p.generator.omegas() {
        let lat = lattice(&omegas, p.e_max + step);
        let off = lines.iter().map(|l| lat.iter().map(|e| (l.energy - e).abs()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        ctx.checks.push(Check::at_most("line distance to Σ nⱼωⱼ", off, step));
    }
    if z == w {
        let total: f64 = lines.iter().map(|l| l.weight).sum();
        let k = model.space().kernel(&z, &z).map_err(|e| ctx.fail(e))?.re;
        ctx.checks.push(Check::at_most("|Σ weights − K(z, z)| / K(z, z)", (total - k).abs() / k, 1e-2));
    }
    Ok(())
}

// --------------------------------------------------------------- resolvent

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RationalConfig {
    roots: Vec<Cx>,
    b: Vec<Cx>,
    #[serde(default = "rational_eta")]
    eta: f64,
}

fn rational_eta() -> f64 {
    0.01
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolventParams {
    #[serde(default)]
    generator: GeneratorConfig,
    #[serde(default)]
    z: Option<KlauderConfig>,
    #[serde(default)]
    z_prime: Option<KlauderConfig>,
    #[serde(default = "energies")]
    energies: Vec<Cx>,
    #[serde(default)]
    rational: Option<RationalConfig>,
    #[serde(default = "res_tol")]
    tol: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn energies() -> Vec<Cx> {
    vec![Cx(0.5, 0.1)]
}
fn res_tol() -> f64 {
    1e-4
}

/// Line weights `wₙ = e^{z̄₀ + z₀'} (z̄ z')ⁿ / n!` of a single-mode number
/// generator, truncated once they drop below 1e-18 of the running total.
pub fn single_mode_weights(z: &Point, w: &Point) -> Vec<C64> {
    let (Some((z0, zv)), Some((w0, wv))) = (z.as_klauder(), w.as_klauder()) else { return Vec::new() };
    let x = zv[0].conj() * wv[0];
    let mut term = (z0.conj() + w0).exp();
    let mut out = vec![term];
    let mut total = term.norm();
    for n in 1..10_000 {
        term *= x / n as f64;
        total += term.norm();
        out.push(term);
        if n as f64 > x.norm() && term.norm() < 1e-18 * total {
            break;
        }
    }
    out
}

fn resolvent_run(ctx: &mut Ctx, space: Option<&SpaceHandle>, p: ResolventParams) -> Result<(), ExperimentError> {
    positive(p.hbar, "params.hbar")?;
    let gen = p.generator.build()?;
    let n = gen.modes();
    check_modes(space, n)?;
    let model = OscillatorModel::new(gen, p.hbar).map_err(|e| ctx.fail(e))?;
    ctx.space_id = Some(model.space().id().to_string());
    let z = klauder_or_default(&p.z, n, "params.z")?;
    let w = match &p.z_prime {
        Some(k) => k.point(n, "params.z_prime")?,
        None => z.clone(),
    };
    let omegas = p.generator.omegas().filter(|o| o.len() == 1);
    let weights = omegas.as_ref().map(|_| single_mode_weights(&z, &w));
    let omega = omegas.as_ref().map_or(1.0, |o| o[0]);
    let k0 = model.space().kernel(&z, &w).map_err(|e| ctx.fail(e))?;
    let mut rows = Vec::new();
    let (mut eq_worst, mut oracle_worst) = (0.0f64, 0.0f64);
    for (i, e) in p.energies.iter().enumerate() {
        let e = C64::from(*e);
        if !(e.im > 0.0) {
            return Err(config_err(format!("params.energies[{i}]"), "needs Im E > 0"));
        }
        let g = spectral::resolvent_element(&model, &z, &w, e, 0.0, 0.0).map_err(|err| ctx.fail(err))?.value;
        let eq = spectral::resolvent_equation_residual(&model, &z, &w, e).map_err(|err| ctx.fail(err))?;
        eq_worst = eq_worst.max(eq);
        let mut row = vec![e.re, e.im, g.re, g.im, eq];
        if let Some(ws) = &weights {
            let exact: C64 = ws.iter().enumerate().map(|(n, wn)| wn / (e - n as f64 * omega)).sum();
            let gap = (g - exact).norm() / k0.norm();
            oracle_worst = oracle_worst.max(gap);
            row.push(gap);
        }
        rows.push(row);
    }
    let header: &[&str] = if weights.is_some() {
        &["E_re", "E_im", "re", "im", "equation_residual", "oracle_gap"]
    } else {
        &["E_re", "E_im", "re", "im", "equation_residual"]
    };
    ctx.csv("resolvent.csv", header, rows);
    ctx.checks.push(Check::at_most("resolvent equation residual / |K|", eq_worst, p.tol));
    if weights.is_some() {
        ctx.checks.push(Check::at_most("|G − Σ wₙ/(E − nω)| / |K|", oracle_worst, p.tol));
    }
    if let Some(r) = &p.rational {
        positive(r.eta, "params.rational.eta")?;
        let roots = cvec(&r.roots);
        let b = cvec(&r.b);
        let v = spectral::rational_element(&model, &z, &w, &roots, &b, r.eta).map_err(|e| match e {
            spectral::SpectralError::RootCollision(..) | spectral::SpectralError::Precondition(_) => config_err("params.rational", e),
            e => ctx.fail(e),
        })?;
        ctx.value("rational", Cx::from(v));
        if let Some(ws) = &weights {
            let f = |x: C64| b.iter().rev().fold(C64::from(0.0), |a, c| a * x + c) / roots.iter().map(|r| x - r).product::<C64>();
            let exact: C64 = ws.iter().enumerate().map(|(n, wn)| wn * f(C64::from(n as f64 * omega))).sum();
            ctx.checks.push(Check::at_most("|⟨B(H)/A(H)⟩ − Σ wₙ B(nω)/A(nω)| / |K|", (v - exact).norm() / k0.norm(), p.tol));
        }
    }
    Ok(())
}

// ------------------------------------------------------------ df-propagate

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DfParams {
    #[serde(default)]
    generator: GeneratorConfig,
    #[serde(default)]
    z0: Option<KlauderConfig>,
    #[serde(default = "t_end")]
    t_end: f64,
    #[serde(default = "dt")]
    dt: f64,
    #[serde(default = "action_t_end")]
    action_t_end: f64,
    #[serde(default = "action_dt")]
    action_dt: f64,
    #[serde(default = "df_eps")]
    eps: Vec<f64>,
    #[serde(default = "df_tol")]
    tol: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn action_t_end() -> f64 {
    TAU
}
fn action_dt() -> f64 {
    2e-3
}
fn df_eps() -> Vec<f64> {
    vec![0.05, 0.025, 0.0125, 0.00625]
}
fn df_tol() -> f64 {
    1e-6
}

/// Worst angle between the Euler–Lagrange orbit of `⟨z|dΓ(G)|z⟩` and the exact flow.
pub fn el_orbit_angle(
    space: &SpaceHandle,
    gen: &OscGenerator,
    z0: &Point,
    t_end: f64,
    dt: f64,
    hbar: f64,
) -> Result<(f64, Vec<(f64, f64)>), dynamics::DynamicsError> {
    let traj = dynamics::el_integrate(space, &Classical::expectation(gen), z0, t_end, dt, hbar)?;
    let mut worst = 0.0f64;
    let mut rows = Vec::with_capacity(traj.points.len());
    for (k, p) in traj.points.iter().enumerate() {
        let exact = dynamics::flow_exact(gen, traj.time(k), z0, hbar)?;
        let a = space.angle(p, &exact)?;
        worst = worst.max(a);
        rows.push((traj.time(k), a));
    }
    Ok((worst, rows))
}

/// Action response of the exact orbit to seeded bump perturbations and the
/// fitted power of `ε`.
#[allow(clippy::too_many_arguments)]
pub fn action_stationarity(
    space: &SpaceHandle,
    gen: &OscGenerator,
    z0: &Point,
    t_end: f64,
    dt: f64,
    hbar: f64,
    eps: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, f64), dynamics::DynamicsError> {
    let len = (t_end / dt).round() as usize + 1;
    let traj = dynamics::exact_trajectory(gen, z0, 0.0, dt, len, hbar)?;
    let mut rng = sampling::rng(seed);
    let mut v: Vec<f64> = (0..space.domain().real_dim()).map(|_| sampling::normal(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let resp = dynamics::action_response(space, &traj, &Classical::expectation(gen), hbar, &v, eps)?;
    let slope = linalg::loglog_slope(eps, &resp);
    Ok((resp, slope))
}

fn df_run(ctx: &mut Ctx, space: Option<&SpaceHandle>, p: DfParams) -> Result<(), ExperimentError> {
    for (v, k) in [(p.t_end, "params.t_end"), (p.dt, "params.dt"), (p.action_t_end, "params.action_t_end"), (p.action_dt, "params.action_dt"), (p.hbar, "params.hbar")] {
        positive(v, k)?;
    }
    if p.eps.len() < 2 || p.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(config_err("params.eps", "needs at least two positive amplitudes"));
    }
    let gen = p.generator.build()?;
    let n = gen.modes();
    check_modes(space, n)?;
    let space = make_space(&SpaceSpec::Klauder(n)).map_err(|e| ctx.fail(e))?;
    ctx.space_id = Some(space.id().to_string());
    let z0 = klauder_or_default(&p.z0, n, "params.z0")?;
    let (angle, rows) = el_orbit_angle(&space, &gen, &z0, p.t_end, p.dt, p.hbar).map_err(|e| ctx.fail(e))?;
    let (resp, slope) =
        action_stationarity(&space, &gen, &z0, p.action_t_end, p.action_dt, p.hbar, &p.eps, ctx.seed).map_err(|e| ctx.fail(e))?;
    ctx.csv("df_orbit.csv", &["t", "angle"], rows.iter().map(|(t, a)| vec![*t, *a]));
    ctx.csv("df_action.csv", &["eps", "delta_action"], p.eps.iter().zip(&resp).map(|(e, r)| vec![*e, *r]));
    ctx.checks.push(Check::at_most("angle(z_EL(t), z_exact(t)) [rad]", angle, p.tol));
    ctx.checks.push(Check::at_most("|fitted action exponent − 2|", (slope - 2.0).abs(), 0.1));
    ctx.value("action_exponent", slope);
    Ok(())
}

// ------------------------------------------------------------- sd-residual

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SdParams {
    #[serde(default)]
    generator: GeneratorConfig,
    #[serde(default = "hundred")]
    cases: usize,
    #[serde(default = "sd_t_max")]
    t_max: f64,
    #[serde(default = "dt_fd")]
    dt_fd: f64,
    #[serde(default = "dyn_tol_sd")]
    tol: f64,
    #[serde(default = "sd_energy")]
    energy: Cx,
    #[serde(default = "res_tol")]
    equation_tol: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "seed_field")]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn sd_t_max() -> f64 {
    2.0
}
fn dt_fd() -> f64 {
    1e-4
}
fn dyn_tol_sd() -> f64 {
    1e-6
}
fn sd_energy() -> Cx {
    Cx(0.5, 0.1)
}

fn sd_run(ctx: &mut Ctx, space: Option<&SpaceHandle>, p: SdParams) -> Result<(), ExperimentError> {
    positive(p.t_max, "params.t_max")?;
    positive(p.dt_fd, "params.dt_fd")?;
    positive(p.hbar, "params.hbar")?;
    let gen = p.generator.build()?;
    let n = gen.modes();
    check_modes(space, n)?;
    let model = OscillatorModel::new(gen, p.hbar).map_err(|e| ctx.fail(e))?;
    ctx.space_id = Some(model.space().id().to_string());
    let domain = Domain::Klauder(n);
    let mut rng = sampling::rng(ctx.seed);
    let mut rows = Vec::with_capacity(p.cases);
    let mut worst = 0.0f64;
    for i in 0..p.cases {
        let z = sampling::sample_point(domain, &mut rng);
        let w = sampling::sample_point(domain, &mut rng);
        let t = p.t_max * rand::Rng::gen::<f64>(&mut rng);
        let r = spectral::schwinger_dyson_residual(&model, &z, &w, t, p.dt_fd).map_err(|e| ctx.fail(e))?;
        worst = worst.max(r);
        rows.push(vec![i as f64, t, r]);
    }
    let e = C64::from(p.energy);
    if !(e.im > 0.0) {
        return Err(config_err("params.energy", "needs Im E > 0"));
    }
    let z = default_klauder(n);
    let eq = spectral::resolvent_equation_residual(&model, &z, &z, e).map_err(|err| ctx.fail(err))?;
    ctx.csv("sd_residual.csv", &["case", "t", "residual"], rows);
    ctx.checks.push(Check::at_most("Schwinger-Dyson residual / |K_t|", worst, p.tol));
    ctx.checks.push(Check::at_most("resolvent equation residual / |K|", eq, p.equation_tol));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(json: &str) -> Result<RunOutcome, ExperimentError> {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(json)?;
        let out = run(&cfg, &RunOptions { out: Some(dir.path().to_path_buf()), seed: None });
        drop(dir);
        out
    }

    #[test]
    fn registry_lists_nine_experiments() {
        assert_eq!(EXPERIMENTS.len(), 9);
        let text = list_experiments();
        assert!(EXPERIMENTS.iter().all(|e| text.contains(e.name)));
    }

    #[test]
    fn unknown_keys_are_config_errors_with_paths() {
        let e = ExperimentConfig::parse(r#"{"experiment": "gram-psd", "bogus": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = run_json(r#"{"experiment": "ccr-check", "params": {"epsilon": [0.1]}}"#).unwrap_err();
        assert!(matches!(&e, ExperimentError::Config { path, .. } if path.starts_with("params")), "{e}");
        let e = run_json(r#"{"experiment": "gram-psd", "space": {"kind": "euclidean", "n": 2, "m": 1}}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }

    #[test]
    fn unknown_experiment_is_a_config_error() {
        let e = run_json(r#"{"experiment": "nope"}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn reciprocal_gram_example() {
        let out = run_json(r#"{"experiment": "gram-psd", "space": {"kind": "reciprocal"}, "params": {"points": [0.5, 1.5, 2.5]}}"#).unwrap();
        assert!(out.report.pass);
        let min = out.report.values["min_eigenvalue"].as_f64().unwrap();
        assert!((min - 2.687340355773529e-3).abs() < 1e-12);
    }

    #[test]
    fn points_are_parsed_per_domain() {
        let k = parse_point(Domain::Klauder(1), &serde_json::json!({"z0": [1, 0], "z": [[0, 2]]}), "p").unwrap();
        assert_eq!(k, Point::klauder(C64::new(1.0, 0.0), &[C64::new(0.0, 2.0)]));
        assert!(parse_point(Domain::Disk, &serde_json::json!([1.5, 0]), "p").is_err());
        assert!(parse_point(Domain::PositiveReal, &serde_json::json!(-1.0), "p").is_err());
        assert_eq!(parse_point(Domain::Real(1), &serde_json::json!(2.0), "p").unwrap(), Point::Real(vec![2.0]));
    }

    #[test]
    fn lattice_of_two_modes() {
        let l = lattice(&[1.0, 1.5], 3.0);
        assert_eq!(l, vec![0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 3.0]);
    }

    #[test]
    fn single_mode_weights_sum_to_kernel() {
        let z = default_klauder(1);
        let w = single_mode_weights(&z, &z);
        let s: C64 = w.iter().sum();
        assert!((s - C64::from(1.0)).norm() < 1e-15);
        assert!((w[2] - C64::from((-1f64).exp() / 2.0)).norm() < 1e-16);
    }

    #[test]
    fn generator_config_validates_shapes() {
        let g: GeneratorConfig = serde_json::from_value(serde_json::json!({"x": [[[1, 0]]], "p": [[0, 0], [1, 0]]})).unwrap();
        assert!(g.build().is_err());
        let g: GeneratorConfig = serde_json::from_value(serde_json::json!({"omegas": [1.0, 2.0]})).unwrap();
        assert_eq!(g.build().unwrap(), OscGenerator::number(&[1.0, 2.0]));
    }
}
