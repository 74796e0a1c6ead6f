//! Case files: sections of `key = value` lines.
//!
//! ```text
//! # comment
//! [gas]
//! gamma = 2.0
//! nu = 0.01
//! b = 1.0
//!
//! [perturbation]
//! epsilon = 0.001
//! cone = 0.5 0.8 1.0; 2.0 0.5 -0.3
//! upstream = 1.0 0.8 1.0 0.5
//! ```
//!
//! Recognised keys are listed in [`SCHEMA`]. Comments start with `#` or `;` at the beginning of
//! a line. Lists separate numbers by commas; bump lists separate bumps by `;` and bump fields
//! (center, width, weight or center, width, weight_u, weight_v) by whitespace. [`CaseConfig::emit`]
//! writes the canonical form: schema order, one blank line between sections, shortest
//! round-trip number formatting.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use crate::background::{solve_background_for_cone, BackgroundOptions};
use crate::error::{Error, Result};
use crate::gas::GasParameters;
use crate::polar::DEFAULT_NU_CAP;
use crate::sector::SolverOptions;
use crate::shock::{Admissibility, LogBump, ShockCase, UpstreamBump};
use crate::weighted::StripGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Text,
    FloatList,
    ConeBumps,
    UpstreamBumps,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub section: &'static str,
    pub key: &'static str,
    pub kind: Kind,
    pub doc: &'static str,
}

const fn k(section: &'static str, key: &'static str, kind: Kind, doc: &'static str) -> KeySpec {
    KeySpec { section, key, kind, doc }
}

/// Every accepted key, in canonical order.
pub const SCHEMA: &[KeySpec] = &[
    k("gas", "gamma", Kind::Float, "adiabatic exponent in (1, 2]"),
    k("gas", "nu", Kind::Float, "nu = 1/M_inf^2 (exclusive with mach_inf unless consistent)"),
    k("gas", "mach_inf", Kind::Float, "upstream Mach number"),
    k("gas", "b", Kind::Float, "flow slope behind the shock (exclusive with omega0)"),
    k("gas", "omega0", Kind::Float, "target cone half-angle in radians"),
    k("grid", "t_min", Kind::Float, "lower end of the ln r window (default -12)"),
    k("grid", "t_max", Kind::Float, "upper end of the ln r window (default 20)"),
    k("grid", "n_t", Kind::Int, "ln r nodes, a power of two >= 4 (default 256)"),
    k("grid", "n_theta", Kind::Int, "angular nodes, >= 5 (default 65)"),
    k("perturbation", "epsilon", Kind::Float, "perturbation size (default 0)"),
    k("perturbation", "margin", Kind::Float, "angular margin of the extended upstream sector (default 0.05)"),
    k("perturbation", "cone", Kind::ConeBumps, "cone bumps `center width weight` in ln x"),
    k("perturbation", "upstream", Kind::UpstreamBumps, "upstream bumps `center width weight_u weight_v` in ln r"),
    k("perturbation", "front_seed", Kind::Float, "slope deviation of the initial shock front (default 0)"),
    k("solver", "q", Kind::Float, "integrability exponent, > 2 (default 4)"),
    k("solver", "tol_inner", Kind::Float, "inner tolerance (default 1e-9)"),
    k("solver", "tol_outer", Kind::Float, "outer tolerance (default 1e-8)"),
    k("solver", "max_inner", Kind::Int, "inner iteration cap (default 50)"),
    k("solver", "max_outer", Kind::Int, "outer iteration cap (default 30)"),
    k("solver", "cond_cap", Kind::Float, "largest accepted mode condition estimate (default 1e12)"),
    k("solver", "decay_tol", Kind::Float, "largest accepted end-to-peak data ratio (default 1e-8)"),
    k("solver", "fixed_point_tol", Kind::Float, "variable-coefficient tolerance (default 1e-9)"),
    k("solver", "max_fixed_point", Kind::Int, "variable-coefficient iteration cap (default 200)"),
    k("solver", "rate_limit", Kind::Float, "observed rate treated as divergence (default 0.95)"),
    k("solver", "contraction_threshold", Kind::Float, "largest accepted coefficient perturbation (default 1)"),
    k("admissibility", "eps_max", Kind::Float, "largest epsilon (default 1e-2)"),
    k("admissibility", "nu_max", Kind::Float, "largest nu (default 0.05)"),
    k("admissibility", "factor", Kind::Float, "epsilon <= factor * nu^(1/(gamma-1)) (default 0.1)"),
    k("admissibility", "enforce", Kind::Bool, "apply the gates (default true)"),
    k("background", "steps", Kind::Int, "RK4 steps on [tau, 1/b] (default 2000)"),
    k("background", "event_tol", Kind::Float, "slip event tolerance (default 1e-12)"),
    k("background", "nu_cap", Kind::Float, "largest nu accepted by the polar (default 0.05)"),
    k("polar", "samples", Kind::Int, "shock angles on the polar curve (default 200)"),
    k("linsolve", "levels", Kind::Int, "grid levels of the manufactured suite (default 4)"),
    k("sweep", "gammas", Kind::FloatList, "gamma values"),
    k("sweep", "bs", Kind::FloatList, "b values"),
    k("sweep", "nus", Kind::FloatList, "nu values"),
    k("sweep", "epsilons", Kind::FloatList, "epsilon values for full solves"),
    k("output", "dir", Kind::Text, "artifact directory (overridden by --out)"),
    k("run", "seed", Kind::Int, "random seed for generated test data"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    FloatList(Vec<f64>),
    Cone(Vec<LogBump>),
    Upstream(Vec<UpstreamBump>),
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Float(x) => num(*x),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::FloatList(v) => v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", "),
            Value::Cone(v) => v
                .iter()
                .map(|b| format!("{} {} {}", num(b.center), num(b.width), num(b.weight)))
                .collect::<Vec<_>>()
                .join("; "),
            Value::Upstream(v) => v
                .iter()
                .map(|b| format!("{} {} {} {}", num(b.center), num(b.width), num(b.weight_u), num(b.weight_v)))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

/// Where the cone comes from: a flow slope or a target half-angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeTarget {
    Slope(f64),
    Angle(f64),
}

/// A validated case file.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    entries: BTreeMap<usize, Entry>,
    /// Resolved gas parameters.
    pub gas: GasParameters,
    pub cone_target: ConeTarget,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(err(line, format!("`{}` is not a finite number", s.trim()))),
    }
}

fn parse_bumps(s: &str, width: usize, line: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for group in s.split(';') {
        let fields: Vec<f64> = group.split_whitespace().map(|f| parse_float(f, line)).collect::<Result<_>>()?;
        if fields.len() != width {
            return Err(err(line, format!("each bump needs {width} numbers, got `{}`", group.trim())));
        }
        if !(fields[1] > 0.0) {
            return Err(err(line, format!("bump width must be positive, got {}", fields[1])));
        }
        out.push(fields);
    }
    Ok(out)
}

fn parse_value(spec: &KeySpec, raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(err(line, format!("`{}` has no value", spec.key)));
    }
    Ok(match spec.kind {
        Kind::Float => Value::Float(parse_float(raw, line)?),
        Kind::Int => Value::Int(raw.parse().map_err(|_| err(line, format!("`{raw}` is not a non-negative integer")))?),
        Kind::Bool => Value::Bool(match raw {
            "true" => true,
            "false" => false,
            _ => return Err(err(line, format!("`{raw}` is not true or false"))),
        }),
        Kind::Text => Value::Text(raw.to_string()),
        Kind::FloatList => Value::FloatList(raw.split(',').map(|x| parse_float(x, line)).collect::<Result<_>>()?),
        Kind::ConeBumps => Value::Cone(
            parse_bumps(raw, 3, line)?
                .into_iter()
                .map(|f| LogBump { center: f[0], width: f[1], weight: f[2] })
                .collect(),
        ),
        Kind::UpstreamBumps => Value::Upstream(
            parse_bumps(raw, 4, line)?
                .into_iter()
                .map(|f| UpstreamBump { center: f[0], width: f[1], weight_u: f[2], weight_v: f[3] })
                .collect(),
        ),
    })
}

fn index_of(section: &str, key: &str) -> Option<usize> {
    SCHEMA.iter().position(|s| s.section == section && s.key == key)
}

pub fn parse_case(path: &Path) -> Result<CaseConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_case_str(&text)
}

pub fn parse_case_str(text: &str) -> Result<CaseConfig> {
    let mut entries: BTreeMap<usize, Entry> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header `{s}`")))?
                .trim();
            if !SCHEMA.iter().any(|k| k.section == name) {
                return Err(err(line, format!("unknown section `[{name}]`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
        let key = key.trim();
        let sec = section.as_deref().ok_or_else(|| err(line, format!("key `{key}` appears before any section")))?;
        let idx = index_of(sec, key).ok_or_else(|| err(line, format!("unknown key `{key}` in section [{sec}]")))?;
        if let Some(prev) = entries.get(&idx) {
            return Err(err(line, format!("duplicate key `{key}` (first given on line {})", prev.line)));
        }
        let value = parse_value(&SCHEMA[idx], value, line)?;
        entries.insert(idx, Entry { value, line });
    }
    CaseConfig::validate(entries)
}

impl CaseConfig {
    fn validate(entries: BTreeMap<usize, Entry>) -> Result<Self> {
        let get = |sec: &str, key: &str| entries.get(&index_of(sec, key).expect("schema key"));
        let float = |sec: &str, key: &str| match get(sec, key) {
            Some(Entry { value: Value::Float(x), line }) => Some((*x, *line)),
            _ => None,
        };
        let (gamma, gline) = float("gas", "gamma").ok_or_else(|| err(0, "missing required key `gamma` in [gas]"))?;
        let gas = match (float("gas", "nu"), float("gas", "mach_inf")) {
            (None, None) => return Err(err(0, "one of `nu` or `mach_inf` is required in [gas]")),
            (Some((nu, line)), None) => GasParameters::from_nu(gamma, nu).map_err(|e| err(line, e.to_string()))?,
            (None, Some((m, line))) => GasParameters::from_mach(gamma, m).map_err(|e| err(line, e.to_string()))?,
            (Some((nu, l1)), Some((m, l2))) => {
                let p = GasParameters::from_nu(gamma, nu).map_err(|e| err(l1, e.to_string()))?;
                let implied = 1.0 / (m * m);
                if !((implied - nu).abs() <= 1e-12 * nu) {
                    return Err(err(
                        l2,
                        format!("`mach_inf` = {m} implies nu = {implied:e}, conflicting with nu = {nu:e} on line {l1}"),
                    ));
                }
                p
            }
        };
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(err(gline, format!("gamma must lie in (1, 2], got {gamma}")));
        }
        let cone_target = match (float("gas", "b"), float("gas", "omega0")) {
            (None, None) => return Err(err(0, "one of `b` or `omega0` is required in [gas]")),
            (Some(_), Some((_, line))) => {
                return Err(err(line, "`b` and `omega0` are mutually exclusive"));
            }
            (Some((b, line)), None) => {
                if !(b > 0.0) {
                    return Err(err(line, format!("b must be positive, got {b}")));
                }
                ConeTarget::Slope(b)
            }
            (None, Some((w, line))) => {
                if !(w > 0.0 && w < std::f64::consts::FRAC_PI_2) {
                    return Err(err(line, format!("omega0 must lie in (0, pi/2), got {w}")));
                }
                ConeTarget::Angle(w)
            }
        };
        let cfg = Self { entries: entries.clone(), gas, cone_target };
        // Grid invariants, checked on a placeholder sector.
        let (t_min, t_max) = (cfg.float_or("grid", "t_min", -12.0), cfg.float_or("grid", "t_max", 20.0));
        if let Err(e) = StripGrid::new(t_min, t_max, cfg.n_t(), 0.1, 0.2, cfg.n_theta()) {
            let line = ["t_max", "n_t", "n_theta", "t_min"]
                .iter()
                .find_map(|k| cfg.line_of("grid", k))
                .unwrap_or(0);
            return Err(err(line, e.to_string()));
        }
        let positive = [
            ("perturbation", "margin"),
            ("solver", "tol_inner"),
            ("solver", "tol_outer"),
            ("solver", "cond_cap"),
            ("solver", "decay_tol"),
            ("solver", "fixed_point_tol"),
            ("solver", "rate_limit"),
            ("solver", "contraction_threshold"),
            ("admissibility", "eps_max"),
            ("admissibility", "nu_max"),
            ("admissibility", "factor"),
            ("background", "event_tol"),
            ("background", "nu_cap"),
        ];
        for (sec, key) in positive {
            if let Some((x, line)) = float(sec, key) {
                if !(x > 0.0) {
                    return Err(err(line, format!("`{key}` must be positive, got {x}")));
                }
            }
        }
        if let Some((e, line)) = float("perturbation", "epsilon") {
            if e < 0.0 {
                return Err(err(line, format!("epsilon must be non-negative, got {e}")));
            }
        }
        if let Some((q, line)) = float("solver", "q") {
            if !(q > 2.0) {
                return Err(err(line, format!("q must exceed 2, got {q}")));
            }
        }
        for (sec, key) in [("solver", "max_inner"), ("solver", "max_outer"), ("solver", "max_fixed_point"), ("background", "steps"), ("linsolve", "levels")] {
            if let Some(Entry { value: Value::Int(0), line }) = get(sec, key) {
                return Err(err(*line, format!("`{key}` must be positive")));
            }
        }
        if let Some(Entry { value: Value::Int(n), line }) = get("polar", "samples") {
            if *n < 2 {
                return Err(err(*line, "`samples` must be at least 2"));
            }
        }
        Ok(cfg)
    }

    fn entry(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&index_of(sec, key).expect("schema key"))
    }

    /// Line on which `key` was given.
    pub fn line_of(&self, sec: &str, key: &str) -> Option<usize> {
        self.entry(sec, key).map(|e| e.line)
    }

    pub fn value(&self, sec: &str, key: &str) -> Option<&Value> {
        self.entry(sec, key).map(|e| &e.value)
    }

    fn float_or(&self, sec: &str, key: &str, default: f64) -> f64 {
        match self.value(sec, key) {
            Some(Value::Float(x)) => *x,
            _ => default,
        }
    }

    fn int_or(&self, sec: &str, key: &str, default: u64) -> usize {
        match self.value(sec, key) {
            Some(Value::Int(n)) => *n as usize,
            _ => default as usize,
        }
    }

    fn list(&self, sec: &str, key: &str) -> Option<Vec<f64>> {
        match self.value(sec, key) {
            Some(Value::FloatList(v)) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn n_t(&self) -> usize {
        self.int_or("grid", "n_t", 256)
    }

    pub fn n_theta(&self) -> usize {
        self.int_or("grid", "n_theta", 65)
    }

    pub fn epsilon(&self) -> f64 {
        self.float_or("perturbation", "epsilon", 0.0)
    }

    pub fn q(&self) -> f64 {
        self.float_or("solver", "q", 4.0)
    }

    pub fn polar_samples(&self) -> usize {
        self.int_or("polar", "samples", 200)
    }

    pub fn linsolve_levels(&self) -> usize {
        self.int_or("linsolve", "levels", 4)
    }

    pub fn seed(&self) -> u64 {
        self.int_or("run", "seed", 0) as u64
    }

    pub fn output_dir(&self) -> Option<String> {
        match self.value("output", "dir") {
            Some(Value::Text(s)) => Some(s.clone()),
            _ => None,
        }
    }

    pub fn sweep_gammas(&self) -> Vec<f64> {
        self.list("sweep", "gammas").unwrap_or_else(|| vec![self.gas.gamma])
    }

    pub fn sweep_bs(&self) -> Vec<f64> {
        self.list("sweep", "bs").unwrap_or_else(|| match self.cone_target {
            ConeTarget::Slope(b) => vec![b],
            ConeTarget::Angle(_) => vec![1.0],
        })
    }

    pub fn sweep_nus(&self) -> Vec<f64> {
        self.list("sweep", "nus").unwrap_or_else(|| vec![self.gas.nu])
    }

    pub fn sweep_epsilons(&self) -> Vec<f64> {
        self.list("sweep", "epsilons").unwrap_or_default()
    }

    pub fn solver_options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            cond_cap: self.float_or("solver", "cond_cap", d.cond_cap),
            decay_tol: self.float_or("solver", "decay_tol", d.decay_tol),
            q: self.q(),
            fixed_point_tol: self.float_or("solver", "fixed_point_tol", d.fixed_point_tol),
            max_fixed_point: self.int_or("solver", "max_fixed_point", d.max_fixed_point as u64),
            rate_limit: self.float_or("solver", "rate_limit", d.rate_limit),
            contraction_threshold: self.float_or("solver", "contraction_threshold", d.contraction_threshold),
        }
    }

    pub fn background_options(&self) -> BackgroundOptions {
        let d = BackgroundOptions::default();
        BackgroundOptions {
            steps: self.int_or("background", "steps", d.steps as u64),
            event_tol: self.float_or("background", "event_tol", d.event_tol),
            degeneracy_eps: d.degeneracy_eps,
            nu_cap: self.float_or("background", "nu_cap", DEFAULT_NU_CAP),
        }
    }

    /// Flow slope `b`, solving for it when a cone angle was given.
    pub fn resolve_b(&self) -> Result<f64> {
        match self.cone_target {
            ConeTarget::Slope(b) => Ok(b),
            ConeTarget::Angle(w) => Ok(solve_background_for_cone(&self.gas, w, &self.background_options())?.b),
        }
    }

    /// Free-boundary case with defaults filled in.
    pub fn shock_case(&self) -> Result<ShockCase> {
        let reference = ShockCase::reference(0.0);
        let d = Admissibility::default();
        let cone = match self.value("perturbation", "cone") {
            Some(Value::Cone(v)) => v.clone(),
            _ => reference.cone_bumps.clone(),
        };
        let upstream = match self.value("perturbation", "upstream") {
            Some(Value::Upstream(v)) => v.clone(),
            _ => reference.upstream_bumps.clone(),
        };
        Ok(ShockCase {
            params: self.gas,
            b: self.resolve_b()?,
            epsilon: self.epsilon(),
            t_min: self.float_or("grid", "t_min", reference.t_min),
            t_max: self.float_or("grid", "t_max", reference.t_max),
            n_t: self.n_t(),
            n_theta: self.n_theta(),
            cone_bumps: cone,
            upstream_bumps: upstream,
            margin: self.float_or("perturbation", "margin", reference.margin),
            q: self.q(),
            tol_inner: self.float_or("solver", "tol_inner", reference.tol_inner),
            tol_outer: self.float_or("solver", "tol_outer", reference.tol_outer),
            max_inner: self.int_or("solver", "max_inner", reference.max_inner as u64),
            max_outer: self.int_or("solver", "max_outer", reference.max_outer as u64),
            seed: self.float_or("perturbation", "front_seed", 0.0),
            admissibility: Admissibility {
                eps_max: self.float_or("admissibility", "eps_max", d.eps_max),
                nu_max: self.float_or("admissibility", "nu_max", d.nu_max),
                factor: self.float_or("admissibility", "factor", d.factor),
                enforce: !matches!(self.value("admissibility", "enforce"), Some(Value::Bool(false))),
            },
            solver: self.solver_options(),
            background: self.background_options(),
        })
    }

    /// Sets `key` programmatically (used by sweeps); the value is validated on re-parse.
    pub fn with_value(&self, sec: &str, key: &str, value: Value) -> Result<Self> {
        let idx = index_of(sec, key).ok_or_else(|| err(0, format!("unknown key `{key}` in section [{sec}]")))?;
        let mut entries = self.entries.clone();
        entries.insert(idx, Entry { value, line: 0 });
        if sec == "gas" && key == "nu" {
            entries.remove(&index_of("gas", "mach_inf").unwrap());
        }
        if sec == "gas" && key == "b" {
            entries.remove(&index_of("gas", "omega0").unwrap());
        }
        Self::validate(entries)
    }

    /// Canonical text of the case.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for (idx, e) in &self.entries {
            let spec = &SCHEMA[*idx];
            if current != Some(spec.section) {
                if current.is_some() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{}]", spec.section);
                current = Some(spec.section);
            }
            let _ = writeln!(out, "{} = {}", spec.key, e.value.render());
        }
        out
    }
}

/// Reference text of every key, for documentation.
pub fn schema_doc() -> String {
    let mut out = String::new();
    for s in SCHEMA {
        let _ = writeln!(out, "[{}] {}: {}", s.section, s.key, s.doc);
    }
    out
}
