//! Subcommand dispatch. Each subcommand returns its artifacts in memory; nothing touches the
//! filesystem until [`Artifacts::write_to`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::Artifacts;
use super::config::CaseConfig;
use super::manufactured::{run_study, StudyReport};
use crate::background::{profile_csv, solve_background, verify_background, BackgroundReport};
use crate::error::Result;
use crate::gas::GasParameters;
use crate::polar::{apple_curve_csv, emit_apple_curve, max_turning, polar_point, rh_residual, rh_residual_curved};
use crate::sector::spectral::pool;
use crate::shock::{solve_case, SolveReport};
use crate::table::Csv;

/// Jump residual accepted by the `polar` check.
const POLAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcommand {
    Polar,
    Background,
    Linsolve,
    Solve,
    Sweep,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] =
        [Subcommand::Polar, Subcommand::Background, Subcommand::Linsolve, Subcommand::Solve, Subcommand::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Polar => "polar",
            Subcommand::Background => "background",
            Subcommand::Linsolve => "linsolve",
            Subcommand::Solve => "solve",
            Subcommand::Sweep => "sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    FailedChecks,
    Error,
}

/// Contents of `failure.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureReport {
    pub subcommand: String,
    pub status: Status,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Artifacts,
}

impl Outcome {
    /// 0 on pass, 1 when checks failed, 2 on an error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::FailedChecks => 1,
            Status::Error => 2,
        }
    }
}

/// `polar.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarReport {
    pub gamma: f64,
    pub nu: f64,
    pub b: f64,
    pub tau: f64,
    pub omega1: f64,
    pub u: f64,
    pub v: f64,
    pub rho: f64,
    pub mach_post: f64,
    pub rh_residual: [f64; 2],
    pub rh_residual_curved: [f64; 2],
    pub max_turning_angle: f64,
    pub max_turning_omega1: f64,
    pub pass: bool,
}

/// `background.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSummary {
    pub gamma: f64,
    pub nu: f64,
    pub b: f64,
    pub tau: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub report: BackgroundReport,
}

/// One `(gamma, b, nu)` point of `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub gamma: f64,
    pub b: f64,
    pub nu: f64,
    pub tau: Option<f64>,
    pub omega1: Option<f64>,
    pub kappa: Option<f64>,
    pub omega0: Option<f64>,
    pub mach_post: Option<f64>,
    pub max_mach: Option<f64>,
    pub pass: bool,
    pub error: Option<String>,
}

/// One full solve of `sweep.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSolve {
    pub epsilon: f64,
    pub report: Option<SolveReport>,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub solves: Vec<SweepSolve>,
    pub pass: bool,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// Runs `sub` on `cfg`. Errors never escape: they become a `failure.json` artifact.
pub fn run_subcommand(sub: Subcommand, cfg: &CaseConfig) -> Outcome {
    let mut artifacts = Artifacts::new();
    artifacts.add("case.ini", cfg.emit());
    let result = match sub {
        Subcommand::Polar => polar(cfg, &mut artifacts),
        Subcommand::Background => background(cfg, &mut artifacts),
        Subcommand::Linsolve => linsolve(cfg, &mut artifacts),
        Subcommand::Solve => solve(cfg, &mut artifacts),
        Subcommand::Sweep => sweep(cfg, &mut artifacts),
    };
    let (status, kind, message) = match result {
        Ok(None) => return Outcome { status: Status::Pass, artifacts },
        Ok(Some(msg)) => (Status::FailedChecks, "checks".to_string(), msg),
        Err(e) => (Status::Error, e.kind().to_string(), e.to_string()),
    };
    let report = FailureReport { subcommand: sub.name().into(), status, kind, message };
    artifacts.add("failure.json", json(&report));
    Outcome { status, artifacts }
}

/// `Ok(None)` on pass, `Ok(Some(reason))` when checks failed.
type Checked = Result<Option<String>>;

fn verdict(pass: bool, reason: impl FnOnce() -> String) -> Checked {
    Ok(if pass { None } else { Some(reason()) })
}

fn polar(cfg: &CaseConfig, out: &mut Artifacts) -> Checked {
    let params = cfg.gas;
    let b = cfg.resolve_b()?;
    let point = polar_point(&params, b, cfg.background_options().nu_cap)?;
    let up = params.upstream();
    let r = rh_residual(&up, &point.post, point.tau);
    let rc = rh_residual_curved(&up, &point.post, point.tau);
    let mach_post = point.post.mach(params.gamma)?;
    let turning = max_turning(&params, 64)?;
    let pass = r.0.abs().max(r.1.abs()).max(rc.0.abs()).max(rc.1.abs()) < POLAR_TOL && mach_post < 1.0;
    let report = PolarReport {
        gamma: params.gamma,
        nu: params.nu,
        b,
        tau: point.tau,
        omega1: point.omega1,
        u: point.post.u,
        v: point.post.v,
        rho: point.post.rho,
        mach_post,
        rh_residual: [r.0, r.1],
        rh_residual_curved: [rc.0, rc.1],
        max_turning_angle: turning.turning_angle,
        max_turning_omega1: turning.omega1,
        pass,
    };
    out.add("apple.csv", apple_curve_csv(&emit_apple_curve(&params, cfg.polar_samples())?));
    out.add("polar.json", json(&report));
    verdict(pass, || format!("jump residuals {r:?}, {rc:?}; post-shock Mach {mach_post}"))
}

fn background(cfg: &CaseConfig, out: &mut Artifacts) -> Checked {
    let b = cfg.resolve_b()?;
    let sol = solve_background(&cfg.gas, b, &cfg.background_options())?;
    let report = verify_background(&sol);
    let pass = report.pass;
    let summary = BackgroundSummary {
        gamma: cfg.gas.gamma,
        nu: cfg.gas.nu,
        b,
        tau: sol.tau,
        kappa: sol.kappa,
        omega0: sol.omega0,
        omega1: sol.omega1,
        report,
    };
    out.add("profile.csv", profile_csv(&sol));
    out.add("background.json", json(&summary));
    verdict(pass, || format!("background checks failed: {:?}", summary.report))
}

fn linsolve(cfg: &CaseConfig, out: &mut Artifacts) -> Checked {
    let report: StudyReport = run_study(cfg.linsolve_levels(), &cfg.solver_options())?;
    out.add("linsolve.csv", report.to_csv());
    out.add("linsolve.json", json(&report));
    verdict(report.pass, || {
        format!(
            "refinement ratios in [{}, {}], finest residual {:e}",
            report.min_ratio, report.max_ratio, report.finest_residual
        )
    })
}

fn solve(cfg: &CaseConfig, out: &mut Artifacts) -> Checked {
    let bundle = solve_case(&cfg.shock_case()?)?;
    out.add("flowfield.csv", bundle.flowfield_csv()?);
    out.add("shock.csv", bundle.shock_csv());
    out.add("report.json", bundle.report.to_json() + "\n");
    verdict(bundle.report.passed(), || format!("solve checks failed: {:?}", bundle.report.checks))
}

fn sweep_point(cfg: &CaseConfig, gamma: f64, b: f64, nu: f64) -> SweepPoint {
    let mut point = SweepPoint {
        gamma,
        b,
        nu,
        tau: None,
        omega1: None,
        kappa: None,
        omega0: None,
        mach_post: None,
        max_mach: None,
        pass: false,
        error: None,
    };
    let run = |p: &mut SweepPoint| -> Result<()> {
        let params = GasParameters::from_nu(gamma, nu)?;
        let opts = cfg.background_options();
        let polar = polar_point(&params, b, opts.nu_cap)?;
        p.tau = Some(polar.tau);
        p.omega1 = Some(polar.omega1);
        p.mach_post = Some(polar.post.mach(gamma)?);
        let sol = solve_background(&params, b, &opts)?;
        let report = verify_background(&sol);
        p.kappa = Some(sol.kappa);
        p.omega0 = Some(sol.omega0);
        p.max_mach = Some(report.max_mach);
        p.pass = report.pass;
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some(e.to_string());
    }
    point
}

fn sweep_solve(cfg: &CaseConfig, epsilon: f64) -> SweepSolve {
    let run = || -> Result<SolveReport> {
        let mut case = cfg.shock_case()?;
        case.epsilon = epsilon;
        Ok(solve_case(&case)?.report)
    };
    match run() {
        Ok(report) => SweepSolve { epsilon, pass: report.passed(), report: Some(report), error: None },
        Err(e) => SweepSolve { epsilon, report: None, pass: false, error: Some(e.to_string()) },
    }
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn sweep(cfg: &CaseConfig, out: &mut Artifacts) -> Checked {
    let mut jobs = Vec::new();
    for &g in &cfg.sweep_gammas() {
        for &b in &cfg.sweep_bs() {
            for &nu in &cfg.sweep_nus() {
                jobs.push((g, b, nu));
            }
        }
    }
    let epsilons = cfg.sweep_epsilons();
    // Indexed collection keeps the output order independent of scheduling.
    let (points, solves): (Vec<SweepPoint>, Vec<SweepSolve>) = pool().install(|| {
        (
            jobs.par_iter().map(|&(g, b, nu)| sweep_point(cfg, g, b, nu)).collect(),
            epsilons.par_iter().map(|&e| sweep_solve(cfg, e)).collect(),
        )
    });
    let mut csv = Csv::new(&["gamma", "b", "nu", "tau", "omega1", "kappa", "omega0", "mach_post", "max_mach", "pass"]);
    for p in &points {
        csv.row(&[
            p.gamma,
            p.b,
            p.nu,
            opt(p.tau),
            opt(p.omega1),
            opt(p.kappa),
            opt(p.omega0),
            opt(p.mach_post),
            opt(p.max_mach),
            if p.pass { 1.0 } else { 0.0 },
        ]);
    }
    out.add("sweep.csv", csv.finish());
    if !solves.is_empty() {
        let mut csv = Csv::new(&[
            "epsilon",
            "outer_iterations",
            "inner_rate",
            "outer_rate",
            "delta_u_norm",
            "psi_dot_norm",
            "rh_res1_max",
            "rh_res2_max",
            "pass",
        ]);
        for s in &solves {
            let r = s.report.as_ref();
            csv.row(&[
                s.epsilon,
                r.map_or(f64::NAN, |r| r.outer_iterations as f64),
                opt(r.and_then(|r| r.inner_rate)),
                opt(r.and_then(|r| r.outer_rate)),
                opt(r.map(|r| r.delta_u_norm)),
                opt(r.map(|r| r.psi_dot_norm)),
                opt(r.map(|r| r.rh_res1_max)),
                opt(r.map(|r| r.rh_res2_max)),
                if s.pass { 1.0 } else { 0.0 },
            ]);
        }
        out.add("sweep_solve.csv", csv.finish());
    }
    let pass = points.iter().all(|p| p.pass) && solves.iter().all(|s| s.pass);
    let failed = points.iter().filter(|p| !p.pass).count() + solves.iter().filter(|s| !s.pass).count();
    out.add("sweep.json", json(&SweepReport { points, solves, pass }));
    verdict(pass, || format!("{failed} sweep entries failed"))
}

