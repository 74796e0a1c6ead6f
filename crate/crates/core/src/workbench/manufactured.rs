//! Manufactured solutions for the sector solvers and the refinement study.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sector::{solve_dirichlet_laplace, solve_first_order, solve_neumann_singular, LinearData, SolverOptions};
use crate::shock::LogBump;
use crate::table::fmt_f64;
use crate::weighted::{StripGrid, WeightedField};

/// Base grid of the refinement study.
pub fn base_grid() -> StripGrid {
    StripGrid::new(-8.0, 8.0, 64, 1.1, 1.55, 33).expect("valid base grid")
}

fn cosine(m: f64, o0: f64) -> impl Fn(f64, u8) -> f64 {
    move |th, k| match k {
        0 => (m * (th - o0)).cos(),
        1 => -m * (m * (th - o0)).sin(),
        _ => -m * m * (m * (th - o0)).cos(),
    }
}

fn sine(k: f64, o0: f64) -> impl Fn(f64, u8) -> f64 {
    move |th, d| match d {
        0 => (k * (th - o0)).sin(),
        1 => k * (k * (th - o0)).cos(),
        _ => -k * k * (k * (th - o0)).sin(),
    }
}

/// Singular Neumann problem with `phi = e^t b(t) cos(m (theta - omega0))`; returns
/// `(f, g0, g1, exact weighted values)`.
pub fn neumann_case(g: &StripGrid, b: LogBump, m: f64) -> (WeightedField, Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = cosine(m, g.omega0);
    let f = WeightedField::from_fn(*g, 1.0, |t, th| {
        let ef = (b.derivative(t, 2) + 3.0 * b.derivative(t, 1) + 2.0 * b.derivative(t, 0)) * p(th, 0)
            + b.derivative(t, 0) * (p(th, 2) + p(th, 1) / th.tan());
        ef * (-t).exp()
    })
    .expect("grid field");
    let g0 = (0..g.n_t).map(|i| b.derivative(g.t(i), 0) * p(g.omega0, 1)).collect();
    let g1 = (0..g.n_t).map(|i| b.derivative(g.t(i), 0) * p(g.omega1, 1)).collect();
    let exact = (0..g.len()).map(|k| b.derivative(g.t(k / g.n_theta), 0) * p(g.theta(k % g.n_theta), 0)).collect();
    (f, g0, g1, exact)
}

/// Dirichlet problem with `Phi = e^t b(t) sin(n pi (theta - omega0)/(omega1 - omega0))`.
pub fn dirichlet_case(g: &StripGrid, b: LogBump, n: f64) -> (WeightedField, Vec<f64>) {
    let q = sine(n * std::f64::consts::PI / (g.omega1 - g.omega0), g.omega0);
    let f = WeightedField::from_fn(*g, 1.0, |t, th| {
        ((b.derivative(t, 2) + 2.0 * b.derivative(t, 1) + b.derivative(t, 0)) * q(th, 0) + b.derivative(t, 0) * q(th, 2))
            * (-t).exp()
    })
    .expect("grid field");
    let exact = (0..g.len()).map(|k| b.derivative(g.t(k / g.n_theta), 0) * q(g.theta(k % g.n_theta), 0)).collect();
    (f, exact)
}

/// First-order system with `U = grad(e^t b P) + perp grad(e^t d Q)`; returns data and exact `(u, v)`.
pub fn first_order_case(g: &StripGrid, b: LogBump, m: f64, d: LogBump) -> (LinearData, Vec<f64>, Vec<f64>) {
    let (o0, o1) = (g.omega0, g.omega1);
    let p = cosine(m, o0);
    let q = sine(std::f64::consts::PI / (o1 - o0), o0);
    let uv = |t: f64, th: f64| {
        let (c, s) = (th.cos(), th.sin());
        let (w, wt, wth) = (b.derivative(t, 0) * p(th, 0), b.derivative(t, 1) * p(th, 0), b.derivative(t, 0) * p(th, 1));
        let (ww, wwt, wwth) = (d.derivative(t, 0) * q(th, 0), d.derivative(t, 1) * q(th, 0), d.derivative(t, 0) * q(th, 1));
        let px = c * (ww + wwt) - s * wwth;
        let py = s * (ww + wwt) + c * wwth;
        (c * (w + wt) - s * wth - py, s * (w + wt) + c * wth + px, px)
    };
    let f1 = WeightedField::from_fn(*g, 1.0, |t, th| {
        let ef = (b.derivative(t, 2) + 3.0 * b.derivative(t, 1) + 2.0 * b.derivative(t, 0)) * p(th, 0)
            + b.derivative(t, 0) * (p(th, 2) + p(th, 1) / th.tan());
        (ef + uv(t, th).2 / th.sin()) * (-t).exp()
    })
    .expect("grid field");
    let f2 = WeightedField::from_fn(*g, 1.0, |t, th| {
        ((d.derivative(t, 2) + 2.0 * d.derivative(t, 1) + d.derivative(t, 0)) * q(th, 0) + d.derivative(t, 0) * q(th, 2))
            * (-t).exp()
    })
    .expect("grid field");
    let g0 = (0..g.n_t).map(|i| { let (u, v, _) = uv(g.t(i), o0); -o0.tan() * u + v }).collect();
    let g1 = (0..g.n_t).map(|i| { let (u, v, _) = uv(g.t(i), o1); u - v / o1.tan() }).collect();
    let node = |k: usize| (g.t(k / g.n_theta), g.theta(k % g.n_theta));
    let eu = (0..g.len()).map(|k| { let (t, th) = node(k); uv(t, th).0 }).collect();
    let ev = (0..g.len()).map(|k| { let (t, th) = node(k); uv(t, th).1 }).collect();
    (LinearData::new(f1, f2, g0, g1).expect("consistent data"), eu, ev)
}

fn bump(center: f64, width: f64, weight: f64) -> LogBump {
    LogBump { center, width, weight }
}

pub fn neumann_cases() -> [(LogBump, f64); 3] {
    [(bump(0.0, 1.0, 1.0), 1.0), (bump(-1.0, 0.8, 2.0), 3.0), (bump(0.5, 1.0, 0.5), 0.5)]
}

pub fn dirichlet_cases() -> [(LogBump, f64); 3] {
    [(bump(0.0, 1.0, 1.0), 1.0), (bump(-1.0, 0.8, 0.3), 2.0), (bump(0.5, 0.9, -1.0), 1.0)]
}

pub fn first_order_cases() -> [(LogBump, f64, LogBump); 3] {
    [
        (bump(0.0, 1.0, 1.0), 1.0, bump(0.0, 1.0, 0.0)),
        (bump(-1.0, 0.8, 2.0), 2.0, bump(0.0, 1.0, 0.3)),
        (bump(0.5, 1.0, 0.5), 0.5, bump(0.5, 0.9, -1.0)),
    ]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyRow {
    pub solver: String,
    pub case: usize,
    pub n_t: usize,
    pub n_theta: usize,
    pub error: f64,
    /// Error on the previous level divided by this one.
    pub ratio: Option<f64>,
    pub residual: f64,
    pub stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub finest_residual: f64,
    pub pass: bool,
}

/// Refinement study over `levels` simultaneous `(t, theta)` doublings of [`base_grid`].
pub fn run_study(levels: usize, opts: &SolverOptions) -> Result<StudyReport> {
    let mut rows = Vec::new();
    let push = |rows: &mut Vec<StudyRow>, solver: &str, case: usize, g: &StripGrid, error: f64, residual: f64, stability: f64| {
        let ratio = rows
            .last()
            .filter(|r: &&StudyRow| r.solver == solver && r.case == case)
            .map(|r| r.error / error);
        rows.push(StudyRow { solver: solver.into(), case, n_t: g.n_t, n_theta: g.n_theta, error, ratio, residual, stability });
    };
    for (c, (b, m)) in neumann_cases().into_iter().enumerate() {
        let mut g = base_grid();
        for _ in 0..levels {
            let (f, g0, g1, exact) = neumann_case(&g, b, m);
            let s = solve_neumann_singular(&f, &g0, &g1, opts)?;
            let e = max_diff(&s.field.weighted_values(), &exact);
            push(&mut rows, "neumann", c, &g, e, s.diagnostics.max_residual(), s.diagnostics.stability_ratio);
            g = g.refined();
        }
    }
    for (c, (b, n)) in dirichlet_cases().into_iter().enumerate() {
        let mut g = base_grid();
        for _ in 0..levels {
            let (f, exact) = dirichlet_case(&g, b, n);
            let s = solve_dirichlet_laplace(&f, opts)?;
            let e = max_diff(&s.field.weighted_values(), &exact);
            push(&mut rows, "dirichlet", c, &g, e, s.diagnostics.max_residual(), s.diagnostics.stability_ratio);
            g = g.refined();
        }
    }
    for (c, (b, m, d)) in first_order_cases().into_iter().enumerate() {
        let mut g = base_grid();
        for _ in 0..levels {
            let (data, eu, ev) = first_order_case(&g, b, m, d);
            let s = solve_first_order(&data, opts)?;
            let e = max_diff(s.u.values(), &eu).max(max_diff(s.v.values(), &ev));
            push(&mut rows, "first_order", c, &g, e, s.diagnostics.max_residual(), s.diagnostics.stability_ratio);
            g = g.refined();
        }
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let finest = rows.iter().map(|r| r.n_t).max().unwrap_or(0);
    let finest_residual = rows.iter().filter(|r| r.n_t == finest).map(|r| r.residual).fold(0.0, f64::max);
    let pass = !ratios.is_empty() && min_ratio >= 3.0 && max_ratio <= 5.0 && finest_residual < 1e-6;
    Ok(StudyReport { rows, min_ratio, max_ratio, finest_residual, pass })
}

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("solver,case,n_t,n_theta,error,ratio,residual,stability\n");
        for r in &self.rows {
            let ratio = r.ratio.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.solver,
                r.case,
                r.n_t,
                r.n_theta,
                fmt_f64(r.error),
                ratio,
                fmt_f64(r.residual),
                fmt_f64(r.stability)
            ));
        }
        out
    }
}
