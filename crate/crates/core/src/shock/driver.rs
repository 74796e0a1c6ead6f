//! Data assembly, the linearised map `J`, the shock update `J_S` and the outer loop.

use serde::{Deserialize, Serialize};

use super::descriptors::{ConeBoundary, LogBump, UpstreamBump, UpstreamField};
use super::front::{jacobians, map_inverse, map_to_physical, ShockFront, FOLD_GUARD};
use super::jump::{alpha_beta, assemble_g};
use crate::background::{solve_background, BackgroundOptions, SelfSimilarSolution};
use crate::error::{Error, Result};
use crate::gas::{FlowState, GasParameters};
use crate::sector::{solve_perturbed, Coefficients, FirstOrderSolution, LinearData, Mat2, SolverOptions};
use crate::table::Csv;
use crate::weighted::{diff1, gamma1_norm, StripGrid, WeightedField};

/// Gates on the perturbation size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub eps_max: f64,
    pub nu_max: f64,
    /// `epsilon <= factor * nu^(1/(gamma-1))`.
    pub factor: f64,
    pub enforce: bool,
}

impl Default for Admissibility {
    fn default() -> Self {
        Self { eps_max: 1e-2, nu_max: 0.05, factor: 0.1, enforce: true }
    }
}

/// Everything the free-boundary solve needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockCase {
    pub params: GasParameters,
    pub b: f64,
    pub epsilon: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub cone_bumps: Vec<LogBump>,
    pub upstream_bumps: Vec<UpstreamBump>,
    /// Angular margin of the extended upstream sector.
    pub margin: f64,
    pub q: f64,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// Amplitude of a Gaussian slope deviation in the initial front.
    pub seed: f64,
    pub admissibility: Admissibility,
    pub solver: SolverOptions,
    pub background: BackgroundOptions,
}

impl ShockCase {
    /// The reference family: `gamma = 2`, `nu = 0.01`, `b = 1`, one cone and one upstream bump.
    pub fn reference(epsilon: f64) -> Self {
        Self {
            params: GasParameters::from_nu(2.0, 0.01).expect("valid gas"),
            b: 1.0,
            epsilon,
            t_min: -12.0,
            t_max: 20.0,
            n_t: 256,
            n_theta: 65,
            cone_bumps: vec![LogBump { center: 0.5, width: 0.8, weight: 1.0 }],
            upstream_bumps: vec![UpstreamBump { center: 1.0, width: 0.8, weight_u: 1.0, weight_v: 0.5 }],
            margin: 0.05,
            q: 4.0,
            tol_inner: 1e-9,
            tol_outer: 1e-8,
            max_inner: 50,
            max_outer: 30,
            seed: 0.0,
            admissibility: Admissibility::default(),
            solver: SolverOptions::default(),
            background: BackgroundOptions::default(),
        }
    }

    pub fn check_admissibility(&self) -> Result<()> {
        let a = &self.admissibility;
        if !(self.epsilon >= 0.0) {
            return Err(Error::Admissibility(format!("epsilon = {} is negative", self.epsilon)));
        }
        if !a.enforce {
            return Ok(());
        }
        let scale = self.params.nu_scale();
        if self.epsilon > a.eps_max {
            return Err(Error::Admissibility(format!("epsilon = {:e} exceeds eps_max = {:e}", self.epsilon, a.eps_max)));
        }
        if self.params.nu > a.nu_max {
            return Err(Error::Admissibility(format!("nu = {:e} exceeds nu_max = {:e}", self.params.nu, a.nu_max)));
        }
        if self.epsilon > a.factor * scale {
            return Err(Error::Admissibility(format!(
                "epsilon = {:e} exceeds {} * nu^(1/(gamma-1)) = {:e}",
                self.epsilon,
                a.factor,
                a.factor * scale
            )));
        }
        Ok(())
    }
}

/// Precomputed background, grid and descriptors of a case.
#[derive(Debug, Clone)]
pub struct ShockProblem {
    pub case: ShockCase,
    pub background: SelfSimilarSolution,
    pub grid: StripGrid,
    pub cone: ConeBoundary,
    pub upstream: UpstreamField,
    pub alpha: f64,
    pub beta: f64,
    /// `G(U0(omega1); (1, 0))`, zero up to rounding.
    pub g_background: f64,
    /// Background velocity and its `theta` derivative on the grid rays.
    u0: Vec<[f64; 4]>,
    base: Coefficients,
}

fn a_matrix(u: f64, v: f64, c2: f64) -> Mat2 {
    [[1.0 - u * u / c2, -u * v / c2], [0.0, 1.0]]
}

fn b_matrix(u: f64, v: f64, c2: f64) -> Mat2 {
    [[-u * v / c2, 1.0 - v * v / c2], [-1.0, 0.0]]
}

impl ShockProblem {
    pub fn new(case: &ShockCase) -> Result<Self> {
        case.check_admissibility()?;
        let background = solve_background(&case.params, case.b, &case.background)?;
        let grid = StripGrid::new(case.t_min, case.t_max, case.n_t, background.omega0, background.omega1, case.n_theta)?;
        let cone = ConeBoundary::normalized(grid.omega0, case.cone_bumps.clone(), case.epsilon, case.q)?;
        let upstream = UpstreamField::normalized(
            grid.omega0,
            grid.omega1,
            case.margin,
            case.upstream_bumps.clone(),
            case.epsilon,
            case.q,
        )?;
        let (alpha, beta) = alpha_beta(&background)?;
        let mut u0 = Vec::with_capacity(grid.n_theta);
        for j in 0..grid.n_theta {
            let th = grid.theta(j);
            let s = background.state_at_theta(th)?;
            let (du, dv) = background.derivative_at_theta(th)?;
            u0.push([s.u, s.v, du, dv]);
        }
        let [us, vs, ..] = u0[grid.n_theta - 1];
        let g_background =
            assemble_g(&case.params.state(us, vs)?, &case.params.state(1.0, 0.0)?, case.params.gamma).value;
        let mut base = Coefficients::base(&grid);
        for i in 0..grid.n_t {
            for j in 0..grid.n_theta {
                let k = grid.index(i, j);
                let [u, v, ..] = u0[j];
                let c2 = case.params.sound_speed_sq(u.hypot(v))?;
                base.a[k] = a_matrix(u, v, c2);
                base.b[k] = b_matrix(u, v, c2);
            }
        }
        base.alpha1 = vec![[1.0, beta / alpha]; grid.n_t];
        Ok(Self { case: case.clone(), background, grid, cone, upstream, alpha, beta, g_background, u0, base })
    }

    pub fn tan0(&self) -> f64 {
        self.grid.omega0.tan()
    }

    pub fn cot1(&self) -> f64 {
        1.0 / self.grid.omega1.tan()
    }

    /// Background velocity `(u0, v0)` on ray `j`.
    pub fn background_velocity(&self, j: usize) -> (f64, f64) {
        (self.u0[j][0], self.u0[j][1])
    }

    fn options(&self) -> SolverOptions {
        SolverOptions { q: self.case.q, ..self.case.solver }
    }

    /// Coefficients of the linearised problem for the front `psi`.
    pub fn coefficients(&self, psi: &ShockFront) -> Result<Coefficients> {
        let g = self.grid;
        let mut c = self.base.clone();
        let (c0, s0) = (g.omega0.cos(), g.omega0.sin());
        for i in 0..g.n_t {
            let r = g.t(i).exp();
            let (x, _) = map_to_physical(r * c0, r * s0, psi, &self.cone)?;
            c.alpha0[i] = [-self.cone.phi_prime(x), 1.0];
        }
        Ok(c)
    }

    /// Upstream state at the physical point of shock node `i`.
    fn upstream_at(&self, psi: &ShockFront, i: usize) -> Result<(FlowState, (f64, f64))> {
        let eta = psi.eta_grid[i];
        let xi = eta * self.cot1();
        let (x, y) = map_to_physical(xi, eta, psi, &self.cone)?;
        if !self.upstream.contains(x, y) {
            return Err(Error::Domain(format!("mapped shock point ({x:e}, {y:e}) lies outside the extended sector")));
        }
        let (du, dv) = self.upstream.delta(x, y);
        Ok((self.case.params.state(1.0 + du, dv)?, (x, y)))
    }

    fn shock_state(&self, delta: &DeltaU, i: usize) -> Result<FlowState> {
        let top = self.grid.n_theta - 1;
        let (u, v) = self.background_velocity(top);
        self.case.params.state(u + delta.u.get(i, top), v + delta.v.get(i, top))
    }
}

/// A velocity perturbation on the grid with its strip derivatives `[u_t, u_theta, v_t, v_theta]`.
#[derive(Debug, Clone)]
pub struct DeltaU {
    pub u: WeightedField,
    pub v: WeightedField,
    derivatives: [Vec<f64>; 4],
}

impl DeltaU {
    pub fn zeros(grid: &StripGrid) -> Self {
        let z = vec![0.0; grid.len()];
        Self {
            u: WeightedField::zeros(*grid, 0.0),
            v: WeightedField::zeros(*grid, 0.0),
            derivatives: [z.clone(), z.clone(), z.clone(), z],
        }
    }

    pub fn from_solution(sol: &FirstOrderSolution) -> Self {
        Self { u: sol.u.clone(), v: sol.v.clone(), derivatives: sol.strip_derivatives() }
    }

    /// Perturbation from node values; derivatives by second-order differences.
    pub fn from_fields(u: WeightedField, v: WeightedField) -> Result<Self> {
        let g = *u.grid();
        if *v.grid() != g {
            return Err(Error::InvalidParameter("u and v live on different grids".into()));
        }
        let d = |f: &WeightedField| {
            let vals = f.values();
            let mut dt = vec![0.0; g.len()];
            let mut col = vec![0.0; g.n_t];
            for j in 0..g.n_theta {
                for i in 0..g.n_t {
                    col[i] = vals[g.index(i, j)];
                }
                for (i, x) in diff1(&col, g.h_t()).into_iter().enumerate() {
                    dt[g.index(i, j)] = x;
                }
            }
            let mut dth = Vec::with_capacity(g.len());
            for i in 0..g.n_t {
                dth.extend(diff1(&vals[g.index(i, 0)..g.index(i, 0) + g.n_theta], g.h_theta()));
            }
            (dt, dth)
        };
        let (ut, uth) = d(&u);
        let (vt, vth) = d(&v);
        Ok(Self { u, v, derivatives: [ut, uth, vt, vth] })
    }

    pub fn grid(&self) -> &StripGrid {
        self.u.grid()
    }

    /// `||(u, v)||_{W^{1,q}_(0)}`.
    pub fn norm(&self, q: f64) -> f64 {
        (self.u.sobolev_norm(1, q).powf(q) + self.v.sobolev_norm(1, q).powf(q)).powf(1.0 / q)
    }

    pub fn distance(&self, other: &Self, q: f64) -> f64 {
        let g = *self.grid();
        let sub = |a: &WeightedField, b: &WeightedField| {
            WeightedField::new(g, 0.0, a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect()).unwrap()
        };
        let du = sub(&self.u, &other.u);
        let dv = sub(&self.v, &other.v);
        (du.sobolev_norm(1, q).powf(q) + dv.sobolev_norm(1, q).powf(q)).powf(1.0 / q)
    }
}

/// Data `(F, g0, g1)` of the linearised problem at `(delta, psi)`; `g1` is divided by `alpha`
/// to match the boundary vector `(1, beta/alpha)`. The background residuals, zero in exact
/// arithmetic, are dropped so that the unperturbed data vanish identically.
pub fn assemble_rhs(problem: &ShockProblem, delta: &DeltaU, psi: &ShockFront) -> Result<LinearData> {
    let g = problem.grid;
    if *delta.grid() != g {
        return Err(Error::InvalidParameter("perturbation lives on a different grid".into()));
    }
    let params = &problem.case.params;
    let tan0 = problem.tan0();
    let [ut, uth, vt, vth] = &delta.derivatives;
    let (du, dv) = (delta.u.values(), delta.v.values());
    let mut f1 = vec![0.0; g.len()];
    let mut f2 = vec![0.0; g.len()];
    for i in 0..g.n_t {
        let r = g.t(i).exp();
        for j in 0..g.n_theta {
            let k = g.index(i, j);
            let th = g.theta(j);
            let (c, s) = (th.cos(), th.sin());
            let (xi, eta) = (r * c, r * s);
            let (dpsi, dpsi_dot) = psi.deviation_at(eta)?;
            let x = xi + dpsi;
            let y_minus_eta = problem.cone.offset(x) + tan0 * dpsi;
            let y = eta + y_minus_eta;
            let dphi = problem.cone.delta_slope(x);
            let det = 1.0 + tan0 * dpsi_dot;
            if det.abs() < FOLD_GUARD {
                return Err(Error::Fold(det));
            }
            let [u0, v0, u0th, v0th] = problem.u0[j];
            let (u, v) = (u0 + du[k], v0 + dv[k]);
            let c2 = params.sound_speed_sq(u.hypot(v))?;
            let c02 = params.sound_speed_sq(u0.hypot(v0))?;
            // r-weighted derivatives of the full field U = U0 + delta U.
            let (u_t, u_th) = (ut[k], u0th + uth[k]);
            let (v_t, v_th) = (vt[k], v0th + vth[k]);
            let uxi = c * u_t - s * u_th;
            let ueta = s * u_t + c * u_th;
            let vxi = c * v_t - s * v_th;
            let veta = s * v_t + c * v_th;
            let d1u = uxi + tan0 * ueta;
            let d1v = vxi + tan0 * veta;
            let d2u = -dpsi_dot * uxi + ueta;
            let d2v = -dpsi_dot * vxi + veta;
            let a = a_matrix(u, v, c2);
            let b = b_matrix(u, v, c2);
            let geometric = r * y_minus_eta / (eta * y) * v;
            let along_cone = dphi / det * (a[0][0] * d2u + a[0][1] * d2v);
            let along_shock = dpsi_dot / det * (b[0][0] * d1u + b[0][1] * d1v);
            let quasi = (u0 * u0 / c02 - u * u / c2) * uxi
                + (u0 * v0 / c02 - u * v / c2) * vxi
                + (u0 * v0 / c02 - u * v / c2) * ueta
                + (v0 * v0 / c02 - v * v / c2) * veta;
            f1[k] = (geometric + along_cone + along_shock + quasi) / r;
            f2[k] = (dphi / det * d2v - dpsi_dot / det * d1u) / r;
        }
    }
    let u_cone = problem.u0[0][0];
    let (c0, s0) = (g.omega0.cos(), g.omega0.sin());
    let mut g0 = Vec::with_capacity(g.n_t);
    let mut g1 = Vec::with_capacity(g.n_t);
    let top = g.n_theta - 1;
    for i in 0..g.n_t {
        let r = g.t(i).exp();
        let (x, _) = map_to_physical(r * c0, r * s0, psi, &problem.cone)?;
        g0.push(u_cone * problem.cone.delta_slope(x));
        let down = problem.shock_state(delta, i)?;
        let (up, _) = problem.upstream_at(psi, i)?;
        let jump = assemble_g(&down, &up, params.gamma).value - problem.g_background;
        let lin = problem.alpha * delta.u.get(i, top) + problem.beta * delta.v.get(i, top);
        g1.push((lin - jump) / problem.alpha);
    }
    LinearData::new(WeightedField::new(g, 1.0, f1)?, WeightedField::new(g, 1.0, f2)?, g0, g1)
}

#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub delta: DeltaU,
    pub solution: Option<FirstOrderSolution>,
    pub iterations: usize,
    pub rate: Option<f64>,
    pub history: Vec<f64>,
    /// Largest contraction rate reported by the variable-coefficient solves.
    pub linear_rate: Option<f64>,
}

/// Fixed point of `delta U -> solve_perturbed(coefficients(psi), assemble_rhs(delta U, psi))`.
pub fn inner_solve_j(problem: &ShockProblem, psi: &ShockFront, start: Option<&DeltaU>) -> Result<InnerSolve> {
    let opts = problem.options();
    let case = &problem.case;
    let coeffs = problem.coefficients(psi)?;
    let mut current = start.cloned().unwrap_or_else(|| DeltaU::zeros(&problem.grid));
    let mut history: Vec<f64> = Vec::new();
    let mut rate: Option<f64> = None;
    let mut linear_rate: Option<f64> = None;
    for it in 1..=case.max_inner {
        let data = assemble_rhs(problem, &current, psi)?;
        let sol = solve_perturbed(&coeffs, &data, &opts).map_err(|e| match e {
            Error::NonContraction { rate, iterations } => {
                Error::InnerDivergence(format!("linear solve stalled at rate {rate:.3} after {iterations} steps"))
            }
            other => other,
        })?;
        if let Some(r) = sol.rate {
            linear_rate = Some(linear_rate.map_or(r, |m: f64| m.max(r)));
        }
        let next = DeltaU::from_solution(&sol.solution);
        let d = next.distance(&current, case.q);
        if let Some(&prev) = history.last() {
            if prev > 1e-13 {
                let r = d / prev;
                rate = Some(rate.map_or(r, |m: f64| m.max(r)));
                if r >= opts.rate_limit {
                    return Err(Error::InnerDivergence(format!("rate {r:.3} at iteration {it}")));
                }
            }
        }
        history.push(d);
        current = next;
        if d < case.tol_inner {
            return Ok(InnerSolve {
                delta: current,
                solution: Some(sol.solution),
                iterations: it,
                rate,
                history,
                linear_rate,
            });
        }
    }
    Err(Error::InnerDivergence(format!(
        "no convergence in {} iterations (last difference {:e})",
        case.max_inner,
        history.last().copied().unwrap_or(f64::NAN)
    )))
}

/// `psi_dot_* = -[v](1 - tan(omega0) cot(omega1)) / ([u] + phi'(psi(eta)) [v])` on the shock nodes.
pub fn update_shock_js(problem: &ShockProblem, psi: &ShockFront, delta: &DeltaU) -> Result<ShockFront> {
    let g = problem.grid;
    let k = 1.0 - problem.tan0() * problem.cot1();
    let mut slopes = Vec::with_capacity(g.n_t);
    for i in 0..g.n_t {
        let down = problem.shock_state(delta, i)?;
        let (up, (x, _)) = problem.upstream_at(psi, i)?;
        let (ju, jv) = (down.u - up.u, down.v - up.v);
        let den = ju + problem.cone.phi_prime(x) * jv;
        if den.abs() < 1e-12 {
            return Err(Error::ShockDegeneracy(den));
        }
        slopes.push(-jv * k / den);
    }
    ShockFront::from_slopes(&g, &slopes)
}

/// Jump residuals `(G(U; U^-), [v] + (dx/dy)[u])` along the shock.
pub fn shock_residuals(problem: &ShockProblem, psi: &ShockFront, delta: &DeltaU) -> Result<Vec<(f64, f64)>> {
    let g = problem.grid;
    let tan0 = problem.tan0();
    (0..g.n_t)
        .map(|i| {
            let down = problem.shock_state(delta, i)?;
            let (up, (x, _)) = problem.upstream_at(psi, i)?;
            let p = psi.psi_dot[i];
            let dy = 1.0 + problem.cone.delta_slope(x) * p + tan0 * psi.delta_dot()[i];
            let jump = assemble_g(&down, &up, problem.case.params.gamma).value;
            Ok((jump, (down.v - up.v) + p / dy * (down.u - up.u)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionReport {
    /// Successive difference ratios.
    pub rates: Vec<f64>,
    /// `(d_last / d_first)^(1/(n-1))`.
    pub geometric_rate: Option<f64>,
    pub max_rate: Option<f64>,
    pub contracting: bool,
}

/// Rates of a sequence of successive differences; ratios below the noise floor are skipped.
pub fn contraction_diagnostics(history: &[f64]) -> ContractionReport {
    let floor = 1e-13;
    let mut rates = Vec::new();
    for w in history.windows(2) {
        if w[0] > floor {
            rates.push(w[1] / w[0]);
        }
    }
    let usable: Vec<f64> = history.iter().copied().take_while(|d| *d > floor).collect();
    let geometric_rate = (usable.len() >= 2)
        .then(|| (usable[usable.len() - 1] / usable[0]).powf(1.0 / (usable.len() - 1) as f64));
    let max_rate = rates.iter().copied().reduce(f64::max);
    ContractionReport { contracting: rates.iter().all(|r| *r < 1.0), rates, geometric_rate, max_rate }
}

/// State of the outer iteration.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub psi: ShockFront,
    pub delta: DeltaU,
    /// `||psi_dot_{k+1} - psi_dot_k||_{Gamma_1}` per outer pass.
    pub outer_history: Vec<f64>,
    pub inner_histories: Vec<Vec<f64>>,
    pub inner_rates: Vec<Option<f64>>,
    pub linear_rates: Vec<Option<f64>>,
    pub delta_norm: f64,
    pub psi_norm: f64,
    /// Largest residual of the last linear solve.
    pub linear_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveChecks {
    pub inner_contraction: bool,
    pub outer_contraction: bool,
    pub rankine_hugoniot: bool,
    pub map_consistent: bool,
    pub tail_decay: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub gamma: f64,
    pub nu: f64,
    pub b: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub grid: [f64; 4],
    pub outer_iterations: usize,
    pub inner_iterations: Vec<usize>,
    pub outer_history: Vec<f64>,
    pub inner: ContractionReport,
    pub outer: ContractionReport,
    pub inner_rate: Option<f64>,
    pub outer_rate: Option<f64>,
    pub linear_rate: Option<f64>,
    pub delta_u_norm: f64,
    pub psi_dot_norm: f64,
    pub m: Option<f64>,
    pub m_s: Option<f64>,
    pub max_psi_dot_deviation: f64,
    pub tail_max_psi_dot_deviation: f64,
    pub rh_res1_max: f64,
    pub rh_res2_max: f64,
    pub jacobian_det_min: f64,
    pub jacobian_det_max: f64,
    pub map_roundtrip_error: f64,
    pub linear_residual: f64,
    pub checks: SolveChecks,
    pub tol_rh: f64,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn passed(&self) -> bool {
        let c = &self.checks;
        c.inner_contraction && c.outer_contraction && c.rankine_hugoniot && c.map_consistent
    }
}

/// Converged free-boundary solution.
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub problem: ShockProblem,
    pub state: IterationState,
    pub residuals: Vec<(f64, f64)>,
    pub report: SolveReport,
}

pub const TOL_RH: f64 = 1e-5;

fn outer_loop(problem: &ShockProblem) -> Result<IterationState> {
    let case = &problem.case;
    let g = problem.grid;
    let mut psi = if case.seed == 0.0 {
        ShockFront::straight(&g)
    } else {
        let dev = (0..g.n_t).map(|i| case.seed * (-0.5 * (g.t(i) - 1.0).powi(2)).exp()).collect();
        ShockFront::from_deviation(&g, dev)?
    };
    let mut delta: Option<DeltaU> = None;
    let mut outer_history: Vec<f64> = Vec::new();
    let mut inner_histories = Vec::new();
    let mut inner_rates = Vec::new();
    let mut linear_rates = Vec::new();
    let mut rate: Option<f64> = None;
    for k in 1..=case.max_outer {
        let inner = inner_solve_j(problem, &psi, delta.as_ref())?;
        let next = update_shock_js(problem, &psi, &inner.delta)?;
        let diffs: Vec<f64> = next.psi_dot.iter().zip(&psi.psi_dot).map(|(a, b)| a - b).collect();
        let d = gamma1_norm(&diffs, g.h_t(), case.q);
        if let Some(&prev) = outer_history.last() {
            if prev > 1e-13 {
                let r = d / prev;
                rate = Some(rate.map_or(r, |m: f64| m.max(r)));
                if r >= case.solver.rate_limit {
                    return Err(Error::OuterDivergence(format!("rate {r:.3} at pass {k}")));
                }
            }
        }
        outer_history.push(d);
        inner_histories.push(inner.history);
        inner_rates.push(inner.rate);
        linear_rates.push(inner.linear_rate);
        let linear_residual = inner.solution.as_ref().map_or(0.0, |s| s.diagnostics.max_residual());
        psi = next;
        delta = Some(inner.delta);
        if d < case.tol_outer {
            let delta = delta.unwrap();
            return Ok(IterationState {
                delta_norm: delta.norm(case.q),
                psi_norm: psi.norm(case.q),
                psi,
                delta,
                outer_history,
                inner_histories,
                inner_rates,
                linear_rates,
                linear_residual,
            });
        }
    }
    Err(Error::OuterDivergence(format!(
        "no convergence in {} passes (last difference {:e})",
        case.max_outer,
        outer_history.last().copied().unwrap_or(f64::NAN)
    )))
}

/// Runs the free-boundary iteration for `case`.
pub fn solve_case(case: &ShockCase) -> Result<SolutionBundle> {
    let problem = ShockProblem::new(case)?;
    let state = outer_loop(&problem)?;
    let g = problem.grid;
    let residuals = shock_residuals(&problem, &state.psi, &state.delta)?;
    let rh1 = residuals.iter().fold(0.0, |m: f64, r| m.max(r.0.abs()));
    let rh2 = residuals.iter().fold(0.0, |m: f64, r| m.max(r.1.abs()));

    let (mut det_min, mut det_max, mut roundtrip) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64);
    for i in 0..g.n_t {
        let r = g.t(i).exp();
        for j in 0..g.n_theta {
            let th = g.theta(j);
            let (xi, eta) = (r * th.cos(), r * th.sin());
            let jac = jacobians(xi, eta, &state.psi, &problem.cone)?;
            det_min = det_min.min(jac.det);
            det_max = det_max.max(jac.det);
            let (x, y) = map_to_physical(xi, eta, &state.psi, &problem.cone)?;
            let (a, b) = map_inverse(x, y, &state.psi, &problem.cone)?;
            roundtrip = roundtrip.max((a - xi).abs().max((b - eta).abs()) / r);
        }
    }

    let dev = state.psi.delta_dot();
    let max_dev = dev.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let eta_last = state.psi.eta_grid[g.n_t - 1];
    let tail = state
        .psi
        .eta_grid
        .iter()
        .zip(dev)
        .filter(|(e, _)| **e >= 0.1 * eta_last)
        .fold(0.0, |m: f64, (_, v)| m.max(v.abs()));

    let all_inner: Vec<f64> = state.inner_histories.iter().flatten().copied().collect();
    let inner_rate = state.inner_rates.iter().flatten().copied().reduce(f64::max);
    let inner_report = {
        let longest = state.inner_histories.iter().max_by_key(|h| h.len()).unwrap_or(&all_inner);
        let mut rep = contraction_diagnostics(longest);
        rep.max_rate = inner_rate;
        rep.contracting = inner_rate.map_or(true, |r| r < 1.0);
        rep
    };
    let outer_report = contraction_diagnostics(&state.outer_history);
    let outer_rate = outer_report.max_rate;
    let eps = case.epsilon;
    let bg = &problem.background;
    let report = SolveReport {
        gamma: case.params.gamma,
        nu: case.params.nu,
        b: case.b,
        epsilon: eps,
        tau: bg.tau,
        kappa: bg.kappa,
        omega0: g.omega0,
        omega1: g.omega1,
        alpha: problem.alpha,
        beta: problem.beta,
        grid: [g.t_min, g.t_max, g.n_t as f64, g.n_theta as f64],
        outer_iterations: state.outer_history.len(),
        inner_iterations: state.inner_histories.iter().map(|h| h.len()).collect(),
        outer_history: state.outer_history.clone(),
        inner: inner_report.clone(),
        outer: outer_report.clone(),
        inner_rate,
        outer_rate,
        linear_rate: state.linear_rates.iter().flatten().copied().reduce(f64::max),
        delta_u_norm: state.delta_norm,
        psi_dot_norm: state.psi_norm,
        m: (eps > 0.0).then(|| state.delta_norm / eps),
        m_s: (eps > 0.0).then(|| state.psi_norm / eps),
        max_psi_dot_deviation: max_dev,
        tail_max_psi_dot_deviation: tail,
        rh_res1_max: rh1,
        rh_res2_max: rh2,
        jacobian_det_min: det_min,
        jacobian_det_max: det_max,
        map_roundtrip_error: roundtrip,
        linear_residual: state.linear_residual,
        checks: SolveChecks {
            inner_contraction: inner_report.contracting,
            outer_contraction: outer_report.contracting,
            rankine_hugoniot: rh1 < TOL_RH && rh2 < TOL_RH,
            map_consistent: roundtrip < 1e-10,
            tail_decay: max_dev == 0.0 || tail * 2.0 <= max_dev,
        },
        tol_rh: TOL_RH,
    };
    Ok(SolutionBundle { problem, state, residuals, report })
}

impl SolutionBundle {
    /// `xi,eta,x,y,u,v,rho,mach` at every grid node.
    pub fn flowfield_csv(&self) -> Result<String> {
        let p = &self.problem;
        let g = p.grid;
        let mut csv = Csv::new(&["xi", "eta", "x", "y", "u", "v", "rho", "mach"]);
        for i in 0..g.n_t {
            let r = g.t(i).exp();
            for j in 0..g.n_theta {
                let th = g.theta(j);
                let (xi, eta) = (r * th.cos(), r * th.sin());
                let (x, y) = map_to_physical(xi, eta, &self.state.psi, &p.cone)?;
                let (u0, v0) = p.background_velocity(j);
                let st = p.case.params.state(u0 + self.state.delta.u.get(i, j), v0 + self.state.delta.v.get(i, j))?;
                let mach = st.mach(p.case.params.gamma)?;
                csv.row(&[xi, eta, x, y, st.u, st.v, st.rho, mach]);
            }
        }
        Ok(csv.finish())
    }

    /// `eta,psi,psi_dot,rh_res1,rh_res2` on the shock nodes.
    pub fn shock_csv(&self) -> String {
        let s = &self.state.psi;
        let mut csv = Csv::new(&["eta", "psi", "psi_dot", "rh_res1", "rh_res2"]);
        for i in 0..s.eta_grid.len() {
            csv.row(&[s.eta_grid[i], s.psi[i], s.psi_dot[i], self.residuals[i].0, self.residuals[i].1]);
        }
        csv.finish()
    }
}
