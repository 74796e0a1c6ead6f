//! Self-similar conical flow between the straight shock and the cone.
//!
//! In the similarity variable `sigma = x/y = cot(theta)` the potential equations reduce to
//!
//! ```text
//! du/dsigma = -v/D,   dv/dsigma = sigma v/D,
//! D = (1 - u^2/c^2) + 2 u v sigma/c^2 + (1 - v^2/c^2) sigma^2,
//! ```
//!
//! integrated from the post-shock state at `sigma = tau` until the slip condition
//! `u = sigma v` fixes the cone cotangent `kappa`.

use crate::error::{Error, Result};
use crate::gas::{FlowState, GasParameters};
use crate::polar::{self, DEFAULT_NU_CAP};
use crate::table::Csv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundOptions {
    pub steps: usize,
    pub event_tol: f64,
    pub degeneracy_eps: f64,
    pub nu_cap: f64,
}

impl Default for BackgroundOptions {
    fn default() -> Self {
        Self { steps: 2000, event_tol: 1e-12, degeneracy_eps: 1e-10, nu_cap: DEFAULT_NU_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarSolution {
    pub params: GasParameters,
    pub b: f64,
    pub tau: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub sigma: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    du: Vec<f64>,
    dv: Vec<f64>,
    degeneracy_eps: f64,
}

/// `(du/dsigma, dv/dsigma)` of the conical profile.
pub fn background_rhs(sigma: f64, u: f64, v: f64, params: &GasParameters, eps_d: f64) -> Result<(f64, f64)> {
    let c2 = params.sound_speed_sq(u.hypot(v))?;
    let d = (1.0 - u * u / c2) + 2.0 * u * v * sigma / c2 + (1.0 - v * v / c2) * sigma * sigma;
    if !(d > eps_d) {
        return Err(Error::Degeneracy { sigma, d });
    }
    Ok((-v / d, sigma * v / d))
}

fn rk4_step(s: f64, y: (f64, f64), h: f64, p: &GasParameters, eps: f64) -> Result<(f64, f64)> {
    let k1 = background_rhs(s, y.0, y.1, p, eps)?;
    let k2 = background_rhs(s + 0.5 * h, y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1, p, eps)?;
    let k3 = background_rhs(s + 0.5 * h, y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1, p, eps)?;
    let k4 = background_rhs(s + h, y.0 + h * k3.0, y.1 + h * k3.1, p, eps)?;
    Ok((
        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// Integrates the profile for flow slope `b` behind the shock.
pub fn solve_background(params: &GasParameters, b: f64, opts: &BackgroundOptions) -> Result<SelfSimilarSolution> {
    if opts.steps == 0 {
        return Err(Error::InvalidParameter("step count must be positive".into()));
    }
    let tau = polar::solve_tau(params.nu, params.gamma, b, opts.nu_cap)?;
    let post = polar::post_shock_state(tau, b, params.rho_inf)?;
    let m = post.mach(params.gamma)?;
    if m >= 1.0 {
        return Err(Error::Domain(format!("post-shock Mach number {m} is not subsonic")));
    }
    let eps = opts.degeneracy_eps;
    let end = 1.0 / b;
    let h = (end - tau) / opts.steps as f64;
    let slip = |s: f64, y: (f64, f64)| y.0 - s * y.1;

    let mut sigma = vec![tau];
    let mut u0 = vec![post.u];
    let mut v0 = vec![post.v];
    let mut y = (post.u, post.v);
    for n in 0..opts.steps {
        let s = tau + n as f64 * h;
        let next = rk4_step(s, y, h, params, eps)?;
        if slip(s + h, next) <= 0.0 {
            // The restarted step of length `ds` is the dense output on this interval.
            let (mut a, mut c) = (0.0, h);
            while c - a > opts.event_tol {
                let mid = 0.5 * (a + c);
                let ym = rk4_step(s, y, mid, params, eps)?;
                if slip(s + mid, ym) > 0.0 {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            let ds = 0.5 * (a + c);
            let ye = rk4_step(s, y, ds, params, eps)?;
            let kappa = s + ds;
            if ds < 1e-6 * h && sigma.len() > 1 {
                sigma.pop();
                u0.pop();
                v0.pop();
            }
            sigma.push(kappa);
            u0.push(ye.0);
            v0.push(ye.1);
            return SelfSimilarSolution::assemble(*params, b, tau, kappa, sigma, u0, v0, eps);
        }
        y = next;
        sigma.push(s + h);
        u0.push(y.0);
        v0.push(y.1);
    }
    Err(Error::NoCone(end))
}

/// Shoots on `b` so that the cone half-angle equals `omega0`.
pub fn solve_background_for_cone(
    params: &GasParameters,
    omega0: f64,
    opts: &BackgroundOptions,
) -> Result<SelfSimilarSolution> {
    if !(omega0 > 0.0 && omega0 < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("cone angle {omega0} outside (0, pi/2)")));
    }
    let angle = |b: f64| solve_background(params, b, opts).map(|s| s.omega0);
    let mut lo = 1e-3;
    let mut hi = 1e3;
    while angle(hi).is_err() {
        hi = (lo * hi).sqrt().max(hi * 0.5);
        if hi <= lo * 1.000001 {
            return Err(Error::RootNotFound("no admissible flow slope".into()));
        }
    }
    while angle(lo).is_err() {
        lo *= 2.0;
        if lo >= hi {
            return Err(Error::RootNotFound("no admissible flow slope".into()));
        }
    }
    let (alo, ahi) = (angle(lo)?, angle(hi)?);
    if !(alo <= omega0 && omega0 <= ahi) {
        return Err(Error::RootNotFound(format!(
            "cone angle {omega0} not in the attainable range [{alo}, {ahi}]"
        )));
    }
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if angle(mid)? < omega0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve_background(params, 0.5 * (lo + hi), opts)
}

impl SelfSimilarSolution {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        params: GasParameters,
        b: f64,
        tau: f64,
        kappa: f64,
        sigma: Vec<f64>,
        u0: Vec<f64>,
        v0: Vec<f64>,
        eps: f64,
    ) -> Result<Self> {
        let mut du = Vec::with_capacity(sigma.len());
        let mut dv = Vec::with_capacity(sigma.len());
        for i in 0..sigma.len() {
            let (a, c) = background_rhs(sigma[i], u0[i], v0[i], &params, eps)?;
            du.push(a);
            dv.push(c);
        }
        limit_slopes(&sigma, &u0, &mut du);
        limit_slopes(&sigma, &v0, &mut dv);
        Ok(Self {
            params,
            b,
            tau,
            kappa,
            omega0: (1.0 / kappa).atan(),
            omega1: (1.0 / tau).atan(),
            sigma,
            u0,
            v0,
            du,
            dv,
            degeneracy_eps: eps,
        })
    }

    /// Velocity at `sigma` in `[tau, kappa]` by monotone cubic Hermite interpolation.
    pub fn velocity_at_sigma(&self, s: f64) -> Result<(f64, f64)> {
        let n = self.sigma.len();
        let tol = 1e-14 * self.kappa.max(1.0);
        if s < self.tau - tol || s > self.kappa + tol {
            return Err(Error::OutOfRange { theta: s, lo: self.tau, hi: self.kappa });
        }
        let s = s.clamp(self.tau, self.kappa);
        let i = match self.sigma.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => return Ok((self.u0[i], self.v0[i])),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.sigma[i + 1] - self.sigma[i];
        let x = (s - self.sigma[i]) / h;
        let herm = |y: &[f64], d: &[f64]| {
            let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
            let h10 = x * (1.0 - x) * (1.0 - x);
            let h01 = x * x * (3.0 - 2.0 * x);
            let h11 = x * x * (x - 1.0);
            h00 * y[i] + h10 * h * d[i] + h01 * y[i + 1] + h11 * h * d[i + 1]
        };
        Ok((herm(&self.u0, &self.du), herm(&self.v0, &self.dv)))
    }

    /// Background state at polar angle `theta` in `[omega0, omega1]`.
    pub fn state_at_theta(&self, theta: f64) -> Result<FlowState> {
        background_at_theta(self, theta)
    }

    /// `(du0/dtheta, dv0/dtheta)` from the ODE right-hand side at the interpolated state.
    pub fn derivative_at_theta(&self, theta: f64) -> Result<(f64, f64)> {
        let st = self.state_at_theta(theta)?;
        let s = theta.sin();
        let sigma = 1.0 / theta.tan();
        let (a, c) = background_rhs(sigma, st.u, st.v, &self.params, self.degeneracy_eps)?;
        Ok((-a / (s * s), -c / (s * s)))
    }

    pub fn shock_state(&self) -> FlowState {
        let u = self.u0[0];
        let v = self.v0[0];
        FlowState { u, v, rho: self.params.density(u.hypot(v)).unwrap_or(f64::NAN) }
    }

    pub fn cone_state(&self) -> FlowState {
        let n = self.u0.len() - 1;
        let (u, v) = (self.u0[n], self.v0[n]);
        FlowState { u, v, rho: self.params.density(u.hypot(v)).unwrap_or(f64::NAN) }
    }

    pub fn speed(&self) -> Vec<f64> {
        self.u0.iter().zip(&self.v0).map(|(u, v)| u.hypot(*v)).collect()
    }

    pub fn mach(&self) -> Vec<f64> {
        self.speed()
            .iter()
            .map(|&q| q / self.params.sound_speed_sq(q).map(f64::sqrt).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Fritsch-Carlson limiter; inactive on smooth monotone data with exact slopes.
fn limit_slopes(x: &[f64], y: &[f64], d: &mut [f64]) {
    for i in 0..x.len().saturating_sub(1) {
        let delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if delta == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        if a < 0.0 {
            d[i] = 0.0;
        }
        if b < 0.0 {
            d[i + 1] = 0.0;
        }
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            d[i] = t * a * delta;
            d[i + 1] = t * b * delta;
        }
    }
}

pub fn background_at_theta(sol: &SelfSimilarSolution, theta: f64) -> Result<FlowState> {
    let tol = 1e-13;
    if theta < sol.omega0 - tol || theta > sol.omega1 + tol {
        return Err(Error::OutOfRange { theta, lo: sol.omega0, hi: sol.omega1 });
    }
    if theta >= sol.omega1 {
        return Ok(sol.shock_state());
    }
    if theta <= sol.omega0 {
        return Ok(sol.cone_state());
    }
    let (u, v) = sol.velocity_at_sigma(1.0 / theta.tan())?;
    Ok(FlowState { u, v, rho: sol.params.density(u.hypot(v))? })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BackgroundReport {
    pub slip_residual: f64,
    pub kappa_in_range: bool,
    pub u0_decreasing: bool,
    pub v0_increasing: bool,
    pub q0_nonincreasing: bool,
    pub mach_nonincreasing: bool,
    pub max_mach: f64,
    pub slope_bound: bool,
    pub v0_max_bound: bool,
    pub pass: bool,
}

/// Checks the monotonicity and bound properties of an accepted profile.
pub fn verify_background(sol: &SelfSimilarSolution) -> BackgroundReport {
    let n = sol.sigma.len();
    let strict = |y: &[f64], sign: f64| y.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0);
    let weak = |y: &[f64]| y.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14));
    let q = sol.speed();
    let m = sol.mach();
    let slip_residual = (sol.u0[n - 1] - sol.kappa * sol.v0[n - 1]).abs();
    let kappa_in_range = sol.tau < sol.kappa && sol.kappa < 1.0 / sol.b;
    let max_mach = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slope_bound = sol.b < sol.v0[n - 1] / sol.u0[n - 1];
    let v0_max_bound = sol.v0[n - 1] < sol.u0[0] * sol.omega0.tan();
    let u0_decreasing = strict(&sol.u0, -1.0);
    let v0_increasing = strict(&sol.v0, 1.0);
    let q0_nonincreasing = weak(&q);
    let mach_nonincreasing = weak(&m);
    let pass = slip_residual < 1e-10
        && kappa_in_range
        && u0_decreasing
        && v0_increasing
        && q0_nonincreasing
        && mach_nonincreasing
        && max_mach < 1.0
        && slope_bound
        && v0_max_bound;
    BackgroundReport {
        slip_residual,
        kappa_in_range,
        u0_decreasing,
        v0_increasing,
        q0_nonincreasing,
        mach_nonincreasing,
        max_mach,
        slope_bound,
        v0_max_bound,
        pass,
    }
}

/// Profile table followed by a one-line summary block.
pub fn profile_csv(sol: &SelfSimilarSolution) -> String {
    let mut csv = Csv::new(&["sigma", "theta", "u0", "v0", "rho0", "q0", "M0"]);
    let q = sol.speed();
    let m = sol.mach();
    for i in 0..sol.sigma.len() {
        let rho = sol.params.density(q[i]).unwrap_or(f64::NAN);
        csv.row(&[sol.sigma[i], (1.0 / sol.sigma[i]).atan(), sol.u0[i], sol.v0[i], rho, q[i], m[i]]);
    }
    let mut text = csv.finish();
    let mut summary = Csv::new(&["tau", "kappa", "omega0", "omega1"]);
    summary.row(&[sol.tau, sol.kappa, sol.omega0, sol.omega1]);
    text.push_str(&summary.finish());
    text
}
