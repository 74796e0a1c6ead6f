//! Straight attached shock behind which the flow is turned to slope `b = v/u`.
//!
//! With `tau = cot(omega1)` the jump conditions across the shock line `x = tau*y` give the
//! post-shock velocity in closed form; Bernoulli then closes the problem in the single
//! scalar equation `F(tau, nu) = 0`. The transonic branch is the root that tends to zero
//! with `nu`.

use crate::error::{Error, Result};
use crate::gas::{FlowState, GasParameters};
use crate::table::Csv;

pub const DEFAULT_NU_CAP: f64 = 0.05;
const TAU_FLOOR: f64 = 1e-16;
const SCAN_POINTS: usize = 4000;
const BISECT_TOL: f64 = 1e-13;

/// Straight-shock configuration on the transonic branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub b: f64,
    pub tau: f64,
    pub nu: f64,
    pub post: FlowState,
    pub omega1: f64,
}

/// All sign changes of `F` found in the search bracket, smallest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarRoots {
    pub roots: Vec<f64>,
    pub bracket: (f64, f64),
}

fn inner_bracket(tau: f64, b: f64) -> f64 {
    1.0 + 2.0 * tau / b - tau * tau
}

/// The polar function `F(tau, nu)`; its zero locates the shock for flow slope `b`.
pub fn polar_f(tau: f64, nu: f64, gamma: f64, b: f64) -> Result<f64> {
    Ok(polar_f_and_derivative(tau, nu, gamma, b)?.0)
}

/// `F` together with `dF/dtau`.
pub fn polar_f_and_derivative(tau: f64, nu: f64, gamma: f64, b: f64) -> Result<(f64, f64)> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("flow slope b must be positive, got {b}")));
    }
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (1, 2], got {gamma}")));
    }
    if nu < 0.0 {
        return Err(Error::InvalidParameter(format!("nu must be nonnegative, got {nu}")));
    }
    let n = inner_bracket(tau, b);
    if n <= 0.0 || b * tau >= 1.0 || tau <= -b {
        return Err(Error::Domain(format!("tau = {tau} outside the polar domain for b = {b}")));
    }
    let e = 1.0 / (gamma - 1.0);
    let s = 1.0 + tau / b;
    let dn = s * s;
    let q = 0.5 * (gamma - 1.0) * n / dn + nu;
    let p = (b + tau) / (1.0 - b * tau);
    let dp = (1.0 + b * b) / ((1.0 - b * tau) * (1.0 - b * tau));
    let dq = 0.5 * (gamma - 1.0) * ((2.0 / b - 2.0 * tau) * dn - n * 2.0 * s / b) / (dn * dn);
    let scale = nu.powf(e);
    let qe = q.powf(-e);
    let f = tau - p * qe * scale;
    let df = 1.0 - scale * (dp * qe - p * e * qe / q * dq);
    Ok((f, df))
}

/// Upper end of the root bracket: `min(0.99/b, tau_cap)`.
pub fn tau_bracket_top(b: f64) -> f64 {
    let cap = 1.0 / b + (1.0 / (b * b) + 1.0).sqrt();
    (0.99 / b).min(cap * (1.0 - 1e-12))
}

/// Scans `F` on a logarithmic grid of the bracket and refines every sign change.
pub fn polar_roots(nu: f64, gamma: f64, b: f64) -> Result<PolarRoots> {
    let lo = TAU_FLOOR;
    let hi = tau_bracket_top(b);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut roots = Vec::new();
    let mut prev_t = lo;
    let mut prev_f = polar_f(lo, nu, gamma, b)?;
    for i in 1..=SCAN_POINTS {
        let t = if i == SCAN_POINTS { hi } else { (llo + (lhi - llo) * i as f64 / SCAN_POINTS as f64).exp() };
        let f = polar_f(t, nu, gamma, b)?;
        if prev_f == 0.0 {
            roots.push(prev_t);
        } else if prev_f.signum() != f.signum() && f != 0.0 {
            roots.push(refine_root(prev_t, t, prev_f, nu, gamma, b)?);
        }
        prev_t = t;
        prev_f = f;
    }
    Ok(PolarRoots { roots, bracket: (lo, hi) })
}

fn refine_root(mut a: f64, mut c: f64, mut fa: f64, nu: f64, gamma: f64, b: f64) -> Result<f64> {
    while c - a > BISECT_TOL {
        let m = 0.5 * (a + c);
        if m <= a || m >= c {
            break;
        }
        let fm = polar_f(m, nu, gamma, b)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            c = m;
        }
    }
    let mut t = 0.5 * (a + c);
    for _ in 0..3 {
        let (f, df) = polar_f_and_derivative(t, nu, gamma, b)?;
        if df == 0.0 {
            break;
        }
        let next = t - f / df;
        if next > 0.0 && (next - t).abs() <= 4.0 * (c - a).max(BISECT_TOL) {
            t = next;
        }
    }
    Ok(t)
}

/// Shock cotangent on the transonic branch: the smallest positive root of `F(., nu)`.
pub fn solve_tau(nu: f64, gamma: f64, b: f64, nu_cap: f64) -> Result<f64> {
    if !(0.0..=nu_cap).contains(&nu) {
        return Err(Error::InvalidParameter(format!("nu = {nu} outside [0, {nu_cap}]")));
    }
    if nu == 0.0 {
        polar_f(0.0, 0.0, gamma, b)?;
        return Ok(0.0);
    }
    let found = polar_roots(nu, gamma, b)?;
    let first = *found.roots.first().ok_or_else(|| {
        Error::RootNotFound(format!("no sign change of F in [{:e}, {}]", found.bracket.0, found.bracket.1))
    })?;
    if let Some(&second) = found.roots.get(1) {
        // Two roots closer than the scan resolution cannot be told apart reliably.
        let cell = (found.bracket.1 / found.bracket.0).ln() / SCAN_POINTS as f64;
        if (second / first).ln() < 2.0 * cell {
            return Err(Error::AmbiguousRoot(format!(
                "roots {first:e} and {second:e} are not separated; all roots: {:?}",
                found.roots
            )));
        }
    }
    let f = polar_f(first, nu, gamma, b)?;
    if f.abs() >= 1e-13 {
        return Err(Error::RootNotFound(format!("refined root {first:e} leaves |F| = {:e}", f.abs())));
    }
    Ok(first)
}

/// `u = tau/(b+tau)`, `v = b u`, `rho = rho_inf (b+tau)/(tau (1 - b tau))`.
pub fn post_shock_state(tau: f64, b: f64, rho_inf: f64) -> Result<FlowState> {
    if !(tau > 0.0) || b * tau >= 1.0 {
        return Err(Error::Domain(format!("post-shock state needs 0 < tau and b*tau < 1 (tau = {tau}, b = {b})")));
    }
    let u = tau / (b + tau);
    Ok(FlowState { u, v: b * u, rho: rho_inf * (b + tau) / (tau * (1.0 - b * tau)) })
}

pub fn polar_point(params: &GasParameters, b: f64, nu_cap: f64) -> Result<PolarPoint> {
    let tau = solve_tau(params.nu, params.gamma, b, nu_cap)?;
    let post = post_shock_state(tau, b, params.rho_inf)?;
    Ok(PolarPoint { b, tau, nu: params.nu, post, omega1: (1.0 / tau).atan() })
}

/// Straight-shock jump residuals `([rho u] - tau [rho v], [v] + tau [u])`.
pub fn rh_residual(upstream: &FlowState, downstream: &FlowState, tau: f64) -> (f64, f64) {
    let (j_mu, j_mv, j_u, j_v) = jumps(upstream, downstream);
    (j_mu - tau * j_mv, j_v + tau * j_u)
}

/// Curved-shock pair `([rho u][u] + [rho v][v], [v] + s [u])` where `s = dx/dy` along the shock.
pub fn rh_residual_curved(upstream: &FlowState, downstream: &FlowState, slope: f64) -> (f64, f64) {
    let (j_mu, j_mv, j_u, j_v) = jumps(upstream, downstream);
    (j_mu * j_u + j_mv * j_v, j_v + slope * j_u)
}

fn jumps(up: &FlowState, down: &FlowState) -> (f64, f64, f64, f64) {
    (
        down.rho * down.u - up.rho * up.u,
        down.rho * down.v - up.rho * up.v,
        down.u - up.u,
        down.v - up.v,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppleRow {
    pub omega1: f64,
    pub tau: f64,
    pub post: FlowState,
    pub turning_angle: f64,
    pub mach_post: f64,
}

/// Compressive post-shock state behind a straight shock at angle `omega1` facing the
/// uniform stream `(1, 0)`.
pub fn oblique_shock(params: &GasParameters, omega1: f64) -> Result<AppleRow> {
    let (s, c) = omega1.sin_cos();
    let mu = params.nu.sqrt().asin();
    if omega1 < mu * (1.0 - 1e-12) || omega1 > std::f64::consts::FRAC_PI_2 * (1.0 + 1e-15) {
        return Err(Error::Domain(format!("shock angle {omega1} outside [{mu}, pi/2]")));
    }
    let g = params.gamma;
    let flux = params.rho_inf * s;
    let resid = |rho: f64| 0.5 * (c * c + (flux / rho).powi(2)) + rho.powf(g - 1.0) / (g - 1.0) - params.kappa_inf;
    let rho_sonic = flux.powf(2.0 / (g + 1.0)).max(params.rho_inf);
    let rho = if resid(rho_sonic) >= 0.0 {
        rho_sonic
    } else {
        let mut lo = rho_sonic;
        let mut hi = ((g - 1.0) * (params.kappa_inf - 0.5 * c * c)).powf(1.0 / (g - 1.0));
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if resid(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let w = flux / rho;
    let post = FlowState { u: c * c + w * s, v: c * (s - w), rho };
    Ok(AppleRow {
        omega1,
        tau: c / s,
        post,
        turning_angle: post.v.atan2(post.u),
        mach_post: post.mach(g)?,
    })
}

/// Samples the shock polar from the Mach angle to the normal shock, sorted by `omega1`.
pub fn emit_apple_curve(params: &GasParameters, samples: usize) -> Result<Vec<AppleRow>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let mu = params.nu.sqrt().asin();
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..samples)
        .map(|i| {
            let w = if i + 1 == samples { half_pi } else { mu + (half_pi - mu) * i as f64 / (samples - 1) as f64 };
            oblique_shock(params, w)
        })
        .collect()
}

/// Largest turning angle, by golden-section search bracketed from a coarse table.
pub fn max_turning(params: &GasParameters, coarse: usize) -> Result<AppleRow> {
    let table = emit_apple_curve(params, coarse.max(3))?;
    let k = (0..table.len())
        .max_by(|&a, &b| table[a].turning_angle.total_cmp(&table[b].turning_angle))
        .unwrap();
    let mut a = table[k.saturating_sub(1)].omega1;
    let mut d = table[(k + 1).min(table.len() - 1)].omega1;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let turn = |w: f64| oblique_shock(params, w).map(|r| r.turning_angle);
    let mut b = d - phi * (d - a);
    let mut c = a + phi * (d - a);
    let (mut fb, mut fc) = (turn(b)?, turn(c)?);
    while d - a > 1e-12 {
        if fb > fc {
            d = c;
            c = b;
            fc = fb;
            b = d - phi * (d - a);
            fb = turn(b)?;
        } else {
            a = b;
            b = c;
            fb = fc;
            c = a + phi * (d - a);
            fc = turn(c)?;
        }
    }
    oblique_shock(params, 0.5 * (a + d))
}

pub fn apple_curve_csv(rows: &[AppleRow]) -> String {
    let mut csv = Csv::new(&["omega1", "tau", "u", "v", "rho", "turning_angle", "mach_post"]);
    for r in rows {
        csv.row(&[r.omega1, r.tau, r.post.u, r.post.v, r.post.rho, r.turning_angle, r.mach_post]);
    }
    csv.finish()
}
