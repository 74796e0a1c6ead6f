//! Per-frequency boundary value problems in the angular variable.
//!
//! Separating `phi = e^{i lambda t} phi_hat(theta)` in the strip form of the axisymmetric
//! Laplacian gives `phi_hat'' + cot(theta) phi_hat' + (-lambda^2 + i lambda) phi_hat = rhs`.

use num_complex::Complex64 as C64;

use super::tridiag::{condition_estimate, Tridiag};
use crate::error::{Error, Result};

pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// `-lambda^2 + i lambda`.
pub fn mode_symbol(lambda: C64) -> C64 {
    -lambda * lambda + C64::i() * lambda
}

/// Symbol after the substitution `w = e^{-t} phi` at real frequency `mu`.
pub fn substituted_symbol(mu: f64) -> C64 {
    C64::new(2.0 - mu * mu, 3.0 * mu)
}

/// Dirichlet lift symbol `(i mu + 1)^2`.
pub fn dirichlet_symbol(mu: f64) -> C64 {
    let z = C64::new(1.0, mu);
    z * z
}

/// Gap function whose positivity excludes nontrivial homogeneous mode solutions.
pub fn hartman_wintner_gap(theta: f64, mu: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::OutOfRange { theta, lo: 0.0, hi: std::f64::consts::PI });
    }
    let s = theta.sin();
    let cot = theta.cos() / s;
    Ok(mu * mu + 1.0 / (s * s) - 0.25 * cot * cot)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeProblem {
    pub lambda: C64,
    /// Uniform angular nodes including both rays.
    pub theta: Vec<f64>,
    pub rhs_hat: Vec<C64>,
    /// Prescribed `phi_hat'` at the first and last node.
    pub bc_hat: (C64, C64),
}

/// Centered-difference operator `d^2 + cot d + s` with ghost-point Neumann rows.
/// Returns the matrix and the boundary contributions to move to the right-hand side.
pub(crate) fn neumann_operator(h: f64, cot: &[f64], s: C64) -> Tridiag {
    let n = cot.len();
    let h2 = 1.0 / (h * h);
    let mut lower = Vec::with_capacity(n - 1);
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n - 1);
    for j in 0..n {
        diag.push(C64::new(-2.0 * h2, 0.0) + s);
        if j == 0 {
            upper.push(C64::new(2.0 * h2, 0.0));
        } else if j + 1 == n {
            lower.push(C64::new(2.0 * h2, 0.0));
        } else {
            let c = cot[j] / (2.0 * h);
            lower.push(C64::new(h2 - c, 0.0));
            upper.push(C64::new(h2 + c, 0.0));
        }
    }
    Tridiag::new(lower, diag, upper)
}

/// Adds the ghost-point boundary terms of Neumann data `(g0, g1)` to `rhs`.
pub(crate) fn neumann_rhs(h: f64, cot: &[f64], rhs: &mut [C64], g0: C64, g1: C64) {
    let n = rhs.len();
    rhs[0] += g0 * (2.0 / h - cot[0]);
    rhs[n - 1] -= g1 * (2.0 / h + cot[n - 1]);
}

/// `d^2 + s` on interior nodes with homogeneous Dirichlet ends.
pub(crate) fn dirichlet_operator(h: f64, m: usize, s: C64) -> Tridiag {
    let h2 = 1.0 / (h * h);
    Tridiag::new(vec![C64::new(h2, 0.0); m - 1], vec![C64::new(-2.0 * h2, 0.0) + s; m], vec![C64::new(h2, 0.0); m - 1])
}

pub(crate) fn solve_checked(a: &Tridiag, rhs: &mut [C64], mu: f64, cap: f64) -> Result<()> {
    let cond = condition_estimate(a);
    if !(cond <= cap) {
        return Err(Error::SpectralProximity { mu, cond });
    }
    let lu = a.factor().ok_or(Error::SpectralProximity { mu, cond: f64::INFINITY })?;
    lu.solve(rhs);
    Ok(())
}

/// Solves one angular mode with Neumann data; the discrete residual is verified.
pub fn solve_mode(mode: &ModeProblem, cond_cap: f64) -> Result<Vec<C64>> {
    let n = mode.theta.len();
    if n < 3 || n != mode.rhs_hat.len() {
        return Err(Error::InvalidParameter("mode problem needs matching theta and rhs of length >= 3".into()));
    }
    if mode.theta[0] <= 0.0 || mode.theta[n - 1] >= std::f64::consts::PI {
        return Err(Error::OutOfRange { theta: mode.theta[0], lo: 0.0, hi: std::f64::consts::PI });
    }
    let h = (mode.theta[n - 1] - mode.theta[0]) / (n - 1) as f64;
    let cot: Vec<f64> = mode.theta.iter().map(|t| 1.0 / t.tan()).collect();
    let a = neumann_operator(h, &cot, mode_symbol(mode.lambda));
    let mut b = mode.rhs_hat.clone();
    neumann_rhs(h, &cot, &mut b, mode.bc_hat.0, mode.bc_hat.1);
    let mut x = b.clone();
    solve_checked(&a, &mut x, mode.lambda.re, cond_cap)?;
    let r = a.matvec(&x);
    let scale = b.iter().chain(&r).map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let res = r.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    if res > 1e-10 * scale {
        return Err(Error::SpectralProximity { mu: mode.lambda.re, cond: res / scale });
    }
    Ok(x)
}
