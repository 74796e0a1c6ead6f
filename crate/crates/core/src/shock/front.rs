//! The shock front `x = psi(eta)` and the map fixing it to the ray `theta = omega1`.

use super::descriptors::ConeBoundary;
use crate::error::{Error, Result};
use crate::sector::Mat2;
use crate::weighted::{gamma1_norm, StripGrid};

/// Smallest accepted `|det|` of the coordinate map.
pub const FOLD_GUARD: f64 = 1e-8;

/// Samples of `psi` on the shock nodes `eta_i = e^{t_i} sin(omega1)`.
///
/// `psi_dot` is piecewise linear in `eta` between nodes and ramps linearly from `cot(omega1)`
/// at `eta = 0`; `psi` is its exact integral, so `psi(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockFront {
    pub omega0: f64,
    pub omega1: f64,
    pub eta_grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_dot: Vec<f64>,
    /// `psi_dot - cot(omega1)`.
    delta_dot: Vec<f64>,
    /// `psi - eta cot(omega1)`.
    delta: Vec<f64>,
    h_t: f64,
}

impl ShockFront {
    /// The straight front `psi = eta cot(omega1)`.
    pub fn straight(grid: &StripGrid) -> Self {
        Self::from_deviation(grid, vec![0.0; grid.n_t]).expect("straight front is valid")
    }

    /// Front with slopes `cot(omega1) + delta_dot`.
    pub fn from_deviation(grid: &StripGrid, delta_dot: Vec<f64>) -> Result<Self> {
        if delta_dot.len() != grid.n_t {
            return Err(Error::InvalidParameter(format!("shock front needs {} slopes", grid.n_t)));
        }
        let cot = 1.0 / grid.omega1.tan();
        let s1 = grid.omega1.sin();
        let eta_grid: Vec<f64> = (0..grid.n_t).map(|i| grid.t(i).exp() * s1).collect();
        let mut delta = vec![0.0; grid.n_t];
        delta[0] = 0.5 * eta_grid[0] * delta_dot[0];
        for i in 1..grid.n_t {
            delta[i] = delta[i - 1] + 0.5 * (eta_grid[i] - eta_grid[i - 1]) * (delta_dot[i] + delta_dot[i - 1]);
        }
        let psi_dot: Vec<f64> = delta_dot.iter().map(|d| cot + d).collect();
        if let Some(p) = psi_dot.iter().find(|p| !(**p > 0.0)) {
            return Err(Error::ShockDegeneracy(*p));
        }
        let psi = eta_grid.iter().zip(&delta).map(|(e, d)| e * cot + d).collect();
        Ok(Self {
            omega0: grid.omega0,
            omega1: grid.omega1,
            eta_grid,
            psi,
            psi_dot,
            delta_dot,
            delta,
            h_t: grid.h_t(),
        })
    }

    /// Front with slopes `psi_dot`.
    pub fn from_slopes(grid: &StripGrid, psi_dot: &[f64]) -> Result<Self> {
        let cot = 1.0 / grid.omega1.tan();
        Self::from_deviation(grid, psi_dot.iter().map(|p| p - cot).collect())
    }

    pub fn cot1(&self) -> f64 {
        1.0 / self.omega1.tan()
    }

    pub fn delta_dot(&self) -> &[f64] {
        &self.delta_dot
    }

    /// `||psi_dot - cot(omega1)||_{Gamma_1}`.
    pub fn norm(&self, q: f64) -> f64 {
        gamma1_norm(&self.delta_dot, self.h_t, q)
    }

    fn locate(&self, eta: f64) -> Option<usize> {
        let n = self.eta_grid.len();
        if eta <= self.eta_grid[0] {
            return None;
        }
        let s = (eta / self.eta_grid[0]).ln() / self.h_t;
        Some((s.floor() as usize).min(n - 2))
    }

    /// `(psi(eta) - eta cot(omega1), psi_dot(eta) - cot(omega1))`.
    pub fn deviation_at(&self, eta: f64) -> Result<(f64, f64)> {
        if eta < 0.0 {
            return Err(Error::Domain(format!("eta = {eta} is negative")));
        }
        let n = self.eta_grid.len();
        let Some(mut i) = self.locate(eta) else {
            let e0 = self.eta_grid[0];
            let d0 = self.delta_dot[0];
            return Ok((0.5 * d0 * eta * eta / e0, d0 * eta / e0));
        };
        if eta > self.eta_grid[n - 1] {
            let dd = self.delta_dot[n - 1];
            return Ok((self.delta[n - 1] + dd * (eta - self.eta_grid[n - 1]), dd));
        }
        // Guard the floor against rounding at a node.
        while i > 0 && eta < self.eta_grid[i] {
            i -= 1;
        }
        while i + 2 < n && eta > self.eta_grid[i + 1] {
            i += 1;
        }
        let (e0, e1) = (self.eta_grid[i], self.eta_grid[i + 1]);
        let x = eta - e0;
        let k = (self.delta_dot[i + 1] - self.delta_dot[i]) / (e1 - e0);
        Ok((self.delta[i] + self.delta_dot[i] * x + 0.5 * k * x * x, self.delta_dot[i] + k * x))
    }

    pub fn psi_at(&self, eta: f64) -> Result<f64> {
        Ok(eta * self.cot1() + self.deviation_at(eta)?.0)
    }

    pub fn psi_dot_at(&self, eta: f64) -> Result<f64> {
        Ok(self.cot1() + self.deviation_at(eta)?.1)
    }
}

/// Physical point of the fixed-domain point `(xi, eta)`:
/// `x = xi - eta cot(omega1) + psi(eta)`, `y = eta - xi tan(omega0) + phi(x)`.
pub fn map_to_physical(xi: f64, eta: f64, psi: &ShockFront, cone: &ConeBoundary) -> Result<(f64, f64)> {
    let (dpsi, _) = psi.deviation_at(eta)?;
    let x = xi + dpsi;
    // y - eta = (phi(x) - x tan w0) + tan w0 (psi(eta) - eta cot w1), free of cancellation.
    let y = eta + cone.offset(x) + psi.omega0.tan() * dpsi;
    Ok((x, y))
}

/// Inverse of [`map_to_physical`] by Newton iteration on `eta`.
pub fn map_inverse(x: f64, y: f64, psi: &ShockFront, cone: &ConeBoundary) -> Result<(f64, f64)> {
    let tan0 = psi.omega0.tan();
    let target = y - cone.offset(x);
    let mut eta = target.max(0.0);
    for _ in 0..60 {
        let (d, dd) = psi.deviation_at(eta)?;
        let h = eta + tan0 * d - target;
        let det = 1.0 + tan0 * dd;
        if det.abs() < FOLD_GUARD {
            return Err(Error::Fold(det));
        }
        let step = h / det;
        eta = (eta - step).max(0.0);
        if step.abs() <= 1e-15 * eta.abs().max(1e-300) {
            break;
        }
    }
    let (d, _) = psi.deviation_at(eta)?;
    Ok((x - d, eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobians {
    /// `d(x, y)/d(xi, eta)`.
    pub forward: Mat2,
    /// `d(xi, eta)/d(x, y)`.
    pub inverse: Mat2,
    pub det: f64,
}

pub fn jacobians(xi: f64, eta: f64, psi: &ShockFront, cone: &ConeBoundary) -> Result<Jacobians> {
    let (x, _) = map_to_physical(xi, eta, psi, cone)?;
    let dpsi = psi.deviation_at(eta)?.1;
    let tan0 = psi.omega0.tan();
    let dphi = cone.delta_slope(x);
    let phi1 = tan0 + dphi;
    let det = 1.0 + tan0 * dpsi;
    if det.abs() < FOLD_GUARD {
        return Err(Error::Fold(det));
    }
    let forward = [[1.0, dpsi], [dphi, 1.0 + phi1 * dpsi]];
    let inverse = [[(1.0 + phi1 * dpsi) / det, -dpsi / det], [-dphi / det, 1.0 / det]];
    Ok(Jacobians { forward, inverse, det })
}
