//! The jump functional `G(U; U^-) = [rho u][u] + [rho v][v]` and its linearisation.

use crate::background::SelfSimilarSolution;
use crate::error::{Error, Result};
use crate::gas::FlowState;

/// Smallest accepted `|alpha|`.
pub const ALPHA_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpValue {
    pub value: f64,
    pub du: f64,
    pub dv: f64,
    pub du_minus: f64,
    pub dv_minus: f64,
}

/// `G` and its derivatives, using `(d_u, d_v) rho = -rho^{2-gamma} (u, v)` on both sides.
pub fn assemble_g(down: &FlowState, up: &FlowState, gamma: f64) -> JumpValue {
    let (u, v, rho) = (down.u, down.v, down.rho);
    let (um, vm, rhom) = (up.u, up.v, up.rho);
    let ju = u - um;
    let jv = v - vm;
    let jmu = rho * u - rhom * um;
    let jmv = rho * v - rhom * vm;
    let p = rho.powf(2.0 - gamma);
    let pm = rhom.powf(2.0 - gamma);
    JumpValue {
        value: jmu * ju + jmv * jv,
        du: jmu + (rho - u * u * p) * ju - u * v * p * jv,
        dv: -u * v * p * ju + jmv + (rho - v * v * p) * jv,
        du_minus: -jmu - (rhom - um * um * pm) * ju + um * vm * pm * jv,
        dv_minus: um * vm * pm * ju - jmv - (rhom - vm * vm * pm) * jv,
    }
}

/// `(alpha, beta) = (d_u G, d_v G)` at the background shock state against the uniform stream.
pub fn alpha_beta(background: &SelfSimilarSolution) -> Result<(f64, f64)> {
    let g = assemble_g(&background.shock_state(), &background.params.upstream(), background.params.gamma);
    if g.du.abs() < ALPHA_GUARD {
        return Err(Error::DegenerateBoundary(g.du));
    }
    Ok((g.du, g.dv))
}
