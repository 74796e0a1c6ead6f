//! Free-boundary iteration for the perturbed cone.
//!
//! The unknown shock `x = psi(y)` is fixed to the ray `theta = omega1` by
//! `x = xi - eta cot(omega1) + psi(eta)`, `y = eta - xi tan(omega0) + phi(x)`, which also
//! straightens the cone `y = phi(x)` to `theta = omega0`. On the fixed sector the velocity
//! perturbation `delta U = U - U0` solves a linear system around the conical background whose
//! data carry all nonlinear terms; the shock slope is then updated from the jump conditions.
//! Both maps are iterated to a fixed point.

mod descriptors;
mod driver;
mod front;
mod jump;

pub use descriptors::{ConeBoundary, LogBump, UpstreamBump, UpstreamField};
pub use driver::{
    assemble_rhs, contraction_diagnostics, inner_solve_j, shock_residuals, solve_case, update_shock_js,
    Admissibility, ContractionReport, DeltaU, InnerSolve, IterationState, ShockCase, ShockProblem, SolutionBundle,
    SolveChecks, SolveReport, TOL_RH,
};
pub use front::{jacobians, map_inverse, map_to_physical, Jacobians, ShockFront, FOLD_GUARD};
pub use jump::{alpha_beta, assemble_g, JumpValue, ALPHA_GUARD};
