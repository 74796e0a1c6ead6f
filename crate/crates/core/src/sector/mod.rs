//! Linear elliptic solvers on the sector `omega0 < theta < omega1`.
//!
//! Every solve maps the sector to the strip `t = ln r`, substitutes `w = e^{-t} phi` so the
//! weighted problem becomes a plain periodic one on a padded window, transforms in `t` and
//! solves one complex tridiagonal system per frequency.

mod mode;
mod perturbed;
pub(crate) mod spectral;
mod strip;
pub mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weighted::{trace_norm, StripGrid, WeightedField};

pub use mode::{
    dirichlet_symbol, hartman_wintner_gap, mode_symbol, solve_mode, substituted_symbol, ModeProblem,
    DEFAULT_CONDITION_CAP,
};
pub use perturbed::{perturbation_size, solve_perturbed, Coefficients, Mat2, PerturbedSolution};
pub use strip::{solve_dirichlet_laplace, solve_first_order, solve_neumann_singular, FirstOrderSolution, ScalarSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Largest accepted tridiagonal condition estimate.
    pub cond_cap: f64,
    /// Largest accepted ratio of data at the window ends to its peak.
    pub decay_tol: f64,
    /// Integrability exponent of the reported norms.
    pub q: f64,
    /// Relative size of successive fixed-point differences at which iteration stops.
    pub fixed_point_tol: f64,
    pub max_fixed_point: usize,
    /// Observed contraction rate treated as failure.
    pub rate_limit: f64,
    /// Largest perturbation size accepted by [`solve_perturbed`].
    pub contraction_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cond_cap: DEFAULT_CONDITION_CAP,
            decay_tol: 1e-8,
            q: 4.0,
            fixed_point_tol: 1e-9,
            max_fixed_point: 200,
            rate_limit: 0.95,
            contraction_threshold: 1.0,
        }
    }
}

/// Data `(F, g0, g1)` of the first-order system. `f1`, `f2` carry weight 1; the boundary
/// samples live on the grid `t` nodes with weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearData {
    pub f1: WeightedField,
    pub f2: WeightedField,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
}

impl LinearData {
    pub fn new(f1: WeightedField, f2: WeightedField, g0: Vec<f64>, g1: Vec<f64>) -> Result<Self> {
        let g = *f1.grid();
        if *f2.grid() != g {
            return Err(Error::InvalidParameter("f1 and f2 live on different grids".into()));
        }
        if f1.weight() != 1.0 || f2.weight() != 1.0 {
            return Err(Error::InvalidParameter("interior data must carry weight 1".into()));
        }
        if g0.len() != g.n_t || g1.len() != g.n_t {
            return Err(Error::InvalidParameter(format!("boundary data must have {} samples", g.n_t)));
        }
        Ok(Self { f1, f2, g0, g1 })
    }

    pub fn zeros(grid: &StripGrid) -> Self {
        Self {
            f1: WeightedField::zeros(*grid, 1.0),
            f2: WeightedField::zeros(*grid, 1.0),
            g0: vec![0.0; grid.n_t],
            g1: vec![0.0; grid.n_t],
        }
    }

    pub fn grid(&self) -> &StripGrid {
        self.f1.grid()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect::<Vec<_>>();
        let g = *self.grid();
        Self {
            f1: WeightedField::new(g, 1.0, lin(self.f1.values(), other.f1.values())).unwrap(),
            f2: WeightedField::new(g, 1.0, lin(self.f2.values(), other.f2.values())).unwrap(),
            g0: lin(&self.g0, &other.g0),
            g1: lin(&self.g1, &other.g1),
        }
    }

    /// `||F||_{W^{0,q}_{(1)}} + sum_j ||g_j||`.
    pub fn norm(&self, q: f64) -> f64 {
        let g = self.grid();
        let f = (self.f1.sobolev_norm(0, q).powf(q) + self.f2.sobolev_norm(0, q).powf(q)).powf(1.0 / q);
        f + trace_norm(&self.g0, g.t_min, g.h_t(), 0.0, q) + trace_norm(&self.g1, g.t_min, g.h_t(), 0.0, q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveDiagnostics {
    pub residual_interior: f64,
    pub residual_bc0: f64,
    pub residual_bc1: f64,
    pub stability_ratio: f64,
    pub modes_solved: usize,
    pub rate: Option<f64>,
}

impl SolveDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_interior.max(self.residual_bc0).max(self.residual_bc1)
    }
}

/// Ratio of the largest data sample on the first or last `t` node to the largest overall.
pub(crate) fn end_ratio(fields: &[&[f64]], lines: &[&[f64]], grid: &StripGrid) -> f64 {
    let mut peak: f64 = 0.0;
    let mut ends: f64 = 0.0;
    for f in fields {
        for i in 0..grid.n_t {
            for j in 0..grid.n_theta {
                let v = f[grid.index(i, j)].abs();
                peak = peak.max(v);
                if i == 0 || i + 1 == grid.n_t {
                    ends = ends.max(v);
                }
            }
        }
    }
    for l in lines {
        for (i, v) in l.iter().enumerate() {
            peak = peak.max(v.abs());
            if i == 0 || i + 1 == l.len() {
                ends = ends.max(v.abs());
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        ends / peak
    }
}

pub(crate) fn check_decay(fields: &[&[f64]], lines: &[&[f64]], grid: &StripGrid, limit: f64) -> Result<()> {
    let ratio = end_ratio(fields, lines, grid);
    if ratio > limit {
        return Err(Error::Truncation { ratio, limit });
    }
    Ok(())
}
