//! Variable-coefficient first-order systems, solved as a fixed point around the base operator.

use super::strip::{first_order, FirstOrderSolution};
use super::{LinearData, SolverOptions};
use crate::error::{Error, Result};
use crate::weighted::{diff1, StripGrid, WeightedField};

pub type Mat2 = [[f64; 2]; 2];

const ZERO: Mat2 = [[0.0; 2]; 2];

/// Coefficients of `A U_x + B U_y + C U = F`, `alpha_j . U = g_j`, sampled at grid nodes
/// (row-major) and on the rays. `c` holds `r C`, the weight-1 representative.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub grid: StripGrid,
    pub a: Vec<Mat2>,
    pub b: Vec<Mat2>,
    pub c: Vec<Mat2>,
    pub alpha0: Vec<[f64; 2]>,
    pub alpha1: Vec<[f64; 2]>,
}

impl Coefficients {
    pub fn base(grid: &StripGrid) -> Self {
        let g = *grid;
        let mut c = vec![ZERO; g.len()];
        for i in 0..g.n_t {
            for j in 0..g.n_theta {
                c[g.index(i, j)] = Self::base_c(g.theta(j));
            }
        }
        Self {
            grid: g,
            a: vec![Self::base_a(); g.len()],
            b: vec![Self::base_b(); g.len()],
            c,
            alpha0: vec![Self::base_alpha0(&g); g.n_t],
            alpha1: vec![Self::base_alpha1(&g); g.n_t],
        }
    }

    pub fn base_a() -> Mat2 {
        [[1.0, 0.0], [0.0, 1.0]]
    }

    pub fn base_b() -> Mat2 {
        [[0.0, 1.0], [-1.0, 0.0]]
    }

    /// `r C_hat` at angle `theta`.
    pub fn base_c(theta: f64) -> Mat2 {
        [[0.0, 1.0 / theta.sin()], [0.0, 0.0]]
    }

    pub fn base_alpha0(g: &StripGrid) -> [f64; 2] {
        [-g.omega0.tan(), 1.0]
    }

    pub fn base_alpha1(g: &StripGrid) -> [f64; 2] {
        [1.0, -1.0 / g.omega1.tan()]
    }

    /// Base coefficients with `A = I + delta I`.
    pub fn shifted_a(grid: &StripGrid, delta: f64) -> Self {
        let mut c = Self::base(grid);
        for m in &mut c.a {
            m[0][0] += delta;
            m[1][1] += delta;
        }
        c
    }

    fn deltas(&self) -> (Vec<Mat2>, Vec<Mat2>, Vec<Mat2>) {
        let g = &self.grid;
        let mut da = vec![ZERO; g.len()];
        let mut db = vec![ZERO; g.len()];
        let mut dc = vec![ZERO; g.len()];
        let (a0, b0) = (Self::base_a(), Self::base_b());
        for i in 0..g.n_t {
            for j in 0..g.n_theta {
                let k = g.index(i, j);
                let c0 = Self::base_c(g.theta(j));
                for r in 0..2 {
                    for s in 0..2 {
                        da[k][r][s] = self.a[k][r][s] - a0[r][s];
                        db[k][r][s] = self.b[k][r][s] - b0[r][s];
                        dc[k][r][s] = self.c[k][r][s] - c0[r][s];
                    }
                }
            }
        }
        (da, db, dc)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if self.a.len() != g.len() || self.b.len() != g.len() || self.c.len() != g.len() {
            return Err(Error::InvalidParameter("coefficient fields do not match the grid".into()));
        }
        if self.alpha0.len() != g.n_t || self.alpha1.len() != g.n_t {
            return Err(Error::InvalidParameter("boundary coefficients do not match the grid".into()));
        }
        Ok(())
    }
}

fn sup(m: &[Mat2]) -> f64 {
    m.iter().flatten().flatten().fold(0.0, |a, v| a.max(v.abs()))
}

fn c1_ray(alpha: &[[f64; 2]], base: [f64; 2], h: f64) -> f64 {
    (0..2)
        .map(|r| {
            let d: Vec<f64> = alpha.iter().map(|a| a[r] - base[r]).collect();
            let s = d.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            s + diff1(&d, h).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

/// `max(sup|A - A_hat|, sup|B - B_hat|) + sup|r (C - C_hat)| + sum_j |alpha_j - alpha_hat_j|_{C^1}`.
pub fn perturbation_size(coeffs: &Coefficients) -> f64 {
    let (da, db, dc) = coeffs.deltas();
    let g = &coeffs.grid;
    sup(&da).max(sup(&db))
        + sup(&dc)
        + c1_ray(&coeffs.alpha0, Coefficients::base_alpha0(g), g.h_t())
        + c1_ray(&coeffs.alpha1, Coefficients::base_alpha1(g), g.h_t())
}

#[derive(Debug, Clone)]
pub struct PerturbedSolution {
    pub solution: FirstOrderSolution,
    pub iterations: usize,
    /// Largest observed ratio of successive differences, if at least two were measured.
    pub rate: Option<f64>,
    pub perturbation: f64,
    /// Successive relative differences.
    pub history: Vec<f64>,
}

fn mul(m: &Mat2, x: [f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

/// `(T - T_hat) U` as weight-1 interior data and boundary corrections.
fn correction(
    deltas: &(Vec<Mat2>, Vec<Mat2>, Vec<Mat2>),
    coeffs: &Coefficients,
    sol: &FirstOrderSolution,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = coeffs.grid;
    let (da, db, dc) = deltas;
    let [ut, uth, vt, vth] = sol.strip_derivatives();
    let mut f1 = vec![0.0; g.len()];
    let mut f2 = vec![0.0; g.len()];
    for i in 0..g.n_t {
        let r = g.t(i).exp();
        for j in 0..g.n_theta {
            let k = g.index(i, j);
            let (c, s) = (g.theta(j).cos(), g.theta(j).sin());
            let dx = [c * ut[k] - s * uth[k], c * vt[k] - s * vth[k]];
            let dy = [s * ut[k] + c * uth[k], s * vt[k] + c * vth[k]];
            let uv = [sol.u.values()[k], sol.v.values()[k]];
            let p = mul(&da[k], dx);
            let q = mul(&db[k], dy);
            let w = mul(&dc[k], uv);
            f1[k] = (p[0] + q[0] + w[0]) / r;
            f2[k] = (p[1] + q[1] + w[1]) / r;
        }
    }
    let top = g.n_theta - 1;
    let b0 = Coefficients::base_alpha0(&g);
    let b1 = Coefficients::base_alpha1(&g);
    let g0 = (0..g.n_t)
        .map(|i| {
            let a = coeffs.alpha0[i];
            (a[0] - b0[0]) * sol.u.get(i, 0) + (a[1] - b0[1]) * sol.v.get(i, 0)
        })
        .collect();
    let g1 = (0..g.n_t)
        .map(|i| {
            let a = coeffs.alpha1[i];
            (a[0] - b1[0]) * sol.u.get(i, top) + (a[1] - b1[1]) * sol.v.get(i, top)
        })
        .collect();
    (f1, f2, g0, g1)
}

fn difference_norm(a: &FirstOrderSolution, b: &FirstOrderSolution, q: f64) -> f64 {
    let g = *a.grid();
    let du: Vec<f64> = a.u.values().iter().zip(b.u.values()).map(|(x, y)| x - y).collect();
    let dv: Vec<f64> = a.v.values().iter().zip(b.v.values()).map(|(x, y)| x - y).collect();
    let du = WeightedField::new(g, 0.0, du).unwrap().sobolev_norm(1, q);
    let dv = WeightedField::new(g, 0.0, dv).unwrap().sobolev_norm(1, q);
    (du.powf(q) + dv.powf(q)).powf(1.0 / q)
}

/// Fixed point `U^{n+1} = solve_first_order(data - (T - T_hat) U^n)`.
pub fn solve_perturbed(coeffs: &Coefficients, data: &LinearData, opts: &SolverOptions) -> Result<PerturbedSolution> {
    coeffs.validate()?;
    if coeffs.grid != *data.grid() {
        return Err(Error::InvalidParameter("coefficients and data live on different grids".into()));
    }
    let size = perturbation_size(coeffs);
    if size > opts.contraction_threshold {
        return Err(Error::PerturbationTooLarge { size, threshold: opts.contraction_threshold });
    }
    let mut current = first_order(data, opts, true)?;
    if size == 0.0 {
        return Ok(PerturbedSolution { solution: current, iterations: 1, rate: None, perturbation: 0.0, history: vec![] });
    }
    let g = coeffs.grid;
    let deltas = coeffs.deltas();
    let mut history: Vec<f64> = Vec::new();
    let mut rate: Option<f64> = None;
    let mut last_corr = None;
    for it in 2..=opts.max_fixed_point {
        let (f1, f2, g0, g1) = correction(&deltas, coeffs, &current);
        let next_data = LinearData {
            f1: WeightedField::new(g, 1.0, data.f1.values().iter().zip(&f1).map(|(a, b)| a - b).collect())?,
            f2: WeightedField::new(g, 1.0, data.f2.values().iter().zip(&f2).map(|(a, b)| a - b).collect())?,
            g0: data.g0.iter().zip(&g0).map(|(a, b)| a - b).collect(),
            g1: data.g1.iter().zip(&g1).map(|(a, b)| a - b).collect(),
        };
        let next = first_order(&next_data, opts, false)?;
        let scale = next.norm(opts.q).max(f64::MIN_POSITIVE);
        let d = difference_norm(&next, &current, opts.q) / scale;
        if let Some(&prev) = history.last() {
            if prev > 1e3 * f64::EPSILON {
                let r = d / prev;
                rate = Some(rate.map_or(r, |m: f64| m.max(r)));
                if r >= opts.rate_limit {
                    return Err(Error::NonContraction { rate: r, iterations: it });
                }
            }
        }
        history.push(d);
        last_corr = Some((f1, f2, g0, g1));
        current = next;
        if d < opts.fixed_point_tol {
            break;
        }
        if it == opts.max_fixed_point {
            return Err(Error::NonContraction { rate: rate.unwrap_or(f64::NAN), iterations: it });
        }
    }
    // Residual of the perturbed system: the base residual plus the lag in the correction.
    if let Some((f1, f2, g0, g1)) = last_corr {
        let (nf1, nf2, ng0, ng1) = correction(&deltas, coeffs, &current);
        let dscale = data
            .f1
            .weighted_values()
            .iter()
            .chain(&data.f2.weighted_values())
            .chain(&data.g0)
            .chain(&data.g1)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let lag = |a: &[f64], b: &[f64], weighted: bool| {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(k, (x, y))| {
                    let w = if weighted { g.t(k / g.n_theta).exp() } else { 1.0 };
                    (x - y).abs() * w
                })
                .fold(0.0, f64::max)
                / dscale
        };
        let d = &mut current.diagnostics;
        d.residual_interior += lag(&f1, &nf1, true).max(lag(&f2, &nf2, true));
        d.residual_bc0 += lag(&g0, &ng0, false);
        d.residual_bc1 += lag(&g1, &ng1, false);
    }
    current.diagnostics.rate = rate;
    Ok(PerturbedSolution { iterations: history.len() + 1, solution: current, rate, perturbation: size, history })
}
