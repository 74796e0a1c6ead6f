use num_complex::Complex64 as C64;

use super::mode::{dirichlet_operator, dirichlet_symbol, solve_checked, solve_mode, ModeProblem};
use super::spectral::Spectral;
use super::{check_decay, LinearData, SolveDiagnostics, SolverOptions};
use crate::error::{Error, Result};
use crate::weighted::{trace_norm, StripGrid, WeightedField};

#[derive(Debug, Clone)]
pub struct ScalarSolution {
    /// The potential, weight -1.
    pub field: WeightedField,
    /// Pointwise interior residual relative to the data scale, weight 0.
    pub residual: WeightedField,
    pub diagnostics: SolveDiagnostics,
}

impl ScalarSolution {
    pub fn residual_csv(&self) -> String {
        self.residual.to_csv()
    }
}

#[derive(Debug, Clone)]
pub struct FirstOrderSolution {
    pub u: WeightedField,
    pub v: WeightedField,
    /// Relative residuals of the divergence row (at nodes) and the curl row (at the midpoint
    /// above each node), weight 0.
    pub residual: [WeightedField; 2],
    pub diagnostics: SolveDiagnostics,
    /// Spectral `t` derivatives of `u` and `v` on the window.
    pub(crate) u_t: Vec<f64>,
    pub(crate) v_t: Vec<f64>,
}

impl FirstOrderSolution {
    pub fn grid(&self) -> &StripGrid {
        self.u.grid()
    }

    /// `(u_t, u_theta, v_t, v_theta)` on the window, row-major.
    pub fn strip_derivatives(&self) -> [Vec<f64>; 4] {
        let g = *self.grid();
        [self.u_t.clone(), theta_derivative(self.u.values(), &g), self.v_t.clone(), theta_derivative(self.v.values(), &g)]
    }

    /// Joint `W^{1,q}_{(0)}` norm of `(u, v)`.
    pub fn norm(&self, q: f64) -> f64 {
        (self.u.sobolev_norm(1, q).powf(q) + self.v.sobolev_norm(1, q).powf(q)).powf(1.0 / q)
    }

    pub fn residual_csv(&self) -> String {
        let g = self.grid();
        let mut csv = crate::table::Csv::new(&["t", "theta", "residual_div", "residual_curl"]);
        for i in 0..g.n_t {
            for j in 0..g.n_theta {
                csv.row(&[g.t(i), g.theta(j), self.residual[0].get(i, j), self.residual[1].get(i, j)]);
            }
        }
        csv.finish()
    }
}

/// Second-order `theta` derivative of a row-major window field.
pub(crate) fn theta_derivative(values: &[f64], g: &StripGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for i in 0..g.n_t {
        out.extend(crate::weighted::diff1(&values[g.index(i, 0)..g.index(i, 0) + g.n_theta], g.h_theta()));
    }
    out
}

struct Core {
    /// Padded, ray-major.
    w: Vec<f64>,
    w_t: Vec<f64>,
    w_tt: Vec<f64>,
    w_theta: Vec<f64>,
    modes: usize,
}

fn thetas(g: &StripGrid) -> Vec<f64> {
    (0..g.n_theta).map(|j| g.theta(j)).collect()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn relative(res: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

/// `w'' + cot w' + w_tt + 3 w_t + 2 w = rhs`, `w' = (b0, b1)`; all data weighted, row-major.
fn neumann_core(sp: &Spectral, rhs: &[f64], b0: &[f64], b1: &[f64], cap: f64) -> Result<Core> {
    let g = sp.grid;
    let n = sp.n;
    let theta = thetas(&g);
    let rhs_hat = sp.forward(&sp.extend_field(rhs));
    let b0p = sp.extend(b0);
    let b1p = sp.extend(b1);
    let b0_hat = sp.forward(&b0p);
    let b1_hat = sp.forward(&b1p);
    let (hat, modes) = sp.dispatch(g.n_theta, |k, mu| {
        let mode = ModeProblem {
            lambda: C64::new(mu, -1.0),
            theta: theta.clone(),
            rhs_hat: (0..g.n_theta).map(|j| rhs_hat[j * n + k]).collect(),
            bc_hat: (b0_hat[k], b1_hat[k]),
        };
        solve_mode(&mode, cap)
    })?;
    let w = sp.inverse(&hat, 0);
    let h = g.h_theta();
    let mut w_theta = vec![0.0; w.len()];
    for i in 0..n {
        w_theta[i] = b0p[i];
        w_theta[(g.n_theta - 1) * n + i] = b1p[i];
        for j in 1..g.n_theta - 1 {
            w_theta[j * n + i] = (w[(j + 1) * n + i] - w[(j - 1) * n + i]) / (2.0 * h);
        }
    }
    Ok(Core { w_t: sp.inverse(&hat, 1), w_tt: sp.inverse(&hat, 2), w, w_theta, modes })
}

/// Interior and boundary residuals of the Neumann problem on the window, each relative to `scale`.
fn neumann_residual(sp: &Spectral, c: &Core, rhs: &[f64], b0: &[f64], b1: &[f64], scale: f64) -> (Vec<f64>, f64, f64, f64) {
    let g = sp.grid;
    let n = sp.n;
    let h = g.h_theta();
    let cot: Vec<f64> = thetas(&g).iter().map(|t| 1.0 / t.tan()).collect();
    let at = |a: &[f64], i: usize, j: usize| a[j * n + i];
    let mut field = vec![0.0; g.len()];
    let (mut ri, mut r0, mut r1) = (0.0f64, 0.0f64, 0.0f64);
    let last = g.n_theta - 1;
    for i in 0..g.n_t {
        let t_terms = |j: usize| at(&c.w_tt, i, j) + 3.0 * at(&c.w_t, i, j) + 2.0 * at(&c.w, i, j);
        for j in 1..last {
            let (wm, w0, wp) = (at(&c.w, i, j - 1), at(&c.w, i, j), at(&c.w, i, j + 1));
            let l = t_terms(j) + (wp - 2.0 * w0 + wm) / (h * h) + cot[j] * (wp - wm) / (2.0 * h);
            let r = relative((l - rhs[g.index(i, j)]).abs(), scale);
            field[g.index(i, j)] = r;
            ri = ri.max(r);
        }
        // Ghost values implied by the boundary rows of the equation.
        let ghost = |j: usize, inner: usize, sign: f64| {
            let w0 = at(&c.w, i, j);
            let wi = at(&c.w, i, inner);
            let rest = rhs[g.index(i, j)] - t_terms(j) - (wi - 2.0 * w0) / (h * h) - sign * cot[j] * wi / (2.0 * h);
            rest / (1.0 / (h * h) - sign * cot[j] / (2.0 * h))
        };
        let gl = ghost(0, 1, 1.0);
        r0 = r0.max(relative(((at(&c.w, i, 1) - gl) / (2.0 * h) - b0[i]).abs(), scale));
        let gr = ghost(last, last - 1, -1.0);
        r1 = r1.max(relative(((gr - at(&c.w, i, last - 1)) / (2.0 * h) - b1[i]).abs(), scale));
    }
    (field, ri, r0, r1)
}

fn validate_weighted(f: &WeightedField, name: &str) -> Result<()> {
    if f.weight() != 1.0 {
        return Err(Error::InvalidParameter(format!("{name} must carry weight 1, got {}", f.weight())));
    }
    Ok(())
}

/// Solves `phi_tt + phi_thetatheta + phi_t + cot(theta) phi_theta = e^{2t} f` on the strip with
/// `phi_theta = e^t g_j` on the two rays, i.e. the axisymmetric Neumann problem with normal
/// derivative `g_j`. The result carries weight -1.
pub fn solve_neumann_singular(f: &WeightedField, g0: &[f64], g1: &[f64], opts: &SolverOptions) -> Result<ScalarSolution> {
    validate_weighted(f, "f")?;
    let g = *f.grid();
    if g0.len() != g.n_t || g1.len() != g.n_t {
        return Err(Error::InvalidParameter(format!("boundary data must have {} samples", g.n_t)));
    }
    let rhs = f.weighted_values();
    check_decay(&[&rhs], &[g0, g1], &g, opts.decay_tol)?;
    let sp = Spectral::new(&g);
    let core = neumann_core(&sp, &rhs, g0, g1, opts.cond_cap)?;
    let scale = max_abs(&rhs).max(max_abs(g0)).max(max_abs(g1));
    let (res, ri, r0, r1) = neumann_residual(&sp, &core, &rhs, g0, g1, scale);
    let w = sp.window(&core.w, g.n_theta);
    let phi: Vec<f64> = (0..g.len()).map(|idx| w[idx] * g.t(idx / g.n_theta).exp()).collect();
    let field = WeightedField::new(g, -1.0, phi)?;
    let data = f.sobolev_norm(0, opts.q)
        + trace_norm(g0, g.t_min, g.h_t(), 0.0, opts.q)
        + trace_norm(g1, g.t_min, g.h_t(), 0.0, opts.q);
    let stability_ratio = if data > 0.0 { field.sobolev_norm(2, opts.q) / data } else { 0.0 };
    Ok(ScalarSolution {
        field,
        residual: WeightedField::new(g, 0.0, res)?,
        diagnostics: SolveDiagnostics {
            residual_interior: ri,
            residual_bc0: r0,
            residual_bc1: r1,
            stability_ratio,
            modes_solved: core.modes,
            rate: None,
        },
    })
}

/// `W_tt + 2 W_t + W + W_thetatheta = rhs` with `W = 0` on both rays. The boundary values
/// of `W_theta` use the ghost node implied by the equation on the ray.
fn dirichlet_core(sp: &Spectral, rhs: &[f64], cap: f64) -> Result<Core> {
    let g = sp.grid;
    let n = sp.n;
    let m = g.n_theta - 2;
    let h = g.h_theta();
    let padded = sp.extend_field(rhs);
    let rhs_hat = sp.forward(&padded);
    let (hat, modes) = sp.dispatch(g.n_theta, |k, mu| {
        let a = dirichlet_operator(h, m, dirichlet_symbol(mu));
        let mut x: Vec<C64> = (1..=m).map(|j| rhs_hat[j * n + k]).collect();
        solve_checked(&a, &mut x, mu, cap)?;
        let mut out = Vec::with_capacity(m + 2);
        out.push(C64::new(0.0, 0.0));
        out.extend(x);
        out.push(C64::new(0.0, 0.0));
        Ok(out)
    })?;
    let w = sp.inverse(&hat, 0);
    let last = g.n_theta - 1;
    let mut w_theta = vec![0.0; w.len()];
    for i in 0..n {
        w_theta[i] = (2.0 * w[n + i] - h * h * padded[i]) / (2.0 * h);
        w_theta[last * n + i] = (h * h * padded[last * n + i] - 2.0 * w[(last - 1) * n + i]) / (2.0 * h);
        for j in 1..last {
            w_theta[j * n + i] = (w[(j + 1) * n + i] - w[(j - 1) * n + i]) / (2.0 * h);
        }
    }
    Ok(Core { w_t: sp.inverse(&hat, 1), w_tt: sp.inverse(&hat, 2), w, w_theta, modes })
}

fn dirichlet_residual(sp: &Spectral, c: &Core, rhs: &[f64], scale: f64) -> (Vec<f64>, f64, f64, f64) {
    let g = sp.grid;
    let n = sp.n;
    let h = g.h_theta();
    let at = |a: &[f64], i: usize, j: usize| a[j * n + i];
    let mut field = vec![0.0; g.len()];
    let (mut ri, mut r0, mut r1) = (0.0f64, 0.0f64, 0.0f64);
    let last = g.n_theta - 1;
    for i in 0..g.n_t {
        for j in 1..last {
            let (wm, w0, wp) = (at(&c.w, i, j - 1), at(&c.w, i, j), at(&c.w, i, j + 1));
            let l = at(&c.w_tt, i, j) + 2.0 * at(&c.w_t, i, j) + w0 + (wp - 2.0 * w0 + wm) / (h * h);
            let r = relative((l - rhs[g.index(i, j)]).abs(), scale);
            field[g.index(i, j)] = r;
            ri = ri.max(r);
        }
        r0 = r0.max(relative(at(&c.w, i, 0).abs(), scale));
        r1 = r1.max(relative(at(&c.w, i, last).abs(), scale));
    }
    (field, ri, r0, r1)
}

/// Solves `Phi_xx + Phi_yy = f2` in the sector with `Phi = 0` on both rays; weight -1.
pub fn solve_dirichlet_laplace(f2: &WeightedField, opts: &SolverOptions) -> Result<ScalarSolution> {
    validate_weighted(f2, "f2")?;
    let g = *f2.grid();
    let rhs = f2.weighted_values();
    check_decay(&[&rhs], &[], &g, opts.decay_tol)?;
    let sp = Spectral::new(&g);
    let core = dirichlet_core(&sp, &rhs, opts.cond_cap)?;
    let (res, ri, r0, r1) = dirichlet_residual(&sp, &core, &rhs, max_abs(&rhs));
    let w = sp.window(&core.w, g.n_theta);
    let phi: Vec<f64> = (0..g.len()).map(|idx| w[idx] * g.t(idx / g.n_theta).exp()).collect();
    let field = WeightedField::new(g, -1.0, phi)?;
    let data = f2.sobolev_norm(0, opts.q);
    let stability_ratio = if data > 0.0 { field.sobolev_norm(2, opts.q) / data } else { 0.0 };
    Ok(ScalarSolution {
        field,
        residual: WeightedField::new(g, 0.0, res)?,
        diagnostics: SolveDiagnostics {
            residual_interior: ri,
            residual_bc0: r0,
            residual_bc1: r1,
            stability_ratio,
            modes_solved: core.modes,
            rate: None,
        },
    })
}

/// Solves `u_x + v_y + v/y = f1`, `v_x - u_y = f2` with `-tan(omega0) u + v = g0` on the
/// lower ray and `u - cot(omega1) v = g1` on the upper ray. `U` carries weight 0.
pub fn solve_first_order(data: &LinearData, opts: &SolverOptions) -> Result<FirstOrderSolution> {
    first_order(data, opts, true)
}

pub(crate) fn first_order(data: &LinearData, opts: &SolverOptions, decay: bool) -> Result<FirstOrderSolution> {
    let g = *data.grid();
    let ef1 = data.f1.weighted_values();
    let ef2 = data.f2.weighted_values();
    if decay {
        check_decay(&[&ef1, &ef2], &[&data.g0, &data.g1], &g, opts.decay_tol)?;
    }
    let sp = Spectral::new(&g);
    let np = sp.n;
    let nth = g.n_theta;
    let last = nth - 1;
    let h = g.h_theta();
    let theta = thetas(&g);
    let (cs, sn): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.cos(), t.sin())).unzip();
    let cot: Vec<f64> = cs.iter().zip(&sn).map(|(c, s)| c / s).collect();

    // Lift: Phi = e^t W, X = W + W_t is the radial part of grad Phi.
    let lift = dirichlet_core(&sp, &ef2, opts.cond_cap)?;
    let x: Vec<f64> = lift.w.iter().zip(&lift.w_t).map(|(a, b)| a + b).collect();
    let mut rhs = ef1.clone();
    for i in 0..g.n_t {
        for j in 0..nth {
            let k = j * np + i;
            let mut c = lift.w_theta[k];
            if j > 0 && j < last {
                c -= cot[j] * 0.25 * (x[k - np] + 2.0 * x[k] + x[k + np]);
            }
            rhs[g.index(i, j)] += c;
        }
    }
    let b0: Vec<f64> = data.g0.iter().map(|v| cs[0] * v).collect();
    let b1: Vec<f64> = data.g1.iter().map(|v| -sn[last] * v).collect();
    let pot = neumann_core(&sp, &rhs, &b0, &b1, opts.cond_cap)?;

    // Polar components at nodes: radial p_r, angular p_th.
    let mut p_r = vec![0.0; np * nth];
    let mut u = vec![0.0; np * nth];
    let mut v = vec![0.0; np * nth];
    for j in 0..nth {
        for i in 0..np {
            let k = j * np + i;
            p_r[k] = pot.w[k] + pot.w_t[k] - lift.w_theta[k];
            let p_th = pot.w_theta[k] + x[k];
            u[k] = cs[j] * p_r[k] - sn[j] * p_th;
            v[k] = sn[j] * p_r[k] + cs[j] * p_th;
        }
    }

    // Residuals on the staggered representation: p_r at nodes, the angular component at
    // midpoints, where the discrete divergence and curl of the two potentials are exact.
    let mut half = vec![0.0; np * last];
    for j in 0..last {
        for i in 0..np {
            let k = j * np + i;
            half[k] = (pot.w[k + np] - pot.w[k]) / h + 0.5 * (x[k] + x[k + np]);
        }
    }
    let p_r_t = sp.derivative(&p_r, 1);
    let half_t = sp.derivative(&half, 1);
    let scale = max_abs(&ef1).max(max_abs(&ef2)).max(max_abs(&data.g0)).max(max_abs(&data.g1));
    let mut res = [vec![0.0; g.len()], vec![0.0; g.len()]];
    let (mut ri, mut r0, mut r1) = (0.0f64, 0.0f64, 0.0f64);
    let tan0 = sn[0] / cs[0];
    for i in 0..g.n_t {
        for j in 0..last {
            let k = j * np + i;
            let curl = half_t[k] + half[k] - (p_r[k + np] - p_r[k]) / h;
            let data2 = 0.5 * (ef2[g.index(i, j)] + ef2[g.index(i, j + 1)]);
            let b = relative((curl - data2).abs(), scale);
            res[1][g.index(i, j)] = b;
            ri = ri.max(b);
            if j > 0 {
                let (hp, hm) = (half[k], half[k - np]);
                let div = 2.0 * p_r[k] + p_r_t[k] + (hp - hm) / h + cot[j] * 0.5 * (hp + hm);
                let a = relative((div - ef1[g.index(i, j)]).abs(), scale);
                res[0][g.index(i, j)] = a;
                ri = ri.max(a);
            }
        }
        r0 = r0.max(relative((-tan0 * u[i] + v[i] - data.g0[i]).abs(), scale));
        let k = last * np + i;
        r1 = r1.max(relative((u[k] - cot[last] * v[k] - data.g1[i]).abs(), scale));
    }

    let u_t = sp.derivative(&u, 1);
    let v_t = sp.derivative(&v, 1);
    let [res0, res1] = res;
    let mut sol = FirstOrderSolution {
        u: WeightedField::new(g, 0.0, sp.window(&u, nth))?,
        v: WeightedField::new(g, 0.0, sp.window(&v, nth))?,
        residual: [WeightedField::new(g, 0.0, res0)?, WeightedField::new(g, 0.0, res1)?],
        diagnostics: SolveDiagnostics {
            residual_interior: ri,
            residual_bc0: r0,
            residual_bc1: r1,
            stability_ratio: 0.0,
            modes_solved: lift.modes + pot.modes,
            rate: None,
        },
        u_t: sp.window(&u_t, nth),
        v_t: sp.window(&v_t, nth),
    };
    let dn = data.norm(opts.q);
    sol.diagnostics.stability_ratio = if dn > 0.0 { sol.norm(opts.q) / dn } else { 0.0 };
    Ok(sol)
}
