//! Log-polar strip grids and discrete weighted norms.
//!
//! A function `u` on the sector `{omega0 < theta < omega1}` is represented on the strip
//! `t = ln r`. The weighted norms are the plain norms of `e^{k t} u` on the strip, with
//! derivatives taken in `(t, theta)`, trapezoid quadrature, centered second-order differences
//! in the interior and one-sided second-order differences at the ends.

use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::table::Csv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub omega0: f64,
    pub omega1: f64,
    pub n_theta: usize,
}

impl StripGrid {
    pub fn new(t_min: f64, t_max: f64, n_t: usize, omega0: f64, omega1: f64, n_theta: usize) -> Result<Self> {
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::InvalidParameter(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        if n_t < 4 || !n_t.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("n_t must be a power of two >= 4, got {n_t}")));
        }
        if !(0.0 < omega0 && omega0 < omega1 && omega1 < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("need 0 < omega0 < omega1 < pi, got ({omega0}, {omega1})")));
        }
        if n_theta < 5 {
            return Err(Error::InvalidParameter(format!("n_theta must be at least 5, got {n_theta}")));
        }
        Ok(Self { t_min, t_max, n_t, omega0, omega1, n_theta })
    }

    /// Node spacing in `t`; nodes are `t_min + i h_t` for `i < n_t` (periodic convention).
    pub fn h_t(&self) -> f64 {
        (self.t_max - self.t_min) / self.n_t as f64
    }

    pub fn h_theta(&self) -> f64 {
        (self.omega1 - self.omega0) / (self.n_theta - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.h_t()
    }

    pub fn theta(&self, j: usize) -> f64 {
        if j + 1 == self.n_theta {
            self.omega1
        } else {
            self.omega0 + j as f64 * self.h_theta()
        }
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Doubles the resolution in both directions on the same window.
    pub fn refined(&self) -> Self {
        Self { n_t: 2 * self.n_t, n_theta: 2 * self.n_theta - 1, ..*self }
    }

    /// Doubles the window about its midpoint keeping the spacing.
    pub fn widened(&self) -> Self {
        let mid = 0.5 * (self.t_min + self.t_max);
        let half = self.t_max - self.t_min;
        Self { t_min: mid - half, t_max: mid + half, n_t: 2 * self.n_t, ..*self }
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for w in [
            self.t_min.to_bits(),
            self.t_max.to_bits(),
            self.n_t as u64,
            self.omega0.to_bits(),
            self.omega1.to_bits(),
            self.n_theta as u64,
        ] {
            h ^= w;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Cartesian image of the strip node `(t, theta)`.
pub fn to_cartesian(t: f64, theta: f64) -> (f64, f64) {
    let r = t.exp();
    (r * theta.cos(), r * theta.sin())
}

/// Inverse of [`to_cartesian`].
pub fn to_strip(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y).ln(), y.atan2(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NormKey {
    Sobolev(u8, u64),
    Holder(u8),
}

/// Samples of `u(t_i, theta_j)` with weight exponent `k`.
#[derive(Debug)]
pub struct WeightedField {
    grid: StripGrid,
    weight: f64,
    values: Vec<f64>,
    cache: Mutex<BTreeMap<(u64, NormKey), f64>>,
}

impl Clone for WeightedField {
    fn clone(&self) -> Self {
        Self::new(self.grid, self.weight, self.values.clone()).expect("valid field")
    }
}

impl PartialEq for WeightedField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.weight == other.weight && self.values == other.values
    }
}

impl WeightedField {
    pub fn new(grid: StripGrid, weight: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite samples".into()));
        }
        Ok(Self { grid, weight, values, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn zeros(grid: StripGrid, weight: f64) -> Self {
        Self::new(grid, weight, vec![0.0; grid.len()]).unwrap()
    }

    /// Samples `f(t, theta)` at every node.
    pub fn from_fn(grid: StripGrid, weight: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_t {
            let t = grid.t(i);
            for j in 0..grid.n_theta {
                values.push(f(t, grid.theta(j)));
            }
        }
        Self::new(grid, weight, values)
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access; invalidates cached norms.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.cache.get_mut().unwrap().clear();
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Column of samples on the ray `theta_j`.
    pub fn ray(&self, j: usize) -> Vec<f64> {
        (0..self.grid.n_t).map(|i| self.get(i, j)).collect()
    }

    /// Strip representative `e^{k t} u`.
    pub fn weighted_values(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut out = self.values.clone();
        for i in 0..g.n_t {
            let w = (self.weight * g.t(i)).exp();
            for j in 0..g.n_theta {
                out[g.index(i, j)] *= w;
            }
        }
        out
    }

    /// Same samples reinterpreted under a different weight.
    pub fn with_weight(&self, weight: f64) -> Self {
        Self::new(self.grid, weight, self.values.clone()).unwrap()
    }

    /// Translation by `steps` nodes in `t`, filling with zeros.
    pub fn shift_t(&self, steps: isize) -> Self {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for i in 0..g.n_t {
            let src = i as isize - steps;
            if src < 0 || src >= g.n_t as isize {
                continue;
            }
            for j in 0..g.n_theta {
                out[g.index(i, j)] = self.values[g.index(src as usize, j)];
            }
        }
        Self::new(self.grid, self.weight, out).unwrap()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sobolev_norm(&self, m: u8, q: f64) -> f64 {
        self.cached(NormKey::Sobolev(m, q.to_bits()), || sobolev_norm(self, m, q))
    }

    pub fn holder_norm(&self, m: u8) -> f64 {
        self.cached(NormKey::Holder(m), || holder_norm(self, m))
    }

    fn cached(&self, key: NormKey, f: impl FnOnce() -> f64) -> f64 {
        let k = (self.grid.fingerprint(), key);
        if let Some(v) = self.cache.lock().unwrap().get(&k) {
            return *v;
        }
        let v = f();
        self.cache.lock().unwrap().insert(k, v);
        v
    }

    /// Diagnostic dump `t,theta,value`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["t", "theta", "value"]);
        for i in 0..self.grid.n_t {
            for j in 0..self.grid.n_theta {
                csv.row(&[self.grid.t(i), self.grid.theta(j), self.get(i, j)]);
            }
        }
        csv.finish()
    }
}

/// Resamples an analytically given `f(x, y)` at the node images.
pub fn to_log_polar(
    f: impl Fn(f64, f64) -> f64,
    sector: (f64, f64),
    grid: &StripGrid,
    weight: f64,
) -> Result<WeightedField> {
    let tol = 1e-12;
    if (sector.0 - grid.omega0).abs() > tol || (sector.1 - grid.omega1).abs() > tol {
        return Err(Error::InvalidParameter(format!(
            "sector ({}, {}) does not match grid ({}, {})",
            sector.0, sector.1, grid.omega0, grid.omega1
        )));
    }
    WeightedField::from_fn(*grid, weight, |t, th| {
        let (x, y) = to_cartesian(t, th);
        f(x, y)
    })
}

/// Second-order first derivative of uniformly spaced samples.
pub fn diff1(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
    }
    d
}

/// Second-order second derivative of uniformly spaced samples.
pub fn diff2(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    if n < 4 {
        return d;
    }
    let h2 = h * h;
    d[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h2;
    d[n - 1] = (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) / h2;
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h2;
    }
    d
}

/// Applies `op` along `t` (columns) of a row-major `n_t x n_theta` array.
fn along_t(a: &[f64], g: &StripGrid, op: impl Fn(&[f64], f64) -> Vec<f64>) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    let mut col = vec![0.0; g.n_t];
    for j in 0..g.n_theta {
        for i in 0..g.n_t {
            col[i] = a[g.index(i, j)];
        }
        let d = op(&col, g.h_t());
        for i in 0..g.n_t {
            out[g.index(i, j)] = d[i];
        }
    }
    out
}

fn along_theta(a: &[f64], g: &StripGrid, op: impl Fn(&[f64], f64) -> Vec<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..g.n_t {
        out.extend(op(&a[g.index(i, 0)..g.index(i, 0) + g.n_theta], g.h_theta()));
    }
    out
}

/// All derivatives `d^alpha (e^{kt} u)` with `|alpha| <= m`, in a fixed order.
fn derivative_family(field: &WeightedField, m: u8) -> Vec<Vec<f64>> {
    let g = field.grid;
    let w = field.weighted_values();
    let mut out = Vec::new();
    if m >= 1 {
        out.push(along_t(&w, &g, diff1));
        out.push(along_theta(&w, &g, diff1));
    }
    if m >= 2 {
        out.push(along_t(&w, &g, diff2));
        out.push(along_theta(&out[0], &g, diff1));
        out.push(along_theta(&w, &g, diff2));
    }
    out.insert(0, w);
    out
}

fn trapezoid_2d(a: &[f64], g: &StripGrid, q: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..g.n_t {
        let wi = if i == 0 || i + 1 == g.n_t { 0.5 } else { 1.0 };
        for j in 0..g.n_theta {
            let wj = if j == 0 || j + 1 == g.n_theta { 0.5 } else { 1.0 };
            s += wi * wj * a[g.index(i, j)].abs().powf(q);
        }
    }
    s * g.h_t() * g.h_theta()
}

/// Discrete `W^{m,q}_{(k)}` norm.
pub fn sobolev_norm(field: &WeightedField, m: u8, q: f64) -> f64 {
    assert!(m <= 2, "sobolev_norm supports m <= 2");
    let g = field.grid;
    derivative_family(field, m).iter().map(|d| trapezoid_2d(d, &g, q)).sum::<f64>().powf(1.0 / q)
}

/// Discrete `C^m_{(k)}` norm: the largest sample of any `|d^alpha (e^{kt} u)|`, `|alpha| <= m`.
pub fn holder_norm(field: &WeightedField, m: u8) -> f64 {
    assert!(m <= 2, "holder_norm supports m <= 2");
    derivative_family(field, m).iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs()))
}

fn trapezoid_1d(a: &[f64], h: f64, q: f64) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for (i, v) in a.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        s += w * v.abs().powf(q);
    }
    s * h
}

/// `L^q` norm of `e^{kt} g(t)` on a uniform line grid starting at `t0`.
pub fn line_lq_norm(samples: &[f64], t0: f64, h: f64, k: f64, q: f64) -> f64 {
    let w: Vec<f64> = samples.iter().enumerate().map(|(i, v)| v * (k * (t0 + i as f64 * h)).exp()).collect();
    trapezoid_1d(&w, h, q).powf(1.0 / q)
}

/// Boundary trace norm realised as the full `W^{1,q}` line norm of `e^{kt} g`.
pub fn trace_norm(samples: &[f64], t0: f64, h: f64, k: f64, q: f64) -> f64 {
    let w: Vec<f64> = samples.iter().enumerate().map(|(i, v)| v * (k * (t0 + i as f64 * h)).exp()).collect();
    let d = diff1(&w, h);
    (trapezoid_1d(&w, h, q) + trapezoid_1d(&d, h, q)).powf(1.0 / q)
}

/// Trace norm of the samples of `field` on the ray `theta_j`.
pub fn ray_trace_norm(field: &WeightedField, j: usize, q: f64) -> f64 {
    let g = field.grid;
    trace_norm(&field.ray(j), g.t_min, g.h_t(), field.weight, q)
}

/// `W^{0,q}_{(0)} + C^0` norm on a ray (the shock-front norm).
pub fn gamma1_norm(samples: &[f64], h: f64, q: f64) -> f64 {
    let sup = samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    trapezoid_1d(samples, h, q).powf(1.0 / q) + sup
}

/// Ratio `||h(e^t)/e^t||_q / ||h'(e^t)||_q` with `h` rebuilt from samples of `h'` on a
/// uniform `t` grid; `h'` is taken to vanish outside the grid.
pub fn hardy_ratio(h_prime: &[f64], t0: f64, h: f64, q: f64) -> Result<f64> {
    let n = h_prime.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let den = trapezoid_1d(h_prime, h, q);
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("h' has zero norm".into()));
    }
    // d h(e^t)/dt = h'(e^t) e^t, integrated by the trapezoid rule from h = 0.
    let x: Vec<f64> = (0..n).map(|i| (t0 + i as f64 * h).exp()).collect();
    let mut acc = vec![0.0; n];
    for i in 1..n {
        acc[i] = acc[i - 1] + 0.5 * h * (h_prime[i - 1] * x[i - 1] + h_prime[i] * x[i]);
    }
    let ratio: Vec<f64> = (0..n).map(|i| acc[i] / x[i]).collect();
    // Beyond the grid h is constant, so |h/x|^q integrates in closed form.
    let tail = ratio[n - 1].abs().powf(q) / q;
    Ok(((trapezoid_1d(&ratio, h, q) + tail) / den).powf(1.0 / q))
}
