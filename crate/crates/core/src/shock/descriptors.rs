//! Analytic perturbation descriptors: the cone surface and the upstream stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weighted::{trace_norm, StripGrid, WeightedField};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Gaussian `weight * exp(-(s - center)^2 / (2 width^2))` in a logarithmic variable `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBump {
    pub center: f64,
    pub width: f64,
    pub weight: f64,
}

impl LogBump {
    pub fn new(center: f64, width: f64, weight: f64) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("bad bump (center {center}, width {width}, weight {weight})")));
        }
        Ok(Self { center, width, weight })
    }

    /// `d^m/ds^m` of the bump, `m <= 2`.
    pub fn derivative(&self, s: f64, m: u8) -> f64 {
        let z = (s - self.center) / self.width;
        let e = self.weight * (-0.5 * z * z).exp();
        match m {
            0 => e,
            1 => -z / self.width * e,
            _ => (z * z - 1.0) / (self.width * self.width) * e,
        }
    }

    /// `int_0^x bump(ln x') dx'` in closed form.
    fn primitive(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (c, s) = (self.center, self.width);
        let z = (x.ln() - c - s * s) / s;
        let cdf = 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
        self.weight * (c + 0.5 * s * s).exp() * s * SQRT_2PI * cdf
    }
}

/// Support window `[lo, hi]` in the log variable outside which every bump is negligible.
fn support(bumps: &[LogBump]) -> (f64, f64) {
    let lo = bumps.iter().map(|b| b.center - 12.0 * b.width).fold(f64::INFINITY, f64::min);
    let hi = bumps.iter().map(|b| b.center + 12.0 * b.width).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn min_width(bumps: &[LogBump]) -> f64 {
    bumps.iter().map(|b| b.width).fold(f64::INFINITY, f64::min)
}

/// The cone `y = phi(x)` with `phi'(x) = tan(omega0) + sum of bumps in ln x`, `phi(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBoundary {
    pub omega0: f64,
    pub bumps: Vec<LogBump>,
    /// Common factor applied to all bump weights.
    pub scale: f64,
}

impl ConeBoundary {
    pub fn straight(omega0: f64) -> Self {
        Self { omega0, bumps: Vec::new(), scale: 0.0 }
    }

    /// Scales `bumps` so that the combined `C^2_(0) + W^{1,q}_(0)` norm of `delta phi'` is `epsilon`.
    pub fn normalized(omega0: f64, bumps: Vec<LogBump>, epsilon: f64, q: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        let mut cone = Self { omega0, bumps, scale: 1.0 };
        if cone.bumps.is_empty() || epsilon == 0.0 {
            cone.scale = 0.0;
            return Ok(cone);
        }
        let unit = cone.norm(q);
        if !(unit > 0.0) {
            return Err(Error::InvalidParameter("cone bumps have zero norm".into()));
        }
        cone.scale = epsilon / unit;
        Ok(cone)
    }

    /// `delta phi'(x) = phi'(x) - tan(omega0)`.
    pub fn delta_slope(&self, x: f64) -> f64 {
        if x <= 0.0 || self.scale == 0.0 {
            return 0.0;
        }
        let s = x.ln();
        self.scale * self.bumps.iter().map(|b| b.derivative(s, 0)).sum::<f64>()
    }

    /// `phi(x) - x tan(omega0)`.
    pub fn offset(&self, x: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * self.bumps.iter().map(|b| b.primitive(x)).sum::<f64>()
    }

    pub fn phi(&self, x: f64) -> f64 {
        x * self.omega0.tan() + self.offset(x)
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        self.omega0.tan() + self.delta_slope(x)
    }

    pub fn phi_second(&self, x: f64) -> f64 {
        if x <= 0.0 || self.scale == 0.0 {
            return 0.0;
        }
        let s = x.ln();
        self.scale * self.bumps.iter().map(|b| b.derivative(s, 1)).sum::<f64>() / x
    }

    /// `max_m sup |d^m/dt^m delta phi'(e^t)|` over `m <= 2` plus the `W^{1,q}` line norm.
    pub fn norm(&self, q: f64) -> f64 {
        if self.bumps.is_empty() || self.scale == 0.0 {
            return 0.0;
        }
        let (lo, hi) = support(&self.bumps);
        let h = min_width(&self.bumps) / 64.0;
        let n = ((hi - lo) / h).ceil() as usize + 1;
        let mut g = vec![0.0; n];
        let mut sup: f64 = 0.0;
        for (i, gi) in g.iter_mut().enumerate() {
            let t = lo + i as f64 * h;
            for m in 0..3 {
                let d = self.scale * self.bumps.iter().map(|b| b.derivative(t, m)).sum::<f64>();
                sup = sup.max(d.abs());
                if m == 0 {
                    *gi = d;
                }
            }
        }
        sup + trace_norm(&g, lo, h, 0.0, q)
    }
}

/// One separable upstream bump: `(weight_u, weight_v) * exp(-(ln r - center)^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpstreamBump {
    pub center: f64,
    pub width: f64,
    pub weight_u: f64,
    pub weight_v: f64,
}

impl UpstreamBump {
    fn profile(&self) -> LogBump {
        LogBump { center: self.center, width: self.width, weight: 1.0 }
    }
}

/// `U^- = (1, 0) + delta U^-(x, y)` on the extended sector `omega0 - d0 < theta < omega1 + d0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpstreamField {
    pub bumps: Vec<UpstreamBump>,
    pub scale: f64,
    pub omega0: f64,
    pub omega1: f64,
    /// Angular margin `d0` of the extended sector.
    pub margin: f64,
}

impl UpstreamField {
    pub fn uniform(omega0: f64, omega1: f64, margin: f64) -> Self {
        Self { bumps: Vec::new(), scale: 0.0, omega0, omega1, margin }
    }

    /// Scales the bumps so that `||delta U^-||_{W^{1,q}_(0)} + ||d_xi delta U^-||_{C^1_(1)}` on the
    /// extended sector equals `epsilon`.
    pub fn normalized(
        omega0: f64,
        omega1: f64,
        margin: f64,
        bumps: Vec<UpstreamBump>,
        epsilon: f64,
        q: f64,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        if !(margin > 0.0) || omega0 - margin <= 0.0 || omega1 + margin >= std::f64::consts::PI {
            return Err(Error::InvalidParameter(format!("extended-domain margin {margin} is not admissible")));
        }
        for b in &bumps {
            LogBump::new(b.center, b.width, 1.0)?;
        }
        let mut f = Self { bumps, scale: 1.0, omega0, omega1, margin };
        if f.bumps.is_empty() || epsilon == 0.0 {
            f.scale = 0.0;
            return Ok(f);
        }
        let unit = f.norm(q)?;
        if !(unit > 0.0) {
            return Err(Error::InvalidParameter("upstream bumps have zero norm".into()));
        }
        f.scale = epsilon / unit;
        Ok(f)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let th = y.atan2(x);
        th > self.omega0 - self.margin && th < self.omega1 + self.margin
    }

    /// `delta U^-(x, y)`.
    pub fn delta(&self, x: f64, y: f64) -> (f64, f64) {
        if self.scale == 0.0 {
            return (0.0, 0.0);
        }
        let s = x.hypot(y).ln();
        self.bumps.iter().fold((0.0, 0.0), |(a, b), k| {
            let g = self.scale * k.profile().derivative(s, 0);
            (a + k.weight_u * g, b + k.weight_v * g)
        })
    }

    /// `d/dxi delta U^-(x, y)`.
    pub fn d_xi(&self, x: f64, y: f64) -> (f64, f64) {
        if self.scale == 0.0 {
            return (0.0, 0.0);
        }
        let r2 = x * x + y * y;
        let s = 0.5 * r2.ln();
        self.bumps.iter().fold((0.0, 0.0), |(a, b), k| {
            let g = self.scale * k.profile().derivative(s, 1) * x / r2;
            (a + k.weight_u * g, b + k.weight_v * g)
        })
    }

    /// Norm of the descriptor on a log-polar grid of the extended sector.
    pub fn norm(&self, q: f64) -> Result<f64> {
        if self.bumps.is_empty() || self.scale == 0.0 {
            return Ok(0.0);
        }
        let profiles: Vec<LogBump> = self.bumps.iter().map(|b| b.profile()).collect();
        let (lo, hi) = support(&profiles);
        let mut n_t = 64;
        while (hi - lo) / (n_t as f64) > min_width(&profiles) / 16.0 {
            n_t *= 2;
        }
        let g = StripGrid::new(lo, hi, n_t, self.omega0 - self.margin, self.omega1 + self.margin, 33)?;
        let comp = |f: &dyn Fn(f64, f64) -> f64, k: f64| WeightedField::from_fn(g, k, f);
        let xy = |t: f64, th: f64| (t.exp() * th.cos(), t.exp() * th.sin());
        let du = comp(&|t, th| { let (x, y) = xy(t, th); self.delta(x, y).0 }, 0.0)?;
        let dv = comp(&|t, th| { let (x, y) = xy(t, th); self.delta(x, y).1 }, 0.0)?;
        let gu = comp(&|t, th| { let (x, y) = xy(t, th); self.d_xi(x, y).0 }, 1.0)?;
        let gv = comp(&|t, th| { let (x, y) = xy(t, th); self.d_xi(x, y).1 }, 1.0)?;
        let w = (du.sobolev_norm(1, q).powf(q) + dv.sobolev_norm(1, q).powf(q)).powf(1.0 / q);
        Ok(w + gu.holder_norm(1).max(gv.holder_norm(1)))
    }
}
