//! Periodic padded transforms along `t` and the per-frequency dispatch.
//!
//! Padded arrays have length `N = 2 n_t` per ray and are stored ray by ray
//! (`j * N + i`). Window samples occupy `i < n_t`; the pad holds a raised-cosine
//! continuation that takes the last window value down to zero and the first one
//! back up, so the periodic extension is continuous.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::weighted::StripGrid;

pub(crate) fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::env::var("CONOSHOCK_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
    })
}

pub(crate) struct Spectral {
    pub grid: StripGrid,
    pub n: usize,
    pub mu: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: &StripGrid) -> Self {
        let n = 2 * grid.n_t;
        let mut planner = FftPlanner::new();
        let period = n as f64 * grid.h_t();
        let mu = (0..n)
            .map(|k| {
                let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * std::f64::consts::PI * kk / period
            })
            .collect();
        Self { grid: *grid, n, mu, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// Pads one line of window samples.
    pub fn extend(&self, window: &[f64]) -> Vec<f64> {
        let nt = self.grid.n_t;
        let mut out = vec![0.0; self.n];
        out[..nt].copy_from_slice(window);
        let (first, last) = (window[0], window[nt - 1]);
        let len = (self.n - nt) as f64 + 1.0;
        for m in nt..self.n {
            let s = (m - nt + 1) as f64 / len;
            let down = 0.5 * (1.0 + (std::f64::consts::PI * (2.0 * s).min(1.0)).cos());
            let up = 0.5 * (1.0 - (std::f64::consts::PI * (2.0 * s - 1.0).max(0.0)).cos());
            out[m] = last * down + first * up;
        }
        out
    }

    /// Pads each ray of a row-major window field.
    pub fn extend_field(&self, values: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(self.n * g.n_theta);
        let mut line = vec![0.0; g.n_t];
        for j in 0..g.n_theta {
            for (i, l) in line.iter_mut().enumerate() {
                *l = values[g.index(i, j)];
            }
            out.extend(self.extend(&line));
        }
        out
    }

    pub fn forward(&self, padded: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = padded.iter().map(|&x| C64::new(x, 0.0)).collect();
        for chunk in buf.chunks_mut(self.n) {
            self.fwd.process(chunk);
        }
        buf
    }

    /// Inverse transform of `hat * (i mu)^order`, real part, per line.
    pub fn inverse(&self, hat: &[C64], order: u32) -> Vec<f64> {
        let mut buf: Vec<C64> = hat.to_vec();
        for chunk in buf.chunks_mut(self.n) {
            for (k, z) in chunk.iter_mut().enumerate() {
                *z *= C64::new(0.0, self.mu[k]).powu(order);
            }
            self.inv.process(chunk);
        }
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// Spectral derivative of a padded real array.
    pub fn derivative(&self, padded: &[f64], order: u32) -> Vec<f64> {
        let mut hat = self.forward(padded);
        for chunk in hat.chunks_mut(self.n) {
            chunk[self.n / 2] = C64::new(0.0, 0.0);
        }
        self.inverse(&hat, order)
    }

    /// Runs `solve(k, mu_k)` for every non-Nyquist frequency in parallel; the result for
    /// each frequency is a profile over `lines` angular nodes, scattered into ray-major layout.
    pub fn dispatch(&self, lines: usize, solve: impl Fn(usize, f64) -> Result<Vec<C64>> + Sync) -> Result<(Vec<C64>, usize)> {
        let n = self.n;
        let results: Vec<Result<Option<Vec<C64>>>> = pool().install(|| {
            (0..n)
                .into_par_iter()
                .map(|k| if self.is_nyquist(k) { Ok(None) } else { solve(k, self.mu[k]).map(Some) })
                .collect()
        });
        let mut hat = vec![C64::new(0.0, 0.0); n * lines];
        let mut solved = 0;
        for (k, r) in results.into_iter().enumerate() {
            if let Some(profile) = r? {
                for (j, z) in profile.into_iter().enumerate() {
                    hat[j * n + k] = z;
                }
                solved += 1;
            }
        }
        Ok((hat, solved))
    }

    /// Window samples of a padded ray-major array, in row-major field order.
    pub fn window(&self, padded: &[f64], lines: usize) -> Vec<f64> {
        let nt = self.grid.n_t;
        let mut out = vec![0.0; nt * lines];
        for j in 0..lines {
            for i in 0..nt {
                out[i * lines + j] = padded[j * self.n + i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_periodic_wave() {
        let g = StripGrid::new(0.0, 4.0, 32, 0.5, 1.0, 5).unwrap();
        let s = Spectral::new(&g);
        let period = 8.0;
        let w = 2.0 * std::f64::consts::PI / period;
        let x: Vec<f64> = (0..s.n).map(|i| (w * i as f64 * g.h_t()).sin()).collect();
        let d = s.derivative(&x, 1);
        for (i, v) in d.iter().enumerate() {
            assert!((v - w * (w * i as f64 * g.h_t()).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn extension_is_continuous() {
        let g = StripGrid::new(0.0, 1.0, 16, 0.5, 1.0, 5).unwrap();
        let s = Spectral::new(&g);
        let win: Vec<f64> = (0..16).map(|i| 1.0 + i as f64).collect();
        let p = s.extend(&win);
        assert_eq!(&p[..16], &win[..]);
        let jumps = p.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(jumps < 3.0);
        assert!((p[31] - 1.0).abs() < 0.1);
    }
}
