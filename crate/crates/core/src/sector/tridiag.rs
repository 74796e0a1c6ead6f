//! Complex tridiagonal systems: LU with partial pivoting and a 1-norm condition estimate.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    /// `lower[i] = A[i+1][i]`
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    /// `upper[i] = A[i][i+1]`
    pub upper: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct TridiagLu {
    n: usize,
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swap: Vec<bool>,
}

impl Tridiag {
    pub fn new(lower: Vec<C64>, diag: Vec<C64>, upper: Vec<C64>) -> Self {
        assert_eq!(lower.len() + 1, diag.len());
        assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self {
            lower: self.upper.iter().map(|z| z.conj()).collect(),
            diag: self.diag.iter().map(|z| z.conj()).collect(),
            upper: self.lower.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j].norm();
                if j > 0 {
                    s += self.upper[j - 1].norm();
                }
                if j + 1 < n {
                    s += self.lower[j].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Gaussian elimination with row interchanges; `None` on an exactly zero pivot.
    pub fn factor(&self) -> Option<TridiagLu> {
        let n = self.len();
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return None;
                }
                let m = dl[i] / d[i];
                dl[i] = m;
                d[i + 1] -= m * du[i];
            } else {
                let m = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = m;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - m * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1].norm() == 0.0 {
            return None;
        }
        Some(TridiagLu { n, dl, d, du, du2, swap })
    }
}

impl TridiagLu {
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            let t = b[i];
            b[i + 1] -= self.dl[i] * t;
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Estimate of `||A||_1 ||A^{-1}||_1` (Hager's method with Higham's safeguard).
/// Returns infinity when a factorization breaks down.
pub fn condition_estimate(a: &Tridiag) -> f64 {
    let n = a.len();
    let (Some(lu), Some(lu_h)) = (a.factor(), a.conj_transpose().factor()) else {
        return f64::INFINITY;
    };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm()).sum::<f64>();
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let mut y = x.clone();
        lu.solve(&mut y);
        est = norm(&y);
        let mut z: Vec<C64> = y.iter().map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) }).collect();
        lu_h.solve(&mut z);
        let (j, zmax) = z.iter().enumerate().map(|(i, v)| (i, v.norm())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= zx || j == last {
            break;
        }
        last = j;
        x = vec![C64::new(0.0, 0.0); n];
        x[j] = C64::new(1.0, 0.0);
    }
    let mut alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        })
        .collect();
    lu.solve(&mut alt);
    est = est.max(2.0 * norm(&alt) / (3.0 * n as f64));
    let c = a.norm1() * est;
    if c.is_finite() { c } else { f64::INFINITY }
}
