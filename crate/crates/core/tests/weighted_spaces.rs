use conoshock::weighted::{
    gamma1_norm, hardy_ratio, holder_norm, line_lq_norm, ray_trace_norm, sobolev_norm, to_cartesian, to_log_polar,
    to_strip, trace_norm, StripGrid, WeightedField,
};
use proptest::prelude::*;

const PI: f64 = std::f64::consts::PI;

fn grid(n_t: usize, n_theta: usize) -> StripGrid {
    StripGrid::new(-8.0, 8.0, n_t, 0.5, 1.2, n_theta).unwrap()
}

fn gauss(t: f64, s: f64) -> f64 {
    (-t * t / (2.0 * s * s)).exp()
}

#[test]
fn log_polar_round_trip() {
    let g = grid(128, 17);
    let f = |x: f64, y: f64| (0.3 * x).sin() * (0.7 * y).cos() / (1.0 + x * x + y * y);
    let w = to_log_polar(f, (0.5, 1.2), &g, 0.0).unwrap();
    for i in (0..g.n_t).step_by(7) {
        for j in 0..g.n_theta {
            let (x, y) = to_cartesian(g.t(i), g.theta(j));
            let (t, th) = to_strip(x, y);
            assert!((t - g.t(i)).abs() < 1e-13 && (th - g.theta(j)).abs() < 1e-13);
            let direct = f(x, y);
            assert!((w.get(i, j) - direct).abs() <= 1e-13 * direct.abs().max(1.0));
        }
    }
}

#[test]
fn weight_cancellation_matches_line_norms() {
    // u = e^{-kt} g(t) with a Gaussian g of width s: the weighted norm reduces to the line
    // norm of g times the angular length; integrals of g, g', g'' squared are closed form.
    let s = 0.9;
    let g = grid(4096, 9);
    let len = g.omega1 - g.omega0;
    let rp = PI.sqrt();
    let exact = [s * rp, rp / (2.0 * s), 3.0 * rp / (4.0 * s.powi(3))];
    for k in [-1.0, 0.0, 1.0] {
        let u = WeightedField::from_fn(g, k, |t, _| (-k * t).exp() * gauss(t, s)).unwrap();
        for m in 0..=2u8 {
            let want = (len * exact[..=m as usize].iter().sum::<f64>()).sqrt();
            let got = sobolev_norm(&u, m, 2.0);
            assert!((got - want).abs() < 1e-5 * want, "k {k} m {m}: {got} vs {want}");
        }
    }
}

#[test]
fn scale_invariance_under_grid_shift() {
    let g = grid(256, 9);
    let h = |x: f64| x.powi(3) * (-x).exp();
    let base = WeightedField::from_fn(g, 0.0, |t, _| h(t.exp())).unwrap();
    let steps = 16;
    let s = (steps as f64 * g.h_t()).exp();
    // Shift toward the interior so that no mass leaves the window.
    let scaled = WeightedField::from_fn(g, 0.0, |t, _| h(s * t.exp())).unwrap();
    let a = sobolev_norm(&base, 0, 3.0);
    let b = sobolev_norm(&scaled, 0, 3.0);
    assert!((a - b).abs() < 1e-9 * a, "{a} {b}");
}

#[test]
fn sobolev_norm_converges_at_second_order() {
    let f = |t: f64, th: f64| gauss(t - 0.5, 1.1) * (2.0 * th).cos();
    let n: Vec<f64> = [(128, 9), (256, 17), (512, 33), (1024, 65)]
        .iter()
        .map(|&(nt, nth)| sobolev_norm(&WeightedField::from_fn(grid(nt, nth), 0.0, f).unwrap(), 1, 4.0))
        .collect();
    for w in n.windows(3) {
        let r = (w[0] - w[1]) / (w[1] - w[2]);
        assert!((3.0..5.0).contains(&r), "{n:?}");
    }
}

#[test]
fn window_doubling_leaves_decaying_norms() {
    let g = StripGrid::new(-12.0, 12.0, 1024, 0.5, 1.2, 33).unwrap();
    let f = |t: f64, th: f64| gauss(t, 1.3) * (1.0 + 0.3 * th.sin());
    for weight in [0.0, 1.0] {
        let a = WeightedField::from_fn(g, weight, |t, th| f(t, th) * (-weight * t).exp()).unwrap();
        let b = WeightedField::from_fn(g.widened(), weight, |t, th| f(t, th) * (-weight * t).exp()).unwrap();
        for m in 0..=2u8 {
            let (x, y) = (sobolev_norm(&a, m, 4.0), sobolev_norm(&b, m, 4.0));
            assert!((x - y).abs() < 1e-6 * x, "m {m}: {x} {y}");
            let (x, y) = (holder_norm(&a, m), holder_norm(&b, m));
            assert!((x - y).abs() < 1e-6 * x);
        }
    }
}

#[test]
fn trace_norm_matches_closed_form() {
    let s = 0.7;
    let h = 0.0025;
    let n = 16384;
    let t0 = -20.48;
    let samples: Vec<f64> = (0..n).map(|i| gauss(t0 + i as f64 * h, s)).collect();
    let want = (s * PI.sqrt() + PI.sqrt() / (2.0 * s)).sqrt();
    let got = trace_norm(&samples, t0, h, 0.0, 2.0);
    assert!((got - want).abs() < 1e-5 * want, "{got} {want}");
    // Weight e^{kt} folds into the samples.
    let shifted: Vec<f64> = (0..n).map(|i| samples[i] * (-(t0 + i as f64 * h)).exp()).collect();
    assert!((trace_norm(&shifted, t0, h, 1.0, 2.0) - got).abs() < 1e-12 * got);
    assert!((line_lq_norm(&samples, t0, h, 0.0, 2.0) - (s * PI.sqrt()).sqrt()).abs() < 1e-10);
    assert_eq!(trace_norm(&vec![0.0; 32], 0.0, 0.1, 0.0, 3.0), 0.0);
}

fn family(g: StripGrid) -> Vec<WeightedField> {
    (0..10)
        .map(|k| {
            let c = -2.0 + 0.45 * k as f64;
            let w = 0.6 + 0.1 * k as f64;
            let a = 0.2 * (k % 3) as f64;
            WeightedField::from_fn(g, 0.0, move |t, th| gauss(t - c, w) * (1.0 + a * (3.0 * th).cos())).unwrap()
        })
        .collect()
}

fn max_ratio(fields: &[WeightedField], f: impl Fn(&WeightedField) -> f64) -> f64 {
    fields.iter().map(|u| f(u) / sobolev_norm(u, 1, 4.0)).fold(0.0, f64::max)
}

#[test]
fn trace_and_embedding_constants_are_stable() {
    let g = grid(256, 17);
    let coarse = family(g);
    let fine = family(g.refined());
    let k_trace = (max_ratio(&coarse, |u| ray_trace_norm(u, 0, 4.0)), max_ratio(&fine, |u| ray_trace_norm(u, 0, 4.0)));
    let k_emb = (max_ratio(&coarse, |u| holder_norm(u, 0)), max_ratio(&fine, |u| holder_norm(u, 0)));
    for (a, b) in [k_trace, k_emb] {
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() < 0.1 * a, "{a} {b}");
    }
    for u in &coarse {
        assert!(ray_trace_norm(u, 0, 4.0) <= k_trace.0 * sobolev_norm(u, 1, 4.0) * (1.0 + 1e-12));
    }
}

#[test]
fn holder_values() {
    let g = grid(64, 9);
    let c = WeightedField::from_fn(g, 0.0, |_, _| 0.75).unwrap();
    assert_eq!(holder_norm(&c, 0), 0.75);
    let e = WeightedField::from_fn(g, -2.0, |t, _| (2.0 * t).exp()).unwrap();
    assert!((holder_norm(&e, 2) - 1.0).abs() < 1e-12);
}

#[test]
fn hardy_equality_case() {
    let mut prev = f64::INFINITY;
    for half in [4.0, 8.0, 16.0] {
        let h = 0.01;
        let n = (2.0 * half / h) as usize + 1;
        let r = hardy_ratio(&vec![1.0; n], -half, h, 2.0).unwrap();
        assert!(r <= 1.0 + 1e-3);
        assert!((1.0 - r).abs() < prev);
        prev = (1.0 - r).abs();
    }
    assert!(prev < 0.05, "{prev}");
}

#[test]
fn shock_front_norm() {
    assert_eq!(gamma1_norm(&[0.0; 8], 0.1, 4.0), 0.0);
    let v = [0.0, 1.0, -2.0, 0.0];
    let want = ((0.5f64 * 0.0 + 1.0 + 16.0 + 0.0) * 0.5).powf(0.25) + 2.0;
    assert!((gamma1_norm(&v, 0.5, 4.0) - want).abs() < 1e-14);
}

fn hp_samples(c: &[(f64, f64, f64)], t0: f64, h: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| c.iter().map(|&(a, m, w)| a * gauss(t0 + i as f64 * h - m, w)).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hardy_bound_nonnegative(
        bumps in prop::collection::vec((0.0f64..2.0, -4.0f64..4.0, 0.2f64..1.5), 1..5),
        q in 1.5f64..6.0,
    ) {
        let (t0, h, n) = (-15.0, 0.01, 3001);
        let hp = hp_samples(&bumps, t0, h, n);
        prop_assume!(hp.iter().any(|v| *v > 1e-6));
        prop_assert!(hardy_ratio(&hp, t0, h, q).unwrap() <= 1.0 + 1e-3);
    }

    #[test]
    fn hardy_bound_signed(
        bumps in prop::collection::vec((-2.0f64..2.0, -4.0f64..4.0, 0.2f64..1.5), 1..5),
        q in 1.5f64..6.0,
    ) {
        let (t0, h, n) = (-15.0, 0.01, 3001);
        let hp = hp_samples(&bumps, t0, h, n);
        prop_assume!(hp.iter().any(|v| v.abs() > 1e-6));
        prop_assert!(hardy_ratio(&hp, t0, h, q).unwrap() <= 1.0 + 1e-3);
    }

    #[test]
    fn weight_cancellation_is_exact(k in -2.0f64..2.0, c in -1.0f64..1.0, m in 0u8..=2, q in 2.0f64..6.0) {
        let g = grid(64, 9);
        let w = |t: f64, th: f64| gauss(t - c, 1.0) * (1.0 + 0.5 * th.cos());
        let u = WeightedField::from_fn(g, k, |t, th| (-k * t).exp() * w(t, th)).unwrap();
        let plain = WeightedField::from_fn(g, 0.0, w).unwrap();
        let (a, b) = (sobolev_norm(&u, m, q), sobolev_norm(&plain, m, q));
        prop_assert!((a - b).abs() <= 1e-12 * b);
        let (a, b) = (holder_norm(&u, m), holder_norm(&plain, m));
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn shift_invariance_is_exact(steps in -10isize..10, m in 0u8..=2, q in 2.0f64..6.0) {
        let g = grid(128, 9);
        let f = WeightedField::from_fn(g, 0.0, |t, th| gauss(t, 0.8) * th.sin()).unwrap();
        let s = f.shift_t(steps);
        prop_assert!((sobolev_norm(&f, m, q) - sobolev_norm(&s, m, q)).abs() <= 1e-12 * sobolev_norm(&f, m, q));
        prop_assert!((holder_norm(&f, m) - holder_norm(&s, m)).abs() <= 1e-12 * holder_norm(&f, m));
    }
}
