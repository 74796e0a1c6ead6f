use conoshock::gas::{bernoulli_constant, density_from_speed, mach, scale_state, FlowState, GasParameters};
use conoshock::polar::polar_point;
use conoshock::Error;
use proptest::prelude::*;

#[test]
fn bernoulli_constant_values() {
    assert_eq!(bernoulli_constant(1.0, 2.0).unwrap(), 1.5);
    assert!((bernoulli_constant(0.01, 2.0).unwrap() - 0.51).abs() < 1e-15);
    assert!((bernoulli_constant(1e-300, 1.5).unwrap() - 0.5).abs() < 1e-15);
    assert!(bernoulli_constant(0.0, 2.0).is_err());
    assert!(bernoulli_constant(1.0, 1.0).is_err());
}

#[test]
fn density_values() {
    let p = GasParameters::from_nu(1.4, 0.02).unwrap();
    let r0 = density_from_speed(0.0, &p).unwrap();
    assert!((r0 - p.kappa_tilde.powf(1.0 / 0.4)).abs() < 1e-15 * r0);
    assert!((density_from_speed(1.0, &p).unwrap() - p.rho_inf).abs() < 1e-14 * p.rho_inf);
    let q_cav = (2.0 * p.kappa_tilde / (p.gamma - 1.0)).sqrt();
    assert!(matches!(density_from_speed(q_cav, &p), Err(Error::Cavitation(_))));
}

#[test]
fn mach_values() {
    let m = mach(&FlowState::new(1.0, 0.0, 0.1), 2.0).unwrap();
    assert!((m - 0.1f64.powf(-0.5)).abs() < 1e-12);
    assert!((m - 3.16228).abs() < 1e-5);
    // q = c gives M = 1.
    let rho: f64 = 0.3;
    let c = rho.powf(0.5 * 0.4);
    let s = FlowState::new(c * 0.6, c * 0.8, rho);
    assert!((mach(&s, 1.4).unwrap() - 1.0).abs() < 1e-15);
    assert!(mach(&FlowState::new(1.0, 0.0, 0.0), 2.0).is_err());
}

#[test]
fn post_shock_mach_scales_like_nu_scale() {
    // Brackets recorded from the polar sweep at b = 1 (values 41-45 and 3.97-4.00).
    for (gamma, lo, hi) in [(1.5, 30.0, 60.0), (2.0, 3.0, 5.0)] {
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&nu| {
                let p = GasParameters::from_nu(gamma, nu).unwrap();
                let pt = polar_point(&p, 1.0, 0.05).unwrap();
                pt.post.mach(gamma).unwrap() / p.nu_scale()
            })
            .collect();
        for r in &ratios {
            assert!((lo..hi).contains(r), "gamma {gamma}: {ratios:?}");
        }
    }
}

#[test]
fn scaling_identity_and_rejection() {
    let s = scale_state(0.3, -0.2, 0.7, 1.0, 1.4).unwrap();
    assert_eq!(s, FlowState::new(0.3, -0.2, 0.7));
    assert!(scale_state(0.3, -0.2, 0.7, 0.0, 1.4).is_err());
}

/// Residuals of `div(rho U) + rho v / y` and `u_y - v_x` at `(x, y)` by centered differences.
fn residuals(f: &dyn Fn(f64, f64) -> (f64, f64, f64), x: f64, y: f64, h: f64) -> (f64, f64) {
    let (u, v, rho) = f(x, y);
    let m = |x: f64, y: f64| {
        let (u, v, r) = f(x, y);
        (r * u, r * v)
    };
    let d_ru = (m(x + h, y).0 - m(x - h, y).0) / (2.0 * h);
    let d_rv = (m(x, y + h).1 - m(x, y - h).1) / (2.0 * h);
    let uy = (f(x, y + h).0 - f(x, y - h).0) / (2.0 * h);
    let vx = (f(x + h, y).1 - f(x - h, y).1) / (2.0 * h);
    let _ = u;
    (d_ru + d_rv + rho * v / y, uy - vx)
}

#[test]
fn equation_residual_scales_with_reference_speed() {
    // Scaling divides the mass residual by ui^(1 + 2/(g-1)) and the curl residual by ui.
    let gamma = 1.4;
    let raw = |x: f64, y: f64| (2.0 + 0.3 * x * y, 0.5 * (x - y).sin(), 1.0 + 0.2 * (x + 2.0 * y).cos());
    for ui in [0.5, 3.0] {
        let scaled = |x: f64, y: f64| {
            let (u, v, r) = raw(x, y);
            let s = scale_state(u, v, r, ui, gamma).unwrap();
            (s.u, s.v, s.rho)
        };
        for (x, y) in [(0.4, 1.1), (1.3, 0.7)] {
            let (m_raw, c_raw) = residuals(&raw, x, y, 1e-4);
            let (m_s, c_s) = residuals(&scaled, x, y, 1e-4);
            let k = ui.powf(1.0 + 2.0 / (gamma - 1.0));
            assert!((m_s * k - m_raw).abs() < 1e-7 * m_raw.abs().max(1.0), "{m_s} {m_raw}");
            assert!((c_s * ui - c_raw).abs() < 1e-7 * c_raw.abs().max(1.0));
        }
    }
}

proptest! {
    #[test]
    fn density_is_decreasing(gamma in 1.05f64..=2.0, nu in 1e-4f64..0.05) {
        let p = GasParameters::from_nu(gamma, nu).unwrap();
        let qmax = p.q_max();
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let q = qmax * 0.999 * i as f64 / 999.0;
            let r = density_from_speed(q, &p).unwrap();
            prop_assert!(r < prev || i == 0);
            prev = r;
        }
    }

    #[test]
    fn upstream_density_recovered(gamma in 1.05f64..=2.0, rho_inf in 1e-3f64..2.0) {
        let p = GasParameters::from_rho_inf(gamma, rho_inf).unwrap();
        let r = density_from_speed(1.0, &p).unwrap();
        prop_assert!((r - rho_inf).abs() <= 1e-14 * rho_inf.max(1.0) * 4.0, "{} vs {}", r, rho_inf);
    }

    #[test]
    fn mach_is_scale_invariant(
        gamma in 1.05f64..=2.0,
        u in -3.0f64..3.0,
        v in -3.0f64..3.0,
        rho in 0.01f64..5.0,
        ui in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
    ) {
        let raw = FlowState::new(u, v, rho);
        let s = scale_state(u, v, rho, ui, gamma).unwrap();
        let (a, b) = (mach(&raw, gamma).unwrap(), mach(&s, gamma).unwrap());
        prop_assert!((a - b).abs() <= 1e-13 * a.max(1.0));
    }

    #[test]
    fn nu_mach_roundtrip(gamma in 1.05f64..=2.0, m in 1.5f64..100.0) {
        let p = GasParameters::from_mach(gamma, m).unwrap();
        prop_assert!((p.mach_inf() - m).abs() <= 1e-13 * m);
        prop_assert!((p.rho_inf.powf(gamma - 1.0) - p.nu).abs() <= 1e-13 * p.nu);
    }
}
