use conoshock::sector::{
    dirichlet_symbol, hartman_wintner_gap, mode_symbol, perturbation_size, solve_dirichlet_laplace, solve_first_order,
    solve_mode, solve_neumann_singular, solve_perturbed, substituted_symbol, Coefficients, LinearData, ModeProblem,
    SolveDiagnostics, SolverOptions, DEFAULT_CONDITION_CAP,
};
use conoshock::shock::{LogBump, ShockCase, ShockFront, ShockProblem};
use conoshock::weighted::{StripGrid, WeightedField};
use conoshock::workbench::manufactured::{
    base_grid, dirichlet_case, dirichlet_cases, first_order_case, first_order_cases, neumann_case, neumann_cases,
};
use conoshock::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn gap_closed_form_and_minimum() {
    assert!((hartman_wintner_gap(PI / 2.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((hartman_wintner_gap(PI / 2.0, 2.0).unwrap() - 5.0).abs() < 1e-14);
    for k in 1..1000 {
        let th = PI * k as f64 / 1000.0;
        let s2 = th.sin().powi(2);
        let a = hartman_wintner_gap(th, 0.0).unwrap();
        assert!((a - (3.0 + s2) / (4.0 * s2)).abs() < 1e-12 * a);
    }
    // Golden-section minimisation of the mu = 0 gap.
    let f = |t: f64| hartman_wintner_gap(t, 0.0).unwrap();
    let (mut a, mut d) = (0.1, PI - 0.1);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    while d - a > 1e-10 {
        let b = d - phi * (d - a);
        let c = a + phi * (d - a);
        if f(b) < f(c) {
            d = c;
        } else {
            a = b;
        }
    }
    // The minimum is quadratic, so its location is only resolved to about sqrt(eps).
    assert!((0.5 * (a + d) - PI / 2.0).abs() < 1e-6);
    assert!((f(0.5 * (a + d)) - 1.0).abs() < 1e-15);
}

#[test]
fn gap_positive_on_product_grid() {
    let mut min = f64::INFINITY;
    for i in 1..=100 {
        let th = PI * i as f64 / 101.0;
        for k in 0..100 {
            let mu = -20.0 + 40.0 * k as f64 / 99.0;
            min = min.min(hartman_wintner_gap(th, mu).unwrap());
        }
    }
    assert!(min >= 1.0 - 1e-12, "{min}");
}

fn mode(lambda: C64, n: usize, th0: f64, th1: f64) -> ModeProblem {
    let theta: Vec<f64> = (0..n).map(|j| th0 + (th1 - th0) * j as f64 / (n - 1) as f64).collect();
    let s = mode_symbol(lambda);
    let rhs_hat = theta.iter().map(|t| (s - 2.0) * t.cos()).collect();
    ModeProblem { lambda, theta, rhs_hat, bc_hat: (C64::from(-th0.sin()), C64::from(-th1.sin())) }
}

#[test]
fn manufactured_mode_is_second_order() {
    // phi_hat = cos(theta): phi'' + cot phi' = -2 cos.
    let lambda = C64::new(1.3, -1.0);
    let err = |n: usize| {
        let m = mode(lambda, n, 0.6, 1.4);
        let x = solve_mode(&m, DEFAULT_CONDITION_CAP).unwrap();
        m.theta.iter().zip(&x).map(|(t, z)| (z - t.cos()).norm()).fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(33), err(65), err(129));
    assert!(e1 < 1e-3);
    assert!((3.5..4.5).contains(&(e1 / e2)) && (3.5..4.5).contains(&(e2 / e3)), "{e1} {e2} {e3}");
}

#[test]
fn mode_errors() {
    let mut m = mode(C64::new(0.0, 0.0), 33, 0.6, 1.4);
    m.rhs_hat = vec![C64::from(1.0); 33];
    assert!(matches!(solve_mode(&m, DEFAULT_CONDITION_CAP), Err(Error::SpectralProximity { .. })));
    let m = mode(C64::new(0.3, -1.0), 33, 0.0, 1.4);
    assert!(solve_mode(&m, DEFAULT_CONDITION_CAP).is_err());
}

#[test]
fn dirichlet_symbol_avoids_eigenvalues() {
    for k in 1..20 {
        let ev = -(k as f64 * PI / 0.45).powi(2);
        for i in 0..2001 {
            let mu = -100.0 + 0.1 * i as f64;
            assert!((dirichlet_symbol(mu) - ev).norm() >= 1.0);
        }
    }
}

#[test]
fn zero_data_gives_zero() {
    let g = base_grid();
    let z = WeightedField::zeros(g, 1.0);
    let zeros = vec![0.0; g.n_t];
    let s = solve_neumann_singular(&z, &zeros, &zeros, &opts()).unwrap();
    assert_eq!(s.field.max_abs(), 0.0);
    assert_eq!(solve_dirichlet_laplace(&z, &opts()).unwrap().field.max_abs(), 0.0);
    let u = solve_first_order(&LinearData::zeros(&g), &opts()).unwrap();
    assert_eq!(u.u.max_abs() + u.v.max_abs(), 0.0);
}

#[test]
fn undecayed_data_is_rejected() {
    let g = base_grid();
    let f = WeightedField::from_fn(g, 1.0, |_, th| th.sin()).unwrap();
    let zeros = vec![0.0; g.n_t];
    assert!(matches!(solve_neumann_singular(&f, &zeros, &zeros, &opts()), Err(Error::Truncation { .. })));
}

#[test]
fn neumann_manufactured_second_order() {
    for (b, m) in neumann_cases() {
        let mut errs = Vec::new();
        let mut g = base_grid();
        for _ in 0..3 {
            let (f, g0, g1, exact) = neumann_case(&g, b, m);
            let s = solve_neumann_singular(&f, &g0, &g1, &opts()).unwrap();
            errs.push(max_diff(&s.field.weighted_values(), &exact));
            assert!(s.diagnostics.max_residual() < 1e-7);
            g = g.refined();
        }
        for w in errs.windows(2) {
            assert!((3.0..5.0).contains(&(w[0] / w[1])), "{errs:?}");
        }
    }
}

#[test]
fn dirichlet_manufactured_second_order() {
    for (b, n) in dirichlet_cases() {
        let mut errs = Vec::new();
        let mut g = base_grid();
        for _ in 0..3 {
            let (f, exact) = dirichlet_case(&g, b, n);
            let s = solve_dirichlet_laplace(&f, &opts()).unwrap();
            errs.push(max_diff(&s.field.weighted_values(), &exact));
            assert!(s.diagnostics.max_residual() < 1e-7);
            g = g.refined();
        }
        for w in errs.windows(2) {
            assert!((3.0..5.0).contains(&(w[0] / w[1])), "{errs:?}");
        }
    }
}

#[test]
fn first_order_manufactured_second_order() {
    for (b, m, d) in first_order_cases() {
        let mut errs = Vec::new();
        let mut g = base_grid();
        for _ in 0..3 {
            let (data, eu, ev) = first_order_case(&g, b, m, d);
            let s = solve_first_order(&data, &opts()).unwrap();
            errs.push(max_diff(s.u.values(), &eu).max(max_diff(s.v.values(), &ev)));
            assert!(s.diagnostics.max_residual() < 1e-6);
            g = g.refined();
        }
        for w in errs.windows(2) {
            assert!((3.0..5.0).contains(&(w[0] / w[1])), "{errs:?}");
        }
    }
}

fn data_family() -> Vec<(LogBump, f64, LogBump)> {
    (0..10)
        .map(|k| {
            let k = k as f64;
            (
                LogBump { center: -1.0 + 0.2 * k, width: 0.7 + 0.05 * k, weight: 1.0 - 0.15 * k },
                0.5 + 0.3 * k,
                LogBump { center: 0.8 - 0.15 * k, width: 0.9, weight: 0.1 * k - 0.45 },
            )
        })
        .collect()
}

fn ratios(g: &StripGrid) -> Vec<[f64; 3]> {
    data_family()
        .into_iter()
        .map(|(b, m, d)| {
            let (f, g0, g1, _) = neumann_case(g, b, m);
            let n = solve_neumann_singular(&f, &g0, &g1, &opts()).unwrap().diagnostics.stability_ratio;
            let (f2, _) = dirichlet_case(g, d, 1.0 + (m * 2.0).floor() % 3.0);
            let dl = solve_dirichlet_laplace(&f2, &opts()).unwrap().diagnostics.stability_ratio;
            let (data, _, _) = first_order_case(g, b, m, d);
            let fo = solve_first_order(&data, &opts()).unwrap().diagnostics.stability_ratio;
            [n, dl, fo]
        })
        .collect()
}

#[test]
fn stability_ratios_survive_refinement_and_widening() {
    let g = base_grid();
    let base = ratios(&g);
    for other in [ratios(&g.refined()), ratios(&g.widened())] {
        for (a, b) in base.iter().zip(&other) {
            for k in 0..3 {
                assert!(a[k] > 0.0 && (a[k] / b[k]).max(b[k] / a[k]) < 2.0, "{a:?} {b:?}");
            }
        }
    }
}

#[test]
fn diagnostics_json_round_trip() {
    let g = base_grid();
    let (data, _, _) = first_order_case(&g, neumann_cases()[0].0, 1.0, dirichlet_cases()[1].0);
    let s = solve_first_order(&data, &opts()).unwrap();
    let back: SolveDiagnostics = serde_json::from_str(&s.diagnostics.to_json()).unwrap();
    assert_eq!(back, s.diagnostics);
    for key in ["residual_interior", "residual_bc0", "residual_bc1", "stability_ratio", "modes_solved", "rate"] {
        assert!(s.diagnostics.to_json().contains(key));
    }
}

#[test]
fn perturbation_size_examples() {
    let g = base_grid();
    assert_eq!(perturbation_size(&Coefficients::base(&g)), 0.0);
    assert!((perturbation_size(&Coefficients::shifted_a(&g, 0.03)) - 0.03).abs() < 1e-15);
    // Frozen transonic coefficients of the reference case.
    let p = ShockProblem::new(&ShockCase::reference(0.0)).unwrap();
    let c = p.coefficients(&ShockFront::straight(&p.grid)).unwrap();
    let size = perturbation_size(&c);
    assert!(size > 0.0 && size < opts().contraction_threshold, "{size}");
    assert!(size < 0.05, "{size}");
}

#[test]
fn base_coefficients_need_one_step() {
    let g = base_grid();
    let (data, _, _) = first_order_case(&g, neumann_cases()[1].0, 2.0, dirichlet_cases()[0].0);
    let direct = solve_first_order(&data, &opts()).unwrap();
    let p = solve_perturbed(&Coefficients::base(&g), &data, &opts()).unwrap();
    assert_eq!(p.iterations, 1);
    assert_eq!(p.solution.u, direct.u);
    assert_eq!(p.solution.v, direct.v);
}

#[test]
fn shifted_coefficients_contract_in_proportion() {
    let g = base_grid();
    let (data, _, _) = first_order_case(&g, neumann_cases()[0].0, 1.0, dirichlet_cases()[1].0);
    let rates: Vec<f64> = [1e-3, 3e-3, 1e-2]
        .iter()
        .map(|&d| solve_perturbed(&Coefficients::shifted_a(&g, d), &data, &opts()).unwrap().rate.unwrap())
        .collect();
    assert!(rates.windows(2).all(|w| w[1] > w[0]), "{rates:?}");
    for (r, d) in rates.iter().zip([1e-3, 3e-3, 1e-2]) {
        assert!((0.5 * d..2.0 * d).contains(r), "{rates:?}");
    }
    let s = solve_perturbed(&Coefficients::shifted_a(&g, 1e-2), &data, &opts()).unwrap();
    assert!(s.solution.diagnostics.max_residual() < 1e-6);
}

#[test]
fn ramped_shift_is_refused() {
    let g = base_grid();
    let (data, _, _) = first_order_case(&g, neumann_cases()[0].0, 1.0, dirichlet_cases()[1].0);
    let mut refused = None;
    for k in 0..20 {
        let d = 0.1 * k as f64;
        match solve_perturbed(&Coefficients::shifted_a(&g, d), &data, &opts()) {
            Ok(s) => assert!(s.rate.map_or(true, |r| r < 0.95)),
            Err(e) => {
                refused = Some(e);
                break;
            }
        }
    }
    assert!(matches!(refused, Some(Error::NonContraction { .. })), "{refused:?}");
    let big = solve_perturbed(&Coefficients::shifted_a(&g, 1.5), &data, &opts());
    assert!(matches!(big, Err(Error::PerturbationTooLarge { .. })));
}

#[test]
fn first_order_is_linear() {
    let g = base_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = first_order_cases();
    let (d1, _, _) = first_order_case(&g, cases[0].0, cases[0].1, cases[0].2);
    let (d2, _, _) = first_order_case(&g, cases[2].0, cases[2].1, cases[2].2);
    let u1 = solve_first_order(&d1, &opts()).unwrap();
    let u2 = solve_first_order(&d2, &opts()).unwrap();
    for _ in 0..5 {
        let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let u = solve_first_order(&d1.combine(a, &d2, b), &opts()).unwrap();
        for (x, (p, q)) in u.u.values().iter().zip(u1.u.values().iter().zip(u2.u.values())) {
            assert!((x - (a * p + b * q)).abs() < 1e-10);
        }
        for (x, (p, q)) in u.v.values().iter().zip(u1.v.values().iter().zip(u2.v.values())) {
            assert!((x - (a * p + b * q)).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn symbol_identity(mu in -1e3f64..1e3) {
        let d = mode_symbol(C64::new(mu, -1.0)) - substituted_symbol(mu);
        prop_assert!(d.norm() <= 1e-15 * (1.0 + mu * mu));
    }

    #[test]
    fn gap_is_at_least_one(theta in 1e-3f64..(PI - 1e-3), mu in -50.0f64..50.0) {
        prop_assert!(hartman_wintner_gap(theta, mu).unwrap() >= 1.0 - 1e-12);
    }
}
