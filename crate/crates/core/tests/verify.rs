use std::f64::consts::PI;
use std::sync::Arc;

use orlicz_core::field::*;
use orlicz_core::geometry::{dist_par, BoxRegion, ParabolicPoint};
use orlicz_core::orlicz::*;
use orlicz_core::solver::*;
use orlicz_core::verify::*;
use orlicz_core::MarginReport;
use proptest::prelude::*;

fn heat_field(n: usize) -> ModelField {
    ModelField::new(make_power_law(2.0).unwrap().with_factor(1.0), n, 1.0, 1.0).unwrap()
}

fn heat_solution(h: f64) -> DiscreteSolution {
    let dom = RectDomain::unit(1, 0.1).unwrap();
    let psi = BoundaryDatum::new("sin", |x, _| 1.5 * (PI * x[0]).sin());
    solve_cauchy_dirichlet(&heat_field(1), &dom, &psi, &GridParams::new(h)).unwrap()
}

fn battery_fields(n: usize) -> Vec<ModelField> {
    [
        make_power_law(1.5).unwrap(),
        make_power_law(2.0).unwrap(),
        make_power_law(3.0).unwrap(),
        make_oscillating_example(1.5, 3.0, 2).unwrap(),
    ]
    .into_iter()
    .map(|f| ModelField::with_sharp_constants(f.with_dimension(n), n).unwrap())
    .collect()
}

#[test]
fn barrier_constant_and_config_error() {
    assert!((barrier_m_min(2, 1.0, 1.0) - 45.254833995939045).abs() < 1e-12);
    assert!((barrier_m_min(3, 0.5, 2.0) - 8.0 * barrier_m_min(2, 1.0, 1.0)).abs() < 1e-9);
    let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
    let err = barrier_lateral_check(&f, 40.0, &BarrierGrid::default()).unwrap_err();
    assert!(format!("{err}").contains("M = 40"));
    assert!(check_barrier_m(3.0, 1, 1.0, 1.0).is_err());
    assert!(check_barrier_m(4.0, 1, 1.0, 1.0).is_ok());
}

#[test]
fn lateral_residual_for_linear_field() {
    // A(ξ) = 2ξ: residual = ∂_t v - 2Δv = -4(n-1) + (M/2) x_n^{-3/2} for t > -1/2.
    let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
    let m = 64.0;
    let grid = BarrierGrid {
        tangential: 21,
        normal: 40,
        time: 21,
    };
    let rep = barrier_lateral_check(&f, m, &grid).unwrap();
    let mut hits = 0;
    for s in &rep.samples {
        if s.t > -0.5 {
            let expected = -4.0 + 0.5 * m * s.x[1].powf(-1.5);
            assert!((s.residual - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
        if s.x[0] == 0.0 && (s.x[1] - 1.0).abs() < 1e-12 && (s.t + 0.25).abs() < 1e-12 {
            assert!((s.residual - 28.0).abs() < 1e-9);
            hits += 1;
        }
    }
    assert_eq!(hits, 1);
    assert!(rep.report.pass);
}

#[test]
fn corner_dominates_lateral() {
    for f in battery_fields(2) {
        let m = 4.0 * barrier_m_min(2, f.nu(), f.ell());
        let grid = BarrierGrid::default();
        let lateral = barrier_lateral_check(&f, m, &grid).unwrap();
        let corner = barrier_corner_check(&f, m, &grid).unwrap();
        assert!(corner.report.rhs >= lateral.report.rhs);
        assert!(corner.report.pass, "{}", f.label());
    }
}

#[test]
fn initial_barrier_radial_closed_form() {
    // v = |x|^{1/2}, A = 2ξ: residual = -2Δv = -2·a(a+n-2)|x|^{a-2} with a = 1/2.
    let grid = BarrierGrid::default();
    let f1 = ModelField::new(make_power_law(2.0).unwrap().with_dimension(1), 1, 1.0, 1.0).unwrap();
    let r1 = barrier_initial_check(&f1, &grid).unwrap();
    for s in &r1.samples {
        let r = s.x[0].abs();
        assert!((s.residual - 0.5 * r.powf(-1.5)).abs() < 1e-9 * r.powf(-1.5));
    }
    assert!(r1.report.pass);
    let f2 = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
    let r2 = barrier_initial_check(&f2, &grid).unwrap();
    for s in &r2.samples {
        let r = (s.x[0] * s.x[0] + s.x[1] * s.x[1]).sqrt();
        assert!((s.residual + 0.5 * r.powf(-1.5)).abs() < 1e-9 * r.powf(-1.5));
    }
    assert!(!r2.report.pass);
}

#[test]
fn barrier_residual_sign_is_scale_invariant() {
    // Multiplying A by a constant multiplies the time-free residual.
    let g = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let a = ModelField::new(g.clone(), 2, 0.5, 2.0).unwrap();
    let b = ModelField::new(g.with_factor(3.0 * g.norm_const()), 2, 0.5, 2.0).unwrap();
    let m = 4.0 * barrier_m_min(2, 0.5, 2.0);
    let ra = barrier_corner_check(&a, m, &BarrierGrid::default()).unwrap();
    let rb = barrier_corner_check(&b, m, &BarrierGrid::default()).unwrap();
    for (x, y) in ra.samples.iter().zip(&rb.samples) {
        assert!((y.residual - 3.0 * x.residual).abs() <= 1e-9 * y.residual.abs().max(1.0));
    }
    assert_eq!(ra.report.pass, rb.report.pass);
}

#[test]
fn reduction_constants() {
    for m in [4.0, 45.0, 181.0, 724.0] {
        let d = reduction_delta(m);
        assert!(d > 0.0 && d <= 0.5);
        assert!(d * d + m * (2.0 * d).sqrt() <= 0.25 + 1e-15);
        let bigger = d * (1.0 + 1e-6);
        assert!(bigger * bigger + m * (2.0 * bigger).sqrt() > 0.25);
        let s = contraction_sigma(d, 1.5, 3.0);
        assert!(s > 0.0 && s < 0.5 && s <= d / 2f64.sqrt());
        assert!((2.0 * s).powf(1.5) <= 4.0 * 2f64.sqrt().powf(-3.0) * d * (1.0 + 1e-12));
    }
    let d = reduction_delta(181.0);
    assert!((shifted_barrier(181.0, d, &[0.0, 0.0], 0.0) - (181.0 * d.sqrt() + d)).abs() < 1e-15);
    assert!(
        (shifted_barrier(181.0, d, &[1.0, 0.5], -1.0) - (1.0 + 181.0 * (0.5 + d).sqrt() + 1.0 + d))
            .abs()
            < 1e-12
    );
}

#[test]
fn zero_configuration_reduces() {
    let grid = SpaceTimeGrid::uniform(&[-1.0, 0.0], &[1.0, 1.0], 0.125).unwrap();
    let times: Vec<f64> = (0..=8).map(|k| -1.0 + k as f64 / 8.0).collect();
    let u = DiscreteSolution::sample(grid, &times, |_, _| 0.0).unwrap();
    let out = comparison_with_barrier(&u, 181.0, None).unwrap();
    assert!(out.passed() && !out.hypothesis_violation);
    assert_eq!(out.oscillation.lhs, 0.0);
    // A solution with oscillation 2 violates the hypotheses instead of failing.
    let grid = SpaceTimeGrid::uniform(&[-1.0, 0.0], &[1.0, 1.0], 0.125).unwrap();
    let big = DiscreteSolution::sample(grid, &times, |x, _| x[0]).unwrap();
    let out = comparison_with_barrier(&big, 181.0, None).unwrap();
    assert!(out.hypothesis_violation && !out.passed());
    // The wrong configuration is a domain error.
    let off = DiscreteSolution::sample(
        SpaceTimeGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap(),
        &times,
        |_, _| 0.0,
    )
    .unwrap();
    assert!(comparison_with_barrier(&off, 181.0, None).is_err());
}

#[test]
fn caccioppoli_trivial_and_refined() {
    let k = BoxRegion::new(&[0.25], &[0.75], 0.025, 0.1).unwrap();
    let f = make_power_law(2.0).unwrap().with_factor(1.0);
    let u = heat_solution(1.0 / 32.0);
    let empty = caccioppoli_check(&u, &k, 10.0, &f, &CutoffSpec::default()).unwrap();
    assert!(empty.pass && empty.lhs == 0.0 && empty.rhs == 0.0);
    let c: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| {
            caccioppoli_check(&heat_solution(h), &k, 0.0, &f, &CutoffSpec::default())
                .unwrap()
                .calibrated
                .unwrap()
        })
        .collect();
    assert!(c.iter().all(|v| v.is_finite()));
    assert!((c[1] / c[0] - 1.0).abs() <= 0.2, "{c:?}");
    let grid = SpaceTimeGrid::uniform(&[0.0], &[1.0], 1.0 / 16.0).unwrap();
    let constant = DiscreteSolution::sample(grid, &[0.0, 0.05, 0.1], |_, _| 2.0).unwrap();
    let r = caccioppoli_check(&constant, &k, 1.0, &f, &CutoffSpec::default()).unwrap();
    assert!(r.pass && r.calibrated.unwrap().is_finite());
    let touching = BoxRegion::new(&[0.0], &[0.75], 0.025, 0.1).unwrap();
    assert!(caccioppoli_check(&u, &touching, 0.0, &f, &CutoffSpec::default()).is_err());
}

#[test]
fn v_weak_form_affine_and_heat() {
    let grid = SpaceTimeGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], 1.0 / 16.0).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.01).collect();
    let u = DiscreteSolution::sample(grid, &times, |x, _| 0.5 * x[0] - x[1]).unwrap();
    let f2 = heat_field(2);
    let bumps = standard_bumps(&u, 2);
    for (w, _) in v_weak_form(&u, &f2, &bumps).unwrap() {
        assert!(w.abs() < 1e-12);
    }
    let coarse = heat_solution(1.0 / 16.0);
    let fine = heat_solution(1.0 / 32.0);
    let f1 = heat_field(1);
    let bc = standard_bumps(&coarse, 3);
    let c = calibrate_v_tolerance(
        &v_weak_form(&coarse, &f1, &bc).unwrap(),
        &v_weak_form(&fine, &f1, &bc).unwrap(),
        1.0 / 16.0,
        1.1,
    );
    assert!(c.is_finite() && c > 0.0);
    assert!(v_subsolution_check(&fine, &f1, &bc, c).unwrap().pass);
    let dom = RectDomain::unit(1, 0.1).unwrap();
    let psi = BoundaryDatum::new("sin", |x, _| 1.5 * (PI * x[0]).sin());
    let p3 = regularize(
        Arc::new(
            ModelField::with_sharp_constants(make_power_law(3.0).unwrap().with_dimension(1), 1)
                .unwrap(),
        ),
        0.125,
    )
    .unwrap();
    let u3 = solve_cauchy_dirichlet(&p3, &dom, &psi, &GridParams::new(1.0 / 32.0)).unwrap();
    assert!(v_subsolution_check(&u3, &p3, &bc, c).unwrap().pass);
}

#[test]
fn lipschitz_ratio_for_affine_data() {
    let grid = SpaceTimeGrid::uniform(&[0.0], &[1.0], 1.0 / 32.0).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let u = DiscreteSolution::sample(grid, &times, |x, _| 0.5 * x[0]).unwrap();
    let f = make_power_law(2.0).unwrap();
    let est =
        lipschitz_estimate_check(&u, &ParabolicPoint::new(&[0.5], 1.0), &[0.1, 0.2], &f).unwrap();
    let exact = 0.5 / (0.25f64 + 1.0).sqrt();
    for (_, r) in &est.ratios {
        assert!((r - exact).abs() < 1e-12);
    }
    assert!(est.report.pass && (est.max_ratio() - exact).abs() < 1e-12);
}

#[test]
fn lip_half_examples() {
    let grid = SpaceTimeGrid::uniform(&[0.0], &[1.0], 1.0 / 16.0).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let k = BoxRegion::new(&[0.25], &[0.75], 0.2, 0.8).unwrap();
    let c = DiscreteSolution::sample(grid.clone(), &times, |_, _| 1.0).unwrap();
    assert_eq!(lip_half_seminorm(&c, &k).unwrap().lhs, 0.0);
    let x = DiscreteSolution::sample(grid, &times, |x, _| x[0]).unwrap();
    assert!((lip_half_seminorm(&x, &k).unwrap().lhs - 1.0).abs() < 1e-12);
}

#[test]
fn lip_half_of_heat_matches_analytic_sup() {
    let u = heat_solution(1.0 / 64.0);
    let k = BoxRegion::new(&[0.25], &[0.75], 0.025, 0.1).unwrap();
    let measured = lip_half_seminorm(&u, &k).unwrap().lhs;
    let exact = |x: f64, t: f64| 1.5 * (-PI * PI * t).exp() * (PI * x).sin();
    let mut pts = Vec::new();
    for i in 0..=40 {
        for j in 0..=30 {
            let p = ParabolicPoint::new(
                &[0.25 + 0.5 * i as f64 / 40.0],
                0.025 + 0.075 * j as f64 / 30.0,
            );
            let v = exact(p.x[0], p.t);
            pts.push((p, v));
        }
    }
    let mut sup: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            sup = sup.max((pts[a].1 - pts[b].1).abs() / dist_par(&pts[a].0, &pts[b].0));
        }
    }
    assert!((measured / sup - 1.0).abs() <= 0.1, "{measured} vs {sup}");
    assert!(measured <= 1.5 * PI);
}

#[test]
fn stability_band() {
    assert!(stability_margin("s", "band", &[1.0, 1.2, 0.8], 1.0, 0.25).pass);
    assert!(!stability_margin("s", "band", &[1.0, 1.3], 1.0, 0.25).pass);
    assert!(!stability_margin("s", "band", &[f64::NAN], 1.0, 0.25).pass);
}

#[test]
fn constant_boundary_data_has_zero_modulus() {
    let dom = RectDomain::new(&[-1.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
    let u = solve_cauchy_dirichlet(
        &heat_field(2),
        &dom,
        &BoundaryDatum::constant(0.3),
        &GridParams::new(1.0 / 16.0),
    )
    .unwrap();
    let out = boundary_modulus_measure(
        &u,
        &ParabolicPoint::new(&[0.0, 0.0], 0.25),
        &make_power_law(2.0).unwrap(),
        0.3,
        reduction_delta(181.0),
        &ModulusSettings::default(),
    )
    .unwrap();
    assert!(out.levels.iter().all(|l| l.oscillation == 0.0));
    assert!(out.nested.iter().all(|l| l.1 == 0.0));
    assert!(out.modulus.breakpoints().iter().all(|p| p.1 == 0.0));
    assert!(out.passed());
    assert!((out.omega - 1.6).abs() < 1e-15);
}

proptest! {
    #[test]
    fn report_pass_iff_margin_within_tolerance(lhs in -10.0f64..10.0, rhs in -10.0f64..10.0, tol in 0.0f64..1.0) {
        let r = MarginReport::new("p", "property", lhs, rhs, tol);
        prop_assert_eq!(r.pass, r.margin >= -tol);
        prop_assert_eq!(r.margin, rhs - lhs);
    }
}
