use std::sync::Arc;

use orlicz_core::field::*;
use orlicz_core::orlicz::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn battery() -> Vec<StructureFunction> {
    vec![
        make_power_law(1.5).unwrap(),
        make_power_law(2.0).unwrap(),
        make_power_law(3.0).unwrap(),
        make_oscillating_example(1.5, 3.0, 2).unwrap(),
    ]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

#[test]
fn linear_field_closed_forms() {
    let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
    let xi = [0.3, -1.7];
    assert_eq!(f.apply(&xi), vec![0.6, -3.4]);
    let j = f.jacobian_matrix(&xi);
    for (a, b) in j.iter().zip([2.0, 0.0, 0.0, 2.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(f.apply(&[0.0, 0.0]), vec![0.0, 0.0]);
    let r = ellipticity_margin(&f, &xi, &[1.0, 2.0]).unwrap();
    assert!(r.pass && r.margin.abs() < 1e-12);
    assert!(ellipticity_margin(&f, &[0.0, 0.0], &[1.0, 0.0]).is_err());
    let r = bound_margins(&f, &[0.0, 0.0], 1.0, 1.0);
    assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);
    assert!(bound_margins(&f, &xi, 2.0, 2.0).pass);
    assert!(monotonicity_margin(&f, &[0.0, 0.0], &[0.0, 0.0], 1.0).is_err());
}

#[test]
fn equal_arguments_give_zero_monotonicity() {
    for g in battery() {
        let f = ModelField::with_sharp_constants(g, 2).unwrap();
        let r = monotonicity_margin(&f, &[0.4, 0.9], &[0.4, 0.9], 0.5).unwrap();
        assert!(r.pass && r.lhs == 0.0 && r.rhs == 0.0);
    }
}

/// Central differences with a step relative to |ξ|, valid near the origin
/// where g' blows up.
fn relative_fd(f: &dyn VectorField, xi: &[f64]) -> Vec<f64> {
    let n = xi.len();
    let h = 1e-6 * norm(xi);
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let mut p = xi.to_vec();
        let mut m = xi.to_vec();
        p[j] += h;
        m[j] -= h;
        let (ap, am) = (f.apply(&p), f.apply(&m));
        for i in 0..n {
            out[i * n + j] = (ap[i] - am[i]) / (2.0 * h);
        }
    }
    out
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in battery() {
        for n in 1..=3 {
            let f = ModelField::with_sharp_constants(g.clone(), n).unwrap();
            for _ in 0..100 {
                let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
                let xi = random_vec(&mut rng, n, scale);
                if norm(&xi) == 0.0 {
                    continue;
                }
                let a = f.jacobian_matrix(&xi);
                let b = relative_fd(&f, &xi);
                let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
                for (x, y) in a.iter().zip(&b) {
                    assert!(
                        (x - y).abs() <= 1e-6 * scale,
                        "{} n={n} ξ={xi:?}",
                        g.label()
                    );
                }
            }
        }
    }
}

#[test]
fn oscillating_jacobian_eigenvalues() {
    let g = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let f = ModelField::with_sharp_constants(g.clone(), 2).unwrap();
    let j = f.jacobian_matrix(&[1.0, 1.0]);
    let s = 2f64.sqrt();
    // Eigenvectors (1,1)/√2 and (1,-1)/√2.
    let radial = 0.5 * (j[0] + j[1] + j[2] + j[3]);
    let tangential = 0.5 * (j[0] - j[1] - j[2] + j[3]);
    assert!((radial - g.derivative(s)).abs() < 1e-12);
    assert!((tangential - g.eval(s) / s).abs() < 1e-12);
    let mut fd = vec![0.0; 4];
    fd_jacobian(&f, &[1.0, 1.0], &mut fd);
    for (a, b) in j.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-6 * radial);
    }
}

#[test]
fn orthogonal_direction_margin_is_exact() {
    let g = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let nu = 0.3;
    let f = ModelField::new(g.clone(), 2, nu, 2.0).unwrap();
    let xi = [2.0, 0.0];
    let lam = [0.0, 1.5];
    assert!(ellipticity_margin(&f, &xi, &lam).unwrap().pass);
    let mut jac = vec![0.0; 4];
    f.jacobian(&xi, &mut jac);
    let quad = lam[1] * lam[1] * jac[3];
    let k = g.eval(2.0) / 2.0;
    assert!((quad - nu * k * 2.25 - (1.0 - nu) * k * 2.25).abs() < 1e-12);
}

#[test]
fn model_fields_pass_random_suite() {
    for g in battery() {
        let f = ModelField::with_sharp_constants(g.clone(), 2).unwrap();
        let c = calibrate_monotonicity(&f, 17, 10_000, 15.0, 0.9);
        assert!(c.constant > 0.0);
        let (cb, cc) = calibrate_bounds(&f, 19, 1e-3, 1e3, 200, 0.05);
        assert!(cb.constant >= 1.0 && cc.constant <= 1.0 && cc.constant > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let x1 = random_vec(&mut rng, 2, 10.0);
            let x2 = random_vec(&mut rng, 2, 10.0);
            assert!(
                ellipticity_margin(&f, &x1, &x2).unwrap().pass,
                "{}",
                g.label()
            );
            assert!(
                monotonicity_margin(&f, &x1, &x2, c.constant).unwrap().pass,
                "{}",
                g.label()
            );
        }
        for s in orlicz_core::math::logspace(1e-3, 1e3, 200) {
            let d = rng.gen_range(0.0..std::f64::consts::TAU);
            assert!(bound_margins(&f, &[s * d.cos(), s * d.sin()], cb.constant, cc.constant).pass);
        }
    }
}

#[test]
fn linear_monotonicity_identity() {
    // ⟨2Δξ, Δξ⟩ = 2|Δξ|², g(s)/s = 2 and |ΔV_g|² = 2|Δξ|².
    let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
    let r = monotonicity_margin(&f, &[1.0, 2.0], &[-0.5, 0.25], 1.0).unwrap();
    assert!(r.pass && r.margin.abs() < 1e-12);
    assert!(
        !monotonicity_margin(&f, &[1.0, 2.0], &[-0.5, 0.25], 1.01)
            .unwrap()
            .pass
    );
}

#[test]
fn regularized_linear_field_is_exact() {
    let base: Arc<dyn VectorField> =
        Arc::new(ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap());
    let eps = 0.25;
    let r = regularize(base, eps).unwrap();
    for xi in [[0.0, 0.0], [0.3, 0.1], [-4.0, 2.0]] {
        let a = r.apply(&xi);
        let k = 2.0 + eps * (1.0 + norm(&xi)).powf(r.gtilde1() - 2.0);
        for i in 0..2 {
            assert!((a[i] - k * xi[i]).abs() < 1e-12 * (1.0 + norm(&xi)));
        }
    }
    assert!(regularize(r.base().clone(), 1.0).is_err());
    assert!(regularize(r.base().clone(), 0.0).is_err());
}

#[test]
fn regularized_oscillating_near_base() {
    let g = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let base = ModelField::with_sharp_constants(g, 2).unwrap();
    let eps = 0.1;
    let r = regularize(Arc::new(base.clone()), eps).unwrap();
    assert_eq!(r.apply(&[0.0, 0.0]), vec![0.0, 0.0]);
    let xi = [1.0, 0.0];
    let a0 = base.apply(&xi);
    let mut sup: f64 = 0.0;
    for i in 0..=40 {
        for k in 0..64 {
            let rho = eps * i as f64 / 40.0;
            let th = k as f64 * std::f64::consts::TAU / 64.0;
            let a = base.apply(&[xi[0] - rho * th.cos(), xi[1] - rho * th.sin()]);
            sup = sup.max(norm(&[a[0] - a0[0], a[1] - a0[1]]));
        }
    }
    let ae = r.apply(&xi);
    let diff = norm(&[ae[0] - a0[0], ae[1] - a0[1]]);
    assert!(diff <= sup + eps * 2f64.powf(r.gtilde1() - 2.0));
}

#[test]
fn regularized_random_ellipticity() {
    let g = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let r = regularize(
        Arc::new(ModelField::with_sharp_constants(g, 2).unwrap()),
        0.1,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..100 {
        let xi = random_vec(&mut rng, 2, 10.0);
        let lam = random_vec(&mut rng, 2, 1.0);
        assert!(
            ellipticity_margin(&r, &xi, &lam).unwrap().pass,
            "ξ = {xi:?}"
        );
    }
}

#[test]
fn regularized_constants_are_uniform() {
    for g in battery() {
        let base: Arc<dyn VectorField> =
            Arc::new(ModelField::with_sharp_constants(g.clone(), 2).unwrap());
        let cs: Vec<f64> = (1..=6)
            .map(|j| {
                regularize(base.clone(), 0.5f64.powi(j))
                    .unwrap()
                    .required_factor()
            })
            .collect();
        let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cs.iter().copied().fold(0.0, f64::max);
        assert!(hi <= 1.05 * lo, "{}: {cs:?}", g.label());
    }
}

#[test]
fn g_eps_examples() {
    let p2 = make_power_law(2.0).unwrap();
    let ge = g_eps(&p2, 0.5).unwrap();
    assert_eq!(ge.eval(0.0), 0.0);
    assert!((ge.eval(1.0) - 3.0).abs() < 1e-12);
    assert!(g_eps(&p2, 1.5).is_err());
    for g in battery() {
        let gt0 = g.g0().min(2.0);
        let gt1 = g.g1() + 1.0;
        for eps in [0.5, 0.125, 1.0 / 64.0] {
            let ge = g_eps(&g, eps).unwrap();
            for s in orlicz_core::math::logspace(1e-4, 1e4, 400) {
                let o = ge.indicator(s);
                assert!(
                    o >= gt0 - 1.0 - 1e-9 && o <= gt1 - 1.0 + 1e-9,
                    "{} ε={eps} s={s} O={o}",
                    g.label()
                );
                if s >= 1.0 {
                    assert!(ge.eval(s) >= g.eval(s) / 2.0);
                }
            }
        }
    }
}

#[test]
fn mollified_ratio_sweep() {
    let p2 = make_power_law(2.0).unwrap();
    for eps in [0.25, 1.0 / 16.0] {
        for s in [0.0, 3.0 * eps, 10.0] {
            assert!((mollified_ratio(&p2, &[s, 0.0], eps).unwrap() - 1.0).abs() < 1e-10);
        }
    }
    let osc = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let mut c: f64 = 1.0;
    let mut all = Vec::new();
    for eps in [0.25, 1.0 / 16.0, 1.0 / 64.0] {
        for k in [0.0, 1.0, 10.0, 100.0] {
            let rho = mollified_ratio(&osc, &[k * eps, 0.0], eps).unwrap();
            c = c.max(rho).max(1.0 / rho);
            all.push(rho);
        }
    }
    // Large |ξ| compared with ε: |ξ - εη| ≥ (|ξ| + ε)/3.
    let bound = 3f64.powf(osc.g1() - 1.0);
    assert!(c <= bound, "C = {c}, ratios {all:?}");
    for eps in [0.25, 1.0 / 16.0, 1.0 / 64.0] {
        for k in [0.0, 1.0, 10.0, 100.0] {
            assert!(
                mollified_ratio_margin(&osc, &[k * eps, 0.0], eps, c)
                    .unwrap()
                    .pass
            );
        }
    }
    assert!(mollified_ratio(&osc, &[0.0; 4], 0.1).is_err());
    assert!(mollified_ratio(&osc, &[0.0, 0.0], 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_field_is_odd_and_radial(x in -50.0f64..50.0, y in -50.0f64..50.0, i in 0usize..4) {
        let f = ModelField::with_sharp_constants(battery()[i].clone(), 2).unwrap();
        let a = f.apply(&[x, y]);
        let b = f.apply(&[-x, -y]);
        prop_assert!((a[0] + b[0]).abs() <= 1e-12 * a[0].abs().max(1.0));
        prop_assert!((a[1] + b[1]).abs() <= 1e-12 * a[1].abs().max(1.0));
        // A(ξ) ∥ ξ with length g(|ξ|).
        prop_assert!((a[0] * y - a[1] * x).abs() <= 1e-9 * norm(&a).max(1.0) * norm(&[x, y]).max(1.0));
        let s = norm(&[x, y]);
        prop_assert!((norm(&a) - f.structure().eval(s)).abs() <= 1e-12 * norm(&a).max(1.0));
    }

    #[test]
    fn model_monotonicity_with_unit_constant(
        x1 in -20.0f64..20.0, y1 in -20.0f64..20.0, x2 in -20.0f64..20.0, y2 in -20.0f64..20.0, i in 0usize..4,
    ) {
        // A fixed constant below every calibrated c_m of the battery.
        let f = ModelField::with_sharp_constants(battery()[i].clone(), 2).unwrap();
        prop_assume!(norm(&[x1, y1]) + norm(&[x2, y2]) > 0.0);
        let r = monotonicity_margin(&f, &[x1, y1], &[x2, y2], 0.05).unwrap();
        prop_assert!(r.pass);
    }
}
