//! The ten acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line before asserting.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use orlicz_core::field::*;
use orlicz_core::geometry::*;
use orlicz_core::math::logspace;
use orlicz_core::orlicz::*;
use orlicz_core::solver::*;
use orlicz_core::verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, pass: bool, detail: impl AsRef<str>) {
    println!(
        "{} criterion {n:2}: {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(pass, "criterion {n} failed: {}", detail.as_ref());
}

fn battery() -> Vec<StructureFunction> {
    vec![
        make_power_law(1.5).unwrap(),
        make_power_law(2.0).unwrap(),
        make_power_law(3.0).unwrap(),
        make_oscillating_example(1.5, 3.0, 2).unwrap(),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn criterion_01_orlicz_battery() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for f in battery() {
        let label = f.label();
        if let Err(e) = check_invariants(&f, 1e-4, 1e4, 1000, 1e-9) {
            failures.push(format!("{label}: {e}"));
        }
        let big = OrliczFunction::new(f.clone());
        let vg = VgMap::new(f.clone());
        let grid = logspace(1e-4, 1e4, 1000);
        for (i, &s) in grid.iter().enumerate() {
            let r = grid[(i * 7919) % grid.len()];
            let gap = young_gap(&big, s, r);
            if gap < -1e-9 {
                failures.push(format!("{label}: young gap {gap} at ({s}, {r})"));
            }
            let d2 = delta2_margin(&big, r.sqrt(), s);
            if !d2.pass {
                failures.push(format!(
                    "{label}: doubling margin {} at ({}, {s})",
                    d2.margin,
                    r.sqrt()
                ));
            }
            let cb = conjugate_bound_margin(&big, s);
            if cb < -1e-9 * big.eval(s) {
                failures.push(format!("{label}: conjugate bound {cb} at {s}"));
            }
            let xi = [0.6 * s, -0.8 * s];
            let back = invert_vg(&vg, &eval_vg(&vg, &xi));
            let err = ((back[0] - xi[0]).abs()).max((back[1] - xi[1]).abs()) / s.max(1.0);
            if err > 1e-9 {
                failures.push(format!("{label}: V_g round trip {err} at {s}"));
            }
        }
        let one = big.eval(1.0);
        if (one - 1.0).abs() > 1e-8 {
            failures.push(format!("{label}: G(1) = {one}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        failures.push(format!("runtime {secs:.2} s"));
    }
    verdict(
        1,
        failures.is_empty(),
        format!("Orlicz invariants on 1000-point log grids in {secs:.2} s {failures:?}"),
    );
}

#[test]
fn criterion_02_power_law_closed_forms() {
    let mut worst: f64 = 0.0;
    let mut track = |what: &str, p: f64, got: f64, want: f64| {
        let e = rel(got, want);
        if e > 1e-10 {
            println!("  p = {p}: {what} off by {e:.3e} ({got} vs {want})");
        }
        worst = worst.max(e);
    };
    for p in [1.5, 2.0, 3.0, 4.5] {
        let f = make_power_law(p).unwrap();
        let big = OrliczFunction::new(f.clone());
        let conj = YoungConjugate::new(big.clone());
        let vg = VgMap::new(f.clone());
        let field = ModelField::with_sharp_constants(f.clone(), 2).unwrap();
        for s in logspace(1e-3, 1e3, 61) {
            track("g", p, f.eval(s), p * s.powf(p - 1.0));
            track("G", p, big.eval(s), s.powf(p));
            track("g'", p, f.derivative(s), p * (p - 1.0) * s.powf(p - 2.0));
            track("indicator", p, f.indicator(s), p - 1.0);
            track(
                "g^-1",
                p,
                invert_g(&f, s).unwrap(),
                (s / p).powf(1.0 / (p - 1.0)),
            );
            track("G^-1", p, big.invert(s), s.powf(1.0 / p));
            let gt = (p - 1.0) / p * p.powf(-1.0 / (p - 1.0)) * s.powf(p / (p - 1.0));
            track("G~", p, conj.eval(s), gt);
            track(
                "young equality",
                p,
                big.eval(s) + conj.eval(f.eval(s)),
                s * f.eval(s),
            );
            let xi = [0.6 * s, -0.8 * s];
            let k = p.sqrt() * s.powf((p - 2.0) / 2.0);
            let v = vg.eval(&xi);
            track("V_g", p, v[0], k * xi[0]);
            track("V_g", p, v[1], k * xi[1]);
            let back = vg.invert(&v);
            track("V_g^-1", p, back[0], xi[0]);
            track("V_g^-1", p, back[1], xi[1]);
            let a = field.apply(&xi);
            track("A", p, a[0], p * s.powf(p - 2.0) * xi[0]);
            track("A", p, a[1], p * s.powf(p - 2.0) * xi[1]);
            let d2 = delta2_margin(&big, 2.0, s);
            track("doubling", p, big.eval(2.0 * s), 2f64.powf(p) * big.eval(s));
            track(
                "doubling margin",
                p,
                1.0 + d2.margin.abs() / big.eval(2.0 * s),
                1.0,
            );
            let dt = s.min(10.0);
            let d = dist_par_G(
                &big,
                &ParabolicPoint::new(&[0.0], 0.0),
                &ParabolicPoint::new(&[0.0], dt),
            );
            track("dist_par_G", p, d, dt.powf(1.0 / p));
            track(
                "natural depth",
                p,
                CylinderDescriptor::natural(&big, ParabolicPoint::origin(2), s)
                    .unwrap()
                    .depth,
                s.powf(p),
            );
            let scaled =
                CylinderDescriptor::scaled(&big, ParabolicPoint::origin(2), s, 0.5).unwrap();
            track("scaled depth", p, scaled.depth, 0.25 * (s / 0.5).powf(p));
            let lambda = 1.0 + s;
            let q = intrinsic_cylinder(&f, ParabolicPoint::origin(2), 1.0, lambda).unwrap();
            if let CylinderKind::Intrinsic { theta, .. } = q.kind {
                track("intrinsic theta", p, theta, p * lambda.powf(p - 2.0));
            }
            let rescaled = rescale_structure(&f, 0.5, 0.25).unwrap();
            track("rescaled g", p, rescaled.eval(s), p * s.powf(p - 1.0));
            for eps in [0.5, 1.0 / 64.0] {
                let ge = g_eps(&f, eps).unwrap();
                let want = p * (s + eps).powf(p - 2.0) * s + eps * (1.0 + s).powf(p - 1.0) * s;
                track("g_eps", p, ge.eval(s), want);
            }
        }
    }
    verdict(
        2,
        worst <= 1e-10,
        format!("power-law closed forms, worst relative error {worst:.3e}"),
    );
}

fn heat_error(h: f64) -> f64 {
    let field =
        ModelField::new(make_power_law(2.0).unwrap().with_factor(1.0), 1, 1.0, 1.0).unwrap();
    let dom = RectDomain::unit(1, 0.1).unwrap();
    let psi = BoundaryDatum::new("sin", |x, t| if t == 0.0 { (PI * x[0]).sin() } else { 0.0 });
    let u = solve_cauchy_dirichlet(&field, &dom, &psi, &GridParams::new(h)).unwrap();
    let g = u.grid();
    let decay = (-PI * PI * 0.1).exp();
    let err = (0..g.node_count())
        .map(|i| (u.final_slice()[i] - decay * (PI * g.node(i)[0]).sin()).abs())
        .fold(0.0, f64::max);
    err / decay
}

#[test]
fn criterion_03_heat_oracle() {
    let start = Instant::now();
    let errs: Vec<f64> = [16.0, 32.0, 64.0]
        .iter()
        .map(|&k| heat_error(1.0 / k))
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = errs[2] <= 1e-2 && orders.iter().all(|&o| o >= 1.8) && secs < 30.0;
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    verdict(
        3,
        pass,
        format!("heat errors {shown:?}, orders {orders:.3?}, {secs:.2} s"),
    );
}

fn random_pair(rng: &mut ChaCha8Rng) -> (BoundaryDatum, BoundaryDatum) {
    let amp: [f64; 3] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.3..0.3),
    ];
    let slope = rng.gen_range(-1.0..1.0);
    let drift = rng.gen_range(-2.0..2.0);
    let lift = rng.gen_range(0.0..0.5);
    let bump = rng.gen_range(0.0..0.5);
    let base = move |x: &[f64], t: f64| {
        let mut v = slope * x[0] + drift * t;
        for (k, a) in amp.iter().enumerate() {
            let m = (k + 1) as f64;
            v += a
                * (m * PI * x[0]).sin()
                * if x.len() > 1 {
                    (m * PI * x[1]).cos()
                } else {
                    1.0
                };
        }
        v
    };
    let lo = BoundaryDatum::new("lo", base);
    let hi = BoundaryDatum::new("hi", move |x, t| {
        let w: f64 = x.iter().map(|y| y * (1.0 - y)).product();
        base(x, t) + lift + bump * w
    });
    (lo, hi)
}

#[test]
fn criterion_04_comparison_and_max_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_cmp: f64 = 0.0;
    let mut worst_mp: f64 = 0.0;
    let mut cases: Vec<(String, Box<dyn VectorField>, RectDomain, f64)> = Vec::new();
    for f in battery() {
        let base = ModelField::with_sharp_constants(f.with_dimension(1), 1).unwrap();
        let field: Box<dyn VectorField> = if f.g1() < 2.0 {
            Box::new(regularize(Arc::new(base), 0.125).unwrap())
        } else {
            Box::new(base)
        };
        cases.push((
            format!("{} n=1", f.label()),
            field,
            RectDomain::unit(1, 0.05).unwrap(),
            1.0 / 32.0,
        ));
    }
    let p2 = ModelField::with_sharp_constants(make_power_law(2.0).unwrap(), 2).unwrap();
    cases.push((
        "p=2 n=2".into(),
        Box::new(p2),
        RectDomain::unit(2, 0.02).unwrap(),
        1.0 / 16.0,
    ));
    for (label, field, dom, h) in &cases {
        let params = GridParams::new(*h);
        for _ in 0..20 {
            let (lo, hi) = random_pair(&mut rng);
            let fields: [&dyn VectorField; 2] = [field.as_ref(), field.as_ref()];
            let sols = solve_lockstep(&fields, dom, &[lo, hi], &params).unwrap();
            for s in &sols {
                worst_mp = worst_mp.max(s.max_principle().unwrap().violation);
            }
            for (a, b) in sols[0]
                .slices()
                .iter()
                .flatten()
                .zip(sols[1].slices().iter().flatten())
            {
                worst_cmp = worst_cmp.max(a - b);
            }
        }
        println!("  {label}: 20 pairs done");
    }
    let pass = worst_cmp <= 1e-12 && worst_mp <= 1e-12;
    verdict(
        4,
        pass,
        format!("comparison violation {worst_cmp:.3e}, max-principle violation {worst_mp:.3e}"),
    );
}

#[test]
fn criterion_05_regularization_uniformity() {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for f in battery() {
        let lo = f.g0().min(2.0) - 1.0;
        let hi = f.g1();
        let mut cs = Vec::new();
        for j in 1..=6 {
            let eps = 0.5f64.powi(j);
            let ge = g_eps(&f, eps).unwrap();
            for s in logspace(1e-4, 1e4, 1000) {
                let o = ge.indicator(s);
                if o < lo - 1e-9 || o > hi + 1e-9 {
                    failures.push(format!(
                        "{}: indicator {o} at s = {s}, eps = {eps}",
                        f.label()
                    ));
                    break;
                }
            }
            let mut c: f64 = 1.0;
            let radii = [0.0, 0.5 * eps, eps, 2.0 * eps, 10.0 * eps, 100.0 * eps]
                .into_iter()
                .chain(logspace(1e-3, 300.0, 300));
            for r in radii {
                let rho = mollified_ratio(&f, &[0.6 * r, 0.8 * r], eps).unwrap();
                c = c.max(rho.max(1.0 / rho));
            }
            cs.push(c);
        }
        let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
        let cmax = cs.iter().copied().fold(0.0, f64::max);
        let spread = cmax / cmin - 1.0;
        if spread > 0.05 {
            failures.push(format!("{}: C spread {spread:.4}", f.label()));
        }
        summary.push(format!("{} C by eps {cs:.4?}", f.label()));
    }
    verdict(
        5,
        failures.is_empty(),
        format!("regularization uniform over eps = 1/2..1/64: {summary:?} {failures:?}"),
    );
}

#[test]
fn criterion_06_continuation_convergence() {
    let start = Instant::now();
    let f = make_oscillating_example(1.5, 3.0, 2).unwrap();
    let dom = RectDomain::unit(1, 0.1).unwrap();
    let psi = BoundaryDatum::new("sin", |x, _| 1.5 * (PI * x[0]).sin());
    let out = epsilon_continuation(&f, &dom, &psi, 5, &GridParams::new(1.0 / 32.0)).unwrap();
    let r = &out.report;
    let contract = r.contract(0.1);
    let secs = start.elapsed().as_secs_f64();
    let pass = contract.pass && r.failure.is_none() && secs < 300.0;
    verdict(
        6,
        pass,
        format!(
            "sup gaps {:.3?}, gradient gaps {:.3?}, V_g Cauchy {:.3?}, {secs:.1} s",
            r.sup_gaps, r.grad_gaps, r.vg_cauchy
        ),
    );
}

#[test]
fn criterion_07_lipschitz_stability() {
    let dom = RectDomain::unit(1, 0.1).unwrap();
    let psi = BoundaryDatum::new("sin", |x, _| 1.5 * (PI * x[0]).sin());
    let z0 = ParabolicPoint::new(&[0.5], 0.1);
    let radii = [0.125, 0.0625];
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for f in battery() {
        let f1 = f.with_dimension(1);
        let out = epsilon_continuation(&f, &dom, &psi, 5, &GridParams::new(1.0 / 32.0)).unwrap();
        let tail: Vec<f64> = out.solutions[2..]
            .iter()
            .map(|u| {
                lipschitz_estimate_check(u, &z0, &radii, &f1)
                    .unwrap()
                    .max_ratio()
            })
            .collect();
        let base: Arc<dyn VectorField> =
            Arc::new(ModelField::with_sharp_constants(f1.clone(), 1).unwrap());
        let fld = regularize(base, 1.0 / 32.0).unwrap();
        let fine = solve_cauchy_dirichlet(&fld, &dom, &psi, &GridParams::new(1.0 / 64.0)).unwrap();
        let refined = lipschitz_estimate_check(&fine, &z0, &radii, &f1)
            .unwrap()
            .max_ratio();
        let reference = *tail.last().unwrap();
        let mut values = tail.clone();
        values.push(refined);
        let m = stability_margin(
            "lipschitz-stability",
            "gradient bound ratio across refinement",
            &values,
            reference,
            0.25,
        );
        if !m.pass {
            failures.push(format!("{}: spread {:.3}", f.label(), m.lhs));
        }
        summary.push(format!(
            "{} tail {tail:.3?} refined {refined:.3}",
            f.label()
        ));
    }
    verdict(
        7,
        failures.is_empty(),
        format!("Lipschitz ratios within 25%: {summary:?} {failures:?}"),
    );
}

#[test]
fn criterion_08_barrier_residuals() {
    let start = Instant::now();
    let grid = BarrierGrid::default();
    let mut failures = Vec::new();
    for f in battery() {
        let field = ModelField::with_sharp_constants(f.clone(), 2).unwrap();
        let m = 4.0 * barrier_m_min(2, field.nu(), field.ell());
        let checks = [
            ("lateral", barrier_lateral_check(&field, m, &grid).unwrap()),
            ("corner", barrier_corner_check(&field, m, &grid).unwrap()),
            ("initial", barrier_initial_check(&field, &grid).unwrap()),
        ];
        for (name, rep) in &checks {
            let worst = rep
                .worst_sample()
                .map(|s| s.residual)
                .unwrap_or(f64::NEG_INFINITY);
            if worst < -1e-8 {
                let at = rep.worst_sample().map(|s| (s.x.clone(), s.t));
                failures.push(format!(
                    "{} {name}: residual {worst:.4e} at {at:?}",
                    f.label()
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1} s"));
    }
    verdict(
        8,
        failures.is_empty(),
        format!("barrier residuals >= -1e-8 with M = 4 M_min in {secs:.1} s {failures:?}"),
    );
}

fn reduction_case(f: StructureFunction, kappa: f64, r: f64) -> (bool, String) {
    let fld = ModelField::with_sharp_constants(f.clone(), 2).unwrap();
    let m = 4.0 * barrier_m_min(2, fld.nu(), fld.ell());
    let psi = BoundaryDatum::new("ramp", move |x, _| {
        kappa * 0.9 * (x[1] / r) * (1.0 + x[0] / r) / 2.0
    });
    let g = OrliczFunction::new(f.clone());
    let (_, bar) = flat_unit_configuration(
        &fld,
        &g,
        &psi,
        kappa,
        r,
        &GridParams::new(r / 16.0),
        1.0 / 16.0,
    )
    .unwrap();
    let red = comparison_with_barrier(&bar, m, None).unwrap();
    let shrunken: Vec<String> = red
        .shrunken
        .iter()
        .map(|r| format!("{:.3e} <= {:.3e}", r.lhs, r.rhs))
        .collect();
    let detail = format!(
        "{}: hypotheses {}, shrunken {shrunken:?}, osc {:.3e} <= {:.3e}",
        f.label(),
        if red.hypothesis_violation {
            "violated"
        } else {
            "hold"
        },
        red.oscillation.lhs,
        red.oscillation.rhs
    );
    (red.passed(), detail)
}

#[test]
fn criterion_09_oscillation_reduction() {
    let heat = reduction_case(make_power_law(2.0).unwrap(), 1.0, 0.5);
    let osc = reduction_case(make_oscillating_example(1.5, 3.0, 2).unwrap(), 0.5, 0.5);
    verdict(
        9,
        heat.0 && osc.0,
        format!("oscillation reduction [{}] [{}]", heat.1, osc.1),
    );
}

#[test]
fn criterion_10_boundary_modulus() {
    let f = make_power_law(2.0).unwrap();
    let fld = ModelField::with_sharp_constants(f.clone(), 2).unwrap();
    let dom = RectDomain::new(&[-1.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
    let psi = BoundaryDatum::new("holder", |x, _| x[0].abs().sqrt());
    let u = solve_cauchy_dirichlet(&fld, &dom, &psi, &GridParams::new(1.0 / 32.0)).unwrap();
    let delta = reduction_delta(4.0 * barrier_m_min(2, fld.nu(), fld.ell()));
    let bm = boundary_modulus_measure(
        &u,
        &ParabolicPoint::new(&[0.0, 0.0], 0.25),
        &f,
        1.0,
        delta,
        &ModulusSettings::default(),
    )
    .unwrap();
    let pass = bm.passed() && bm.gamma > 0.0 && bm.r_squared >= 0.95;
    verdict(
        10,
        pass,
        format!(
            "boundary modulus gamma' = {:.4}, C = {:.4}, R^2 = {:.4}",
            bm.gamma, bm.c, bm.r_squared
        ),
    );
}
