//! Named checks: each turns a [`Plan`] (and the shared solution, if it needs
//! one) into a margin report plus an optional table.

use std::sync::Arc;

use orlicz_core::field::VectorField;
use orlicz_core::geometry::ParabolicPoint;
use orlicz_core::math::logspace;
use orlicz_core::orlicz::{
    check_invariants, conjugate_bound_margin, delta2_margin, eval_vg, invert_vg, young_gap,
    OrliczFunction, StructureFunction, VgMap,
};
use orlicz_core::solver::{continuation_with_field, interior_region, DiscreteSolution, GridParams};
use orlicz_core::verify::{
    barrier_corner_check, barrier_initial_check, barrier_lateral_check, barrier_m_min,
    boundary_modulus_measure, comparison_with_barrier, flat_unit_configuration, lip_half_seminorm,
    lipschitz_estimate_check, reduction_delta, BarrierGrid, BarrierReport, ModulusSettings,
};
use orlicz_core::MarginReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Plan;
use crate::error::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckInfo {
    pub name: &'static str,
    pub anchor: &'static str,
    pub needs_solution: bool,
}

pub const CHECKS: &[CheckInfo] = &[
    CheckInfo {
        name: "orlicz-invariants",
        anchor: "structure-function invariants: indicator, doubling, Young, conjugate, V_g",
        needs_solution: false,
    },
    CheckInfo {
        name: "max-principle",
        anchor: "discrete maximum principle",
        needs_solution: true,
    },
    CheckInfo {
        name: "exact-error",
        anchor: "relative max error against the exact solution",
        needs_solution: true,
    },
    CheckInfo {
        name: "continuation",
        anchor: "convergence of the regularized solutions",
        needs_solution: false,
    },
    CheckInfo {
        name: "lipschitz",
        anchor: "local gradient bound",
        needs_solution: true,
    },
    CheckInfo {
        name: "lip-half",
        anchor: "Lip(1,1/2) seminorm",
        needs_solution: true,
    },
    CheckInfo {
        name: "barrier-lateral",
        anchor: "lateral barrier supersolution",
        needs_solution: false,
    },
    CheckInfo {
        name: "barrier-corner",
        anchor: "corner barrier supersolution",
        needs_solution: false,
    },
    CheckInfo {
        name: "barrier-initial",
        anchor: "initial barrier supersolution",
        needs_solution: false,
    },
    CheckInfo {
        name: "oscillation-reduction",
        anchor: "one-step boundary oscillation reduction",
        needs_solution: false,
    },
    CheckInfo {
        name: "boundary-modulus",
        anchor: "boundary modulus of continuity",
        needs_solution: true,
    },
];

pub fn lookup(name: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.name == name)
}

/// Rows of floats under a header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub report: MarginReport,
    pub hypothesis_violation: bool,
    pub table: Option<Table>,
}

impl CheckOutcome {
    fn plain(name: &str, report: MarginReport) -> Self {
        Self {
            name: name.to_string(),
            report,
            hypothesis_violation: false,
            table: None,
        }
    }

    fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }
}

/// Runs `name` against the plan. `solution` must be present for checks that
/// need one.
pub fn run_check(
    name: &str,
    plan: &Plan,
    solution: Option<&DiscreteSolution>,
) -> Result<CheckOutcome, LabError> {
    let info = lookup(name)
        .ok_or_else(|| LabError::Config(format!("unknown check '{name}' (see --list-checks)")))?;
    let need = || solution.ok_or_else(|| LabError::Config(format!("check '{name}' needs a solve")));
    let mut out = match info.name {
        "orlicz-invariants" => orlicz_invariants(
            &plan.structure,
            plan.seed,
            plan.config.params.samples.unwrap_or(1000),
        ),
        "max-principle" => max_principle(need()?),
        "exact-error" => exact_error(plan, need()?)?,
        "continuation" => continuation(plan)?,
        "lipschitz" => lipschitz(plan, need()?)?,
        "lip-half" => {
            let region = interior_region(plan.domain()?);
            CheckOutcome::plain(name, lip_half_seminorm(need()?, &region)?)
        }
        "barrier-lateral" | "barrier-corner" | "barrier-initial" => barrier(plan, info.name)?,
        "oscillation-reduction" => oscillation_reduction(plan)?,
        "boundary-modulus" => boundary_modulus(plan, need()?)?,
        _ => unreachable!("registry and dispatch disagree on {name}"),
    };
    out.report.anchor = info.anchor.to_string();
    out.report.provenance.config_hash = plan.hash.clone();
    out.report.provenance.seed = plan.seed;
    Ok(out)
}

/// The invariant battery on `[1e-4, 1e4]` (1000 log-spaced points) and on
/// `samples` seeded random Young pairs.
pub fn orlicz_invariants(f: &StructureFunction, seed: u64, samples: usize) -> CheckOutcome {
    let big = OrliczFunction::new(f.clone());
    let vg = VgMap::new(f.clone());
    let grid = logspace(1e-4, 1e4, 1000);
    let mut parts = Vec::new();

    let structural = check_invariants(f, 1e-4, 1e4, 1000, 1e-9);
    let mut r = MarginReport::new(
        "indicator",
        "indicator within its indices",
        if structural.is_ok() { 0.0 } else { 1.0 },
        0.0,
        0.0,
    );
    if let Err(e) = structural {
        r = r.with_note(e);
    }
    parts.push(r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap = f64::INFINITY;
    for _ in 0..samples {
        let s = 10f64.powf(rng.gen_range(-4.0..4.0));
        let t = 10f64.powf(rng.gen_range(-4.0..4.0));
        worst_gap = worst_gap.min(young_gap(&big, s, t));
    }
    parts.push(MarginReport::new(
        "young-gap",
        "Young inequality",
        -worst_gap,
        0.0,
        1e-9,
    ));

    let mut rows = Vec::with_capacity(grid.len());
    let mut worst_conj = f64::INFINITY;
    let mut worst_vg: f64 = 0.0;
    let mut worst_d2: Option<MarginReport> = None;
    for (i, &s) in grid.iter().enumerate() {
        let alpha = grid[(i * 7919) % grid.len()].sqrt();
        let d2 = delta2_margin(&big, alpha, s);
        if worst_d2.as_ref().map_or(true, |w| d2.slack() < w.slack()) {
            worst_d2 = Some(d2);
        }
        let big_s = big.eval(s);
        let conj = conjugate_bound_margin(&big, s);
        worst_conj = worst_conj.min(conj / big_s);
        let xi = [0.6 * s, -0.8 * s];
        let back = invert_vg(&vg, &eval_vg(&vg, &xi));
        worst_vg = worst_vg.max((back[0] - xi[0]).abs().max((back[1] - xi[1]).abs()) / s.max(1.0));
        rows.push(vec![s, f.eval(s), big_s, f.indicator(s), conj]);
    }
    parts.push(worst_d2.expect("nonempty grid"));
    parts.push(MarginReport::new(
        "conjugate-bound",
        "G(r) ≥ G̃(G(r)/r), relative",
        -worst_conj,
        0.0,
        1e-9,
    ));
    parts.push(MarginReport::new(
        "vg-round-trip",
        "V_g inverse round trip",
        worst_vg,
        1e-9,
        0.0,
    ));
    if f.is_normalized() {
        parts.push(MarginReport::new(
            "normalization",
            "G(1) = 1",
            (big.eval(1.0) - 1.0).abs(),
            1e-8,
            0.0,
        ));
    }
    let table = Table {
        name: "orlicz".into(),
        header: ["s", "g", "G", "indicator", "conjugate_margin"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    let names: Vec<String> = parts
        .iter()
        .map(|p| format!("{}: {:.3e}", p.name, p.slack()))
        .collect();
    let report =
        MarginReport::worst("orlicz-invariants", "", parts).with_note(format!("slacks {names:?}"));
    CheckOutcome::plain("orlicz-invariants", report).with_table(table)
}

fn max_principle(u: &DiscreteSolution) -> CheckOutcome {
    let report = match u.max_principle() {
        Some(mp) => MarginReport::new("max-principle", "", mp.violation, 0.0, 1e-12)
            .with_note(format!("boundary range [{}, {}]", mp.lower, mp.upper)),
        None => MarginReport::new("max-principle", "", 1.0, 0.0, 0.0)
            .with_note("solution carries no maximum-principle record"),
    };
    CheckOutcome::plain("max-principle", report)
}

fn exact_error(plan: &Plan, u: &DiscreteSolution) -> Result<CheckOutcome, LabError> {
    let exact = plan
        .exact
        .as_ref()
        .ok_or_else(|| LabError::Config("exact-error needs boundary.exact".into()))?;
    let tol = plan.config.params.error_tol.unwrap_or(1e-2);
    let grid = u.grid();
    let t = *u.slice_times().last().expect("a solution has slices");
    let mut rows = Vec::with_capacity(grid.node_count());
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for i in 0..grid.node_count() {
        let x = grid.node(i);
        let want = exact.eval(&x, t);
        let got = u.final_slice()[i];
        err = err.max((got - want).abs());
        scale = scale.max(want.abs());
        let mut row = x;
        row.extend([got, want, got - want]);
        rows.push(row);
    }
    let rel = if scale > 0.0 { err / scale } else { err };
    let mut header: Vec<String> = (1..=grid.dim()).map(|k| format!("x{k}")).collect();
    header.extend(["u", "exact", "error"].map(String::from));
    let report = MarginReport::new("exact-error", "", rel, tol, 0.0)
        .with_note(format!("t = {t}, absolute {err:.6e}"));
    Ok(
        CheckOutcome::plain("exact-error", report).with_table(Table {
            name: "exact_error".into(),
            header,
            rows,
        }),
    )
}

fn continuation(plan: &Plan) -> Result<CheckOutcome, LabError> {
    let dom = plan.domain()?;
    let j_max = plan.config.field.j_max.unwrap_or(5);
    let slack = plan.config.params.slack.unwrap_or(0.1);
    let base = Arc::new(plan.model_field(dom.dim())?);
    let out = continuation_with_field(base, dom, plan.boundary()?, j_max, plan.grid_params()?)?;
    let r = &out.report;
    let rows = (0..r.sup_gaps.len())
        .map(|k| {
            vec![
                (k + 1) as f64,
                r.schedule[k],
                r.sup_gaps[k],
                r.grad_gaps[k],
                r.vg_cauchy[k],
            ]
        })
        .collect();
    let table = Table {
        name: "convergence".into(),
        header: ["j", "eps", "sup_gap", "gradient_gap", "vg_cauchy"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    Ok(CheckOutcome::plain("continuation", r.contract(slack)).with_table(table))
}

fn default_center(plan: &Plan) -> Result<ParabolicPoint, LabError> {
    let dom = plan.domain()?;
    let x = match &plan.config.params.center {
        Some(c) => c.clone(),
        None => dom
            .lower
            .iter()
            .zip(&dom.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect(),
    };
    Ok(ParabolicPoint::new(
        &x,
        plan.config.params.center_t.unwrap_or(dom.t_final),
    ))
}

fn lipschitz(plan: &Plan, u: &DiscreteSolution) -> Result<CheckOutcome, LabError> {
    let dom = plan.domain()?;
    let width = dom
        .lower
        .iter()
        .zip(&dom.upper)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    let radii = plan
        .config
        .params
        .radii
        .clone()
        .unwrap_or_else(|| vec![width / 8.0, width / 16.0]);
    let f = plan.structure.with_dimension(dom.dim());
    let est = lipschitz_estimate_check(u, &default_center(plan)?, &radii, &f)?;
    let rows = est.ratios.iter().map(|&(r, q)| vec![r, q]).collect();
    let table = Table {
        name: "lipschitz".into(),
        header: vec!["radius".into(), "ratio".into()],
        rows,
    };
    Ok(CheckOutcome::plain("lipschitz", est.report).with_table(table))
}

/// The barrier constant: `params.barrier_m`, else `4 M_min`.
pub fn barrier_m(plan: &Plan, n: usize, nu: f64, ell: f64) -> f64 {
    plan.config
        .params
        .barrier_m
        .unwrap_or_else(|| 4.0 * barrier_m_min(n, nu, ell))
}

pub fn barrier_grid(plan: &Plan) -> BarrierGrid {
    match plan.config.params.barrier_points {
        Some([tangential, normal, time]) => BarrierGrid {
            tangential,
            normal,
            time,
        },
        None => BarrierGrid::default(),
    }
}

fn barrier(plan: &Plan, which: &str) -> Result<CheckOutcome, LabError> {
    let n = plan.domain.as_ref().map_or(2, |d| d.dim());
    let field = plan.model_field(n)?;
    let m = barrier_m(plan, n, field.nu(), field.ell());
    let grid = barrier_grid(plan);
    let rep = match which {
        "barrier-lateral" => barrier_lateral_check(&field, m, &grid)?,
        "barrier-corner" => barrier_corner_check(&field, m, &grid)?,
        _ => barrier_initial_check(&field, &grid)?,
    };
    let table = barrier_table(which, &rep, n);
    Ok(CheckOutcome::plain(which, rep.report).with_table(table))
}

pub fn barrier_table(which: &str, rep: &BarrierReport, n: usize) -> Table {
    let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    header.extend(["t", "residual"].map(String::from));
    let rows = rep
        .samples
        .iter()
        .map(|s| {
            let mut row = s.x.clone();
            row.extend([s.t, s.residual]);
            row
        })
        .collect();
    Table {
        name: which.replace('-', "_"),
        header,
        rows,
    }
}

fn oscillation_reduction(plan: &Plan) -> Result<CheckOutcome, LabError> {
    let n = plan.dim()?;
    if n < 2 {
        return Err(LabError::Config("oscillation-reduction needs n ≥ 2".into()));
    }
    let field = plan.model_field(n)?;
    let m = barrier_m(plan, n, field.nu(), field.ell());
    let kappa = plan.config.params.kappa.unwrap_or(1.0);
    let r = plan.config.params.radius.unwrap_or(0.5);
    let g = OrliczFunction::new(plan.structure.with_dimension(n));
    let h = plan.params.as_ref().map_or(r / 16.0, |p| p.h);
    let params = plan.params.clone().unwrap_or_else(|| GridParams::new(h));
    let (_, bar) =
        flat_unit_configuration(&field, &g, plan.boundary()?, kappa, r, &params, 1.0 / 16.0)?;
    let red = comparison_with_barrier(&bar, m, None)?;
    let mut report = red.summary();
    report.pass = red.passed();
    for hyp in &red.hypotheses {
        report.notes.push(format!(
            "{}: {:.6e} ≤ {:.6e} ({})",
            hyp.name,
            hyp.lhs,
            hyp.rhs,
            if hyp.pass { "holds" } else { "violated" }
        ));
    }
    Ok(CheckOutcome {
        name: "oscillation-reduction".into(),
        report,
        hypothesis_violation: red.hypothesis_violation,
        table: None,
    })
}

fn boundary_modulus(plan: &Plan, u: &DiscreteSolution) -> Result<CheckOutcome, LabError> {
    let dom = plan.domain()?;
    let n = dom.dim();
    let field = plan.model_field(n)?;
    let m = barrier_m(plan, n, field.nu(), field.ell());
    let z0 = match &plan.config.params.center {
        Some(c) => ParabolicPoint::new(c, plan.config.params.center_t.unwrap_or(dom.t_final)),
        None => {
            let mut x: Vec<f64> = dom
                .lower
                .iter()
                .zip(&dom.upper)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            x[n - 1] = dom.lower[n - 1];
            ParabolicPoint::new(&x, dom.t_final)
        }
    };
    let psi_sup = u
        .max_principle()
        .map_or(1.0, |mp| mp.lower.abs().max(mp.upper.abs()));
    let mut settings = ModulusSettings::default();
    if let Some(r) = plan.config.params.radius {
        settings.r0 = r;
    }
    let f = plan.structure.with_dimension(n);
    let bm = boundary_modulus_measure(u, &z0, &f, psi_sup, reduction_delta(m), &settings)?;
    let rows = bm.nested.iter().map(|&(rho, osc)| vec![rho, osc]).collect();
    let table = Table {
        name: "modulus".into(),
        header: vec!["rho".into(), "oscillation".into()],
        rows,
    };
    Ok(CheckOutcome::plain("boundary-modulus", bm.summary()).with_table(table))
}
