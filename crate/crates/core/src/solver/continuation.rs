use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    discrete_gradient, solve_lockstep, BoundaryDatum, DiscreteSolution, GridParams, RectDomain,
};
use crate::error::{Error, Result};
use crate::field::{regularize, ModelField, RegularizedField, VectorField};
use crate::geometry::{BoxRegion, Region};
use crate::math::{dist, exp2};
use crate::orlicz::{StructureFunction, VgMap};
use crate::report::MarginReport;

/// Gaps between consecutive iterates of the ε-continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `ε_j = 2^{-j}`, `j = 1..J`.
    pub schedule: Vec<f64>,
    /// `‖u_j - u_{j+1}‖_∞` over the whole space-time grid.
    pub sup_gaps: Vec<f64>,
    /// `‖Du_j - Du_{j+1}‖_∞` over faces in the interior region.
    pub grad_gaps: Vec<f64>,
    /// `∫_K |V_g(Du_j) - V_g(Du_{j+1})|²`.
    pub vg_cauchy: Vec<f64>,
    pub interior: BoxRegion,
    pub failure: Option<String>,
}

impl ConvergenceReport {
    /// Nonincreasing after the first step up to the factor `1 + slack`, and
    /// exactly nonincreasing on the first step.
    pub fn column_margin(name: &str, values: &[f64], slack: f64) -> MarginReport {
        let mut parts = Vec::new();
        for (m, w) in values.windows(2).enumerate() {
            let allowance = if m == 0 { 1.0 } else { 1.0 + slack };
            parts.push(
                MarginReport::new(
                    name,
                    "nonincreasing continuation gaps",
                    w[1],
                    allowance * w[0],
                    1e-14 * w[0].abs(),
                )
                .with_note(format!("step {} -> {}", m + 1, m + 2)),
            );
        }
        if parts.is_empty() {
            return MarginReport::new(name, "nonincreasing continuation gaps", 0.0, 0.0, 0.0);
        }
        MarginReport::worst(name, "nonincreasing continuation gaps", parts)
    }

    /// The three columns and the failure marker, reduced to one report.
    pub fn contract(&self, slack: f64) -> MarginReport {
        if let Some(reason) = &self.failure {
            return MarginReport::new(
                "continuation",
                "convergence of the regularized solutions",
                1.0,
                0.0,
                0.0,
            )
            .with_note(format!("failed: {reason}"));
        }
        MarginReport::worst(
            "continuation",
            "convergence of the regularized solutions",
            vec![
                Self::column_margin("sup-gap", &self.sup_gaps, slack),
                Self::column_margin("gradient-gap", &self.grad_gaps, slack),
                Self::column_margin("vg-cauchy", &self.vg_cauchy, slack),
            ],
        )
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    pub fields: Vec<RegularizedField>,
    pub solutions: Vec<DiscreteSolution>,
    pub report: ConvergenceReport,
}

/// The box shrunk by a quarter of each side, over the last three quarters of
/// the time interval.
pub fn interior_region(dom: &RectDomain) -> BoxRegion {
    let lower: Vec<f64> = dom
        .lower
        .iter()
        .zip(&dom.upper)
        .map(|(a, b)| a + 0.25 * (b - a))
        .collect();
    let upper: Vec<f64> = dom
        .lower
        .iter()
        .zip(&dom.upper)
        .map(|(a, b)| b - 0.25 * (b - a))
        .collect();
    BoxRegion {
        lower,
        upper,
        t_lo: dom.t0 + 0.25 * (dom.t_final - dom.t0),
        t_hi: dom.t_final,
    }
}

/// Solves with `A_{ε_j}` built over the model field of `f` (sharp constants)
/// for `ε_j = 2^{-j}`, `j = 1..j_max`, all on one grid and one time-step
/// sequence.
pub fn epsilon_continuation(
    f: &StructureFunction,
    dom: &RectDomain,
    psi: &BoundaryDatum,
    j_max: usize,
    params: &GridParams,
) -> Result<ContinuationOutcome> {
    let n = dom.dim();
    let base: Arc<dyn VectorField> =
        Arc::new(ModelField::with_sharp_constants(f.with_dimension(n), n)?);
    continuation_with_field(base, dom, psi, j_max, params)
}

/// As [`epsilon_continuation`] over an arbitrary base field.
pub fn continuation_with_field(
    base: Arc<dyn VectorField>,
    dom: &RectDomain,
    psi: &BoundaryDatum,
    j_max: usize,
    params: &GridParams,
) -> Result<ContinuationOutcome> {
    if j_max < 3 {
        return Err(Error::Config(format!(
            "continuation needs J ≥ 3, got {j_max}"
        )));
    }
    let schedule: Vec<f64> = (1..=j_max).map(|j| exp2(-(j as f64))).collect();
    let fields = schedule
        .iter()
        .map(|&e| regularize(base.clone(), e))
        .collect::<Result<Vec<_>>>()?;
    let interior = interior_region(dom);
    let refs: Vec<&dyn VectorField> = fields.iter().map(|f| f as &dyn VectorField).collect();
    let psis = vec![psi.clone(); fields.len()];
    let solutions = match solve_lockstep(&refs, dom, &psis, params) {
        Ok(s) => s,
        Err(e @ Error::Unstable { .. }) => {
            return Ok(ContinuationOutcome {
                fields,
                solutions: Vec::new(),
                report: ConvergenceReport {
                    schedule,
                    sup_gaps: Vec::new(),
                    grad_gaps: Vec::new(),
                    vg_cauchy: Vec::new(),
                    interior,
                    failure: Some(format!("{e}")),
                },
            })
        }
        Err(e) => return Err(e),
    };
    let vg = VgMap::new(base.structure().clone());
    let mut sup_gaps = Vec::new();
    let mut grad_gaps = Vec::new();
    let mut vg_cauchy = Vec::new();
    for pair in solutions.windows(2) {
        sup_gaps.push(pair[0].sup_distance(&pair[1])?);
        let (g, c) = gradient_gaps(&pair[0], &pair[1], &interior, &vg);
        grad_gaps.push(g);
        vg_cauchy.push(c);
    }
    Ok(ContinuationOutcome {
        fields,
        solutions,
        report: ConvergenceReport {
            schedule,
            sup_gaps,
            grad_gaps,
            vg_cauchy,
            interior,
            failure: None,
        },
    })
}

/// `(max |Du - Dv|, ∫ |V_g(Du) - V_g(Dv)|²)` over faces centred in `region`;
/// each face stands for `h^n/n` of volume, and time is integrated by the
/// trapezoid rule over the slices in the region.
fn gradient_gaps(
    a: &DiscreteSolution,
    b: &DiscreteSolution,
    region: &BoxRegion,
    vg: &VgMap,
) -> (f64, f64) {
    let grid = a.grid();
    let n = grid.dim();
    let cell = crate::math::pow(grid.h(), n as f64) / n as f64;
    let mut sup = 0.0f64;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, &t) in a.slice_times().iter().enumerate() {
        if t < region.t_lo || t > region.t_hi {
            continue;
        }
        let ga = discrete_gradient(a.slice(k), grid);
        let gb = discrete_gradient(b.slice(k), grid);
        let mut acc = 0.0;
        for axis in 0..n {
            for idx in 0..ga.len(axis) {
                let c = ga.face_center(grid, axis, idx);
                if !region.contains(&c, t) {
                    continue;
                }
                let da = ga.get(axis, idx);
                let db = gb.get(axis, idx);
                sup = sup.max(dist(da, db));
                let va = vg.eval(da);
                let vb = vg.eval(db);
                acc += cell
                    * va.iter()
                        .zip(&vb)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>();
            }
        }
        times.push(t);
        values.push(acc);
    }
    let integral = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    (sup, integral)
}
