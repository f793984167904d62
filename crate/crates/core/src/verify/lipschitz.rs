use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::geometry::{dist_par, CylinderDescriptor, ParabolicPoint, Region};
use crate::orlicz::StructureFunction;
use crate::report::MarginReport;
use crate::solver::{lipschitz_rhs, sup_gradient, DiscreteSolution};

/// Upper bound on the number of points compared pairwise by
/// [`lip_half_seminorm`].
pub const SEMINORM_POINTS: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    /// `(R, sup_{Q_R} |Du| / rhs(Q_{2R}))`.
    pub ratios: Vec<(f64, f64)>,
    pub report: MarginReport,
}

impl LipschitzEstimate {
    pub fn max_ratio(&self) -> f64 {
        self.ratios
            .iter()
            .map(|r| r.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The ratio of `sup |Du|` over the standard cylinder `Q_R(z0)` to the
/// gradient-bound right-hand side over `Q_{2R}(z0)`, for each `R`.
pub fn lipschitz_estimate_check(
    u: &DiscreteSolution,
    center: &ParabolicPoint,
    radii: &[f64],
    f: &StructureFunction,
) -> Result<LipschitzEstimate> {
    if radii.is_empty() {
        return Err(domain!("no radii given"));
    }
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let small = CylinderDescriptor::standard(center.clone(), r)?;
        let large = CylinderDescriptor::standard(center.clone(), 2.0 * r)?;
        let sup = sup_gradient(u, &small)?;
        let rhs = lipschitz_rhs(u, &large, f)?;
        ratios.push((r, sup / rhs));
    }
    let worst = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let report = MarginReport::new(
        "lipschitz-ratio",
        "local gradient bound",
        worst,
        f64::INFINITY,
        0.0,
    )
    .with_calibrated(worst)
    .with_note(format!("ratios {ratios:?}"));
    Ok(LipschitzEstimate { ratios, report })
}

/// `max |u(a) - u(b)| / dist_par(a, b)` over pairs of stored nodes in
/// `region`; slices and nodes are thinned evenly until at most
/// [`SEMINORM_POINTS`] remain.
pub fn lip_half_seminorm(u: &DiscreteSolution, region: &dyn Region) -> Result<MarginReport> {
    let grid = u.grid();
    let times = u.slice_times();
    let slice_ids: Vec<usize> = (0..times.len())
        .filter(|&k| {
            let (lo, hi) = region.time_range();
            times[k] >= lo && times[k] <= hi
        })
        .collect();
    let node_ids: Vec<usize> = (0..grid.node_count())
        .filter(|&i| {
            let x = grid.node(i);
            slice_ids.iter().any(|&k| region.contains(&x, times[k]))
        })
        .collect();
    if slice_ids.is_empty() || node_ids.is_empty() {
        return Err(domain!("region contains no stored node"));
    }
    let max_slices = (SEMINORM_POINTS / node_ids.len()).clamp(2, slice_ids.len().max(2));
    let slice_stride = slice_ids.len().div_ceil(max_slices).max(1);
    let mut picked_slices: Vec<usize> = slice_ids.iter().copied().step_by(slice_stride).collect();
    if picked_slices.last() != slice_ids.last() {
        picked_slices.push(*slice_ids.last().expect("nonempty"));
    }
    let per_slice = (SEMINORM_POINTS / picked_slices.len()).max(1);
    let node_stride = node_ids.len().div_ceil(per_slice).max(1);
    let mut points: Vec<(ParabolicPoint, f64)> = Vec::new();
    for &k in &picked_slices {
        for &i in node_ids.iter().step_by(node_stride) {
            let x = grid.node(i);
            if region.contains(&x, times[k]) {
                let v = u.slice(k)[i];
                points.push((ParabolicPoint { x, t: times[k] }, v));
            }
        }
    }
    let mut sup = 0.0f64;
    for (a, pa) in points.iter().enumerate() {
        for pb in &points[a + 1..] {
            let d = dist_par(&pa.0, &pb.0);
            if d > 0.0 {
                sup = sup.max((pa.1 - pb.1).abs() / d);
            }
        }
    }
    Ok(
        MarginReport::new("lip-half", "Lip(1,1/2) seminorm", sup, f64::INFINITY, 0.0)
            .with_calibrated(sup)
            .with_note(format!(
                "{} points, slice stride {slice_stride}, node stride {node_stride}",
                points.len()
            )),
    )
}

/// `max_i |v_i / reference - 1| ≤ band`.
pub fn stability_margin(
    name: &str,
    anchor: &str,
    values: &[f64],
    reference: f64,
    band: f64,
) -> MarginReport {
    let spread = values
        .iter()
        .map(|v| (v / reference - 1.0).abs())
        .fold(0.0, f64::max);
    let spread =
        if values.iter().all(|v| v.is_finite()) && reference.is_finite() && reference != 0.0 {
            spread
        } else {
            f64::INFINITY
        };
    MarginReport::new(name, anchor, spread, band, 0.0)
        .with_note(format!("values {values:?} against {reference}"))
}
