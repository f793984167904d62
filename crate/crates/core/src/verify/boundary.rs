//! Oscillation decay at a lateral boundary point and the fitted modulus.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::geometry::{
    concave_envelope, dist_par_G, CylinderDescriptor, ModulusOfContinuity, ParabolicPoint, Region,
};
use crate::math::{exp2, linear_fit, ln, pow, sqrt};
use crate::orlicz::{OrliczFunction, StructureFunction};
use crate::report::MarginReport;
use crate::solver::DiscreteSolution;

/// Largest admissible `σ < 1/2` with `σ ≤ δ/√2` and `(2σ)^{g0} ≤ 4 (√2)^{-g1} δ`.
pub fn contraction_sigma(delta: f64, g0: f64, g1: f64) -> f64 {
    let by_growth = 0.5 * pow(4.0 * pow(2.0, -0.5 * g1) * delta, 1.0 / g0);
    (delta / sqrt(2.0)).min(by_growth).min(0.5 * (1.0 - 1e-12))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLevel {
    pub j: usize,
    pub radius: f64,
    pub omega: f64,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryModulus {
    /// `2‖ψ‖_∞ + 1`.
    pub omega: f64,
    pub sigma: f64,
    pub delta: f64,
    /// Levels `Q^{ω_j}_{r_j}` resolved by the grid, `r_{j+1} = σ r_j`.
    pub levels: Vec<IterationLevel>,
    /// Levels the schedule would ask for next but the grid cannot resolve.
    pub truncated_at: usize,
    /// `(ρ_k, osc over Q^G_{ρ_k})` on nested natural cylinders.
    pub nested: Vec<(f64, f64)>,
    /// Concave envelope of `(ρ_{k+1}, osc_k)`.
    pub modulus: ModulusOfContinuity,
    /// `osc ≈ C ρ^γ`.
    pub gamma: f64,
    pub c: f64,
    pub r_squared: f64,
    pub reports: Vec<MarginReport>,
}

impl BoundaryModulus {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn summary(&self) -> MarginReport {
        MarginReport::worst(
            "boundary-modulus",
            "boundary modulus of continuity",
            self.reports.clone(),
        )
        .with_calibrated(self.gamma)
        .with_note(format!(
            "γ' = {:.4}, C = {:.4}, R² = {:.4}, {} resolved levels (truncated at j = {})",
            self.gamma,
            self.c,
            self.r_squared,
            self.levels.len(),
            self.truncated_at
        ))
    }
}

/// Settings of [`boundary_modulus_measure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusSettings {
    /// Starting radius of both cylinder families.
    pub r0: f64,
    /// `ρ_{k+1} = ratio · ρ_k` for the nested natural cylinders.
    pub ratio: f64,
    /// Radii below `min_cells · h` are not resolved.
    pub min_cells: f64,
    /// Minimum `R²` of the log-log fit.
    pub min_r_squared: f64,
}

impl Default for ModulusSettings {
    fn default() -> Self {
        Self {
            r0: 0.5,
            ratio: core::f64::consts::FRAC_1_SQRT_2,
            min_cells: 2.0,
            min_r_squared: 0.95,
        }
    }
}

fn fits_in_time(u: &DiscreteSolution, cyl: &CylinderDescriptor) -> bool {
    let (t_lo, t_hi) = u.time_span();
    let (a, b) = cyl.time_interval();
    a >= t_lo - 1e-12 && b <= t_hi + 1e-12
}

fn osc_in(u: &DiscreteSolution, region: &dyn Region) -> Option<f64> {
    u.extrema_in(region).map(|(lo, hi)| hi - lo)
}

/// Oscillation of `u` on shrinking cylinders at the lateral boundary point
/// `z0`: the schedule `Q^{ω_j}_{r_j}` with `ω_j = 2^{-j} ω`, checked against
/// `ω_j` as far as the grid resolves it, and nested natural cylinders
/// `Q^G_ρ` whose oscillations are closed up into a concave modulus and fitted
/// by `C ρ^γ`. The modulus must dominate `|u(z) - u(z0)|` against
/// `dist_par_G(z, z0)` on the stored nodes between the smallest and the
/// largest resolved radius.
pub fn boundary_modulus_measure(
    u: &DiscreteSolution,
    z0: &ParabolicPoint,
    f: &StructureFunction,
    psi_sup: f64,
    delta: f64,
    settings: &ModulusSettings,
) -> Result<BoundaryModulus> {
    let g = OrliczFunction::new(f.clone());
    let h = u.grid().h();
    let r_min = settings.min_cells * h;
    let omega = 2.0 * psi_sup + 1.0;
    let sigma = contraction_sigma(delta, f.g0(), f.g1());
    let base = u.value_at(&z0.x, z0.t)?;

    let mut reports = Vec::new();
    let mut levels = Vec::new();
    let mut r = settings.r0;
    let mut j = 0;
    loop {
        let w = omega * exp2(-(j as f64));
        let cyl = CylinderDescriptor::scaled(&g, z0.clone(), r, w)?;
        if r < r_min || !fits_in_time(u, &cyl) {
            break;
        }
        let Some(osc) = osc_in(u, &cyl) else { break };
        reports.push(
            MarginReport::new(
                "level-osc",
                "oscillation decay on the boundary cylinders",
                osc,
                w,
                1e-12,
            )
            .with_note(format!("j = {j}, r = {r:.4e}")),
        );
        levels.push(IterationLevel {
            j,
            radius: r,
            omega: w,
            oscillation: osc,
        });
        j += 1;
        r *= sigma;
    }
    let truncated_at = j;
    if levels.is_empty() {
        return Err(domain!(
            "the grid resolves no level of the schedule (r0 = {}, h = {h})",
            settings.r0
        ));
    }

    let mut nested = Vec::new();
    let mut rho = settings.r0;
    while rho >= r_min * (1.0 - 1e-12) {
        let cyl = CylinderDescriptor::natural(&g, z0.clone(), rho)?;
        if fits_in_time(u, &cyl) {
            if let Some(osc) = osc_in(u, &cyl) {
                nested.push((rho, osc));
            }
        }
        rho *= settings.ratio;
    }
    if nested.len() < 3 {
        return Err(domain!(
            "only {} nested cylinders resolved, need 3",
            nested.len()
        ));
    }
    let envelope_points: Vec<(f64, f64)> = nested.windows(2).map(|w| (w[1].0, w[0].1)).collect();
    let modulus = concave_envelope(&envelope_points)?;

    let (gamma, c, r_squared) = if nested.iter().all(|p| p.1 <= 0.0) {
        (1.0, 0.0, 1.0)
    } else {
        let pts: Vec<(f64, f64)> = nested.iter().copied().filter(|p| p.1 > 0.0).collect();
        let xs: Vec<f64> = pts.iter().map(|p| ln(p.0)).collect();
        let ys: Vec<f64> = pts.iter().map(|p| ln(p.1)).collect();
        let (_, slope, r2) = linear_fit(&xs, &ys);
        let c = envelope_points
            .iter()
            .map(|(r, o)| o / pow(*r, slope))
            .fold(0.0, f64::max);
        (slope, c, r2)
    };
    reports.push(
        MarginReport::new(
            "holder-exponent",
            "positive fitted exponent",
            0.0,
            gamma,
            0.0,
        )
        .with_note(format!("γ' = {gamma}")),
    );
    reports.push(MarginReport::new(
        "fit-r2",
        "log-log fit quality",
        settings.min_r_squared,
        r_squared,
        0.0,
    ));
    let domination = modulus
        .breakpoints()
        .iter()
        .filter(|p| p.0 > 0.0)
        .map(|&(r, w)| (w, c * pow(r, gamma)))
        .min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .unwrap_or((0.0, 0.0));
    reports.push(MarginReport::new(
        "holder-domination",
        "modulus below C r^γ'",
        domination.0,
        domination.1,
        1e-12 * c.max(1.0),
    ));

    // Increments against the modulus.
    let d_lo = nested[nested.len() - 1].0;
    let d_hi = settings.r0;
    let grid = u.grid();
    let mut worst: Option<(f64, f64)> = None;
    let mut count = 0usize;
    for (k, &t) in u.slice_times().iter().enumerate() {
        if t > z0.t {
            continue;
        }
        for idx in 0..grid.node_count() {
            let p = ParabolicPoint {
                x: grid.node(idx),
                t,
            };
            let d = dist_par_G(&g, &p, z0);
            if d < d_lo || d > d_hi {
                continue;
            }
            count += 1;
            let inc = (u.slice(k)[idx] - base).abs();
            let bound = modulus.eval(d);
            if worst.map_or(true, |w| bound - inc < w.1 - w.0) {
                worst = Some((inc, bound));
            }
        }
    }
    let worst = worst.unwrap_or((0.0, 0.0));
    reports.push(
        MarginReport::new(
            "increment-domination",
            "boundary increments below the modulus",
            worst.0,
            worst.1,
            1e-12,
        )
        .with_note(format!(
            "{count} nodes with dist_par_G in [{d_lo:.4e}, {d_hi:.4e}]"
        )),
    );

    Ok(BoundaryModulus {
        omega,
        sigma,
        delta,
        levels,
        truncated_at,
        nested,
        modulus,
        gamma,
        c,
        r_squared,
        reports,
    })
}
