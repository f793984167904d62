//! Parabolic distances, cylinders, the scaling transform, and concave moduli
//! of continuity.

mod modulus;

use alloc::format;
use alloc::vec::Vec;

pub use modulus::{concave_envelope, ModulusOfContinuity};

use crate::error::{domain, Result};
use crate::math::{dist, sqrt};
use crate::orlicz::{OrliczFunction, StructureFunction};
use crate::solver::{DiscreteSolution, SpaceTimeGrid};

/// A space-time point `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ParabolicPoint {
    pub fn new(x: &[f64], t: f64) -> Self {
        Self { x: x.to_vec(), t }
    }

    pub fn origin(n: usize) -> Self {
        Self {
            x: alloc::vec![0.0; n],
            t: 0.0,
        }
    }
}

/// `max{|x - y|, |t - s|^{1/2}}`.
pub fn dist_par(a: &ParabolicPoint, b: &ParabolicPoint) -> f64 {
    dist(&a.x, &b.x).max(sqrt((a.t - b.t).abs()))
}

/// `max{|x - y|, 1/G^{-1}(1/|t - s|)}`, with the time part `0` when `t = s`.
#[allow(non_snake_case)]
pub fn dist_par_G(f: &OrliczFunction, a: &ParabolicPoint, b: &ParabolicPoint) -> f64 {
    let dt = (a.t - b.t).abs();
    let time = if dt == 0.0 {
        0.0
    } else {
        1.0 / f.invert(1.0 / dt)
    };
    dist(&a.x, &b.x).max(time)
}

/// A set of space-time points.
pub trait Region {
    fn contains(&self, x: &[f64], t: f64) -> bool;
    /// `(t_min, t_max)`, the time extent (open or closed at the bottom).
    fn time_range(&self) -> (f64, f64);
    /// Spatial bounding box `(lower, upper)`.
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>);
}

/// The closed box `[lower, upper] × [t_lo, t_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl BoxRegion {
    pub fn new(lower: &[f64], upper: &[f64], t_lo: f64, t_hi: f64) -> Result<Self> {
        if lower.len() != upper.len()
            || lower.iter().zip(upper).any(|(a, b)| !(a <= b))
            || !(t_lo <= t_hi)
        {
            return Err(domain!(
                "box region needs lower ≤ upper in every coordinate"
            ));
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            t_lo,
            t_hi,
        })
    }
}

impl Region for BoxRegion {
    fn contains(&self, x: &[f64], t: f64) -> bool {
        t >= self.t_lo
            && t <= self.t_hi
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, a), b)| *v >= *a && *v <= *b)
    }
    fn time_range(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CylinderKind {
    /// `B_R × (t0 - R², t0]`.
    Standard,
    /// `B_R × (t0 - 1/G(1/R), t0]`.
    Natural,
    /// `B_{min{1,θ}^{1/2} ρ} × (t0 - min{1,θ^{-1}} ρ², t0]` with `θ = g(λ)/λ`.
    Intrinsic { lambda: f64, theta: f64 },
    /// `B_r × (t0 - κ²/G(κ/r), t0]`, the image of the unit cylinder under scaling.
    Scaled { kappa: f64 },
}

/// A cylinder with a closed spatial ball and time interval `(t0 - depth, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderDescriptor {
    pub kind: CylinderKind,
    pub center: ParabolicPoint,
    /// The nominal radius (`R` or `ρ`).
    pub radius: f64,
    pub spatial_radius: f64,
    pub depth: f64,
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(domain!("cylinder radius must be positive, got {r}"))
    }
}

impl CylinderDescriptor {
    pub fn standard(center: ParabolicPoint, r: f64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self {
            kind: CylinderKind::Standard,
            center,
            radius: r,
            spatial_radius: r,
            depth: r * r,
        })
    }

    pub fn natural(f: &OrliczFunction, center: ParabolicPoint, r: f64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self {
            kind: CylinderKind::Natural,
            center,
            radius: r,
            spatial_radius: r,
            depth: 1.0 / f.eval(1.0 / r),
        })
    }

    pub fn scaled(f: &OrliczFunction, center: ParabolicPoint, r: f64, kappa: f64) -> Result<Self> {
        check_radius(r)?;
        if !(kappa > 0.0) {
            return Err(domain!("scaling factor must be positive, got {kappa}"));
        }
        let depth = kappa * kappa / f.eval(kappa / r);
        Ok(Self {
            kind: CylinderKind::Scaled { kappa },
            center,
            radius: r,
            spatial_radius: r,
            depth,
        })
    }

    /// `(t0 - depth, t0)`.
    pub fn time_interval(&self) -> (f64, f64) {
        (self.center.t - self.depth, self.center.t)
    }

    pub fn contains_point(&self, p: &ParabolicPoint) -> bool {
        self.contains(&p.x, p.t)
    }
}

/// `Q^λ_ρ(x0, t0)` with `θ_λ = g(λ)/λ`.
pub fn intrinsic_cylinder(
    f: &StructureFunction,
    center: ParabolicPoint,
    rho: f64,
    lambda: f64,
) -> Result<CylinderDescriptor> {
    check_radius(rho)?;
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(domain!("intrinsic cylinders need λ ≥ 1, got {lambda}"));
    }
    let theta = f.eval(lambda) / lambda;
    Ok(CylinderDescriptor {
        kind: CylinderKind::Intrinsic { lambda, theta },
        center,
        radius: rho,
        spatial_radius: sqrt(theta.min(1.0)) * rho,
        depth: (1.0 / theta).min(1.0) * rho * rho,
    })
}

impl Region for CylinderDescriptor {
    fn contains(&self, x: &[f64], t: f64) -> bool {
        let (lo, hi) = self.time_interval();
        t > lo && t <= hi && dist(x, &self.center.x) <= self.spatial_radius
    }
    fn time_range(&self) -> (f64, f64) {
        self.time_interval()
    }
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.spatial_radius;
        (
            self.center.x.iter().map(|c| c - r).collect(),
            self.center.x.iter().map(|c| c + r).collect(),
        )
    }
}

/// `ḡ(s) = (κ/r) G(κ/r)^{-1} g(κ s/r)`.
pub fn rescale_structure(f: &StructureFunction, kappa: f64, r: f64) -> Result<StructureFunction> {
    if !(kappa > 0.0 && r > 0.0) || !(kappa / r).is_finite() {
        return Err(domain!(
            "rescaling needs κ, r > 0, got κ = {kappa}, r = {r}"
        ));
    }
    let g = f.rescaled(kappa / r)?;
    let big_one = g.primitive(1.0);
    if (big_one - 1.0).abs() > 1e-8 {
        return Err(domain!("rescaled structure function has G(1) = {big_one}"));
    }
    Ok(g)
}

/// Pulls a solution on `Q^κ_r(x0, t0)` back to the unit cylinder
/// `[-1, 1]^n × [-1, 0]`, clipped to the image of the domain: `w̄(x, t) = w(x0 + r x, t0 + κ² G(κ/r)^{-1} t)/κ`,
/// sampled with spatial step `h` at the source slice times in the window.
pub fn rescale_solution(
    u: &DiscreteSolution,
    f: &OrliczFunction,
    kappa: f64,
    r: f64,
    center: &ParabolicPoint,
    h: f64,
) -> Result<DiscreteSolution> {
    if !(kappa > 0.0 && r > 0.0 && h > 0.0) {
        return Err(domain!("rescaling needs κ, r, h > 0"));
    }
    let n = u.grid().dim();
    if center.x.len() != n {
        return Err(domain!(
            "center has dimension {}, solution has {n}",
            center.x.len()
        ));
    }
    let scale = kappa * kappa / f.eval(kappa / r);
    let t_start = center.t - scale;
    let (dom_lo, dom_hi) = u.grid().bounds();
    let mut lower = alloc::vec![-1.0; n];
    let mut upper = alloc::vec![1.0; n];
    for k in 0..n {
        lower[k] = snap(((dom_lo[k] - center.x[k]) / r).max(-1.0));
        upper[k] = snap(((dom_hi[k] - center.x[k]) / r).min(1.0));
        if upper[k] - lower[k] < h {
            return Err(domain!("scaled cylinder misses the grid along axis {k}"));
        }
    }
    let (t_lo, t_hi) = u.time_span();
    if t_start < t_lo - 1e-12 || center.t > t_hi + 1e-12 {
        return Err(domain!(
            "scaled cylinder time window [{t_start}, {}] leaves the solution span [{t_lo}, {t_hi}]",
            center.t
        ));
    }
    let mut source_times: Vec<f64> = u
        .slice_times()
        .iter()
        .copied()
        .filter(|&s| s > t_start && s < center.t)
        .collect();
    source_times.insert(0, t_start.max(t_lo));
    source_times.push(center.t.min(t_hi));
    let grid = SpaceTimeGrid::uniform(&lower, &upper, h)?;
    let mut slices = Vec::with_capacity(source_times.len());
    let mut times = Vec::with_capacity(source_times.len());
    let mut x = alloc::vec![0.0; n];
    for &s in &source_times {
        let mut slice = Vec::with_capacity(grid.node_count());
        for idx in 0..grid.node_count() {
            let y = grid.node(idx);
            for k in 0..n {
                x[k] = (center.x[k] + r * y[k]).clamp(dom_lo[k], dom_hi[k]);
            }
            slice.push(u.value_at(&x, s)? / kappa);
        }
        slices.push(slice);
        times.push((s - center.t) / scale);
    }
    let label = format!("rescaled(kappa={kappa}, r={r})");
    Ok(u.resampled(grid, times, slices, label))
}

fn snap(v: f64) -> f64 {
    let r = crate::math::round(v * 1e9) / 1e9;
    if (r - v).abs() < 1e-10 {
        r
    } else {
        v
    }
}

/// `max - min` of the stored nodal values inside `region`.
pub fn oscillation(u: &DiscreteSolution, region: &dyn Region) -> Result<f64> {
    let (lo, hi) = u
        .extrema_in(region)
        .ok_or_else(|| domain!("region contains no grid node"))?;
    Ok(hi - lo)
}
