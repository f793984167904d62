//! Energy-type checks: the Caccioppoli inequality and the weak subsolution
//! property of `|Du|²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::field::VectorField;
use crate::geometry::{BoxRegion, Region};
use crate::math::{dot, norm, pow};
use crate::orlicz::StructureFunction;
use crate::report::MarginReport;
use crate::solver::{discrete_gradient, DiscreteSolution, SpaceTimeGrid};

/// Trapezoid rule over `(t, value)` pairs.
fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Product bump `Π (1 - z_i²)²` over the scaled offsets `z_i`, times an
/// optional linear ramp in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    /// Fraction of each half-width carrying the bump; `φ` vanishes outside.
    pub support: f64,
    /// Multiply by `(t - t1)/(t2 - t1)`, so that `φ` vanishes on the bottom of `K`.
    pub ramp: bool,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            support: 0.9,
            ramp: true,
        }
    }
}

struct Cutoff<'a> {
    spec: CutoffSpec,
    k: &'a BoxRegion,
}

impl Cutoff<'_> {
    fn offsets(&self, x: &[f64]) -> Vec<(f64, f64)> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let half = 0.5 * (self.k.upper[i] - self.k.lower[i]) * self.spec.support;
                let c = 0.5 * (self.k.upper[i] + self.k.lower[i]);
                ((xi - c) / half, half)
            })
            .collect()
    }

    fn ramp(&self, t: f64) -> (f64, f64) {
        if self.spec.ramp {
            let span = self.k.t_hi - self.k.t_lo;
            (((t - self.k.t_lo) / span).clamp(0.0, 1.0), 1.0 / span)
        } else {
            (1.0, 0.0)
        }
    }

    /// `(φ, |Dφ|, |∂_t φ|)`.
    fn eval(&self, x: &[f64], t: f64) -> (f64, f64, f64) {
        let z = self.offsets(x);
        let factors: Vec<f64> = z
            .iter()
            .map(|(z, _)| {
                if z.abs() < 1.0 {
                    (1.0 - z * z) * (1.0 - z * z)
                } else {
                    0.0
                }
            })
            .collect();
        let space: f64 = factors.iter().product();
        let mut grad = vec![0.0; x.len()];
        for (i, (zi, half)) in z.iter().enumerate() {
            if zi.abs() >= 1.0 {
                continue;
            }
            let others: f64 = factors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, f)| f)
                .product();
            grad[i] = -4.0 * zi * (1.0 - zi * zi) / half * others;
        }
        let (eta, deta) = self.ramp(t);
        (space * eta, norm(&grad) * eta, space * deta)
    }
}

fn check_compact(u: &DiscreteSolution, k: &BoxRegion) -> Result<()> {
    let (lo, hi) = u.grid().bounds();
    let (t0, t1) = u.time_span();
    let inside =
        k.lower.iter().zip(lo).all(|(a, b)| a > b) && k.upper.iter().zip(hi).all(|(a, b)| a < b);
    if !inside || k.t_lo < t0 - 1e-12 || k.t_hi > t1 + 1e-12 {
        return Err(domain!(
            "K = [{:?}, {:?}] × [{}, {}] is not compactly inside the domain",
            k.lower,
            k.upper,
            k.t_lo,
            k.t_hi
        ));
    }
    Ok(())
}

/// Both sides of the Caccioppoli inequality for `(u - k)_+` with the cutoff
/// `φ^{g1}`, and the least `c` such that
/// `sup_t ∫ w²φ^{g1} + ∫∫ G(|Dw|)φ^{g1} ≤ ∫ w²φ^{g1}|_{t1} + c ∫∫ [G(|Dφ| w) + w²|∂_t φ|]`.
///
/// The report carries `c` as its calibrated constant and passes when `c` is
/// finite.
pub fn caccioppoli_check(
    u: &DiscreteSolution,
    k_region: &BoxRegion,
    level: f64,
    f: &StructureFunction,
    phi: &CutoffSpec,
) -> Result<MarginReport> {
    check_compact(u, k_region)?;
    let grid = u.grid();
    let n = grid.dim();
    let cell = pow(grid.h(), n as f64);
    let g1 = f.g1();
    let cutoff = Cutoff {
        spec: *phi,
        k: k_region,
    };
    let mut energy = Vec::new();
    let mut gradient = Vec::new();
    let mut rest = Vec::new();
    let mut x = vec![0.0; n];
    for (s, &t) in u.slice_times().iter().enumerate() {
        if t < k_region.t_lo - 1e-12 || t > k_region.t_hi + 1e-12 {
            continue;
        }
        let w: Vec<f64> = u.slice(s).iter().map(|v| (v - level).max(0.0)).collect();
        let mut e = 0.0;
        let mut r = 0.0;
        for (idx, wi) in w.iter().enumerate() {
            grid.node_into(idx, &mut x);
            if !k_region.contains(&x, t) {
                continue;
            }
            let (p, dp, dtp) = cutoff.eval(&x, t);
            e += cell * wi * wi * pow(p, g1);
            r += cell * (f.primitive(dp * wi) + wi * wi * dtp);
        }
        let faces = discrete_gradient(&w, grid);
        let mut gsum = 0.0;
        for axis in 0..n {
            for idx in 0..faces.len(axis) {
                let c = faces.face_center(grid, axis, idx);
                if !k_region.contains(&c, t) {
                    continue;
                }
                let (p, _, _) = cutoff.eval(&c, t);
                gsum += cell / n as f64 * f.primitive(norm(faces.get(axis, idx))) * pow(p, g1);
            }
        }
        energy.push((t, e));
        gradient.push((t, gsum));
        rest.push((t, r));
    }
    if energy.is_empty() {
        return Err(domain!("K contains no stored slice"));
    }
    let sup_energy = energy.iter().map(|p| p.1).fold(0.0, f64::max);
    let lhs = sup_energy + trapezoid(&gradient);
    let initial = energy[0].1;
    let rest = trapezoid(&rest);
    let scale = lhs.abs().max(initial.abs()).max(1e-300);
    let c = if lhs <= initial + 1e-12 * scale {
        0.0
    } else if rest > 0.0 {
        (lhs - initial) / rest
    } else {
        f64::INFINITY
    };
    let rhs = if c.is_finite() {
        initial + c * rest
    } else {
        f64::INFINITY
    };
    let report = MarginReport::new(
        "caccioppoli",
        "Caccioppoli inequality, + sign",
        lhs,
        rhs,
        1e-12 * scale,
    )
    .with_calibrated(c)
    .with_note(format!(
        "level k = {level}, initial term {initial:.6e}, rest {rest:.6e}, c = {c:.6e}"
    ));
    Ok(if c.is_finite() {
        report
    } else {
        let mut r = report;
        r.pass = false;
        r
    })
}

/// A smooth nonnegative bump `(1 - |x-c|²/r²)_+³ (1 - (t-t_c)²/ρ²)_+³`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

impl Bump {
    /// `(φ, Dφ, ∂_t φ)`.
    pub fn eval(&self, x: &[f64], t: f64) -> (f64, Vec<f64>, f64) {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let q = 1.0 - dot(&d, &d) / (self.radius * self.radius);
        let s = (t - self.t_center) / self.t_radius;
        let p = 1.0 - s * s;
        if q <= 0.0 || p <= 0.0 {
            return (0.0, vec![0.0; x.len()], 0.0);
        }
        let space = q * q * q;
        let time = p * p * p;
        let grad = d
            .iter()
            .map(|di| -6.0 * q * q * di / (self.radius * self.radius) * time)
            .collect();
        let dt = space * 3.0 * p * p * (-2.0 * s / self.t_radius);
        (space * time, grad, dt)
    }

    /// Whether the support lies inside `[lo, hi] × [t_lo, t_hi]`.
    fn supported_in(&self, lo: &[f64], hi: &[f64], t_lo: f64, t_hi: f64) -> bool {
        self.center
            .iter()
            .zip(lo)
            .all(|(c, l)| c - self.radius >= *l)
            && self
                .center
                .iter()
                .zip(hi)
                .all(|(c, h)| c + self.radius <= *h)
            && self.t_center - self.t_radius >= t_lo
            && self.t_center + self.t_radius <= t_hi
    }
}

/// `per_axis^n` bumps of radius a quarter of the shortest side, centred on a
/// regular lattice of the middle half of the domain, each over the middle
/// half of the time interval.
pub fn standard_bumps(u: &DiscreteSolution, per_axis: usize) -> Vec<Bump> {
    let (lo, hi) = u.grid().bounds();
    let (t0, t1) = u.time_span();
    let n = lo.len();
    let radius = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min)
        / 4.0;
    let axis = |i: usize| -> Vec<f64> {
        let a = lo[i] + radius * 1.5;
        let b = hi[i] - radius * 1.5;
        crate::math::linspace(a, b, per_axis.max(1))
            .into_iter()
            .take(per_axis.max(1))
            .collect()
    };
    let mut centers: Vec<Vec<f64>> = vec![Vec::new()];
    for i in 0..n {
        let ax = if per_axis <= 1 {
            vec![0.5 * (lo[i] + hi[i])]
        } else {
            axis(i)
        };
        centers = centers
            .into_iter()
            .flat_map(|c: Vec<f64>| {
                ax.iter().map(move |&a| {
                    let mut d = c.clone();
                    d.push(a);
                    d
                })
            })
            .collect();
    }
    centers
        .into_iter()
        .map(|center| Bump {
            center,
            radius,
            t_center: 0.5 * (t0 + t1),
            t_radius: 0.25 * (t1 - t0),
        })
        .collect()
}

/// Central-difference nodal gradient; `None` on the boundary.
fn nodal_gradient(values: &[f64], grid: &SpaceTimeGrid, idx: usize) -> Option<Vec<f64>> {
    if grid.is_boundary(idx) {
        return None;
    }
    let counts = grid.counts();
    let h = grid.h();
    let mut stride = 1;
    let mut out = vec![0.0; grid.dim()];
    for (axis, c) in counts.iter().enumerate() {
        out[axis] = (values[idx + stride] - values[idx - stride]) / (2.0 * h);
        stride *= c;
    }
    Some(out)
}

/// `∫∫ [-v ∂_t φ + ⟨DA(Du) Dv, Dφ⟩]` for `v = |Du|²` and each bump, with the
/// time term summed by parts so that a time-independent `v` contributes
/// exactly zero. Returns `(value, scale)` per bump, the scale being the
/// integral of the absolute values of both integrands.
pub fn v_weak_form(
    u: &DiscreteSolution,
    field: &dyn VectorField,
    bumps: &[Bump],
) -> Result<Vec<(f64, f64)>> {
    let grid = u.grid();
    let n = grid.dim();
    let h = grid.h();
    let (lo, hi) = grid.bounds();
    let inner_lo: Vec<f64> = lo.iter().map(|v| v + 2.0 * h).collect();
    let inner_hi: Vec<f64> = hi.iter().map(|v| v - 2.0 * h).collect();
    let (t0, t1) = u.time_span();
    for b in bumps {
        if !b.supported_in(&inner_lo, &inner_hi, t0, t1) {
            return Err(domain!(
                "bump centred at {:?} is not supported two cells inside the domain",
                b.center
            ));
        }
    }
    let cell = pow(h, n as f64);
    let nodes = grid.node_count();
    let times = u.slice_times();
    let mut v_slices: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    for s in 0..times.len() {
        let slice = u.slice(s);
        v_slices.push(
            (0..nodes)
                .map(|i| {
                    nodal_gradient(slice, grid, i)
                        .map(|g| dot(&g, &g))
                        .unwrap_or(0.0)
                })
                .collect(),
        );
    }
    let mut values = vec![0.0; bumps.len()];
    let mut scales = vec![0.0; bumps.len()];
    let mut x = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    // Spatial term, trapezoid in time.
    for s in 0..times.len() {
        let w = match (s, times.len()) {
            (_, 1) => 0.0,
            (0, _) => 0.5 * (times[1] - times[0]),
            (s, m) if s == m - 1 => 0.5 * (times[s] - times[s - 1]),
            (s, _) => 0.5 * (times[s + 1] - times[s - 1]),
        };
        if w == 0.0 {
            continue;
        }
        let slice = u.slice(s);
        for idx in 0..nodes {
            grid.node_into(idx, &mut x);
            let Some(dv) = nodal_gradient(&v_slices[s], grid, idx) else {
                continue;
            };
            let active: Vec<usize> = (0..bumps.len())
                .filter(|&b| {
                    crate::math::dist(&x, &bumps[b].center) < bumps[b].radius
                        && (times[s] - bumps[b].t_center).abs() < bumps[b].t_radius
                })
                .collect();
            if active.is_empty() {
                continue;
            }
            let du = nodal_gradient(slice, grid, idx).expect("interior node");
            field.jacobian(&du, &mut jac);
            let flux: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| jac[i * n + j] * dv[j]).sum())
                .collect();
            for b in active {
                let (_, dphi, _) = bumps[b].eval(&x, times[s]);
                let term = dot(&flux, &dphi);
                values[b] += w * cell * term;
                scales[b] += w * cell * term.abs();
            }
        }
    }
    // Time term by parts: Σ (v_{s+1} - v_s) (φ_s + φ_{s+1})/2.
    for s in 0..times.len().saturating_sub(1) {
        for idx in 0..nodes {
            if grid.is_boundary(idx) {
                continue;
            }
            grid.node_into(idx, &mut x);
            let dv = v_slices[s + 1][idx] - v_slices[s][idx];
            for (b, bump) in bumps.iter().enumerate() {
                let (p0, _, _) = bump.eval(&x, times[s]);
                let (p1, _, _) = bump.eval(&x, times[s + 1]);
                if p0 == 0.0 && p1 == 0.0 {
                    continue;
                }
                let term = cell * dv * 0.5 * (p0 + p1);
                values[b] += term;
                scales[b] += term.abs();
            }
        }
    }
    Ok(values.into_iter().zip(scales).collect())
}

/// Every bump value must satisfy `W(φ) ≤ C·h·S(φ)` with `S` the absolute
/// scale of the integrand: a consistency-order bound, not the exact weak
/// inequality, since `|Du|²` of a grid function has no weak derivatives to
/// test against.
pub fn v_subsolution_check(
    u: &DiscreteSolution,
    field: &dyn VectorField,
    bumps: &[Bump],
    c_tol: f64,
) -> Result<MarginReport> {
    let h = u.grid().h();
    let values = v_weak_form(u, field, bumps)?;
    let parts: Vec<MarginReport> = values
        .iter()
        .enumerate()
        .map(|(b, &(w, s))| {
            MarginReport::new(
                "v-subsolution",
                "weak subsolution |Du|²",
                w,
                c_tol * h * s,
                0.0,
            )
            .with_note(format!("bump {b}: W = {w:.4e}, scale {s:.4e}"))
        })
        .collect();
    if parts.is_empty() {
        return Ok(MarginReport::new(
            "v-subsolution",
            "weak subsolution |Du|²",
            0.0,
            0.0,
            0.0,
        ));
    }
    Ok(MarginReport::worst(
        "v-subsolution",
        "weak subsolution |Du|² (consistency-order bound)",
        parts,
    )
    .with_calibrated(c_tol)
    .with_note(format!(
        "{}: tolerance C·h·S with C = {c_tol}, h = {h}",
        field.label()
    )))
}

/// `C = safety · max_φ |W_h(φ) - W_{h/2}(φ)| / (h S_h(φ))` from two runs on
/// nested grids with the same bumps.
pub fn calibrate_v_tolerance(
    coarse: &[(f64, f64)],
    fine: &[(f64, f64)],
    h: f64,
    safety: f64,
) -> f64 {
    coarse
        .iter()
        .zip(fine)
        .filter(|(c, _)| c.1 > 0.0)
        .map(|(c, f)| (c.0 - f.0).abs() / (h * c.1))
        .fold(0.0, f64::max)
        * safety
}
