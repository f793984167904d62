use alloc::vec;
use alloc::vec::Vec;

use super::{discrete_gradient, DiscreteSolution};
use crate::error::{domain, Error, Result};
use crate::geometry::Region;
use crate::math::{norm, pow};
use crate::orlicz::StructureFunction;

fn check_inside(u: &DiscreteSolution, region: &dyn Region) -> Result<()> {
    let (lo, hi) = u.grid().bounds();
    let (blo, bhi) = region.bounding_box();
    let (t_lo, t_hi) = u.time_span();
    let (r_lo, r_hi) = region.time_range();
    let inside = blo.iter().zip(lo).all(|(a, b)| *a >= b - 1e-12)
        && bhi.iter().zip(hi).all(|(a, b)| *a <= b + 1e-12)
        && r_lo >= t_lo - 1e-12
        && r_hi <= t_hi + 1e-12;
    if inside {
        Ok(())
    } else {
        Err(domain!(
            "region [{blo:?}, {bhi:?}] × ({r_lo}, {r_hi}] is not inside the solution domain"
        ))
    }
}

/// Visits `(slice time, |Du|)` for every face centred in `region` on every
/// stored slice in its time range.
fn for_faces(u: &DiscreteSolution, region: &dyn Region, mut visit: impl FnMut(usize, f64)) {
    let grid = u.grid();
    let (r_lo, r_hi) = region.time_range();
    for (k, &t) in u.slice_times().iter().enumerate() {
        if t < r_lo || t > r_hi {
            continue;
        }
        let faces = discrete_gradient(u.slice(k), grid);
        for axis in 0..grid.dim() {
            for idx in 0..faces.len(axis) {
                let c = faces.face_center(grid, axis, idx);
                if region.contains(&c, t) {
                    visit(k, norm(faces.get(axis, idx)));
                }
            }
        }
    }
}

/// `sup |Du|` over faces centred in `region`.
pub fn sup_gradient(u: &DiscreteSolution, region: &dyn Region) -> Result<f64> {
    check_inside(u, region)?;
    let mut sup = f64::NEG_INFINITY;
    for_faces(u, region, |_, s| sup = sup.max(s));
    if sup == f64::NEG_INFINITY {
        return Err(domain!("region contains no face of the grid"));
    }
    Ok(sup)
}

/// `(⨍_{Q} [G(|Du|) + 1])^{max{1/2, 2/(ε(n+2))}}` with `ε` from the growth
/// floor of `f` in the grid dimension; faces are averaged per slice and the
/// slices by the trapezoid rule in time.
pub fn lipschitz_rhs(
    u: &DiscreteSolution,
    region: &dyn Region,
    f: &StructureFunction,
) -> Result<f64> {
    check_inside(u, region)?;
    let n = u.grid().dim();
    let floor = f.with_dimension(n).growth_floor().ok_or_else(|| {
        Error::Hypothesis(alloc::format!(
            "g0 = {} is at or below the growth floor in dimension {n}",
            f.g0()
        ))
    })?;
    let exponent = (2.0 / (floor.eps * (n as f64 + 2.0))).max(0.5);
    let slices = u.slice_times().len();
    let mut sums = vec![0.0; slices];
    let mut counts = vec![0usize; slices];
    for_faces(u, region, |k, s| {
        sums[k] += f.primitive(s) + 1.0;
        counts[k] += 1;
    });
    let used: Vec<(f64, f64)> = (0..slices)
        .filter(|&k| counts[k] > 0)
        .map(|k| (u.slice_times()[k], sums[k] / counts[k] as f64))
        .collect();
    let mean = match used.len() {
        0 => return Err(domain!("region contains no face of the grid")),
        1 => used[0].1,
        _ => {
            let span = used[used.len() - 1].0 - used[0].0;
            used.windows(2)
                .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
                .sum::<f64>()
                / span
        }
    };
    Ok(pow(mean, exponent))
}

/// Backward Steklov average `(1/λ) ∫_{t-λ}^t u`, by the trapezoid rule over
/// the stored slices, at every stored time `t ≥ t0 + λ`.
pub fn steklov_average(u: &DiscreteSolution, lag: f64) -> Result<DiscreteSolution> {
    let times = u.slice_times();
    let (t0, t_end) = u.time_span();
    if !(lag > 0.0) {
        return Err(domain!("Steklov lag must be positive, got {lag}"));
    }
    if lag > t_end - t0 {
        return Err(domain!(
            "Steklov lag {lag} exceeds the elapsed time {}",
            t_end - t0
        ));
    }
    let min_step = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if lag < min_step * (1.0 - 1e-12) {
        return Err(domain!(
            "Steklov lag {lag} is shorter than one stored time step {min_step}"
        ));
    }
    let nodes = u.grid().node_count();
    let mut out_times = Vec::new();
    let mut out_slices = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let start = t - lag;
        if start < t0 - 1e-12 * lag.max(1.0) {
            continue;
        }
        let start = start.max(t0);
        // Slice at `start`, interpolated linearly in time.
        let j = times
            .partition_point(|&s| s <= start)
            .clamp(1, times.len() - 1)
            - 1;
        let theta = ((start - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
        let first: Vec<f64> = (0..nodes)
            .map(|i| (1.0 - theta) * u.slice(j)[i] + theta * u.slice(j + 1)[i])
            .collect();
        let mut acc = vec![0.0; nodes];
        let mut prev_t = start;
        let mut prev = first;
        for m in j + 1..=k {
            let dt = times[m] - prev_t;
            if dt > 0.0 {
                for i in 0..nodes {
                    acc[i] += 0.5 * dt * (prev[i] + u.slice(m)[i]);
                }
            }
            prev_t = times[m];
            prev = u.slice(m).to_vec();
        }
        out_times.push(t);
        out_slices.push(acc.into_iter().map(|v| v / lag).collect());
    }
    Ok(u.resampled(
        u.grid().clone(),
        out_times,
        out_slices,
        alloc::format!("Steklov average, lag {lag}"),
    ))
}

/// `(Σ_t w_t Σ_nodes h^n |a - b|²)^{1/2}` over the slices of `a`, matched by
/// time with the slices of `b`; `w_t` are trapezoid weights.
pub fn time_l2_distance(a: &DiscreteSolution, b: &DiscreteSolution) -> Result<f64> {
    if a.grid().counts() != b.grid().counts() {
        return Err(domain!("solutions live on different grids"));
    }
    let cell = pow(a.grid().h(), a.grid().dim() as f64);
    let mut pairs = Vec::new();
    for (k, &t) in a.slice_times().iter().enumerate() {
        let m = b.slice_times().partition_point(|&s| s < t);
        if m >= b.slice_times().len() || (b.slice_times()[m] - t).abs() > 1e-12 * t.abs().max(1.0) {
            return Err(domain!("no slice at time {t} in the second solution"));
        }
        let d: f64 = a
            .slice(k)
            .iter()
            .zip(b.slice(m))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            * cell;
        pairs.push((t, d));
    }
    let total = if pairs.len() == 1 {
        pairs[0].1
    } else {
        pairs
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    };
    Ok(crate::math::sqrt(total))
}
