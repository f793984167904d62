use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};

/// A concave nondecreasing piecewise-linear `ω` with `ω(0) = 0`, constant
/// after its last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusOfContinuity {
    /// Breakpoints starting with `(0, 0)`, strictly increasing in `r`.
    points: Vec<(f64, f64)>,
}

impl ModulusOfContinuity {
    /// Validates concavity, monotonicity and `ω(0) = 0` (the origin is
    /// prepended when missing).
    pub fn from_breakpoints(points: &[(f64, f64)]) -> Result<Self> {
        let mut pts = Vec::with_capacity(points.len() + 1);
        if points.first().map_or(true, |p| p.0 != 0.0) {
            pts.push((0.0, 0.0));
        }
        pts.extend_from_slice(points);
        if pts[0].1 != 0.0 {
            return Err(domain!("a modulus must vanish at 0"));
        }
        let mut last_slope = f64::INFINITY;
        for w in pts.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(domain!("modulus breakpoints must increase strictly in r"));
            }
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            if slope < 0.0 {
                return Err(domain!("modulus must be nondecreasing"));
            }
            if slope > last_slope * (1.0 + 1e-12) + 1e-300 {
                return Err(domain!("modulus must be concave"));
            }
            last_slope = slope;
        }
        Ok(Self { points: pts })
    }

    /// `ω(r) = c r^γ` sampled at `count` points of `[r_min, r_max]` and closed
    /// up by its concave envelope (exact for `γ ≤ 1` up to the chords).
    pub fn holder(c: f64, gamma: f64, r_max: f64) -> Result<Self> {
        if !(c > 0.0 && gamma > 0.0 && gamma <= 1.0 && r_max > 0.0) {
            return Err(domain!("Hölder modulus needs c > 0, 0 < γ ≤ 1, r_max > 0"));
        }
        let pts: Vec<(f64, f64)> = crate::math::logspace(r_max * 1e-6, r_max, 200)
            .into_iter()
            .map(|r| (r, c * crate::math::pow(r, gamma)))
            .collect();
        concave_envelope(&pts)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let last = self.points[self.points.len() - 1];
        if r >= last.0 {
            return last.1;
        }
        let i = self.points.partition_point(|p| p.0 <= r) - 1;
        let (r0, w0) = self.points[i];
        let (r1, w1) = self.points[i + 1];
        w0 + (w1 - w0) * (r - r0) / (r1 - r0)
    }
}

/// The smallest concave nondecreasing function with `ω(0) = 0` lying above
/// every `(r, ω)` point: the upper hull from the origin to the highest point,
/// flat afterwards.
pub fn concave_envelope(points: &[(f64, f64)]) -> Result<ModulusOfContinuity> {
    if points.is_empty() {
        return Err(domain!("concave envelope of an empty set"));
    }
    if points
        .iter()
        .any(|p| !(p.0 > 0.0) || !(p.1 >= 0.0) || !p.0.is_finite() || !p.1.is_finite())
    {
        return Err(domain!("envelope points need r > 0 and finite ω ≥ 0"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    // Past the highest value the envelope is flat; points beyond it are
    // dominated, and ties keep the leftmost.
    let top = pts
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > pts[best].1 { i } else { best });
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for &p in &pts[..=top] {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or below the chord a → p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    if hull.len() == 1 {
        hull.push(pts[top]);
    }
    ModulusOfContinuity::from_breakpoints(&hull[1..])
}
