//! Explicit conservative finite differences for the Cauchy–Dirichlet problem
//! `u_t - div A(Du) = 0` on boxes in one and two space dimensions, plus the
//! ε-continuation driver.

mod analysis;
mod continuation;
mod scheme;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use analysis::{lipschitz_rhs, steklov_average, sup_gradient, time_l2_distance};
pub use continuation::{
    continuation_with_field, epsilon_continuation, interior_region, ContinuationOutcome,
    ConvergenceReport,
};
pub use scheme::{
    cfl_step, discrete_divergence, discrete_gradient, periodic_conservation,
    solve_cauchy_dirichlet, solve_lockstep, FaceGradients, CFL_FLOOR,
};

use crate::error::{domain, Error, Result};
use crate::geometry::{ModulusOfContinuity, Region};
use crate::math::{floor, round};

/// `Ω × (t0, T)` with `Ω` a box in dimension 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub struct RectDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t0: f64,
    pub t_final: f64,
}

impl RectDomain {
    pub fn new(lower: &[f64], upper: &[f64], t_final: f64) -> Result<Self> {
        Self::with_start(lower, upper, 0.0, t_final)
    }

    pub fn with_start(lower: &[f64], upper: &[f64], t0: f64, t_final: f64) -> Result<Self> {
        let n = lower.len();
        if !(1..=2).contains(&n) || upper.len() != n {
            return Err(Error::Config(alloc::format!(
                "the solver supports boxes in n ∈ {{1, 2}}, got n = {n}"
            )));
        }
        if lower
            .iter()
            .zip(upper)
            .any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite())
        {
            return Err(domain!("box sides must have positive length"));
        }
        if !(t_final > t0) || !t_final.is_finite() || !t0.is_finite() {
            return Err(domain!(
                "final time must exceed the start time, got [{t0}, {t_final}]"
            ));
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            t0,
            t_final,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Unit interval or square `[0, 1]^n × (0, T)`.
    pub fn unit(n: usize, t_final: f64) -> Result<Self> {
        Self::new(&vec![0.0; n], &vec![1.0; n], t_final)
    }
}

/// Uniform nodes with step `h` on a box, plus the time levels reached by a
/// solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    h: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    step_times: Vec<f64>,
}

impl SpaceTimeGrid {
    /// Nodes `lower + h k`; every side length must be a whole multiple of `h`.
    pub fn uniform(lower: &[f64], upper: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(alloc::format!(
                "grid step must be positive, got {h}"
            )));
        }
        let mut counts = Vec::with_capacity(lower.len());
        for (a, b) in lower.iter().zip(upper) {
            let cells = (b - a) / h;
            let whole = round(cells);
            if whole < 2.0 || (cells - whole).abs() > 1e-9 * whole.max(1.0) {
                return Err(Error::Config(alloc::format!(
                    "side length {} is not a multiple (≥ 2) of h = {h}",
                    b - a
                )));
            }
            counts.push(whole as usize + 1);
        }
        Ok(Self {
            h,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            counts,
            step_times: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }
    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Coordinates of node `idx` (first axis fastest).
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(idx, &mut out);
        out
    }

    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for k in 0..self.dim() {
            let i = rest % self.counts[k];
            rest /= self.counts[k];
            out[k] = if i + 1 == self.counts[k] {
                self.upper[k]
            } else {
                self.lower[k] + self.h * i as f64
            };
        }
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        let i = idx % self.counts[0];
        let j = if self.dim() > 1 {
            idx / self.counts[0]
        } else {
            0
        };
        [i, j]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim()).any(|k| m[k] == 0 || m[k] + 1 == self.counts[k])
    }

    /// Time levels `t_0 < t_1 < …` of the solve that produced this grid.
    pub fn step_times(&self) -> &[f64] {
        &self.step_times
    }

    /// `τ_m = t_{m+1} - t_m`.
    pub fn time_steps(&self) -> Vec<f64> {
        self.step_times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub(crate) fn set_step_times(&mut self, times: Vec<f64>) {
        self.step_times = times;
    }
}

type Evaluator = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Boundary and initial values `ψ(x, t)`, with an optional declared modulus.
#[derive(Clone)]
pub struct BoundaryDatum {
    eval: Arc<Evaluator>,
    modulus: Option<ModulusOfContinuity>,
    label: String,
}

impl fmt::Debug for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryDatum")
            .field("label", &self.label)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl BoundaryDatum {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            modulus: None,
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(alloc::format!("constant({c})"), move |_, _| c)
    }

    pub fn with_modulus(mut self, modulus: ModulusOfContinuity) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.eval)(x, t)
    }

    pub fn modulus(&self) -> Option<&ModulusOfContinuity> {
        self.modulus.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Step control for a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    pub h: f64,
    /// Fraction of the CFL bound used for each step, in `(0, 1]`.
    pub safety: f64,
    /// Fixed time step instead of the adaptive one.
    pub fixed_tau: Option<f64>,
    /// Keep every `save_stride`-th time level (the first and last are always kept).
    pub save_stride: usize,
    pub max_steps: usize,
}

impl GridParams {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            safety: 0.9,
            fixed_tau: None,
            save_stride: 1,
            max_steps: 50_000_000,
        }
    }

    pub fn with_safety(mut self, safety: f64) -> Self {
        self.safety = safety;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.save_stride = stride;
        self
    }

    pub fn with_fixed_tau(mut self, tau: f64) -> Self {
        self.fixed_tau = Some(tau);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "CFL safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        if self.save_stride == 0 {
            return Err(Error::Config("save stride must be at least 1".into()));
        }
        if let Some(t) = self.fixed_tau {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(alloc::format!(
                    "fixed time step must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Where a solution came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveProvenance {
    pub field: String,
    pub epsilon: Option<f64>,
    pub boundary: String,
    pub config_hash: String,
    pub scheme: String,
    pub warnings: Vec<String>,
}

/// The discrete maximum principle as observed during a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrinciple {
    /// `min` of the parabolic boundary values.
    pub lower: f64,
    /// `max` of the parabolic boundary values.
    pub upper: f64,
    /// Largest excursion of `u` outside `[lower, upper]` (0 if none).
    pub violation: f64,
}

/// Nodal values on saved time slices.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    grid: SpaceTimeGrid,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
    provenance: SolveProvenance,
    max_principle: Option<MaxPrinciple>,
}

impl DiscreteSolution {
    pub(crate) fn from_parts(
        grid: SpaceTimeGrid,
        times: Vec<f64>,
        slices: Vec<Vec<f64>>,
        provenance: SolveProvenance,
        max_principle: Option<MaxPrinciple>,
    ) -> Self {
        Self {
            grid,
            times,
            slices,
            provenance,
            max_principle,
        }
    }

    /// Same provenance, new grid and slices.
    pub fn resampled(
        &self,
        grid: SpaceTimeGrid,
        times: Vec<f64>,
        slices: Vec<Vec<f64>>,
        note: String,
    ) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.scheme = alloc::format!("{}; {note}", provenance.scheme);
        Self {
            grid,
            times,
            slices,
            provenance,
            max_principle: None,
        }
    }

    /// Builds a solution directly from sampled slices (for oracles and tests).
    pub fn from_slices(
        grid: SpaceTimeGrid,
        times: Vec<f64>,
        slices: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if times.len() != slices.len() || times.is_empty() {
            return Err(domain!("need one slice per time and at least one slice"));
        }
        if slices.iter().any(|s| s.len() != grid.node_count()) {
            return Err(domain!("slice length does not match the grid"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain!("slice times must increase"));
        }
        Ok(Self {
            grid,
            times,
            slices,
            provenance: SolveProvenance::default(),
            max_principle: None,
        })
    }

    /// Samples `u(x, t)` on `grid` at `times`.
    pub fn sample(
        grid: SpaceTimeGrid,
        times: &[f64],
        u: impl Fn(&[f64], f64) -> f64,
    ) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let slices = times
            .iter()
            .map(|&t| {
                (0..grid.node_count())
                    .map(|i| {
                        grid.node_into(i, &mut x);
                        u(&x, t)
                    })
                    .collect()
            })
            .collect();
        Self::from_slices(grid, times.to_vec(), slices)
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }
    pub fn slice_times(&self) -> &[f64] {
        &self.times
    }
    pub fn slices(&self) -> &[Vec<f64>] {
        &self.slices
    }
    pub fn slice(&self, k: usize) -> &[f64] {
        &self.slices[k]
    }
    pub fn final_slice(&self) -> &[f64] {
        &self.slices[self.slices.len() - 1]
    }
    pub fn provenance(&self) -> &SolveProvenance {
        &self.provenance
    }
    pub fn provenance_mut(&mut self) -> &mut SolveProvenance {
        &mut self.provenance
    }
    pub fn max_principle(&self) -> Option<MaxPrinciple> {
        self.max_principle
    }

    pub fn time_span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Multilinear interpolation in space on a stored slice.
    pub fn slice_value(&self, k: usize, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let n = g.dim();
        if x.len() != n {
            return Err(domain!("point has dimension {}, grid has {n}", x.len()));
        }
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for k in 0..n {
            let lo = g.lower[k];
            let hi = g.upper[k];
            if x[k] < lo - 1e-12 || x[k] > hi + 1e-12 {
                return Err(domain!("point {x:?} is outside the grid"));
            }
            let pos = ((x[k] - lo) / g.h).clamp(0.0, (g.counts[k] - 1) as f64);
            let i = (floor(pos) as usize).min(g.counts[k] - 2);
            base[k] = i;
            frac[k] = pos - i as f64;
        }
        let s = &self.slices[k];
        Ok(if n == 1 {
            s[base[0]] * (1.0 - frac[0]) + s[base[0] + 1] * frac[0]
        } else {
            let w = g.counts[0];
            let at = |i: usize, j: usize| s[i + w * j];
            let (i, j) = (base[0], base[1]);
            let (a, b) = (frac[0], frac[1]);
            (1.0 - a) * (1.0 - b) * at(i, j)
                + a * (1.0 - b) * at(i + 1, j)
                + (1.0 - a) * b * at(i, j + 1)
                + a * b * at(i + 1, j + 1)
        })
    }

    /// Multilinear in space, linear in time between stored slices.
    pub fn value_at(&self, x: &[f64], t: f64) -> Result<f64> {
        let (t_lo, t_hi) = self.time_span();
        if t < t_lo - 1e-12 || t > t_hi + 1e-12 {
            return Err(domain!(
                "time {t} is outside the stored span [{t_lo}, {t_hi}]"
            ));
        }
        if self.times.len() == 1 {
            return self.slice_value(0, x);
        }
        let k = self
            .times
            .partition_point(|&s| s <= t)
            .clamp(1, self.times.len() - 1)
            - 1;
        let (a, b) = (self.times[k], self.times[k + 1]);
        let theta = ((t - a) / (b - a)).clamp(0.0, 1.0);
        let left = self.slice_value(k, x)?;
        if theta == 0.0 {
            return Ok(left);
        }
        Ok((1.0 - theta) * left + theta * self.slice_value(k + 1, x)?)
    }

    /// `(min, max)` of the stored nodal values inside `region`.
    pub fn extrema_in(&self, region: &dyn Region) -> Option<(f64, f64)> {
        let mut x = vec![0.0; self.grid.dim()];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (t, s) in self.times.iter().zip(&self.slices) {
            let (a, b) = region.time_range();
            if *t < a || *t > b {
                continue;
            }
            for (idx, v) in s.iter().enumerate() {
                self.grid.node_into(idx, &mut x);
                if region.contains(&x, *t) {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// `max |u - v|` over matching nodes and slices.
    pub fn sup_distance(&self, other: &DiscreteSolution) -> Result<f64> {
        if self.grid.counts != other.grid.counts || self.times.len() != other.times.len() {
            return Err(domain!("solutions live on different grids"));
        }
        Ok(self
            .slices
            .iter()
            .zip(&other.slices)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_requires_whole_cells() {
        assert!(SpaceTimeGrid::uniform(&[0.0], &[1.0], 0.3).is_err());
        let g = SpaceTimeGrid::uniform(&[0.0, -1.0], &[1.0, 1.0], 0.25).unwrap();
        assert_eq!(g.counts(), &[5, 9]);
        assert_eq!(g.node(5 * 8 + 4), vec![1.0, 1.0]);
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(5 + 1));
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let g = SpaceTimeGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        let u = DiscreteSolution::sample(g, &[0.0, 1.0], |x, t| {
            1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1] + t
        })
        .unwrap();
        let v = u.value_at(&[0.3, 0.7], 0.4).unwrap();
        assert!((v - (1.0 + 0.6 - 0.7 + 3.0 * 0.21 + 0.4)).abs() < 1e-14);
        assert!(u.value_at(&[1.5, 0.0], 0.0).is_err());
        assert!(u.value_at(&[0.5, 0.0], 2.0).is_err());
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(RectDomain::new(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 1.0).is_err());
        assert!(RectDomain::new(&[0.0], &[0.0], 1.0).is_err());
        assert!(RectDomain::new(&[0.0], &[1.0], 0.0).is_err());
    }
}
