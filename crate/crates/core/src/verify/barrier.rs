//! Pointwise residuals `∂_t v - div A(Dv)` of the explicit barriers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::math::{linspace, logspace, norm, pow, sqrt};
use crate::report::MarginReport;

/// Barrier points with `x_n` (or `|x|`) at or below this are skipped.
pub const SINGULAR_EXCLUSION: f64 = 1e-3;
/// Residuals at or above `-BARRIER_TOL` pass.
pub const BARRIER_TOL: f64 = 1e-8;

/// `2^{3/2} · 16 (n - 1) L/ν`.
pub fn barrier_m_min(n: usize, nu: f64, ell: f64) -> f64 {
    pow(2.0, 1.5) * 16.0 * (n as f64 - 1.0) * ell / nu
}

/// The least `M` with `(ν/8) 2^{-(g+1)/2} M^{g-1} ≥ 2`, `g = min{g0, 2}`: the
/// size the time term `(2t+1)_-` needs on top of [`barrier_m_min`].
pub fn barrier_m_time(nu: f64, g0: f64) -> f64 {
    let g = g0.min(2.0);
    pow(16.0 * pow(2.0, 0.5 * (g + 1.0)) / nu, 1.0 / (g - 1.0))
}

/// Rejects `M < max(M_min, 4)`.
pub fn check_barrier_m(m: f64, n: usize, nu: f64, ell: f64) -> Result<()> {
    let m_min = barrier_m_min(n, nu, ell);
    if m < m_min || m < 4.0 {
        return Err(Error::Config(format!(
            "barrier constant M = {m} violates M ≥ max(2^(3/2)·16(n-1)L/ν, 4) = {} (n = {n}, ν = {nu}, L = {ell})",
            m_min.max(4.0)
        )));
    }
    Ok(())
}

/// Sampling resolution of a barrier check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierGrid {
    /// Points per tangential axis on `[-1, 1]` (or radial points for the
    /// initial barrier).
    pub tangential: usize,
    /// Points in `x_n ∈ [10⁻³, 2]`, log-spaced (or angles for the initial barrier).
    pub normal: usize,
    /// Points in `t ∈ [-1, 0]`.
    pub time: usize,
}

impl Default for BarrierGrid {
    fn default() -> Self {
        Self {
            tangential: 21,
            normal: 41,
            time: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub report: MarginReport,
    pub samples: Vec<BarrierSample>,
}

impl BarrierReport {
    /// The sample with the least residual.
    pub fn worst_sample(&self) -> Option<&BarrierSample> {
        self.samples
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// `tr(DA(ξ) H)` for a row-major symmetric `H`.
fn trace_product(field: &(impl VectorField + ?Sized), xi: &[f64], hess: &[f64]) -> f64 {
    let n = xi.len();
    let jac = field.jacobian_matrix(xi);
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| jac[i * n + j] * hess[j * n + i])
        .sum()
}

/// Tangential sample points `x'` with `|x'| ≤ 1` in dimension `n - 1`.
fn tangential_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let axis = linspace(-1.0, 1.0, count.max(2));
    match n {
        1 => vec![Vec::new()],
        2 => axis.iter().map(|&a| vec![a]).collect(),
        _ => {
            let mut pts = vec![Vec::new()];
            for _ in 0..n - 1 {
                pts = pts
                    .into_iter()
                    .flat_map(|p: Vec<f64>| {
                        axis.iter().map(move |&a| {
                            let mut q = p.clone();
                            q.push(a);
                            q
                        })
                    })
                    .collect();
            }
            pts.into_iter().filter(|p| norm(p) <= 1.0 + 1e-15).collect()
        }
    }
}

fn normal_points(count: usize) -> Vec<f64> {
    let mut xs = logspace(SINGULAR_EXCLUSION, 2.0, count.max(2));
    xs.extend(linspace(0.05, 2.0, count.max(2)));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn time_points(count: usize) -> Vec<f64> {
    linspace(-1.0, 0.0, count.max(2))
        .into_iter()
        .filter(|&t| t != -0.5)
        .collect()
}

/// Residual of `|x'|² + M x_n^{1/2} + (2t+1)_-` (the time term only when `with_time`).
fn half_space_residual(
    field: &(impl VectorField + ?Sized),
    m: f64,
    xp: &[f64],
    xn: f64,
    t: Option<f64>,
) -> f64 {
    let n = xp.len() + 1;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    for (i, x) in xp.iter().enumerate() {
        grad[i] = 2.0 * x;
        hess[i * n + i] = 2.0;
    }
    grad[n - 1] = 0.5 * m / sqrt(xn);
    hess[n * n - 1] = -0.25 * m / (xn * sqrt(xn));
    let dt = match t {
        Some(t) if t < -0.5 => -2.0,
        _ => 0.0,
    };
    dt - trace_product(field, &grad, &hess)
}

fn collect(
    name: &str,
    anchor: &str,
    samples: Vec<BarrierSample>,
    note: alloc::string::String,
) -> BarrierReport {
    let worst = samples
        .iter()
        .map(|s| s.residual)
        .fold(f64::INFINITY, f64::min);
    let report = MarginReport::new(name, anchor, 0.0, worst, BARRIER_TOL)
        .with_note(note)
        .with_note(format!(
            "{} samples, exclusion {SINGULAR_EXCLUSION}",
            samples.len()
        ));
    BarrierReport { report, samples }
}

/// `v⁺ = |x'|² + M x_n^{1/2} + (2t+1)_-` on `{|x'| ≤ 1, x_n ∈ [10⁻³, 2], t ∈ [-1, 0]}`,
/// `t ≠ -1/2`.
pub fn barrier_lateral_check(
    field: &(impl VectorField + ?Sized),
    m: f64,
    grid: &BarrierGrid,
) -> Result<BarrierReport> {
    let n = field.dim();
    check_barrier_m(m, n, field.nu(), field.ell())?;
    let mut samples = Vec::new();
    for xp in tangential_points(n, grid.tangential) {
        for &xn in &normal_points(grid.normal) {
            for &t in &time_points(grid.time) {
                let residual = half_space_residual(field, m, &xp, xn, Some(t));
                let mut x = xp.clone();
                x.push(xn);
                samples.push(BarrierSample { x, t, residual });
            }
        }
    }
    let m_time = barrier_m_time(field.nu(), field.structure().g0());
    let mut out = collect(
        "barrier-lateral",
        "lateral barrier supersolution",
        samples,
        format!("M = {m}, {}", field.label()),
    );
    out.report
        .notes
        .push(format!("time term needs M ≥ {m_time:.4e}"));
    Ok(out)
}

/// `v⁺ = |x'|² + M x_n^{1/2}` on `{|x'| ≤ 1, x_n ∈ [10⁻³, 2]}`.
pub fn barrier_corner_check(
    field: &(impl VectorField + ?Sized),
    m: f64,
    grid: &BarrierGrid,
) -> Result<BarrierReport> {
    let n = field.dim();
    check_barrier_m(m, n, field.nu(), field.ell())?;
    let mut samples = Vec::new();
    for xp in tangential_points(n, grid.tangential) {
        for &xn in &normal_points(grid.normal) {
            let residual = half_space_residual(field, m, &xp, xn, None);
            let mut x = xp.clone();
            x.push(xn);
            samples.push(BarrierSample {
                x,
                t: 0.0,
                residual,
            });
        }
    }
    Ok(collect(
        "barrier-corner",
        "corner barrier supersolution",
        samples,
        format!("M = {m}, {}", field.label()),
    ))
}

/// `v⁺ = |x|^{1/2}` on `B_1 \ B_{10⁻³}`; the residual does not depend on time.
pub fn barrier_initial_check(
    field: &(impl VectorField + ?Sized),
    grid: &BarrierGrid,
) -> Result<BarrierReport> {
    let n = field.dim();
    let radii = logspace(SINGULAR_EXCLUSION, 1.0, grid.tangential.max(2));
    let directions: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => linspace(0.0, 2.0 * core::f64::consts::PI, grid.normal.max(2) + 1)
            .into_iter()
            .take(grid.normal.max(2))
            .map(|a| vec![crate::math::cos(a), crate::math::sin(a)])
            .collect(),
        _ => tangential_points(n + 1, grid.normal.max(3))
            .into_iter()
            .map(|p| p[..n].to_vec())
            .filter(|p| norm(p) > 0.1)
            .map(|p| {
                let r = norm(&p);
                p.iter().map(|v| v / r).collect()
            })
            .collect(),
    };
    let mut samples = Vec::new();
    for &r in &radii {
        for dir in &directions {
            let x: Vec<f64> = dir.iter().map(|d| r * d).collect();
            // Dv = x/(2|x|^{3/2}), D²v = |x|^{-3/2}/2 (I - 3/2 x̂⊗x̂).
            let grad: Vec<f64> = x.iter().map(|v| 0.5 * v / pow(r, 1.5)).collect();
            let c = 0.5 / pow(r, 1.5);
            let mut hess = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    hess[i * n + j] = c * (if i == j { 1.0 } else { 0.0 } - 1.5 * dir[i] * dir[j]);
                }
            }
            let residual = -trace_product(field, &grad, &hess);
            samples.push(BarrierSample {
                x,
                t: 0.5,
                residual,
            });
        }
    }
    Ok(collect(
        "barrier-initial",
        "initial barrier supersolution",
        samples,
        field.label(),
    ))
}
