use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    BoundaryDatum, DiscreteSolution, GridParams, MaxPrinciple, RectDomain, SolveProvenance,
    SpaceTimeGrid,
};
use crate::error::{domain, Error, Result};
use crate::field::VectorField;

/// Lower bound on `|Du|` when evaluating `g(s)/s` for the CFL bound.
pub const CFL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    counts: [usize; 2],
    periodic: bool,
}

impl Layout {
    fn of(grid: &SpaceTimeGrid) -> Self {
        let c = grid.counts();
        Self {
            n: c.len(),
            counts: [c[0], if c.len() > 1 { c[1] } else { 1 }],
            periodic: false,
        }
    }

    fn nodes(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    fn face_counts(&self, axis: usize) -> [usize; 2] {
        let mut c = self.counts;
        if !self.periodic {
            c[axis] -= 1;
        }
        c
    }

    fn step(&self, m: [usize; 2], axis: usize, up: bool) -> [usize; 2] {
        let mut out = m;
        let len = self.counts[axis];
        out[axis] = if up {
            (m[axis] + 1) % len
        } else {
            (m[axis] + len - 1) % len
        };
        out
    }

    fn at(&self, m: [usize; 2]) -> usize {
        m[0] + self.counts[0] * m[1]
    }
}

/// Face-centred gradients: for each axis `k`, the faces between nodes `m` and
/// `m + e_k`, each carrying a full `n`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceGradients {
    n: usize,
    counts: Vec<[usize; 2]>,
    values: Vec<Vec<f64>>,
}

impl FaceGradients {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of faces normal to `axis`.
    pub fn len(&self, axis: usize) -> usize {
        self.counts[axis][0] * self.counts[axis][1]
    }

    pub fn is_empty(&self) -> bool {
        (0..self.n).all(|a| self.len(a) == 0)
    }

    /// Gradient vector on face `idx` normal to `axis`.
    pub fn get(&self, axis: usize, idx: usize) -> &[f64] {
        &self.values[axis][idx * self.n..(idx + 1) * self.n]
    }

    /// Lower node `(i, j)` of face `idx` normal to `axis`.
    pub fn face_node(&self, axis: usize, idx: usize) -> [usize; 2] {
        let w = self.counts[axis][0];
        [idx % w, idx / w]
    }

    /// Midpoint of face `idx` normal to `axis` on `grid`.
    pub fn face_center(&self, grid: &SpaceTimeGrid, axis: usize, idx: usize) -> Vec<f64> {
        let m = self.face_node(axis, idx);
        let (lo, _) = grid.bounds();
        (0..self.n)
            .map(|k| lo[k] + grid.h() * (m[k] as f64 + if k == axis { 0.5 } else { 0.0 }))
            .collect()
    }

    /// Every face gradient, all axes.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.iter().flat_map(move |v| v.chunks_exact(self.n))
    }

    /// `max |Du|` over all faces.
    pub fn max_norm(&self) -> f64 {
        self.iter().map(crate::math::norm).fold(0.0, f64::max)
    }
}

fn transverse(layout: &Layout, u: &[f64], h: f64, m: [usize; 2], axis: usize) -> f64 {
    let len = layout.counts[axis];
    if layout.periodic || (m[axis] > 0 && m[axis] + 1 < len) {
        (u[layout.at(layout.step(m, axis, true))] - u[layout.at(layout.step(m, axis, false))])
            / (2.0 * h)
    } else if m[axis] == 0 {
        (u[layout.at(layout.step(m, axis, true))] - u[layout.at(m)]) / h
    } else {
        (u[layout.at(m)] - u[layout.at(layout.step(m, axis, false))]) / h
    }
}

fn faces(layout: &Layout, u: &[f64], h: f64) -> FaceGradients {
    let n = layout.n;
    let mut counts = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for a in 0..n {
        let fc = layout.face_counts(a);
        let mut vals = Vec::with_capacity(fc[0] * fc[1] * n);
        for j in 0..fc[1] {
            for i in 0..fc[0] {
                let p = [i, j];
                let q = layout.step(p, a, true);
                for k in 0..n {
                    if k == a {
                        vals.push((u[layout.at(q)] - u[layout.at(p)]) / h);
                    } else {
                        vals.push(
                            0.5 * (transverse(layout, u, h, p, k) + transverse(layout, u, h, q, k)),
                        );
                    }
                }
            }
        }
        counts.push(fc);
        values.push(vals);
    }
    FaceGradients { n, counts, values }
}

/// `(u_{m+e_k} - u_m)/h` on every face, with the transverse components
/// averaged from the four neighbouring differences (one-sided on boundary rows).
pub fn discrete_gradient(u: &[f64], grid: &SpaceTimeGrid) -> FaceGradients {
    faces(&Layout::of(grid), u, grid.h())
}

/// Normal flux `A_k(Du)` on every face normal to `k`.
fn fluxes(field: &(impl VectorField + ?Sized), grads: &FaceGradients) -> Vec<Vec<f64>> {
    let n = grads.n;
    let mut out = [0.0; 2];
    (0..n)
        .map(|a| {
            grads.values[a]
                .chunks_exact(n)
                .map(|g| {
                    field.eval(g, &mut out[..n]);
                    out[a]
                })
                .collect()
        })
        .collect()
}

fn divergence_from(layout: &Layout, flux: &[Vec<f64>], h: f64, out: &mut [f64]) {
    let n = layout.n;
    for j in 0..layout.counts[1] {
        for i in 0..layout.counts[0] {
            let m = [i, j];
            let idx = layout.at(m);
            let interior =
                layout.periodic || (0..n).all(|k| m[k] > 0 && m[k] + 1 < layout.counts[k]);
            if !interior {
                out[idx] = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for (a, fa) in flux.iter().enumerate() {
                let fc = layout.face_counts(a);
                let lower = layout.step(m, a, false);
                acc += fa[m[0] + fc[0] * m[1]] - fa[lower[0] + fc[0] * lower[1]];
            }
            out[idx] = acc / h;
        }
    }
}

/// `(1/h) Σ_k [A_k(face_{m+½e_k}) - A_k(face_{m-½e_k})]` at interior nodes
/// (zero on the boundary).
pub fn discrete_divergence(
    field: &(impl VectorField + ?Sized),
    u: &[f64],
    grid: &SpaceTimeGrid,
) -> Vec<f64> {
    let layout = Layout::of(grid);
    let grads = faces(&layout, u, grid.h());
    let flux = fluxes(field, &grads);
    let mut out = vec![0.0; layout.nodes()];
    divergence_from(&layout, &flux, grid.h(), &mut out);
    out
}

/// `max` over faces of `L g(s)/s` at `s = max(|Du|, CFL_FLOOR)`, together with
/// the `s → 0` limit `L g'(0)` when it is finite.
fn spectral_bound(field: &(impl VectorField + ?Sized), grads: &FaceGradients) -> f64 {
    let g = field.structure();
    let ell = field.ell();
    let at_zero = g.derivative(0.0);
    let mut lambda = if at_zero.is_finite() {
        ell * at_zero
    } else {
        0.0
    };
    for v in grads.iter() {
        let s = crate::math::norm(v).max(CFL_FLOOR);
        lambda = lambda.max(ell * g.eval(s) / s);
    }
    lambda
}

fn cfl_from(
    field: &(impl VectorField + ?Sized),
    grads: &FaceGradients,
    h: f64,
    safety: f64,
) -> Result<f64> {
    let lambda = spectral_bound(field, grads);
    if !lambda.is_finite() || !(lambda > 0.0) {
        return Err(Error::Unstable {
            step: 0,
            time: f64::NAN,
            reason: format!("diffusivity bound is {lambda}"),
        });
    }
    Ok(safety * h * h / (2.0 * grads.n as f64 * lambda))
}

/// `τ = safety · h²/(2nΛ)` with `Λ` the largest diffusivity bound over faces.
pub fn cfl_step(
    field: &(impl VectorField + ?Sized),
    u: &[f64],
    grid: &SpaceTimeGrid,
    safety: f64,
) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::Config(format!(
            "CFL safety must lie in (0, 1], got {safety}"
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(domain!("nodal values must be finite"));
    }
    cfl_from(field, &discrete_gradient(u, grid), grid.h(), safety)
}

fn scheme_label(n: usize) -> String {
    let mut s = String::from("explicit Euler, conservative face fluxes, adaptive CFL");
    if n == 1 {
        s.push_str(" (n = 1 diagnostic)");
    }
    s
}

struct Run<'a> {
    field: &'a dyn VectorField,
    psi: &'a BoundaryDatum,
    u: Vec<f64>,
    next: Vec<f64>,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
    lower: f64,
    upper: f64,
    sup_psi: f64,
    violation: f64,
    warnings: Vec<String>,
}

impl Run<'_> {
    fn absorb_boundary(&mut self, v: f64) {
        self.lower = self.lower.min(v);
        self.upper = self.upper.max(v);
        self.sup_psi = self.sup_psi.max(v.abs());
    }
}

/// Solves `u_t = div A(Du)` in `dom` with `u = ψ` on the parabolic boundary.
pub fn solve_cauchy_dirichlet(
    field: &dyn VectorField,
    dom: &RectDomain,
    psi: &BoundaryDatum,
    params: &GridParams,
) -> Result<DiscreteSolution> {
    Ok(solve_lockstep(&[field], dom, core::slice::from_ref(psi), params)?.remove(0))
}

/// Solves several problems on the same grid with a common time step (the
/// least of their CFL steps), so all solutions share their time levels.
pub fn solve_lockstep(
    fields: &[&dyn VectorField],
    dom: &RectDomain,
    psis: &[BoundaryDatum],
    params: &GridParams,
) -> Result<Vec<DiscreteSolution>> {
    params.validate()?;
    if fields.is_empty() || fields.len() != psis.len() {
        return Err(Error::Config(
            "lockstep solve needs one boundary datum per field".into(),
        ));
    }
    let n = dom.dim();
    if fields.iter().any(|f| f.dim() != n) {
        return Err(Error::Config(format!(
            "field dimension does not match the domain dimension {n}"
        )));
    }
    let mut grid = SpaceTimeGrid::uniform(&dom.lower, &dom.upper, params.h)?;
    let layout = Layout::of(&grid);
    let h = grid.h();
    let count = layout.nodes();
    let boundary: Vec<usize> = (0..count).filter(|&i| grid.is_boundary(i)).collect();
    let coords: Vec<Vec<f64>> = (0..count).map(|i| grid.node(i)).collect();

    let mut runs: Vec<Run> = fields
        .iter()
        .zip(psis)
        .map(|(field, psi)| {
            let u: Vec<f64> = coords.iter().map(|x| psi.eval(x, dom.t0)).collect();
            let mut warnings = Vec::new();
            if field.degenerate_or_singular() {
                warnings.push(format!(
                    "field {} degenerates or blows up at 0; a regularized field is the intended input",
                    field.label()
                ));
            }
            let mut run = Run {
                field: *field,
                psi,
                next: u.clone(),
                slices: vec![u.clone()],
                u,
                times: vec![dom.t0],
                lower: f64::INFINITY,
                upper: f64::NEG_INFINITY,
                sup_psi: 0.0,
                violation: 0.0,
                warnings,
            };
            for i in 0..count {
                let v = run.u[i];
                run.absorb_boundary(v);
            }
            run
        })
        .collect();

    let mut t = dom.t0;
    let mut step_times = vec![t];
    let mut step = 0usize;
    let mut div = vec![0.0; count];
    let mut flux_cache: Vec<Vec<Vec<f64>>> = Vec::with_capacity(runs.len());
    let mut warned_fixed = false;
    while t < dom.t_final {
        if step >= params.max_steps {
            return Err(Error::Unstable {
                step,
                time: t,
                reason: format!("step budget {} exhausted", params.max_steps),
            });
        }
        flux_cache.clear();
        let mut tau = f64::INFINITY;
        for run in &runs {
            let grads = faces(&layout, &run.u, h);
            let cfl =
                cfl_from(run.field, &grads, h, params.safety).map_err(|_| Error::Unstable {
                    step,
                    time: t,
                    reason: "nonfinite diffusivity bound".into(),
                })?;
            tau = tau.min(cfl);
            flux_cache.push(fluxes(run.field, &grads));
        }
        if let Some(fixed) = params.fixed_tau {
            if fixed > tau && !warned_fixed {
                warned_fixed = true;
                for run in &mut runs {
                    run.warnings.push(format!(
                        "fixed step {fixed} exceeds the CFL step {tau} at t = {t}"
                    ));
                }
            }
            tau = fixed;
        }
        let remaining = dom.t_final - t;
        let last = tau >= remaining * (1.0 - 1e-12);
        if last {
            tau = remaining;
        }
        let t_next = if last { dom.t_final } else { t + tau };
        step += 1;
        for (run, flux) in runs.iter_mut().zip(&flux_cache) {
            divergence_from(&layout, flux, h, &mut div);
            for i in 0..count {
                run.next[i] = run.u[i] + tau * div[i];
            }
            for &i in &boundary {
                let v = run.psi.eval(&coords[i], t_next);
                run.next[i] = v;
                run.absorb_boundary(v);
            }
            core::mem::swap(&mut run.u, &mut run.next);
            let bound = 2.0 * run.sup_psi + 1.0;
            let mut worst = 0.0f64;
            for &v in &run.u {
                if !v.is_finite() || v.abs() > bound {
                    return Err(Error::Unstable {
                        step,
                        time: t_next,
                        reason: format!(
                            "|u| = {} exceeds 2 sup|ψ| + 1 = {bound} for {}",
                            v.abs(),
                            run.field.label()
                        ),
                    });
                }
                worst = worst.max(v - run.upper).max(run.lower - v);
            }
            run.violation = run.violation.max(worst);
            if step % params.save_stride == 0 || last {
                run.times.push(t_next);
                run.slices.push(run.u.clone());
            }
        }
        t = t_next;
        step_times.push(t);
    }
    grid.set_step_times(step_times);
    Ok(runs
        .into_iter()
        .map(|run| {
            let provenance = SolveProvenance {
                field: run.field.label(),
                epsilon: run.field.epsilon(),
                boundary: run.psi.label().into(),
                config_hash: String::new(),
                scheme: scheme_label(n),
                warnings: run.warnings,
            };
            let mp = MaxPrinciple {
                lower: run.lower,
                upper: run.upper,
                violation: run.violation,
            };
            DiscreteSolution::from_parts(grid.clone(), run.times, run.slices, provenance, Some(mp))
        })
        .collect())
}

/// Runs `steps` explicit steps on the periodic grid with `counts` nodes per
/// axis and returns `|Σ u^{m+1} - Σ u^m|` for each step.
pub fn periodic_conservation(
    field: &(impl VectorField + ?Sized),
    counts: &[usize],
    h: f64,
    u0: &[f64],
    steps: usize,
    safety: f64,
) -> Result<Vec<f64>> {
    let n = counts.len();
    if !(1..=2).contains(&n) || counts.iter().any(|&c| c < 3) {
        return Err(Error::Config(
            "periodic diagnostic needs n ∈ {1, 2} and at least 3 nodes per axis".into(),
        ));
    }
    let layout = Layout {
        n,
        counts: [counts[0], if n > 1 { counts[1] } else { 1 }],
        periodic: true,
    };
    if u0.len() != layout.nodes() {
        return Err(domain!(
            "initial data has {} values, grid has {}",
            u0.len(),
            layout.nodes()
        ));
    }
    let mut u = u0.to_vec();
    let mut div = vec![0.0; u.len()];
    let mut drift = Vec::with_capacity(steps);
    for _ in 0..steps {
        let grads = faces(&layout, &u, h);
        let tau = cfl_from(field, &grads, h, safety)?;
        let flux = fluxes(field, &grads);
        divergence_from(&layout, &flux, h, &mut div);
        let before: f64 = u.iter().sum();
        for (v, d) in u.iter_mut().zip(&div) {
            *v += tau * d;
        }
        let after: f64 = u.iter().sum();
        drift.push((after - before).abs());
    }
    Ok(drift)
}
