//! Orlicz structure functions and the functions derived from them: `G`, the
//! Young conjugate `G̃`, the map `V_g` and the Luxemburg norm.

mod structure;
mod table;

use alloc::vec::Vec;

pub use structure::{
    check_invariants, invert_g, make_oscillating_example, make_power_law, GrowthFloor,
    Representation, StructureFunction, QUAD_TOL,
};

use crate::error::{domain, Result};
use crate::math::{abs, invert_increasing, norm, pow, sqrt};
use crate::quad::adaptive_simpson;
use crate::report::MarginReport;

/// `G(s) = ∫_0^s g` for a structure function.
#[derive(Debug, Clone)]
pub struct OrliczFunction {
    base: StructureFunction,
}

impl OrliczFunction {
    pub fn new(base: StructureFunction) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &StructureFunction {
        &self.base
    }

    /// `G(s)`, for `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        self.base.primitive(s)
    }

    /// `G^{-1}(r)`.
    pub fn invert(&self, r: f64) -> f64 {
        self.base.invert_primitive(r)
    }
}

impl From<StructureFunction> for OrliczFunction {
    fn from(f: StructureFunction) -> Self {
        Self::new(f)
    }
}

/// `G(s)` with a domain check.
#[allow(non_snake_case)]
pub fn eval_G(f: &OrliczFunction, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(domain!("G needs s ≥ 0, got {s}"));
    }
    Ok(f.eval(s))
}

/// The Young conjugate `G̃(r) = ∫_0^r g^{-1} = sup_s (r s − G(s))`.
#[derive(Debug, Clone)]
pub struct YoungConjugate {
    base: OrliczFunction,
}

impl YoungConjugate {
    pub fn new(base: OrliczFunction) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &OrliczFunction {
        &self.base
    }

    /// `G̃(r)`. The integral `∫_0^r g^{-1}` is evaluated through the
    /// substitution `ρ = g(σ)`, which turns it into `r g^{-1}(r) − G(g^{-1}(r))`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return if r == 0.0 { 0.0 } else { f64::NAN };
        }
        let sigma = self.base.base().invert(r);
        (r * sigma - self.base.eval(sigma)).max(0.0)
    }

    /// `G̃(r)` by direct adaptive quadrature of `g^{-1}` (slow; a cross-check).
    pub fn eval_by_quadrature(&self, r: f64) -> f64 {
        let g = self.base.base();
        let breaks: Vec<f64> = g
            .breakpoints(g.invert(r))
            .into_iter()
            .map(|s| g.eval(s))
            .collect();
        adaptive_simpson(&|rho| g.invert(rho), 0.0, r, &breaks, QUAD_TOL)
    }
}

/// `G̃(r)` with a domain check.
#[allow(non_snake_case)]
pub fn eval_Gtilde(c: &YoungConjugate, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain!("G̃ needs r ≥ 0, got {r}"));
    }
    Ok(c.eval(r))
}

/// `G(s) + G̃(r) − s r`, nonnegative by Young's inequality.
pub fn young_gap(f: &OrliczFunction, s: f64, r: f64) -> f64 {
    let conj = YoungConjugate::new(f.clone());
    f.eval(s) + conj.eval(r) - s * r
}

/// The doubling sandwiches for `G` (exponents `g0, g1`) and `g`
/// (exponents `g0 − 1, g1 − 1`) at `(α, r)`, reduced to the worst margin.
pub fn delta2_margin(f: &OrliczFunction, alpha: f64, r: f64) -> MarginReport {
    let g = f.base();
    let (g0, g1) = (g.g0(), g.g1());
    let sandwich = |name: &str, v_r: f64, v_ar: f64, e0: f64, e1: f64| {
        let a0 = pow(alpha, e0);
        let a1 = pow(alpha, e1);
        let lo = a0.min(a1) * v_r;
        let hi = a0.max(a1) * v_r;
        let tol = 1e-9 * hi.max(v_ar).max(f64::MIN_POSITIVE);
        alloc::vec![
            MarginReport::new(name, "doubling sandwich, lower side", lo, v_ar, tol),
            MarginReport::new(name, "doubling sandwich, upper side", v_ar, hi, tol),
        ]
    };
    let mut parts = sandwich("delta2-G", f.eval(r), f.eval(alpha * r), g0, g1);
    parts.extend(sandwich(
        "delta2-g",
        g.eval(r),
        g.eval(alpha * r),
        g0 - 1.0,
        g1 - 1.0,
    ));
    MarginReport::worst("delta2", "doubling (Delta_2) sandwich for G and g", parts)
}

/// `G(r) − G̃(G(r)/r)`, nonnegative.
pub fn conjugate_bound_margin(f: &OrliczFunction, r: f64) -> f64 {
    let conj = YoungConjugate::new(f.clone());
    let big = f.eval(r);
    big - conj.eval(big / r)
}

/// The map `V_g(ξ) = (g(|ξ|)/|ξ|)^{1/2} ξ`.
#[derive(Debug, Clone)]
pub struct VgMap {
    base: StructureFunction,
}

impl VgMap {
    pub fn new(base: StructureFunction) -> Self {
        Self { base }
    }

    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        let s = norm(xi);
        if s == 0.0 {
            return alloc::vec![0.0; xi.len()];
        }
        let k = sqrt(self.base.eval(s) / s);
        xi.iter().map(|x| k * x).collect()
    }

    /// Inverse by radial bisection on `t ↦ (g(t) t)^{1/2}`.
    pub fn invert(&self, eta: &[f64]) -> Vec<f64> {
        let m = norm(eta);
        if m == 0.0 {
            return alloc::vec![0.0; eta.len()];
        }
        let t = invert_increasing(|t| self.base.eval(t) * t, m * m);
        eta.iter().map(|e| t * e / m).collect()
    }
}

pub fn eval_vg(m: &VgMap, xi: &[f64]) -> Vec<f64> {
    m.eval(xi)
}

pub fn invert_vg(m: &VgMap, eta: &[f64]) -> Vec<f64> {
    m.invert(eta)
}

/// Luxemburg norm of weighted samples `(weight, value)`: the `λ` with
/// `Σ wᵢ G(|uᵢ|/λ) = 1`, found by bisection.
pub fn luxemburg_norm(f: &OrliczFunction, samples: &[(f64, f64)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(domain!("Luxemburg norm of an empty sample"));
    }
    if samples
        .iter()
        .any(|(w, u)| !(*w >= 0.0) || !w.is_finite() || !u.is_finite())
    {
        return Err(domain!("Luxemburg norm needs finite nonnegative weights"));
    }
    if samples.iter().all(|(w, u)| *w == 0.0 || *u == 0.0) {
        return Ok(0.0);
    }
    let modular = |lambda: f64| -> f64 {
        samples
            .iter()
            .map(|(w, u)| w * f.eval(abs(*u) / lambda))
            .sum()
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    while modular(hi) > 1.0 {
        hi *= 2.0;
    }
    while modular(lo) <= 1.0 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
