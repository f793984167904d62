//! Vector fields `A` with Orlicz ellipticity and growth: the model field
//! `A(ξ) = g(|ξ|) ξ/|ξ|` and the regularized family `A_ε`.

mod regularized;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use regularized::{
    g_eps, mollified_ratio, mollified_ratio_margin, mollifier_mass, regularize, RegularizedField,
    MOLLIFIER_ANGULAR, MOLLIFIER_LINE, MOLLIFIER_RADIAL,
};

use crate::error::{domain, Error, Result};
use crate::math::{dot, norm, operator_norm};
use crate::orlicz::{StructureFunction, VgMap};
use crate::report::{Calibration, MarginReport};

/// Largest supported space dimension for fields evaluated by the solver.
pub const MAX_DIM: usize = 3;

/// An evaluable vector field with structural constants `0 < ν ≤ 1 ≤ L`
/// relative to its structure function.
pub trait VectorField: Send + Sync + Debug {
    fn dim(&self) -> usize;
    /// Writes `A(ξ)` into `out`.
    fn eval(&self, xi: &[f64], out: &mut [f64]);
    /// Writes the row-major Jacobian `DA(ξ)` into `out` (`n × n`).
    fn jacobian(&self, xi: &[f64], out: &mut [f64]);
    fn nu(&self) -> f64;
    fn ell(&self) -> f64;
    /// The structure function the constants refer to.
    fn structure(&self) -> &StructureFunction;
    fn label(&self) -> String;
    /// Regularization parameter, if any.
    fn epsilon(&self) -> Option<f64> {
        None
    }
    /// Whether `A` degenerates or blows up at `ξ = 0`.
    fn degenerate_or_singular(&self) -> bool {
        false
    }

    fn apply(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; xi.len()];
        self.eval(xi, &mut out);
        out
    }

    fn jacobian_matrix(&self, xi: &[f64]) -> Vec<f64> {
        let n = xi.len();
        let mut out = vec![0.0; n * n];
        self.jacobian(xi, &mut out);
        out
    }
}

/// `A(ξ) = g(|ξ|) ξ/|ξ|`, `A(0) = 0`.
#[derive(Debug, Clone)]
pub struct ModelField {
    f: StructureFunction,
    n: usize,
    nu: f64,
    ell: f64,
}

impl ModelField {
    pub fn new(f: StructureFunction, n: usize, nu: f64, ell: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain!("dimension must be at least 1"));
        }
        if !(nu > 0.0 && nu <= 1.0) || !(ell >= 1.0) || !ell.is_finite() {
            return Err(Error::Config(format!(
                "structural constants need 0 < ν ≤ 1 ≤ L, got ν = {nu}, L = {ell}"
            )));
        }
        Ok(Self { f, n, nu, ell })
    }

    /// The model field with the sharp constants `ν = min(1, g0 − 1)` and
    /// `L = max(1, g1 − 1)` (the Jacobian eigenvalues are `g/s` and `g'`).
    pub fn with_sharp_constants(f: StructureFunction, n: usize) -> Result<Self> {
        let (nu, ell) = sharp_constants(&f);
        Self::new(f, n, nu, ell)
    }
}

/// `(min(1, g0 − 1), max(1, g1 − 1))`.
pub fn sharp_constants(f: &StructureFunction) -> (f64, f64) {
    ((f.g0() - 1.0).min(1.0), (f.g1() - 1.0).max(1.0))
}

/// The model field of a structure function.
pub fn model_field(f: StructureFunction, n: usize, nu: f64, ell: f64) -> Result<ModelField> {
    ModelField::new(f, n, nu, ell)
}

impl VectorField for ModelField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, xi: &[f64], out: &mut [f64]) {
        let s = norm(xi);
        if s == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let k = self.f.eval(s) / s;
        for (o, x) in out.iter_mut().zip(xi) {
            *o = k * x;
        }
    }

    fn jacobian(&self, xi: &[f64], out: &mut [f64]) {
        let n = self.n;
        let s = norm(xi);
        if s == 0.0 {
            let d = self.f.derivative(0.0);
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = if i == j { d } else { 0.0 };
                }
            }
            return;
        }
        let k = self.f.eval(s) / s;
        let d = self.f.derivative(s);
        for i in 0..n {
            for j in 0..n {
                let radial = (d - k) * xi[i] * xi[j] / (s * s);
                out[i * n + j] = radial + if i == j { k } else { 0.0 };
            }
        }
    }

    fn nu(&self) -> f64 {
        self.nu
    }
    fn ell(&self) -> f64 {
        self.ell
    }
    fn structure(&self) -> &StructureFunction {
        &self.f
    }
    fn label(&self) -> String {
        format!(
            "model[{}; n={}, nu={}, L={}]",
            self.f.label(),
            self.n,
            self.nu,
            self.ell
        )
    }
    fn degenerate_or_singular(&self) -> bool {
        self.f.g0() != 2.0
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, xi: &[f64], out: &mut [f64]) {
        (**self).eval(xi, out)
    }
    fn jacobian(&self, xi: &[f64], out: &mut [f64]) {
        (**self).jacobian(xi, out)
    }
    fn nu(&self) -> f64 {
        (**self).nu()
    }
    fn ell(&self) -> f64 {
        (**self).ell()
    }
    fn structure(&self) -> &StructureFunction {
        (**self).structure()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn epsilon(&self) -> Option<f64> {
        (**self).epsilon()
    }
    fn degenerate_or_singular(&self) -> bool {
        (**self).degenerate_or_singular()
    }
}

/// Central finite-difference Jacobian with step `1e-5 · max(1, |ξ|)`.
pub fn fd_jacobian(field: &(impl VectorField + ?Sized), xi: &[f64], out: &mut [f64]) {
    let n = xi.len();
    let h = 1e-5 * norm(xi).max(1.0);
    let mut xp = [0.0; MAX_DIM];
    let mut xm = [0.0; MAX_DIM];
    let mut ap = [0.0; MAX_DIM];
    let mut am = [0.0; MAX_DIM];
    for j in 0..n {
        xp[..n].copy_from_slice(xi);
        xm[..n].copy_from_slice(xi);
        xp[j] += h;
        xm[j] -= h;
        field.eval(&xp[..n], &mut ap[..n]);
        field.eval(&xm[..n], &mut am[..n]);
        for i in 0..n {
            out[i * n + j] = (ap[i] - am[i]) / (2.0 * h);
        }
    }
}

/// The two structural inequalities at `(ξ, λ)`:
/// `⟨DA(ξ)λ, λ⟩ ≥ ν g(|ξ|)/|ξ| |λ|²` and `|DA(ξ)| ≤ L g(|ξ|)/|ξ|`.
pub fn ellipticity_margin(
    field: &(impl VectorField + ?Sized),
    xi: &[f64],
    lam: &[f64],
) -> Result<MarginReport> {
    let n = field.dim();
    let s = norm(xi);
    if s == 0.0 {
        return Err(domain!("ellipticity is not defined at ξ = 0"));
    }
    let mut jac = vec![0.0; n * n];
    field.jacobian(xi, &mut jac);
    let k = field.structure().eval(s) / s;
    let l2 = dot(lam, lam);
    let quad: f64 = (0..n)
        .map(|i| lam[i] * dot(&jac[i * n..(i + 1) * n], lam))
        .sum();
    let scale = k * l2.max(1.0);
    let tol = 1e-8 * scale;
    let lower = MarginReport::new(
        "ellipticity-lower",
        "lower ellipticity bound",
        field.nu() * k * l2,
        quad,
        tol,
    );
    let upper = MarginReport::new(
        "ellipticity-upper",
        "upper growth bound on DA",
        operator_norm(&jac, n),
        field.ell() * k,
        tol,
    );
    Ok(MarginReport::worst(
        "ellipticity",
        "ellipticity and growth of DA",
        vec![lower, upper],
    ))
}

/// Ratios `⟨ΔA, Δξ⟩ / (g(s₁+s₂)/(s₁+s₂)|Δξ|²)` and `⟨ΔA, Δξ⟩ / |ΔV_g|²`.
fn monotonicity_ratios(
    field: &(impl VectorField + ?Sized),
    xi1: &[f64],
    xi2: &[f64],
) -> Option<(f64, f64, f64)> {
    let s = norm(xi1) + norm(xi2);
    if s == 0.0 {
        return None;
    }
    let a1 = field.apply(xi1);
    let a2 = field.apply(xi2);
    let d: Vec<f64> = xi1.iter().zip(xi2).map(|(a, b)| a - b).collect();
    let da: Vec<f64> = a1.iter().zip(&a2).map(|(a, b)| a - b).collect();
    let lhs = dot(&da, &d);
    let g = field.structure();
    let first = g.eval(s) / s * dot(&d, &d);
    let vg = VgMap::new(g.clone());
    let v1 = vg.eval(xi1);
    let v2 = vg.eval(xi2);
    let dv: f64 = v1.iter().zip(&v2).map(|(a, b)| (a - b) * (a - b)).sum();
    Some((lhs, first, dv))
}

/// The monotonicity inequalities with constant `c_m`.
pub fn monotonicity_margin(
    field: &(impl VectorField + ?Sized),
    xi1: &[f64],
    xi2: &[f64],
    c_m: f64,
) -> Result<MarginReport> {
    let (lhs, first, dv) = monotonicity_ratios(field, xi1, xi2)
        .ok_or_else(|| domain!("monotonicity needs |ξ₁| + |ξ₂| > 0"))?;
    let tol = 1e-12 * lhs.abs().max(first).max(dv);
    let a = MarginReport::new(
        "monotonicity-g",
        "monotonicity against g(s)/s",
        c_m * first,
        lhs,
        tol,
    );
    let b = MarginReport::new(
        "monotonicity-Vg",
        "monotonicity against V_g increments",
        c_m * dv,
        lhs,
        tol,
    );
    Ok(MarginReport::worst("monotonicity", "monotonicity of A", vec![a, b]).with_calibrated(c_m))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        if norm(&v) <= radius && norm(&v) > 0.0 {
            return v;
        }
    }
}

/// Calibrates `c_m` as `safety ×` the least ratio over `samples` random pairs
/// in the ball of radius `radius`.
pub fn calibrate_monotonicity(
    field: &(impl VectorField + ?Sized),
    seed: u64,
    samples: usize,
    radius: f64,
    safety: f64,
) -> Calibration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = field.dim();
    let mut least = f64::INFINITY;
    for _ in 0..samples {
        let x1 = random_vector(&mut rng, n, radius);
        let x2 = random_vector(&mut rng, n, radius);
        if let Some((lhs, first, dv)) = monotonicity_ratios(field, &x1, &x2) {
            if first > 0.0 {
                least = least.min(lhs / first);
            }
            if dv > 0.0 {
                least = least.min(lhs / dv);
            }
        }
    }
    Calibration {
        constant: safety * least,
        measured: least,
        safety,
        seed,
        samples,
    }
}

/// The growth bounds `|A(ξ)| ≤ c_b G(|ξ|)/|ξ|` and `⟨A(ξ), ξ⟩ ≥ c_c G(|ξ|)`.
pub fn bound_margins(
    field: &(impl VectorField + ?Sized),
    xi: &[f64],
    c_b: f64,
    c_c: f64,
) -> MarginReport {
    let s = norm(xi);
    if s == 0.0 {
        return MarginReport::new("bounds", "growth bounds of A", 0.0, 0.0, 0.0);
    }
    let a = field.apply(xi);
    let big = field.structure().primitive(s);
    let tol = 1e-12 * (c_b * big / s).max(big);
    let upper = MarginReport::new(
        "bound-upper",
        "upper bound |A| <= c G(s)/s",
        norm(&a),
        c_b * big / s,
        tol,
    );
    let lower = MarginReport::new(
        "bound-lower",
        "lower bound <A, xi> >= c G(s)",
        c_c * big,
        dot(&a, xi),
        tol,
    );
    MarginReport::worst("bounds", "growth bounds of A", vec![upper, lower])
}

/// Calibrates `(c_b, c_c)` on a log grid of `|ξ|` in `[lo, hi]` along random
/// directions: `c_b = max(1, safety_up · max ratio)`, `c_c = min(1, safety_down
/// · min ratio)`.
pub fn calibrate_bounds(
    field: &(impl VectorField + ?Sized),
    seed: u64,
    lo: f64,
    hi: f64,
    points: usize,
    slack: f64,
) -> (Calibration, Calibration) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = field.dim();
    let mut max_up: f64 = 0.0;
    let mut min_low = f64::INFINITY;
    for s in crate::math::logspace(lo, hi, points) {
        let dir = random_vector(&mut rng, n, 1.0);
        let e = norm(&dir);
        let xi: Vec<f64> = dir.iter().map(|d| s * d / e).collect();
        let a = field.apply(&xi);
        let big = field.structure().primitive(s);
        max_up = max_up.max(norm(&a) * s / big);
        min_low = min_low.min(dot(&a, &xi) / big);
    }
    let up = Calibration {
        constant: (max_up * (1.0 + slack)).max(1.0),
        measured: max_up,
        safety: 1.0 + slack,
        seed,
        samples: points,
    };
    let low = Calibration {
        constant: (min_low * (1.0 - slack)).min(1.0),
        measured: min_low,
        safety: 1.0 - slack,
        seed,
        samples: points,
    };
    (up, low)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orlicz::make_power_law;

    #[test]
    fn linear_field() {
        let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
        assert_eq!(f.apply(&[0.5, -1.0]), vec![1.0, -2.0]);
        assert_eq!(f.jacobian_matrix(&[0.3, 0.4]), vec![2.0, 0.0, 0.0, 2.0]);
        assert_eq!(f.apply(&[0.0, 0.0]), vec![0.0, 0.0]);
        let r = ellipticity_margin(&f, &[0.3, -0.2], &[1.0, 2.0]).unwrap();
        assert!(r.pass && r.margin.abs() < 1e-12);
        assert!(ellipticity_margin(&f, &[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn orthogonal_direction_margin() {
        let g = make_power_law(3.0).unwrap();
        let f = ModelField::new(g.clone(), 2, 0.5, 2.0).unwrap();
        let xi = [1.0, 0.0];
        let lam = [0.0, 2.0];
        let jac = f.jacobian_matrix(&xi);
        let quad = lam[1] * jac[3] * lam[1];
        let expected = (1.0 - 0.5) * g.eval(1.0) * 4.0;
        assert!((quad - 0.5 * g.eval(1.0) * 4.0 - expected).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_linear_identity() {
        let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
        let r = monotonicity_margin(&f, &[1.0, 2.0], &[-0.5, 0.25], 1.0).unwrap();
        assert!(r.margin.abs() < 1e-12, "{}", r.margin);
        let same = monotonicity_margin(&f, &[1.0, 2.0], &[1.0, 2.0], 1.0).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert_eq!(same.rhs, 0.0);
        assert!(monotonicity_margin(&f, &[0.0, 0.0], &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn bounds_linear_field() {
        let f = ModelField::new(make_power_law(2.0).unwrap(), 2, 1.0, 1.0).unwrap();
        let (up, low) = calibrate_bounds(&f, 1, 1e-3, 1e3, 50, 0.0);
        assert!((up.measured - 2.0).abs() < 1e-12);
        assert!((low.measured - 2.0).abs() < 1e-12);
        assert_eq!(low.constant, 1.0);
        assert!(bound_margins(&f, &[0.0, 0.0], 2.0, 1.0).pass);
        assert!(bound_margins(&f, &[3.0, 1.0], 2.0, 2.0).pass);
    }
}
