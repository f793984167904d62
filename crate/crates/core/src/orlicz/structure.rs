use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::table::MonotoneTable;
use crate::error::{domain, Error, Result};
use crate::math::{exp2, invert_increasing, log2, logspace, pow};
use crate::quad::adaptive_simpson;

/// Relative tolerance of the quadrature used for `G` when no closed form exists.
pub const QUAD_TOL: f64 = 1e-10;

/// How the evaluator of a [`StructureFunction`] is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    PowerLaw,
    PiecewisePower,
    TabulatedMonotone,
    /// `b/G(b) · g(b s)` for a base structure function.
    Rescaled,
    /// The perturbed mollification `g_ε`.
    Regularized,
}

/// Lower growth bound `g(s) ≥ c_ell · s^{(n-2)/(n+2) + eps}` for `s ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFloor {
    pub c_ell: f64,
    pub eps: f64,
    pub dim: usize,
}

impl GrowthFloor {
    pub fn exponent(&self) -> f64 {
        (self.dim as f64 - 2.0) / (self.dim as f64 + 2.0) + self.eps
    }
}

/// An increasing nonlinearity `g` with indicator `s g'(s)/g(s)` pinned in
/// `[g0 - 1, g1 - 1]`.
///
/// Normalization is a stored multiplicative constant: `eval(s) =
/// norm_const() * raw(s)`. Cheap to clone.
#[derive(Debug, Clone)]
pub struct StructureFunction(Arc<Inner>);

#[derive(Debug)]
struct Inner {
    shape: Arc<Shape>,
    g0: f64,
    g1: f64,
    norm_const: f64,
    normalized: bool,
    dim: usize,
    floor: Option<GrowthFloor>,
}

#[derive(Debug)]
enum Shape {
    Power {
        p: f64,
    },
    Oscillating(Oscillating),
    Table(MonotoneTable),
    Rescaled {
        base: StructureFunction,
        b: f64,
    },
    Regularized {
        base: StructureFunction,
        eps: f64,
        gt1: f64,
    },
}

/// The piecewise power function alternating between the exponents
/// `g1 - 1` and `g0 - 1` on the panels `[s_k, s_{k+1})`, `s_k = 2^{2^k}`.
#[derive(Debug)]
struct Oscillating {
    g0: f64,
    g1: f64,
    delta: f64,
    /// `∫_0^{s_k} raw` for every finite breakpoint.
    cum: Vec<f64>,
}

/// Breakpoints `s_0 .. s_9` are finite doubles; `s_10 = 2^1024` is not.
const LEVELS: usize = 10;

fn breakpoint(k: usize) -> f64 {
    exp2(exp2(k as f64))
}

impl Oscillating {
    fn new(g0: f64, g1: f64) -> Self {
        let delta = (g1 - g0) / 3.0;
        let mut osc = Self {
            g0,
            g1,
            delta,
            cum: Vec::with_capacity(LEVELS),
        };
        let a0 = g0 - 1.0 + delta;
        osc.cum.push(pow(2.0, a0 + 1.0) / (a0 + 1.0));
        for k in 0..LEVELS - 1 {
            let next = osc.cum[k] + osc.panel_primitive(k, breakpoint(k + 1))
                - osc.panel_primitive(k, breakpoint(k));
            osc.cum.push(next);
        }
        osc
    }

    /// Panel index for `s ≥ 2`, exact at breakpoints (right-continuous).
    fn panel(&self, s: f64) -> usize {
        let l = log2(s);
        let mut k = if l >= 1.0 {
            (log2(l) as usize).min(LEVELS - 1)
        } else {
            0
        };
        while k + 1 < LEVELS && s >= breakpoint(k + 1) {
            k += 1;
        }
        while k > 0 && s < breakpoint(k) {
            k -= 1;
        }
        k
    }

    /// `(log2 of the coefficient, exponent)` on panel `k`.
    fn branch(&self, k: usize) -> (f64, f64) {
        let log2_next = exp2((k + 1) as f64);
        if k % 2 == 0 {
            (-self.delta * log2_next, self.g1 - 1.0)
        } else {
            (self.delta * log2_next, self.g0 - 1.0)
        }
    }

    fn exponent_at(&self, s: f64) -> f64 {
        if s < 2.0 {
            self.g0 - 1.0 + self.delta
        } else {
            self.branch(self.panel(s)).1
        }
    }

    fn value(&self, s: f64) -> f64 {
        if s < 2.0 {
            return pow(s, self.g0 - 1.0 + self.delta);
        }
        let k = self.panel(s);
        let (c, a) = self.branch(k);
        if k < 4 {
            pow(breakpoint(k + 1), c / exp2((k + 1) as f64)) * pow(s, a)
        } else {
            exp2(c + a * log2(s))
        }
    }

    fn panel_primitive(&self, k: usize, s: f64) -> f64 {
        let (c, a) = self.branch(k);
        exp2(c + (a + 1.0) * log2(s)) / (a + 1.0)
    }

    fn primitive(&self, s: f64) -> f64 {
        if s < 2.0 {
            let a0 = self.g0 - 1.0 + self.delta;
            return pow(s, a0 + 1.0) / (a0 + 1.0);
        }
        let k = self.panel(s);
        self.cum[k] + self.panel_primitive(k, s) - self.panel_primitive(k, breakpoint(k))
    }
}

impl Shape {
    fn raw(&self, s: f64) -> f64 {
        match self {
            Shape::Power { p } => pow(s, p - 1.0),
            Shape::Oscillating(o) => o.value(s),
            Shape::Table(t) => t.value(s),
            Shape::Rescaled { base, b } => base.eval(b * s),
            Shape::Regularized { base, eps, gt1 } => {
                if s == 0.0 {
                    return 0.0;
                }
                let tau = s + eps;
                base.eval(tau) / tau * s + eps * pow(1.0 + s, gt1 - 2.0) * s
            }
        }
    }

    fn raw_derivative(&self, s: f64) -> f64 {
        match self {
            Shape::Power { p } => {
                if s == 0.0 {
                    return power_derivative_at_zero(p - 1.0);
                }
                (p - 1.0) * pow(s, p - 2.0)
            }
            Shape::Oscillating(o) => {
                let a = o.exponent_at(s);
                if s == 0.0 {
                    return power_derivative_at_zero(a);
                }
                a * o.value(s) / s
            }
            Shape::Table(t) => t.derivative(s),
            Shape::Rescaled { base, b } => b * base.derivative(b * s),
            Shape::Regularized { base, eps, gt1 } => {
                let q = gt1 - 2.0;
                let tau = s + eps;
                let g = base.eval(tau);
                let ratio = g / tau;
                let ratio_prime = (base.derivative(tau) * tau - g) / (tau * tau);
                ratio + s * ratio_prime + eps * (pow(1.0 + s, q) + q * pow(1.0 + s, q - 1.0) * s)
            }
        }
    }

    /// Closed-form or cached primitive, `None` when quadrature is required.
    fn raw_primitive(&self, s: f64) -> Option<f64> {
        match self {
            Shape::Power { p } => Some(pow(s, *p) / p),
            Shape::Oscillating(o) => Some(o.primitive(s)),
            Shape::Table(t) => Some(t.primitive(s)),
            Shape::Rescaled { base, b } => Some(base.primitive(b * s) / b),
            Shape::Regularized { .. } => None,
        }
    }

    fn breaks(&self, s_max: f64) -> Vec<f64> {
        match self {
            Shape::Power { .. } => Vec::new(),
            Shape::Oscillating(_) => (0..LEVELS)
                .map(breakpoint)
                .take_while(|&b| b <= s_max)
                .collect(),
            Shape::Table(t) => t.nodes().iter().copied().filter(|&x| x <= s_max).collect(),
            Shape::Rescaled { base, b } => base
                .breakpoints(s_max * b)
                .into_iter()
                .map(|x| x / b)
                .collect(),
            Shape::Regularized { base, eps, .. } => base
                .breakpoints(s_max + eps)
                .into_iter()
                .map(|x| x - eps)
                .filter(|&x| x > 0.0)
                .collect(),
        }
    }
}

fn power_derivative_at_zero(a: f64) -> f64 {
    if a == 1.0 {
        1.0
    } else if a > 1.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

impl StructureFunction {
    fn build(
        shape: Shape,
        g0: f64,
        g1: f64,
        norm_const: f64,
        normalized: bool,
        dim: usize,
    ) -> Self {
        let mut inner = Inner {
            shape: Arc::new(shape),
            g0,
            g1,
            norm_const,
            normalized,
            dim,
            floor: None,
        };
        inner.floor = floor_for(&inner, dim);
        Self(Arc::new(inner))
    }

    /// Normalized power law `g(s) = p s^{p-1}`, so that `G(s) = s^p`.
    pub fn power_law(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidIndex(format!(
                "power-law exponent must exceed 1, got {p}"
            )));
        }
        Ok(Self::build(Shape::Power { p }, p, p, p, true, 2))
    }

    /// The oscillating piecewise power example with `δ = (g1 - g0)/3`,
    /// normalized so that `G(1) = 1`.
    pub fn oscillating(g0: f64, g1: f64, n: usize) -> Result<Self> {
        let lower = 2.0 * n as f64 / (n as f64 + 2.0);
        if n == 0 || !(lower < g0 && g0 < g1) || !g1.is_finite() {
            return Err(Error::InvalidIndex(format!(
                "oscillating example needs 2n/(n+2) < g0 < g1 (n = {n}, g0 = {g0}, g1 = {g1})"
            )));
        }
        let osc = Oscillating::new(g0, g1);
        let norm = 1.0 / osc.primitive(1.0);
        Ok(Self::build(Shape::Oscillating(osc), g0, g1, norm, true, n))
    }

    /// The same piecewise function before normalization (`norm_const = 1`).
    pub fn oscillating_unnormalized(g0: f64, g1: f64, n: usize) -> Result<Self> {
        let f = Self::oscillating(g0, g1, n)?;
        Ok(f.with_factor(1.0))
    }

    /// Monotone cubic interpolation of `(s, g(s))` pairs, normalized.
    ///
    /// The indices are the extremes of the indicator sampled densely over the
    /// table (and the power-law tails), widened by `1e-6`.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        let table = MonotoneTable::new(points)?;
        let (lo, hi) = table.tail_exponents();
        let mut min_o = hi;
        let mut max_o = hi;
        if points[0].0 > 0.0 {
            min_o = min_o.min(lo);
            max_o = max_o.max(lo);
        }
        for w in table.nodes().windows(2) {
            for j in 0..512 {
                let s = w[0] + (w[1] - w[0]) * (j as f64 + 0.5) / 512.0;
                let o = s * table.derivative(s) / table.value(s);
                min_o = min_o.min(o);
                max_o = max_o.max(o);
            }
        }
        let (g0, g1) = (1.0 + min_o - 1e-6, 1.0 + max_o + 1e-6);
        if !(g0 > 1.0) {
            return Err(Error::InvalidIndex(format!(
                "tabulated g has lower index {g0} ≤ 1"
            )));
        }
        let norm = 1.0 / table.primitive(1.0);
        Ok(Self::build(Shape::Table(table), g0, g1, norm, true, 2))
    }

    /// `ḡ(s) = b/G(b) · g(b s)`, normalized again so that `Ḡ(1) = 1`.
    pub fn rescaled(&self, b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(domain!("rescaling factor must be positive, got {b}"));
        }
        let norm = b / self.primitive(b);
        Ok(Self::build(
            Shape::Rescaled {
                base: self.clone(),
                b,
            },
            self.g0(),
            self.g1(),
            norm,
            true,
            self.dimension(),
        ))
    }

    /// `g_ε(s) = g(s+ε)/(s+ε)·s + ε(1+s)^{g̃1-2}s` with `g̃1 = g1 + 1`; indices
    /// `(min(g0, 2), g1 + 1)`. Not renormalized.
    pub fn regularized(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(domain!(
                "regularization parameter must lie in (0, 1), got {eps}"
            ));
        }
        let gt1 = self.g1() + 1.0;
        Ok(Self::build(
            Shape::Regularized {
                base: self.clone(),
                eps,
                gt1,
            },
            self.g0().min(2.0),
            gt1,
            1.0,
            false,
            self.dimension(),
        ))
    }

    /// Same evaluator with `norm_const` replaced by `c` (marked unnormalized
    /// unless `G(1) = 1` still holds).
    pub fn with_factor(&self, c: f64) -> Self {
        let inner = &self.0;
        let raw_g1 = self.raw_primitive_or_quad(1.0);
        let mut next = Inner {
            shape: inner.shape.clone(),
            g0: inner.g0,
            g1: inner.g1,
            norm_const: c,
            normalized: (c * raw_g1 - 1.0).abs() < 1e-12,
            dim: inner.dim,
            floor: None,
        };
        next.floor = floor_for(&next, inner.dim);
        Self(Arc::new(next))
    }

    /// Same function with the growth floor recomputed for dimension `n`.
    pub fn with_dimension(&self, n: usize) -> Self {
        let inner = &self.0;
        let mut next = Inner {
            shape: inner.shape.clone(),
            g0: inner.g0,
            g1: inner.g1,
            norm_const: inner.norm_const,
            normalized: inner.normalized,
            dim: n,
            floor: None,
        };
        next.floor = floor_for(&next, n);
        Self(Arc::new(next))
    }

    pub fn g0(&self) -> f64 {
        self.0.g0
    }
    pub fn g1(&self) -> f64 {
        self.0.g1
    }
    pub fn norm_const(&self) -> f64 {
        self.0.norm_const
    }
    pub fn is_normalized(&self) -> bool {
        self.0.normalized
    }
    pub fn dimension(&self) -> usize {
        self.0.dim
    }
    pub fn growth_floor(&self) -> Option<GrowthFloor> {
        self.0.floor
    }

    pub fn representation(&self) -> Representation {
        match &*self.0.shape {
            Shape::Power { .. } => Representation::PowerLaw,
            Shape::Oscillating(_) => Representation::PiecewisePower,
            Shape::Table(_) => Representation::TabulatedMonotone,
            Shape::Rescaled { .. } => Representation::Rescaled,
            Shape::Regularized { .. } => Representation::Regularized,
        }
    }

    /// Short human-readable description.
    pub fn label(&self) -> String {
        match &*self.0.shape {
            Shape::Power { p } => format!("power(p={p})"),
            Shape::Oscillating(o) => format!("oscillating(g0={}, g1={})", o.g0, o.g1),
            Shape::Table(t) => format!("table({} nodes)", t.nodes().len()),
            Shape::Rescaled { base, b } => format!("rescaled({}, b={b})", base.label()),
            Shape::Regularized { base, eps, .. } => {
                format!("regularized({}, eps={eps})", base.label())
            }
        }
    }

    /// The evaluator before the normalization factor.
    pub fn raw(&self, s: f64) -> f64 {
        self.0.shape.raw(s)
    }

    /// `g(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.0.norm_const * self.0.shape.raw(s)
    }

    /// `g'(s)`; the right derivative at breakpoints.
    pub fn derivative(&self, s: f64) -> f64 {
        self.0.norm_const * self.0.shape.raw_derivative(s)
    }

    /// `s g'(s)/g(s)`.
    pub fn indicator(&self, s: f64) -> f64 {
        s * self.0.shape.raw_derivative(s) / self.0.shape.raw(s)
    }

    /// Panel boundaries of the evaluator up to `s_max`.
    pub fn breakpoints(&self, s_max: f64) -> Vec<f64> {
        self.0.shape.breaks(s_max)
    }

    fn raw_primitive_or_quad(&self, s: f64) -> f64 {
        match self.0.shape.raw_primitive(s) {
            Some(v) => v,
            None => {
                let shape = &self.0.shape;
                adaptive_simpson(&|x| shape.raw(x), 0.0, s, &shape.breaks(s), QUAD_TOL)
            }
        }
    }

    /// `G(s) = ∫_0^s g`: closed form where available, otherwise adaptive
    /// Simpson with the breakpoints as panel boundaries.
    pub fn primitive(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return if s == 0.0 { 0.0 } else { f64::NAN };
        }
        self.0.norm_const * self.raw_primitive_or_quad(s)
    }

    /// `g^{-1}(r)` by bisection.
    pub fn invert(&self, r: f64) -> f64 {
        invert_increasing(|s| self.eval(s), r)
    }

    /// `G^{-1}(r)` by bisection.
    pub fn invert_primitive(&self, r: f64) -> f64 {
        invert_increasing(|s| self.primitive(s), r)
    }
}

fn floor_for(inner: &Inner, n: usize) -> Option<GrowthFloor> {
    if n == 0 {
        return None;
    }
    let eps = inner.g0 - 1.0 - (n as f64 - 2.0) / (n as f64 + 2.0);
    (eps > 0.0).then(|| GrowthFloor {
        c_ell: inner.norm_const * inner.shape.raw(1.0),
        eps,
        dim: n,
    })
}

/// Normalized power law `g(s) = p s^{p-1}`.
pub fn make_power_law(p: f64) -> Result<StructureFunction> {
    StructureFunction::power_law(p)
}

/// The oscillating piecewise-power example, normalized.
pub fn make_oscillating_example(g0: f64, g1: f64, n: usize) -> Result<StructureFunction> {
    StructureFunction::oscillating(g0, g1, n)
}

/// `g^{-1}(r)` for `r ≥ 0`.
pub fn invert_g(f: &StructureFunction, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(domain!("invert_g needs r ≥ 0, got {r}"));
    }
    Ok(f.invert(r))
}

/// Checks the sampled structure-function invariants on a log grid of
/// `(lo, hi]`: `g(0) = 0`, strict increase, indicator within the indices
/// (to `tol`), normalization (if normalized) and the growth floor.
pub fn check_invariants(
    f: &StructureFunction,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> core::result::Result<(), String> {
    if f.eval(0.0) != 0.0 {
        return Err("g(0) != 0".to_string());
    }
    let grid = logspace(lo, hi, points);
    let breaks = f.breakpoints(hi * 2.0);
    let mut prev = 0.0;
    for &s in &grid {
        let g = f.eval(s);
        if !(g > prev) {
            return Err(format!("g not strictly increasing at s = {s}"));
        }
        prev = g;
        let near_break = breaks.iter().any(|b| (s - b).abs() <= 1e-6 * b.max(1.0));
        if !near_break {
            let o = f.indicator(s);
            if o < f.g0() - 1.0 - tol || o > f.g1() - 1.0 + tol {
                return Err(format!(
                    "indicator {o} outside [{}, {}] at s = {s}",
                    f.g0() - 1.0,
                    f.g1() - 1.0
                ));
            }
        }
        if let Some(fl) = f.growth_floor() {
            if s >= 1.0 && g < fl.c_ell * pow(s, fl.exponent()) * (1.0 - 1e-12) {
                return Err(format!("growth floor violated at s = {s}"));
            }
        }
    }
    if f.is_normalized() && (f.primitive(1.0) - 1.0).abs() > 1e-8 {
        return Err(format!("G(1) = {} != 1", f.primitive(1.0)));
    }
    Ok(())
}
