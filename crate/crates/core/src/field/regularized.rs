//! The mollified and perturbed field `A_ε = φ_ε * A + ε(1+|ξ|)^{g̃1-2} ξ`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{fd_jacobian, VectorField, MAX_DIM};
use crate::error::{domain, Error, Result};
use crate::math::{cos, exp, logspace, norm, operator_norm, pow, sin, sqrt, sym_min_eigen};
use crate::orlicz::StructureFunction;
use crate::quad::{adaptive_simpson, gauss_legendre, gauss_legendre_on};
use crate::report::{Calibration, MarginReport};

/// Radial Gauss–Legendre nodes of the convolution rule.
pub const MOLLIFIER_RADIAL: usize = 16;
/// Gauss–Legendre nodes on each half-line of the convolution rule in `n = 1`,
/// where the rule is cheap enough to be fine.
pub const MOLLIFIER_LINE: usize = 64;
/// Uniform angular nodes of the convolution rule in the plane.
pub const MOLLIFIER_ANGULAR: usize = 32;

const CALIBRATION_RADII: usize = 96;
const CALIBRATION_SAFETY: f64 = 0.9;

fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        exp(-1.0 / (1.0 - r2))
    }
}

/// `∫_{B_1} exp(-1/(1-|η|²)) dη` in dimension `n`.
pub fn mollifier_mass(n: usize) -> f64 {
    let sphere = match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * pow(PI, n as f64 / 2.0) / gamma_half(n),
    };
    let k = n as i32 - 1;
    sphere
        * adaptive_simpson(
            &|r| libm::pow(r, k as f64) * bump(r * r),
            0.0,
            1.0,
            &[],
            1e-13,
        )
}

/// `Γ(n/2)` for integer `n ≥ 1`.
fn gamma_half(n: usize) -> f64 {
    let mut g = if n % 2 == 0 { 1.0 } else { sqrt(PI) };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// One node of each antipodal pair `±η` with its weight; the weights sum to
/// `1/2` so the full rule has unit mass.
fn convolution_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (rs, rw) = gauss_legendre_on(MOLLIFIER_RADIAL, 0.0, 1.0);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match n {
        1 => {
            let (rs, rw) = gauss_legendre_on(MOLLIFIER_LINE, 0.0, 1.0);
            for (r, w) in rs.iter().zip(&rw) {
                nodes.push(*r);
                weights.push(w * bump(r * r));
            }
        }
        2 => {
            let half = MOLLIFIER_ANGULAR / 2;
            for (r, w) in rs.iter().zip(&rw) {
                for j in 0..half {
                    let theta = 2.0 * PI * (j as f64 + 0.5) / MOLLIFIER_ANGULAR as f64;
                    nodes.push(r * cos(theta));
                    nodes.push(r * sin(theta));
                    weights.push(w * r * bump(r * r));
                }
            }
        }
        3 => {
            let (xs, xw) = gauss_legendre(MOLLIFIER_RADIAL);
            for (a, wa) in xs.iter().zip(&xw) {
                if *a <= 0.0 {
                    continue;
                }
                for (b, wb) in xs.iter().zip(&xw) {
                    for (c, wc) in xs.iter().zip(&xw) {
                        let r2 = a * a + b * b + c * c;
                        if r2 < 1.0 {
                            nodes.extend_from_slice(&[*a, *b, *c]);
                            weights.push(wa * wb * wc * bump(r2));
                        }
                    }
                }
            }
        }
        _ => {
            return Err(domain!(
                "regularization is implemented for n ≤ {MAX_DIM}, got n = {n}"
            ))
        }
    }
    let total: f64 = weights.iter().sum::<f64>() * 2.0;
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((nodes, weights))
}

/// `A_ε` built over a base field; `ν̃` and `L̃` are calibrated at construction.
#[derive(Debug, Clone)]
pub struct RegularizedField {
    base: Arc<dyn VectorField>,
    eps: f64,
    gt1: f64,
    g_eps: StructureFunction,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    nu: f64,
    ell: f64,
    nu_calibration: Calibration,
    ell_calibration: Calibration,
}

/// `g_ε(s) = g(s+ε)/(s+ε)·s + ε(1+s)^{g̃1-2}s` with indices `(min(g0, 2), g1 + 1)`.
pub fn g_eps(f: &StructureFunction, eps: f64) -> Result<StructureFunction> {
    f.regularized(eps)
}

/// Regularizes `field` at level `eps ∈ (0, 1)`.
pub fn regularize(field: Arc<dyn VectorField>, eps: f64) -> Result<RegularizedField> {
    RegularizedField::new(field, eps)
}

impl RegularizedField {
    pub fn new(base: Arc<dyn VectorField>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(domain!(
                "regularization parameter must lie in (0, 1), got {eps}"
            ));
        }
        let n = base.dim();
        let (nodes, weights) = convolution_rule(n)?;
        let g_eps = base.structure().regularized(eps)?;
        let gt1 = base.structure().g1() + 1.0;
        let placeholder = Calibration {
            constant: 1.0,
            measured: 1.0,
            safety: 1.0,
            seed: 0,
            samples: 0,
        };
        let mut field = Self {
            base,
            eps,
            gt1,
            g_eps,
            nodes,
            weights,
            nu: 1.0,
            ell: 1.0,
            nu_calibration: placeholder,
            ell_calibration: placeholder,
        };
        field.calibrate()?;
        Ok(field)
    }

    /// Least `λ_min(sym DA)/(g_ε/s)` and largest `|DA|/(g_ε/s)` on a log grid
    /// of radii along `e_1` and the diagonal.
    fn calibrate(&mut self) -> Result<()> {
        let n = self.dim();
        let mut least = f64::INFINITY;
        let mut most: f64 = 0.0;
        let mut jac = vec![0.0; n * n];
        let radii = logspace(1e-4, 1e6, CALIBRATION_RADII);
        let diag = 1.0 / sqrt(n as f64);
        let mut samples = 0;
        for &s in &radii {
            for direction in 0..2 {
                let xi: Vec<f64> = (0..n)
                    .map(|i| {
                        if direction == 0 {
                            if i == 0 {
                                s
                            } else {
                                0.0
                            }
                        } else {
                            s * diag
                        }
                    })
                    .collect();
                fd_jacobian(self, &xi, &mut jac);
                let k = self.g_eps.eval(s) / s;
                least = least.min(sym_min_eigen(&jac, n) / k);
                most = most.max(operator_norm(&jac, n) / k);
                samples += 1;
            }
        }
        if !(least > 0.0) {
            return Err(Error::Hypothesis(format!(
                "regularized field at eps = {} is not elliptic on the calibration grid (least ratio {least})",
                self.eps
            )));
        }
        self.nu = (CALIBRATION_SAFETY * least).min(1.0);
        self.ell = (most / CALIBRATION_SAFETY).max(1.0);
        self.nu_calibration = Calibration {
            constant: self.nu,
            measured: least,
            safety: CALIBRATION_SAFETY,
            seed: 0,
            samples,
        };
        self.ell_calibration = Calibration {
            constant: self.ell,
            measured: most,
            safety: 1.0 / CALIBRATION_SAFETY,
            seed: 0,
            samples,
        };
        Ok(())
    }

    pub fn base(&self) -> &Arc<dyn VectorField> {
        &self.base
    }

    pub fn gtilde1(&self) -> f64 {
        self.gt1
    }

    /// The calibrations behind `ν̃` and `L̃`.
    pub fn calibrations(&self) -> (&Calibration, &Calibration) {
        (&self.nu_calibration, &self.ell_calibration)
    }

    /// Smallest `c` with measured constants `ν/c` and `cL` relative to the
    /// base field.
    pub fn required_factor(&self) -> f64 {
        (self.base.nu() / self.nu_calibration.measured)
            .max(self.ell_calibration.measured / self.base.ell())
    }

    /// The convolution `φ_ε * A` alone.
    pub fn mollified(&self, xi: &[f64], out: &mut [f64]) {
        let n = xi.len();
        let mut plus = [0.0; MAX_DIM];
        let mut minus = [0.0; MAX_DIM];
        let mut ap = [0.0; MAX_DIM];
        let mut am = [0.0; MAX_DIM];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (eta, w) in self.nodes.chunks_exact(n).zip(&self.weights) {
            for i in 0..n {
                plus[i] = xi[i] + self.eps * eta[i];
                minus[i] = xi[i] - self.eps * eta[i];
            }
            self.base.eval(&plus[..n], &mut ap[..n]);
            self.base.eval(&minus[..n], &mut am[..n]);
            for i in 0..n {
                out[i] += w * (ap[i] + am[i]);
            }
        }
    }
}

impl VectorField for RegularizedField {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, xi: &[f64], out: &mut [f64]) {
        self.mollified(xi, out);
        let k = self.eps * pow(1.0 + norm(xi), self.gt1 - 2.0);
        for (o, x) in out.iter_mut().zip(xi) {
            *o += k * x;
        }
    }

    fn jacobian(&self, xi: &[f64], out: &mut [f64]) {
        fd_jacobian(self, xi, out)
    }

    fn nu(&self) -> f64 {
        self.nu
    }
    fn ell(&self) -> f64 {
        self.ell
    }
    fn structure(&self) -> &StructureFunction {
        &self.g_eps
    }
    fn label(&self) -> String {
        format!("regularized[{}; eps={}]", self.base.label(), self.eps)
    }
    fn epsilon(&self) -> Option<f64> {
        Some(self.eps)
    }
}

/// `∫_0^1 F(ℓ u²) ℓ^n u^{2n-1} 2 du`: the radial integral `∫_0^ℓ F(r) r^{n-1} dr`
/// after the substitution `r = ℓu²`, which smooths the `r^{g0-2}` singularity.
fn radial(nodes: &(Vec<f64>, Vec<f64>), ell: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    if ell <= 0.0 {
        return 0.0;
    }
    nodes
        .0
        .iter()
        .zip(&nodes.1)
        .map(|(u, w)| {
            let r = ell * u * u;
            w * f(r) * pow(r, (n - 1) as f64) * 2.0 * ell * u
        })
        .sum()
}

/// Distance from `c` (inside the closed unit ball) to the unit sphere along
/// the unit direction `theta`.
fn ray_length(c: &[f64], theta: &[f64]) -> f64 {
    let b: f64 = c.iter().zip(theta).map(|(x, y)| x * y).sum();
    let c2: f64 = c.iter().map(|x| x * x).sum();
    (-b + sqrt((b * b + 1.0 - c2).max(0.0))).max(0.0)
}

fn ratio_integral(f: &StructureFunction, xi: &[f64], eps: f64, m: usize, mass: f64) -> Result<f64> {
    let n = xi.len();
    let s = norm(xi);
    let mut center = [0.0; MAX_DIM];
    if s < eps {
        for i in 0..n {
            center[i] = xi[i] / eps;
        }
    }
    let c = &center[..n];
    let radial_rule = gauss_legendre_on(m, 0.0, 1.0);
    let integrand = |theta: &[f64], r: f64| {
        let mut eta = [0.0; MAX_DIM];
        let mut point = [0.0; MAX_DIM];
        for i in 0..n {
            eta[i] = c[i] + r * theta[i];
            point[i] = xi[i] - eps * eta[i];
        }
        let d = norm(&point[..n]);
        let e2: f64 = eta[..n].iter().map(|x| x * x).sum();
        let phi = bump(e2);
        if phi == 0.0 {
            0.0
        } else {
            f.eval(d) / d * phi
        }
    };
    let total = match n {
        1 => {
            let mut acc = 0.0;
            for dir in [1.0, -1.0] {
                let theta = [dir];
                let ell = ray_length(c, &theta);
                acc += radial(&radial_rule, ell, 1, |r| integrand(&theta, r));
            }
            acc
        }
        2 => {
            let k = 2 * m;
            let mut acc = 0.0;
            for j in 0..k {
                let a = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                let theta = [cos(a), sin(a)];
                let ell = ray_length(c, &theta);
                acc += radial(&radial_rule, ell, 2, |r| integrand(&theta, r));
            }
            acc * 2.0 * PI / k as f64
        }
        3 => {
            let (zs, zw) = gauss_legendre(m);
            let k = 2 * m;
            let mut acc = 0.0;
            for (z, wz) in zs.iter().zip(&zw) {
                let rho = sqrt(1.0 - z * z);
                for j in 0..k {
                    let a = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                    let theta = [rho * cos(a), rho * sin(a), *z];
                    let ell = ray_length(c, &theta);
                    acc += wz * radial(&radial_rule, ell, 3, |r| integrand(&theta, r));
                }
            }
            acc * 2.0 * PI / k as f64
        }
        _ => {
            return Err(domain!(
                "mollified ratio is implemented for n ≤ {MAX_DIM}, got n = {n}"
            ))
        }
    };
    Ok(total / mass)
}

/// `∫_{B_1} g(|ξ-εη|)/|ξ-εη| φ(η) dη` divided by `g(|ξ|+ε)/(|ξ|+ε)`.
///
/// Polar quadrature centred at the singular point `ξ/ε` when it lies inside
/// the ball, refined from 16 to 256 radial nodes until two levels agree to
/// `1e-10`.
pub fn mollified_ratio(f: &StructureFunction, xi: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain!(
            "regularization parameter must lie in (0, 1), got {eps}"
        ));
    }
    let n = xi.len();
    if n == 0 || n > MAX_DIM {
        return Err(domain!(
            "mollified ratio is implemented for 1 ≤ n ≤ {MAX_DIM}, got n = {n}"
        ));
    }
    let mass = mollifier_mass(n);
    let s = norm(xi) + eps;
    let reference = f.eval(s) / s;
    let mut m = 16;
    let mut prev = ratio_integral(f, xi, eps, m, mass)?;
    while m < 256 {
        m *= 2;
        let next = ratio_integral(f, xi, eps, m, mass)?;
        let done = (next - prev).abs() <= 1e-10 * next.abs();
        prev = next;
        if done {
            break;
        }
    }
    Ok(prev / reference)
}

/// Whether the mollified ratio lies in `[1/c, c]`: reports `max(ρ, 1/ρ)`
/// against `c`.
pub fn mollified_ratio_margin(
    f: &StructureFunction,
    xi: &[f64],
    eps: f64,
    c: f64,
) -> Result<MarginReport> {
    let rho = mollified_ratio(f, xi, eps)?;
    let spread = rho.max(1.0 / rho);
    Ok(MarginReport::new(
        "mollified-ratio",
        "mollified g(s)/s against its shifted value",
        spread,
        c,
        0.0,
    )
    .with_calibrated(c)
    .with_note(format!("ratio = {rho}, eps = {eps}, |xi| = {}", norm(xi))))
}
