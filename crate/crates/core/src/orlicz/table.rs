//! Monotone piecewise-cubic (PCHIP) interpolation of a tabulated `g`, with
//! power-law tails below the first and above the last node.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::math::{ln, pow};

#[derive(Debug, Clone)]
pub(crate) struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
    /// `∫_0^{xs[i]} g`.
    cum: Vec<f64>,
    lo_exp: f64,
    hi_exp: f64,
}

impl MonotoneTable {
    pub(crate) fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 3 {
            return Err(domain!(
                "a tabulated structure function needs at least 3 points, got {}",
                points.len()
            ));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.iter().chain(&ys).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain!("table entries must be finite and nonnegative"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(domain!(
                    "table must be strictly increasing in both columns at s = {}",
                    w[1].0
                ));
            }
        }
        if xs[0] == 0.0 && ys[0] != 0.0 {
            return Err(Error::InvalidIndex(
                "a table starting at s = 0 must have g(0) = 0".to_string(),
            ));
        }
        if xs[0] > 0.0 && ys[0] == 0.0 {
            return Err(Error::InvalidIndex(
                "g vanishes at a positive s".to_string(),
            ));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let hi_exp = ln(ys[n - 1] / ys[n - 2]) / ln(xs[n - 1] / xs[n - 2]);
        let lo_exp = if xs[0] > 0.0 {
            ln(ys[1] / ys[0]) / ln(xs[1] / xs[0])
        } else {
            1.0
        };
        let mut ds = alloc::vec![0.0; n];
        for i in 1..n - 1 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            ds[i] = (w1 + w2) / (w1 / m[i - 1] + w2 / m[i]);
        }
        ds[0] = if xs[0] > 0.0 {
            lo_exp * ys[0] / xs[0]
        } else {
            ((2.0 * h[0] + h[1]) * m[0] - h[0] * m[1]) / (h[0] + h[1])
        }
        .clamp(0.0, 3.0 * m[0]);
        ds[n - 1] = (hi_exp * ys[n - 1] / xs[n - 1]).clamp(0.0, 3.0 * m[n - 2]);
        let mut table = Self {
            xs,
            ys,
            ds,
            cum: Vec::new(),
            lo_exp,
            hi_exp,
        };
        let mut cum = Vec::with_capacity(n);
        let head = if table.xs[0] > 0.0 {
            table.ys[0] * table.xs[0] / (lo_exp + 1.0)
        } else {
            0.0
        };
        cum.push(head);
        for i in 0..n - 1 {
            let next = cum[i] + table.segment_integral(i, 1.0);
            cum.push(next);
        }
        table.cum = cum;
        Ok(table)
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn tail_exponents(&self) -> (f64, f64) {
        (self.lo_exp, self.hi_exp)
    }

    fn locate(&self, s: f64) -> usize {
        // Index i with xs[i] <= s < xs[i+1].
        self.xs
            .partition_point(|&x| x <= s)
            .saturating_sub(1)
            .min(self.xs.len() - 2)
    }

    pub(crate) fn value(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s <= self.xs[0] {
            return if self.xs[0] == 0.0 {
                0.0
            } else {
                self.ys[0] * pow(s / self.xs[0], self.lo_exp)
            };
        }
        if s >= self.xs[n - 1] {
            return self.ys[n - 1] * pow(s / self.xs[n - 1], self.hi_exp);
        }
        let i = self.locate(s);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (s - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.ds[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.ds[i + 1]
    }

    pub(crate) fn derivative(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s < self.xs[0] {
            return self.lo_exp * self.value(s) / s;
        }
        if s >= self.xs[n - 1] {
            return self.hi_exp * self.value(s) / s;
        }
        let i = self.locate(s);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (s - self.xs[i]) / h;
        let t2 = t * t;
        (6.0 * t2 - 6.0 * t) / h * self.ys[i]
            + (3.0 * t2 - 4.0 * t + 1.0) * self.ds[i]
            + (-6.0 * t2 + 6.0 * t) / h * self.ys[i + 1]
            + (3.0 * t2 - 2.0 * t) * self.ds[i + 1]
    }

    /// Exact integral of the cubic on segment `i` from its left node to
    /// the fraction `t` of its length.
    fn segment_integral(&self, i: usize, t: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        h * (self.ys[i] * (0.5 * t4 - t3 + t)
            + h * self.ds[i] * (0.25 * t4 - 2.0 * t3 / 3.0 + 0.5 * t2)
            + self.ys[i + 1] * (-0.5 * t4 + t3)
            + h * self.ds[i + 1] * (0.25 * t4 - t3 / 3.0))
    }

    pub(crate) fn primitive(&self, s: f64) -> f64 {
        let n = self.xs.len();
        if s <= self.xs[0] {
            return if self.xs[0] == 0.0 {
                0.0
            } else {
                s * self.value(s) / (self.lo_exp + 1.0)
            };
        }
        if s >= self.xs[n - 1] {
            let xl = self.xs[n - 1];
            return self.cum[n - 1]
                + self.ys[n - 1] * xl / (self.hi_exp + 1.0)
                    * (pow(s / xl, self.hi_exp + 1.0) - 1.0);
        }
        let i = self.locate(s);
        let t = (s - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.cum[i] + self.segment_integral(i, t)
    }
}
