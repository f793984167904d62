//! Experiment configs: TOML text in, a resolved [`Plan`] out.

use std::path::Path;
use std::sync::Arc;

use orlicz_core::field::{regularize, ModelField, VectorField};
use orlicz_core::geometry::ModulusOfContinuity;
use orlicz_core::orlicz::{make_oscillating_example, make_power_law, StructureFunction};
use orlicz_core::solver::{BoundaryDatum, GridParams, RectDomain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;
use crate::expr::Expr;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Check names, run in this order.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Output directory; `--out` wins over it.
    pub out: Option<String>,
    pub structure: StructureSpec,
    #[serde(default)]
    pub field: FieldSpec,
    pub domain: Option<DomainSpec>,
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub params: CheckParams,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    #[default]
    Power,
    Oscillating,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub kind: StructureKind,
    /// Power law exponent.
    pub p: Option<f64>,
    /// Multiplies `g`; `factor = 1` with `p = 2` gives `g(s) = s`.
    pub factor: Option<f64>,
    pub g0: Option<f64>,
    pub g1: Option<f64>,
    /// Dimension used for the growth-floor normalization of the
    /// oscillating example.
    pub n: Option<usize>,
    /// `(s, g(s))` with `s > 0`, increasing.
    pub points: Option<Vec<[f64; 2]>>,
}

impl Default for StructureSpec {
    fn default() -> Self {
        Self::power(2.0)
    }
}

impl StructureSpec {
    pub fn power(p: f64) -> Self {
        Self {
            kind: StructureKind::Power,
            p: Some(p),
            factor: None,
            g0: None,
            g1: None,
            n: None,
            points: None,
        }
    }

    pub fn oscillating(g0: f64, g1: f64) -> Self {
        Self {
            kind: StructureKind::Oscillating,
            p: None,
            factor: None,
            g0: Some(g0),
            g1: Some(g1),
            n: None,
            points: None,
        }
    }

    pub fn build(&self) -> Result<StructureFunction, LabError> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| LabError::Config(format!("structure.{key} is required here")))
        };
        let f = match self.kind {
            StructureKind::Power => make_power_law(need(self.p, "p")?)?,
            StructureKind::Oscillating => make_oscillating_example(
                need(self.g0, "g0")?,
                need(self.g1, "g1")?,
                self.n.unwrap_or(2),
            )?,
            StructureKind::Tabulated => {
                let points = self
                    .points
                    .as_ref()
                    .ok_or_else(|| LabError::Config("structure.points is required here".into()))?;
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                StructureFunction::tabulated(&pts)?
            }
        };
        Ok(match self.factor {
            Some(c) => f.with_factor(c),
            None => f,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    #[default]
    Model,
    Regularized,
    Continuation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub kind: FieldKind,
    /// Both or neither of `nu`, `ell`; sharp constants when absent.
    pub nu: Option<f64>,
    pub ell: Option<f64>,
    pub eps: Option<f64>,
    pub j_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub t0: f64,
    pub t_final: f64,
    pub h: f64,
    pub safety: Option<f64>,
    pub stride: Option<usize>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    /// `ψ(x, t)` as an expression.
    pub expr: Option<String>,
    /// `(x, ψ)` breakpoints in one dimension, interpolated linearly and
    /// constant in time.
    pub table: Option<Vec<[f64; 2]>>,
    /// Exact solution for the `exact-error` check.
    pub exact: Option<String>,
    /// Declared modulus `c r^γ` as `[c, γ]`.
    pub holder: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    pub error_tol: Option<f64>,
    pub slack: Option<f64>,
    pub barrier_m: Option<f64>,
    pub barrier_points: Option<[usize; 3]>,
    pub kappa: Option<f64>,
    pub radius: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub center_t: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub samples: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((0, 0));
            LabError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String), LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, config_hash(&text)?))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// SHA-256 of the config re-serialized with sorted keys, so comments,
/// whitespace and key order do not change it.
pub fn config_hash(text: &str) -> Result<String, LabError> {
    let value: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        LabError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let canonical = toml::to_string(&value).map_err(|e| LabError::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub hash: String,
    pub seed: u64,
    pub structure: StructureFunction,
    pub domain: Option<RectDomain>,
    pub params: Option<GridParams>,
    pub boundary: Option<BoundaryDatum>,
    pub exact: Option<Arc<Expr>>,
}

impl Plan {
    pub fn resolve(
        config: ExperimentConfig,
        hash: String,
        seed_override: Option<u64>,
    ) -> Result<Self, LabError> {
        let structure = config.structure.build()?;
        let (domain, params) = match &config.domain {
            Some(d) => {
                if d.lower.len() != d.upper.len() || d.lower.is_empty() {
                    return Err(LabError::Config(
                        "domain.lower and domain.upper need the same positive length".into(),
                    ));
                }
                let dom = RectDomain::with_start(&d.lower, &d.upper, d.t0, d.t_final)?;
                let mut p = GridParams::new(d.h);
                if let Some(s) = d.safety {
                    p = p.with_safety(s);
                }
                if let Some(s) = d.stride {
                    p = p.with_stride(s);
                }
                if let Some(t) = d.tau {
                    p = p.with_fixed_tau(t);
                }
                (Some(dom), Some(p))
            }
            None => (None, None),
        };
        let n = domain.as_ref().map(|d| d.dim());
        let boundary = match &config.boundary {
            Some(b) => Some(boundary_datum(b, n)?),
            None => None,
        };
        let exact = match config.boundary.as_ref().and_then(|b| b.exact.as_ref()) {
            Some(src) => Some(Arc::new(parse_expr("boundary.exact", src, n)?)),
            None => None,
        };
        if let (Some(nu), Some(ell)) = (config.field.nu, config.field.ell) {
            if !(nu > 0.0 && nu <= 1.0 && ell >= 1.0) {
                return Err(LabError::Config(format!(
                    "field constants need 0 < ν ≤ 1 ≤ L, got ν = {nu}, L = {ell}"
                )));
            }
        } else if config.field.nu.is_some() != config.field.ell.is_some() {
            return Err(LabError::Config(
                "give both field.nu and field.ell or neither".into(),
            ));
        }
        match config.field.kind {
            FieldKind::Regularized if config.field.eps.is_none() => {
                return Err(LabError::Config(
                    "a regularized field needs field.eps".into(),
                ))
            }
            FieldKind::Continuation if config.field.j_max.is_none() => {
                return Err(LabError::Config(
                    "a continuation field needs field.j_max".into(),
                ))
            }
            _ => {}
        }
        let seed = seed_override.unwrap_or(config.seed);
        Ok(Self {
            config,
            hash,
            seed,
            structure,
            domain,
            params,
            boundary,
            exact,
        })
    }

    pub fn dim(&self) -> Result<usize, LabError> {
        self.domain
            .as_ref()
            .map(|d| d.dim())
            .ok_or_else(|| LabError::Config("this needs a [domain] section".into()))
    }

    /// The model field over the structure function in dimension `n`.
    pub fn model_field(&self, n: usize) -> Result<ModelField, LabError> {
        let f = self.structure.with_dimension(n);
        let field = match (self.config.field.nu, self.config.field.ell) {
            (Some(nu), Some(ell)) => ModelField::new(f, n, nu, ell)?,
            _ => ModelField::with_sharp_constants(f, n)?,
        };
        Ok(field)
    }

    /// The field the `solve` step uses: the model field, or its
    /// regularization at `eps` (at the last `2^{-J}` for continuation).
    pub fn solve_field(&self) -> Result<Box<dyn VectorField>, LabError> {
        let n = self.dim()?;
        let base = self.model_field(n)?;
        Ok(match self.config.field.kind {
            FieldKind::Model => Box::new(base),
            FieldKind::Regularized => Box::new(regularize(
                Arc::new(base),
                self.config.field.eps.unwrap_or(0.5),
            )?),
            FieldKind::Continuation => {
                let j = self.config.field.j_max.unwrap_or(5);
                Box::new(regularize(Arc::new(base), 0.5f64.powi(j as i32))?)
            }
        })
    }

    pub fn domain(&self) -> Result<&RectDomain, LabError> {
        self.domain
            .as_ref()
            .ok_or_else(|| LabError::Config("this needs a [domain] section".into()))
    }

    pub fn grid_params(&self) -> Result<&GridParams, LabError> {
        self.params
            .as_ref()
            .ok_or_else(|| LabError::Config("this needs a [domain] section".into()))
    }

    pub fn boundary(&self) -> Result<&BoundaryDatum, LabError> {
        self.boundary
            .as_ref()
            .ok_or_else(|| LabError::Config("this needs a [boundary] section".into()))
    }
}

fn parse_expr(key: &str, src: &str, n: Option<usize>) -> Result<Expr, LabError> {
    let e = Expr::parse(src).map_err(|e| LabError::Config(format!("{key}: {e}")))?;
    if let Some(n) = n {
        if e.dim_needed() > n {
            return Err(LabError::Config(format!(
                "{key} uses x{} in dimension {n}",
                e.dim_needed()
            )));
        }
    }
    Ok(e)
}

fn boundary_datum(b: &BoundarySpec, n: Option<usize>) -> Result<BoundaryDatum, LabError> {
    let datum = match (&b.expr, &b.table) {
        (Some(src), None) => {
            let e = Arc::new(parse_expr("boundary.expr", src, n)?);
            let label = src.clone();
            BoundaryDatum::new(label, move |x, t| e.eval(x, t))
        }
        (None, Some(table)) => {
            if n.is_some_and(|n| n != 1) {
                return Err(LabError::Config("boundary.table is one-dimensional".into()));
            }
            if table.len() < 2 || table.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                return Err(LabError::Config(
                    "boundary.table needs at least two points with increasing x".into(),
                ));
            }
            let pts = table.clone();
            BoundaryDatum::new("table", move |x, _| interpolate(&pts, x[0]))
        }
        _ => {
            return Err(LabError::Config(
                "give exactly one of boundary.expr and boundary.table".into(),
            ))
        }
    };
    Ok(match b.holder {
        Some([c, gamma]) => datum.with_modulus(ModulusOfContinuity::holder(c, gamma, 1e3)?),
        None => datum,
    })
}

fn interpolate(pts: &[[f64; 2]], x: f64) -> f64 {
    let k = pts.partition_point(|p| p[0] <= x);
    if k == 0 {
        return pts[0][1];
    }
    if k == pts.len() {
        return pts[k - 1][1];
    }
    let (a, b) = (pts[k - 1], pts[k]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}
