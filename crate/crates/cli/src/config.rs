//! Run configuration: the JSON schema, validation, and tolerance resolution.

use std::path::PathBuf;

use ctrfn_core::charfn::{PolynomialJson, MAX_TERMS};
use ctrfn_core::models::{self, DegreeOnePoly, ModelWarning, MonomialParams, Realization, TabcParams};
use ctrfn_core::numlin::{c64, ComplexMatrix, MatrixJson, Tolerance, C64};
use ctrfn_core::windowed::{self, OperatorJson, WindowedShiftOperator};
use ctrfn_core::MatrixPolynomial;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::RunError;

pub const TOL_ENV: &str = "CTRFN_TOL";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Build,
    Charfn,
    Decompose,
    Coincide,
    Classify,
    Sweep,
    Verify,
}

/// A complex scalar written either as a bare real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cx {
    pub fn value(self) -> C64 {
        match self {
            Cx::Real(x) => c64(x, 0.0),
            Cx::Pair([re, im]) => c64(re, im),
        }
    }
}

/// A matrix in wire format or as a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Json(MatrixJson),
    Rows(Vec<Vec<Cx>>),
}

impl MatrixSpec {
    pub fn value(&self) -> Result<ComplexMatrix, ConfigError> {
        match self {
            MatrixSpec::Json(j) => ComplexMatrix::try_from(j.clone()).map_err(|e| ConfigError::Invalid(e.to_string())),
            MatrixSpec::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != cols) {
                    return Err(ConfigError::Invalid("matrix rows have different lengths".into()));
                }
                Ok(ComplexMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j].value()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabcSpec {
    pub a: Cx,
    pub b: Cx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JordanSpec {
    pub m: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    pub a: MatrixSpec,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    #[serde(default = "one")]
    pub mult: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizeSpec {
    pub alpha: Cx,
    pub beta: Cx,
}

/// `{"model": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Tabc(TabcSpec),
    Jordan(JordanSpec),
    Monomial(MonomialSpec),
    MonomialStar(MonomialSpec),
    Shift(ShiftSpec),
    CoShift(ShiftSpec),
    /// The model whose characteristic function coincides with `alpha + beta z`.
    Realize(RealizeSpec),
    /// Any operator in the windowed wire format.
    Windowed(OperatorJson),
}

/// An operator together with what the constructor had to say about it.
pub struct Built {
    pub op: WindowedShiftOperator,
    pub params: Value,
    pub warnings: Vec<String>,
}

fn warning_text(w: ModelWarning) -> String {
    match w {
        ModelWarning::BilateralShiftCase => "|a| = |b| = 1 and c = 0: the operator is the bilateral shift".into(),
        ModelWarning::UnitaryPart => "|c| = 1: the operator has a unitary part and is not c.n.u.".into(),
        ModelWarning::BoundaryRealization => "|beta| = 1 is realized by J_1 rather than by T_abc".into(),
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn tabc_params(spec: &TabcSpec, tol: &Tolerance) -> Result<TabcParams, RunError> {
    let (a, b) = (spec.a.value(), spec.b.value());
    let p = match (spec.c, spec.gamma) {
        (Some(c), None) => TabcParams::new(a, b, c.value(), tol)?,
        (None, Some(g)) => TabcParams::from_gamma(a, b, g.value(), tol)?,
        _ => {
            return Err(ConfigError::Invalid("tabc needs exactly one of c and gamma".into()).into());
        }
    };
    Ok(p)
}

pub fn tabc_json(p: &TabcParams) -> Value {
    json!({
        "a": pair(p.a),
        "b": pair(p.b),
        "c": pair(p.c),
        "gamma": p.gamma.map(pair),
    })
}

impl ModelSpec {
    pub fn build(&self, tol: &Tolerance) -> Result<Built, RunError> {
        let plain = |op| Built {
            op,
            params: serde_json::to_value(self).unwrap_or(Value::Null),
            warnings: Vec::new(),
        };
        Ok(match self {
            ModelSpec::Tabc(spec) => {
                let p = tabc_params(spec, tol)?;
                Built {
                    op: models::make_tabc(&p, tol)?,
                    params: tabc_json(&p),
                    warnings: p.warnings(tol).into_iter().map(warning_text).collect(),
                }
            }
            ModelSpec::Jordan(j) => plain(models::jordan_operator(j.m, j.dim)?),
            ModelSpec::Monomial(s) => {
                let p = MonomialParams::new(s.a.value()?, s.m, tol)?;
                plain(models::make_ta(&p, tol)?)
            }
            ModelSpec::MonomialStar(s) => {
                let p = MonomialParams::new(s.a.value()?, s.m, tol)?;
                plain(models::make_ta_star(&p, tol)?)
            }
            ModelSpec::Shift(s) => plain(windowed::unilateral_shift(positive(s.mult, "mult")?)),
            ModelSpec::CoShift(s) => plain(windowed::co_shift(positive(s.mult, "mult")?)),
            ModelSpec::Realize(r) => {
                let q = DegreeOnePoly::new(r.alpha.value(), r.beta.value());
                let real = models::realize_degree_one(&q, tol)?;
                let params = match &real {
                    Realization::Tabc(p) => json!({"realized_by": "tabc", "tabc": tabc_json(p)}),
                    Realization::Jordan { m, dim, phase } => {
                        json!({"realized_by": "jordan", "m": m, "dim": dim, "phase": pair(*phase)})
                    }
                };
                Built {
                    op: real.operator(tol)?,
                    params,
                    warnings: real.warnings(tol).into_iter().map(warning_text).collect(),
                }
            }
            ModelSpec::Windowed(j) => plain(WindowedShiftOperator::from_json(j.clone())?),
        })
    }
}

fn positive(n: usize, name: &str) -> Result<usize, ConfigError> {
    if n == 0 {
        Err(ConfigError::Invalid(format!("{name} must be at least 1")))
    } else {
        Ok(n)
    }
}

/// A target polynomial: scalar coefficients or the matrix wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolynomialSpec {
    Scalar(Vec<Cx>),
    Matrix(PolynomialJson),
}

impl PolynomialSpec {
    pub fn value(&self) -> Result<MatrixPolynomial, RunError> {
        match self {
            PolynomialSpec::Scalar(cs) => {
                let cs: Vec<C64> = cs.iter().map(|c| c.value()).collect();
                Ok(MatrixPolynomial::scalar(&cs))
            }
            PolynomialSpec::Matrix(j) => Ok(MatrixPolynomial::from_json(j.clone())?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoincideMethod {
    #[default]
    Auto,
    Scalar,
    Monomial,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecomposeVariant {
    #[default]
    Canonical,
    StarCanonical,
    /// Coordinate splitting with `H0` on the fibers given by `h0`.
    User,
    /// All four extremal splittings and the minimal nilpotents.
    Minimal,
}

/// Sweep grids; every combination of the listed values is one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Tabc {
        abs_a: Vec<f64>,
        abs_b: Vec<f64>,
        #[serde(default = "zero_phase")]
        arg_a: Vec<f64>,
        #[serde(default = "zero_phase")]
        arg_b: Vec<f64>,
        /// `gamma` values; `gamma_phases: G` adds `e^{2πik/G}` for `k < G`.
        #[serde(default)]
        gamma: Vec<Cx>,
        #[serde(default)]
        gamma_phases: usize,
    },
    Monomial {
        matrices: Vec<MatrixSpec>,
        m: Vec<usize>,
    },
}

fn zero_phase() -> Vec<f64> {
    vec![0.0]
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub rank_tol: Option<f64>,
    pub eq_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Second operand of `coincide`.
    #[serde(default)]
    pub other: Option<ModelSpec>,
    /// Alternative second operand of `coincide`.
    #[serde(default)]
    pub target: Option<PolynomialSpec>,
    #[serde(default)]
    pub method: CoincideMethod,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub variant: DecomposeVariant,
    #[serde(default)]
    pub h0: Option<[i64; 2]>,
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub tolerances: Option<TolSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Points `z` at which `charfn` also evaluates `Θ(z)`.
    #[serde(default)]
    pub points: Vec<Cx>,
    #[serde(default = "default_purity_grid")]
    pub purity_grid: usize,
    /// Random draws per check in `verify`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_restarts() -> usize {
    16
}
fn default_radius() -> usize {
    48
}
fn default_budget() -> usize {
    32
}
fn default_steps() -> usize {
    16
}
fn default_purity_grid() -> usize {
    4096
}
fn default_samples() -> usize {
    20
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<(Self, Value), ConfigError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let cfg: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        Ok((cfg, raw))
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, Value), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks what does not depend on the model.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError::Invalid(format!(
                    "config is for {c:?} but the command line asks for {command:?}"
                )));
            }
        }
        if self.radius == 0 {
            return Err(ConfigError::Invalid("radius must be positive".into()));
        }
        if self.budget == 0 || self.budget > MAX_TERMS {
            return Err(ConfigError::Invalid(format!("budget must lie in 1..={MAX_TERMS}")));
        }
        if self.steps == 0 || self.steps >= self.radius {
            return Err(ConfigError::Invalid(format!(
                "steps = {} must lie in 1..{}",
                self.steps, self.radius
            )));
        }
        for z in &self.points {
            if z.value().norm() >= 1.0 {
                return Err(ConfigError::Invalid(format!(
                    "point {:?} is not in the open unit disk",
                    z
                )));
            }
        }
        let needs_model = !matches!(command, Command::Sweep);
        if needs_model && self.model.is_none() {
            return Err(ConfigError::Invalid(format!("{command:?} needs a model")));
        }
        match command {
            Command::Coincide if self.other.is_some() == self.target.is_some() => Err(ConfigError::Invalid(
                "coincide needs exactly one of other and target".into(),
            )),
            Command::Sweep if self.grid.is_none() => Err(ConfigError::Invalid("sweep needs a grid".into())),
            Command::Decompose if self.variant == DecomposeVariant::User && self.h0.is_none() => {
                Err(ConfigError::Invalid("the user variant needs h0 = [lo, hi]".into()))
            }
            _ => Ok(()),
        }
    }

    /// Defaults, then `CTRFN_TOL`, then the config's own `tolerances`.
    pub fn tolerance(&self, env: Option<&str>) -> Result<Tolerance, ConfigError> {
        let mut t = Tolerance::default();
        if let Some(text) = env {
            let parts: Vec<&str> = text.split(',').map(str::trim).collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| ConfigError::Invalid(format!("{TOL_ENV}={text} is not rank_tol[,eq_tol]")))
            };
            match parts.as_slice() {
                [r] => {
                    t.rank_tol = num(r)?;
                    t.eq_tol = t.rank_tol;
                }
                [r, e] => {
                    t.rank_tol = num(r)?;
                    t.eq_tol = num(e)?;
                }
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "{TOL_ENV}={text} is not rank_tol[,eq_tol]"
                    )))
                }
            }
        }
        if let Some(spec) = self.tolerances {
            t.rank_tol = spec.rank_tol.unwrap_or(t.rank_tol);
            t.eq_tol = spec.eq_tol.unwrap_or(t.eq_tol);
        }
        t.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(t)
    }
}
