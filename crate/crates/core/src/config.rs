//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment line, blank lines are
//! ignored. Unknown and repeated keys are errors; `lambda` is derived as
//! `4·l0` and cannot be set.

use std::path::Path;

use thiserror::Error;

use crate::dsl::{parse_field, DslError, Params};
use crate::phlo::{build_phlo, PhloFields};
use crate::probes::{ProbeBox, DEFAULT_PROBES, DEFAULT_SEED};
use crate::program::DerivativeProvider;
use crate::quadrature::QuadraturePlan;
use crate::report::{FieldSource, SuiteOptions};
use crate::solutions::{build_solution, PhloConfig, SolutionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `lambda` is derived as 4*l0 and cannot be set")]
    DerivedKey { line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}` (expected {expected})")]
    BadValue { line: usize, key: String, value: String, expected: &'static str },
    #[error("invalid probe box: {0}")]
    BadBox(String),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("field expression `{expr}`: {source}")]
    Expression { expr: String, source: DslError },
}

const BOX_KEYS: [&str; 8] =
    ["box.xmin", "box.xmax", "box.ymin", "box.ymax", "box.zmin", "box.zmax", "box.ximin", "box.ximax"];

/// Everything a run needs, with defaults for absent keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub phlo: PhloConfig,
    /// Spatial quadrature / emission nodes `(nx, ny, nz)`.
    pub grid: [usize; 3],
    /// Quadrature nodes along `ξ` over one period.
    pub grid_t: usize,
    /// `box.*` overrides in `BOX_KEYS` order.
    pub box_overrides: [Option<f64>; 8],
    pub provider: DerivativeProvider,
    pub seed: u64,
    pub probes: usize,
    pub u_expr: Option<String>,
    pub p_expr: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phlo: PhloConfig::default(),
            grid: [64; 3],
            grid_t: 64,
            box_overrides: [None; 8],
            provider: DerivativeProvider::Dual,
            seed: DEFAULT_SEED,
            probes: DEFAULT_PROBES,
            u_expr: None,
            p_expr: None,
        }
    }
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        expected: "a finite number",
    })
}

fn count(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        expected: "a positive integer",
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut fd_step = None;
        let mut use_fd = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| ConfigError::Syntax { line, text: trimmed.to_string() })?;
            if key == "lambda" {
                return Err(ConfigError::DerivedKey { line });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            let p = &mut cfg.phlo;
            match key {
                "epsilon" => p.epsilon = number(line, key, value)?,
                "kappa" => p.kappa = number(line, key, value)?,
                "l0" => p.l0 = number(line, key, value)?,
                "r0" => p.r0 = number(line, key, value)?,
                "a" => p.a = number(line, key, value)?,
                "b" => p.b = number(line, key, value)?,
                "gamma" => p.gamma = number(line, key, value)?,
                "phi0" => p.phi0 = number(line, key, value)?,
                "c" => p.c = number(line, key, value)?,
                "phase_family" => {
                    p.phase_family = value.parse().map_err(|_| ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                        expected: "psi1 or psi2",
                    })?
                }
                "grid.nx" => cfg.grid[0] = count(line, key, value)?,
                "grid.ny" => cfg.grid[1] = count(line, key, value)?,
                "grid.nz" => cfg.grid[2] = count(line, key, value)?,
                "grid.nt" => cfg.grid_t = count(line, key, value)?,
                "provider" => {
                    use_fd = match value {
                        "dual" => false,
                        "fd" => true,
                        _ => {
                            return Err(ConfigError::BadValue {
                                line,
                                key: key.to_string(),
                                value: value.to_string(),
                                expected: "dual or fd",
                            })
                        }
                    }
                }
                "fd_step" => {
                    let h = number(line, key, value)?;
                    if h <= 0.0 {
                        return Err(ConfigError::BadValue {
                            line,
                            key: key.to_string(),
                            value: value.to_string(),
                            expected: "a positive step",
                        });
                    }
                    fd_step = Some(h);
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| ConfigError::BadValue {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                        expected: "an unsigned integer",
                    })?
                }
                "probes" => cfg.probes = count(line, key, value)?,
                "u_expr" => cfg.u_expr = Some(value.to_string()),
                "p_expr" => cfg.p_expr = Some(value.to_string()),
                k => match BOX_KEYS.iter().position(|b| *b == k) {
                    Some(slot) => cfg.box_overrides[slot] = Some(number(line, key, value)?),
                    None => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
                },
            }
        }
        if use_fd {
            cfg.provider =
                DerivativeProvider::FiniteDifference { step: fd_step.unwrap_or(DerivativeProvider::DEFAULT_FD_STEP) };
        }
        cfg.phlo.validate()?;
        cfg.probe_box()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    /// The support box with any `box.*` overrides applied, or `None` when no
    /// override is present.
    pub fn probe_box(&self) -> Result<Option<ProbeBox>, ConfigError> {
        if self.box_overrides.iter().all(Option::is_none) {
            return Ok(None);
        }
        let mut b = self.phlo.support_box();
        for (k, v) in self.box_overrides.iter().enumerate() {
            if let Some(v) = v {
                if k % 2 == 0 {
                    b.min[k / 2] = *v;
                } else {
                    b.max[k / 2] = *v;
                }
            }
        }
        if !b.is_valid() {
            return Err(ConfigError::BadBox(format!("min {:?} must be below max {:?}", b.min, b.max)));
        }
        Ok(Some(b))
    }

    pub fn plan(&self) -> Result<QuadraturePlan, ConfigError> {
        let spatial_box = self.probe_box()?.map(|b| [[b.min[0], b.max[0]], [b.min[1], b.max[1]], [b.min[2], b.max[2]]]);
        Ok(QuadraturePlan { counts: self.grid, time_count: self.grid_t, spatial_box, ..QuadraturePlan::default() })
    }

    /// The field bundle a run works on: the built solution with any DSL
    /// overrides applied.
    pub fn phlo_fields(&self) -> Result<(PhloFields, FieldSource), ConfigError> {
        let p = &self.phlo;
        match self.suite_options()?.fields {
            Some((u, q, source)) => {
                let fields = build_phlo(&u, &q, p.epsilon, p.kappa, p.l0).map_err(SolutionError::from)?;
                Ok((fields, source))
            }
            None => Ok((build_solution(p)?.fields(p)?, FieldSource::Solution)),
        }
    }

    /// Suite options; DSL overrides replace the matching solution component.
    pub fn suite_options(&self) -> Result<SuiteOptions, ConfigError> {
        let fields = if self.u_expr.is_some() || self.p_expr.is_some() {
            let sol = build_solution(&self.phlo)?;
            let params = Params::new(self.phlo.epsilon, self.phlo.kappa, self.phlo.l0);
            let field = |expr: &Option<String>, fallback| match expr {
                Some(e) => {
                    parse_field(e, &params).map_err(|source| ConfigError::Expression { expr: e.clone(), source })
                }
                None => Ok(fallback),
            };
            let u = field(&self.u_expr, sol.u)?;
            let p = field(&self.p_expr, sol.p)?;
            let label = |e: &Option<String>| e.clone().unwrap_or_else(|| "solution".to_string());
            Some((u, p, FieldSource::Expressions { u: label(&self.u_expr), p: label(&self.p_expr) }))
        } else {
            None
        };
        Ok(SuiteOptions {
            provider: self.provider,
            seed: self.seed,
            probes: self.probes,
            probe_box: self.probe_box()?,
            fields,
            plan: self.plan()?,
            ..SuiteOptions::default()
        })
    }
}
