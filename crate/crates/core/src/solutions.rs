//! The explicit bump-localized helical solution family, grid sampling to CSV
//! and screwline geometry.
//!
//! `Φ₀ = γ·bump(ρ/r₀)` on the disk `ρ = |(x−a, y−b)| < r₀`,
//! `θ(s) = bump((2s−λ)/λ)` on `(0, λ)`, `Φ = Φ₀·θ(ξ+εz)`, and
//! `u = Φ cos ψ`, `p = Φ sin ψ` with `ψ₁ = −(εκ/l₀)z + φ₀` or
//! `ψ₂ = (κ/l₀)ξ + φ₀`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::exterior::Point4;
use crate::field::ScalarField;
use crate::phlo::{build_phlo, stress_tensor, PhloError, PhloFields};
use crate::probes::ProbeBox;
use crate::program::{CompiledSet, DerivativeProvider, EvalError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolutionError {
    #[error("{name} must be +1 or -1, got {value}")]
    BadSign { name: &'static str, value: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite")]
    NonFinite { name: &'static str },
    #[error("empty range on axis {axis}: [{min}, {max}] with {count} nodes")]
    EmptyRange { axis: char, min: f64, max: f64, count: usize },
    #[error("unknown phase family `{0}` (expected psi1 or psi2)")]
    UnknownFamily(String),
    #[error(transparent)]
    Phlo(#[from] PhloError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseFamily {
    Psi1,
    Psi2,
}

impl FromStr for PhaseFamily {
    type Err = SolutionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psi1" => Ok(PhaseFamily::Psi1),
            "psi2" => Ok(PhaseFamily::Psi2),
            other => Err(SolutionError::UnknownFamily(other.to_string())),
        }
    }
}

impl fmt::Display for PhaseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseFamily::Psi1 => "psi1",
            PhaseFamily::Psi2 => "psi2",
        })
    }
}

/// Parameters of one member of the solution family. `λ = 4·l₀` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhloConfig {
    pub epsilon: f64,
    pub kappa: f64,
    pub l0: f64,
    pub r0: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub phase_family: PhaseFamily,
    pub phi0: f64,
    pub c: f64,
}

impl Default for PhloConfig {
    fn default() -> Self {
        PhloConfig {
            epsilon: -1.0,
            kappa: 1.0,
            l0: 0.25,
            r0: 0.5,
            a: 1.0,
            b: 1.0,
            gamma: 1.0,
            phase_family: PhaseFamily::Psi1,
            phi0: 0.0,
            c: 1.0,
        }
    }
}

impl PhloConfig {
    pub fn validate(&self) -> Result<(), SolutionError> {
        for (name, value) in [("epsilon", self.epsilon), ("kappa", self.kappa)] {
            if value != 1.0 && value != -1.0 {
                return Err(SolutionError::BadSign { name, value });
            }
        }
        for (name, value) in [("l0", self.l0), ("r0", self.r0), ("gamma", self.gamma), ("c", self.c)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SolutionError::NonPositive { name, value });
            }
        }
        for (name, value) in [("a", self.a), ("b", self.b), ("phi0", self.phi0)] {
            if !value.is_finite() {
                return Err(SolutionError::NonFinite { name });
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        4.0 * self.l0
    }

    /// `T = λ/c`.
    pub fn period(&self) -> f64 {
        self.lambda() / self.c
    }

    /// `ν = c/λ`.
    pub fn frequency(&self) -> f64 {
        self.c / self.lambda()
    }

    /// Spatial box tightly containing the support at time `t`:
    /// the disk's bounding square times the `z`-interval where `θ(ct+εz) > 0`.
    pub fn support_at(&self, t: f64) -> [[f64; 2]; 3] {
        let xi = self.c * t;
        let (z1, z2) = (self.epsilon * -xi, self.epsilon * (self.lambda() - xi));
        [[self.a - self.r0, self.a + self.r0], [self.b - self.r0, self.b + self.r0], [z1.min(z2), z1.max(z2)]]
    }

    /// Probe box over one period `ξ ∈ [0, λ]`; `z ∈ [−λ, λ]` then always
    /// contains the moving slab.
    pub fn support_box(&self) -> ProbeBox {
        let l = self.lambda();
        ProbeBox::new([self.a - self.r0, self.b - self.r0, -l, 0.0], [self.a + self.r0, self.b + self.r0, l, l])
    }
}

/// The built solution: `u, p` plus the analytic amplitude and phase.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub p: ScalarField,
    pub amplitude: ScalarField,
    pub phase: ScalarField,
}

pub fn build_solution(cfg: &PhloConfig) -> Result<Solution, SolutionError> {
    cfg.validate()?;
    let (x, y, z, xi) = (ScalarField::x(), ScalarField::y(), ScalarField::z(), ScalarField::xi());
    let rho2 = ((x - cfg.a).square() + (y - cfg.b).square()) / (cfg.r0 * cfg.r0);
    let phi_disk = rho2.radial_bump() * cfg.gamma;
    let lambda = cfg.lambda();
    let s = &xi + &(&z * cfg.epsilon);
    let theta = ((s * 2.0 - lambda) / lambda).bump();
    let amplitude = phi_disk * theta;
    let phase = match cfg.phase_family {
        PhaseFamily::Psi1 => z * (-cfg.epsilon * cfg.kappa / cfg.l0) + cfg.phi0,
        PhaseFamily::Psi2 => xi * (cfg.kappa / cfg.l0) + cfg.phi0,
    };
    Ok(Solution { u: &amplitude * &phase.cos(), p: &amplitude * &phase.sin(), amplitude, phase })
}

impl Solution {
    pub fn fields(&self, cfg: &PhloConfig) -> Result<PhloFields, SolutionError> {
        Ok(build_phlo(&self.u, &self.p, cfg.epsilon, cfg.kappa, cfg.l0)?)
    }
}

/// One sampling axis: `count` node centres across `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.count as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.min + (i as f64 + 0.5) * self.step()
    }

    fn check(&self, axis: char) -> Result<(), SolutionError> {
        let ok = self.count > 0 && self.min.is_finite() && self.max.is_finite() && self.min <= self.max;
        // A degenerate range is allowed only for a single node.
        if !ok || (self.min == self.max && self.count > 1) {
            return Err(SolutionError::EmptyRange { axis, min: self.min, max: self.max, count: self.count });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl GridSpec {
    pub fn from_support(support: [[f64; 2]; 3], counts: [usize; 3]) -> Self {
        GridSpec {
            x: Axis::new(support[0][0], support[0][1], counts[0]),
            y: Axis::new(support[1][0], support[1][1], counts[1]),
            z: Axis::new(support[2][0], support[2][1], counts[2]),
        }
    }

    pub fn node_count(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    pub fn validate(&self) -> Result<(), SolutionError> {
        self.x.check('x')?;
        self.y.check('y')?;
        self.z.check('z')
    }

    /// Node points at `ξ`, row-major with `z` fastest.
    pub fn points(&self, xi: f64) -> Vec<Point4> {
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..self.x.count {
            for j in 0..self.y.count {
                for k in 0..self.z.count {
                    out.push(Point4::new(self.x.node(i), self.y.node(j), self.z.node(k), xi));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub point: Point4,
    pub u: f64,
    pub p: f64,
    pub phi: f64,
    pub psi: f64,
    pub energy_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    pub spec: GridSpec,
    pub t: f64,
    pub rows: Vec<GridRow>,
}

pub const CSV_HEADER: &str = "x,y,z,t,u,p,phi,psi,energy_density";

/// Samples `u, p, Φ, ψ` and `T₄⁴` at the node centres of `spec` at time `t`.
pub fn sample(
    fields: &PhloFields,
    spec: &GridSpec,
    t: f64,
    c: f64,
    provider: DerivativeProvider,
) -> Result<SampledGrid, SolutionError> {
    spec.validate()?;
    let points = spec.points(c * t);
    let set = (fields.u.clone(), fields.p.clone(), stress_tensor(fields).energy_density());
    let values = CompiledSet::new(&set).eval_many(&points, provider)?;
    let rows = points
        .into_iter()
        .zip(values)
        .map(|(point, (u, p, e))| GridRow { point, u, p, phi: u.hypot(p), psi: p.atan2(u), energy_density: e })
        .collect();
    Ok(SampledGrid { spec: *spec, t, rows })
}

impl SampledGrid {
    /// Writes the CSV form: header plus one line per node, every value with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            let vals = [r.point.x, r.point.y, r.point.z, self.t, r.u, r.p, r.phi, r.psi, r.energy_density];
            let line: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Helix geometry of the screwline through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScrewlineReport {
    /// Distance of `(x, y)` from the `z`-axis.
    pub radius: f64,
    /// `b = λ/2π`.
    pub b: f64,
    pub curvature: f64,
    pub torsion: f64,
    /// `ν = c/2πb`.
    pub frequency: f64,
    pub period: f64,
    pub inside_disk: bool,
    /// Phase advance per unit `z` of `ψ₁` (`1/l₀`) and of a full turn per `λ` (`2π/λ`).
    pub phase_rate: f64,
    pub turn_rate: f64,
}

pub fn screwline(cfg: &PhloConfig, x: f64, y: f64) -> ScrewlineReport {
    let radius = x.hypot(y);
    let b = cfg.lambda() / (2.0 * std::f64::consts::PI);
    let denom = radius * radius + b * b;
    let frequency = cfg.c / (2.0 * std::f64::consts::PI * b);
    ScrewlineReport {
        radius,
        b,
        curvature: radius / denom,
        torsion: cfg.kappa * b / denom,
        frequency,
        period: 1.0 / frequency,
        inside_disk: (x - cfg.a).hypot(y - cfg.b) < cfg.r0,
        phase_rate: 1.0 / cfg.l0,
        turn_rate: 1.0 / b,
    }
}
