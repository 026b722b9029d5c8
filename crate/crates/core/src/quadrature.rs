//! Midpoint-rule quadrature over boxes in ℝ⁴ with deterministic summation,
//! the integral energy `E = ∫Φ² d³x` and the action integral over one period.
//!
//! Sums are accumulated slab by slab (first integration axis) with Kahan
//! compensation in a fixed order, so results are bit-identical for any
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exterior::Point4;
use crate::field::ScalarField;
use crate::phlo::{frobenius_4form, PhloError, PhloFields};
use crate::program::{DerivativeProvider, EvalError, Program};
use crate::solutions::{PhloConfig, SolutionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("grid counts must be even and at least 2, got {0}")]
    BadCount(usize),
    #[error("invalid integration range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error(
        "support truncated by the box (boundary Φ² = {boundary:e} vs peak {peak:e}); try x∈[{:.3},{:.3}], y∈[{:.3},{:.3}], z∈[{:.3},{:.3}]",
        suggested[0][0], suggested[0][1], suggested[1][0], suggested[1][1], suggested[2][0], suggested[2][1]
    )]
    Truncated { boundary: f64, peak: f64, suggested: [[f64; 2]; 3] },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Phlo(#[from] PhloError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// A tensor-product midpoint grid; axes with `count == 1` and `lo == hi` are
/// held fixed and contribute no width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadGrid {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    pub count: [usize; 4],
}

impl QuadGrid {
    /// Spatial grid over `ranges` at fixed `ξ`.
    pub fn spatial(ranges: [[f64; 2]; 3], counts: [usize; 3], xi: f64) -> Self {
        QuadGrid {
            lo: [ranges[0][0], ranges[1][0], ranges[2][0], xi],
            hi: [ranges[0][1], ranges[1][1], ranges[2][1], xi],
            count: [counts[0], counts[1], counts[2], 1],
        }
    }

    fn fixed(&self, k: usize) -> bool {
        self.count[k] == 1 && self.lo[k] == self.hi[k]
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        for k in 0..4 {
            if self.fixed(k) {
                continue;
            }
            if self.count[k] < 2 || !self.count[k].is_multiple_of(2) {
                return Err(QuadratureError::BadCount(self.count[k]));
            }
            if !(self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k]) {
                return Err(QuadratureError::BadRange(self.lo[k], self.hi[k]));
            }
        }
        Ok(())
    }

    fn step(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / self.count[k] as f64
    }

    fn node(&self, k: usize, i: usize) -> f64 {
        if self.fixed(k) {
            self.lo[k]
        } else {
            self.lo[k] + (i as f64 + 0.5) * self.step(k)
        }
    }

    fn cell_volume(&self) -> f64 {
        (0..4).filter(|&k| !self.fixed(k)).map(|k| self.step(k)).product()
    }

    /// The same box with every free axis halved.
    pub fn coarsened(&self) -> Self {
        let mut g = *self;
        for k in 0..4 {
            if !self.fixed(k) {
                g.count[k] /= 2;
            }
        }
        g
    }
}

/// Integral and peak absolute integrand value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub peak: f64,
}

/// Midpoint rule for `f` over `grid`; parallel over slabs of the first axis.
pub fn integrate(f: &ScalarField, grid: &QuadGrid, provider: DerivativeProvider) -> Result<Integral, QuadratureError> {
    grid.validate()?;
    let program = Program::new(vec![f.clone()]);
    let slabs: Vec<(f64, f64)> = (0..grid.count[0])
        .into_par_iter()
        .map_init(
            || program.evaluator(),
            |ev, i| -> Result<(f64, f64), EvalError> {
                let mut acc = Kahan::default();
                let mut peak = 0.0f64;
                let mut out = [0.0];
                for j in 0..grid.count[1] {
                    for k in 0..grid.count[2] {
                        for l in 0..grid.count[3] {
                            let p = Point4::new(grid.node(0, i), grid.node(1, j), grid.node(2, k), grid.node(3, l));
                            ev.eval_into(p, provider, &mut out)?;
                            acc.add(out[0]);
                            peak = peak.max(out[0].abs());
                        }
                    }
                }
                Ok((acc.value(), peak))
            },
        )
        .collect::<Result<_, _>>()?;
    let mut total = Kahan::default();
    let mut peak = 0.0f64;
    for (s, m) in slabs {
        total.add(s);
        peak = peak.max(m);
    }
    Ok(Integral { value: total.value() * grid.cell_volume(), peak })
}

/// Largest `|f|` on the six faces of a spatial box at fixed `ξ`.
pub fn boundary_peak(
    f: &ScalarField,
    ranges: [[f64; 2]; 3],
    counts: [usize; 3],
    xi: f64,
    provider: DerivativeProvider,
) -> Result<f64, QuadratureError> {
    let mut points = Vec::new();
    for face_axis in 0..3 {
        let (a, b) = ((face_axis + 1) % 3, (face_axis + 2) % 3);
        for side in ranges[face_axis] {
            for i in 0..=counts[a] {
                for j in 0..=counts[b] {
                    let mut c = [0.0; 4];
                    c[face_axis] = side;
                    c[a] = ranges[a][0] + (ranges[a][1] - ranges[a][0]) * i as f64 / counts[a] as f64;
                    c[b] = ranges[b][0] + (ranges[b][1] - ranges[b][0]) * j as f64 / counts[b] as f64;
                    c[3] = xi;
                    points.push(Point4::from_array(c));
                }
            }
        }
    }
    let program = Program::new(vec![f.clone()]);
    let values = program.eval_many(&points, provider)?;
    Ok(values.iter().fold(0.0f64, |m, v| m.max(v[0].abs())))
}

/// Relative two-resolution error estimate `|I_n − I_{n/2}| / 3|I_n|`
/// (second-order rule); zero when both vanish.
pub fn richardson(fine: f64, coarse: f64) -> f64 {
    let diff = (fine - coarse).abs() / 3.0;
    if diff == 0.0 {
        0.0
    } else {
        diff / fine.abs()
    }
}

/// Boundary-to-peak ratio above which the support counts as truncated.
pub const TRUNCATION_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyEstimate {
    pub t: f64,
    pub energy: f64,
    /// Relative Richardson estimate.
    pub error: f64,
}

/// `E(t) = ∫Φ² d³x` over `ranges`, with truncation check.
pub fn energy(
    fields: &PhloFields,
    ranges: [[f64; 2]; 3],
    counts: [usize; 3],
    xi: f64,
    t: f64,
    provider: DerivativeProvider,
) -> Result<EnergyEstimate, QuadratureError> {
    let grid = QuadGrid::spatial(ranges, counts, xi);
    let fine = integrate(&fields.phi2, &grid, provider)?;
    let coarse = integrate(&fields.phi2, &grid.coarsened(), provider)?;
    let boundary = boundary_peak(&fields.phi2, ranges, counts, xi, provider)?;
    if fine.peak > 0.0 && boundary > TRUNCATION_RATIO * fine.peak {
        let suggested = ranges.map(|[lo, hi]| {
            let (mid, half) = (0.5 * (lo + hi), 0.75 * (hi - lo));
            [mid - half, mid + half]
        });
        return Err(QuadratureError::Truncated { boundary, peak: fine.peak, suggested });
    }
    Ok(EnergyEstimate { t, energy: fine.value, error: richardson(fine.value, coarse.value) })
}

/// Resolution and (optional) fixed spatial box for the action integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraturePlan {
    pub counts: [usize; 3],
    /// Nodes along `ξ` over one period.
    pub time_count: usize,
    /// Fixed spatial box; `None` fits the box to the solution support.
    pub spatial_box: Option<[[f64; 2]; 3]>,
    pub time_slices: usize,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        QuadraturePlan { counts: [64; 3], time_count: 64, spatial_box: None, time_slices: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanckReport {
    pub energy: f64,
    pub period: f64,
    pub frequency: f64,
    /// `h = E·T`.
    pub h: f64,
    /// `∫(l₀/c) dA∧A∧ζ` over one period.
    pub action: f64,
    /// `εκ·E·T`.
    pub expected: f64,
    pub mismatch: f64,
    /// Largest relative Richardson estimate among the action and energies.
    pub richardson: f64,
    pub slices: Vec<EnergyEstimate>,
    /// `(max E − min E)/max E` over the time slices.
    pub conservation: f64,
    pub warnings: Vec<String>,
}

/// Evaluates the action integral and the energy at several times in one
/// period.
pub fn planck_action(
    cfg: &PhloConfig,
    fields: &PhloFields,
    plan: &QuadraturePlan,
    provider: DerivativeProvider,
    tolerance: f64,
) -> Result<PlanckReport, QuadratureError> {
    cfg.validate()?;
    let lambda = cfg.lambda();
    let period = cfg.period();
    let slices = (0..plan.time_slices.max(1))
        .map(|k| {
            let t = period * k as f64 / plan.time_slices.max(1) as f64;
            let ranges = plan.spatial_box.unwrap_or_else(|| cfg.support_at(t));
            energy(fields, ranges, plan.counts, cfg.c * t, t, provider)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let ranges = plan.spatial_box.unwrap_or_else(|| {
        let s = cfg.support_at(0.0);
        [s[0], s[1], [-lambda, lambda]]
    });
    let grid = QuadGrid {
        lo: [ranges[0][0], ranges[1][0], ranges[2][0], 0.0],
        hi: [ranges[0][1], ranges[1][1], ranges[2][1], lambda],
        count: [plan.counts[0], plan.counts[1], plan.counts[2], plan.time_count],
    };
    let integrand = frobenius_4form(fields)?.from_a * (cfg.l0 / cfg.c);
    let fine = integrate(&integrand, &grid, provider)?;
    let coarse = integrate(&integrand, &grid.coarsened(), provider)?;

    let e = slices[0].energy;
    let h = e * period;
    let expected = cfg.epsilon * cfg.kappa * h;
    let mismatch = if h == 0.0 { (fine.value - expected).abs() } else { (fine.value - expected).abs() / h.abs() };
    let richardson_max = slices.iter().map(|s| s.error).fold(richardson(fine.value, coarse.value), f64::max);
    let (emin, emax) = slices.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.energy), hi.max(s.energy)));
    let conservation = if emax > 0.0 { (emax - emin) / emax } else { 0.0 };
    let mut warnings = Vec::new();
    if richardson_max > tolerance {
        warnings.push(format!(
            "Richardson estimate {richardson_max:.3e} exceeds {tolerance:e}; refine to {}^3 x {}",
            plan.counts[0] * 2,
            plan.time_count * 2
        ));
    }
    Ok(PlanckReport {
        energy: e,
        period,
        frequency: cfg.frequency(),
        h,
        action: fine.value,
        expected,
        mismatch,
        richardson: richardson_max,
        slices,
        conservation,
        warnings,
    })
}
