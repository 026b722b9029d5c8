//! Curvature analysis of a user-supplied field pair `(u, p)`: curvature
//! vectors, `𝓚²`, the `l₀` field and two integrability verdicts.

use std::fmt::Write as _;

use serde::Serialize;

use crate::calculus::VectorField4;
use crate::connections::{
    build_projections, curvature_closed_form, frobenius_report, l0_summary, nijenhuis_self, ConnectionError,
    Distribution, IntegrabilityReport, L0Summary,
};
use crate::exterior::{Point4, Vector4};
use crate::field::ScalarField;
use crate::program::{CompiledSet, DerivativeProvider};

/// Support threshold for the `l₀` summary (relative to the largest `Φ`).
pub const L0_SUPPORT: f64 = 1e-6;
/// Frobenius verdict tolerance.
pub const FROBENIUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64>) -> Stats {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Stats { min: f64::NAN, max: f64::NAN, mean: f64::NAN };
        }
        Stats { min, max, mean: sum / n as f64 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAnalysis {
    pub u: String,
    pub p: String,
    pub epsilon: f64,
    pub provider: DerivativeProvider,
    pub probes: usize,
    /// `Z₁ = 𝓡(∂z, ∂ξ)`: x and y components.
    pub z1: [Stats; 2],
    /// `Z₂ = 𝓡̃(∂z, ∂ξ)`.
    pub z2: [Stats; 2],
    pub k2: Stats,
    /// Largest gap between the Nijenhuis bracket and the closed form.
    pub nijenhuis_gap: f64,
    pub l0: L0Summary,
    /// `(H∂z, H∂ξ)`.
    pub horizontal: IntegrabilityReport,
    /// `(∂x, ∂y)`.
    pub vertical: IntegrabilityReport,
}

/// `H∂z, H∂ξ` for the connection built from `(u, p, ε)`.
pub fn horizontal_distribution(u: &ScalarField, p: &ScalarField, eps: f64) -> Result<Distribution, ConnectionError> {
    let h = build_projections(u, p, eps)?.h.tensor;
    Ok(Distribution::new(vec![h.apply(&Vector4::coordinate(2)), h.apply(&Vector4::coordinate(3))]))
}

fn plane_complement() -> Vec<VectorField4> {
    vec![Vector4::coordinate(0), Vector4::coordinate(1)]
}

pub fn analyze_curvature(
    u: &ScalarField,
    p: &ScalarField,
    labels: (&str, &str),
    eps: f64,
    probes: &[Point4],
    provider: DerivativeProvider,
) -> Result<CurvatureAnalysis, ConnectionError> {
    let closed = curvature_closed_form(u, p, eps)?;
    let set = (closed.z1.clone(), closed.z2.clone(), closed.k2.clone());
    let values = CompiledSet::new(&set).eval_many(probes, provider)?;
    type Sample = (Vector4<f64>, Vector4<f64>, f64);
    let comp = |pick: &dyn Fn(&Sample) -> f64| Stats::of(values.iter().map(pick));
    let z1 = [comp(&|v| v.0.comps[0]), comp(&|v| v.0.comps[1])];
    let z2 = [comp(&|v| v.1.comps[0]), comp(&|v| v.1.comps[1])];
    let k2 = comp(&|v| v.2);

    let pr = build_projections(u, p, eps)?;
    let nv = nijenhuis_self(&pr.v, probes, provider)?;
    let nvt = nijenhuis_self(&pr.v_tilde, probes, provider)?;
    let diffs = (nv.r.minus(&closed.r), nvt.r.minus(&closed.r_tilde));
    let nijenhuis_gap = CompiledSet::new(&diffs)
        .eval_many(probes, provider)?
        .iter()
        .map(|(a, b)| a.max_abs().max(b.max_abs()))
        .fold(0.0, f64::max);

    let (l0, _) = l0_summary(u, p, eps, probes, L0_SUPPORT, provider)?;
    let horizontal = frobenius_report(
        &horizontal_distribution(u, p, eps)?,
        Some(&plane_complement()),
        probes,
        provider,
        FROBENIUS_TOL,
    )?;
    let vertical = frobenius_report(&Distribution::new(plane_complement()), None, probes, provider, FROBENIUS_TOL)?;
    Ok(CurvatureAnalysis {
        u: labels.0.to_string(),
        p: labels.1.to_string(),
        epsilon: eps,
        provider,
        probes: probes.len(),
        z1,
        z2,
        k2,
        nijenhuis_gap,
        l0,
        horizontal,
        vertical,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.12e}")).unwrap_or_else(|| "-".to_string())
}

fn stats_line(out: &mut String, name: &str, s: &Stats) {
    let _ = writeln!(out, "    {name:<10} min {:.12e}  max {:.12e}  mean {:.12e}", s.min, s.max, s.mean);
}

fn verdict(out: &mut String, name: &str, r: &IntegrabilityReport) {
    let word = if r.integrable { "integrable" } else { "non-integrable" };
    let _ =
        writeln!(out, "    {name:<10} {word} (max out-of-span {:.3e}, tolerance {:.0e})", r.max_magnitude, r.tolerance);
    if !r.integrable {
        for pair in &r.pairs {
            let c: Vec<String> = pair.worst_coefficients.iter().map(|c| format!("{c:.6e}")).collect();
            let _ = writeln!(out, "    {:<10} [X{}, X{}] sticks out along ({})", "", pair.i, pair.j, c.join(", "));
        }
    }
}

impl CurvatureAnalysis {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Curvature analysis");
        let _ = writeln!(out, "fields: u = {}; p = {}; epsilon = {}", self.u, self.p, self.epsilon);
        let _ = writeln!(out, "provider: {}; probes: {}", self.provider.name(), self.probes);
        let _ = writeln!(out);
        let _ = writeln!(out, "Z1 = R(dz, dxi)");
        stats_line(&mut out, "x", &self.z1[0]);
        stats_line(&mut out, "y", &self.z1[1]);
        let _ = writeln!(out, "Z2 = R~(dz, dxi)");
        stats_line(&mut out, "x", &self.z2[0]);
        stats_line(&mut out, "y", &self.z2[1]);
        stats_line(&mut out, "K^2", &self.k2);
        let _ = writeln!(out, "    nijenhuis  max gap to closed form {:.3e}", self.nijenhuis_gap);
        let _ = writeln!(out);
        let l = &self.l0;
        if l.is_undefined() {
            let _ = writeln!(out, "l0: undefined (support {}, degenerate {})", l.support, l.undefined);
        } else {
            let _ = writeln!(
                out,
                "l0: min {} max {} median {} (defined {}, degenerate {}, support {})",
                opt(l.min),
                opt(l.max),
                opt(l.median),
                l.defined,
                l.undefined,
                l.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Frobenius");
        verdict(&mut out, "(Hdz,Hdxi)", &self.horizontal);
        verdict(&mut out, "(dx,dy)", &self.vertical);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::{probe_points, ProbeBox};

    #[test]
    fn linear_pair_has_constant_curvature() {
        let (u, p) = (ScalarField::coordinate(2), ScalarField::coordinate(3));
        let probes = probe_points(&ProbeBox::default(), 200, 3);
        let a = analyze_curvature(&u, &p, ("z", "xi"), 1.0, &probes, DerivativeProvider::Dual).unwrap();
        assert_eq!((a.z1[0].min, a.z1[0].max), (1.0, 1.0));
        assert_eq!((a.z1[1].min, a.z1[1].max), (-1.0, -1.0));
        assert_eq!(a.k2.max, 2.0);
        assert!(!a.horizontal.integrable);
        assert!(a.vertical.integrable);
        let c = &a.horizontal.pairs[0].worst_coefficients;
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_pair_is_flat() {
        let z = ScalarField::zero();
        let probes = probe_points(&ProbeBox::default(), 50, 3);
        let a = analyze_curvature(&z, &z, ("0", "0"), -1.0, &probes, DerivativeProvider::Dual).unwrap();
        assert_eq!(a.k2.max, 0.0);
        assert!(a.l0.is_undefined());
        assert!(a.horizontal.integrable);
        assert!(a.to_text().contains("l0: undefined"));
    }
}
