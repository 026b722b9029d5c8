//! The named invariant suite: every identity of the model checked on seeded
//! probes with a single table of tolerances, rendered as text or JSON.
//!
//! Invariants are tagged *structural* (hold for every `(u, p)`) or
//! *dynamical* (hold only on solutions of the equations of motion).

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{exterior_derivative, PFormField};
use crate::connections::{curvature_closed_form, dual_mix, l0_summary, nijenhuis_self};
use crate::exterior::{flux_contraction, Form, Point4};
use crate::field::ScalarField;
use crate::phlo::{
    amplitude_phase, eed_residuals, eom_residuals, exchange_fluxes, field_invariants, frame_rotation, frobenius_4form,
    shuffle_check, stress_divergence, stress_tensor, support_mask,
};
use crate::probes::{probe_points, ProbeBox};
use crate::program::{CompiledSet, DerivativeProvider, FieldSet};
use crate::quadrature::{planck_action, PlanckReport, QuadratureError, QuadraturePlan};
use crate::solutions::{build_solution, PhloConfig};

/// Every tolerance used by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Constructor-level locks (star, zero invariants).
    pub lock: f64,
    /// Algebraic identities.
    pub structural: f64,
    /// Identities comparing two different derivative paths under the
    /// finite-difference provider.
    pub structural_fd: f64,
    pub dynamical_dual: f64,
    pub dynamical_fd: f64,
    /// Relative tolerance for the recovered `l₀`.
    pub l0_relative: f64,
    /// Relative quadrature tolerance (action mismatch and Richardson).
    pub quadrature: f64,
    /// Relative spread of `E` over time slices.
    pub conservation: f64,
    /// Support mask: `Φ > mask · max Φ`.
    pub mask: f64,
    /// Support mask under finite differences, whose relative error grows
    /// near the edge of a bump's support.
    pub mask_fd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lock: 1e-12,
            structural: 1e-10,
            structural_fd: 1e-6,
            dynamical_dual: 1e-8,
            dynamical_fd: 1e-5,
            l0_relative: 1e-6,
            quadrature: 1e-2,
            conservation: 5e-3,
            mask: 1e-6,
            mask_fd: 1e-2,
        }
    }
}

impl Tolerances {
    pub fn dynamical(&self, provider: DerivativeProvider) -> f64 {
        match provider {
            DerivativeProvider::Dual => self.dynamical_dual,
            DerivativeProvider::FiniteDifference { .. } => self.dynamical_fd,
        }
    }

    pub fn support_mask(&self, provider: DerivativeProvider) -> f64 {
        match provider {
            DerivativeProvider::Dual => self.mask,
            DerivativeProvider::FiniteDifference { .. } => self.mask_fd,
        }
    }

    pub fn l0(&self, provider: DerivativeProvider) -> f64 {
        match provider {
            DerivativeProvider::Dual => self.l0_relative,
            DerivativeProvider::FiniteDifference { .. } => self.l0_relative.max(self.dynamical_fd),
        }
    }

    /// Tolerance for structural identities whose two sides differentiate
    /// different expressions.
    pub fn derivative_identity(&self, provider: DerivativeProvider) -> f64 {
        match provider {
            DerivativeProvider::Dual => self.structural,
            DerivativeProvider::FiniteDifference { .. } => self.structural_fd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantClass {
    Structural,
    Dynamical,
}

impl InvariantClass {
    pub fn name(&self) -> &'static str {
        match self {
            InvariantClass::Structural => "structural",
            InvariantClass::Dynamical => "dynamical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub class: InvariantClass,
    /// Largest residual over the probes; non-finite when not computable
    /// (serialized as `null`).
    pub residual: f64,
    pub tolerance: f64,
    pub probes: usize,
    pub passed: bool,
    /// The identity being checked.
    pub identity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Where `u, p` came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSource {
    Solution,
    Expressions { u: String, p: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: PhloConfig,
    pub fields: FieldSource,
    pub provider: DerivativeProvider,
    pub seed: u64,
    pub probes: usize,
    pub probe_box: ProbeBox,
    pub tolerances: Tolerances,
    pub results: Vec<InvariantResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planck: Option<PlanckReport>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct SuiteError {
    pub stage: &'static str,
    pub message: String,
}

/// Everything `run_suite` needs besides the physical configuration.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub provider: DerivativeProvider,
    pub seed: u64,
    pub probes: usize,
    /// Defaults to the solution's support box.
    pub probe_box: Option<ProbeBox>,
    /// Replaces the built solution.
    pub fields: Option<(ScalarField, ScalarField, FieldSource)>,
    pub plan: QuadraturePlan,
    pub tolerances: Tolerances,
    pub dual_mix_draws: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            provider: DerivativeProvider::Dual,
            seed: crate::probes::DEFAULT_SEED,
            probes: crate::probes::DEFAULT_PROBES,
            probe_box: None,
            fields: None,
            plan: QuadraturePlan::default(),
            tolerances: Tolerances::default(),
            dual_mix_draws: 20,
        }
    }
}

/// `max` that propagates NaN, so a NaN residual always fails.
fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn stage<T, E: std::fmt::Display>(name: &'static str, r: Result<T, E>) -> Result<T, SuiteError> {
    r.map_err(|e| SuiteError { stage: name, message: e.to_string() })
}

struct Suite<'a> {
    provider: DerivativeProvider,
    probes: &'a [Point4],
    masked: &'a [Point4],
    results: Vec<InvariantResult>,
}

impl Suite<'_> {
    fn record(
        &mut self,
        name: &str,
        class: InvariantClass,
        identity: &str,
        residual: f64,
        tolerance: f64,
        probes: usize,
    ) {
        self.results.push(InvariantResult {
            name: name.to_string(),
            class,
            residual,
            tolerance,
            probes,
            passed: residual <= tolerance,
            identity: identity.to_string(),
            note: None,
        });
    }

    fn note(&mut self, text: impl Into<String>) {
        if let Some(last) = self.results.last_mut() {
            last.note = Some(text.into());
        }
    }

    /// Worst residual of `set` over the full or masked probe set.
    fn max<S: FieldSet + Sync>(
        &self,
        stage_name: &'static str,
        set: &S,
        masked: bool,
        measure: impl Fn(&S::Value) -> f64,
    ) -> Result<(f64, usize), SuiteError>
    where
        S::Value: Send,
    {
        let pts = if masked { self.masked } else { self.probes };
        let values = stage(stage_name, CompiledSet::new(set).eval_many(pts, self.provider))?;
        Ok((values.iter().map(measure).fold(0.0, worst), pts.len()))
    }

    fn forms(
        &self,
        stage_name: &'static str,
        forms: Vec<PFormField>,
        masked: bool,
    ) -> Result<(f64, usize), SuiteError> {
        self.max(stage_name, &forms, masked, |v| v.iter().map(|f| f.max_abs()).fold(0.0, worst))
    }

    fn scalars(
        &self,
        stage_name: &'static str,
        fields: Vec<ScalarField>,
        masked: bool,
    ) -> Result<(f64, usize), SuiteError> {
        self.max(stage_name, &fields, masked, |v| v.iter().map(|x| x.abs()).fold(0.0, worst))
    }
}

use InvariantClass::{Dynamical, Structural};

/// Runs every invariant in a fixed order and returns the full report.
pub fn run_suite(cfg: &PhloConfig, opts: &SuiteOptions) -> Result<SuiteReport, SuiteError> {
    stage("config", cfg.validate())?;
    let (u, p, source) = match &opts.fields {
        Some((u, p, src)) => (u.clone(), p.clone(), src.clone()),
        None => {
            let s = stage("solution", build_solution(cfg))?;
            (s.u, s.p, FieldSource::Solution)
        }
    };
    let ph = stage("convention lock", crate::phlo::build_phlo(&u, &p, cfg.epsilon, cfg.kappa, cfg.l0))?;
    let probe_box = opts.probe_box.unwrap_or_else(|| cfg.support_box());
    if !probe_box.is_valid() {
        return Err(SuiteError { stage: "probes", message: "invalid probe box".into() });
    }
    let probes = probe_points(&probe_box, opts.probes, opts.seed);
    let masked =
        stage("support mask", support_mask(&ph, &probes, opts.tolerances.support_mask(opts.provider), opts.provider))?;
    let tol = opts.tolerances;
    let dyn_tol = tol.dynamical(opts.provider);
    let id_tol = tol.derivative_identity(opts.provider);
    let mut s = Suite { provider: opts.provider, probes: &probes, masked: &masked, results: Vec::new() };
    let n = probes.len();

    // Star lock.
    let (r, _) = s.forms("convention lock", vec![ph.star_f().minus(&ph.f_tilde)], false)?;
    s.record("star_lock", Structural, "*F = F̃", r, tol.lock, n);

    // Projections.
    let pr = stage("projections", ph.projections())?;
    let mut defects: Vec<_> = pr.all().iter().map(|q| q.tensor.compose(&q.tensor).minus(&q.tensor)).collect();
    defects.push(pr.v.tensor.compose(&pr.h.tensor));
    defects.push(pr.v_tilde.tensor.compose(&pr.h_tilde.tensor));
    let (r, _) = s.max("projections", &defects, false, |v| v.iter().map(|t| t.max_abs()).fold(0.0, worst))?;
    s.record(
        "projection_idempotence",
        Structural,
        "P∘P = P for all eight projections; V∘H = Ṽ∘H̃ = 0",
        r,
        tol.structural,
        n,
    );

    let mut actions = Vec::new();
    for q in [&pr.v_star, &pr.h_star, &pr.v_tilde_star, &pr.h_tilde_star] {
        actions.push(stage("projections", q.tensor.apply_two_form(&ph.f))?);
    }
    actions.push(stage("projections", pr.v_tilde_star.tensor.apply_covector(&ph.a))?.minus(&ph.a));
    actions.push(stage("projections", pr.v_star.tensor.apply_covector(&ph.a_star))?.minus(&ph.a_star));
    let (r, _) = s.forms("projections", actions, false)?;
    s.record("projection_actions", Structural, "V*F = H*F = Ṽ*F = H̃*F = 0; Ṽ*A = A; V*A* = A*", r, tol.structural, n);

    // Curvature.
    let closed = stage("curvature", curvature_closed_form(&ph.u, &ph.p, cfg.epsilon))?;
    let nv = stage("curvature", nijenhuis_self(&pr.v, &probes, opts.provider))?;
    let nvt = stage("curvature", nijenhuis_self(&pr.v_tilde, &probes, opts.provider))?;
    let diffs = vec![nv.r.minus(&closed.r), nvt.r.minus(&closed.r_tilde)];
    let (r, _) = s.max("curvature", &diffs, false, |v| v.iter().map(|c| c.max_abs()).fold(0.0, worst))?;
    s.record("curvature_closed_form", Structural, "V[H∂m, H∂n] = 𝓡(∂m, ∂n), likewise for Ṽ", r, id_tol, n);

    let vdx = stage("curvature", pr.v_star.tensor.apply_covector(&Form::dx(0)))?;
    let vdy = stage("curvature", pr.v_star.tensor.apply_covector(&Form::dx(1)))?;
    let omega = stage("curvature", vdx.wedge(&vdy))?;
    let on_z = stage("curvature", stage("curvature", omega.interior(&closed.z1))?.pair(&closed.z2))?;
    let norms = vec![
        closed.r.squared_norm() - &closed.k2,
        closed.r_tilde.squared_norm() - &closed.k2,
        on_z - &closed.k2 * cfg.epsilon,
    ];
    let (r, _) = s.scalars("curvature", norms, false)?;
    s.record("curvature_norm", Structural, "|𝓡|² = |𝓡̃|² = 𝓚²; (V*dx∧V*dy)(Z₁, Z₂) = ε𝓚²", r, tol.structural, n);

    // l₀.
    let (summary, per_probe) =
        stage("l0", l0_summary(&ph.u, &ph.p, cfg.epsilon, &probes, tol.support_mask(opts.provider), opts.provider))?;
    let l0_residual = if summary.defined == 0 || summary.undefined > 0 {
        f64::INFINITY
    } else {
        per_probe.iter().flatten().map(|l| (l - cfg.l0).abs() / cfg.l0).fold(0.0, worst)
    };
    s.record(
        "l0_recovery",
        Dynamical,
        "√((u²+p²)/𝓚²) = l₀ on the support",
        l0_residual,
        tol.l0(opts.provider),
        summary.support,
    );
    if summary.defined == 0 {
        s.note("l0 undefined: no support points with 𝓚² > 0");
    } else if summary.undefined > 0 {
        s.note(format!("l0 undefined at {} of {} support probes", summary.undefined, summary.support));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut mix_residual = 0.0f64;
    for _ in 0..opts.dual_mix_draws {
        let (a, b): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (mu, mp) = stage("l0", dual_mix(&ph.u, &ph.p, cfg.epsilon, a, b))?;
        let (_, mixed) =
            stage("l0", l0_summary(&mu, &mp, cfg.epsilon, &probes, tol.support_mask(opts.provider), opts.provider))?;
        for (l, m) in per_probe.iter().zip(&mixed) {
            if let (Some(l), Some(m)) = (l, m) {
                mix_residual = worst(mix_residual, (l - m).abs() / l);
            }
        }
    }
    s.record(
        "l0_dual_mix",
        Structural,
        "l₀ invariant under (u, p) ↦ (au + εbp, εbu − ap)",
        mix_residual,
        tol.structural,
        summary.defined,
    );

    // Equations of motion.
    let eom = stage("equations of motion", eom_residuals(&ph))?;
    let (r, _) = s.scalars("equations of motion", eom.scalar.to_vec(), false)?;
    s.record("eom_component_pdes", Dynamical, "κl₀(u_ξ − εu_z) = −p, κl₀(p_ξ − εp_z) = u", r, dyn_tol, n);
    let (r, _) = s.forms("equations of motion", vec![eom.form.clone()], false)?;
    s.record("eom_field_form", Dynamical, "κl₀ L_X F = εF̃", r, dyn_tol, n);
    let tensors = vec![eom.projection.clone()];
    let (r, _) = s.max("equations of motion", &tensors, false, |v| v.iter().map(|t| t.max_abs()).fold(0.0, worst))?;
    s.record("eom_projection_form", Dynamical, "κl₀ L_X(V − V₀) = ε(Ṽ − V₀)", r, dyn_tol, n);
    let (r, _) = s.forms("equations of motion", eom.lagrange.to_vec(), false)?;
    s.record("eom_lagrange", Dynamical, "κl₀ X^σ∂_σF̃ + εF = 0, κl₀ X^σ∂_σF − εF̃ = 0", r, dyn_tol, n);
    let tensors = vec![eom.complex.clone()];
    let (r, _) = s.max("equations of motion", &tensors, false, |v| v.iter().map(|t| t.max_abs()).fold(0.0, worst))?;
    s.record("eom_complex_structure", Dynamical, "L_XΨ = (κ/l₀) J∘Ψ, Ψ = uI + pJ", r, dyn_tol, n);

    // Exchange fluxes.
    let ex = stage("exchange", exchange_fluxes(&ph))?;
    let (r, _) = s.forms("exchange", vec![ex.energy_balance(), ex.momentum_balance()], false)?;
    s.record("exchange_antisymmetry", Structural, "i(Z₁)F = i(Z₂)*F, i(Z₁)*F = −i(Z₂)F", r, tol.structural, n);
    let sf = ph.star_f();
    let df = stage("exchange", exterior_derivative(&ph.f))?;
    let dsf = stage("exchange", exterior_derivative(&sf))?;
    let half = -0.5 * cfg.epsilon;
    let chain = vec![
        ex.z1_f.minus(&stage("exchange", flux_contraction(&ph.f, &df))?.scaled(half)),
        ex.z1_f.minus(&stage("exchange", flux_contraction(&sf, &dsf))?.scaled(half)),
        ex.z1_star_f.minus(&stage("exchange", flux_contraction(&sf, &df))?.scaled(half)),
        ex.z1_star_f.plus(&stage("exchange", flux_contraction(&ph.f, &dsf))?.scaled(half)),
    ];
    let (r, _) = s.forms("exchange", chain, false)?;
    s.record(
        "exchange_flux_identity",
        Structural,
        "i(Z₁)F = −ε·½F^{σρ}(dF)_{σρμ}dx^μ = −ε·½(*F)^{σρ}(d*F)_{σρμ}dx^μ; i(Z₁)*F = −ε·½(*F)^{σρ}(dF)_{σρμ}dx^μ",
        r,
        id_tol,
        n,
    );
    let rate = cfg.kappa / cfg.l0;
    let (a_bar, a_star_bar) = stage("exchange", ph.raised_potentials())?;
    let kl0 = cfg.kappa * cfg.l0;
    let on_solution = vec![
        ex.z1_f.clone(),
        ex.z1_star_f.plus(&ph.zeta.times(&ph.phi2).scaled(rate)),
        stage("exchange", Form::from_components(1, closed.z1.scaled(kl0).minus(&a_star_bar).comps.to_vec()))?,
        stage("exchange", Form::from_components(1, closed.z2.scaled(kl0).plus(&a_bar).comps.to_vec()))?,
    ];
    let (r, _) = s.forms("exchange", on_solution, false)?;
    s.record(
        "exchange_on_solution",
        Dynamical,
        "i(Z₁)F = 0; i(Z₁)*F = −(κ/l₀)Φ²ζ; κl₀Z₁ = Ā*; κl₀Z₂ = −Ā",
        r,
        dyn_tol,
        n,
    );

    // Zero invariants and the null condition.
    let (i1, i2) = stage("zero invariants", field_invariants(&ph))?;
    let (r, _) = s.scalars("zero invariants", vec![i1, i2], false)?;
    s.record("zero_invariants", Structural, "F_{μν}F^{μν} = F_{μν}(*F)^{μν} = 0", r, tol.lock, n);

    let t = stress_tensor(&ph);
    let set = (t.square(), ph.phi2.square());
    let values_sq = stage("null condition", CompiledSet::new(&set).eval_many(&probes, opts.provider))?;
    let scale = values_sq.iter().fold(0.0f64, |m, (_, f4)| m.max(*f4));
    let top = values_sq.iter().map(|(tt, _)| tt.abs()).fold(0.0, worst);
    let r = if top == 0.0 { 0.0 } else { top / scale.max(f64::MIN_POSITIVE) };
    s.record("null_condition", Structural, "T_{μν}T^{μν} = 0 (relative to max Φ⁴)", r, tol.structural, n);
    let mut parts = Vec::new();
    for mu in 0..4 {
        for nu in 0..4 {
            parts.push(&t.f_part[mu][nu] - &t.star_part[mu][nu]);
        }
    }
    parts.push(t.energy_density() - &ph.phi2);
    parts.extend(t.asymmetry());
    let (r, _) = s.scalars("null condition", parts, false)?;
    s.record(
        "equal_sub_energies",
        Structural,
        "F_{μσ}F^{νσ} = (*F)_{μσ}(*F)^{νσ}; T₄⁴ = Φ²; T_{μν} symmetric",
        r,
        tol.structural,
        n,
    );

    // Stress divergence.
    let div = stage("stress divergence", stress_divergence(&ph))?;
    let (r, _) = s.forms("stress divergence", vec![div.direct.clone(), div.via_d.clone()], false)?;
    s.record("stress_divergence", Dynamical, "∂_νT_μ^ν = 0", r, dyn_tol, n);
    let (r, _) =
        s.forms("stress divergence", vec![div.direct.minus(&div.via_d), div.via_d.minus(&div.via_delta)], false)?;
    s.record(
        "divergence_identity",
        Structural,
        "∂_νT_μ^ν = ½[F^{αβ}(dF)_{αβμ} + (*F)^{αβ}(d*F)_{αβμ}] = F_{μν}(δF)^ν + (*F)_{μν}(δ*F)^ν",
        r,
        id_tol,
        n,
    );

    // Extended electrodynamics.
    let [r1, r2, r3] = stage("eed", eed_residuals(&ph))?;
    let (r, _) = s.forms("eed", vec![r1, r2], false)?;
    s.record("eed_residuals", Dynamical, "F^{αβ}(dF)_{αβμ} = (*F)^{αβ}(d*F)_{αβμ} = 0", r, dyn_tol, n);
    let (r, _) = s.forms("eed", vec![r3], false)?;
    s.record("eed_balance", Structural, "(*F)^{αβ}(dF)_{αβμ} + F^{αβ}(d*F)_{αβμ} = 0", r, id_tol, n);

    // Amplitude and phase.
    let ap = amplitude_phase(&ph);
    let (r, m) = s.scalars("amplitude/phase", vec![ap.lx_phi.clone()], true)?;
    s.record("amplitude_transport", Dynamical, "L_XΦ = 0 on the support", r, dyn_tol, m);
    let (r, m) = s.scalars("amplitude/phase", vec![&ap.lx_psi - rate], true)?;
    s.record("phase_transport", Dynamical, "L_Xψ = κ/l₀ on the support", r, dyn_tol, m);
    let (r, m) = s.scalars("amplitude/phase", vec![&ap.r_bold - &(&ph.phi2 * &ap.lx_psi)], true)?;
    s.record("phase_chain_rule", Structural, "u X(p) − p X(u) = Φ² L_Xψ", r, id_tol, m);

    // Frame rotation.
    let fr = stage("frame rotation", frame_rotation(&ph))?;
    let values = stage("frame rotation", fr.evaluate(&masked, opts.provider))?;
    let w = cfg.epsilon * rate;
    let (mut solve, mut solution) = (0.0f64, 0.0f64);
    for (m, c) in &values {
        for r in 0..2 {
            for k in 0..2 {
                solve = worst(solve, (m[r][k] - c[r][k]).abs());
                let target = [[0.0, w], [-w, 0.0]][r][k];
                solution = worst(solution, (m[r][k] - target).abs());
            }
        }
    }
    s.record(
        "frame_rotation_closed_form",
        Structural,
        "2×2 solve of ([Ā,X], [Ā*,X]) = (Ā, Ā*)·M matches −½(L_XΦ²/Φ²)I + εL_Xψ·J",
        solve,
        id_tol,
        masked.len(),
    );
    s.record("frame_rotation_on_solution", Dynamical, "M = ε(κ/l₀)·[[0, 1], [−1, 0]]", solution, dyn_tol, masked.len());

    // Shuffling symmetry.
    let sh = stage("shuffle", shuffle_check(&ph))?;
    let (r, _) = s.scalars("shuffle", sh.leak.clone(), false)?;
    let r = if sh.x_outside_plane { r } else { f64::INFINITY };
    s.record("shuffle_symmetry", Structural, "[Ā,X], [Ā*,X] ∈ span{∂x, ∂y}, X ∉ span{∂x, ∂y}", r, tol.structural, n);

    // Frobenius 4-form.
    let four = stage("4-form", frobenius_4form(&ph))?;
    let (r, _) = s.scalars("4-form", vec![&four.from_a - &four.from_a_star, &four.from_a - &four.expected], false)?;
    s.record("frobenius_4form_equality", Structural, "dA∧A∧ζ = dA*∧A*∧ζ = ε𝐑ω₀", r, id_tol, n);
    let (r, _) = s.scalars("4-form", vec![&four.from_a - &(&ph.phi2 * (cfg.epsilon * rate))], false)?;
    s.record("frobenius_4form_on_solution", Dynamical, "dA∧A∧ζ = (εκΦ²/l₀)ω₀", r, dyn_tol, n);

    // Planck relation.
    let mut plan = opts.plan;
    if plan.spatial_box.is_none() && opts.probe_box.is_some() {
        plan.spatial_box = Some([
            [probe_box.min[0], probe_box.max[0]],
            [probe_box.min[1], probe_box.max[1]],
            [probe_box.min[2], probe_box.max[2]],
        ]);
    }
    let cells = plan.counts.iter().product::<usize>() * plan.time_count;
    let planck = match planck_action(cfg, &ph, &plan, opts.provider, tol.quadrature) {
        Ok(report) => {
            let r = worst(report.mismatch, report.richardson);
            s.record("planck_relation", Dynamical, "∫(l₀/c) dA∧A∧ζ = εκ·E·T over one period", r, tol.quadrature, cells);
            s.record(
                "energy_conservation",
                Dynamical,
                "E(t) constant over one period",
                report.conservation,
                tol.conservation,
                plan.time_slices,
            );
            Some(report)
        }
        Err(e @ QuadratureError::Truncated { .. }) => {
            let msg = e.to_string();
            s.record(
                "planck_relation",
                Dynamical,
                "∫(l₀/c) dA∧A∧ζ = εκ·E·T over one period",
                f64::INFINITY,
                tol.quadrature,
                cells,
            );
            s.note(msg.clone());
            s.record(
                "energy_conservation",
                Dynamical,
                "E(t) constant over one period",
                f64::INFINITY,
                tol.conservation,
                plan.time_slices,
            );
            s.note(msg);
            None
        }
        Err(e) => return Err(SuiteError { stage: "planck", message: e.to_string() }),
    };
    let results = s.results;
    let passed = results.iter().all(|r| r.passed);
    Ok(SuiteReport {
        config: *cfg,
        fields: source,
        provider: opts.provider,
        seed: opts.seed,
        probes: opts.probes,
        probe_box,
        tolerances: tol,
        results,
        planck,
        passed,
    })
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3e}")
    } else {
        "not computable".to_string()
    }
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &InvariantResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "PhLO verification report");
        let _ = writeln!(
            out,
            "config: epsilon={} kappa={} l0={} lambda={} r0={} a={} b={} gamma={} phase_family={} phi0={} c={}",
            c.epsilon,
            c.kappa,
            c.l0,
            c.lambda(),
            c.r0,
            c.a,
            c.b,
            c.gamma,
            c.phase_family,
            c.phi0,
            c.c
        );
        match &self.fields {
            FieldSource::Solution => {
                let _ = writeln!(out, "fields: built solution");
            }
            FieldSource::Expressions { u, p } => {
                let _ = writeln!(out, "fields: u = {u}; p = {p}");
            }
        }
        let provider = match self.provider {
            DerivativeProvider::Dual => "dual".to_string(),
            DerivativeProvider::FiniteDifference { step } => format!("fd (step {step:e})"),
        };
        let _ = writeln!(out, "provider: {provider}; seed: {}; probes: {}", self.seed, self.probes);
        let b = &self.probe_box;
        let _ = writeln!(
            out,
            "probe box: x[{}, {}] y[{}, {}] z[{}, {}] xi[{}, {}]",
            b.min[0], b.max[0], b.min[1], b.max[1], b.min[2], b.max[2], b.min[3], b.max[3]
        );
        for r in &self.results {
            let _ = writeln!(out);
            let _ = writeln!(out, "[{}] {} ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.class.name());
            let _ = writeln!(out, "    identity   {}", r.identity);
            let _ = writeln!(out, "    residual   {}", sci(r.residual));
            let _ = writeln!(out, "    tolerance  {}", sci(r.tolerance));
            let _ = writeln!(out, "    probes     {}", r.probes);
            if let Some(note) = &r.note {
                let _ = writeln!(out, "    note       {note}");
            }
        }
        if let Some(p) = &self.planck {
            let _ = writeln!(out);
            let _ = writeln!(out, "Planck relation");
            let _ = writeln!(out, "    E          {:.12e}", p.energy);
            let _ = writeln!(out, "    T          {:.12e}", p.period);
            let _ = writeln!(out, "    nu         {:.12e}", p.frequency);
            let _ = writeln!(out, "    h = E*T    {:.12e}", p.h);
            let _ = writeln!(out, "    H          {:.12e}", p.action);
            let _ = writeln!(out, "    mismatch   {}", sci(p.mismatch));
            let _ = writeln!(out, "    richardson {}", sci(p.richardson));
            for w in &p.warnings {
                let _ = writeln!(out, "    warning    {w}");
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(out);
        let _ = writeln!(out, "summary: {} passed, {} failed", self.results.len() - failed, failed);
        out
    }
}
