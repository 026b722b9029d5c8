//! The field pair `(F, *F)` of a photon-like object and everything derived
//! from it: stress-energy, exchange fluxes, equations of motion in their
//! equivalent forms, amplitude/phase transport, frame rotation, the shuffling
//! symmetry and the Frobenius 4-form.
//!
//! Conventions: `A = u dx + p dy`, `A* = −εp dx + εu dy`, `ζ = ε dz + dξ`,
//! `X = −ε∂z + ∂ξ`, `F = A∧ζ`, `F̃ = A*∧ζ`. With the Hodge star of
//! [`crate::exterior`], `F̃ = *F` identically.

use thiserror::Error;

use crate::calculus::{
    coderivative, directional, exterior_derivative, lie_bracket, lie_derivative_form,
    lie_derivative_form_componentwise, lie_derivative_tensor11, CalculusError, PFormField, Tensor11Field, VectorField4,
};
use crate::connections::{
    build_projections, check_sign, curvature_closed_form, null_direction, transport, v0, ConnectionError, Projections,
};
use crate::exterior::{flux_contraction, invariant_contraction, ExteriorError, Form, Point4, Vector4, ETA};
use crate::field::ScalarField;
use crate::probes::{probe_points, ProbeBox};
use crate::program::{CompiledSet, DerivativeProvider, EvalError};
use crate::tensor::Tensor11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhloError {
    #[error("kappa must be +1 or -1, got {0}")]
    BadKappa(f64),
    #[error("l0 must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("star convention broken: |*F − F̃| = {0:e}")]
    ConventionBroken(f64),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `u, p` together with every derived object of the model.
#[derive(Debug, Clone)]
pub struct PhloFields {
    pub u: ScalarField,
    pub p: ScalarField,
    pub eps: f64,
    pub kappa: f64,
    pub l0: f64,
    pub a: PFormField,
    pub a_star: PFormField,
    pub zeta: PFormField,
    pub x: VectorField4,
    pub f: PFormField,
    pub f_tilde: PFormField,
    /// `Φ² = u² + p²`.
    pub phi2: ScalarField,
    pub phi: ScalarField,
    pub psi: ScalarField,
}

const CONSTRUCTION_PROBES: usize = 64;

/// Builds the field pair and checks `F̃ = *F` on a small probe set.
pub fn build_phlo(u: &ScalarField, p: &ScalarField, eps: f64, kappa: f64, l0: f64) -> Result<PhloFields, PhloError> {
    check_sign(eps)?;
    if kappa != 1.0 && kappa != -1.0 {
        return Err(PhloError::BadKappa(kappa));
    }
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(PhloError::BadLength(l0));
    }
    let zero = ScalarField::zero();
    let a = Form::from_components(1, vec![u.clone(), p.clone(), zero.clone(), zero.clone()])?;
    let a_star = Form::from_components(1, vec![p * (-eps), u * eps, zero.clone(), zero.clone()])?;
    let zeta = Form::from_components(1, vec![zero.clone(), zero, ScalarField::constant(eps), ScalarField::one()])?;
    let f = a.wedge(&zeta)?;
    let f_tilde = a_star.wedge(&zeta)?;
    let phi2 = u.square() + p.square();
    let fields = PhloFields {
        u: u.clone(),
        p: p.clone(),
        eps,
        kappa,
        l0,
        x: null_direction(eps),
        phi: phi2.sqrt(),
        psi: p.atan2(u),
        phi2,
        a,
        a_star,
        zeta,
        f,
        f_tilde,
    };
    let probes = probe_points(&ProbeBox::default(), CONSTRUCTION_PROBES, 1);
    let lock = fields.f.hodge().minus(&fields.f_tilde);
    let values = CompiledSet::new(&lock).eval_many(&probes, DerivativeProvider::Dual)?;
    let worst = values.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(PhloError::ConventionBroken(worst));
    }
    Ok(fields)
}

impl PhloFields {
    /// `*F`, computed through the Hodge star rather than the closed form.
    pub fn star_f(&self) -> PFormField {
        self.f.hodge()
    }

    pub fn projections(&self) -> Result<Projections, PhloError> {
        Ok(build_projections(&self.u, &self.p, self.eps)?)
    }

    /// `𝐑 = u X(p) − p X(u)`.
    pub fn r_bold(&self) -> ScalarField {
        &self.u * &transport(&self.p, self.eps) - &self.p * &transport(&self.u, self.eps)
    }

    /// `Ā = A^♯` and `Ā* = (A*)^♯`.
    pub fn raised_potentials(&self) -> Result<(VectorField4, VectorField4), PhloError> {
        Ok((self.a.sharp()?, self.a_star.sharp()?))
    }
}

/// Mixed components `t[μ][ν] = T_μ^ν`.
#[derive(Debug, Clone)]
pub struct StressTensor {
    pub t: [[ScalarField; 4]; 4],
    /// `F_{μσ}F^{νσ}` and `(*F)_{μσ}(*F)^{νσ}` separately.
    pub f_part: [[ScalarField; 4]; 4],
    pub star_part: [[ScalarField; 4]; 4],
}

fn raised_product(f: &PFormField, mu: usize, nu: usize) -> ScalarField {
    (0..4).fold(ScalarField::zero(), |acc, s| acc + f.component(&[mu, s]) * f.component(&[nu, s]) * (ETA[nu] * ETA[s]))
}

/// `T_μ^ν = −½[F_{μσ}F^{νσ} + (*F)_{μσ}(*F)^{νσ}]`.
pub fn stress_tensor(fields: &PhloFields) -> StressTensor {
    let sf = fields.star_f();
    let f_part: [[ScalarField; 4]; 4] =
        std::array::from_fn(|mu| std::array::from_fn(|nu| raised_product(&fields.f, mu, nu)));
    let star_part: [[ScalarField; 4]; 4] =
        std::array::from_fn(|mu| std::array::from_fn(|nu| raised_product(&sf, mu, nu)));
    let t = std::array::from_fn(|mu| std::array::from_fn(|nu| (&f_part[mu][nu] + &star_part[mu][nu]) * -0.5));
    StressTensor { t, f_part, star_part }
}

impl StressTensor {
    /// `T₄⁴`, which equals `+Φ²` with the conventions used here.
    pub fn energy_density(&self) -> ScalarField {
        self.t[3][3].clone()
    }

    /// `T_{μν}T^{μν} = Σ η_μ η_ν (T_μ^ν)²`.
    pub fn square(&self) -> ScalarField {
        let mut acc = ScalarField::zero();
        for mu in 0..4 {
            for nu in 0..4 {
                acc = acc + self.t[mu][nu].square() * (ETA[mu] * ETA[nu]);
            }
        }
        acc
    }

    /// `T_{μν} − T_{νμ}` entries for `μ < ν`.
    pub fn asymmetry(&self) -> Vec<ScalarField> {
        let mut out = Vec::new();
        for mu in 0..4 {
            for nu in mu + 1..4 {
                out.push(&self.t[mu][nu] * ETA[nu] - &self.t[nu][mu] * ETA[mu]);
            }
        }
        out
    }

    /// `∂_ν T_μ^ν`.
    pub fn divergence(&self) -> PFormField {
        let comps =
            (0..4).map(|mu| (0..4).fold(ScalarField::zero(), |acc, nu| acc + self.t[mu][nu].partial(nu))).collect();
        Form::from_components(1, comps).expect("four components")
    }
}

/// The divergence of `T` computed three ways.
#[derive(Debug, Clone)]
pub struct StressDivergence {
    pub direct: PFormField,
    /// `½[F^{αβ}(dF)_{αβμ} + (*F)^{αβ}(d*F)_{αβμ}]`.
    pub via_d: PFormField,
    /// `F_{μν}(δF)^ν + (*F)_{μν}(δ*F)^ν`.
    pub via_delta: PFormField,
}

pub fn stress_divergence(fields: &PhloFields) -> Result<StressDivergence, PhloError> {
    let sf = fields.star_f();
    let df = exterior_derivative(&fields.f)?;
    let dsf = exterior_derivative(&sf)?;
    let via_d = flux_contraction(&fields.f, &df)?.plus(&flux_contraction(&sf, &dsf)?).scaled(0.5);
    let delta_f = coderivative(&fields.f)?.sharp()?;
    let delta_sf = coderivative(&sf)?.sharp()?;
    let via_delta = contract_second(&fields.f, &delta_f)?.plus(&contract_second(&sf, &delta_sf)?);
    Ok(StressDivergence { direct: stress_tensor(fields).divergence(), via_d, via_delta })
}

/// `ω_{μν} v^ν dx^μ` (contraction on the second slot).
fn contract_second(w: &PFormField, v: &VectorField4) -> Result<PFormField, PhloError> {
    Ok(w.interior(v)?.negate())
}

#[derive(Debug, Clone)]
pub struct ExchangeFluxes {
    pub z1: VectorField4,
    pub z2: VectorField4,
    pub z1_f: PFormField,
    pub z2_star_f: PFormField,
    pub z1_star_f: PFormField,
    pub z2_f: PFormField,
    /// `⟨A, Z₁⟩` and `⟨A*, Z₁⟩`.
    pub a_z1: ScalarField,
    pub a_star_z1: ScalarField,
}

impl ExchangeFluxes {
    /// `i(Z₁)F − i(Z₂)*F`, identically zero.
    pub fn energy_balance(&self) -> PFormField {
        self.z1_f.minus(&self.z2_star_f)
    }

    /// `i(Z₁)*F + i(Z₂)F`, identically zero.
    pub fn momentum_balance(&self) -> PFormField {
        self.z1_star_f.plus(&self.z2_f)
    }
}

pub fn exchange_fluxes(fields: &PhloFields) -> Result<ExchangeFluxes, PhloError> {
    let curv = curvature_closed_form(&fields.u, &fields.p, fields.eps)?;
    let sf = fields.star_f();
    Ok(ExchangeFluxes {
        z1_f: fields.f.interior(&curv.z1)?,
        z2_star_f: sf.interior(&curv.z2)?,
        z1_star_f: sf.interior(&curv.z1)?,
        z2_f: fields.f.interior(&curv.z2)?,
        a_z1: fields.a.pair(&curv.z1)?,
        a_star_z1: fields.a_star.pair(&curv.z1)?,
        z1: curv.z1,
        z2: curv.z2,
    })
}

/// Residuals of the equations of motion in their equivalent forms.
#[derive(Debug, Clone)]
pub struct EomResiduals {
    /// `κl₀ L_X F − εF̃`.
    pub form: PFormField,
    /// `κl₀ L_X(V − V₀) − ε(Ṽ − V₀)`.
    pub projection: Tensor11Field,
    /// `κl₀ X(u) + p` and `κl₀ X(p) − u`.
    pub scalar: [ScalarField; 2],
    /// `L_X Ψ − (κ/l₀) J∘Ψ` with `Ψ = u·V₀ + p·J`.
    pub complex: Tensor11Field,
    /// Lagrange equations with `F`, `F̃` independent, componentwise:
    /// `κl₀ X^σ∂_σ F̃ + εF` and `κl₀ X^σ∂_σ F − εF̃`.
    pub lagrange: [PFormField; 2],
}

/// Complex structure of the `(x, y)` plane: `J∂x = ∂y`, `J∂y = −∂x`.
pub fn complex_structure() -> Tensor11Field {
    let mut j = Tensor11::zero();
    j.m[1][0] = ScalarField::one();
    j.m[0][1] = ScalarField::constant(-1.0);
    j
}

pub fn eom_residuals(fields: &PhloFields) -> Result<EomResiduals, PhloError> {
    let (eps, kl0) = (fields.eps, fields.kappa * fields.l0);
    let x = &fields.x;
    let lx_f = lie_derivative_form(x, &fields.f)?;
    let form = lx_f.scaled(kl0).minus(&fields.f_tilde.scaled(eps));

    let pr = fields.projections()?;
    let v0f = v0::<ScalarField>();
    let lv = lie_derivative_tensor11(x, &pr.v.tensor.minus(&v0f));
    let projection = lv.scaled(kl0).minus(&pr.v_tilde.tensor.minus(&v0f).scaled(eps));

    let scalar = [transport(&fields.u, eps) * kl0 + &fields.p, transport(&fields.p, eps) * kl0 - &fields.u];

    let j = complex_structure();
    let psi_t = Tensor11::from_fn(|r, c| &v0f.m[r][c] * &fields.u + &j.m[r][c] * &fields.p);
    let complex = lie_derivative_tensor11(x, &psi_t).minus(&j.compose(&psi_t).scaled(fields.kappa / fields.l0));

    let lagrange = [
        lie_derivative_form_componentwise(x, &fields.f_tilde).scaled(kl0).plus(&fields.f.scaled(eps)),
        lie_derivative_form_componentwise(x, &fields.f).scaled(kl0).minus(&fields.f_tilde.scaled(eps)),
    ];
    Ok(EomResiduals { form, projection, scalar, complex, lagrange })
}

/// `r₁ = F^{αβ}(dF)_{αβμ}`, `r₂ = (*F)^{αβ}(d*F)_{αβμ}`,
/// `r₃ = (*F)^{αβ}(dF)_{αβμ} + F^{αβ}(d*F)_{αβμ}`.
pub fn eed_residuals(fields: &PhloFields) -> Result<[PFormField; 3], PhloError> {
    let sf = fields.star_f();
    let df = exterior_derivative(&fields.f)?;
    let dsf = exterior_derivative(&sf)?;
    Ok([
        flux_contraction(&fields.f, &df)?,
        flux_contraction(&sf, &dsf)?,
        flux_contraction(&sf, &df)?.plus(&flux_contraction(&fields.f, &dsf)?),
    ])
}

#[derive(Debug, Clone)]
pub struct AmplitudePhase {
    pub phi: ScalarField,
    pub psi: ScalarField,
    pub lx_phi: ScalarField,
    pub lx_psi: ScalarField,
    /// `𝐑 = u X(p) − p X(u)`, equal to `Φ² L_Xψ`.
    pub r_bold: ScalarField,
}

/// `Φ`, `ψ` and their transports. `ψ` and both transports are only
/// meaningful where `Φ > 0`; callers mask with [`support_mask`].
pub fn amplitude_phase(fields: &PhloFields) -> AmplitudePhase {
    AmplitudePhase {
        lx_phi: directional(&fields.x, &fields.phi),
        lx_psi: directional(&fields.x, &fields.psi),
        phi: fields.phi.clone(),
        psi: fields.psi.clone(),
        r_bold: fields.r_bold(),
    }
}

/// Probes where `Φ > max(threshold·max Φ, 1e-30)`.
pub fn support_mask(
    fields: &PhloFields,
    probes: &[Point4],
    threshold: f64,
    provider: DerivativeProvider,
) -> Result<Vec<Point4>, PhloError> {
    let phi2 = CompiledSet::new(&fields.phi2).eval_many(probes, provider)?;
    let max = phi2.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt();
    let cut = (threshold * max).max(1e-30);
    Ok(probes.iter().zip(phi2).filter(|(_, v)| v.sqrt() > cut).map(|(p, _)| *p).collect())
}

/// Row-major 2×2 matrix on the `(x, y)` plane.
pub type Matrix2 = [[f64; 2]; 2];

/// Frame-rotation matrix `M` with `([Ā,X], [Ā*,X]) = (Ā, Ā*)·M`.
#[derive(Debug, Clone)]
pub struct FrameRotation {
    pub a_bar: VectorField4,
    pub a_star_bar: VectorField4,
    pub bracket_a: VectorField4,
    pub bracket_a_star: VectorField4,
    /// Closed form `−½(L_XΦ²/Φ²)·I + ε L_Xψ·[[0, 1], [−1, 0]]`.
    pub closed: [[ScalarField; 2]; 2],
}

pub fn frame_rotation(fields: &PhloFields) -> Result<FrameRotation, PhloError> {
    let (a_bar, a_star_bar) = fields.raised_potentials()?;
    let x = &fields.x;
    let bracket_a = lie_bracket(&a_bar, x);
    let bracket_a_star = lie_bracket(&a_star_bar, x);
    let lx_phi2 = directional(x, &fields.phi2);
    let diag = &lx_phi2 / &fields.phi2 * -0.5;
    let rot = fields.r_bold() / &fields.phi2 * fields.eps;
    let closed = [[diag.clone(), rot.clone()], [-rot, diag]];
    Ok(FrameRotation { a_bar, a_star_bar, bracket_a, bracket_a_star, closed })
}

impl FrameRotation {
    /// Solves the 2×2 system at each probe; returns `(solved, closed)`.
    pub fn evaluate(
        &self,
        probes: &[Point4],
        provider: DerivativeProvider,
    ) -> Result<Vec<(Matrix2, Matrix2)>, PhloError> {
        let [[c00, c01], [c10, c11]] = &self.closed;
        let set = (
            vec![self.a_bar.clone(), self.a_star_bar.clone(), self.bracket_a.clone(), self.bracket_a_star.clone()],
            vec![c00.clone(), c01.clone(), c10.clone(), c11.clone()],
        );
        let values = CompiledSet::new(&set).eval_many(probes, provider)?;
        Ok(values
            .into_iter()
            .map(|(v, c)| {
                let b = nalgebra::Matrix2::new(v[0].comps[0], v[1].comps[0], v[0].comps[1], v[1].comps[1]);
                let rhs = nalgebra::Matrix2::new(v[2].comps[0], v[3].comps[0], v[2].comps[1], v[3].comps[1]);
                let m = b.try_inverse().map(|inv| inv * rhs).unwrap_or_else(|| nalgebra::Matrix2::repeat(f64::NAN));
                ([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], [[c[0], c[1]], [c[2], c[3]]])
            })
            .collect())
    }
}

/// `[Ā, X]` and `[Ā*, X]`; both stay in `span{∂x, ∂y}` while `X` does not.
#[derive(Debug, Clone)]
pub struct ShuffleCheck {
    pub bracket_a: VectorField4,
    pub bracket_a_star: VectorField4,
    /// The `z, ξ` components of both brackets.
    pub leak: Vec<ScalarField>,
    pub x_outside_plane: bool,
}

pub fn shuffle_check(fields: &PhloFields) -> Result<ShuffleCheck, PhloError> {
    let (a_bar, a_star_bar) = fields.raised_potentials()?;
    let bracket_a = lie_bracket(&a_bar, &fields.x);
    let bracket_a_star = lie_bracket(&a_star_bar, &fields.x);
    let leak = [&bracket_a, &bracket_a_star].iter().flat_map(|b| [b.comps[2].clone(), b.comps[3].clone()]).collect();
    let x_outside_plane = fields.x.comps[2].as_constant() != Some(0.0) || fields.x.comps[3].as_constant() != Some(0.0);
    Ok(ShuffleCheck { bracket_a, bracket_a_star, leak, x_outside_plane })
}

/// Coefficients of `dA∧A∧ζ` and `dA*∧A*∧ζ` on `ω₀`, and the expected `ε𝐑`.
#[derive(Debug, Clone)]
pub struct FourForm {
    pub from_a: ScalarField,
    pub from_a_star: ScalarField,
    pub expected: ScalarField,
}

pub fn frobenius_4form(fields: &PhloFields) -> Result<FourForm, PhloError> {
    let coefficient = |a: &PFormField| -> Result<ScalarField, PhloError> {
        let w = exterior_derivative(a)?.wedge(a)?.wedge(&fields.zeta)?;
        Ok(w.components()[0].clone())
    };
    Ok(FourForm {
        from_a: coefficient(&fields.a)?,
        from_a_star: coefficient(&fields.a_star)?,
        expected: fields.r_bold() * fields.eps,
    })
}

/// Zero invariants `F_{μν}F^{μν}` and `F_{μν}(*F)^{μν}`.
pub fn field_invariants(fields: &PhloFields) -> Result<(ScalarField, ScalarField), PhloError> {
    let sf = fields.star_f();
    Ok((invariant_contraction(&fields.f, &fields.f)?, invariant_contraction(&fields.f, &sf)?))
}

/// Helper for vectors with only plane components in tests and reports.
pub fn plane_components(v: &Vector4<f64>) -> [f64; 2] {
    [v.comps[0], v.comps[1]]
}
