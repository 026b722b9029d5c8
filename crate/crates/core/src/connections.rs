//! Projections of the photon-like nonlinear connection, their Nijenhuis
//! curvature, Frobenius analysis of distributions, and the length `l₀`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    directional, exterior_derivative, lie_bracket, CalculusError, PFormField, Tensor11Field, VectorField4,
};
use crate::exterior::{basis, Coeff, ExteriorError, Point4, Vector4};
use crate::field::ScalarField;
use crate::program::{CompiledSet, DerivativeProvider, EvalError, FieldSet};
use crate::tensor::Tensor11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectionError {
    #[error("epsilon must be +1 or -1, got {0}")]
    BadSign(f64),
    #[error("not a projection: |P∘P − P| = {residual:e} at {point}")]
    NotAProjection { residual: f64, point: Point4 },
    #[error("generators are rank deficient at probe {point}")]
    RankDeficient { point: Point4 },
    #[error("complement frame does not span the quotient at probe {point}")]
    BadComplement { point: Point4 },
    #[error("coframe/frame pairing violated by {residual:e} at {point}")]
    PairingViolation { residual: f64, point: Point4 },
    #[error("dual_mix needs (a, b) != (0, 0)")]
    ZeroMix,
    #[error("empty distribution")]
    EmptyDistribution,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

pub(crate) fn check_sign(eps: f64) -> Result<(), ConnectionError> {
    if eps == 1.0 || eps == -1.0 {
        Ok(())
    } else {
        Err(ConnectionError::BadSign(eps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProjectionTag {
    V,
    VTilde,
    H,
    HTilde,
    VStar,
    HStar,
    VTildeStar,
    HTildeStar,
    Custom,
}

#[derive(Debug, Clone)]
pub struct ProjectionField {
    pub tag: ProjectionTag,
    pub tensor: Tensor11Field,
}

impl ProjectionField {
    pub fn custom(tensor: Tensor11Field) -> Self {
        ProjectionField { tag: ProjectionTag::Custom, tensor }
    }

    /// Largest `|P∘P − P|` entry over the probes.
    pub fn idempotence_defect(&self, probes: &[Point4], provider: DerivativeProvider) -> Result<f64, EvalError> {
        let defect = self.tensor.compose(&self.tensor).minus(&self.tensor);
        max_over(&defect, probes, provider, |t| t.max_abs())
    }
}

/// The eight projections built from `(u, p, ε)`.
#[derive(Debug, Clone)]
pub struct Projections {
    pub v: ProjectionField,
    pub v_tilde: ProjectionField,
    pub h: ProjectionField,
    pub h_tilde: ProjectionField,
    pub v_star: ProjectionField,
    pub h_star: ProjectionField,
    pub v_tilde_star: ProjectionField,
    pub h_tilde_star: ProjectionField,
}

impl Projections {
    pub fn all(&self) -> [&ProjectionField; 8] {
        [
            &self.v,
            &self.v_tilde,
            &self.h,
            &self.h_tilde,
            &self.v_star,
            &self.h_star,
            &self.v_tilde_star,
            &self.h_tilde_star,
        ]
    }
}

/// `V₀ = dx⊗∂x + dy⊗∂y`.
pub fn v0<T: Coeff>() -> Tensor11<T> {
    Tensor11::from_fn(|r, c| T::from_f64(if r == c && r < 2 { 1.0 } else { 0.0 }))
}

/// Builds `V, Ṽ` from their `(u, p)` entries; `H = id − V`, and the starred
/// versions are the transposed matrices acting on covectors.
pub fn build_projections(u: &ScalarField, p: &ScalarField, eps: f64) -> Result<Projections, ConnectionError> {
    check_sign(eps)?;
    let mut v = v0::<ScalarField>();
    v.m[0][2] = u * (-eps);
    v.m[0][3] = -u;
    v.m[1][2] = p * (-eps);
    v.m[1][3] = -p;
    let mut vt = v0::<ScalarField>();
    vt.m[0][2] = p.clone();
    vt.m[0][3] = p * eps;
    vt.m[1][2] = -u;
    vt.m[1][3] = u * (-eps);
    let id = Tensor11::identity();
    let h = id.minus(&v);
    let ht = id.minus(&vt);
    let tagged = |tag, tensor| ProjectionField { tag, tensor };
    Ok(Projections {
        v_star: tagged(ProjectionTag::VStar, v.transpose()),
        h_star: tagged(ProjectionTag::HStar, h.transpose()),
        v_tilde_star: tagged(ProjectionTag::VTildeStar, vt.transpose()),
        h_tilde_star: tagged(ProjectionTag::HTildeStar, ht.transpose()),
        v: tagged(ProjectionTag::V, v),
        v_tilde: tagged(ProjectionTag::VTilde, vt),
        h: tagged(ProjectionTag::H, h),
        h_tilde: tagged(ProjectionTag::HTilde, ht),
    })
}

/// Vector-valued 2-form: one vector per coordinate pair `μ < ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValued2Form<T> {
    pub comps: [Vector4<T>; 6],
}

pub type CurvatureForm = VectorValued2Form<ScalarField>;

impl<T: Coeff> VectorValued2Form<T> {
    pub fn zero() -> Self {
        VectorValued2Form { comps: std::array::from_fn(|_| Vector4::zero()) }
    }

    fn slot(mu: usize, nu: usize) -> usize {
        basis(2).iter().position(|b| b[0] == mu && b[1] == nu).expect("increasing pair")
    }

    /// Value on `(∂_μ, ∂_ν)`, antisymmetric.
    pub fn at(&self, mu: usize, nu: usize) -> Vector4<T> {
        match mu.cmp(&nu) {
            std::cmp::Ordering::Less => self.comps[Self::slot(mu, nu)].clone(),
            std::cmp::Ordering::Greater => self.comps[Self::slot(nu, mu)].negate(),
            std::cmp::Ordering::Equal => Vector4::zero(),
        }
    }

    pub fn set(&mut self, mu: usize, nu: usize, value: Vector4<T>) {
        if mu < nu {
            self.comps[Self::slot(mu, nu)] = value;
        } else {
            self.comps[Self::slot(nu, mu)] = value.negate();
        }
    }

    pub fn plus(&self, o: &Self) -> Self {
        VectorValued2Form { comps: std::array::from_fn(|k| self.comps[k].plus(&o.comps[k])) }
    }

    pub fn minus(&self, o: &Self) -> Self {
        VectorValued2Form { comps: std::array::from_fn(|k| self.comps[k].minus(&o.comps[k])) }
    }

    /// `Ω(X, Y) = Σ_{μ<ν} (X^μ Y^ν − X^ν Y^μ) Ω_{μν}`.
    pub fn evaluate(&self, x: &Vector4<T>, y: &Vector4<T>) -> Vector4<T> {
        let mut out = Vector4::zero();
        for (k, idx) in basis(2).iter().enumerate() {
            let (m, n) = (idx[0], idx[1]);
            let w = x.comps[m].times(&y.comps[n]).minus(&x.comps[n].times(&y.comps[m]));
            out = out.plus(&self.comps[k].times(&w));
        }
        out
    }

    /// Sum of squared components (the "squared module").
    pub fn squared_norm(&self) -> T {
        self.comps.iter().flat_map(|v| v.comps.iter()).fold(T::zero(), |acc, c| acc.plus(&c.times(c)))
    }
}

impl VectorValued2Form<f64> {
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, v| m.max(v.max_abs()))
    }
}

impl FieldSet for CurvatureForm {
    type Value = VectorValued2Form<f64>;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        self.comps.iter().for_each(|v| v.push_fields(out));
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Self::Value {
        VectorValued2Form { comps: std::array::from_fn(|k| self.comps[k].read_value(values)) }
    }
}

/// `[P, P] = 𝓡 + 𝓡̄` on coordinate pairs, split into its two parts.
#[derive(Debug, Clone)]
pub struct NijenhuisSplit {
    /// `𝓡(X, Y) = V[HX, HY]`: vertical values on horizontal arguments.
    pub r: CurvatureForm,
    /// `𝓡̄(X, Y) = H[VX, VY]`: horizontal values on vertical arguments.
    pub r_bar: CurvatureForm,
}

impl NijenhuisSplit {
    pub fn bracket(&self) -> CurvatureForm {
        self.r.plus(&self.r_bar)
    }
}

/// Nijenhuis self-bracket of the vertical projection `P` (with `H = id − P`).
/// `P` is checked for idempotence on `probes` first.
pub fn nijenhuis_self(
    proj: &ProjectionField,
    probes: &[Point4],
    provider: DerivativeProvider,
) -> Result<NijenhuisSplit, ConnectionError> {
    let p = &proj.tensor;
    let defect = p.compose(p).minus(p);
    let compiled = CompiledSet::new(&defect);
    for (point, d) in probes.iter().zip(compiled.eval_many(probes, provider)?) {
        let residual = d.max_abs();
        if residual > 1e-10 {
            return Err(ConnectionError::NotAProjection { residual, point: *point });
        }
    }
    let h = Tensor11::identity().minus(p);
    let hor: Vec<VectorField4> = (0..4).map(|a| h.apply(&Vector4::coordinate(a))).collect();
    let ver: Vec<VectorField4> = (0..4).map(|a| p.apply(&Vector4::coordinate(a))).collect();
    let mut r = CurvatureForm::zero();
    let mut r_bar = CurvatureForm::zero();
    for idx in basis(2) {
        let (m, n) = (idx[0], idx[1]);
        r.set(m, n, p.apply(&lie_bracket(&hor[m], &hor[n])));
        r_bar.set(m, n, h.apply(&lie_bracket(&ver[m], &ver[n])));
    }
    Ok(NijenhuisSplit { r, r_bar })
}

/// `X(f) = f_ξ − ε f_z`, the transport derivative along `X = −ε∂z + ∂ξ`.
pub fn transport(f: &ScalarField, eps: f64) -> ScalarField {
    f.partial(3) - f.partial(2) * eps
}

#[derive(Debug, Clone)]
pub struct ClosedFormCurvature {
    pub r: CurvatureForm,
    pub r_tilde: CurvatureForm,
    pub z1: VectorField4,
    pub z2: VectorField4,
    /// `𝓚² = (u_ξ − εu_z)² + (p_ξ − εp_z)²`.
    pub k2: ScalarField,
}

/// The two curvature forms in closed form; both live on `dz∧dξ` only.
pub fn curvature_closed_form(
    u: &ScalarField,
    p: &ScalarField,
    eps: f64,
) -> Result<ClosedFormCurvature, ConnectionError> {
    check_sign(eps)?;
    let xu = transport(u, eps);
    let xp = transport(p, eps);
    let zero = ScalarField::zero();
    let z1 = Vector4::new([&xu * (-eps), &xp * (-eps), zero.clone(), zero.clone()]);
    let z2 = Vector4::new([xp.clone(), -&xu, zero.clone(), zero]);
    let mut r = CurvatureForm::zero();
    r.set(2, 3, z1.clone());
    let mut r_tilde = CurvatureForm::zero();
    r_tilde.set(2, 3, z2.clone());
    let k2 = xu.square() + xp.square();
    Ok(ClosedFormCurvature { r, r_tilde, z1, z2, k2 })
}

/// `l₀ = √((u² + p²)/𝓚²)`.
pub fn l0_field(u: &ScalarField, p: &ScalarField, eps: f64) -> Result<ScalarField, ConnectionError> {
    let k2 = curvature_closed_form(u, p, eps)?.k2;
    Ok(((u.square() + p.square()) / k2).sqrt())
}

/// Summary of `l₀` over probes on the support `Φ > threshold·max Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L0Summary {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
    /// Probes on the support where `l₀` was evaluated.
    pub defined: usize,
    /// Probes on the support with `𝓚² ≤ 1e-30` ("undefined, plane-wave degenerate").
    pub undefined: usize,
    pub support: usize,
}

impl L0Summary {
    pub fn is_undefined(&self) -> bool {
        self.defined == 0
    }
}

pub fn l0_summary(
    u: &ScalarField,
    p: &ScalarField,
    eps: f64,
    probes: &[Point4],
    threshold: f64,
    provider: DerivativeProvider,
) -> Result<(L0Summary, Vec<Option<f64>>), ConnectionError> {
    let k2 = curvature_closed_form(u, p, eps)?.k2;
    let phi2 = u.square() + p.square();
    let set = (phi2, k2);
    let values = CompiledSet::new(&set).eval_many(probes, provider)?;
    let max_phi = values.iter().fold(0.0f64, |m, (f, _)| m.max(f.sqrt()));
    let mut per_probe = Vec::with_capacity(values.len());
    let mut defined = Vec::new();
    let (mut undefined, mut support) = (0, 0);
    for (f2, k2) in values {
        let on_support = max_phi > 0.0 && f2.sqrt() > threshold * max_phi;
        if !on_support {
            per_probe.push(None);
            continue;
        }
        support += 1;
        if k2 <= 1e-30 {
            undefined += 1;
            per_probe.push(None);
        } else {
            let l = (f2 / k2).sqrt();
            defined.push(l);
            per_probe.push(Some(l));
        }
    }
    defined.sort_by(f64::total_cmp);
    let summary = L0Summary {
        min: defined.first().copied(),
        max: defined.last().copied(),
        median: (!defined.is_empty()).then(|| defined[defined.len() / 2]),
        defined: defined.len(),
        undefined,
        support,
    };
    Ok((summary, per_probe))
}

/// `(u, p) ↦ (a u + ε b p, ε b u − a p)`, which rescales `u² + p²` and `𝓚²`
/// by the same factor `a² + b²` and so preserves `l₀`.
pub fn dual_mix(
    u: &ScalarField,
    p: &ScalarField,
    eps: f64,
    a: f64,
    b: f64,
) -> Result<(ScalarField, ScalarField), ConnectionError> {
    check_sign(eps)?;
    if a == 0.0 && b == 0.0 {
        return Err(ConnectionError::ZeroMix);
    }
    Ok((u * a + p * (eps * b), u * (eps * b) - p * a))
}

/// Span of vector fields.
#[derive(Debug, Clone)]
pub struct Distribution {
    pub generators: Vec<VectorField4>,
}

impl Distribution {
    pub fn new(generators: Vec<VectorField4>) -> Self {
        Distribution { generators }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    /// Largest Euclidean norm of the out-of-span part over probes.
    pub max_out_of_span: f64,
    /// Out-of-span coefficients on the complement frame, at the probe where
    /// the norm is largest.
    pub worst_coefficients: Vec<f64>,
    /// Out-of-span part at every probe, in probe order.
    #[serde(skip)]
    pub out_of_span: Vec<[f64; 4]>,
    #[serde(skip)]
    pub coefficients: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub integrable: bool,
    pub tolerance: f64,
    pub max_magnitude: f64,
    pub probes: usize,
    pub pairs: Vec<PairReport>,
}

/// Least-squares Frobenius check of `Δ` on probes.
///
/// At each probe every bracket `[X_i, X_j]` is split into its least-squares
/// projection on the generators and a residual; `Δ` is integrable when all
/// residual norms stay below `tol · max(1, |X|²)`. The residual is also
/// expressed on a complementary frame — `complement` if given, otherwise
/// coordinate fields added greedily in `x, y, z, ξ` order.
pub fn frobenius_report(
    dist: &Distribution,
    complement: Option<&[VectorField4]>,
    probes: &[Point4],
    provider: DerivativeProvider,
    tol: f64,
) -> Result<IntegrabilityReport, ConnectionError> {
    let k = dist.generators.len();
    if k == 0 {
        return Err(ConnectionError::EmptyDistribution);
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let brackets: Vec<VectorField4> =
        pairs.iter().map(|&(i, j)| lie_bracket(&dist.generators[i], &dist.generators[j])).collect();
    let extra = complement.map(|c| c.to_vec()).unwrap_or_default();
    let set = (dist.generators.clone(), brackets, extra);
    let values = CompiledSet::new(&set).eval_many(probes, provider)?;

    let mut reports: Vec<PairReport> = pairs
        .iter()
        .map(|&(i, j)| PairReport {
            i,
            j,
            max_out_of_span: 0.0,
            worst_coefficients: Vec::new(),
            out_of_span: Vec::with_capacity(probes.len()),
            coefficients: Vec::with_capacity(probes.len()),
        })
        .collect();
    let mut integrable = true;
    let mut max_magnitude = 0.0f64;
    for (point, (gens, brs, comp)) in probes.iter().zip(values) {
        let g = DMatrix::from_fn(4, k, |r, c| gens[c].comps[r]);
        let svd = g.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax == 0.0 || smin <= 1e-10 * smax {
            return Err(ConnectionError::RankDeficient { point: *point });
        }
        let scale = gens.iter().map(|v| v.comps.iter().map(|c| c * c).sum::<f64>()).fold(1.0, f64::max);
        let frame =
            if complement.is_some() { comp.iter().map(|v| v.comps).collect::<Vec<_>>() } else { greedy_completion(&g) };
        let full = DMatrix::from_fn(4, k + frame.len(), |r, c| if c < k { g[(r, c)] } else { frame[c - k][r] });
        let lu = full.clone().lu();
        if full.ncols() != 4 || !lu.is_invertible() {
            return Err(ConnectionError::BadComplement { point: *point });
        }
        for (rep, b) in reports.iter_mut().zip(&brs) {
            let bv = DVector::from_column_slice(&b.comps);
            let c = svd.solve(&bv, 1e-14).expect("svd has both factors");
            let resid = &bv - &g * c;
            let norm = resid.norm();
            if norm > tol * scale {
                integrable = false;
            }
            let all = lu.solve(&bv).ok_or(ConnectionError::BadComplement { point: *point })?;
            let coeffs: Vec<f64> = all.iter().skip(k).copied().collect();
            let mut part = [0.0; 4];
            for (w, coef) in frame.iter().zip(&coeffs) {
                for r in 0..4 {
                    part[r] += coef * w[r];
                }
            }
            if norm >= rep.max_out_of_span {
                rep.max_out_of_span = norm;
                rep.worst_coefficients = coeffs.clone();
            }
            max_magnitude = max_magnitude.max(norm);
            rep.out_of_span.push(part);
            rep.coefficients.push(coeffs);
        }
    }
    Ok(IntegrabilityReport { integrable, tolerance: tol, max_magnitude, probes: probes.len(), pairs: reports })
}

fn greedy_completion(g: &DMatrix<f64>) -> Vec<[f64; 4]> {
    let mut cols: Vec<DVector<f64>> = g.column_iter().map(|c| c.into_owned()).collect();
    let mut frame = Vec::new();
    for a in 0..4 {
        if cols.len() == 4 {
            break;
        }
        let mut e = [0.0; 4];
        e[a] = 1.0;
        let mut trial = cols.clone();
        trial.push(DVector::from_column_slice(&e));
        let m = DMatrix::from_columns(&trial);
        let sv = m.singular_values();
        if sv.min() > 1e-8 * sv.max() {
            cols = trial;
            frame.push(e);
        }
    }
    frame
}

/// `Ω = −dα^m ⊗ Y_m` and its values on generator pairs.
#[derive(Debug, Clone)]
pub struct FrobeniusCurvature {
    pub omega: CurvatureForm,
    /// `Ω(X_i, X_j)` for `i < j`.
    pub on_generators: Vec<((usize, usize), VectorField4)>,
}

pub fn frobenius_curvature(
    horizontal: &Distribution,
    coframe: &[PFormField],
    frame: &[VectorField4],
    probes: &[Point4],
    provider: DerivativeProvider,
) -> Result<FrobeniusCurvature, ConnectionError> {
    assert_eq!(coframe.len(), frame.len(), "coframe and frame sizes differ");
    let mut pairings = Vec::new();
    for alpha in coframe {
        for x in &horizontal.generators {
            pairings.push(alpha.pair(x)?);
        }
        for y in frame {
            pairings.push(alpha.pair(y)?);
        }
    }
    let nh = horizontal.generators.len();
    let nf = frame.len();
    let values = CompiledSet::new(&pairings).eval_many(probes, provider)?;
    for (point, vals) in probes.iter().zip(values) {
        for (m, chunk) in vals.chunks(nh + nf).enumerate() {
            let mut residual = chunk[..nh].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (n, v) in chunk[nh..].iter().enumerate() {
                let target = if n == m { 1.0 } else { 0.0 };
                residual = residual.max((v - target).abs());
            }
            if residual > 1e-10 {
                return Err(ConnectionError::PairingViolation { residual, point: *point });
            }
        }
    }
    let d_alpha: Vec<PFormField> = coframe.iter().map(exterior_derivative).collect::<Result<_, _>>()?;
    let mut omega = CurvatureForm::zero();
    for (k, idx) in basis(2).iter().enumerate() {
        let mut acc = Vector4::zero();
        for (da, y) in d_alpha.iter().zip(frame) {
            acc = acc.minus(&y.times(&da.components()[k]));
        }
        omega.set(idx[0], idx[1], acc);
    }
    let g = &horizontal.generators;
    let on_generators = (0..g.len())
        .flat_map(|i| (i + 1..g.len()).map(move |j| (i, j)))
        .map(|(i, j)| ((i, j), omega.evaluate(&g[i], &g[j])))
        .collect();
    Ok(FrobeniusCurvature { omega, on_generators })
}

/// Largest value of `measure` over probes.
pub fn max_over<S: FieldSet + Sync>(
    set: &S,
    probes: &[Point4],
    provider: DerivativeProvider,
    measure: impl Fn(&S::Value) -> f64,
) -> Result<f64, EvalError>
where
    S::Value: Send,
{
    Ok(CompiledSet::new(set).eval_many(probes, provider)?.iter().map(measure).fold(0.0, f64::max))
}

/// `Ā = (u dx + p dy)^♯` style helper: vector field with the given
/// spatial-plane components.
pub fn plane_vector(ax: ScalarField, ay: ScalarField) -> VectorField4 {
    Vector4::new([ax, ay, ScalarField::zero(), ScalarField::zero()])
}

/// `X = −ε∂z + ∂ξ`.
pub fn null_direction(eps: f64) -> VectorField4 {
    Vector4::new([ScalarField::zero(), ScalarField::zero(), ScalarField::constant(-eps), ScalarField::one()])
}

/// `X(f)` through the generic directional derivative.
pub fn along_null(f: &ScalarField, eps: f64) -> ScalarField {
    directional(&null_direction(eps), f)
}
