//! Differential operators on fields over ℝ⁴.
//!
//! Everything here is symbolic over [`ScalarField`]: operators assemble new
//! field graphs whose partial derivatives are resolved later by the chosen
//! [`crate::program::DerivativeProvider`].

use thiserror::Error;

use crate::exterior::{basis, ExteriorError, Form, Vector4};
use crate::field::ScalarField;
use crate::tensor::Tensor11;

pub type VectorField4 = Vector4<ScalarField>;
pub type PFormField = Form<ScalarField>;
pub type Tensor11Field = Tensor11<ScalarField>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error("exterior derivative of a 4-form")]
    DerivativeOfTopForm,
    #[error("coderivative of a 0-form")]
    CoderivativeOfScalar,
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// `dω`, with `(dω)_{k₀…kₚ} = Σ_j (−1)^j ∂_{k_j} ω_{k₀…k̂_j…kₚ}`.
pub fn exterior_derivative(w: &PFormField) -> Result<PFormField, CalculusError> {
    let p = w.degree();
    if p >= 4 {
        return Err(CalculusError::DerivativeOfTopForm);
    }
    let comps = basis(p + 1)
        .iter()
        .map(|k| {
            let mut acc = ScalarField::zero();
            for j in 0..k.len() {
                let rest: Vec<usize> = k.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &a)| a).collect();
                let term = w.component(&rest).partial(k[j]);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        })
        .collect();
    Ok(Form::from_components(p + 1, comps)?)
}

/// `δ = *d*`, taken literally (no degree-dependent sign).
pub fn coderivative(w: &PFormField) -> Result<PFormField, CalculusError> {
    if w.degree() == 0 {
        return Err(CalculusError::CoderivativeOfScalar);
    }
    Ok(exterior_derivative(&w.hodge())?.hodge())
}

/// `X(f) = X^μ ∂_μ f`.
pub fn directional(x: &VectorField4, f: &ScalarField) -> ScalarField {
    (0..4).fold(ScalarField::zero(), |acc, mu| acc + &x.comps[mu] * &f.partial(mu))
}

/// `[X, Y]^μ = X(Y^μ) − Y(X^μ)`.
pub fn lie_bracket(x: &VectorField4, y: &VectorField4) -> VectorField4 {
    Vector4::new(std::array::from_fn(|mu| directional(x, &y.comps[mu]) - directional(y, &x.comps[mu])))
}

/// `L_X ω = i(X) dω + d i(X) ω` (Cartan).
pub fn lie_derivative_form(x: &VectorField4, w: &PFormField) -> Result<PFormField, CalculusError> {
    let p = w.degree();
    let first = if p < 4 { exterior_derivative(w)?.interior(x)? } else { Form::zero(4) };
    if p == 0 {
        return Ok(first);
    }
    let second = exterior_derivative(&w.interior(x)?)?;
    Ok(first.plus(&second))
}

/// `X^σ ∂_σ ω_I` componentwise; equals `L_X ω` only when `X` has constant
/// components.
pub fn lie_derivative_form_componentwise(x: &VectorField4, w: &PFormField) -> PFormField {
    w.map(|c| directional(x, c))
}

/// `(L_X P)(Y) = [X, P(Y)] − P([X, Y])`, assembled column by column on the
/// coordinate frame.
pub fn lie_derivative_tensor11(x: &VectorField4, p: &Tensor11Field) -> Tensor11Field {
    let columns: Vec<VectorField4> = (0..4)
        .map(|c| {
            let e = Vector4::coordinate(c);
            let image = p.apply(&e);
            lie_bracket(x, &image).minus(&p.apply(&lie_bracket(x, &e)))
        })
        .collect();
    Tensor11::from_fn(|r, c| columns[c].comps[r].clone())
}
