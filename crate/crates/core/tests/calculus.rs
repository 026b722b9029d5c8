//! Field-level operators: d² = 0, bracket algebra, Cartan vs componentwise
//! Lie derivatives, and agreement between derivative providers.

use phlo_core::calculus::{
    coderivative, directional, exterior_derivative, lie_bracket, lie_derivative_form,
    lie_derivative_form_componentwise, lie_derivative_tensor11, PFormField, VectorField4,
};
use phlo_core::dsl::{parse_field, Params};
use phlo_core::exterior::{Form, Point4, Vector4};
use phlo_core::probes::{probe_points, ProbeBox};
use phlo_core::program::CompiledSet;
use phlo_core::tensor::Tensor11;
use phlo_core::{DerivativeProvider, ScalarField};

const DUAL: DerivativeProvider = DerivativeProvider::Dual;
const FD: DerivativeProvider = DerivativeProvider::FiniteDifference { step: 1e-5 };

fn f(text: &str) -> ScalarField {
    parse_field(text, &Params::new(-1.0, 1.0, 0.25)).unwrap()
}

fn one_form(c: [&str; 4]) -> PFormField {
    Form::from_components(1, c.iter().map(|t| f(t)).collect()).unwrap()
}

fn vector(c: [&str; 4]) -> VectorField4 {
    Vector4::new(c.map(f))
}

fn probes(n: usize) -> Vec<Point4> {
    probe_points(&ProbeBox::new([-1.0; 4], [1.0; 4]), n, 7)
}

fn max_form(w: &PFormField, pts: &[Point4], provider: DerivativeProvider) -> f64 {
    CompiledSet::new(w).eval_many(pts, provider).unwrap().iter().map(|v| v.max_abs()).fold(0.0, f64::max)
}

fn forms() -> Vec<PFormField> {
    let w1 = one_form(["sin(x*y) + z", "exp(0.3*xi)*cos(z)", "x^2*y", "bump((xi+z)/4)*sin(x)"]);
    let w2 = one_form(["y*z*xi", "atan2(y, 2 + x)", "sqrt(4 + x^2 + z^2)", "cos(x - xi)"]);
    let w3 = one_form(["0", "0", "sin(x)*y", "exp(-(x^2+y^2))"]);
    let two = w1.wedge(&w2).unwrap();
    vec![w1, w2, w3, two, Form::scalar(f("sin(x)*cos(y)*exp(z/3)*xi"))]
}

#[test]
fn d_squared_vanishes() {
    let pts = probes(1000);
    for w in forms() {
        let dd = exterior_derivative(&exterior_derivative(&w).unwrap()).unwrap();
        assert!(max_form(&dd, &pts, DUAL) <= 1e-12);
        assert!(max_form(&dd, &pts, FD) <= 1e-6);
    }
}

#[test]
fn coderivative_is_star_d_star() {
    let pts = probes(200);
    for w in forms().into_iter().filter(|w| w.degree() > 0) {
        let literal = exterior_derivative(&w.hodge()).unwrap().hodge();
        let delta = coderivative(&w).unwrap();
        assert!(max_form(&delta.minus(&literal), &pts, DUAL) <= 1e-12);
    }
}

#[test]
fn bracket_is_antisymmetric_and_bilinear() {
    let pts = probes(500);
    let x = vector(["sin(y)", "x*z", "1", "exp(xi/2)"]);
    let y = vector(["xi", "cos(x*y)", "z^2", "0"]);
    let z = vector(["y^2", "0", "atan2(x, 3)", "x*xi"]);
    let sum = lie_bracket(&x, &y).plus(&lie_bracket(&y, &x));
    let lin =
        lie_bracket(&x, &y.scaled(2.0).plus(&z)).minus(&lie_bracket(&x, &y).scaled(2.0).plus(&lie_bracket(&x, &z)));
    let v = CompiledSet::new(&(sum, lin)).eval_many(&pts, DUAL).unwrap();
    assert!(v.iter().all(|(a, b)| a.max_abs() <= 1e-12 && b.max_abs() <= 1e-12));
    // Jacobi identity.
    let jac = lie_bracket(&x, &lie_bracket(&y, &z))
        .plus(&lie_bracket(&y, &lie_bracket(&z, &x)))
        .plus(&lie_bracket(&z, &lie_bracket(&x, &y)));
    let v = CompiledSet::new(&jac).eval_many(&pts, DUAL).unwrap();
    assert!(v.iter().all(|a| a.max_abs() <= 1e-10));
}

#[test]
fn cartan_matches_componentwise_for_constant_fields() {
    let pts = probes(500);
    for eps in [-1.0, 1.0] {
        let x =
            Vector4::new([ScalarField::zero(), ScalarField::zero(), ScalarField::constant(-eps), ScalarField::one()]);
        for w in forms() {
            let gap = lie_derivative_form(&x, &w).unwrap().minus(&lie_derivative_form_componentwise(&x, &w));
            assert!(max_form(&gap, &pts, DUAL) <= 1e-10);
        }
    }
}

#[test]
fn tensor_lie_derivative_is_a_derivation() {
    // (L_X P)(Y) = [X, P Y] − P [X, Y] for a non-constant X.
    let pts = probes(200);
    let x = vector(["y", "sin(z)", "1", "x*xi"]);
    let p = Tensor11::from_fn(|r, c| f(&format!("sin({}*x + {}*y) + z*xi", r + 1, c + 1)));
    let y = vector(["cos(xi)", "x", "y*z", "1"]);
    let lhs = lie_derivative_tensor11(&x, &p).apply(&y);
    let rhs = lie_bracket(&x, &p.apply(&y)).minus(&p.apply(&lie_bracket(&x, &y)));
    let v = CompiledSet::new(&lhs.minus(&rhs)).eval_many(&pts, DUAL).unwrap();
    assert!(v.iter().all(|a| a.max_abs() <= 1e-10));
}

#[test]
fn directional_oracles() {
    let p = Point4::new(0.3, -0.2, 0.7, 1.1);
    for eps in [-1.0, 1.0] {
        let x =
            Vector4::new([ScalarField::zero(), ScalarField::zero(), ScalarField::constant(-eps), ScalarField::one()]);
        let psi = f("z") * (-eps * 1.0 / 0.25) + 0.4;
        assert!((directional(&x, &psi).eval(p, DUAL).unwrap() - 4.0).abs() < 1e-14);
    }
}

#[test]
fn providers_agree_on_first_derivatives() {
    let pts = probes(500);
    for w in forms() {
        let d = exterior_derivative(&w).unwrap();
        let dual = CompiledSet::new(&d).eval_many(&pts, DUAL).unwrap();
        let fd = CompiledSet::new(&d).eval_many(&pts, FD).unwrap();
        for (a, b) in dual.iter().zip(&fd) {
            let scale = a.max_abs().max(1.0);
            assert!(a.minus(b).max_abs() <= 1e-6 * scale);
        }
    }
}
