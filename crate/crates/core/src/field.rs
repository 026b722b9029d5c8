//! Scalar fields on ℝ⁴ as shared expression graphs.
//!
//! A [`ScalarField`] is an immutable, reference-counted node. Operators build
//! new nodes with light constant folding (`0·f = 0`, `1·f = f`, constant
//! arithmetic); partial derivatives are deferred [`Node::Partial`] nodes that
//! the active [`crate::program::DerivativeProvider`] resolves at evaluation
//! time. `∂` is pushed through linear nodes so that shared sub-expressions stay
//! shared after differentiation.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

/// Coordinate axis of ℝ⁴ (`x, y, z, ξ = ct`).
pub const AXES: [&str; 4] = ["x", "y", "z", "xi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Sqrt,
    /// Standard mollifier `exp(−1/(1−t²))` on `|t| < 1`, zero elsewhere.
    Bump,
    /// `bump(√s)` written in terms of `s = t²`; smooth at `s = 0`.
    RadialBump,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Bump => "bump",
            UnaryFn::RadialBump => "radial_bump",
        }
    }

    pub fn apply(self, t: f64) -> f64 {
        match self {
            UnaryFn::Sin => t.sin(),
            UnaryFn::Cos => t.cos(),
            UnaryFn::Exp => t.exp(),
            UnaryFn::Sqrt => t.sqrt(),
            UnaryFn::Bump => bump(t),
            UnaryFn::RadialBump => radial_bump(t),
        }
    }
}

/// The mollifier used for compact support: `exp(−1/(1−t²))` for `|t| < 1`.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// `bump(√s)` for `s ≥ 0`.
pub fn radial_bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(ScalarField),
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Powi(ScalarField, i32),
    Powf(ScalarField, f64),
    Unary(UnaryFn, ScalarField),
    Atan2(ScalarField, ScalarField),
    Partial(ScalarField, usize),
}

/// Evaluable map ℝ⁴ → ℝ with derivatives available through a provider.
#[derive(Debug, Clone)]
pub struct ScalarField(Arc<Node>);

impl ScalarField {
    fn node(node: Node) -> Self {
        ScalarField(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Self::node(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Coordinate function `x^axis`.
    pub fn coordinate(axis: usize) -> Self {
        assert!(axis < 4, "coordinate axis out of range");
        Self::node(Node::Var(axis))
    }

    pub fn x() -> Self {
        Self::coordinate(0)
    }
    pub fn y() -> Self {
        Self::coordinate(1)
    }
    pub fn z() -> Self {
        Self::coordinate(2)
    }
    pub fn xi() -> Self {
        Self::coordinate(3)
    }

    pub fn as_node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub(crate) fn is_shared(&self) -> bool {
        Arc::strong_count(&self.0) > 1
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        match (n, self.as_constant()) {
            (0, _) => Self::one(),
            (1, _) => self.clone(),
            (_, Some(c)) => Self::constant(c.powi(n)),
            _ => Self::node(Node::Powi(self.clone(), n)),
        }
    }

    pub fn powf(&self, r: f64) -> Self {
        if r == r.trunc() && r.abs() <= i32::MAX as f64 {
            return self.powi(r as i32);
        }
        match self.as_constant() {
            Some(c) if c > 0.0 => Self::constant(c.powf(r)),
            _ => Self::node(Node::Powf(self.clone(), r)),
        }
    }

    pub fn apply(&self, f: UnaryFn) -> Self {
        match self.as_constant() {
            Some(c) if f != UnaryFn::Sqrt || c >= 0.0 => Self::constant(f.apply(c)),
            _ => Self::node(Node::Unary(f, self.clone())),
        }
    }

    pub fn sin(&self) -> Self {
        self.apply(UnaryFn::Sin)
    }
    pub fn cos(&self) -> Self {
        self.apply(UnaryFn::Cos)
    }
    pub fn exp(&self) -> Self {
        self.apply(UnaryFn::Exp)
    }
    pub fn sqrt(&self) -> Self {
        self.apply(UnaryFn::Sqrt)
    }
    pub fn bump(&self) -> Self {
        self.apply(UnaryFn::Bump)
    }
    pub fn radial_bump(&self) -> Self {
        self.apply(UnaryFn::RadialBump)
    }

    /// `atan2(self, x)` with `self` playing the role of `y`.
    pub fn atan2(&self, x: &ScalarField) -> Self {
        match (self.as_constant(), x.as_constant()) {
            (Some(a), Some(b)) => Self::constant(a.atan2(b)),
            _ => Self::node(Node::Atan2(self.clone(), x.clone())),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Deferred partial derivative `∂f/∂x^axis`.
    pub fn partial(&self, axis: usize) -> Self {
        assert!(axis < 4, "coordinate axis out of range");
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Var(v) => Self::constant(if *v == axis { 1.0 } else { 0.0 }),
            Node::Neg(a) => -a.partial(axis),
            Node::Add(a, b) => a.partial(axis) + b.partial(axis),
            Node::Sub(a, b) => a.partial(axis) - b.partial(axis),
            Node::Mul(a, b) if a.as_constant().is_some() => a * &b.partial(axis),
            Node::Mul(a, b) if b.as_constant().is_some() => &a.partial(axis) * b,
            Node::Div(a, b) if b.as_constant().is_some() => &a.partial(axis) / b,
            _ => Self::node(Node::Partial(self.clone(), axis)),
        }
    }

    /// Gradient `(∂_x f, ∂_y f, ∂_z f, ∂_ξ f)`.
    pub fn gradient(&self) -> [ScalarField; 4] {
        [self.partial(0), self.partial(1), self.partial(2), self.partial(3)]
    }

    /// Largest nesting depth of deferred partial derivatives.
    pub fn derivative_depth(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Unary(_, a) => a.derivative_depth(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Atan2(a, b) => {
                a.derivative_depth().max(b.derivative_depth())
            }
            Node::Partial(a, _) => 1 + a.derivative_depth(),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(value: f64) -> Self {
        ScalarField::constant(value)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => f.write_str(AXES[*v]),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Powi(a, n) => write!(f, "({a} ^ {n})"),
            Node::Powf(a, r) => write!(f, "({a} ^ {r})"),
            Node::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Node::Atan2(a, b) => write!(f, "atan2({a}, {b})"),
            Node::Partial(a, v) => write!(f, "d_{}[{a}]", AXES[*v]),
        }
    }
}

fn add(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => ScalarField::constant(x + y),
        (Some(0.0), _) => b.clone(),
        (_, Some(0.0)) => a.clone(),
        _ => ScalarField::node(Node::Add(a.clone(), b.clone())),
    }
}

fn sub(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => ScalarField::constant(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a.clone(),
        _ => ScalarField::node(Node::Sub(a.clone(), b.clone())),
    }
}

fn mul(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => ScalarField::constant(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => ScalarField::zero(),
        (Some(1.0), _) => b.clone(),
        (_, Some(1.0)) => a.clone(),
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => ScalarField::node(Node::Mul(a.clone(), b.clone())),
    }
}

fn div(a: &ScalarField, b: &ScalarField) -> ScalarField {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) if y != 0.0 => ScalarField::constant(x / y),
        (Some(0.0), _) => ScalarField::zero(),
        (_, Some(1.0)) => a.clone(),
        (_, Some(-1.0)) => neg(a),
        _ => ScalarField::node(Node::Div(a.clone(), b.clone())),
    }
}

fn neg(a: &ScalarField) -> ScalarField {
    match &*a.0 {
        Node::Const(c) => ScalarField::constant(-c),
        Node::Neg(inner) => inner.clone(),
        _ => ScalarField::node(Node::Neg(a.clone())),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $func:ident) => {
        impl $trait<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(self, rhs)
            }
        }
        impl $trait<ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(&self, &rhs)
            }
        }
        impl $trait<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(&self, rhs)
            }
        }
        impl $trait<ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(self, &rhs)
            }
        }
        impl $trait<f64> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: f64) -> ScalarField {
                $func(self, &ScalarField::constant(rhs))
            }
        }
        impl $trait<f64> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: f64) -> ScalarField {
                $func(&self, &ScalarField::constant(rhs))
            }
        }
        impl $trait<&ScalarField> for f64 {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $func(&ScalarField::constant(self), rhs)
            }
        }
        impl $trait<ScalarField> for f64 {
            type Output = ScalarField;
            fn $method(self, rhs: ScalarField) -> ScalarField {
                $func(&ScalarField::constant(self), &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        neg(&self)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_folding() {
        let x = ScalarField::x();
        assert!((&x * 0.0).is_zero());
        assert!(matches!((&x * 1.0).as_node(), Node::Var(0)));
        assert_eq!((ScalarField::constant(2.0) * 3.0).as_constant(), Some(6.0));
        assert!(matches!((-(-&x)).as_node(), Node::Var(0)));
    }

    #[test]
    fn partial_of_linear_combination_is_folded() {
        let f = 3.0 * ScalarField::x() + ScalarField::z();
        assert_eq!(f.partial(0).as_constant(), Some(3.0));
        assert_eq!(f.partial(2).as_constant(), Some(1.0));
        assert!(f.partial(3).is_zero());
    }

    #[test]
    fn bump_is_compact() {
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-2.0), 0.0);
        assert!((bump(0.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!((radial_bump(0.25) - bump(0.5)).abs() < 1e-16);
    }
}
