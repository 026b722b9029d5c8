//! A small expression language for scalar fields over `(x, y, z, xi)`.
//!
//! Expressions are parsed into an [`Expr`] tree and lowered to a
//! [`ScalarField`], so evaluation and differentiation reuse the jet engine.
//! See `docs/dsl.md` for the grammar.

mod ast;
mod lexer;
mod parser;

pub use ast::{BinOp, Expr, Func, NamedConst, VARIABLES};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

use thiserror::Error;

use crate::exterior::Point4;
use crate::field::ScalarField;
use crate::program::{DerivativeProvider, EvalError};

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("at offset {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("parse error {0}")]
    Parse(#[from] ParseError),
    #[error("unbound identifier `{0}`")]
    Unbound(&'static str),
    #[error("exponent must be a constant expression")]
    NonConstantExponent,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Bindings for the named constants (`pi` is always bound).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params {
    pub eps: Option<f64>,
    pub kappa: Option<f64>,
    pub l0: Option<f64>,
}

impl Params {
    pub fn new(eps: f64, kappa: f64, l0: f64) -> Self {
        Params { eps: Some(eps), kappa: Some(kappa), l0: Some(l0) }
    }

    pub fn value(&self, c: NamedConst) -> Result<f64, DslError> {
        let v = match c {
            NamedConst::Pi => Some(std::f64::consts::PI),
            NamedConst::Eps => self.eps,
            NamedConst::Kappa => self.kappa,
            NamedConst::L0 => self.l0,
            NamedConst::Lambda => self.l0.map(|l| 4.0 * l),
        };
        v.ok_or(DslError::Unbound(c.name()))
    }
}

/// Lowers an expression to a scalar field with the constants substituted.
pub fn to_field(expr: &Expr, params: &Params) -> Result<ScalarField, DslError> {
    Ok(match expr {
        Expr::Number(v) => ScalarField::constant(*v),
        Expr::Var(i) => ScalarField::coordinate(*i),
        Expr::Const(c) => ScalarField::constant(params.value(*c)?),
        Expr::Neg(a) => -to_field(a, params)?,
        Expr::Binary(op, a, b) => {
            let lhs = to_field(a, params)?;
            let rhs = to_field(b, params)?;
            match op {
                BinOp::Add => lhs + rhs,
                BinOp::Sub => lhs - rhs,
                BinOp::Mul => lhs * rhs,
                BinOp::Div => lhs / rhs,
                BinOp::Pow => lhs.powf(rhs.as_constant().ok_or(DslError::NonConstantExponent)?),
            }
        }
        Expr::Call(func, args) => {
            let a = to_field(&args[0], params)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Sqrt => a.sqrt(),
                Func::Bump => a.bump(),
                Func::Atan2 => a.atan2(&to_field(&args[1], params)?),
            }
        }
    })
}

/// Parses and lowers in one step.
pub fn parse_field(text: &str, params: &Params) -> Result<ScalarField, DslError> {
    to_field(&parse(text)?, params)
}

pub fn evaluate(expr: &Expr, point: Point4, params: &Params) -> Result<f64, DslError> {
    Ok(to_field(expr, params)?.eval(point, DerivativeProvider::Dual)?)
}

/// Exact forward-mode `∂expr/∂(var)` at `point`.
pub fn differentiate(expr: &Expr, var: usize, point: Point4, params: &Params) -> Result<f64, DslError> {
    Ok(to_field(expr, params)?.partial(var).eval(point, DerivativeProvider::Dual)?)
}
