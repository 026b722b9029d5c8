//! Expression tree of the field DSL and its fully parenthesized printer.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Named constants; all but `pi` come from the active parameter bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    Eps,
    Kappa,
    L0,
    Lambda,
}

impl NamedConst {
    pub const ALL: [NamedConst; 5] =
        [NamedConst::Pi, NamedConst::Eps, NamedConst::Kappa, NamedConst::L0, NamedConst::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::Eps => "eps",
            NamedConst::Kappa => "kappa",
            NamedConst::L0 => "l0",
            NamedConst::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Atan2,
    Bump,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Atan2, Func::Bump];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
            Func::Bump => "bump",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

pub const VARIABLES: [&str; 4] = ["x", "y", "z", "xi"];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// Coordinate index into `(x, y, z, xi)`.
    Var(usize),
    Const(NamedConst),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{:?})", -v),
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::Var(i) => f.write_str(VARIABLES[*i]),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
