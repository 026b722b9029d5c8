//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := primary ('^' factor)?
//! primary := number | variable | constant | func '(' args ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-x^2 = -(x^2)` and `2^-1 = 0.5`.

use super::ast::{BinOp, Expr, Func, NamedConst, VARIABLES};
use super::lexer::{tokenize, Token, TokenKind};
use super::ParseError;

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.expr()?;
    match p.peek().kind {
        TokenKind::End => Ok(expr),
        TokenKind::RParen => Err(p.error("operator or end of input (unbalanced `)`)")),
        _ => Err(p.error("operator or end of input")),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError { offset: t.offset, expected: expected.to_string(), found: t.kind.describe() }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<(), ParseError> {
        if self.peek().kind == kind {
            self.advance();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek().kind == TokenKind::Caret {
            self.advance();
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let token = self.peek().clone();
        match token.kind {
            TokenKind::Number(v) => {
                self.advance();
                Ok(Expr::Number(v))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(ref name) => {
                self.advance();
                if let Some(func) = Func::ALL.iter().copied().find(|f| f.name() == name) {
                    return self.call(func, &token);
                }
                if self.peek().kind == TokenKind::LParen {
                    return Err(ParseError {
                        offset: token.offset,
                        expected: "function name (sin, cos, exp, sqrt, atan2, bump)".into(),
                        found: format!("unknown function `{name}`"),
                    });
                }
                if let Some(i) = VARIABLES.iter().position(|v| v == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some(c) = NamedConst::ALL.iter().copied().find(|c| c.name() == name) {
                    return Ok(Expr::Const(c));
                }
                Err(ParseError {
                    offset: token.offset,
                    expected: "variable or constant".into(),
                    found: format!("unknown identifier `{name}`"),
                })
            }
            _ => Err(self.error("primary")),
        }
    }

    fn call(&mut self, func: Func, name: &Token) -> Result<Expr, ParseError> {
        self.expect(TokenKind::LParen, "`(` after function name")?;
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            args.push(self.expr()?);
            while self.peek().kind == TokenKind::Comma {
                self.advance();
                args.push(self.expr()?);
            }
        }
        self.expect(TokenKind::RParen, "`,` or `)`")?;
        if args.len() != func.arity() {
            return Err(ParseError {
                offset: name.offset,
                expected: format!("{} argument(s) for {}", func.arity(), func.name()),
                found: format!("{} argument(s)", args.len()),
            });
        }
        Ok(Expr::Call(func, args))
    }
}
