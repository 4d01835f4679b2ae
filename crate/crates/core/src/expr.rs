//! Closed-form expressions over `(x1, x2, p1, p2)`.
//!
//! Grammar (version 1):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' expr ')' | '(' expr ')' | '|x|' | '|p|'
//! ident   := x1 | x2 | p1 | p2 | pi
//! funcs   := exp | log | sqrt | abs | sin | cos
//! ```
//!
//! `|x|` and `|p|` are the Euclidean norms, so `|x|^2` is `x1^2 + x2^2`.
//! `^` is right associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`.

use std::fmt;

use thiserror::Error;

pub const GRAMMAR_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("expression error at column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X1,
    X2,
    P1,
    P2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    NormX,
    NormP,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression; keeps its source text for round-tripping configs.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        if let Some(tok) = parser.tokens.get(parser.pos) {
            return Err(ExprError {
                column: tok.column,
                message: format!("unexpected token {:?}", tok.kind),
            });
        }
        Ok(Expr {
            source: src.trim().to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with all four variables bound.
    pub fn eval(&self, x: [f64; 2], p: [f64; 2]) -> f64 {
        eval(&self.root, x, p)
    }

    pub fn eval_x(&self, x: [f64; 2]) -> f64 {
        self.eval(x, [0.0, 0.0])
    }

    pub fn uses(&self, var: Var) -> bool {
        uses(&self.root, var)
    }

    pub fn uses_gradient(&self) -> bool {
        self.uses(Var::P1) || self.uses(Var::P2)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn eval(node: &Node, x: [f64; 2], p: [f64; 2]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(Var::X1) => x[0],
        Node::Var(Var::X2) => x[1],
        Node::Var(Var::P1) => p[0],
        Node::Var(Var::P2) => p[1],
        Node::NormX => x[0].hypot(x[1]),
        Node::NormP => p[0].hypot(p[1]),
        Node::Neg(a) => -eval(a, x, p),
        Node::Add(a, b) => eval(a, x, p) + eval(b, x, p),
        Node::Sub(a, b) => eval(a, x, p) - eval(b, x, p),
        Node::Mul(a, b) => eval(a, x, p) * eval(b, x, p),
        Node::Div(a, b) => eval(a, x, p) / eval(b, x, p),
        Node::Pow(a, b) => {
            let base = eval(a, x, p);
            match b.as_ref() {
                // integer exponents keep exactness for polynomials
                Node::Num(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(*e as i32),
                _ => base.powf(eval(b, x, p)),
            }
        }
        Node::Call(f, a) => {
            let v = eval(a, x, p);
            match f {
                Func::Exp => v.exp(),
                Func::Log => v.ln(),
                Func::Sqrt => v.sqrt(),
                Func::Abs => v.abs(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
            }
        }
    }
}

fn uses(node: &Node, var: Var) -> bool {
    match node {
        Node::Var(v) => *v == var,
        Node::NormX => matches!(var, Var::X1 | Var::X2),
        Node::NormP => matches!(var, Var::P1 | Var::P2),
        Node::Num(_) => false,
        Node::Neg(a) | Node::Call(_, a) => uses(a, var),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, var) || uses(b, var)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    NormX,
    NormP,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    column: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(TokKind::Plus),
            '-' => Some(TokKind::Minus),
            '*' | '×' => Some(TokKind::Star),
            '/' | '÷' => Some(TokKind::Slash),
            '^' => Some(TokKind::Caret),
            '(' => Some(TokKind::LParen),
            ')' => Some(TokKind::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, column });
            i += 1;
            continue;
        }
        if c == '|' {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let kind = match rest.as_str() {
                "|x|" => TokKind::NormX,
                "|p|" => TokKind::NormP,
                _ => {
                    return Err(ExprError {
                        column,
                        message: "only |x| and |p| are supported; use abs(..)".into(),
                    })
                }
            };
            out.push(Token { kind, column });
            i += 3;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ExprError {
                column,
                message: format!("bad number {text:?}"),
            })?;
            out.push(Token {
                kind: TokKind::Num(v),
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        return Err(ExprError {
            column,
            message: format!("unexpected character {c:?}"),
        });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.column)
            .or_else(|| self.tokens.last().map(|t| t.column + 1))
            .unwrap_or(1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(TokKind::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokKind::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(TokKind::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(TokKind::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if let Some(TokKind::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(TokKind::Caret) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(kind) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match kind {
            TokKind::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            TokKind::NormX => {
                self.pos += 1;
                Ok(Node::NormX)
            }
            TokKind::NormP => {
                self.pos += 1;
                Ok(Node::NormP)
            }
            TokKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                self.pos += 1;
                let var = match name.as_str() {
                    "x1" => Some(Node::Var(Var::X1)),
                    "x2" => Some(Node::Var(Var::X2)),
                    "p1" => Some(Node::Var(Var::P1)),
                    "p2" => Some(Node::Var(Var::P2)),
                    "pi" => Some(Node::Num(std::f64::consts::PI)),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(v);
                }
                let func = match name.as_str() {
                    "exp" => Func::Exp,
                    "log" | "ln" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => {
                        self.pos -= 1;
                        return self.err(format!("unknown identifier {name:?}"));
                    }
                };
                if self.peek() != Some(&TokKind::LParen) {
                    return self.err(format!("expected '(' after {name}"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            other => self.err(format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.peek() == Some(&TokKind::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.err("expected ')'")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: [f64; 2]) -> f64 {
        Expr::parse(s).unwrap().eval_x(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", [0.0, 0.0]), 7.0);
        assert_eq!(ev("-2^2", [0.0, 0.0]), -4.0);
        assert_eq!(ev("2^3^2", [0.0, 0.0]), 512.0);
        assert_eq!(ev("(1 + 2) * 3", [0.0, 0.0]), 9.0);
        assert_eq!(ev("8 / 2 / 2", [0.0, 0.0]), 2.0);
    }

    #[test]
    fn norms_and_functions() {
        let x = [0.3, 0.4];
        assert!((ev("|x|^2", x) - 0.25).abs() < 1e-15);
        assert!((ev("|x|", x) - 0.5).abs() < 1e-15);
        assert!((ev("exp(|x|^2/2)", x) - (0.125f64).exp()).abs() < 1e-15);
        assert!((ev("sqrt(abs(-4))", x) - 2.0).abs() < 1e-15);
        assert!((ev("1e-3 * 2", x) - 2e-3).abs() < 1e-18);
    }

    #[test]
    fn gradient_variables() {
        let e = Expr::parse("1 + p1^2 + |p|").unwrap();
        assert!(e.uses_gradient());
        assert_eq!(e.eval([0.0, 0.0], [3.0, 4.0]), 1.0 + 9.0 + 5.0);
        assert!(!Expr::parse("x1 * x2").unwrap().uses_gradient());
    }

    #[test]
    fn errors_carry_columns() {
        let err = Expr::parse("1 + foo(2)").unwrap_err();
        assert_eq!(err.column, 5);
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("|y|").is_err());
    }
}
