//! Closed-form expression DSL used by config files to define exponents,
//! weights, symbols and test functions.
//!
//! Grammar (whitespace-insensitive, byte offsets reported on errors):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?            // right-associative
//! atom   := number | "e" | "pi" | var | func "(" expr ("," expr)* ")" | "(" expr ")"
//! var    := "x" digits                   // x1 .. xn, n = declared dimension
//! func   := "log" | "exp" | "abs" | "min" | "max" | "pow" | "sin" | "cos" | "floor"
//! number := digits ("." digits*)?        // no exponent suffix ("e" is the constant)
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`. All
//! arithmetic is IEEE double and evaluation is pure, so results are
//! bit-reproducible.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable index exceeds dimension: `x{index}` with dimension {dim}")]
    VarIndexExceedsDimension { index: usize, dim: usize },
    #[error("`{name}` expects {expected} argument(s), found {found} (offset {offset})")]
    Arity { name: String, expected: usize, found: usize, offset: usize },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {op}({arg}) is undefined")]
    Domain { op: &'static str, arg: f64 },
    #[error("point dimension {found} does not match expression dimension {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Exp,
    Abs,
    Min,
    Max,
    Pow,
    Sin,
    Cos,
    Floor,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Floor => "floor",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "log" => Func::Log,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "floor" => Func::Floor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    E,
    Pi,
    /// Zero-based variable index (`x1` is index 0).
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Immutable parsed expression over a declared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    dim: usize,
    root: Node,
}

impl Expression {
    pub fn parse(src: &str, dim: usize) -> Result<Expression, ExprError> {
        assert!(dim >= 1, "dimension must be positive");
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(ExprError::Empty);
        }
        let mut p = Parser { toks, pos: 0, dim, end: src.len() };
        let root = p.parse_expr()?;
        if p.pos < p.toks.len() {
            let t = &p.toks[p.pos];
            return Err(ExprError::Syntax {
                offset: t.off,
                message: format!("unexpected `{}`", t.tok.describe()),
            });
        }
        Ok(Expression { dim, root })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Evaluate at a point; `point.len()` must equal the declared dimension.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.dim {
            return Err(EvalError::Dimension { expected: self.dim, found: point.len() });
        }
        eval_node(&self.root, point)
    }
}

fn eval_node(node: &Node, point: &[f64]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::E => std::f64::consts::E,
        Node::Pi => std::f64::consts::PI,
        Node::Var(i) => point[*i],
        Node::Neg(inner) => -eval_node(inner, point)?,
        Node::Bin(op, l, r) => {
            let a = eval_node(l, point)?;
            let b = eval_node(r, point)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::Domain { op: "divide-by", arg: b });
                    }
                    a / b
                }
                BinOp::Pow => eval_pow(a, b)?,
            }
        }
        Node::Call(f, args) => {
            let a = eval_node(&args[0], point)?;
            match f {
                Func::Log => {
                    if a <= 0.0 {
                        return Err(EvalError::Domain { op: "log", arg: a });
                    }
                    a.ln()
                }
                Func::Exp => a.exp(),
                Func::Abs => a.abs(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Floor => a.floor(),
                Func::Min => a.min(eval_node(&args[1], point)?),
                Func::Max => a.max(eval_node(&args[1], point)?),
                Func::Pow => eval_pow(a, eval_node(&args[1], point)?)?,
            }
        }
    })
}

fn eval_pow(base: f64, exp: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exp < 0.0 {
        return Err(EvalError::Domain { op: "pow", arg: exp });
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(EvalError::Domain { op: "pow", arg: base });
    }
    Ok(base.powf(exp))
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
        }
    }
}

#[derive(Debug)]
struct SpTok {
    tok: Tok,
    off: usize,
}

fn lex(src: &str) -> Result<Vec<SpTok>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let off = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'+' => {
                out.push(SpTok { tok: Tok::Plus, off });
                i += 1;
            }
            b'-' => {
                out.push(SpTok { tok: Tok::Minus, off });
                i += 1;
            }
            b'*' => {
                out.push(SpTok { tok: Tok::Star, off });
                i += 1;
            }
            b'/' => {
                out.push(SpTok { tok: Tok::Slash, off });
                i += 1;
            }
            b'^' => {
                out.push(SpTok { tok: Tok::Caret, off });
                i += 1;
            }
            b'(' => {
                out.push(SpTok { tok: Tok::LParen, off });
                i += 1;
            }
            b')' => {
                out.push(SpTok { tok: Tok::RParen, off });
                i += 1;
            }
            b',' => {
                out.push(SpTok { tok: Tok::Comma, off });
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push(SpTok { tok: Tok::Num(v), off: start });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(SpTok { tok: Tok::Ident(src[start..i].to_string()), off: start });
            }
            other => {
                return Err(ExprError::Syntax {
                    offset: off,
                    message: format!("unexpected character `{}`", other as char),
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<SpTok>,
    pos: usize,
    dim: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.off).unwrap_or(self.end)
    }

    fn bump(&mut self) -> &SpTok {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    /// Parse an operand; if nothing was consumed, the error is attributed to
    /// the operator at `op_off`.
    fn operand<F>(&mut self, op_off: usize, f: F) -> Result<Node, ExprError>
    where
        F: FnOnce(&mut Self) -> Result<Node, ExprError>,
    {
        let before = self.pos;
        match f(self) {
            Err(ExprError::Syntax { .. }) if self.pos == before => Err(ExprError::Syntax {
                offset: op_off,
                message: "operator is missing its operand".into(),
            }),
            r => r,
        }
    }

    fn parse_expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.parse_term()?;
        loop {
            let (op, off) = match self.peek() {
                Some(Tok::Plus) => (BinOp::Add, self.offset()),
                Some(Tok::Minus) => (BinOp::Sub, self.offset()),
                _ => break,
            };
            self.bump();
            let rhs = self.operand(off, |p| p.parse_term())?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let (op, off) = match self.peek() {
                Some(Tok::Star) => (BinOp::Mul, self.offset()),
                Some(Tok::Slash) => (BinOp::Div, self.offset()),
                _ => break,
            };
            self.bump();
            let rhs = self.operand(off, |p| p.parse_unary())?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node, ExprError> {
        if let Some(Tok::Minus) = self.peek() {
            let off = self.offset();
            self.bump();
            let inner = self.operand(off, |p| p.parse_unary())?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node, ExprError> {
        let base = self.parse_atom()?;
        if let Some(Tok::Caret) = self.peek() {
            let off = self.offset();
            self.bump();
            // Right-associative; the exponent may carry a unary minus.
            let exp = self.operand(off, |p| p.parse_unary())?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Node, ExprError> {
        let off = self.offset();
        match self.peek() {
            Some(Tok::Num(_)) => {
                let v = match self.bump().tok {
                    Tok::Num(v) => v,
                    _ => unreachable!(),
                };
                Ok(Node::Num(v))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.parse_expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(ExprError::Syntax {
                        offset: self.offset(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some(Tok::Ident(_)) => {
                let name = match &self.bump().tok {
                    Tok::Ident(s) => s.clone(),
                    _ => unreachable!(),
                };
                self.parse_ident(name, off)
            }
            _ => Err(ExprError::Syntax { offset: off, message: "expected expression".into() }),
        }
    }

    fn parse_ident(&mut self, name: String, off: usize) -> Result<Node, ExprError> {
        if name == "e" {
            return Ok(Node::E);
        }
        if name == "pi" {
            return Ok(Node::Pi);
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = rest.parse().map_err(|_| ExprError::Syntax {
                    offset: off,
                    message: format!("malformed variable `{name}`"),
                })?;
                if index == 0 || index > self.dim {
                    return Err(ExprError::VarIndexExceedsDimension { index, dim: self.dim });
                }
                return Ok(Node::Var(index - 1));
            }
        }
        if let Some(func) = Func::from_name(&name) {
            match self.peek() {
                Some(Tok::LParen) => {
                    self.bump();
                }
                _ => {
                    return Err(ExprError::Syntax {
                        offset: self.offset(),
                        message: format!("expected `(` after `{name}`"),
                    })
                }
            }
            let mut args = vec![self.parse_expr()?];
            while let Some(Tok::Comma) = self.peek() {
                self.bump();
                args.push(self.parse_expr()?);
            }
            match self.peek() {
                Some(Tok::RParen) => {
                    self.bump();
                }
                _ => {
                    return Err(ExprError::Syntax {
                        offset: self.offset(),
                        message: "expected `)`".into(),
                    })
                }
            }
            if args.len() != func.arity() {
                return Err(ExprError::Arity {
                    name: name.clone(),
                    expected: func.arity(),
                    found: args.len(),
                    offset: off,
                });
            }
            return Ok(Node::Call(func, args));
        }
        Err(ExprError::UnknownIdentifier { name, offset: off })
    }
}

// ---------------------------------------------------------------------------
// Printer

// Precedence levels: add/sub 1, mul/div 2, unary 3, pow 4, atoms 5.
fn prec(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add, ..) | Node::Bin(BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul, ..) | Node::Bin(BinOp::Div, ..) => 2,
        Node::Neg(..) => 3,
        Node::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn fmt_node(node: &Node, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(node);
    let parens = p < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match node {
        Node::Num(v) => write!(f, "{v}")?,
        Node::E => write!(f, "e")?,
        Node::Pi => write!(f, "pi")?,
        Node::Var(i) => write!(f, "x{}", i + 1)?,
        Node::Neg(inner) => {
            write!(f, "-")?;
            fmt_node(inner, 3, f)?;
        }
        Node::Bin(op, l, r) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => (" + ", 1, 2),
                BinOp::Sub => (" - ", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                // Right-associative; the printed exponent may be a unary.
                BinOp::Pow => ("^", 5, 3),
            };
            fmt_node(l, lp, f)?;
            write!(f, "{sym}")?;
            fmt_node(r, rp, f)?;
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_node(a, 0, f)?;
            }
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, 0, f)
    }
}
