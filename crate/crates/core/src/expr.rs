//! Arithmetic expressions over the problem symbols.
//!
//! Grammar (whitespace insensitive, `^` right associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := primary ('^' factor)?
//! primary := number | symbol | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! so `-t^2` is `-(t^2)` and `2^-1` is `0.5`. Symbols are `t`, `x`, `u`,
//! `alpha`, `d1`, `d2`, … and the constant `pi`; functions are `sin`, `cos`,
//! `exp`, `ln`, `sqrt`, `abs` and `gamma`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special;

/// A free symbol of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    T,
    X,
    U,
    Alpha,
    /// Value of the `k`-th lower-order Caputo derivative, 1-based.
    D(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::T => f.write_str("t"),
            Symbol::X => f.write_str("x"),
            Symbol::U => f.write_str("u"),
            Symbol::Alpha => f.write_str("alpha"),
            Symbol::D(k) => write!(f, "d{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Gamma,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "gamma" => Func::Gamma,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Gamma => "gamma",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Gamma => special::gamma(v),
        }
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

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    Var(Symbol),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Values bound to the symbols during evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub alpha: f64,
    pub d: &'a [f64],
}

impl<'a> Bindings<'a> {
    /// Only `t` bound; everything else zero.
    pub fn at(t: f64) -> Self {
        Bindings {
            t,
            ..Default::default()
        }
    }
}

impl Node {
    fn eval(&self, b: &Bindings<'_>) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Pi => std::f64::consts::PI,
            Node::Var(s) => match *s {
                Symbol::T => b.t,
                Symbol::X => b.x,
                Symbol::U => b.u,
                Symbol::Alpha => b.alpha,
                Symbol::D(k) => b.d.get(k - 1).copied().unwrap_or(f64::NAN),
            },
            Node::Neg(a) => -a.eval(b),
            Node::Bin(op, l, r) => {
                let (l, r) = (l.eval(b), r.eval(b));
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => pow(l, r),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(b)),
        }
    }

    fn collect(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Node::Num(_) | Node::Pi => {}
            Node::Var(s) => {
                out.insert(*s);
            }
            Node::Neg(a) | Node::Call(_, a) => a.collect(out),
            Node::Bin(_, l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    fn write_canonical(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Pi => f.write_str("pi"),
            Node::Var(s) => write!(f, "{s}"),
            Node::Neg(a) => {
                f.write_str("(-")?;
                a.write_canonical(f)?;
                f.write_str(")")
            }
            Node::Bin(op, l, r) => {
                f.write_str("(")?;
                l.write_canonical(f)?;
                write!(f, " {} ", op.symbol())?;
                r.write_canonical(f)?;
                f.write_str(")")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_canonical(f)?;
                f.write_str(")")
            }
        }
    }
}

/// Integer exponents go through `powi` so that e.g. `(-2)^3` stays real.
fn pow(base: f64, exp: f64) -> f64 {
    if exp == exp.trunc() && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// A parsed expression together with the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    source: String,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        p.skip_ws();
        if p.pos == src.len() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.error(format!("unexpected `{}`", p.peek_char().unwrap_or(' '))));
        }
        Ok(Self {
            root,
            source: src.trim().to_string(),
        })
    }

    /// A constant expression.
    pub fn constant(v: f64) -> Self {
        Self {
            root: Node::Num(v),
            source: format!("{v:?}"),
        }
    }

    pub fn eval(&self, b: &Bindings<'_>) -> f64 {
        self.root.eval(b)
    }

    /// Shorthand for expressions in `t` alone.
    pub fn eval_t(&self, t: f64) -> f64 {
        self.root.eval(&Bindings::at(t))
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.root.collect(&mut out);
        out
    }

    pub fn is_constant(&self) -> bool {
        self.symbols().is_empty()
    }

    /// Fails unless every free symbol satisfies `allowed`.
    pub fn check_symbols(&self, field: &str, allowed: impl Fn(Symbol) -> bool) -> Result<()> {
        match self.symbols().into_iter().find(|s| !allowed(*s)) {
            Some(s) => Err(Error::SymbolNotAllowed {
                symbol: s.to_string(),
                field: field.to_string(),
            }),
            None => Ok(()),
        }
    }

    /// The text the expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Fully parenthesized rendering that re-parses to the same tree.
    pub fn canonical(&self) -> String {
        struct Canon<'a>(&'a Node);
        impl fmt::Display for Canon<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_canonical(f)
            }
        }
        Canon(&self.root).to_string()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expression::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Next significant character; the Unicode minus sign counts as `-`.
    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_char()
            .map(|c| if c == '\u{2212}' { '-' } else { c })
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek_char() {
            self.pos += c.len_utf8();
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node> {
        if self.peek() == Some('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("expected an operand, found end of input")),
            Some('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            Some(c) => Err(self.error(format!("expected an operand, found `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(Node::Num(v))
            }
            _ => Err(self.error(format!("malformed number `{text}`"))),
        }
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;

        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some('(') {
                return Err(self.error(format!("function `{name}` requires `(`")));
            }
            self.bump();
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Node::Call(func, Box::new(arg)));
        }
        let sym = match name {
            "t" => Symbol::T,
            "x" => Symbol::X,
            "u" => Symbol::U,
            "alpha" => Symbol::Alpha,
            "pi" => return Ok(Node::Pi),
            _ => match name.strip_prefix('d').and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 && !name[1..].starts_with('0') => Symbol::D(k),
                _ => {
                    return Err(Error::UnknownSymbol {
                        symbol: name.to_string(),
                        offset: start,
                    })
                }
            },
        };
        Ok(Node::Var(sym))
    }
}
