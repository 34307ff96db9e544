//! Expression trees for user-defined manifold parametrizations.
//!
//! Scenario files describe a manifold as n formulas in the variables
//! `w1..wm`. Parsing them into a small expression tree keeps scenarios
//! declarative and portable, and symbolic differentiation gives analytic
//! partial derivatives without a host-language plugin API.
//!
//! Grammar (usual precedence, `^` binds tightest and takes a constant
//! exponent):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := atom ('^' signed-number)?
//! atom    := number | 'pi' | 'w'K | 'sin' '(' expr ')' | 'cos' '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use crate::{scalar, Error, Result, Scalar};

/// Parsed formula over the variables `w1..wm`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Variable w_{l+1} (0-based index).
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    /// Parse a formula with variables `w1..w{vars}`.
    pub fn parse(src: &str, vars: usize) -> Result<Self> {
        let mut p = Parser {
            src,
            chars: src.char_indices().peekable(),
            vars,
        };
        let e = p.expr()?;
        p.skip_ws();
        if let Some((pos, c)) = p.chars.peek().copied() {
            return Err(Error::Parse(format!(
                "unexpected `{c}` at byte {pos} of formula `{src}`"
            )));
        }
        Ok(e)
    }

    /// Evaluate at the point `omega` (length must cover every variable used).
    pub fn eval<T: Scalar>(&self, omega: &[T]) -> T {
        match self {
            Expr::Const(c) => scalar(*c),
            Expr::Var(l) => omega[*l],
            Expr::Add(a, b) => a.eval(omega) + b.eval(omega),
            Expr::Sub(a, b) => a.eval(omega) - b.eval(omega),
            Expr::Mul(a, b) => a.eval(omega) * b.eval(omega),
            Expr::Div(a, b) => a.eval(omega) / b.eval(omega),
            Expr::Neg(a) => -a.eval(omega),
            Expr::Pow(a, c) => a.eval(omega).powf(scalar(*c)),
            Expr::Sin(a) => a.eval(omega).sin(),
            Expr::Cos(a) => a.eval(omega).cos(),
        }
    }

    /// Symbolic partial derivative with respect to `w{l+1}`.
    pub fn diff(&self, l: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == l { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(l), b.diff(l)),
            Expr::Sub(a, b) => sub(a.diff(l), b.diff(l)),
            Expr::Mul(a, b) => add(
                mul(a.diff(l), (**b).clone()),
                mul((**a).clone(), b.diff(l)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                sub(
                    div(a.diff(l), (**b).clone()),
                    div(
                        mul((**a).clone(), b.diff(l)),
                        Expr::Pow(Box::new((**b).clone()), 2.0),
                    ),
                )
            }
            Expr::Neg(a) => neg(a.diff(l)),
            Expr::Pow(a, c) => {
                // (a^c)' = c a^(c-1) a'
                mul(
                    mul(Expr::Const(*c), Expr::Pow(a.clone(), c - 1.0)),
                    a.diff(l),
                )
            }
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.diff(l)),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.diff(l))),
        }
    }

    /// Highest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(l) => Some(*l),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) => a.max_var(),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }
}

// Constructors with light simplification so differentiated trees stay small.

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::Const(0.0);
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::Const(0.0);
    }
    if b.is_one() {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(l) => write!(f, "w{}", l + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, c) => write!(f, "({a} ^ {c})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    vars: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn eat(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.chars.next() {
            Some((_, c)) if c == want => Ok(()),
            Some((pos, c)) => Err(Error::Parse(format!(
                "expected `{want}` but found `{c}` at byte {pos} of formula `{}`",
                self.src
            ))),
            None => Err(Error::Parse(format!(
                "expected `{want}` but formula `{}` ended",
                self.src
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                Some((_, '+')) => {
                    self.chars.next();
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some((_, '-')) => {
                    self.chars.next();
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                Some((_, '*')) => {
                    self.chars.next();
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some((_, '/')) => {
                    self.chars.next();
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, '-'))) {
            self.chars.next();
            return Ok(neg(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, '^'))) {
            self.chars.next();
            self.skip_ws();
            let mut negate = false;
            if matches!(self.chars.peek(), Some((_, '-'))) {
                self.chars.next();
                negate = true;
            }
            let c = self.number()?;
            return Ok(Expr::Pow(Box::new(base), if negate { -c } else { c }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '(')) => {
                self.chars.next();
                let inner = self.expr()?;
                self.eat(')')?;
                Ok(inner)
            }
            Some((_, c)) if c.is_ascii_digit() || c == '.' => Ok(Expr::Const(self.number()?)),
            Some((pos, c)) if c.is_ascii_alphabetic() => {
                let word = self.ident();
                match word.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "sin" => {
                        self.eat('(')?;
                        let inner = self.expr()?;
                        self.eat(')')?;
                        Ok(Expr::Sin(Box::new(inner)))
                    }
                    "cos" => {
                        self.eat('(')?;
                        let inner = self.expr()?;
                        self.eat(')')?;
                        Ok(Expr::Cos(Box::new(inner)))
                    }
                    w if w.starts_with('w') && w.len() > 1 => {
                        let idx: usize = w[1..].parse().map_err(|_| {
                            Error::Parse(format!(
                                "bad variable `{w}` at byte {pos} of formula `{}`",
                                self.src
                            ))
                        })?;
                        if idx == 0 || idx > self.vars {
                            return Err(Error::Parse(format!(
                                "variable `{w}` out of range: formula has variables w1..w{}",
                                self.vars
                            )));
                        }
                        Ok(Expr::Var(idx - 1))
                    }
                    other => Err(Error::Parse(format!(
                        "unknown identifier `{other}` at byte {pos} of formula `{}`",
                        self.src
                    ))),
                }
            }
            Some((pos, c)) => Err(Error::Parse(format!(
                "unexpected `{c}` at byte {pos} of formula `{}`",
                self.src
            ))),
            None => Err(Error::Parse(format!(
                "formula `{}` ended unexpectedly",
                self.src
            ))),
        }
    }

    fn ident(&mut self) -> String {
        let mut out = String::new();
        while let Some((_, c)) = self.chars.peek().copied() {
            if c.is_ascii_alphanumeric() || c == '_' {
                out.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        out
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = match self.chars.peek() {
            Some((pos, _)) => *pos,
            None => {
                return Err(Error::Parse(format!(
                    "expected a number but formula `{}` ended",
                    self.src
                )))
            }
        };
        let mut end = start;
        let mut seen_exp = false;
        while let Some((pos, c)) = self.chars.peek().copied() {
            let take = c.is_ascii_digit()
                || c == '.'
                || c == 'e'
                || c == 'E'
                || ((c == '+' || c == '-') && seen_exp && {
                    // sign only directly after the exponent marker
                    let prev = self.src[..pos].chars().last();
                    matches!(prev, Some('e') | Some('E'))
                });
            if !take {
                break;
            }
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            end = pos + c.len_utf8();
            self.chars.next();
        }
        self.src[start..end].parse().map_err(|_| {
            Error::Parse(format!(
                "bad number `{}` at byte {start} of formula `{}`",
                &self.src[start..end],
                self.src
            ))
        })
    }
}
