//! Angle expressions over `gamma`, `tau`, `pi` and free GA genes.
//!
//! The textual form is a closed arithmetic grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' number | '-' unary | atom
//! atom   := number | 'gamma' | 'tau' | 'pi' | 'g' digits
//!         | ('cos' | 'sin' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! A minus sign directly in front of a numeric literal is folded into the
//! literal, which keeps `parse(to_string(e)) == e` for every expression.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AngleExpr {
    Const(f64),
    Pi,
    Gamma,
    Tau,
    /// Free slot filled from a chromosome at evaluation time.
    Gene(usize),
    Neg(Box<AngleExpr>),
    Add(Box<AngleExpr>, Box<AngleExpr>),
    Sub(Box<AngleExpr>, Box<AngleExpr>),
    Mul(Box<AngleExpr>, Box<AngleExpr>),
    Div(Box<AngleExpr>, Box<AngleExpr>),
    Cos(Box<AngleExpr>),
    Sin(Box<AngleExpr>),
    Exp(Box<AngleExpr>),
}

/// Values bound to the free symbols of an expression.
#[derive(Debug, Clone, Copy)]
pub struct EvalCtx<'a> {
    pub gamma: f64,
    pub tau: f64,
    pub genes: &'a [f64],
}

impl<'a> EvalCtx<'a> {
    pub fn new(gamma: f64, tau: f64) -> Self {
        Self {
            gamma,
            tau,
            genes: &[],
        }
    }

    pub fn with_genes(gamma: f64, tau: f64, genes: &'a [f64]) -> Self {
        Self { gamma, tau, genes }
    }
}

impl AngleExpr {
    pub fn c(x: f64) -> Self {
        AngleExpr::Const(x)
    }

    pub fn cos(self) -> Self {
        AngleExpr::Cos(Box::new(self))
    }

    pub fn sin(self) -> Self {
        AngleExpr::Sin(Box::new(self))
    }

    pub fn exp(self) -> Self {
        AngleExpr::Exp(Box::new(self))
    }

    /// `pi * num / den`
    pub fn pi_frac(num: f64, den: f64) -> Self {
        if num == 1.0 && den == 1.0 {
            AngleExpr::Pi
        } else if den == 1.0 {
            AngleExpr::c(num) * AngleExpr::Pi
        } else if num == 1.0 {
            AngleExpr::Pi / AngleExpr::c(den)
        } else {
            AngleExpr::c(num) * AngleExpr::Pi / AngleExpr::c(den)
        }
    }

    /// a + b·cos(cγ) + d·sin(cγ)
    pub fn trig_gamma(a: f64, b: f64, c: f64, d: f64) -> Self {
        let arg = || AngleExpr::c(c) * AngleExpr::Gamma;
        AngleExpr::c(a) + AngleExpr::c(b) * arg().cos() + AngleExpr::c(d) * arg().sin()
    }

    /// a·e^{bγ} + c·e^{dγ}
    pub fn exp2(a: f64, b: f64, c: f64, d: f64) -> Self {
        AngleExpr::c(a) * (AngleExpr::c(b) * AngleExpr::Gamma).exp()
            + AngleExpr::c(c) * (AngleExpr::c(d) * AngleExpr::Gamma).exp()
    }

    /// c3γ³ + c2γ² + c1γ + c0 in Horner form.
    pub fn cubic(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        let g = || AngleExpr::Gamma;
        ((AngleExpr::c(c3) * g() + AngleExpr::c(c2)) * g() + AngleExpr::c(c1)) * g() + AngleExpr::c(c0)
    }

    /// `slope · tau`
    pub fn linear_tau(slope: AngleExpr) -> Self {
        slope * AngleExpr::Tau
    }

    pub fn eval(&self, ctx: &EvalCtx) -> f64 {
        use AngleExpr::*;
        match self {
            Const(x) => *x,
            Pi => std::f64::consts::PI,
            Gamma => ctx.gamma,
            Tau => ctx.tau,
            Gene(i) => ctx.genes.get(*i).copied().unwrap_or(f64::NAN),
            Neg(a) => -a.eval(ctx),
            Add(a, b) => a.eval(ctx) + b.eval(ctx),
            Sub(a, b) => a.eval(ctx) - b.eval(ctx),
            Mul(a, b) => a.eval(ctx) * b.eval(ctx),
            Div(a, b) => a.eval(ctx) / b.eval(ctx),
            Cos(a) => a.eval(ctx).cos(),
            Sin(a) => a.eval(ctx).sin(),
            Exp(a) => a.eval(ctx).exp(),
        }
    }

    /// Evaluate and reject non-finite results.
    pub fn try_eval(&self, ctx: &EvalCtx) -> Result<f64> {
        let v = self.eval(ctx);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvalError(format!(
                "{self} at gamma={}, tau={}",
                ctx.gamma, ctx.tau
            )))
        }
    }

    /// Replace `gamma`/`tau` leaves by literals; genes are kept.
    pub fn substitute(&self, gamma: f64, tau: f64) -> Self {
        self.map_leaves(&|leaf| match leaf {
            AngleExpr::Gamma => Some(AngleExpr::Const(gamma)),
            AngleExpr::Tau => Some(AngleExpr::Const(tau)),
            _ => None,
        })
    }

    /// Replace gene slots by the given expressions.
    pub fn fill_genes(&self, slots: &[AngleExpr]) -> Self {
        self.map_leaves(&|leaf| match leaf {
            AngleExpr::Gene(i) => slots.get(*i).cloned(),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&AngleExpr) -> Option<AngleExpr>) -> Self {
        use AngleExpr::*;
        let b = |e: &AngleExpr| Box::new(e.map_leaves(f));
        match self {
            Neg(a) => Neg(b(a)),
            Add(x, y) => Add(b(x), b(y)),
            Sub(x, y) => Sub(b(x), b(y)),
            Mul(x, y) => Mul(b(x), b(y)),
            Div(x, y) => Div(b(x), b(y)),
            Cos(a) => Cos(b(a)),
            Sin(a) => Sin(b(a)),
            Exp(a) => Exp(b(a)),
            leaf => f(leaf).unwrap_or_else(|| leaf.clone()),
        }
    }

    /// Highest gene index referenced, if any.
    pub fn max_gene(&self) -> Option<usize> {
        use AngleExpr::*;
        match self {
            Gene(i) => Some(*i),
            Neg(a) | Cos(a) | Sin(a) | Exp(a) => a.max_gene(),
            Add(x, y) | Sub(x, y) | Mul(x, y) | Div(x, y) => x.max_gene().max(y.max_gene()),
            _ => None,
        }
    }

    pub fn parse(src: &str) -> std::result::Result<Self, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn precedence(&self) -> u8 {
        use AngleExpr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Const(x) if x.is_sign_negative() => 3,
            _ => 4,
        }
    }
}

macro_rules! bin_op {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl $tr for AngleExpr {
            type Output = AngleExpr;
            fn $method(self, rhs: AngleExpr) -> AngleExpr {
                AngleExpr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

bin_op!(Add, add, Add);
bin_op!(Sub, sub, Sub);
bin_op!(Mul, mul, Mul);
bin_op!(Div, div, Div);

impl Neg for AngleExpr {
    type Output = AngleExpr;
    fn neg(self) -> AngleExpr {
        AngleExpr::Neg(Box::new(self))
    }
}

impl From<f64> for AngleExpr {
    fn from(x: f64) -> Self {
        AngleExpr::Const(x)
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AngleExpr::*;
        let wrap = |f: &mut fmt::Formatter<'_>, e: &AngleExpr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            // `{:?}` keeps a decimal point or exponent, so literals stay
            // distinguishable from gene names and round-trip exactly.
            Const(x) => write!(f, "{x:?}"),
            Pi => f.write_str("pi"),
            Gamma => f.write_str("gamma"),
            Tau => f.write_str("tau"),
            Gene(i) => write!(f, "g{i}"),
            Neg(a) => {
                f.write_str("-")?;
                // parenthesize literals so the sign is not folded on re-parse
                let paren = a.precedence() < 4 || matches!(**a, Const(_));
                wrap(f, a, paren)
            }
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
                let prec = self.precedence();
                let op = match self {
                    Add(..) => " + ",
                    Sub(..) => " - ",
                    Mul(..) => "*",
                    _ => "/",
                };
                wrap(f, a, a.precedence() < prec)?;
                f.write_str(op)?;
                wrap(f, b, b.precedence() <= prec)
            }
            Cos(a) => write!(f, "cos({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

struct Parser<'s> {
    src: &'s [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError::new(1, self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> std::result::Result<AngleExpr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<AngleExpr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> std::result::Result<AngleExpr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit() || *c == b'.') {
                return Ok(AngleExpr::Const(-self.number()?));
            }
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn number(&mut self) -> std::result::Result<f64, ParseError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        let v = text
            .parse::<f64>()
            .map_err(|_| ParseError::new(1, start + 1, format!("bad number '{text}'")))?;
        self.pos = i;
        Ok(v)
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice")
    }

    fn atom(&mut self) -> std::result::Result<AngleExpr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(AngleExpr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident().to_owned();
                let func = |p: &mut Self, wrap: fn(AngleExpr) -> AngleExpr| {
                    p.expect(b'(')?;
                    let e = p.expr()?;
                    p.expect(b')')?;
                    Ok(wrap(e))
                };
                match name.as_str() {
                    "gamma" => Ok(AngleExpr::Gamma),
                    "tau" => Ok(AngleExpr::Tau),
                    "pi" => Ok(AngleExpr::Pi),
                    "cos" => func(self, AngleExpr::cos),
                    "sin" => func(self, AngleExpr::sin),
                    "exp" => func(self, AngleExpr::exp),
                    g if g.len() > 1 && g.starts_with('g') && g[1..].bytes().all(|b| b.is_ascii_digit()) => g
                        [1..]
                        .parse()
                        .map(AngleExpr::Gene)
                        .map_err(|_| ParseError::new(1, start + 1, "bad gene index")),
                    other => Err(ParseError::new(
                        1,
                        start + 1,
                        format!("unknown identifier '{other}'"),
                    )),
                }
            }
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(src: &str, g: f64, t: f64) -> f64 {
        AngleExpr::parse(src).unwrap().eval(&EvalCtx::new(g, t))
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2*3", 0.0, 0.0), 7.0);
        assert_eq!(ev("(1 + 2)*3", 0.0, 0.0), 9.0);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("-gamma*tau", 2.0, 3.0), -6.0);
        assert_eq!(ev("2*-3", 0.0, 0.0), -6.0);
        assert!((ev("pi/2", 0.0, 0.0) - PI / 2.0).abs() < 1e-15);
        assert!((ev("exp(-0.8731*gamma)", 1.0, 0.0) - (-0.8731f64).exp()).abs() < 1e-15);
        assert!((ev("cos(gamma) + sin(tau)", 0.3, 0.4) - (0.3f64.cos() + 0.4f64.sin())).abs() < 1e-15);
        assert_eq!(ev("1.5e-3", 0.0, 0.0), 1.5e-3);
    }

    #[test]
    fn parse_errors_have_columns() {
        let e = AngleExpr::parse("1 + foo").unwrap_err();
        assert_eq!(e.column, 5);
        let e = AngleExpr::parse("cos(1").unwrap_err();
        assert!(e.message.contains("')'"));
        assert!(AngleExpr::parse("").is_err());
        assert!(AngleExpr::parse("1 2").is_err());
        assert!(AngleExpr::parse("1 $ 2").is_err());
    }

    #[test]
    fn try_eval_rejects_non_finite() {
        let e = AngleExpr::parse("1/(gamma - gamma)").unwrap();
        assert!(matches!(
            e.try_eval(&EvalCtx::new(1.0, 0.0)),
            Err(Error::EvalError(_))
        ));
        assert!(AngleExpr::Gene(3).try_eval(&EvalCtx::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn forms_evaluate() {
        let t = AngleExpr::trig_gamma(0.8423, -0.3455, 1.117, 0.01806);
        let g: f64 = 0.0;
        assert!((t.eval(&EvalCtx::new(g, 0.0)) - 0.4968).abs() < 1e-12);
        let e = AngleExpr::exp2(1.345, -0.8731, 1.796, 0.0);
        assert!((e.eval(&EvalCtx::new(0.0, 0.0)) - (1.345 + 1.796)).abs() < 1e-12);
        let c = AngleExpr::cubic(1.0, 2.0, 3.0, 4.0);
        assert_eq!(c.eval(&EvalCtx::new(2.0, 0.0)), 8.0 + 8.0 + 6.0 + 4.0);
    }

    #[test]
    fn substitute_and_genes() {
        let e = AngleExpr::Gene(1) + AngleExpr::Gamma * AngleExpr::Tau;
        assert_eq!(e.max_gene(), Some(1));
        let s = e.substitute(2.0, 5.0);
        assert_eq!(s.eval(&EvalCtx::with_genes(0.0, 0.0, &[0.0, 1.0])), 11.0);
        let filled = e.fill_genes(&[AngleExpr::c(0.0), AngleExpr::Pi]);
        assert_eq!(filled.max_gene(), None);
        assert_eq!(AngleExpr::parse("g12").unwrap(), AngleExpr::Gene(12));
    }

    fn leaf() -> impl Strategy<Value = AngleExpr> {
        prop_oneof![
            (-1e3f64..1e3).prop_map(AngleExpr::Const),
            Just(AngleExpr::Const(-0.0)),
            Just(AngleExpr::Const(1e-300)),
            Just(AngleExpr::Pi),
            Just(AngleExpr::Gamma),
            Just(AngleExpr::Tau),
            (0usize..5).prop_map(AngleExpr::Gene),
        ]
    }

    fn expr() -> impl Strategy<Value = AngleExpr> {
        leaf().prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| -a),
                inner.clone().prop_map(AngleExpr::cos),
                inner.clone().prop_map(AngleExpr::sin),
                inner.clone().prop_map(AngleExpr::exp),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner).prop_map(|(a, b)| a / b),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(e in expr()) {
            let text = e.to_string();
            let back = AngleExpr::parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert_eq!(back, e);
        }
    }
}
