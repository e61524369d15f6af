//! Closed term algebra for coefficient entries.
//!
//! An entry is a finite sum of `c * basis(x)` where the basis is a power of
//! `x`, `cos(k*pi*x)`, `sin(k*pi*x)` or `exp(k*x)`. Entries are smooth on
//! `[0, 1]`, print back to the same grammar they are parsed from, and hash
//! and compare structurally.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// `x^k`; `k = 0` is the constant function.
    Power(u32),
    /// `cos(k*pi*x)`
    Cos(f64),
    /// `sin(k*pi*x)`
    Sin(f64),
    /// `exp(k*x)`
    Exp(f64),
}

impl Basis {
    pub fn eval<T: Scalar>(&self, x: T) -> T {
        match *self {
            Basis::Power(k) => x.powi(k as i32),
            Basis::Cos(k) => (T::lit(k) * T::PI() * x).cos(),
            Basis::Sin(k) => (T::lit(k) * T::PI() * x).sin(),
            Basis::Exp(k) => (T::lit(k) * x).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term<T> {
    pub coeff: T,
    pub basis: Basis,
}

/// Sum of terms; the empty sum is zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr<T> {
    terms: Vec<Term<T>>,
}

impl<T: Scalar> Expr<T> {
    pub fn new(terms: Vec<Term<T>>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![Term {
            coeff: c,
            basis: Basis::Power(0),
        }])
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// Appends a term and returns the expression, for builder-style use.
    pub fn plus(mut self, coeff: T, basis: Basis) -> Self {
        self.terms.push(Term { coeff, basis });
        self
    }

    pub fn eval(&self, x: T) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, t| acc + t.coeff * t.basis.eval(x))
    }

    /// Parses the fixed grammar, e.g. `-1 + 0.5*x`, `2*cos(3*pi*x) - x^2`,
    /// `exp(x)`.
    pub fn parse(input: &str) -> Result<Self> {
        let tokens = tokenize(input)?;
        let mut p = Parser {
            input,
            tokens,
            pos: 0,
        };
        let terms = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(Self::new(
            terms
                .into_iter()
                .map(|(c, basis)| Term {
                    coeff: T::lit(c),
                    basis,
                })
                .collect(),
        ))
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Basis::Power(0) => write!(f, "1"),
            Basis::Power(1) => write!(f, "x"),
            Basis::Power(k) => write!(f, "x^{k}"),
            Basis::Cos(k) => write!(f, "cos({}*pi*x)", fmt_num(k)),
            Basis::Sin(k) => write!(f, "sin({}*pi*x)", fmt_num(k)),
            Basis::Exp(k) => write!(f, "exp({}*x)", fmt_num(k)),
        }
    }
}

impl<T: Scalar> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let c = t.coeff.as_f64();
            let mag = c.abs();
            if i == 0 {
                if c.is_sign_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_sign_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match t.basis {
                Basis::Power(0) => write!(f, "{}", fmt_num(mag))?,
                b => write!(f, "{}*{}", fmt_num(mag), b)?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Tok>> {
    let err = |reason: String| Error::Parse {
        input: input.to_string(),
        reason,
    };
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part: e, optional sign, digits
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| err(format!("bad number '{s}'")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, reason: &str) -> Error {
        Error::Parse {
            input: self.input.to_string(),
            reason: format!("{reason} at token {}", self.pos),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(&format!("expected {t:?}")))
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == name => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("expected '{name}'"))),
        }
    }

    fn expr(&mut self) -> Result<Vec<(f64, Basis)>> {
        let mut terms = Vec::new();
        let mut sign = if self.eat(&Tok::Minus) {
            -1.0
        } else {
            self.eat(&Tok::Plus);
            1.0
        };
        loop {
            let (c, b) = self.term()?;
            terms.push((sign * c, b));
            if self.eat(&Tok::Plus) {
                sign = 1.0;
            } else if self.eat(&Tok::Minus) {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(f64, Basis)> {
        if let Some(Tok::Num(v)) = self.peek().cloned() {
            self.pos += 1;
            if self.eat(&Tok::Star) {
                let b = self.basis()?;
                return Ok((v, b));
            }
            return Ok((v, Basis::Power(0)));
        }
        Ok((1.0, self.basis()?))
    }

    /// Optional signed `k*` prefix inside a function argument.
    fn factor_prefix(&mut self) -> Result<f64> {
        let sign = if self.eat(&Tok::Minus) { -1.0 } else { 1.0 };
        if let Some(Tok::Num(v)) = self.peek().cloned() {
            self.pos += 1;
            self.expect(&Tok::Star)?;
            Ok(sign * v)
        } else {
            Ok(sign)
        }
    }

    fn basis(&mut self) -> Result<Basis> {
        let name = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return Err(self.err("expected a number or basis function")),
        };
        self.pos += 1;
        match name.as_str() {
            "x" => {
                if self.eat(&Tok::Caret) {
                    match self.peek().cloned() {
                        Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                            self.pos += 1;
                            Ok(Basis::Power(v as u32))
                        }
                        _ => Err(self.err("power must be a non-negative integer")),
                    }
                } else {
                    Ok(Basis::Power(1))
                }
            }
            "cos" | "sin" => {
                self.expect(&Tok::LParen)?;
                let k = self.factor_prefix()?;
                self.expect_ident("pi")?;
                self.expect(&Tok::Star)?;
                self.expect_ident("x")?;
                self.expect(&Tok::RParen)?;
                Ok(if name == "cos" {
                    Basis::Cos(k)
                } else {
                    Basis::Sin(k)
                })
            }
            "exp" => {
                self.expect(&Tok::LParen)?;
                let k = self.factor_prefix()?;
                self.expect_ident("x")?;
                self.expect(&Tok::RParen)?;
                Ok(Basis::Exp(k))
            }
            _ => Err(self.err(&format!("unknown basis '{name}'"))),
        }
    }
}
