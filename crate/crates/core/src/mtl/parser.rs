//! Text front-end for formulas.
//!
//! ```text
//! formula  := implies
//! implies  := or ( "->" implies )?
//! or       := and ( "|" and )*
//! and      := until ( "&" until )*
//! until    := unary ( "U" interval? unary )*
//! unary    := "!" unary | ("G" | "F") interval? unary | "(" formula ")" | cmp
//! cmp      := side ( ">" | ">=" | "<" | "<=" ) side
//! side     := affine arithmetic over signals and numbers, or abs(affine)
//! interval := "[" number "," ( number | "inf" ) "]"
//! ```
//!
//! Comparisons are normalized to `expr > 0` / `expr >= 0`. `abs(e) <= r`
//! becomes `e <= r & -e <= r` and `abs(e) > r` becomes `e > r | -e > r`,
//! whose robustness is exactly `r - |e|` and `|e| - r`.

use thiserror::Error;

use super::{Affine, Formula, Interval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown operator `{op}` at byte {pos}")]
    UnknownOperator { pos: usize, op: String },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::UnknownOperator { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Bar,
    Arrow,
    Gt,
    Ge,
    Lt,
    Le,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = text.get(i..i + 2).unwrap_or("");
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            '+' => (Tok::Plus, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '-' if two == "->" => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '&' if two == "&&" => (Tok::Amp, 2),
            '&' => (Tok::Amp, 1),
            '|' if two == "||" => (Tok::Bar, 2),
            '|' => (Tok::Bar, 1),
            '>' if two == ">=" => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            '<' if two == "<=" => (Tok::Le, 2),
            '<' if two == "<>" || two == "<-" => {
                return Err(ParseError::UnknownOperator { pos: i, op: two.into() })
            }
            '<' => (Tok::Lt, 1),
            '!' if two == "!=" => {
                return Err(ParseError::UnknownOperator { pos: i, op: two.into() })
            }
            '!' => (Tok::Bang, 1),
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let v: f64 = text[i..j].parse().map_err(|_| ParseError::Syntax {
                    pos: i,
                    message: format!("bad number `{}`", &text[i..j]),
                })?;
                (Tok::Num(v), j - i)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'.')
                {
                    j += 1;
                }
                (Tok::Ident(text[i..j].to_string()), j - i)
            }
            _ => {
                let op: String = text[i..].chars().next().map(String::from).unwrap_or_default();
                return Err(ParseError::UnknownOperator { pos: i, op });
            }
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

/// One side of a comparison.
enum Side {
    Plain(Affine),
    Abs(Affine),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;

fn is_temporal_keyword(name: &str) -> bool {
    matches!(name, "G" | "F" | "U")
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {:?}", self.peek()))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut f = self.until()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> PResult<Formula> {
        let mut f = self.unary()?;
        while matches!(self.peek(), Tok::Ident(s) if s == "U") {
            self.bump();
            let interval = self.opt_interval()?;
            f = Formula::until(interval, f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> PResult<Formula> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(name) if name == "G" || name == "F" => {
                self.bump();
                let interval = self.opt_interval()?;
                let body = self.unary()?;
                Ok(if name == "G" {
                    Formula::globally(interval, body)
                } else {
                    Formula::eventually(interval, body)
                })
            }
            Tok::Ident(name) if *self.peek_at(1) == Tok::LBracket => Err(ParseError::UnknownOperator {
                pos: self.pos(),
                op: name,
            }),
            Tok::LParen => {
                // `(` opens either a sub-formula or parenthesized arithmetic;
                // try the comparison reading first and fall back.
                let save = self.at;
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(cmp_err) => {
                        let cmp_at = self.at;
                        self.at = save;
                        self.bump();
                        match self.formula().and_then(|f| {
                            self.expect(Tok::RParen, "`)`")?;
                            Ok(f)
                        }) {
                            Ok(f) => Ok(f),
                            Err(e) => {
                                if self.at >= cmp_at {
                                    Err(e)
                                } else {
                                    Err(cmp_err)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    fn opt_interval(&mut self) -> PResult<Interval> {
        if *self.peek() != Tok::LBracket {
            return Ok(Interval::UNBOUNDED);
        }
        self.bump();
        let lo = self.bound()?;
        self.expect(Tok::Comma, "`,` in interval")?;
        let hi = self.bound()?;
        self.expect(Tok::RBracket, "`]` closing interval")?;
        match Interval::new(lo, hi) {
            Some(i) => Ok(i),
            None => self.err(format!("invalid interval [{lo}, {hi}]: need 0 <= a <= b")),
        }
    }

    fn bound(&mut self) -> PResult<f64> {
        match self.bump() {
            Tok::Num(v) => Ok(v),
            Tok::Ident(s) if s == "inf" => Ok(f64::INFINITY),
            other => {
                self.at -= usize::from(other != Tok::Eof);
                self.err(format!("expected interval bound, found {other:?}"))
            }
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.side()?;
        let (strict, greater) = match self.peek() {
            Tok::Gt => (true, true),
            Tok::Ge => (false, true),
            Tok::Lt => (true, false),
            Tok::Le => (false, false),
            other => return self.err(format!("expected comparison operator, found {other:?}")),
        };
        self.bump();
        let rhs = self.side()?;
        // Normalize to `big <rel> small` meaning big - small > 0.
        let (big, small) = if greater { (lhs, rhs) } else { (rhs, lhs) };
        let atom = |expr: Affine| Formula::Atom { expr, strict };
        match (big, small) {
            (Side::Plain(b), Side::Plain(s)) => Ok(atom(b.add(&s, -1.0))),
            // |e| > s  <=>  e - s > 0  |  -e - s > 0
            (Side::Abs(e), Side::Plain(s)) => Ok(Formula::or(
                atom(e.clone().add(&s, -1.0)),
                atom(e.scale(-1.0).add(&s, -1.0)),
            )),
            // b > |e>  <=>  b - e > 0  &  b + e > 0
            (Side::Plain(b), Side::Abs(e)) => Ok(Formula::and(
                atom(b.clone().add(&e, -1.0)),
                atom(b.add(&e, 1.0)),
            )),
            (Side::Abs(_), Side::Abs(_)) => self.err("abs() on both sides of a comparison"),
        }
    }

    fn side(&mut self) -> PResult<Side> {
        if matches!(self.peek(), Tok::Ident(s) if s == "abs") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let inner = self.arith()?;
            self.expect(Tok::RParen, "`)` closing abs")?;
            if matches!(
                self.peek(),
                Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash
            ) {
                return self.err("abs() must form a whole side of a comparison");
            }
            return Ok(Side::Abs(inner));
        }
        Ok(Side::Plain(self.arith()?))
    }

    fn arith(&mut self) -> PResult<Affine> {
        let mut acc = self.term()?;
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => return Ok(acc),
            };
            self.bump();
            let rhs = self.term()?;
            acc = acc.add(&rhs, sign);
        }
    }

    fn term(&mut self) -> PResult<Affine> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = if acc.is_constant() {
                        rhs.scale(acc.constant)
                    } else if rhs.is_constant() {
                        acc.scale(rhs.constant)
                    } else {
                        return self.err("product of two signals is not affine");
                    };
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.factor()?;
                    if !rhs.is_constant() || rhs.constant == 0.0 {
                        return self.err("division by a signal or by zero");
                    }
                    acc = acc.scale(1.0 / rhs.constant);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> PResult<Affine> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(self.factor()?.scale(-1.0))
            }
            Tok::Num(v) => {
                self.bump();
                Ok(Affine::constant(v))
            }
            Tok::Ident(name) if name == "abs" => self.err("abs() must form a whole side of a comparison"),
            Tok::Ident(name) if is_temporal_keyword(&name) => {
                self.err(format!("temporal operator `{name}` inside arithmetic"))
            }
            Tok::Ident(name) if name == "inf" => self.err("`inf` only allowed as an interval bound"),
            Tok::Ident(name) => {
                self.bump();
                Ok(Affine::signal(&name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.arith()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            other => self.err(format!("expected expression, found {other:?}")),
        }
    }
}

/// Parses formula text into an AST.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected trailing {:?}", p.peek()));
    }
    Ok(f)
}
