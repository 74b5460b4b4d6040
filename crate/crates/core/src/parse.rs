//! Expression parser for polynomials and derivation literals.
//!
//! Grammar: integer literals, variables, products with `*` (juxtaposition is
//! not allowed), powers with `^` and a possibly negative integer exponent,
//! sums and differences, parentheses, insignificant whitespace. Derivation
//! literals additionally admit `d[var]` atoms, each term carrying exactly one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ring::{Ctx, Poly};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let start = self.pos;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((Tok::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((Tok::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((Tok::Star, start));
                    self.pos += 1;
                }
                b'^' => {
                    out.push((Tok::Caret, start));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Tok::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Tok::RParen, start));
                    self.pos += 1;
                }
                b'[' => {
                    out.push((Tok::LBracket, start));
                    self.pos += 1;
                }
                b']' => {
                    out.push((Tok::RBracket, start));
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    let mut end = self.pos;
                    while end < self.src.len() && self.src[end].is_ascii_digit() {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    let n: i64 = text.parse().map_err(|_| Error::Syntax {
                        pos: start,
                        msg: format!("integer literal `{text}` out of range"),
                    })?;
                    out.push((Tok::Int(n), start));
                    self.pos = end;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                    {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    out.push((Tok::Ident(text.to_string()), start));
                    self.pos = end;
                }
                other => {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("unexpected character `{}`", other as char),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// A parsed expression value: a polynomial part plus a map of `d[var]`
/// coefficients. Pure polynomials have an empty map; pure derivation
/// literals have a zero polynomial part.
#[derive(Debug, Clone)]
struct Value {
    poly: Poly,
    dparts: BTreeMap<usize, Poly>,
}

impl Value {
    fn from_poly(p: Poly) -> Self {
        Value { poly: p, dparts: BTreeMap::new() }
    }

    fn is_plain(&self) -> bool {
        self.dparts.is_empty()
    }
}

struct Parser {
    ctx: Ctx,
    toks: Vec<(Tok, usize)>,
    idx: usize,
    allow_reserved: bool,
    allow_deriv: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or_else(|| {
            self.toks.last().map(|(_, p)| p + 1).unwrap_or(0)
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            _ => Err(Error::Syntax { pos, msg: format!("expected {what}") }),
        }
    }

    fn parse_expr(&mut self) -> Result<Value> {
        let mut negate = false;
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            negate = true;
        } else if matches!(self.peek(), Some(Tok::Plus)) {
            self.bump();
        }
        let mut acc = self.parse_term()?;
        if negate {
            acc = self.negate(acc);
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    acc = self.add(acc, rhs);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.parse_term()?;
                    let rhs = self.negate(rhs);
                    acc = self.add(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn add(&self, mut a: Value, b: Value) -> Value {
        a.poly = a.poly.add(&b.poly);
        for (v, c) in b.dparts {
            let entry = a.dparts.entry(v).or_insert_with(|| Poly::zero(&self.ctx));
            *entry = entry.add(&c);
        }
        a.dparts.retain(|_, c| !c.is_zero());
        a
    }

    fn negate(&self, mut a: Value) -> Value {
        a.poly = a.poly.neg();
        for c in a.dparts.values_mut() {
            *c = c.neg();
        }
        a
    }

    /// True when the upcoming tokens start a `d[..]` atom.
    fn at_deriv_atom(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(name)) if name == "d")
            && matches!(self.toks.get(self.idx + 1).map(|(t, _)| t), Some(Tok::LBracket))
    }

    fn parse_term(&mut self) -> Result<Value> {
        let mut acc = self.parse_factor()?;
        loop {
            if matches!(self.peek(), Some(Tok::Star)) {
                let pos = self.pos();
                self.bump();
                let rhs = self.parse_factor()?;
                acc = self.mul(acc, rhs, pos)?;
            } else if self.allow_deriv && self.at_deriv_atom() {
                // derivation literals write `<poly> d[<var>]` with plain
                // adjacency; this is the only juxtaposition admitted
                let pos = self.pos();
                let rhs = self.parse_factor()?;
                acc = self.mul(acc, rhs, pos)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn mul(&self, a: Value, b: Value, pos: usize) -> Result<Value> {
        match (a.is_plain(), b.is_plain()) {
            (true, true) => Ok(Value::from_poly(a.poly.mul(&b.poly))),
            (true, false) => {
                let dparts = b
                    .dparts
                    .into_iter()
                    .map(|(v, c)| (v, a.poly.mul(&c)))
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
                Ok(Value { poly: a.poly.mul(&b.poly), dparts })
            }
            (false, true) => self.mul(b, a, pos),
            (false, false) => Err(Error::Syntax {
                pos,
                msg: "a product may contain at most one d[..] factor".into(),
            }),
        }
    }

    fn parse_factor(&mut self) -> Result<Value> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            let pos = self.pos();
            self.bump();
            let mut sign = 1i64;
            if matches!(self.peek(), Some(Tok::Minus)) {
                self.bump();
                sign = -1;
            }
            let e = match self.bump() {
                Some(Tok::Int(n)) => sign * n,
                _ => {
                    return Err(Error::Syntax { pos, msg: "expected integer exponent after ^".into() })
                }
            };
            if !base.is_plain() {
                if e == 1 {
                    return Ok(base);
                }
                return Err(Error::Syntax {
                    pos,
                    msg: "d[..] atoms cannot be raised to a power".into(),
                });
            }
            let p = base.poly.pow_signed(e)?;
            return Ok(Value::from_poly(p));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Value> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Value::from_poly(Poly::constant(&self.ctx, n))),
            Some(Tok::Ident(name)) => {
                if name == "d" && matches!(self.peek(), Some(Tok::LBracket)) {
                    if !self.allow_deriv {
                        return Err(Error::Syntax {
                            pos,
                            msg: "d[..] is not allowed in a polynomial".into(),
                        });
                    }
                    self.bump();
                    let vpos = self.pos();
                    let var = match self.bump() {
                        Some(Tok::Ident(v)) => v,
                        _ => {
                            return Err(Error::Syntax {
                                pos: vpos,
                                msg: "expected variable name inside d[..]".into(),
                            })
                        }
                    };
                    self.expect(Tok::RBracket, "closing ] after d[var")?;
                    let idx = self.ctx.var_index(&var).ok_or(Error::UnknownVariable {
                        name: var.clone(),
                        pos: vpos,
                    })?;
                    let mut dparts = BTreeMap::new();
                    dparts.insert(idx, Poly::one(&self.ctx));
                    Ok(Value { poly: Poly::zero(&self.ctx), dparts })
                } else {
                    let idx = self.ctx.var_index(&name).ok_or(Error::UnknownVariable {
                        name: name.clone(),
                        pos,
                    })?;
                    if !self.allow_reserved && self.ctx.is_reserved(idx) {
                        return Err(Error::ReservedVariable { name, pos });
                    }
                    Ok(Value::from_poly(Poly::var(&self.ctx, idx)))
                }
            }
            Some(Tok::LParen) => {
                let v = self.parse_expr()?;
                self.expect(Tok::RParen, "closing parenthesis")?;
                Ok(v)
            }
            _ => Err(Error::Syntax { pos, msg: "expected a term".into() }),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.idx != self.toks.len() {
            return Err(Error::Syntax { pos: self.pos(), msg: "trailing input".into() });
        }
        Ok(())
    }
}

fn run(ctx: &Ctx, text: &str, allow_reserved: bool, allow_deriv: bool) -> Result<Value> {
    let toks = Lexer::new(text).tokens()?;
    if toks.is_empty() {
        return Err(Error::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut parser = Parser { ctx: ctx.clone(), toks, idx: 0, allow_reserved, allow_deriv };
    let v = parser.parse_expr()?;
    parser.finish()?;
    Ok(v)
}

/// Parses a polynomial. Reserved (opaque-direction) variables are rejected:
/// they may not appear in coefficients.
pub fn parse_poly(ctx: &Ctx, text: &str) -> Result<Poly> {
    run(ctx, text, false, false).map(|v| v.poly)
}

/// Parses a polynomial, admitting reserved variables. Used where a general
/// ring element is meant (chart images, lift targets), not a derivation
/// coefficient.
pub fn parse_poly_any(ctx: &Ctx, text: &str) -> Result<Poly> {
    run(ctx, text, true, false).map(|v| v.poly)
}

/// Parses a derivation literal, a sum of `<poly> d[<var>]` terms. Coefficients
/// may not mention reserved variables; `d[..]` may name one.
pub fn parse_derivation_coeffs(ctx: &Ctx, text: &str) -> Result<BTreeMap<usize, Poly>> {
    let v = run(ctx, text, false, true)?;
    if !v.poly.is_zero() {
        return Err(Error::Syntax {
            pos: 0,
            msg: format!("derivation literal has a stray polynomial part `{}`", v.poly),
        });
    }
    Ok(v.dparts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingCtx;

    #[test]
    fn poly_roundtrip_examples() {
        let ctx = RingCtx::new(3, &["x1", "x2"], &[]).unwrap();
        let f = parse_poly(&ctx, "x1^2 + 2").unwrap();
        assert_eq!(parse_poly(&ctx, &f.to_string()).unwrap(), f);
        assert!(parse_poly(&ctx, "3*x1").unwrap().is_zero());
        let g = parse_poly(&ctx, "x1^-1 * x2").unwrap();
        assert_eq!(g.to_string(), "x1^-1*x2");
    }

    #[test]
    fn rejects_unknown_and_reserved() {
        let ctx = RingCtx::new(3, &["x", "z"], &["z"]).unwrap();
        assert!(matches!(
            parse_poly(&ctx, "x + w"),
            Err(Error::UnknownVariable { .. })
        ));
        assert!(matches!(
            parse_poly(&ctx, "x*z"),
            Err(Error::ReservedVariable { .. })
        ));
        assert!(parse_poly_any(&ctx, "x*z").is_ok());
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let ctx = RingCtx::new(3, &["x"], &[]).unwrap();
        match parse_poly(&ctx, "x + ") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 3, "points just past the last token"),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse_poly(&ctx, "x x").is_err(), "juxtaposition is not a product");
        assert!(parse_poly(&ctx, "(x + 1").is_err());
    }

    #[test]
    fn derivation_literals() {
        let ctx = RingCtx::new(5, &["x1", "y", "z"], &["z"]).unwrap();
        let d = parse_derivation_coeffs(&ctx, "x1^2 d[x1] + (1 - y) d[y] - 2 d[z]").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d[&0], parse_poly(&ctx, "x1^2").unwrap());
        assert_eq!(d[&2], parse_poly(&ctx, "3").unwrap());
        // coefficient mentioning the reserved direction is rejected
        assert!(parse_derivation_coeffs(&ctx, "z d[x1]").is_err());
        // two d-atoms in one product are rejected
        assert!(parse_derivation_coeffs(&ctx, "d[x1]*d[y]").is_err());
        // stray polynomial part is rejected
        assert!(parse_derivation_coeffs(&ctx, "x1 + d[y]").is_err());
    }

    #[test]
    fn negative_power_of_sum_is_rejected() {
        let ctx = RingCtx::new(5, &["x", "y"], &[]).unwrap();
        assert!(matches!(
            parse_poly(&ctx, "(x + y)^-1"),
            Err(Error::NonInvertibleImage(_))
        ));
        assert!(parse_poly(&ctx, "(x*y)^-2").is_ok());
    }
}
