//! Exact rational expression evaluation and string templating for scenario
//! files.
//!
//! Expressions know `+ - * / ^` (integer exponents), comparisons returning
//! 0/1, `max(..)`/`min(..)`, parentheses and named integer parameters.
//! Templates interpolate `{expr}` as a decimal integer and expand
//! `$sum(i=a..b; body)`, `$list(i=a..b; body)` and `$ifelse(cond; a; b)`.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::CliError;

pub type Env = BTreeMap<String, BigRational>;

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Expr(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
}

fn lex(src: &str) -> Result<Vec<Tok>, CliError> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        match b[i] {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            b'-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            b'*' => {
                out.push(Tok::Star);
                i += 1;
            }
            b'/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            b'^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            b'(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            b')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            b',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            b'=' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Eq);
                    i += 2;
                } else {
                    return Err(err(format!("stray `=` in `{src}`")));
                }
            }
            b'!' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Ne);
                    i += 2;
                } else {
                    return Err(err(format!("stray `!` in `{src}`")));
                }
            }
            b'<' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Le);
                    i += 2;
                } else {
                    out.push(Tok::Lt);
                    i += 1;
                }
            }
            b'>' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push(Tok::Ge);
                    i += 2;
                } else {
                    out.push(Tok::Gt);
                    i += 1;
                }
            }
            b'0'..=b'9' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                out.push(Tok::Num(text.parse().map_err(|_| err("bad integer"))?));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            other => return Err(err(format!("unexpected `{}` in `{src}`", other as char))),
        }
    }
    Ok(out)
}

struct P<'a> {
    toks: Vec<Tok>,
    idx: usize,
    env: &'a Env,
}

impl<'a> P<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn cmp(&mut self) -> Result<BigRational, CliError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Eq) => Some(Tok::Eq),
            Some(Tok::Ne) => Some(Tok::Ne),
            Some(Tok::Le) => Some(Tok::Le),
            Some(Tok::Ge) => Some(Tok::Ge),
            Some(Tok::Lt) => Some(Tok::Lt),
            Some(Tok::Gt) => Some(Tok::Gt),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.sum()?;
            let holds = match op {
                Tok::Eq => lhs == rhs,
                Tok::Ne => lhs != rhs,
                Tok::Le => lhs <= rhs,
                Tok::Ge => lhs >= rhs,
                Tok::Lt => lhs < rhs,
                Tok::Gt => lhs > rhs,
                _ => unreachable!(),
            };
            return Ok(if holds { BigRational::one() } else { BigRational::zero() });
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<BigRational, CliError> {
        let mut acc = self.prod()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc += self.prod()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc -= self.prod()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn prod(&mut self) -> Result<BigRational, CliError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc *= self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(err("division by zero"));
                    }
                    acc /= d;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<BigRational, CliError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<BigRational, CliError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exp = self.unary()?;
            if !exp.denom().is_one() {
                return Err(err("exponent must be an integer"));
            }
            let e = exp.numer().to_i64().ok_or_else(|| err("exponent out of range"))?;
            if e.unsigned_abs() > 64 {
                return Err(err("exponent out of desk scale"));
            }
            let mut acc = BigRational::one();
            for _ in 0..e.unsigned_abs() {
                acc *= &base;
            }
            if e < 0 {
                if acc.is_zero() {
                    return Err(err("zero to a negative power"));
                }
                acc = acc.recip();
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<BigRational, CliError> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(BigRational::from(n)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) && (name == "max" || name == "min") {
                    self.bump();
                    let mut args = vec![self.cmp()?];
                    while matches!(self.peek(), Some(Tok::Comma)) {
                        self.bump();
                        args.push(self.cmp()?);
                    }
                    if !matches!(self.bump(), Some(Tok::RParen)) {
                        return Err(err(format!("unclosed call to {name}")));
                    }
                    let mut it = args.into_iter();
                    let first = it.next().unwrap();
                    Ok(it.fold(first, |a, b| {
                        if (name == "max") == (b > a) {
                            b
                        } else {
                            a
                        }
                    }))
                } else {
                    self.env
                        .get(&name)
                        .cloned()
                        .ok_or_else(|| err(format!("unknown parameter `{name}`")))
                }
            }
            Some(Tok::LParen) => {
                let v = self.cmp()?;
                if !matches!(self.bump(), Some(Tok::RParen)) {
                    return Err(err("unclosed parenthesis"));
                }
                Ok(v)
            }
            other => Err(err(format!("unexpected token {other:?}"))),
        }
    }
}

/// Evaluates an expression to an exact rational.
pub fn eval(src: &str, env: &Env) -> Result<BigRational, CliError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(err("empty expression"));
    }
    let mut p = P { toks, idx: 0, env };
    let v = p.cmp()?;
    if p.idx != p.toks.len() {
        return Err(err(format!("trailing input in `{src}`")));
    }
    Ok(v)
}

/// Evaluates an expression that must be an integer.
pub fn eval_int(src: &str, env: &Env) -> Result<i64, CliError> {
    let v = eval(src, env)?;
    if !v.denom().is_one() {
        return Err(err(format!("`{src}` is not an integer: {v}")));
    }
    v.numer().to_i64().ok_or_else(|| err(format!("`{src}` out of i64 range")))
}

/// Evaluates a condition: nonzero means true.
pub fn eval_truthy(src: &str, env: &Env) -> Result<bool, CliError> {
    Ok(!eval(src, env)?.is_zero())
}

fn find_balanced(s: &str, open_idx: usize) -> Result<usize, CliError> {
    let b = s.as_bytes();
    debug_assert_eq!(b[open_idx], b'(');
    let mut depth = 0usize;
    for (i, &c) in b.iter().enumerate().skip(open_idx) {
        match c {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(i);
                }
            }
            _ => {}
        }
    }
    Err(err(format!("unbalanced parentheses in template `{s}`")))
}

fn split_top_level(s: &str, sep: u8) -> Vec<&str> {
    let b = s.as_bytes();
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            c2 if c2 == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_range(spec: &str, env: &Env) -> Result<(String, i64, i64), CliError> {
    let (var, bounds) = spec
        .split_once('=')
        .ok_or_else(|| err(format!("range `{spec}` must look like i=a..b")))?;
    let (lo, hi) = bounds
        .split_once("..")
        .ok_or_else(|| err(format!("range `{spec}` must look like i=a..b")))?;
    let var = var.trim().to_string();
    let lo = eval_int(&expand(lo.trim(), env)?, env)?;
    let hi = eval_int(&expand(hi.trim(), env)?, env)?;
    Ok((var, lo, hi))
}

/// Expands templating constructs in a scenario string.
pub fn expand(s: &str, env: &Env) -> Result<String, CliError> {
    let mut out = String::with_capacity(s.len());
    let b = s.as_bytes();
    let mut i = 0usize;
    while i < b.len() {
        if b[i] == b'$' {
            let rest = &s[i..];
            let (macro_name, inner, consumed) = if rest.starts_with("$sum(") {
                let open = i + 4;
                let close = find_balanced(s, open)?;
                ("sum", &s[open + 1..close], close + 1 - i)
            } else if rest.starts_with("$list(") {
                let open = i + 5;
                let close = find_balanced(s, open)?;
                ("list", &s[open + 1..close], close + 1 - i)
            } else if rest.starts_with("$ifelse(") {
                let open = i + 7;
                let close = find_balanced(s, open)?;
                ("ifelse", &s[open + 1..close], close + 1 - i)
            } else {
                return Err(err(format!("unknown template macro near `{rest}`")));
            };
            match macro_name {
                "sum" => {
                    let parts = split_top_level(inner, b';');
                    if parts.len() != 2 {
                        return Err(err("$sum takes (range; body)"));
                    }
                    let (var, lo, hi) = parse_range(parts[0].trim(), env)?;
                    let mut pieces = Vec::new();
                    for k in lo..=hi {
                        let mut env2 = env.clone();
                        env2.insert(var.clone(), rat_int(k));
                        pieces.push(expand(parts[1].trim(), &env2)?);
                    }
                    if pieces.is_empty() {
                        out.push('0');
                    } else {
                        out.push('(');
                        out.push_str(&pieces.join(" + "));
                        out.push(')');
                    }
                }
                "list" => {
                    return Err(err("$list is only valid as a whole expected value"));
                }
                "ifelse" => {
                    let parts = split_top_level(inner, b';');
                    if parts.len() != 3 {
                        return Err(err("$ifelse takes (cond; then; else)"));
                    }
                    let cond = expand(parts[0].trim(), env)?;
                    let branch = if eval_truthy(&cond, env)? { parts[1] } else { parts[2] };
                    out.push_str(&expand(branch.trim(), env)?);
                }
                _ => unreachable!(),
            }
            i += consumed;
        } else if b[i] == b'{' {
            let close = s[i..]
                .find('}')
                .ok_or_else(|| err(format!("unclosed {{..}} in `{s}`")))?;
            let inner = &s[i + 1..i + close];
            let v = eval_int(&expand(inner, env)?, env)?;
            out.push_str(&v.to_string());
            i += close + 1;
        } else {
            out.push(b[i] as char);
            i += 1;
        }
    }
    Ok(out)
}

/// Expands a `$list(i=a..b; body)` expected value into its elements, or
/// returns `None` when the string is not a list template. The loop variable
/// is visible to `{..}` interpolations in the body. A literal form
/// `[a, b, c]` is also accepted.
pub fn expand_list(s: &str, env: &Env) -> Result<Option<Vec<String>>, CliError> {
    let t = s.trim();
    if let Some(body) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let items = split_top_level(body, b',')
            .into_iter()
            .map(|e| expand(e.trim(), env))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Some(items));
    }
    let Some(rest) = t.strip_prefix("$list") else {
        return Ok(None);
    };
    let rest = rest.trim_start();
    if !rest.starts_with('(') || !t.ends_with(')') {
        return Err(err("$list must be followed by (..)"));
    }
    let open = t.len() - rest.len();
    let close = find_balanced(t, open)?;
    if close != t.len() - 1 {
        return Err(err("$list must span the whole expected value"));
    }
    let inner = &t[open + 1..close];
    let parts = split_top_level(inner, b';');
    if parts.len() != 2 {
        return Err(err("$list takes (range; body)"));
    }
    let (var, lo, hi) = parse_range(parts[0].trim(), env)?;
    let mut items = Vec::new();
    for k in lo..=hi {
        let mut env2 = env.clone();
        env2.insert(var.clone(), rat_int(k));
        items.push(expand(parts[1].trim(), &env2)?);
    }
    Ok(Some(items))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs.iter().map(|(k, v)| (k.to_string(), rat_int(*v))).collect()
    }

    #[test]
    fn arithmetic() {
        let e = env(&[("n", 4), ("p", 3)]);
        assert_eq!(eval("n - p", &e).unwrap(), rat_int(1));
        assert_eq!(eval("n - 3 + 2/p", &e).unwrap(), BigRational::new(5.into(), 3.into()));
        assert_eq!(eval("(n-1)*(p-1)", &e).unwrap(), rat_int(6));
        assert_eq!(eval("2^(2*p)", &e).unwrap(), rat_int(64));
        assert_eq!(eval("max(p, 4)", &e).unwrap(), rat_int(4));
        assert_eq!(eval("min(p, 4)", &e).unwrap(), rat_int(3));
        assert_eq!(eval("n <= p - 2", &e).unwrap(), rat_int(0));
        assert_eq!(eval("n == p + 1", &e).unwrap(), rat_int(1));
        assert!(eval("q + 1", &e).is_err());
    }

    #[test]
    fn interpolation_and_sum() {
        let e = env(&[("n", 3), ("m", 1)]);
        assert_eq!(expand("x{n}", &e).unwrap(), "x3");
        assert_eq!(expand("s^{m-1}", &e).unwrap(), "s^0");
        assert_eq!(
            expand("$sum(i=2..n; (u{i}^2 - u{i}) d[u{i}])", &e).unwrap(),
            "((u2^2 - u2) d[u2] + (u3^2 - u3) d[u3])"
        );
        assert_eq!(expand("$sum(i=2..1; u{i})", &e).unwrap(), "0");
        assert_eq!(expand("1 + $sum(i=1..2; {i})", &e).unwrap(), "1 + (1 + 2)");
    }

    #[test]
    fn ifelse_and_lists() {
        let e = env(&[("n", 5), ("p", 5)]);
        assert_eq!(
            expand("$ifelse(n==p; canonical; other)", &e).unwrap(),
            "canonical"
        );
        assert_eq!(
            expand("$ifelse(n<=p-2; not_lc; $ifelse(n==p-1; lc; rest))", &e).unwrap(),
            "rest"
        );
        let items = expand_list("$list(j=1..3; {j*(n-p+1)-1})", &e).unwrap().unwrap();
        assert_eq!(items, vec!["0", "1", "2"]);
        assert_eq!(expand_list("plain", &e).unwrap(), None);
    }
}
