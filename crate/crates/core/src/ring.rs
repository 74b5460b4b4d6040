//! Sparse Laurent multivariate polynomials over a prime field.
//!
//! A [`RingCtx`] fixes the characteristic and an ordered list of variable
//! names; polynomials are finite maps from exponent vectors (negative
//! exponents allowed) to nonzero residues mod p. Terms are kept in graded
//! lexicographic order with respect to the declared variable order, which
//! makes printing and all downstream reports deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fp;

/// Shared ring context handle.
pub type Ctx = Arc<RingCtx>;

/// Characteristic and variable declarations of a Laurent polynomial ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingCtx {
    p: u64,
    vars: Vec<String>,
    reserved: BTreeSet<usize>,
}

fn valid_var_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl RingCtx {
    /// Builds a ring context. `reserved` names the opaque directions: those
    /// variables may carry a `d[..]` component but may not appear in any
    /// derivation coefficient, and the default parser rejects them.
    pub fn new<S: AsRef<str>>(p: u64, vars: &[S], reserved: &[S]) -> Result<Ctx> {
        if !fp::is_prime(p) {
            return Err(Error::InvalidRing(format!("characteristic {p} is not prime")));
        }
        let mut names = Vec::with_capacity(vars.len());
        let mut seen = BTreeSet::new();
        for v in vars {
            let v = v.as_ref();
            if !valid_var_name(v) {
                return Err(Error::InvalidRing(format!("invalid variable name `{v}`")));
            }
            if !seen.insert(v.to_string()) {
                return Err(Error::InvalidRing(format!("duplicate variable `{v}`")));
            }
            names.push(v.to_string());
        }
        let mut res = BTreeSet::new();
        for r in reserved {
            let r = r.as_ref();
            match names.iter().position(|n| n == r) {
                Some(i) => {
                    res.insert(i);
                }
                None => {
                    return Err(Error::InvalidRing(format!(
                        "reserved variable `{r}` is not declared"
                    )))
                }
            }
        }
        Ok(Arc::new(RingCtx { p, vars: names, reserved: res }))
    }

    pub fn char_p(&self) -> u64 {
        self.p
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn var_name(&self, i: usize) -> &str {
        &self.vars[i]
    }

    pub fn is_reserved(&self, i: usize) -> bool {
        self.reserved.contains(&i)
    }

    pub fn reserved_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.reserved.iter().copied()
    }
}

impl fmt::Display for RingCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}[{}]", self.p, self.vars.join(", "))
    }
}

pub(crate) fn same_ctx(a: &Ctx, b: &Ctx) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Exponent vector of a Laurent monomial, aligned with the ring variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<i64>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn pow(&self, e: i64) -> Monomial {
        Monomial(self.0.iter().map(|a| a * e).collect())
    }

    /// Componentwise divisibility in the non-Laurent sense.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.iter().all(|&e| e >= 0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse Laurent polynomial over F_p.
///
/// Invariants: stored coefficients are nonzero canonical residues, the zero
/// polynomial has an empty term map, and the map is keyed in graded-lex
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    ctx: Ctx,
    terms: BTreeMap<Monomial, u64>,
}

impl Poly {
    pub fn zero(ctx: &Ctx) -> Self {
        Poly { ctx: ctx.clone(), terms: BTreeMap::new() }
    }

    pub fn one(ctx: &Ctx) -> Self {
        Poly::constant(ctx, 1)
    }

    pub fn constant(ctx: &Ctx, c: i64) -> Self {
        let c = fp::reduce(c, ctx.char_p());
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Monomial::one(ctx.nvars()), c);
        }
        Poly { ctx: ctx.clone(), terms }
    }

    pub fn var(ctx: &Ctx, i: usize) -> Self {
        assert!(i < ctx.nvars(), "variable index out of range");
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(ctx.nvars(), i), 1);
        Poly { ctx: ctx.clone(), terms }
    }

    pub fn var_named(ctx: &Ctx, name: &str) -> Result<Self> {
        let i = ctx
            .var_index(name)
            .ok_or_else(|| Error::UnknownVariable { name: name.to_string(), pos: 0 })?;
        Ok(Poly::var(ctx, i))
    }

    /// Single term `c * x^exps`.
    pub fn term(ctx: &Ctx, c: i64, exps: &[i64]) -> Self {
        assert_eq!(exps.len(), ctx.nvars(), "exponent vector length mismatch");
        let c = fp::reduce(c, ctx.char_p());
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Monomial(exps.to_vec()), c);
        }
        Poly { ctx: ctx.clone(), terms }
    }

    pub fn from_terms(ctx: &Ctx, it: impl IntoIterator<Item = (Monomial, u64)>) -> Self {
        let p = ctx.char_p();
        let mut terms: BTreeMap<Monomial, u64> = BTreeMap::new();
        for (m, c) in it {
            let c = c % p;
            if c == 0 {
                continue;
            }
            debug_assert_eq!(m.0.len(), ctx.nvars());
            let entry = terms.entry(m).or_insert(0);
            *entry = fp::add(*entry, c, p);
            if *entry == 0 {
                // remove cancelled term lazily below
            }
        }
        terms.retain(|_, c| *c != 0);
        Poly { ctx: ctx.clone(), terms }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The graded-lex-largest term, if any.
    pub fn leading(&self) -> Option<(&Monomial, u64)> {
        self.terms.iter().next_back().map(|(m, c)| (m, *c))
    }

    /// Max total degree over the support; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    /// Constant value when the polynomial is a constant.
    pub fn constant_value(&self) -> Option<u64> {
        if self.terms.is_empty() {
            Some(0)
        } else if self.is_constant() {
            self.terms.values().next().copied()
        } else {
            None
        }
    }

    /// The single `(monomial, coefficient)` pair when the support has size one.
    pub fn as_single_term(&self) -> Option<(&Monomial, u64)> {
        if self.terms.len() == 1 {
            self.leading()
        } else {
            None
        }
    }

    /// Indices of variables occurring with nonzero exponent.
    pub fn support_vars(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e != 0 {
                    s.insert(i);
                }
            }
        }
        s
    }

    pub fn mentions_var(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.0[i] != 0)
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.terms.keys().any(|m| !m.is_polynomial())
    }

    fn assert_same_ctx(&self, other: &Poly) {
        assert!(same_ctx(&self.ctx, &other.ctx), "polynomials over different rings");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.assert_same_ctx(other);
        let p = self.ctx.char_p();
        let mut terms = self.terms.clone();
        for (m, &c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert(0);
            *entry = fp::add(*entry, c, p);
            if *entry == 0 {
                terms.remove(m);
            }
        }
        Poly { ctx: self.ctx.clone(), terms }
    }

    pub fn neg(&self) -> Poly {
        let p = self.ctx.char_p();
        let terms = self.terms.iter().map(|(m, &c)| (m.clone(), fp::neg(c, p))).collect();
        Poly { ctx: self.ctx.clone(), terms }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.assert_same_ctx(other);
        let p = self.ctx.char_p();
        let mut terms: BTreeMap<Monomial, u64> = BTreeMap::new();
        for (m1, &c1) in &self.terms {
            for (m2, &c2) in &other.terms {
                let c = fp::mul(c1, c2, p);
                if c == 0 {
                    continue;
                }
                let m = m1.mul(m2);
                let entry = terms.entry(m).or_insert(0);
                *entry = fp::add(*entry, c, p);
            }
        }
        terms.retain(|_, c| *c != 0);
        Poly { ctx: self.ctx.clone(), terms }
    }

    pub fn scale(&self, c: i64) -> Poly {
        let p = self.ctx.char_p();
        let c = fp::reduce(c, p);
        if c == 0 {
            return Poly::zero(&self.ctx);
        }
        let terms = self.terms.iter().map(|(m, &a)| (m.clone(), fp::mul(a, c, p))).collect();
        Poly { ctx: self.ctx.clone(), terms }
    }

    pub fn mul_term(&self, c: u64, m: &Monomial) -> Poly {
        let p = self.ctx.char_p();
        let c = c % p;
        if c == 0 {
            return Poly::zero(&self.ctx);
        }
        let terms = self
            .terms
            .iter()
            .map(|(mm, &a)| (mm.mul(m), fp::mul(a, c, p)))
            .collect();
        Poly { ctx: self.ctx.clone(), terms }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(&self.ctx);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Integer power, where negative exponents require a single-term base.
    pub fn pow_signed(&self, e: i64) -> Result<Poly> {
        if e >= 0 {
            return Ok(self.pow(e as u32));
        }
        match self.as_single_term() {
            Some((m, c)) => {
                let p = self.ctx.char_p();
                let mut terms = BTreeMap::new();
                terms.insert(m.pow(e), fp::pow_signed(c, e, p));
                Ok(Poly { ctx: self.ctx.clone(), terms })
            }
            None => Err(Error::NonInvertibleImage(format!(
                "negative power of a non-monomial: ({})^{e}",
                self
            ))),
        }
    }

    /// Formal partial derivative with the Laurent rule d(x^k) = k x^(k-1).
    pub fn partial(&self, v: usize) -> Poly {
        let p = self.ctx.char_p();
        let mut terms: BTreeMap<Monomial, u64> = BTreeMap::new();
        for (m, &c) in &self.terms {
            let e = m.0[v];
            let k = fp::reduce(e, p);
            let c = fp::mul(c, k, p);
            if c == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[v] -= 1;
            let entry = terms.entry(m2).or_insert(0);
            *entry = fp::add(*entry, c, p);
        }
        terms.retain(|_, c| *c != 0);
        Poly { ctx: self.ctx.clone(), terms }
    }

    /// Minimum exponent of variable `v` over the support; `None` means +infinity
    /// (the zero polynomial vanishes to every order).
    pub fn ord_along(&self, v: usize) -> Option<i64> {
        self.terms.keys().map(|m| m.0[v]).min()
    }

    /// Ring homomorphism determined by `images[i]` as the image of variable i.
    /// Images of variables occurring with negative exponents must be single
    /// Laurent terms so that inversion is defined.
    pub fn substitute(&self, images: &[Poly]) -> Result<Poly> {
        assert_eq!(images.len(), self.ctx.nvars(), "one image per variable required");
        let target = match images.first() {
            Some(im) => im.ctx().clone(),
            None => self.ctx.clone(),
        };
        for im in images {
            if !same_ctx(im.ctx(), &target) {
                return Err(Error::CtxMismatch(
                    "substitution images live in different rings".into(),
                ));
            }
        }
        if target.char_p() != self.ctx.char_p() {
            return Err(Error::CtxMismatch(
                "substitution cannot change the characteristic".into(),
            ));
        }
        let p = target.char_p();
        let mut acc = Poly::zero(&target);
        for (m, &c) in &self.terms {
            let mut t = Poly::constant(&target, c as i64);
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                t = t.mul(&images[i].pow_signed(e)?);
                if t.is_zero() {
                    break;
                }
            }
            let _ = p;
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Exact division: returns `q` with `q * g == self` when the quotient
    /// exists with polynomial support after clearing the negative exponents
    /// of both operands. Graded-lex long division; the quotient is exact or
    /// the division fails, there is no remainder notion here.
    pub fn divide_exact(&self, g: &Poly) -> Result<Poly> {
        self.assert_same_ctx(g);
        if g.is_zero() {
            return Err(Error::NotDivisible("division by zero".into()));
        }
        if self.is_zero() {
            return Ok(Poly::zero(&self.ctx));
        }
        let p = self.ctx.char_p();
        // Shift both operands so every variable has min exponent 0, divide in
        // the polynomial ring, then unshift the quotient.
        let n = self.ctx.nvars();
        let shift_of = |f: &Poly| -> Monomial {
            let mut s = vec![0i64; n];
            for (i, sv) in s.iter_mut().enumerate() {
                *sv = f.terms.keys().map(|m| m.0[i]).min().unwrap_or(0).min(0);
            }
            Monomial(s)
        };
        let sf = shift_of(self);
        let sg = shift_of(g);
        let f0 = self.mul_term(1, &sf.pow(-1));
        let g0 = g.mul_term(1, &sg.pow(-1));

        let (lg, cg) = g0.leading().expect("nonzero divisor");
        let lg = lg.clone();
        let cg_inv = fp::inv(cg, p);
        let mut r = f0;
        let mut q = Poly::zero(&self.ctx);
        while !r.is_zero() {
            let (lr, cr) = r.leading().expect("nonzero remainder");
            if !lg.divides(lr) {
                return Err(Error::NotDivisible(format!("{} by {}", self, g)));
            }
            let t = lr.div(&lg);
            let c = fp::mul(cr, cg_inv, p);
            let tpoly = Poly { ctx: self.ctx.clone(), terms: BTreeMap::from([(t, c)]) };
            q = q.add(&tpoly);
            r = r.sub(&tpoly.mul(&g0));
        }
        // q0 * g0 == f0, so q = q0 * shift(f)/shift(g).
        Ok(q.mul_term(1, &sf.mul(&sg.pow(-1))))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                let mut parts = Vec::new();
                if *c != 1 {
                    parts.push(c.to_string());
                }
                for (i, &e) in m.0.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    if e == 1 {
                        parts.push(self.ctx.var_name(i).to_string());
                    } else {
                        parts.push(format!("{}^{}", self.ctx.var_name(i), e));
                    }
                }
                write!(f, "{}", parts.join("*"))?;
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}

impl std::ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}

impl std::ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

impl std::ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(self)
    }
}

/// Exact determinant of a square matrix of polynomials, by memoized cofactor
/// expansion over column subsets. Sign-tracked, no divisions.
pub fn poly_matrix_det(ctx: &Ctx, mat: &[Vec<Poly>]) -> Result<Poly> {
    let n = mat.len();
    for row in mat {
        if row.len() != n {
            return Err(Error::NonSquareMap(format!(
                "matrix has {} rows but a row of length {}",
                n,
                row.len()
            )));
        }
    }
    if n == 0 {
        return Ok(Poly::one(ctx));
    }
    assert!(n <= 20, "determinant size out of desk scale");
    // dp[mask] = determinant of the minor using rows 0..k and the columns in
    // mask, where k = popcount(mask).
    let mut dp: BTreeMap<u32, Poly> = BTreeMap::new();
    dp.insert(0, Poly::one(ctx));
    for row in 0..n {
        let mut next: BTreeMap<u32, Poly> = BTreeMap::new();
        for (mask, sub) in &dp {
            if sub.is_zero() {
                continue;
            }
            let used = mask.count_ones();
            let mut below = 0u32;
            for col in 0..n {
                let bit = 1u32 << col;
                if mask & bit != 0 {
                    below += 1;
                    continue;
                }
                let entry = &mat[row][col];
                if entry.is_zero() {
                    continue;
                }
                // inversions added by assigning this row to this column:
                // previously used columns above it
                let signed = if (used - below) % 2 == 0 {
                    entry.mul(sub)
                } else {
                    entry.mul(sub).neg()
                };
                let slot = next.entry(mask | bit).or_insert_with(|| Poly::zero(ctx));
                *slot = slot.add(&signed);
            }
        }
        dp = next;
    }
    Ok(dp.remove(&((1u32 << n) - 1)).unwrap_or_else(|| Poly::zero(ctx)))
}
