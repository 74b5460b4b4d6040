//! Derivations of the Laurent ring, with Lie brackets, iterated p-th powers,
//! p-closedness and multiplicativity checks, saturation along a divisor, and
//! divisor invariance.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::parse;
use crate::ring::{same_ctx, Ctx, Monomial, Poly};

/// A derivation `sum_v coeffs[v] * d/dv`. Zero coefficients are not stored.
/// No coefficient may mention a reserved (opaque-direction) variable; this is
/// what makes brackets and p-powers computed with `d[z]` agree with those of
/// the opaque generator it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    ctx: Ctx,
    coeffs: BTreeMap<usize, Poly>,
}

impl Derivation {
    pub fn new(ctx: &Ctx, coeffs: BTreeMap<usize, Poly>) -> Result<Self> {
        let mut clean = BTreeMap::new();
        for (v, c) in coeffs {
            if v >= ctx.nvars() {
                return Err(Error::Domain(format!("coefficient index {v} out of range")));
            }
            if !same_ctx(c.ctx(), ctx) {
                return Err(Error::CtxMismatch(
                    "derivation coefficient lives in a different ring".into(),
                ));
            }
            if c.is_zero() {
                continue;
            }
            for r in ctx.reserved_indices() {
                if c.mentions_var(r) {
                    return Err(Error::ReservedVariable {
                        name: ctx.var_name(r).to_string(),
                        pos: 0,
                    });
                }
            }
            clean.insert(v, c);
        }
        Ok(Derivation { ctx: ctx.clone(), coeffs: clean })
    }

    pub fn zero(ctx: &Ctx) -> Self {
        Derivation { ctx: ctx.clone(), coeffs: BTreeMap::new() }
    }

    /// Parses a derivation literal, e.g. `x1^2 d[x1] + t^2 d[y]`.
    pub fn parse(ctx: &Ctx, text: &str) -> Result<Self> {
        let coeffs = parse::parse_derivation_coeffs(ctx, text)?;
        Derivation::new(ctx, coeffs)
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: usize) -> Poly {
        self.coeffs.get(&v).cloned().unwrap_or_else(|| Poly::zero(&self.ctx))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (usize, &Poly)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    /// Action on a ring element: `sum_v coeffs[v] * partial(f, v)`.
    pub fn apply(&self, f: &Poly) -> Poly {
        assert!(same_ctx(f.ctx(), &self.ctx), "argument over a different ring");
        let mut acc = Poly::zero(&self.ctx);
        for (&v, c) in &self.coeffs {
            let d = f.partial(v);
            if !d.is_zero() {
                acc = acc.add(&c.mul(&d));
            }
        }
        acc
    }

    /// `f` applied `k` times.
    pub fn apply_iterated(&self, f: &Poly, k: u64) -> Poly {
        let mut g = f.clone();
        for _ in 0..k {
            g = self.apply(&g);
        }
        g
    }

    pub fn add(&self, other: &Derivation) -> Derivation {
        assert!(same_ctx(&self.ctx, &other.ctx));
        let mut coeffs = self.coeffs.clone();
        for (&v, c) in &other.coeffs {
            let entry = coeffs.entry(v).or_insert_with(|| Poly::zero(&self.ctx));
            *entry = entry.add(c);
        }
        coeffs.retain(|_, c| !c.is_zero());
        Derivation { ctx: self.ctx.clone(), coeffs }
    }

    pub fn neg(&self) -> Derivation {
        let coeffs = self.coeffs.iter().map(|(&v, c)| (v, c.neg())).collect();
        Derivation { ctx: self.ctx.clone(), coeffs }
    }

    /// Scaling `f * D`. The scaling must respect the reserved-coefficient rule,
    /// so this goes through the validating constructor.
    pub fn scale(&self, f: &Poly) -> Result<Derivation> {
        let coeffs = self.coeffs.iter().map(|(&v, c)| (v, f.mul(c))).collect();
        Derivation::new(&self.ctx, coeffs)
    }

    /// Lie bracket `[self, other]`.
    pub fn bracket(&self, other: &Derivation) -> Derivation {
        assert!(same_ctx(&self.ctx, &other.ctx), "bracket over different rings");
        let mut coeffs = BTreeMap::new();
        let vars: std::collections::BTreeSet<usize> =
            self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        for v in vars {
            let a = self.apply(&other.coeff(v));
            let b = other.apply(&self.coeff(v));
            let c = a.sub(&b);
            if !c.is_zero() {
                coeffs.insert(v, c);
            }
        }
        Derivation { ctx: self.ctx.clone(), coeffs }
    }

    /// The restricted p-th power `D^[p]`, computed by direct iteration: its
    /// coefficient at `v` is `D` applied p times to `v`. In characteristic p
    /// the p-fold composition is again a derivation, so it is determined by
    /// its values on the coordinates.
    pub fn p_power(&self) -> Derivation {
        let p = self.ctx.char_p();
        let mut coeffs = BTreeMap::new();
        for &v in self.coeffs.keys() {
            let f = self.apply_iterated(&Poly::var(&self.ctx, v), p);
            if !f.is_zero() {
                coeffs.insert(v, f);
            }
        }
        // Variables with zero coefficient stay fixed by every iterate, so the
        // p-power has no component there either.
        Derivation { ctx: self.ctx.clone(), coeffs }
    }

    /// p-closedness test: picks the first variable `a` (in ring order) with
    /// D(a) != 0, divides `D^[p](a)` by `D(a)`, and verifies the quotient `h`
    /// works on every coordinate. Returns `h` on success.
    pub fn is_p_closed(&self) -> Result<Poly> {
        if self.is_zero() {
            return Err(Error::Domain("p-closedness of the zero derivation".into()));
        }
        let pp = self.p_power();
        let (&a, da) = self.coeffs.iter().next().expect("nonzero derivation");
        let h = pp
            .coeff(a)
            .divide_exact(da)
            .map_err(|_| Error::NotPClosed(format!(
                "{} does not divide {} at coordinate {}",
                da,
                pp.coeff(a),
                self.ctx.var_name(a)
            )))?;
        for (&v, c) in &self.coeffs {
            if pp.coeff(v) != h.mul(c) {
                return Err(Error::NotPClosed(format!(
                    "coordinate {} fails: D^[p]({}) != h*D({})",
                    self.ctx.var_name(v),
                    self.ctx.var_name(v),
                    self.ctx.var_name(v)
                )));
            }
        }
        for v in pp.coeffs.keys() {
            if !self.coeffs.contains_key(v) {
                return Err(Error::NotPClosed(format!(
                    "D^[p] has a component at {} where D has none",
                    self.ctx.var_name(*v)
                )));
            }
        }
        Ok(h)
    }

    /// Factors the largest power of `e` out of all coefficients. Negative `k`
    /// multiplies by positive powers instead (Laurent generators saturate the
    /// other way). The foliation discrepancy along `(e = 0)` is `-k`.
    pub fn saturate(&self, e: usize) -> Saturation {
        assert!(!self.is_zero(), "saturation of the zero derivation");
        let k = self
            .coeffs
            .values()
            .filter_map(|c| c.ord_along(e))
            .min()
            .expect("nonzero derivation has a nonzero coefficient");
        let shift = Monomial::var(self.ctx.nvars(), e).pow(-k);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&v, c)| (v, c.mul_term(1, &shift)))
            .collect();
        Saturation { exponent: k, derivation: Derivation { ctx: self.ctx.clone(), coeffs } }
    }

    /// True iff `(e = 0)` is invariant: `e` divides `D(e)`. The caller is
    /// expected to pass a generator already saturated along `e`.
    pub fn is_invariant_divisor(&self, e: usize) -> bool {
        let de = self.apply(&Poly::var(&self.ctx, e));
        match de.ord_along(e) {
            None => true,
            Some(k) => k >= 1,
        }
    }

    /// Multiplicativity verdict for a p-closed derivation, via a sufficient
    /// syntactic unit test on `h`: a nonzero scalar, a declared unit, or a
    /// nonzero scalar times a declared unit. `h = 0` is definitely not
    /// multiplicative; anything else is inconclusive rather than false.
    pub fn multiplicativity(&self, units: &[Poly]) -> Result<Multiplicativity> {
        let h = self.is_p_closed()?;
        Ok(classify_unit(&h, units))
    }
}

fn classify_unit(h: &Poly, units: &[Poly]) -> Multiplicativity {
    if h.is_zero() {
        return Multiplicativity::NotMultiplicative;
    }
    if h.is_constant() {
        return Multiplicativity::Multiplicative;
    }
    for u in units {
        if u.is_zero() {
            continue;
        }
        if let Ok(q) = h.divide_exact(u) {
            if let Some(c) = q.constant_value() {
                if c != 0 {
                    return Multiplicativity::Multiplicative;
                }
            }
        }
    }
    Multiplicativity::Inconclusive
}

/// Outcome of the multiplicativity check; `Inconclusive` is distinct from a
/// definite negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicativity {
    Multiplicative,
    NotMultiplicative,
    Inconclusive,
}

impl fmt::Display for Multiplicativity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicativity::Multiplicative => write!(f, "true"),
            Multiplicativity::NotMultiplicative => write!(f, "false"),
            Multiplicativity::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Result of factoring `e^k` out of a derivation.
#[derive(Debug, Clone)]
pub struct Saturation {
    pub exponent: i64,
    pub derivation: Derivation,
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&v, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let name = self.ctx.var_name(v);
            if let Some(1) = c.constant_value() {
                write!(f, "d[{name}]")?;
            } else if c.num_terms() == 1 {
                write!(f, "{c} d[{name}]")?;
            } else {
                write!(f, "({c}) d[{name}]")?;
            }
        }
        Ok(())
    }
}
