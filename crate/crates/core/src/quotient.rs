//! Degree-truncated invariant subrings (derivation kernels) by exact linear
//! algebra over F_p, subalgebra/Hilbert comparison, invariant-lift
//! certificates, and the m-primary image criterion.
//!
//! Degree truncation is the only completeness device here: a failed lift is
//! reported as a bounded certificate (`NoSolutionUpTo`), never as a theorem.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::derivation::Derivation;
use crate::error::{Error, Result};
use crate::fp;
use crate::ring::{Ctx, Monomial, Poly};

/// All monomials of total degree <= dmax, ascending graded-lex.
pub fn monomials_up_to(ctx: &Ctx, dmax: i64) -> Vec<Monomial> {
    let n = ctx.nvars();
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(out: &mut Vec<Monomial>, cur: &mut Vec<i64>, i: usize, left: i64) {
        if i == cur.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(out, cur, i + 1, left - e);
            cur[i] = 0;
        }
    }
    rec(&mut out, &mut cur, 0, dmax);
    out.sort();
    out
}

/// Dense F_p row operations. Rows are coefficient vectors over a fixed,
/// deterministically ordered column set.
fn rref(rows: &mut Vec<Vec<u64>>, ncols: usize, p: u64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..ncols {
        let Some(sel) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, sel);
        let inv = fp::inv(rows[rank][col], p);
        for x in rows[rank].iter_mut() {
            *x = fp::mul(*x, inv, p);
        }
        for r in 0..rows.len() {
            if r == rank || rows[r][col] == 0 {
                continue;
            }
            let factor = rows[r][col];
            for j in 0..ncols.max(rows[r].len()) {
                let sub = fp::mul(factor, rows[rank][j], p);
                rows[r][j] = fp::sub(rows[r][j], sub, p);
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank.max(pivots.len()));
    rows.retain(|r| r.iter().any(|&x| x != 0));
    pivots
}

/// Basis of a derivation kernel truncated in degree, together with the
/// per-degree dimension table. `dims[d]` is the dimension of
/// `{f : deg f <= d, D(f) = 0}`; with graded-lex leading monomials this is
/// the number of basis elements whose leading degree is at most d.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub dmax: i64,
    pub basis: Vec<Poly>,
    pub dims: Vec<usize>,
}

struct LinearSystem {
    ctx: Ctx,
    /// domain monomials, descending graded-lex (largest first)
    cols: Vec<Monomial>,
    /// image monomial -> row index
    rows: BTreeMap<Monomial, usize>,
    /// matrix entries, rows indexed as in `rows`, columns as in `cols`
    mat: Vec<Vec<u64>>,
}

fn build_system(d: &Derivation, dmax: i64) -> Result<LinearSystem> {
    let ctx = d.ctx().clone();
    for (_, c) in d.coeffs() {
        if c.has_negative_exponents() {
            return Err(Error::LaurentNotSupported(
                "kernel computations need polynomial coefficients".into(),
            ));
        }
    }
    if dmax < 1 {
        return Err(Error::Domain(format!("degree bound {dmax} < 1")));
    }
    let mut cols = monomials_up_to(&ctx, dmax);
    cols.reverse();
    let images: Vec<Poly> = cols
        .iter()
        .map(|m| d.apply(&Poly::from_terms(&ctx, [(m.clone(), 1)])))
        .collect();
    let mut rows: BTreeMap<Monomial, usize> = BTreeMap::new();
    for im in &images {
        for (m, _) in im.terms() {
            let next = rows.len();
            rows.entry(m.clone()).or_insert(next);
        }
    }
    let mut mat = vec![vec![0u64; cols.len()]; rows.len()];
    for (j, im) in images.iter().enumerate() {
        for (m, c) in im.terms() {
            mat[rows[m]][j] = c;
        }
    }
    Ok(LinearSystem { ctx, cols, rows, mat })
}

fn vector_to_poly(ctx: &Ctx, cols: &[Monomial], v: &[u64]) -> Poly {
    Poly::from_terms(
        ctx,
        cols.iter().zip(v).filter(|(_, &c)| c != 0).map(|(m, &c)| (m.clone(), c)),
    )
}

/// Reduced-echelon nullspace of the system, as polynomials with distinct
/// graded-lex leading monomials.
fn nullspace(sys: &LinearSystem) -> Vec<Vec<u64>> {
    let p = sys.ctx.char_p();
    let ncols = sys.cols.len();
    let mut mat = sys.mat.clone();
    let pivots = rref(&mut mat, ncols, p);
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..ncols {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; ncols];
        v[free] = 1;
        for (ri, &pc) in pivots.iter().enumerate() {
            let a = mat[ri][free];
            if a != 0 {
                v[pc] = fp::neg(a, p);
            }
        }
        basis.push(v);
    }
    // Re-reduce the basis itself so each element has a distinct leading
    // monomial (columns are already in descending graded-lex order).
    rref(&mut basis, ncols, p);
    basis
}

/// Exact basis of `{f : deg f <= dmax, D(f) = 0}` via the nullspace of the
/// linear map f -> D(f) between monomial bases.
pub fn truncated_kernel(d: &Derivation, dmax: i64) -> Result<KernelBasis> {
    let sys = build_system(d, dmax)?;
    let vecs = nullspace(&sys);
    let mut basis: Vec<Poly> = vecs
        .iter()
        .map(|v| vector_to_poly(&sys.ctx, &sys.cols, v))
        .collect();
    basis.sort_by(|a, b| {
        a.leading().map(|(m, _)| m.clone()).cmp(&b.leading().map(|(m, _)| m.clone()))
    });
    for f in &basis {
        debug_assert!(d.apply(f).is_zero(), "kernel element not annihilated");
    }
    let mut dims = vec![0usize; dmax as usize + 1];
    for f in &basis {
        let deg = f.total_degree().unwrap_or(0).max(0) as usize;
        for slot in dims.iter_mut().skip(deg) {
            *slot += 1;
        }
    }
    Ok(KernelBasis { dmax, basis, dims })
}

/// Incremental F_p row-reducer used for span dimensions and normal forms.
struct Reducer {
    p: u64,
    ncols: usize,
    /// rows in reduced echelon form, keyed by pivot column
    rows: BTreeMap<usize, Vec<u64>>,
}

impl Reducer {
    fn new(p: u64, ncols: usize) -> Self {
        Reducer { p, ncols, rows: BTreeMap::new() }
    }

    /// Reduces `v` against the current rows, in place; returns the pivot
    /// column if the remainder is nonzero.
    fn reduce(&self, v: &mut [u64]) -> Option<usize> {
        for (&pc, row) in &self.rows {
            if v[pc] != 0 {
                let factor = v[pc];
                for j in 0..self.ncols {
                    let sub = fp::mul(factor, row[j], self.p);
                    v[j] = fp::sub(v[j], sub, self.p);
                }
            }
        }
        v.iter().position(|&x| x != 0)
    }

    /// Inserts a vector, returning true when it enlarges the span.
    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        match self.reduce(&mut v) {
            None => false,
            Some(pc) => {
                let inv = fp::inv(v[pc], self.p);
                for x in v.iter_mut() {
                    *x = fp::mul(*x, inv, self.p);
                }
                let pairs: Vec<(usize, Vec<u64>)> =
                    self.rows.iter().map(|(k, r)| (*k, r.clone())).collect();
                for (k, mut row) in pairs {
                    if row[pc] != 0 {
                        let factor = row[pc];
                        for j in 0..self.ncols {
                            let sub = fp::mul(factor, v[j], self.p);
                            row[j] = fp::sub(row[j], sub, self.p);
                        }
                        self.rows.insert(k, row);
                    }
                }
                self.rows.insert(pc, v);
                true
            }
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn poly_to_vector(cols: &BTreeMap<Monomial, usize>, ncols: usize, f: &Poly) -> Option<Vec<u64>> {
    let mut v = vec![0u64; ncols];
    for (m, c) in f.terms() {
        let idx = cols.get(m)?;
        v[*idx] = c;
    }
    Some(v)
}

/// Compares, degree by degree, the span of all monomials in the generators
/// against the truncated kernel of the derivation. `true` at degree d means
/// the generators span the whole kernel in degree <= d.
pub fn subalgebra_hilbert_match(
    gens: &[Poly],
    d: &Derivation,
    dmax: i64,
) -> Result<Vec<bool>> {
    let ctx = d.ctx().clone();
    for g in gens {
        if g.is_zero() {
            return Err(Error::Domain("zero generator".into()));
        }
        if g.has_negative_exponents() {
            return Err(Error::LaurentNotSupported("generators must be polynomials".into()));
        }
        if !d.apply(g).is_zero() {
            return Err(Error::GeneratorNotInvariant(g.to_string()));
        }
    }
    let kernel = truncated_kernel(d, dmax)?;

    // Enumerate products of generators of total degree <= dmax. Constant
    // generators only re-span the constants and are skipped.
    let mut products: Vec<Poly> = Vec::new();
    let nontrivial: Vec<&Poly> = gens.iter().filter(|g| !g.is_constant()).collect();
    fn rec(products: &mut Vec<Poly>, gens: &[&Poly], start: usize, acc: &Poly, deg_left: i64) {
        products.push(acc.clone());
        for (i, g) in gens.iter().enumerate().skip(start) {
            let gd = g.total_degree().unwrap_or(0);
            if gd <= deg_left {
                let next = acc.mul(g);
                if let Some(nd) = next.total_degree() {
                    // cancellation can only lower the degree; keep the
                    // conservative bound on the declared degree
                    let _ = nd;
                }
                rec(products, gens, i, &next, deg_left - gd);
            }
        }
    }
    rec(&mut products, &nontrivial, 0, &Poly::one(&ctx), dmax);

    let monoms = monomials_up_to(&ctx, dmax);
    let cols: BTreeMap<Monomial, usize> =
        monoms.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let ncols = monoms.len();
    products.sort_by_key(|f| f.total_degree().unwrap_or(0));
    let mut reducer = Reducer::new(ctx.char_p(), ncols);
    let mut out = Vec::with_capacity(dmax as usize + 1);
    let mut idx = 0usize;
    for deg in 0..=dmax {
        while idx < products.len() && products[idx].total_degree().unwrap_or(0) <= deg {
            let v = poly_to_vector(&cols, ncols, &products[idx])
                .expect("product degree within bound");
            reducer.insert(v);
            idx += 1;
        }
        out.push(reducer.rank() == kernel.dims[deg as usize]);
    }
    Ok(out)
}

/// Outcome of a bounded invariant-lift search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftOutcome {
    /// A witness f with D(g + t*f) = 0 exactly, in reduced normal form
    /// modulo the truncated kernel.
    Solved(Poly),
    /// No f of degree <= the bound exists. A bounded certificate, not a
    /// theorem.
    NoSolutionUpTo(i64),
}

impl fmt::Display for LiftOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftOutcome::Solved(w) => write!(f, "solved: f = {w}"),
            LiftOutcome::NoSolutionUpTo(d) => write!(f, "no_solution_up_to {d}"),
        }
    }
}

/// Solves `D(g + t*f) = 0` for f of degree <= dmax, as an exact linear
/// system. Requires D(t) = 0 and t | D(g), so the equation reduces to
/// D(f) = -D(g)/t.
pub fn lift_invariant(
    d: &Derivation,
    g: &Poly,
    tvar: usize,
    dmax: i64,
) -> Result<LiftOutcome> {
    let ctx = d.ctx().clone();
    if tvar >= ctx.nvars() {
        return Err(Error::Domain("lift parameter out of range".into()));
    }
    if !d.apply(&Poly::var(&ctx, tvar)).is_zero() {
        return Err(Error::PreconditionFailed(format!(
            "D({}) != 0",
            ctx.var_name(tvar)
        )));
    }
    if g.has_negative_exponents() {
        return Err(Error::LaurentNotSupported("lift target must be a polynomial".into()));
    }
    let dg = d.apply(g);
    let t = Poly::var(&ctx, tvar);
    let rhs = dg
        .divide_exact(&t)
        .map_err(|_| Error::PreconditionFailed(format!(
            "D(g) = {dg} is not divisible by {}",
            ctx.var_name(tvar)
        )))?
        .neg();

    let sys = build_system(d, dmax)?;
    let ncols = sys.cols.len();
    let mut rows: BTreeMap<Monomial, usize> = sys.rows.clone();
    for (m, _) in rhs.terms() {
        let next = rows.len();
        rows.entry(m.clone()).or_insert(next);
    }
    // augmented matrix [A | b]
    let mut mat = vec![vec![0u64; ncols + 1]; rows.len()];
    for (ri, row) in sys.mat.iter().enumerate() {
        mat[ri][..ncols].copy_from_slice(row);
    }
    for (m, c) in rhs.terms() {
        mat[rows[m]][ncols] = c;
    }
    let p = ctx.char_p();
    let pivots = rref(&mut mat, ncols + 1, p);
    if pivots.last() == Some(&ncols) {
        return Ok(LiftOutcome::NoSolutionUpTo(dmax));
    }
    let mut particular = vec![0u64; ncols];
    for (ri, &pc) in pivots.iter().enumerate() {
        particular[pc] = mat[ri][ncols];
    }
    // normal form modulo the kernel, so witnesses are canonical
    let kernel_vecs = nullspace(&sys);
    let mut reducer = Reducer::new(p, ncols);
    for v in kernel_vecs {
        reducer.insert(v);
    }
    reducer.reduce(&mut particular);
    let f = vector_to_poly(&ctx, &sys.cols, &particular);
    let check = d.apply(&g.add(&t.mul(&f)));
    if !check.is_zero() {
        return Err(Error::Domain(format!("lift verification failed: residual {check}")));
    }
    Ok(LiftOutcome::Solved(f))
}

/// Verdict of the m-primary image criterion: `True` is a proof, everything
/// else stays `Inconclusive` (never a definitive negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MPrimary {
    True,
    Inconclusive,
}

impl fmt::Display for MPrimary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MPrimary::True => write!(f, "true"),
            MPrimary::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Sufficient syntactic criterion for the image ideal of the derivation to be
/// primary to the maximal ideal of the given variables: all nonzero
/// coefficients are monomials, and every variable is covered by a pure power
/// among them.
pub fn mprimary_image_check(d: &Derivation, vars: &[usize]) -> MPrimary {
    let mut monomials: Vec<Monomial> = Vec::new();
    for (_, c) in d.coeffs() {
        match c.as_single_term() {
            Some((m, _)) if m.is_polynomial() => monomials.push(m.clone()),
            _ => return MPrimary::Inconclusive,
        }
    }
    for &v in vars {
        let covered = monomials.iter().any(|m| {
            m.0[v] > 0 && m.0.iter().enumerate().all(|(i, &e)| i == v || e == 0)
        });
        if !covered {
            return MPrimary::Inconclusive;
        }
    }
    MPrimary::True
}
