//! Chart maps for standard and weighted blow-ups, pullback of derivations
//! along charts, strict transforms, and per-chart discrepancies of pairs.
//!
//! Only Laurent-monomial-triangular charts are supported: every forward and
//! inverse image is a nonzero scalar times a Laurent monomial. Every chart
//! arising from a blow-up has this shape, and it guarantees symbolic
//! invertibility without solving equations.

use std::fmt;

use num::{BigInt, BigRational, Signed, Zero};

use crate::derivation::Derivation;
use crate::error::{Error, Result};
use crate::fp;
use crate::ledger::Rat;
use crate::ring::{poly_matrix_det, same_ctx, Ctx, Monomial, Poly};

/// An invertible monomial substitution between two coordinate charts.
#[derive(Debug, Clone)]
pub struct ChartMap {
    source: Ctx,
    target: Ctx,
    /// forward[j] = image in the target ring of the j-th source variable
    forward: Vec<Poly>,
    /// inverse[k] = preimage in the source ring of the k-th target variable
    inverse: Vec<Poly>,
}

impl ChartMap {
    /// Builds a chart from explicit forward images, deriving the inverse from
    /// the exponent matrix. Each image must be a nonzero scalar times a
    /// Laurent monomial, and the exponent matrix must be invertible over Z.
    pub fn from_images(source: &Ctx, target: &Ctx, forward: Vec<Poly>) -> Result<Self> {
        let n = source.nvars();
        if target.nvars() != n {
            return Err(Error::NonSquareMap(format!(
                "source has {} variables, target has {}",
                n,
                target.nvars()
            )));
        }
        if source.char_p() != target.char_p() {
            return Err(Error::CtxMismatch("charts must preserve the characteristic".into()));
        }
        if forward.len() != n {
            return Err(Error::NonInvertibleImage(
                "one forward image per source variable required".into(),
            ));
        }
        let p = source.char_p();
        let mut exps: Vec<Vec<i64>> = Vec::with_capacity(n);
        let mut coeffs: Vec<u64> = Vec::with_capacity(n);
        for (j, im) in forward.iter().enumerate() {
            if !same_ctx(im.ctx(), target) {
                return Err(Error::CtxMismatch(format!(
                    "image of {} is not over the target ring",
                    source.var_name(j)
                )));
            }
            match im.as_single_term() {
                Some((m, c)) => {
                    exps.push(m.0.clone());
                    coeffs.push(c);
                }
                None => {
                    return Err(Error::NonInvertibleImage(format!(
                        "image of {} is not a single Laurent term: {}",
                        source.var_name(j),
                        im
                    )))
                }
            }
        }
        let binv = invert_integer_matrix(&exps).ok_or_else(|| {
            Error::NonInvertibleImage("exponent matrix is not invertible over Z".into())
        })?;
        let mut inverse = Vec::with_capacity(n);
        for k in 0..n {
            // d_k * prod_j x_j^{B[k][j]} with d_k cancelling the forward scalars
            let mut scalar = 1u64;
            for j in 0..n {
                scalar = fp::mul(scalar, fp::pow_signed(coeffs[j], binv[k][j], p), p);
            }
            let d = fp::inv(scalar, p);
            let mono = Monomial(binv[k].clone());
            inverse.push(Poly::from_terms(source, [(mono, d)]));
        }
        let chart = ChartMap { source: source.clone(), target: target.clone(), forward, inverse };
        chart.verify_roundtrip()?;
        Ok(chart)
    }

    fn verify_roundtrip(&self) -> Result<()> {
        for j in 0..self.source.nvars() {
            let back = self.forward[j].substitute(&self.inverse)?;
            if back != Poly::var(&self.source, j) {
                return Err(Error::NonInvertibleImage(format!(
                    "inverse check failed on {}",
                    self.source.var_name(j)
                )));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &Ctx {
        &self.source
    }

    pub fn target(&self) -> &Ctx {
        &self.target
    }

    pub fn forward_images(&self) -> &[Poly] {
        &self.forward
    }

    pub fn inverse_images(&self) -> &[Poly] {
        &self.inverse
    }

    /// Identity chart (source and target share variable count and prime).
    pub fn identity(source: &Ctx, target: &Ctx) -> Result<Self> {
        let forward = (0..source.nvars()).map(|i| Poly::var(target, i)).collect();
        ChartMap::from_images(source, target, forward)
    }

    /// Applies the forward substitution to a source polynomial.
    pub fn push(&self, f: &Poly) -> Result<Poly> {
        f.substitute(&self.forward)
    }

    /// Composition `self` then `other`.
    pub fn compose(&self, other: &ChartMap) -> Result<ChartMap> {
        if !same_ctx(&self.target, &other.source) {
            return Err(Error::CtxMismatch(
                "composition requires matching intermediate rings".into(),
            ));
        }
        let forward = self
            .forward
            .iter()
            .map(|f| f.substitute(&other.forward))
            .collect::<Result<Vec<_>>>()?;
        ChartMap::from_images(&self.source, &other.target, forward)
    }

    /// Pullback of a derivation along the chart: the unique derivation D' on
    /// the target with subst(D f) = D'(subst f) for all f. Computed on each
    /// target coordinate and then verified on every source variable.
    pub fn pullback(&self, d: &Derivation) -> Result<Derivation> {
        if !same_ctx(d.ctx(), &self.source) {
            return Err(Error::CtxMismatch("derivation is not over the chart source".into()));
        }
        let n = self.target.nvars();
        let mut coeffs = std::collections::BTreeMap::new();
        for v in 0..n {
            let c = d.apply(&self.inverse[v]).substitute(&self.forward)?;
            if !c.is_zero() {
                coeffs.insert(v, c);
            }
        }
        let pulled = Derivation::new(&self.target, coeffs)?;
        for j in 0..self.source.nvars() {
            let lhs = d.apply(&Poly::var(&self.source, j)).substitute(&self.forward)?;
            let rhs = pulled.apply(&self.forward[j]);
            if lhs != rhs {
                return Err(Error::NonInvertibleImage(format!(
                    "pullback identity failed on {}",
                    self.source.var_name(j)
                )));
            }
        }
        Ok(pulled)
    }

    /// Total transform factored as e^mult times the strict part.
    pub fn strict_transform(&self, d: &Poly, e: usize) -> Result<(Poly, i64)> {
        if d.is_zero() {
            return Err(Error::Domain("strict transform of the zero divisor".into()));
        }
        let total = self.push(d)?;
        let mult = total.ord_along(e).expect("monomial substitution preserves nonzeroness");
        let shift = Monomial::var(self.target.nvars(), e).pow(-mult);
        Ok((total.mul_term(1, &shift), mult))
    }

    /// Determinant of the Jacobian matrix of the forward images with respect
    /// to the target variables. Exact and sign-tracked.
    pub fn jacobian_det(&self) -> Result<Poly> {
        let n = self.target.nvars();
        let mut rows = Vec::with_capacity(n);
        for im in &self.forward {
            let row: Vec<Poly> = (0..n).map(|i| im.partial(i)).collect();
            rows.push(row);
        }
        poly_matrix_det(&self.target, &rows)
    }

    /// Log discrepancy of the pair `(X, divisors)` along the exceptional
    /// variable `e` of this chart:
    /// ord_e(Jacobian) - sum_j coeff_j * ord_e(pushforward of the j-th
    /// defining polynomial).
    pub fn chart_discrepancy(&self, divisors: &DivisorSpec, e: usize) -> Result<Rat> {
        let jac = self.jacobian_det()?;
        if jac.is_zero() {
            return Err(Error::NonSquareMap("degenerate chart: zero Jacobian".into()));
        }
        let mut a = Rat::from(BigInt::from(jac.ord_along(e).expect("nonzero Jacobian")));
        for entry in &divisors.entries {
            let total = self.push(&entry.poly)?;
            let ord = total.ord_along(e).ok_or_else(|| {
                Error::Domain(format!("divisor {} pulls back to zero", entry.name))
            })?;
            a -= entry.coeff.clone() * Rat::from(BigInt::from(ord));
        }
        Ok(a)
    }
}

impl fmt::Display for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .forward
            .iter()
            .enumerate()
            .map(|(j, im)| format!("{} -> {}", self.source.var_name(j), im))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Exact inverse of a square integer matrix, when it exists over Z.
fn invert_integer_matrix(a: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from(BigInt::from(x))).collect())
        .collect();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::from(BigInt::from(1))
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let pv = m[col][col].clone();
        for j in 0..n {
            m[col][j] /= pv.clone();
            inv[col][j] /= pv.clone();
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for j in 0..n {
                let mj = m[col][j].clone();
                let ij = inv[col][j].clone();
                m[r][j] -= factor.clone() * mj;
                inv[r][j] -= factor.clone() * ij;
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for row in inv {
        let mut irow = Vec::with_capacity(n);
        for v in row {
            if !v.denom().abs().eq(&BigInt::from(1)) {
                return None;
            }
            let num = v.numer();
            let val: i64 = num.try_into().ok()?;
            irow.push(val);
        }
        out.push(irow);
    }
    Some(out)
}

/// Standard blow-up chart at the given center variable: the chart variable
/// maps to its positional counterpart `t_c`, every other center variable v
/// maps to `t_c * t_v`, and non-center variables stay fixed. Source and
/// target variables correspond positionally.
pub fn standard_chart(
    source: &Ctx,
    target: &Ctx,
    center: &[&str],
    chart: &str,
) -> Result<ChartMap> {
    let weights = vec![1u64; center.len()];
    build_chart(source, target, center, &weights, chart, false)
}

/// Weighted blow-up chart. The chart variable must have weight 1 (otherwise
/// the chart is not a scheme and we refuse with `NonSchematicChart`); every
/// other center variable v maps to `t_c^{w_v} * t_v`.
pub fn weighted_chart(
    source: &Ctx,
    target: &Ctx,
    center: &[&str],
    weights: &[u64],
    chart: &str,
) -> Result<ChartMap> {
    build_chart(source, target, center, weights, chart, true)
}

fn build_chart(
    source: &Ctx,
    target: &Ctx,
    center: &[&str],
    weights: &[u64],
    chart: &str,
    weighted: bool,
) -> Result<ChartMap> {
    if center.len() < 2 {
        return Err(Error::InvalidCenter(
            "a blow-up center needs at least two variables".into(),
        ));
    }
    if weights.len() != center.len() {
        return Err(Error::InvalidCenter("one weight per center variable required".into()));
    }
    if weights.iter().any(|&w| w == 0) {
        return Err(Error::InvalidCenter("weights must be positive".into()));
    }
    let mut center_idx = Vec::with_capacity(center.len());
    for v in center {
        match source.var_index(v) {
            Some(i) => center_idx.push(i),
            None => return Err(Error::InvalidCenter(format!("unknown center variable `{v}`"))),
        }
    }
    {
        let mut sorted = center_idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != center_idx.len() {
            return Err(Error::InvalidCenter("repeated center variable".into()));
        }
    }
    let cpos = center
        .iter()
        .position(|v| *v == chart)
        .ok_or_else(|| Error::InvalidCenter(format!("chart variable `{chart}` not in center")))?;
    if weighted && weights[cpos] != 1 {
        return Err(Error::NonSchematicChart(format!(
            "chart variable `{chart}` has weight {}",
            weights[cpos]
        )));
    }
    let chart_idx = center_idx[cpos];
    let n = source.nvars();
    if target.nvars() != n {
        return Err(Error::NonSquareMap("target must have as many variables as the source".into()));
    }
    let mut forward = Vec::with_capacity(n);
    for j in 0..n {
        match center_idx.iter().position(|&i| i == j) {
            None => forward.push(Poly::var(target, j)),
            Some(k) if j == chart_idx => {
                let _ = k;
                forward.push(Poly::var(target, j));
            }
            Some(k) => {
                let mut exps = vec![0i64; n];
                exps[chart_idx] = weights[k] as i64;
                exps[j] = 1;
                forward.push(Poly::term(target, 1, &exps));
            }
        }
    }
    ChartMap::from_images(source, target, forward)
}

/// A named Q-weighted list of defining polynomials.
#[derive(Debug, Clone)]
pub struct DivisorSpec {
    pub entries: Vec<DivisorEntry>,
}

#[derive(Debug, Clone)]
pub struct DivisorEntry {
    pub name: String,
    pub coeff: Rat,
    pub poly: Poly,
}

impl DivisorSpec {
    pub fn empty() -> Self {
        DivisorSpec { entries: Vec::new() }
    }

    pub fn new(entries: Vec<DivisorEntry>) -> Result<Self> {
        let mut names = std::collections::BTreeSet::new();
        for e in &entries {
            if e.poly.is_zero() {
                return Err(Error::Domain(format!("divisor {} has zero defining polynomial", e.name)));
            }
            if !names.insert(e.name.clone()) {
                return Err(Error::Domain(format!("duplicate divisor name {}", e.name)));
            }
        }
        Ok(DivisorSpec { entries })
    }
}
