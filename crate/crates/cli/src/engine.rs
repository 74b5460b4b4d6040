//! Scenario execution: builds rings, derivations and charts from a scenario
//! document, runs the steps in declaration order, and checks expectations
//! exactly (polynomial and derivation equality after canonicalization,
//! rational equality, string equality).

use std::collections::BTreeMap;
use std::time::Instant;

use num::{One, ToPrimitive};

use folquot::ledger::{self, render_rat};
use folquot::quotient::{self, LiftOutcome, MPrimary};
use folquot::ring::{Ctx, RingCtx};
use folquot::{
    parse_poly_any, standard_chart, weighted_chart, ChartMap, Derivation, DivisorEntry,
    DivisorSpec, Poly, Rat,
};

use crate::expr::{self, Env};
use crate::report::{Report, Row, Status};
use crate::scenario::{
    ChartDecl, ChartKind, DivisorDecl, ScenarioDoc, StepDecl, VarDecl, WeightDecl,
};
use crate::value::Value;
use crate::CliError;

fn schema_err(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn step_err(id: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Step { id: id.to_string(), message: msg.to_string() }
}

/// Expands variable declarations into concrete names.
fn expand_vars(decls: &[VarDecl], env: &Env) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for d in decls {
        match d {
            VarDecl::Plain(name) => out.push(expr::expand(name, env)?),
            VarDecl::Family { family, from, to } => {
                let lo = match from {
                    Some(f) => expr::eval_int(&expr::expand(f, env)?, env)?,
                    None => 1,
                };
                let hi = expr::eval_int(&expr::expand(to, env)?, env)?;
                for i in lo..=hi {
                    out.push(format!("{family}{i}"));
                }
            }
        }
    }
    Ok(out)
}

fn expand_weights(decls: &[WeightDecl], env: &Env) -> Result<Vec<u64>, CliError> {
    let mut out = Vec::new();
    for d in decls {
        match d {
            WeightDecl::Plain(v) => {
                let w = expr::eval_int(&expr::expand(v, env)?, env)?;
                out.push(u64::try_from(w).map_err(|_| schema_err("negative weight"))?);
            }
            WeightDecl::Run { value, count } => {
                let w = expr::eval_int(&expr::expand(value, env)?, env)?;
                let w = u64::try_from(w).map_err(|_| schema_err("negative weight"))?;
                let c = expr::eval_int(&expr::expand(count, env)?, env)?;
                for _ in 0..c {
                    out.push(w);
                }
            }
        }
    }
    Ok(out)
}

struct Runner {
    env: Env,
    p: u64,
    rings: BTreeMap<String, Ctx>,
    ns: BTreeMap<String, Value>,
}

impl Runner {
    fn ring(&self, name: &str) -> Result<&Ctx, CliError> {
        self.rings
            .get(name)
            .ok_or_else(|| schema_err(format!("unknown ring `{name}`")))
    }

    fn lookup(&self, path: &str) -> Result<&Value, CliError> {
        let parts: Vec<&str> = path.split('.').collect();
        let root = self
            .ns
            .get(parts[0])
            .ok_or_else(|| schema_err(format!("unknown reference `{}`", parts[0])))?;
        root.field(&parts[1..])
            .ok_or_else(|| schema_err(format!("no field `{}` in `{}`", parts[1..].join("."), parts[0])))
    }

    fn deriv(&self, path: &str) -> Result<&Derivation, CliError> {
        match self.lookup(path)? {
            Value::Deriv(d) => Ok(d),
            other => Err(schema_err(format!("`{path}` is a {}, expected a derivation", other.type_name()))),
        }
    }

    fn chart(&self, path: &str) -> Result<&ChartMap, CliError> {
        match self.lookup(path)? {
            Value::Chart(c) => Ok(c),
            other => Err(schema_err(format!("`{path}` is a {}, expected a chart", other.type_name()))),
        }
    }

    fn define(&mut self, id: &str, v: Value) -> Result<(), CliError> {
        if self.ns.contains_key(id) {
            return Err(schema_err(format!("duplicate id `{id}`")));
        }
        self.ns.insert(id.to_string(), v);
        Ok(())
    }

    /// Rational argument: `@ref` dereferences a step value, anything else is
    /// an expression over the parameters.
    fn rat_arg(&self, s: &str) -> Result<Rat, CliError> {
        if let Some(path) = s.strip_prefix('@') {
            match self.lookup(path)? {
                Value::Rat(r) => Ok(r.clone()),
                other => Err(schema_err(format!("`{path}` is a {}, expected a rational", other.type_name()))),
            }
        } else {
            expr::eval(&expr::expand(s, &self.env)?, &self.env)
        }
    }

    fn int_arg(&self, s: &str) -> Result<i64, CliError> {
        let r = self.rat_arg(s)?;
        if !r.denom().is_one() {
            return Err(schema_err(format!("`{s}` is not an integer")));
        }
        r.numer().to_i64().ok_or_else(|| schema_err(format!("`{s}` out of range")))
    }

    fn int_param(&self, field: &Option<String>, name: &str) -> Result<i64, CliError> {
        match field {
            Some(s) => self.int_arg(s),
            None => {
                let v = self
                    .env
                    .get(name)
                    .ok_or_else(|| schema_err(format!("parameter `{name}` is not declared")))?;
                v.to_integer()
                    .to_i64()
                    .ok_or_else(|| schema_err(format!("parameter `{name}` out of range")))
            }
        }
    }

    fn poly_arg(&self, s: &str, ctx: &Ctx) -> Result<Poly, CliError> {
        let text = expr::expand(s, &self.env)?;
        parse_poly_any(ctx, &text).map_err(|e| schema_err(format!("in `{text}`: {e}")))
    }

    fn var_index(&self, ctx: &Ctx, name: &str) -> Result<usize, CliError> {
        let name = expr::expand(name, &self.env)?;
        ctx.var_index(&name)
            .ok_or_else(|| schema_err(format!("unknown variable `{name}` in {ctx}")))
    }

    fn build_chart(&mut self, decl: &ChartDecl) -> Result<(), CliError> {
        let chart = match decl.kind {
            ChartKind::Compose => {
                if decl.charts.len() < 2 {
                    return Err(schema_err("compose needs at least two charts"));
                }
                let mut acc = self.chart(&decl.charts[0])?.clone();
                for id in &decl.charts[1..] {
                    let next = self.chart(id)?;
                    acc = acc.compose(next).map_err(|e| step_err(&decl.id, e))?;
                }
                acc
            }
            kind => {
                let source_ring = decl.source.as_deref().unwrap_or("main");
                let src = self.ring(source_ring)?.clone();
                let tvars = expand_vars(&decl.target_vars, &self.env)?;
                let trefs: Vec<&str> = tvars.iter().map(|s| s.as_str()).collect();
                let tres: Vec<&str> = decl.target_reserved.iter().map(|s| s.as_str()).collect();
                let dst = RingCtx::new(self.p, &trefs, &tres)
                    .map_err(|e| step_err(&decl.id, e))?;
                match kind {
                    ChartKind::Standard | ChartKind::Weighted => {
                        let center = expand_vars(&decl.center, &self.env)?;
                        let crefs: Vec<&str> = center.iter().map(|s| s.as_str()).collect();
                        let chart_var = decl
                            .chart
                            .as_deref()
                            .ok_or_else(|| schema_err("blow-up chart needs a `chart` variable"))?;
                        let chart_var = expr::expand(chart_var, &self.env)?;
                        if kind == ChartKind::Standard {
                            standard_chart(&src, &dst, &crefs, &chart_var)
                                .map_err(|e| step_err(&decl.id, e))?
                        } else {
                            let weights = expand_weights(&decl.weights, &self.env)?;
                            weighted_chart(&src, &dst, &crefs, &weights, &chart_var)
                                .map_err(|e| step_err(&decl.id, e))?
                        }
                    }
                    ChartKind::Explicit => {
                        let mut images: BTreeMap<usize, Poly> = BTreeMap::new();
                        for entry in &decl.map {
                            let assign = |images: &mut BTreeMap<usize, Poly>,
                                          env: &Env|
                             -> Result<(), CliError> {
                                let var = expr::expand(&entry.var, env)?;
                                let j = src.var_index(&var).ok_or_else(|| {
                                    schema_err(format!("unknown source variable `{var}`"))
                                })?;
                                let text = expr::expand(&entry.image, env)?;
                                let im = parse_poly_any(&dst, &text)
                                    .map_err(|e| schema_err(format!("in `{text}`: {e}")))?;
                                if images.insert(j, im).is_some() {
                                    return Err(schema_err(format!("duplicate image for `{var}`")));
                                }
                                Ok(())
                            };
                            match &entry.r#for {
                                None => assign(&mut images, &self.env)?,
                                Some(range) => {
                                    let spec = expr::expand(range, &self.env)?;
                                    let (var, lo, hi) = parse_for(&spec, &self.env)?;
                                    for k in lo..=hi {
                                        let mut env2 = self.env.clone();
                                        env2.insert(var.clone(), expr::rat_int(k));
                                        assign(&mut images, &env2)?;
                                    }
                                }
                            }
                        }
                        let forward: Vec<Poly> = (0..src.nvars())
                            .map(|j| {
                                images.remove(&j).unwrap_or_else(|| Poly::var(&dst, j))
                            })
                            .collect();
                        ChartMap::from_images(&src, &dst, forward)
                            .map_err(|e| step_err(&decl.id, e))?
                    }
                    ChartKind::Compose => unreachable!(),
                }
            }
        };
        self.rings.insert(decl.id.clone(), chart.target().clone());
        self.define(&decl.id, Value::Chart(chart))
    }

    fn divisors(&self, decls: &[DivisorDecl], ctx: &Ctx) -> Result<DivisorSpec, CliError> {
        let mut entries = Vec::new();
        for d in decls {
            entries.push(DivisorEntry {
                name: d.name.clone(),
                coeff: self.rat_arg(&d.coeff)?,
                poly: self.poly_arg(&d.poly, ctx)?,
            });
        }
        DivisorSpec::new(entries).map_err(|e| schema_err(e.to_string()))
    }

    fn exec(&mut self, step: &StepDecl) -> Result<Value, CliError> {
        let id = step.id();
        let fail = |e: folquot::Error| step_err(id, e);
        Ok(match step {
            StepDecl::Pullback { derivation, chart, .. } => {
                let d = self.deriv(derivation)?;
                let c = self.chart(chart)?;
                Value::Deriv(c.pullback(d).map_err(fail)?)
            }
            StepDecl::Saturate { derivation, var, .. } => {
                let d = self.deriv(derivation)?.clone();
                let e = self.var_index(d.ctx(), var)?;
                let s = d.saturate(e);
                let mut rec = BTreeMap::new();
                rec.insert("k".to_string(), Value::int(s.exponent));
                rec.insert("a_fol".to_string(), Value::int(-s.exponent));
                rec.insert("derivation".to_string(), Value::Deriv(s.derivation));
                Value::Record(rec)
            }
            StepDecl::PPower { derivation, .. } => {
                Value::Deriv(self.deriv(derivation)?.p_power())
            }
            StepDecl::IsPClosed { derivation, .. } => {
                Value::Poly(self.deriv(derivation)?.is_p_closed().map_err(fail)?)
            }
            StepDecl::Multiplicativity { derivation, units, .. } => {
                let d = self.deriv(derivation)?.clone();
                let units: Vec<Poly> = units
                    .iter()
                    .map(|u| self.poly_arg(u, d.ctx()))
                    .collect::<Result<_, _>>()?;
                let v = d.multiplicativity(&units).map_err(fail)?;
                Value::Str(v.to_string())
            }
            StepDecl::IsInvariant { derivation, var, .. } => {
                let d = self.deriv(derivation)?.clone();
                let e = self.var_index(d.ctx(), var)?;
                Value::Bool(d.is_invariant_divisor(e))
            }
            StepDecl::Apply { derivation, poly, .. } => {
                let d = self.deriv(derivation)?.clone();
                let f = self.poly_arg(poly, d.ctx())?;
                Value::Poly(d.apply(&f))
            }
            StepDecl::Bracket { d1, d2, .. } => {
                let a = self.deriv(d1)?.clone();
                let b = self.deriv(d2)?;
                Value::Deriv(a.bracket(b))
            }
            StepDecl::Poly { value, ring, .. } => {
                let ring = ring.as_deref().unwrap_or("main");
                let ctx = self.ring(ring)?.clone();
                Value::Poly(self.poly_arg(value, &ctx)?)
            }
            StepDecl::Jacobian { chart, .. } => {
                Value::Poly(self.chart(chart)?.jacobian_det().map_err(fail)?)
            }
            StepDecl::ChartDiscrepancy { chart, divisors, exceptional, .. } => {
                let c = self.chart(chart)?.clone();
                let spec = self.divisors(divisors, c.source())?;
                let e = self.var_index(c.target(), exceptional)?;
                Value::Rat(c.chart_discrepancy(&spec, e).map_err(fail)?)
            }
            StepDecl::StrictTransform { chart, poly, exceptional, .. } => {
                let c = self.chart(chart)?.clone();
                let f = self.poly_arg(poly, c.source())?;
                let e = self.var_index(c.target(), exceptional)?;
                let (strict, mult) = c.strict_transform(&f, e).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert("poly".to_string(), Value::Poly(strict));
                rec.insert("mult".to_string(), Value::int(mult));
                Value::Record(rec)
            }
            StepDecl::Kernel { derivation, dmax, .. } => {
                let d = self.deriv(derivation)?.clone();
                let dmax = self.int_param(dmax, "dmax")?;
                let k = quotient::truncated_kernel(&d, dmax).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert(
                    "dims".to_string(),
                    Value::List(k.dims.iter().map(|&d| Value::int(d as i64)).collect()),
                );
                rec.insert("dim".to_string(), Value::int(k.basis.len() as i64));
                rec.insert(
                    "basis".to_string(),
                    Value::List(k.basis.into_iter().map(Value::Poly).collect()),
                );
                Value::Record(rec)
            }
            StepDecl::HilbertMatch { derivation, gens, dmax, .. } => {
                let d = self.deriv(derivation)?.clone();
                let dmax = self.int_param(dmax, "dmax")?;
                let gens: Vec<Poly> = gens
                    .iter()
                    .map(|g| self.poly_arg(g, d.ctx()))
                    .collect::<Result<_, _>>()?;
                let table = quotient::subalgebra_hilbert_match(&gens, &d, dmax).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert("all".to_string(), Value::Bool(table.iter().all(|&b| b)));
                rec.insert(
                    "per_degree".to_string(),
                    Value::List(table.into_iter().map(Value::Bool).collect()),
                );
                Value::Record(rec)
            }
            StepDecl::Lift { derivation, target, param, dmax, .. } => {
                let d = self.deriv(derivation)?.clone();
                let g = self.poly_arg(target, d.ctx())?;
                let t = self.var_index(d.ctx(), param)?;
                let dmax = self.int_param(dmax, "dmax")?;
                let out = quotient::lift_invariant(&d, &g, t, dmax).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert("bound".to_string(), Value::int(dmax));
                match out {
                    LiftOutcome::Solved(f) => {
                        rec.insert("status".to_string(), Value::Str("solved".into()));
                        rec.insert("witness".to_string(), Value::Poly(f));
                    }
                    LiftOutcome::NoSolutionUpTo(b) => {
                        rec.insert("status".to_string(), Value::Str("no_solution_up_to".into()));
                        rec.insert("bound".to_string(), Value::int(b));
                    }
                }
                Value::Record(rec)
            }
            StepDecl::Mprimary { derivation, vars, .. } => {
                let d = self.deriv(derivation)?.clone();
                let names = expand_vars(vars, &self.env)?;
                let idx: Vec<usize> = names
                    .iter()
                    .map(|n| self.var_index(d.ctx(), n))
                    .collect::<Result<_, _>>()?;
                let v = quotient::mprimary_image_check(&d, &idx);
                Value::Str(match v {
                    MPrimary::True => "true".into(),
                    MPrimary::Inconclusive => "inconclusive".into(),
                })
            }
            StepDecl::QuotientDiscrepancy { a_pair, a_fol, invariant, .. } => {
                let ap = self.rat_arg(a_pair)?;
                let af = self.rat_arg(a_fol)?;
                Value::Rat(
                    ledger::quotient_discrepancy(&ap, &af, *invariant, self.p).map_err(fail)?,
                )
            }
            StepDecl::ImageCoefficient { coeff, invariant, .. } => {
                let c = self.rat_arg(coeff)?;
                Value::Rat(ledger::image_divisor_coefficient(&c, *invariant, self.p).map_err(fail)?)
            }
            StepDecl::Classify { n, .. } => {
                let n = self.int_param(n, "n")?;
                let v = ledger::classify_quadratic_quotient(n, self.p).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert("class".to_string(), Value::Str(v.class.to_string()));
                rec.insert("witness".to_string(), Value::Str(v.witness));
                Value::Record(rec)
            }
            StepDecl::FamilyCascade { n, m, .. } => {
                let n = self.int_param(n, "n")?;
                let m = self.int_param(m, "m")?;
                let c = ledger::family_cascade(n, self.p, m).map_err(fail)?;
                let mut rec = BTreeMap::new();
                rec.insert(
                    "a_pair".to_string(),
                    Value::List(c.records.iter().map(|r| Value::Rat(r.a_pair.clone())).collect()),
                );
                rec.insert(
                    "a_fol".to_string(),
                    Value::List(c.records.iter().map(|r| Value::Rat(r.a_fol.clone())).collect()),
                );
                rec.insert(
                    "a_quotient".to_string(),
                    Value::List(
                        c.records.iter().map(|r| Value::Rat(r.a_quotient.clone())).collect(),
                    ),
                );
                rec.insert("lc".to_string(), Value::Bool(c.lc));
                rec.insert("criterion".to_string(), Value::Str(c.criterion));
                Value::Record(rec)
            }
            StepDecl::Char3Cascade { r, .. } => {
                let r = match r {
                    Some(s) => self.int_arg(s)?,
                    None => 0,
                };
                let r = u32::try_from(r).map_err(|_| schema_err("negative round count"))?;
                let c = ledger::char3_cascade(self.p, r).map_err(fail)?;
                let evens: Vec<_> = c.records.iter().step_by(2).collect();
                let odds: Vec<_> = c.records.iter().skip(1).step_by(2).collect();
                let mut rec = BTreeMap::new();
                rec.insert(
                    "e_pair".to_string(),
                    Value::List(evens.iter().map(|r| Value::Rat(r.a_pair.clone())).collect()),
                );
                rec.insert(
                    "f_pair".to_string(),
                    Value::List(odds.iter().map(|r| Value::Rat(r.a_pair.clone())).collect()),
                );
                rec.insert(
                    "e_fol".to_string(),
                    Value::List(evens.iter().map(|r| Value::Rat(r.a_fol.clone())).collect()),
                );
                rec.insert(
                    "f_fol".to_string(),
                    Value::List(odds.iter().map(|r| Value::Rat(r.a_fol.clone())).collect()),
                );
                rec.insert(
                    "e_quotient".to_string(),
                    Value::List(evens.iter().map(|r| Value::Rat(r.a_quotient.clone())).collect()),
                );
                rec.insert(
                    "f_quotient".to_string(),
                    Value::List(odds.iter().map(|r| Value::Rat(r.a_quotient.clone())).collect()),
                );
                rec.insert("lc".to_string(), Value::Bool(c.lc));
                rec.insert("criterion".to_string(), Value::Str(c.criterion));
                Value::Record(rec)
            }
            StepDecl::StableVolume { n, r, s, .. } => {
                let n = self.int_arg(n)?;
                let r = self.int_arg(r)?;
                let s = self.int_arg(s)?;
                let v = ledger::stable_volume(n, self.p, r, s).map_err(fail)?;
                let ample = ledger::stable_volume_ample(n, self.p, r, s);
                let mut rec = BTreeMap::new();
                rec.insert("value".to_string(), Value::Rat(v));
                rec.insert("ample".to_string(), Value::Bool(ample));
                Value::Record(rec)
            }
            StepDecl::VolumeMonotone { n, samples, .. } => {
                let n = self.int_arg(n)?;
                let count = self.int_arg(samples)?;
                // ratios (2k+1)/2 for k = 1..count: strictly increasing and
                // inside the region where the volume grows
                let mut prev: Option<Rat> = None;
                let mut ok = true;
                for k in 1..=count {
                    let v = ledger::stable_volume(n, self.p, 2 * k + 1, 2).map_err(fail)?;
                    if let Some(pv) = &prev {
                        if &v <= pv {
                            ok = false;
                        }
                    }
                    prev = Some(v);
                }
                Value::Bool(ok)
            }
            StepDecl::FpPow { base, exp, .. } => {
                let b = self.int_arg(base)?;
                let e = self.int_arg(exp)?;
                let e = u64::try_from(e).map_err(|_| schema_err("negative exponent in fp_pow"))?;
                let b = b.rem_euclid(self.p as i64) as u64;
                Value::int(folquot::fp::pow(b, e, self.p) as i64)
            }
            StepDecl::IsInteger { value, .. } => {
                let r = self.rat_arg(value)?;
                Value::Bool(r.denom().is_one())
            }
        })
    }

    /// Compares a computed value against a template-expanded expectation.
    /// Returns (expected rendering, pass).
    fn compare(&self, computed: &Value, expected: &str) -> Result<(String, bool), CliError> {
        match computed {
            Value::Rat(r) => {
                let want = self.rat_arg(expected)?;
                Ok((render_rat(&want), *r == want))
            }
            Value::Bool(b) => {
                let text = expr::expand(expected, &self.env)?;
                let want = match text.trim() {
                    "true" => true,
                    "false" => false,
                    other => return Err(schema_err(format!("expected boolean, got `{other}`"))),
                };
                Ok((want.to_string(), *b == want))
            }
            Value::Str(s) => {
                let want = expr::expand(expected, &self.env)?.trim().to_string();
                Ok((want.clone(), s == &want))
            }
            Value::Poly(p) => {
                let text = expr::expand(expected, &self.env)?;
                let want = parse_poly_any(p.ctx(), &text)
                    .map_err(|e| schema_err(format!("expected poly `{text}`: {e}")))?;
                Ok((want.to_string(), *p == want))
            }
            Value::Deriv(d) => {
                let text = expr::expand(expected, &self.env)?;
                let want = Derivation::parse(d.ctx(), &text)
                    .map_err(|e| schema_err(format!("expected derivation `{text}`: {e}")))?;
                Ok((want.to_string(), *d == want))
            }
            Value::List(items) => {
                let Some(parts) = expr::expand_list(expected, &self.env)? else {
                    return Err(schema_err(
                        "list-valued steps need a $list(..) expected value".to_string(),
                    ));
                };
                if parts.len() != items.len() {
                    return Ok((format!("[{}]", parts.join(", ")), false));
                }
                let mut renders = Vec::new();
                let mut all = true;
                for (item, part) in items.iter().zip(&parts) {
                    let (r, ok) = self.compare(item, part)?;
                    renders.push(r);
                    all &= ok;
                }
                Ok((format!("[{}]", renders.join(", ")), all))
            }
            Value::Chart(_) | Value::Record(_) => Err(schema_err(
                "expectations must target a field of this step".to_string(),
            )),
        }
    }
}

fn parse_for(spec: &str, env: &Env) -> Result<(String, i64, i64), CliError> {
    let (var, bounds) = spec
        .split_once('=')
        .ok_or_else(|| schema_err(format!("range `{spec}` must look like i=a..b")))?;
    let (lo, hi) = bounds
        .split_once("..")
        .ok_or_else(|| schema_err(format!("range `{spec}` must look like i=a..b")))?;
    Ok((
        var.trim().to_string(),
        expr::eval_int(lo.trim(), env)?,
        expr::eval_int(hi.trim(), env)?,
    ))
}

/// Runs a parsed scenario with parameter overrides. Overrides may only touch
/// `p`, `dmax` and declared parameters.
pub fn run_scenario(
    doc: &ScenarioDoc,
    overrides: &BTreeMap<String, String>,
) -> Result<Report, CliError> {
    for key in overrides.keys() {
        let declared = key == "p"
            || key == "dmax"
            || doc.params.iter().any(|p| &p.name == key);
        if !declared {
            return Err(schema_err(format!(
                "override `{key}` does not name a declared parameter"
            )));
        }
    }

    let mut env: Env = Env::new();
    let p_text = overrides.get("p").cloned().unwrap_or_else(|| doc.p.clone());
    let p_val = expr::eval_int(&p_text, &env)?;
    let p = u64::try_from(p_val).map_err(|_| schema_err("characteristic must be positive"))?;
    env.insert("p".to_string(), expr::rat_int(p_val));
    for param in &doc.params {
        let text = overrides.get(&param.name).cloned().unwrap_or_else(|| param.value.clone());
        let v = expr::eval(&expr::expand(&text, &env)?, &env)?;
        env.insert(param.name.clone(), v);
    }
    if !env.contains_key("dmax") {
        let text = overrides.get("dmax").cloned().unwrap_or_else(|| "6".to_string());
        let v = expr::eval_int(&text, &env)?;
        env.insert("dmax".to_string(), expr::rat_int(v));
    } else if let Some(text) = overrides.get("dmax") {
        let v = expr::eval_int(text, &env)?;
        env.insert("dmax".to_string(), expr::rat_int(v));
    }

    let vars = expand_vars(&doc.vars, &env)?;
    let vrefs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    let rrefs: Vec<&str> = doc.reserved.iter().map(|s| s.as_str()).collect();
    let main = RingCtx::new(p, &vrefs, &rrefs).map_err(|e| schema_err(e.to_string()))?;

    let mut runner = Runner { env, p, rings: BTreeMap::new(), ns: BTreeMap::new() };
    runner.rings.insert("main".to_string(), main.clone());

    for d in &doc.derivations {
        let text = expr::expand(&d.expr, &runner.env)?;
        let deriv = Derivation::parse(&main, &text)
            .map_err(|e| schema_err(format!("derivation `{}`: {e}", d.name)))?;
        runner.define(&d.name, Value::Deriv(deriv))?;
    }
    for c in &doc.charts {
        runner.build_chart(c)?;
    }

    let mut report = Report {
        schema: 1,
        scenario: doc.name.clone(),
        source: doc.source.clone(),
        params: runner
            .env
            .iter()
            .map(|(k, v)| (k.clone(), render_rat(v)))
            .collect(),
        rows: Vec::new(),
        overall: String::new(),
    };

    let mut step_rows: Vec<Row> = Vec::new();
    for step in &doc.steps {
        let start = Instant::now();
        let value = runner.exec(step)?;
        let micros = start.elapsed().as_micros();
        let status = if value.render() == "inconclusive" {
            Status::Inconclusive
        } else {
            Status::Info
        };
        step_rows.push(Row {
            step: step.id().to_string(),
            op: step.op_name().to_string(),
            value: value.render(),
            expected: None,
            status,
            micros,
        });
        runner.define(step.id(), value)?;
    }

    // Expectations, grouped after their step's row. An expectation that
    // targets the bare step id merges into the step row.
    for (i, step) in doc.steps.iter().enumerate() {
        let mut row = step_rows[i].clone();
        let mut extra: Vec<Row> = Vec::new();
        for exp in doc.expect.iter().filter(|e| e.step.split('.').next() == Some(step.id())) {
            if let Some(cond) = &exp.when {
                if !expr::eval_truthy(&expr::expand(cond, &runner.env)?, &runner.env)? {
                    extra.push(Row {
                        step: exp.step.clone(),
                        op: step.op_name().to_string(),
                        value: String::new(),
                        expected: Some(exp.value.clone()),
                        status: Status::Skipped,
                        micros: 0,
                    });
                    continue;
                }
            }
            let computed = runner.lookup(&exp.step)?;
            let (expected, ok) = runner.compare(computed, &exp.value)?;
            let status = if ok { Status::Pass } else { Status::Fail };
            if exp.step == step.id() {
                row.expected = Some(expected);
                row.status = status;
            } else {
                extra.push(Row {
                    step: exp.step.clone(),
                    op: step.op_name().to_string(),
                    value: computed.render(),
                    expected: Some(expected),
                    status,
                    micros: 0,
                });
            }
        }
        report.rows.push(row);
        report.rows.extend(extra);
    }
    for exp in &doc.expect {
        let root = exp.step.split('.').next().unwrap_or_default();
        if !doc.steps.iter().any(|s| s.id() == root) {
            return Err(schema_err(format!("expectation targets unknown step `{root}`")));
        }
    }

    report.finalize();
    Ok(report)
}
