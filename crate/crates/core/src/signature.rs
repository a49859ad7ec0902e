//! Signature of schematic terms and homogeneity of catalog equations.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::dsl::{
    Direction, EquationCatalog, Factor, Idx, SchematicTerm, Total, TransportEquation, GLOBAL,
};
use crate::error::{Error, Result};
use crate::quantity::{QuantityCatalog, SignatureValue};
use crate::rational::{q, qi, Affine, Q};

/// Signature of a named symbol; classes use their representative value.
fn symbol_signature(name: &str) -> Result<Q> {
    let q = QuantityCatalog::builtin().get(name)?;
    q.s2.map(SignatureValue::value)
        .ok_or_else(|| Error::AmbiguousSignature(name.to_string()))
}

fn class_signature(f: &Factor) -> Result<Q> {
    let sigs = f
        .class
        .iter()
        .map(|n| symbol_signature(n))
        .collect::<Result<Vec<_>>>()?;
    if sigs.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::AmbiguousSignature(f.class_label()));
    }
    Ok(sigs[0])
}

/// Adds `coef·idx` to the running affine form; constraint variables are
/// collected separately for elimination.
fn accumulate(idx: &Idx, coef: Q, acc: &mut Affine, vars: &mut BTreeMap<String, Q>) {
    match idx {
        Idx::Lit(n) => acc.c0 += coef * qi(*n as i64),
        Idx::Var { name, off } => {
            acc.c0 += coef * qi(*off as i64);
            if name == GLOBAL {
                acc.ci += coef;
            } else {
                *vars.entry(name.clone()).or_insert_with(Q::zero) += coef;
            }
        }
    }
}

/// Signature from per-factor base signatures, eliminating the constraint.
fn signature_with(t: &SchematicTerm, base: &[Q]) -> Result<Affine> {
    let mut acc = Affine::constant(Q::zero());
    let mut vars: BTreeMap<String, Q> = BTreeMap::new();
    for (f, s) in t.factors.iter().zip(base) {
        accumulate(&f.power, *s, &mut acc, &mut vars);
        accumulate(&f.deriv, q(1, 2), &mut acc, &mut vars);
    }
    if let Some(c) = &t.constraint {
        let coefs: Vec<Q> = c
            .vars
            .iter()
            .map(|v| vars.get(v).copied().unwrap_or_else(Q::zero))
            .collect();
        if coefs.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::AmbiguousSignature(format!("{t} (split-dependent)")));
        }
        let k = coefs.first().copied().unwrap_or_else(Q::zero);
        match c.total {
            Total::Sym(off) => {
                acc.ci += k;
                acc.c0 += k * qi(off as i64);
            }
            Total::Lit(n) => acc.c0 += k * qi(n),
        }
    }
    Ok(acc)
}

/// Signature of a term as an affine function of the commutation count `i`.
/// `ψ` counts as ½; `Ψ` and mixed alternative sets are ambiguous.
pub fn term_signature(t: &SchematicTerm) -> Result<Affine> {
    let base = t
        .factors
        .iter()
        .map(class_signature)
        .collect::<Result<Vec<_>>>()?;
    signature_with(t, &base)
}

/// Signature at a literal commutation count.
pub fn term_signature_at(t: &SchematicTerm, i: i64) -> Result<SignatureValue> {
    let a = term_signature(t)?;
    Ok(SignatureValue::new(a.at(i)).expect("half-integer arithmetic"))
}

/// All member-by-member signatures of a term: every class or alternative
/// factor ranges over its concrete members independently.
pub fn member_signatures(t: &SchematicTerm) -> Result<Vec<(Vec<String>, Affine)>> {
    let cat = QuantityCatalog::builtin();
    let options: Vec<Vec<(String, Q)>> = t
        .factors
        .iter()
        .map(|f| {
            let mut leaves: Vec<String> = f.class.iter().flat_map(|n| cat.leaves(n)).collect();
            leaves.sort();
            leaves.dedup();
            leaves
                .into_iter()
                .map(|l| symbol_signature(&l).map(|s| (l, s)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut pick = vec![0usize; options.len()];
    loop {
        let names: Vec<String> = pick
            .iter()
            .zip(&options)
            .map(|(k, o)| o[*k].0.clone())
            .collect();
        let sigs: Vec<Q> = pick.iter().zip(&options).map(|(k, o)| o[*k].1).collect();
        out.push((names, signature_with(t, &sigs)?));
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == pick.len() {
                return Ok(out);
            }
            pick[d] += 1;
            if pick[d] < options[d].len() {
                break;
            }
            pick[d] = 0;
            d += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TermSignature {
    pub term: String,
    pub signature: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EquationVerdict {
    pub name: String,
    pub verdict: String,
    pub lhs_signature: String,
    pub target: String,
    pub term_signatures: Vec<TermSignature>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<EquationVerdict>,
}

impl EquationVerdict {
    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }
}

fn fmt_affine(a: &Affine) -> String {
    a.to_string()
}

/// PASS iff every right-hand term, for every member choice, has signature
/// `s₂(lhs) + 1` (`∇₃`) or `s₂(lhs)` (`∇₄`, elliptic).
pub fn check_homogeneous(e: &TransportEquation) -> EquationVerdict {
    check_terms(&e.name, e.direction, &e.lhs, e.lambda0, &e.rhs)
}

/// Homogeneity of an arbitrary left side against a list of terms; used for
/// catalog entries and for commuted equations (where `i` may appear).
pub fn check_terms(
    name: &str,
    direction: Direction,
    lhs_term: &SchematicTerm,
    lambda0: Q,
    rhs: &[SchematicTerm],
) -> EquationVerdict {
    let lhs = match member_signatures(lhs_term) {
        Ok(v) if v.iter().all(|(_, s)| *s == v[0].1) => Ok(v[0].1),
        Ok(_) => Err(Error::AmbiguousSignature(lhs_term.to_string())),
        Err(err) => Err(err),
    };
    let mut terms = Vec::new();
    let (lhs_sig, target) = match lhs {
        Ok(s) => {
            let shift = if direction == Direction::Nab3 {
                qi(1)
            } else {
                Q::zero()
            };
            (s, Some(s + Affine::constant(shift)))
        }
        Err(err) => (Affine::constant(Q::zero()), {
            terms.push(TermSignature {
                term: lhs_term.to_string(),
                signature: err.to_string(),
                pass: false,
            });
            None
        }),
    };
    let mut all_pass = target.is_some();
    if let (Some(tg), false) = (target, lambda0.is_zero()) {
        let s = symbol_signature("trchib").map(|t| lhs_sig + Affine::constant(t));
        let pass = s.as_ref().map(|s| *s == tg).unwrap_or(false);
        all_pass &= pass;
        terms.push(TermSignature {
            term: format!("{} trchib {}", crate::rational::fmt_q(&lambda0), lhs_term),
            signature: s
                .map(|s| fmt_affine(&s))
                .unwrap_or_else(|err| err.to_string()),
            pass,
        });
    }
    for t in rhs {
        let (sig, pass) = match member_signatures(t) {
            Ok(v) => {
                let bad = v.iter().find(|(_, s)| Some(*s) != target);
                match bad {
                    None => (fmt_affine(&v[0].1), true),
                    Some((names, s)) => (
                        format!("{} at ({})", fmt_affine(s), names.join(", ")),
                        false,
                    ),
                }
            }
            Err(err) => (err.to_string(), false),
        };
        all_pass &= pass;
        terms.push(TermSignature {
            term: t.to_string(),
            signature: sig,
            pass,
        });
    }
    EquationVerdict {
        name: name.to_string(),
        verdict: if all_pass { "PASS" } else { "FAIL" }.to_string(),
        lhs_signature: fmt_affine(&lhs_sig),
        target: target
            .map(|t| fmt_affine(&t))
            .unwrap_or_else(|| "-".to_string()),
        term_signatures: terms,
        variants: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogReport {
    pub schema_version: u32,
    pub entries: Vec<EquationVerdict>,
    pub passed: usize,
    pub failed: usize,
}

impl CatalogReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Checks every top-level entry; variants are nested under their parents and
/// a parent passes only if its variants do.
pub fn check_catalog(c: &EquationCatalog) -> CatalogReport {
    let primaries: Vec<&TransportEquation> = c.primary().collect();
    let entries: Vec<EquationVerdict> = primaries
        .par_iter()
        .map(|e| {
            let mut v = check_homogeneous(e);
            v.variants = c.variants_of(&e.name).map(check_homogeneous).collect();
            if v.variants.iter().any(|x| !x.pass()) {
                v.verdict = "FAIL".to_string();
            }
            v
        })
        .collect();
    let passed = entries.iter().filter(|v| v.pass()).count();
    CatalogReport {
        schema_version: crate::report::SCHEMA_VERSION,
        failed: entries.len() - passed,
        passed,
        entries,
    }
}

/// Replaces the first factor of the first right-hand term by a quantity of
/// different signature (`rho` when the factor has signature 0, else `alpha`).
pub fn mutate_first_factor(e: &TransportEquation) -> Option<TransportEquation> {
    let mut m = e.clone();
    let t = m.rhs.first_mut()?;
    let f = t.factors.first_mut()?;
    let s = symbol_signature(&f.class[0]).ok()?;
    let repl = if s.is_zero() { "rho" } else { "alpha" };
    f.class = vec![repl.to_string()];
    m.name = format!("{}-mutated", e.name);
    Some(m)
}
