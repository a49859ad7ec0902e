//! Normal forms for schematic terms and sums.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::One;

use crate::dsl::term::{Constraint, Factor, Idx, SchematicTerm, Total, GLOBAL};

fn shape(i: &Idx) -> (u8, i64) {
    match i {
        Idx::Lit(n) => (0, *n as i64),
        Idx::Var { name, off } if name == GLOBAL => (1, *off as i64),
        Idx::Var { off, .. } => (2, *off as i64),
    }
}

fn sort_key(f: &Factor) -> (String, (u8, i64), (u8, i64)) {
    (f.class_label(), shape(&f.deriv), shape(&f.power))
}

fn rename_idx(i: &Idx, map: &BTreeMap<String, String>) -> Idx {
    match i {
        Idx::Var { name, off } => match map.get(name) {
            Some(n) => Idx::Var {
                name: n.clone(),
                off: *off,
            },
            None => i.clone(),
        },
        l => l.clone(),
    }
}

fn index_number(name: &str) -> u32 {
    name[1..].parse().unwrap_or(u32::MAX)
}

/// Renames constraint variables to `i1, i2, …` in order of appearance.
fn canonical_rename(
    factors: &[Factor],
    c: &Option<Constraint>,
) -> (Vec<Factor>, Option<Constraint>) {
    let Some(c) = c else {
        return (factors.to_vec(), None);
    };
    let mut map = BTreeMap::new();
    let mut next = 1;
    for f in factors {
        for idx in [&f.deriv, &f.power] {
            if let Some(v) = idx.var_name() {
                if v != GLOBAL && !map.contains_key(v) {
                    map.insert(v.to_string(), format!("i{next}"));
                    next += 1;
                }
            }
        }
    }
    let mut rest: Vec<&String> = c.vars.iter().filter(|v| !map.contains_key(*v)).collect();
    rest.sort();
    for v in rest {
        map.insert(v.clone(), format!("i{next}"));
        next += 1;
    }
    let fs = factors
        .iter()
        .map(|f| Factor {
            class: f.class.clone(),
            deriv: rename_idx(&f.deriv, &map),
            power: rename_idx(&f.power, &map),
        })
        .collect();
    let mut vars: Vec<String> = c.vars.iter().map(|v| map[v].clone()).collect();
    vars.sort_by_key(|v| index_number(v));
    (
        fs,
        Some(Constraint {
            vars,
            total: c.total,
        }),
    )
}

/// Eliminates a one-variable constraint by substitution.
fn eliminate_single(t: &mut SchematicTerm) {
    let Some(c) = &t.constraint else { return };
    if c.vars.len() != 1 {
        return;
    }
    let v = c.vars[0].clone();
    let total = c.total;
    let occurrences = t
        .factors
        .iter()
        .flat_map(|f| [&f.deriv, &f.power])
        .filter(|i| i.var_name() == Some(v.as_str()))
        .count();
    if occurrences > 1 {
        return;
    }
    let subst = |i: &Idx| -> Idx {
        match i {
            Idx::Var { name, off } if *name == v => match total {
                Total::Sym(k) => Idx::Var {
                    name: GLOBAL.to_string(),
                    off: k + off,
                },
                Total::Lit(n) => Idx::Lit((n + *off as i64).max(0) as u32),
            },
            other => other.clone(),
        }
    };
    for f in &mut t.factors {
        f.deriv = subst(&f.deriv);
        f.power = subst(&f.power);
    }
    t.constraint = None;
}

/// Idempotent normal form: constants dropped, classes sorted, factors
/// sorted by (class, derivative), indices canonically renamed.
pub fn normalize_term(t: &SchematicTerm) -> SchematicTerm {
    let mut t = t.clone();
    t.scalar = One::one();
    t.coeff.class = Default::default();
    for f in &mut t.factors {
        f.class.sort();
        f.class.dedup();
    }
    eliminate_single(&mut t);
    t.factors
        .retain(|f| !(f.deriv.is_zero() && (f.power == Idx::Lit(0) || f.class == ["one"])));

    // Merge repeated underived literal factors into powers.
    let mut merged: Vec<Factor> = Vec::new();
    for f in std::mem::take(&mut t.factors) {
        if let (Idx::Lit(0), Idx::Lit(p)) = (&f.deriv, &f.power) {
            if let Some(g) = merged
                .iter_mut()
                .find(|g| g.class == f.class && g.deriv.is_zero() && matches!(g.power, Idx::Lit(_)))
            {
                if let Idx::Lit(q) = g.power {
                    g.power = Idx::Lit(q + p);
                }
                continue;
            }
        }
        merged.push(f);
    }
    if merged.is_empty() {
        merged.push(Factor::new("one"));
    }
    if let Some(c) = &t.constraint {
        if c.vars.is_empty() {
            t.constraint = None;
        }
    }
    merged.sort_by_key(sort_key);

    // Tie groups of equal keys: pick the ordering with the least rendering.
    let groups: Vec<Vec<Factor>> = merged
        .iter()
        .chunk_by(|f| sort_key(f))
        .into_iter()
        .map(|(_, g)| g.cloned().collect())
        .collect();
    let perms: Vec<Vec<Vec<Factor>>> = groups
        .iter()
        .map(|g| {
            if g.len() <= 1
                || g.iter()
                    .all(|f| f.deriv.var_name().is_none() && f.power.var_name().is_none())
            {
                vec![g.clone()]
            } else {
                g.iter().cloned().permutations(g.len()).take(120).collect()
            }
        })
        .collect();
    let mut best: Option<(String, SchematicTerm)> = None;
    for choice in perms.iter().multi_cartesian_product().take(5040) {
        let fs: Vec<Factor> = choice.into_iter().flatten().cloned().collect();
        let (fs, c) = canonical_rename(&fs, &t.constraint);
        let cand = SchematicTerm {
            scalar: t.scalar,
            coeff: t.coeff.clone(),
            factors: fs,
            constraint: c,
        };
        let s = cand.to_string();
        if best.as_ref().is_none_or(|(b, _)| s < *b) {
            best = Some((s, cand));
        }
    }
    if perms.is_empty() {
        let (fs, c) = canonical_rename(&merged, &t.constraint);
        return SchematicTerm {
            scalar: t.scalar,
            coeff: t.coeff,
            factors: fs,
            constraint: c,
        };
    }
    best.map(|(_, t)| t).expect("at least one ordering")
}

/// Normalizes each term, removes duplicates, sorts canonically.
pub fn normalize_sum(terms: &[SchematicTerm]) -> Vec<SchematicTerm> {
    let mut out: Vec<SchematicTerm> = terms.iter().map(normalize_term).collect();
    out.sort_by_key(|t| t.to_string());
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse::{parse_raw, parse_term};

    fn nf(s: &str) -> String {
        parse_term(s).unwrap().to_string()
    }

    #[test]
    fn commutative_products() {
        assert_eq!(nf("psi chih"), nf("chih psi"));
    }

    #[test]
    fn constants_dropped() {
        assert_eq!(nf("2 rho"), nf("rho"));
        assert_eq!(nf("-1/2 rho"), "rho");
    }

    #[test]
    fn zero_derivative_collapse() {
        assert_eq!(nf("nab^{0} psi^{1}"), "psi");
    }

    #[test]
    fn idempotent() {
        let t = parse_raw("nab^{j3} Psi nab^{j1} psi^{j2} nab^{j4} (psi, chih) | j1+j2+j3+j4=i")
            .unwrap();
        let once = normalize_term(&t);
        assert_eq!(normalize_term(&once), once);
    }

    #[test]
    fn renaming_is_canonical() {
        assert_eq!(
            nf("nab^{i2} psi^{i1} nab^{i3} rho | i1+i2+i3=i"),
            nf("nab^{i1} psi^{i2} nab^{i3} rho | i3+i2+i1=i")
        );
    }

    #[test]
    fn single_variable_constraint_eliminated() {
        assert_eq!(nf("nab^{i1} rho | i1=i-1"), "nab^{i-1} rho");
    }

    #[test]
    fn repeated_factors_merge() {
        assert_eq!(nf("psi psi"), "psi^{2}");
    }
}
