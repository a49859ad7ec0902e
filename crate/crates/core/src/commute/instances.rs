//! Literal expansion of schematic terms and instance-level coverage.
//!
//! For a literal commutation count, a schematic term denotes a finite set of
//! products of differentiated atoms. Two schematic sums are equivalent when
//! every instance of one is covered by an instance of the other, where an
//! atom is covered by any atom of equal derivative order whose class
//! contains it.

use std::collections::{BTreeSet, HashMap};

use crate::dsl::{SchematicTerm, Total};
use crate::quantity::QuantityCatalog;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub sym: String,
    pub deriv: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub coeff: String,
    pub atoms: Vec<Atom>,
}

impl std::fmt::Display for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                if a.deriv == 0 {
                    a.sym.clone()
                } else {
                    format!("nab^{{{}}} {}", a.deriv, a.sym)
                }
            })
            .collect();
        if self.coeff != "1" {
            write!(f, "{} ", self.coeff)?;
        }
        write!(
            f,
            "{}",
            if parts.is_empty() {
                "one".to_string()
            } else {
                parts.join(" ")
            }
        )
    }
}

/// All nonnegative integer vectors of length `n` summing to `total`.
pub fn compositions(n: usize, total: i64) -> Vec<Vec<i64>> {
    if total < 0 {
        return Vec::new();
    }
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Multisets of `p` (member, deriv) pairs with derivatives summing to `d`.
fn copies(members: &[String], p: u32, d: u32) -> Vec<Vec<Atom>> {
    let opts: Vec<(usize, u32)> = (0..members.len())
        .flat_map(|m| (0..=d).map(move |k| (m, k)))
        .collect();
    let mut out = Vec::new();
    fn rec(
        opts: &[(usize, u32)],
        start: usize,
        left: u32,
        remaining: u32,
        cur: &mut Vec<(usize, u32)>,
        out: &mut Vec<Vec<(usize, u32)>>,
    ) {
        if left == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in start..opts.len() {
            let (_, dk) = opts[k];
            if dk > remaining {
                continue;
            }
            cur.push(opts[k]);
            rec(opts, k, left - 1, remaining - dk, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(&opts, 0, p, d, &mut Vec::new(), &mut raw);
    for r in raw {
        out.push(
            r.into_iter()
                .map(|(m, k)| Atom {
                    sym: members[m].clone(),
                    deriv: k,
                })
                .collect(),
        );
    }
    out
}

/// Atom rewrites: a differentiated `trchib` equals a differentiated `trchibt`.
fn rewrite(a: Atom) -> Option<Atom> {
    match (a.sym.as_str(), a.deriv) {
        ("one", 0) | ("gamma", 0) => None,
        ("trchib", d) if d > 0 => Some(Atom {
            sym: "trchibt".to_string(),
            deriv: d,
        }),
        _ => Some(a),
    }
}

/// Instances of a term at commutation count `i`. Symbols are kept at the
/// class level; alternative sets are expanded member by member.
pub fn instances(t: &SchematicTerm, i: i64) -> Vec<Instance> {
    let coeff = t.coeff.to_string();
    let (vars, total) = match &t.constraint {
        Some(c) => (
            c.vars.clone(),
            match c.total {
                Total::Sym(off) => i + off as i64,
                Total::Lit(n) => n,
            },
        ),
        None => (Vec::new(), 0),
    };
    let mut out = BTreeSet::new();
    'assign: for comp in compositions(vars.len(), total) {
        let lookup = |name: &str| -> i64 {
            if name == crate::dsl::GLOBAL {
                return i;
            }
            vars.iter()
                .position(|v| v == name)
                .map(|k| comp[k])
                .unwrap_or(0)
        };
        let mut per_factor: Vec<Vec<Vec<Atom>>> = Vec::new();
        for f in &t.factors {
            let d = f.deriv.eval(&lookup);
            let p = f.power.eval(&lookup);
            if d < 0 || p < 0 {
                continue 'assign;
            }
            if p == 0 {
                if d > 0 {
                    continue 'assign;
                }
                continue;
            }
            per_factor.push(copies(&f.class, p as u32, d as u32));
        }
        let mut partial: Vec<Vec<Atom>> = vec![Vec::new()];
        for opts in &per_factor {
            let mut next = Vec::new();
            for base in &partial {
                for o in opts {
                    let mut v = base.clone();
                    v.extend(o.iter().cloned());
                    next.push(v);
                }
            }
            partial = next;
        }
        for atoms in partial {
            let mut kept = Vec::new();
            for a in atoms {
                if a.sym == "one" && a.deriv > 0 {
                    continue 'assign;
                }
                if let Some(a) = rewrite(a) {
                    kept.push(a);
                }
            }
            kept.sort();
            out.insert(Instance {
                coeff: coeff.clone(),
                atoms: kept,
            });
        }
    }
    out.into_iter().collect()
}

/// Instances of a sum at count `i`, deduplicated.
pub fn sum_instances(terms: &[SchematicTerm], i: i64) -> Vec<Instance> {
    let mut set = BTreeSet::new();
    for t in terms {
        set.extend(instances(t, i));
    }
    set.into_iter().collect()
}

/// Leaf sets for coverage, cached.
pub struct Leaves {
    cache: HashMap<String, BTreeSet<String>>,
}

impl Default for Leaves {
    fn default() -> Self {
        Self::new()
    }
}

impl Leaves {
    pub fn new() -> Self {
        Leaves {
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, sym: &str) -> &BTreeSet<String> {
        self.cache
            .entry(sym.to_string())
            .or_insert_with(|| QuantityCatalog::builtin().leaves(sym).into_iter().collect())
    }

    pub fn atom_covered(&mut self, x: &Atom, y: &Atom) -> bool {
        if x.deriv != y.deriv {
            return false;
        }
        if x.sym == y.sym {
            return true;
        }
        let lx = self.get(&x.sym).clone();
        let ly = self.get(&y.sym);
        lx.is_subset(ly)
    }

    /// `x` is covered by `y`: a derivative-preserving bijection of atoms
    /// with each atom of `x` contained in its partner in `y`.
    pub fn covered_by(&mut self, x: &Instance, y: &Instance) -> bool {
        if x.coeff != y.coeff || x.atoms.len() != y.atoms.len() {
            return false;
        }
        let n = x.atoms.len();
        let mut ok = vec![vec![false; n]; n];
        for (a, row) in ok.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = self.atom_covered(&x.atoms[a], &y.atoms[b]);
            }
        }
        fn assign(a: usize, ok: &[Vec<bool>], used: &mut [bool]) -> bool {
            if a == ok.len() {
                return true;
            }
            for b in 0..ok.len() {
                if ok[a][b] && !used[b] {
                    used[b] = true;
                    if assign(a + 1, ok, used) {
                        return true;
                    }
                    used[b] = false;
                }
            }
            false
        }
        assign(0, &ok, &mut vec![false; n])
    }
}

fn signature_key(x: &Instance) -> (String, Vec<u32>) {
    let mut d: Vec<u32> = x.atoms.iter().map(|a| a.deriv).collect();
    d.sort();
    (x.coeff.clone(), d)
}

/// Instances of `xs` not covered by any instance of `ys`.
pub fn uncovered(xs: &[Instance], ys: &[Instance]) -> Vec<Instance> {
    let mut index: HashMap<(String, Vec<u32>), Vec<&Instance>> = HashMap::new();
    for y in ys {
        index.entry(signature_key(y)).or_default().push(y);
    }
    let mut leaves = Leaves::new();
    xs.iter()
        .filter(|x| {
            let cands = index
                .get(&signature_key(x))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            !cands.iter().any(|y| leaves.covered_by(x, y))
        })
        .cloned()
        .collect()
}

/// Counts checked when comparing symbolic sums.
pub const MAX_CHECK_I: i64 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub i: i64,
    /// Instances of the left sum missing on the right.
    pub left_only: Vec<Instance>,
    pub right_only: Vec<Instance>,
}

/// Instance-level equivalence of two sums for `i = 0..=max_i`.
pub fn equivalent(a: &[SchematicTerm], b: &[SchematicTerm], max_i: i64) -> Result<(), Mismatch> {
    for i in 0..=max_i {
        let ia = sum_instances(a, i);
        let ib = sum_instances(b, i);
        let left_only = uncovered(&ia, &ib);
        let right_only = uncovered(&ib, &ia);
        if !left_only.is_empty() || !right_only.is_empty() {
            return Err(Mismatch {
                i,
                left_only,
                right_only,
            });
        }
    }
    Ok(())
}

/// Whether every instance of `t` is covered by instances of `by`.
pub fn subsumed(t: &SchematicTerm, by: &SchematicTerm, max_i: i64) -> bool {
    (0..=max_i).all(|i| uncovered(&instances(t, i), &instances(by, i)).is_empty())
}

/// Drops terms whose instances are all covered by a single other term. Of
/// two mutually covering terms the one rendered first is kept.
pub fn reduce(terms: &[SchematicTerm], max_i: i64) -> Vec<SchematicTerm> {
    let n = terms.len();
    let mut dropped = vec![false; n];
    for a in 0..n {
        for b in 0..n {
            if a == b || dropped[b] || !subsumed(&terms[a], &terms[b], max_i) {
                continue;
            }
            let mutual = subsumed(&terms[b], &terms[a], max_i);
            if !mutual || terms[b].to_string() < terms[a].to_string() {
                dropped[a] = true;
                break;
            }
        }
    }
    terms
        .iter()
        .zip(dropped)
        .filter(|(_, d)| !d)
        .map(|(t, _)| t.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_raw;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 6);
        assert_eq!(compositions(0, 0).len(), 1);
        assert!(compositions(2, -1).is_empty());
    }

    #[test]
    fn zero_power_with_derivatives_vanishes() {
        let t = parse_raw("nab^{i1} psi^{i2} rho | i1+i2=1").unwrap();
        let v = instances(&t, 0);
        // (i1, i2) = (1, 0) vanishes; (0, 1) gives psi rho.
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "psi rho");
    }

    #[test]
    fn differentiated_trchib_is_tilde() {
        let t = parse_raw("nab trchib rho").unwrap();
        assert_eq!(instances(&t, 0)[0].to_string(), "rho nab^{1} trchibt");
    }

    #[test]
    fn class_covers_member() {
        let a = sum_instances(&[parse_raw("eta rho").unwrap()], 0);
        let b = sum_instances(&[parse_raw("psi rho").unwrap()], 0);
        assert!(uncovered(&a, &b).is_empty());
        assert_eq!(uncovered(&b, &a).len(), 1);
    }
}
