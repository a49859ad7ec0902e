//! Exact first-order commutators and their schematic reduction.
//!
//! The lists below keep the rational coefficients of `[∇₄,∇]` and `[∇₃,∇]`
//! acting on scalars, one-forms and two-forms (index contractions are not
//! tracked). `dphi` stands for `∇₄φ` or `∇₃φ`.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::commute::instances::{sum_instances, uncovered};
use crate::commute::{commute, phi_tilde, schematic_rhs, Count};
use crate::dsl::{normalize_term, Direction, Factor, Idx, SchematicTerm, TransportEquation};
use crate::error::{Error, Result};
use crate::quantity::QuantityCatalog;
use crate::rational::{fmt_q, q, qi, Q};

/// A factor that may be a sum of symbols, such as `η + η̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFactor {
    pub syms: Vec<&'static str>,
    pub deriv: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTerm {
    pub coeff: Q,
    pub factors: Vec<OracleFactor>,
}

impl fmt::Display for OracleTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_q(&self.coeff))?;
        for x in &self.factors {
            let body = if x.syms.len() == 1 {
                x.syms[0].to_string()
            } else {
                format!("({})", x.syms.join("+"))
            };
            match x.deriv {
                0 => write!(f, " {body}")?,
                d => write!(f, " nab^{{{d}}} {body}")?,
            }
        }
        Ok(())
    }
}

fn fac(syms: &[&'static str]) -> OracleFactor {
    OracleFactor {
        syms: syms.to_vec(),
        deriv: 0,
    }
}

fn nab(sym: &'static str) -> OracleFactor {
    OracleFactor {
        syms: vec![sym],
        deriv: 1,
    }
}

fn term(coeff: Q, factors: Vec<OracleFactor>) -> OracleTerm {
    OracleTerm { coeff, factors }
}

/// Symbols that differ between the two directions.
struct Frame {
    chi: &'static str,
    beta: &'static str,
    /// The torsion one-form contracted with the field.
    eta: &'static str,
}

fn frame(dir: Direction) -> Result<Frame> {
    match dir {
        Direction::Nab4 => Ok(Frame {
            chi: "chi",
            beta: "beta",
            eta: "etabar",
        }),
        Direction::Nab3 => Ok(Frame {
            chi: "chib",
            beta: "betabar",
            eta: "eta",
        }),
        Direction::Elliptic => Err(Error::WrongDirection {
            expected: "nab3 or nab4".into(),
            got: dir.to_string(),
        }),
    }
}

fn torsion() -> OracleFactor {
    fac(&["eta", "etabar"])
}

pub fn commute_scalar(dir: Direction) -> Result<Vec<OracleTerm>> {
    let fr = frame(dir)?;
    Ok(vec![
        term(q(1, 2), vec![torsion(), fac(&["dphi"])]),
        term(qi(-1), vec![fac(&[fr.chi]), nab("phi")]),
    ])
}

pub fn commute_oneform(dir: Direction) -> Result<Vec<OracleTerm>> {
    let fr = frame(dir)?;
    Ok(vec![
        term(qi(-1), vec![fac(&[fr.chi]), nab("phi")]),
        term(qi(1), vec![fac(&[fr.beta]), fac(&["phi"])]),
        term(q(1, 2), vec![torsion(), fac(&["dphi"])]),
        term(qi(-1), vec![fac(&[fr.chi]), fac(&[fr.eta]), fac(&["phi"])]),
        term(qi(1), vec![fac(&[fr.chi]), fac(&[fr.eta]), fac(&["phi"])]),
    ])
}

pub fn commute_twoform(dir: Direction) -> Result<Vec<OracleTerm>> {
    let fr = frame(dir)?;
    let s = if dir == Direction::Nab4 { -1 } else { 1 };
    let ce = || vec![fac(&[fr.chi]), fac(&[fr.eta]), fac(&["phi"])];
    let bp = || vec![fac(&[fr.beta]), fac(&["phi"])];
    Ok(vec![
        term(q(1, 2), vec![torsion(), fac(&["dphi"])]),
        term(qi(-1), ce()),
        term(qi(-1), ce()),
        term(qi(s), bp()),
        term(qi(s), bp()),
        term(qi(1), ce()),
        term(qi(1), ce()),
        term(qi(-1), vec![fac(&[fr.chi]), nab("phi")]),
    ])
}

/// First-order commutator for a tensor of the given rank.
pub fn commute_rank(rank: u32, dir: Direction) -> Result<Vec<OracleTerm>> {
    match rank {
        0 => commute_scalar(dir),
        1 => commute_oneform(dir),
        2 => commute_twoform(dir),
        r => Err(Error::UnsupportedRank(r)),
    }
}

/// A product of differentiated symbols with an exact coefficient.
#[derive(Debug, Clone, PartialEq)]
struct Mono {
    coeff: Q,
    factors: Vec<(String, u32)>,
    weight: crate::WeightMonomial,
}

impl Mono {
    fn times(&self, c: Q, extra: &[(String, u32)]) -> Mono {
        let mut m = self.clone();
        m.coeff *= c;
        m.factors.extend_from_slice(extra);
        m
    }
}

fn codazzi(beta: &str) -> Vec<(Q, Vec<(&'static str, u32)>)> {
    match beta {
        "beta" => vec![
            (qi(-1), vec![("chih", 1)]),
            (q(1, 2), vec![("trchi", 1)]),
            (q(-1, 2), vec![("eta", 0), ("chih", 0)]),
            (q(1, 2), vec![("etabar", 0), ("chih", 0)]),
            (q(1, 4), vec![("eta", 0), ("trchi", 0)]),
            (q(-1, 4), vec![("etabar", 0), ("trchi", 0)]),
        ],
        _ => vec![
            (qi(1), vec![("chibh", 1)]),
            (q(-1, 2), vec![("trchib", 1)]),
            (q(-1, 2), vec![("eta", 0), ("chibh", 0)]),
            (q(1, 2), vec![("etabar", 0), ("chibh", 0)]),
            (q(1, 4), vec![("eta", 0), ("trchib", 0)]),
            (q(-1, 4), vec![("etabar", 0), ("trchib", 0)]),
        ],
    }
}

/// Replacement of one underived symbol by a sum of products.
fn expand_symbol(
    sym: &str,
    deriv: u32,
    src: &[(Q, Vec<(String, u32)>)],
) -> Vec<(Q, Vec<(String, u32)>)> {
    let one = |s: &str| vec![(qi(1), vec![(s.to_string(), deriv)])];
    match (sym, deriv) {
        ("chi", 0) => vec![
            (q(1, 2), vec![("trchi".into(), 0)]),
            (qi(1), vec![("chih".into(), 0)]),
        ],
        ("chib", 0) => vec![
            (q(1, 2), vec![("trchib".into(), 0)]),
            (qi(1), vec![("chibh".into(), 0)]),
        ],
        ("beta", 0) | ("betabar", 0) => codazzi(sym)
            .into_iter()
            .map(|(c, fs)| (c, fs.into_iter().map(|(s, d)| (s.to_string(), d)).collect()))
            .collect(),
        ("dphi", 0) => src.to_vec(),
        _ => one(sym),
    }
}

/// Scalar, factors with powers, coefficient weight.
type SourceMono = (Q, Vec<(String, u32)>, crate::WeightMonomial);

/// Source terms as products; `dphi` expands to these.
fn source_monos(e: &TransportEquation) -> Vec<SourceMono> {
    let mut out = Vec::new();
    for t in schematic_rhs(e) {
        let mut fs = Vec::new();
        for f in &t.factors {
            let (Idx::Lit(d), Idx::Lit(p)) = (&f.deriv, &f.power) else {
                continue;
            };
            for _ in 0..*p {
                fs.push((f.class_label(), *d));
            }
        }
        out.push((qi(1), fs, t.coeff.clone()));
    }
    out
}

/// Leibniz rule for one angular derivative.
fn leibniz(fs: &[(String, u32)]) -> Vec<Vec<(String, u32)>> {
    (0..fs.len())
        .map(|k| {
            let mut v = fs.to_vec();
            v[k].1 += 1;
            v
        })
        .collect()
}

fn to_term(m: &Mono, phi: &str) -> SchematicTerm {
    let factors = m
        .factors
        .iter()
        .filter(|(s, _)| s != "gamma")
        .map(|(s, d)| {
            let name = match s.as_str() {
                "phi" => phi.to_string(),
                "eta" | "etabar" | "trchi" => "psi".to_string(),
                other => other.to_string(),
            };
            let class: Vec<String> = if name.starts_with('(') {
                name.trim_matches(|c| c == '(' || c == ')')
                    .split(", ")
                    .map(String::from)
                    .collect()
            } else {
                vec![name]
            };
            Factor {
                class,
                deriv: Idx::Lit(*d),
                power: Idx::Lit(1),
            }
        })
        .collect();
    normalize_term(&SchematicTerm::product(factors).with_coeff(m.weight.clone()))
}

/// Right-hand side of the equation for `∇φ` built from the exact commutator,
/// before schematic collapse. Returns the products and the total coefficient
/// of `trχ̄ ∇φ`, which belongs on the left.
fn first_order(e: &TransportEquation, rank: u32) -> Result<(Vec<Mono>, Q)> {
    let comm = commute_rank(rank, e.direction)?;
    let unit = crate::WeightMonomial::one();
    let mut src: Vec<(Q, Vec<(String, u32)>)> = Vec::new();
    let mut monos: Vec<Mono> = Vec::new();
    for (c, fs, w) in source_monos(e) {
        for l in leibniz(&fs) {
            monos.push(Mono {
                coeff: c,
                factors: l,
                weight: w.clone(),
            });
        }
        src.push((c, fs));
    }
    if e.direction == Direction::Nab3 && !e.lambda0.is_zero() {
        let l = -e.lambda0;
        src.push((l, vec![("trchib".into(), 0), ("phi".into(), 0)]));
        monos.push(Mono {
            coeff: l,
            factors: vec![("trchib".into(), 1), ("phi".into(), 0)],
            weight: unit.clone(),
        });
        monos.push(Mono {
            coeff: l,
            factors: vec![("trchib".into(), 0), ("phi".into(), 1)],
            weight: unit.clone(),
        });
    }
    for t in &comm {
        let mut partial = vec![Mono {
            coeff: t.coeff,
            factors: Vec::new(),
            weight: unit.clone(),
        }];
        for f in &t.factors {
            let mut next = Vec::new();
            for m in &partial {
                for s in &f.syms {
                    for (c, fs) in expand_symbol(s, f.deriv, &src) {
                        next.push(m.times(c, &fs));
                    }
                }
            }
            partial = next;
        }
        monos.extend(partial);
    }
    let is_absorbed = |m: &Mono| {
        let mut fs = m.factors.clone();
        fs.sort();
        fs == [("phi".to_string(), 1), ("trchib".to_string(), 0)]
    };
    let absorbed = monos
        .iter()
        .filter(|m| is_absorbed(m))
        .fold(Q::zero(), |acc, m| acc + m.coeff);
    monos.retain(|m| !is_absorbed(m) && !m.coeff.is_zero());
    Ok((monos, absorbed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleCheck {
    pub name: String,
    pub rank: u32,
    /// Coefficient of `trχ̄ ∇φ` collected from the commutator.
    pub absorbed: String,
    /// Minus the engine's λ at one commutation.
    pub expected: String,
    pub uncovered: Vec<String>,
    pub pass: bool,
}

/// Schematized first-order terms for rank `rank`.
pub fn oracle_terms(e: &TransportEquation, rank: u32) -> Result<(Vec<SchematicTerm>, Q)> {
    let phi = e
        .lhs_quantity()
        .ok_or_else(|| Error::UnknownSymbol(e.lhs.to_string()))?;
    let pt = phi_tilde(phi);
    let (monos, absorbed) = first_order(e, rank)?;
    Ok((monos.iter().map(|m| to_term(m, &pt)).collect(), absorbed))
}

/// Every schematized oracle term is covered by the engine's `i = 1` output
/// and the collected `trχ̄ ∇φ` coefficient equals `-λ(1)`.
pub fn check_oracle(e: &TransportEquation, rank: u32) -> Result<OracleCheck> {
    let (terms, absorbed) = oracle_terms(e, rank)?;
    let engine = commute(e, Count::Lit(1))?;
    let expected = -engine.lambda.at(1);
    let missing = uncovered(&sum_instances(&terms, 1), &sum_instances(&engine.rhs, 1));
    Ok(OracleCheck {
        name: e.name.clone(),
        rank,
        absorbed: fmt_q(&absorbed),
        expected: fmt_q(&expected),
        pass: missing.is_empty() && absorbed == expected,
        uncovered: missing.iter().map(ToString::to_string).collect(),
    })
}

/// Engine summands at `i = 1` containing no schematized oracle term of any
/// rank `0..=2`. Summand slots are wider than the first-order terms they
/// stand for, so the check is per summand rather than per instance.
pub fn unjustified(e: &TransportEquation) -> Result<Vec<String>> {
    let mut all = Vec::new();
    for rank in 0..=2 {
        all.extend(oracle_terms(e, rank)?.0);
    }
    let oracle = sum_instances(&all, 1);
    let engine = commute(e, Count::Lit(1))?;
    Ok(engine
        .rhs
        .iter()
        .filter(|t| {
            let own = sum_instances(std::slice::from_ref(*t), 1);
            !own.is_empty() && uncovered(&oracle, &own).len() == oracle.len()
        })
        .map(ToString::to_string)
        .collect())
}

/// Rank of the left-hand quantity of a transport equation.
pub fn lhs_rank(e: &TransportEquation) -> Result<u32> {
    let phi = e
        .lhs_quantity()
        .ok_or_else(|| Error::UnknownSymbol(e.lhs.to_string()))?;
    Ok(QuantityCatalog::builtin().get(phi)?.rank)
}
