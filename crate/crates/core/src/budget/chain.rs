//! Estimate chains.
//!
//! A chain replays one proof as rule applications. Each `term` lane starts
//! from a polynomial in norm symbols (`R[alpha]`, `Rb[rho]`, `O[chih]`, `I0`)
//! with monomial weights, and is threaded through the rules of the parent
//! module. The lanes are summed and every resulting summand is compared with
//! the summand of the claim carrying the same norm symbols.
//!
//! ```text
//! chain chih.bd
//!   equation nab4-chih
//!   claim R[alpha] + 1
//!   term alpha
//!     start mono 1
//!     flux H R[alpha]
//! end
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    cauchy_schwarz_flux, dominance_check, holder_product, integrate_u, integrate_ubar,
    product_bound, sobolev_embed, transport_bound_3, transport_bound_4, BudgetVerdict,
    Hypersurface, Norm, ProductKind, Status, TransportRecord,
};
use crate::commute::{commute, Count};
use crate::dsl::{Direction, EquationCatalog};
use crate::error::{Error, Result};
use crate::monomial::{parse_prefix, Base, CoeffClass, WeightMonomial};
use crate::quantity::{QuantityCatalog, RegimeParameters};
use crate::rational::{fmt_q, parse_q, q, serialize_q, Q};

// ── Polynomials ──

/// `weight · Π sym^k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Summand {
    pub syms: BTreeMap<String, Q>,
    pub weight: WeightMonomial,
}

impl Summand {
    pub fn monomial(weight: WeightMonomial) -> Summand {
        Summand {
            syms: BTreeMap::new(),
            weight,
        }
    }

    pub fn mul(&self, o: &Summand) -> Summand {
        let mut syms = self.syms.clone();
        for (s, k) in &o.syms {
            *syms.entry(s.clone()).or_insert_with(Q::zero) += k;
        }
        syms.retain(|_, k| !k.is_zero());
        Summand {
            syms,
            weight: self.weight.mul(&o.weight),
        }
    }

    fn pow(&self, k: Q) -> Summand {
        Summand {
            syms: self.syms.iter().map(|(s, e)| (s.clone(), e * k)).collect(),
            weight: self.weight.pow(k),
        }
    }

    pub fn parse(src: &str) -> Result<Summand> {
        let mut out = Summand::monomial(WeightMonomial::one());
        for tok in src.split_whitespace() {
            let (m, used) = parse_prefix(&[tok])?;
            if used == 1 {
                out.weight = out.weight.mul(&m);
                continue;
            }
            let (sym, k) = parse_norm_symbol(tok)?;
            *out.syms.entry(sym).or_insert_with(Q::zero) += k;
        }
        out.syms.retain(|_, k| !k.is_zero());
        Ok(out)
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .weight
            .to_string()
            .split(' ')
            .map(str::to_string)
            .collect();
        if !self.syms.is_empty() {
            parts.retain(|p| p != "1");
        }
        for (s, k) in &self.syms {
            if k.is_one() {
                parts.push(s.clone());
            } else {
                parts.push(format!("{s}^{{{}}}", fmt_q(k)));
            }
        }
        write!(f, "{}", parts.join(" "))
    }
}

fn bad(msg: String) -> Error {
    Error::Syntax {
        line: 1,
        col: 1,
        msg,
    }
}

/// `R[x]`, `Rb[x]`, `O[x]` for a cataloged `x`, or `I0`, each with an
/// optional `^{k}`.
pub fn parse_norm_symbol(tok: &str) -> Result<(String, Q)> {
    let (head, k) = match tok.rfind('^') {
        Some(p) if tok[..p].ends_with(']') || &tok[..p] == "I0" => {
            let e = &tok[p + 1..];
            let e = e
                .strip_prefix('{')
                .and_then(|e| e.strip_suffix('}'))
                .unwrap_or(e);
            (&tok[..p], parse_q(e)?)
        }
        _ => (tok, Q::one()),
    };
    if head == "I0" {
        return Ok((head.to_string(), k));
    }
    let (family, arg) = head
        .strip_suffix(']')
        .and_then(|h| h.split_once('['))
        .ok_or_else(|| bad(format!("unknown token `{tok}`")))?;
    if !matches!(family, "R" | "Rb" | "O") {
        return Err(bad(format!("unknown norm family `{family}` in `{tok}`")));
    }
    if !QuantityCatalog::builtin().contains(arg) {
        return Err(Error::UnknownSymbol(arg.to_string()));
    }
    Ok((head.to_string(), k))
}

/// Sum of summands, with equal summands merged into one bounded summand.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly(pub Vec<Summand>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(Vec::new())
    }

    pub fn monomial(w: WeightMonomial) -> Poly {
        Poly(vec![Summand::monomial(w)])
    }

    /// Keeps first-occurrence order so claims render as authored.
    pub fn new(terms: Vec<Summand>) -> Poly {
        let mut out: Vec<Summand> = Vec::new();
        for t in terms {
            let same = |o: &Summand| {
                o.syms == t.syms && {
                    let (mut x, mut y) = (o.weight.clone(), t.weight.clone());
                    x.class = CoeffClass::Unit;
                    y.class = CoeffClass::Unit;
                    x == y
                }
            };
            match out.iter_mut().find(|o| same(o)) {
                Some(o) => o.weight.class = CoeffClass::Bounded,
                None => out.push(t),
            }
        }
        Poly(out)
    }

    pub fn parse(src: &str) -> Result<Poly> {
        let mut terms = Vec::new();
        let mut cur: Vec<&str> = Vec::new();
        for tok in src.split_whitespace().chain(std::iter::once("+")) {
            if tok == "+" {
                if cur.is_empty() {
                    return Err(bad(format!("empty summand in `{src}`")));
                }
                terms.push(Summand::parse(&cur.join(" "))?);
                cur.clear();
            } else {
                cur.push(tok);
            }
        }
        Ok(Poly::new(terms))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        Poly::new(
            self.0
                .iter()
                .flat_map(|a| o.0.iter().map(move |b| a.mul(b)))
                .collect(),
        )
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::monomial(WeightMonomial::one()), |acc, _| {
            acc.mul(self)
        })
    }

    pub fn add(&self, o: &Poly) -> Poly {
        Poly::new(self.0.iter().chain(o.0.iter()).cloned().collect())
    }

    fn try_map(&self, f: impl Fn(&Summand) -> Result<Vec<Summand>>) -> Result<Poly> {
        let mut out = Vec::new();
        for s in &self.0 {
            out.extend(f(s)?);
        }
        Ok(Poly::new(out))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" + "))
    }
}

// ── Steps ──

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    StartZero,
    StartData,
    StartMono(Poly),
    StartProduct(ProductKind, u32),
    StartChain(String),
    Times(Poly),
    TimesProduct(ProductKind, u32),
    Holder(Norm, Norm),
    IntegrateU,
    IntegrateUbar,
    Flux(Hypersurface, String),
    Subst(String, String),
    Square,
    Sqrt,
    Sobolev(String),
    Absorb(Option<String>),
    Young(String, Q, Q),
    Gronwall(WeightMonomial),
}

impl Step {
    fn is_start(&self) -> bool {
        matches!(
            self,
            Step::StartZero
                | Step::StartData
                | Step::StartMono(_)
                | Step::StartProduct(..)
                | Step::StartChain(_)
        )
    }

    fn referenced_chain(&self) -> Option<&str> {
        match self {
            Step::StartChain(c) | Step::Subst(_, c) => Some(c),
            _ => None,
        }
    }
}

fn parse_step(src: &str) -> Result<Step> {
    let toks: Vec<&str> = src.split_whitespace().collect();
    let rest = |n: usize| toks[n.min(toks.len())..].join(" ");
    let need = |n: usize| {
        if toks.len() == n {
            Ok(())
        } else {
            Err(bad(format!("`{}` takes {} argument(s)", toks[0], n - 1)))
        }
    };
    let count = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| bad(format!("bad count `{s}`")))
    };
    Ok(match toks.first().copied() {
        Some("start") => match toks.get(1).copied() {
            Some("zero") => Step::StartZero,
            Some("data") => Step::StartData,
            Some("mono") => Step::StartMono(Poly::parse(&rest(2))?),
            Some("product") => {
                need(4)?;
                Step::StartProduct(toks[2].parse()?, count(toks[3])?)
            }
            Some("chain") => {
                need(3)?;
                Step::StartChain(toks[2].to_string())
            }
            _ => return Err(bad(format!("unknown start `{src}`"))),
        },
        Some("times") => Step::Times(Poly::parse(&rest(1))?),
        Some("times-product") => {
            need(3)?;
            Step::TimesProduct(toks[1].parse()?, count(toks[2])?)
        }
        Some("holder") => {
            need(3)?;
            Step::Holder(toks[1].parse()?, toks[2].parse()?)
        }
        Some("integrate") => {
            need(2)?;
            match toks[1] {
                "u" => Step::IntegrateU,
                "ubar" => Step::IntegrateUbar,
                v => return Err(bad(format!("unknown variable `{v}`"))),
            }
        }
        Some("flux") => {
            need(3)?;
            let hyp: Hypersurface = toks[1].parse()?;
            let (sym, k) = parse_norm_symbol(toks[2])?;
            let family = if hyp == Hypersurface::H { "R[" } else { "Rb[" };
            if !sym.starts_with(family) || !k.is_one() {
                return Err(bad(format!(
                    "flux on {hyp} needs a {family}..] symbol, got `{}`",
                    toks[2]
                )));
            }
            Step::Flux(hyp, sym)
        }
        Some("subst") => {
            need(3)?;
            Step::Subst(parse_norm_symbol(toks[1])?.0, toks[2].to_string())
        }
        Some("square") => Step::Square,
        Some("sqrt") => Step::Sqrt,
        Some("sobolev") => {
            need(2)?;
            QuantityCatalog::builtin().get(toks[1])?;
            Step::Sobolev(toks[1].to_string())
        }
        Some("absorb") => match toks.len() {
            1 => Step::Absorb(None),
            2 => Step::Absorb(Some(parse_norm_symbol(toks[1])?.0)),
            _ => return Err(bad("`absorb` takes at most one symbol".into())),
        },
        Some("young") => {
            need(4)?;
            let (lo, hi) = (parse_q(toks[2])?, parse_q(toks[3])?);
            if lo.is_negative() || lo >= hi {
                return Err(bad(format!("young needs 0 <= lo < hi, got {lo} {hi}")));
            }
            Step::Young(parse_norm_symbol(toks[1])?.0, lo, hi)
        }
        Some("gronwall") => Step::Gronwall(WeightMonomial::parse(&rest(1))?),
        _ => return Err(bad(format!("unknown step `{src}`"))),
    })
}

// ── Chains and corpus ──

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub label: String,
    /// `(source line, source text, step)`.
    pub steps: Vec<(usize, String, Step)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    pub prop: Option<String>,
    pub equations: Vec<String>,
    pub claim: Poly,
    pub lanes: Vec<Lane>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainCorpus {
    pub chains: Vec<Chain>,
}

const SHIPPED: &str = include_str!("../../data/chains.chain");

impl ChainCorpus {
    pub fn shipped() -> Result<ChainCorpus> {
        parse_chains(SHIPPED)
    }

    pub fn get(&self, name: &str) -> Option<&Chain> {
        self.chains.iter().find(|c| c.name == name)
    }

    fn claim(&self, from: &str, name: &str) -> Result<&Poly> {
        self.get(name)
            .map(|c| &c.claim)
            .ok_or_else(|| Error::Chain {
                chain: from.to_string(),
                msg: format!("unknown chain `{name}`"),
            })
    }

    /// Chain references must exist and must not form a cycle.
    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in &self.chains {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Chain {
                    chain: c.name.clone(),
                    msg: "duplicate chain".into(),
                });
            }
        }
        let deps = |c: &Chain| -> Vec<String> {
            c.lanes
                .iter()
                .flat_map(|l| &l.steps)
                .filter_map(|s| s.2.referenced_chain())
                .map(str::to_string)
                .collect()
        };
        for c in &self.chains {
            for d in deps(c) {
                self.claim(&c.name, &d)?;
            }
        }
        // Depth-first cycle detection.
        fn visit<'a>(
            corpus: &'a ChainCorpus,
            name: &'a str,
            state: &mut BTreeMap<&'a str, bool>,
            deps: &dyn Fn(&Chain) -> Vec<String>,
        ) -> Result<()> {
            match state.get(name) {
                Some(true) => return Ok(()),
                Some(false) => {
                    return Err(Error::Chain {
                        chain: name.to_string(),
                        msg: "circular chain reference".into(),
                    })
                }
                None => {}
            }
            state.insert(name, false);
            let c = corpus.get(name).expect("validated");
            for d in deps(c) {
                let d = corpus.get(&d).expect("validated").name.as_str();
                visit(corpus, d, state, deps)?;
            }
            state.insert(name, true);
            Ok(())
        }
        let mut state = BTreeMap::new();
        for c in &self.chains {
            visit(self, &c.name, &mut state, &deps)?;
        }
        Ok(())
    }
}

pub fn parse_chains(src: &str) -> Result<ChainCorpus> {
    let mut chains = Vec::new();
    let mut cur: Option<Chain> = None;
    let mut claim_seen = false;
    for (n, raw) in src.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |e: Error| match e {
            Error::Syntax { msg, .. } => Error::Syntax {
                line: line_no,
                col: 1,
                msg,
            },
            other => Error::Syntax {
                line: line_no,
                col: 1,
                msg: other.to_string(),
            },
        };
        let (head, tail) = line
            .split_once(char::is_whitespace)
            .map(|(h, t)| (h, t.trim()))
            .unwrap_or((line, ""));
        match (head, cur.as_mut()) {
            ("chain", None) => {
                if tail.is_empty() {
                    return Err(at(bad("chain needs a name".into())));
                }
                cur = Some(Chain {
                    name: tail.to_string(),
                    prop: None,
                    equations: Vec::new(),
                    claim: Poly::zero(),
                    lanes: Vec::new(),
                });
                claim_seen = false;
            }
            ("end", Some(_)) => {
                let c = cur.take().expect("open chain");
                if !claim_seen {
                    return Err(at(bad(format!("chain `{}` has no claim", c.name))));
                }
                chains.push(c);
            }
            ("prop", Some(c)) => c.prop = Some(tail.to_string()),
            ("equation", Some(c)) => c.equations.push(tail.to_string()),
            ("claim", Some(c)) => {
                c.claim = Poly::parse(tail).map_err(at)?;
                claim_seen = true;
            }
            ("term", Some(c)) => c.lanes.push(Lane {
                label: tail.to_string(),
                steps: Vec::new(),
            }),
            (_, Some(c)) => {
                let step = parse_step(line).map_err(at)?;
                let lane = c
                    .lanes
                    .last_mut()
                    .ok_or_else(|| at(bad("step outside a term".into())))?;
                if lane.steps.is_empty() != step.is_start() {
                    let msg = if step.is_start() {
                        "lane already started"
                    } else {
                        "lane must begin with `start`"
                    };
                    return Err(at(bad(msg.into())));
                }
                lane.steps.push((line_no, line.to_string(), step));
            }
            (_, None) => return Err(at(bad(format!("`{head}` outside a chain")))),
        }
    }
    if let Some(c) = cur {
        return Err(Error::Syntax {
            line: src.lines().count(),
            col: 1,
            msg: format!("chain `{}` not closed", c.name),
        });
    }
    let corpus = ChainCorpus { chains };
    corpus.validate()?;
    Ok(corpus)
}

// ── Certification ──

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLedger {
    pub line: usize,
    pub step: String,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneLedger {
    pub label: String,
    pub steps: Vec<StepLedger>,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SummandCheck {
    pub summand: String,
    pub claim: Option<String>,
    pub verdict: Option<BudgetVerdict>,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainVerdict {
    pub name: String,
    pub prop: Option<String>,
    pub claim: String,
    /// Sum of all lanes after the last step.
    pub bound: String,
    pub status: Status,
    /// Largest slack over the summand comparisons.
    #[serde(serialize_with = "serialize_opt_q")]
    pub slack: Option<Q>,
    /// Largest slack of the norm-free summands of `bound` on their own.
    #[serde(serialize_with = "serialize_opt_q")]
    pub remainder_slack: Option<Q>,
    pub transport: Vec<TransportRecord>,
    pub lanes: Vec<LaneLedger>,
    pub checks: Vec<SummandCheck>,
}

fn serialize_opt_q<S: serde::Serializer>(
    x: &Option<Q>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_q(v, s),
        None => s.serialize_none(),
    }
}

fn absorb_base(sym: &str) -> Option<Base> {
    if sym.starts_with("R[") || sym.starts_with("Rb[") {
        Some(Base::R)
    } else if sym.starts_with("O[") {
        Some(Base::O)
    } else {
        None
    }
}

fn apply(
    step: &Step,
    cur: Option<Poly>,
    chain: &Chain,
    corpus: &ChainCorpus,
    regime: &RegimeParameters,
) -> Result<(Poly, Option<String>)> {
    let err = |msg: String| Error::Chain {
        chain: chain.name.clone(),
        msg,
    };
    if step.is_start() {
        let p = match step {
            Step::StartZero => Poly::zero(),
            Step::StartData => Poly::monomial(WeightMonomial::one().bounded()),
            Step::StartMono(p) => p.clone(),
            Step::StartProduct(k, n) => Poly::monomial(product_bound(*k, *n)?),
            Step::StartChain(c) => corpus.claim(&chain.name, c)?.clone(),
            _ => unreachable!("start steps"),
        };
        return Ok((p, None));
    }
    let cur = cur.ok_or_else(|| err("lane used before `start`".into()))?;
    let map_weight = |f: &dyn Fn(&WeightMonomial) -> Result<WeightMonomial>| {
        cur.try_map(|s| {
            Ok(vec![Summand {
                syms: s.syms.clone(),
                weight: f(&s.weight)?,
            }])
        })
    };
    Ok(match step {
        Step::Times(p) => (cur.mul(p), None),
        Step::TimesProduct(k, n) => (cur.mul(&Poly::monomial(product_bound(*k, *n)?)), None),
        Step::Holder(a, b) => {
            let h = holder_product(*a, *b).map_err(|e| err(e.to_string()))?;
            (
                cur.mul(&Poly::monomial(h.gain)),
                Some(format!("({a},{b}) -> {}", h.norm)),
            )
        }
        Step::IntegrateU => {
            let p = map_weight(&|w| integrate_u(w)).map_err(|e| err(e.to_string()))?;
            (p, None)
        }
        Step::IntegrateUbar => (map_weight(&|w| Ok(integrate_ubar(w)))?, None),
        Step::Flux(h, sym) => {
            let p = map_weight(&|w| cauchy_schwarz_flux(w, *h)).map_err(|e| err(e.to_string()))?;
            (p.mul(&Poly::parse(sym)?), None)
        }
        Step::Subst(sym, c) => {
            let claim = corpus.claim(&chain.name, c)?;
            let p = cur.try_map(|s| {
                let Some(k) = s.syms.get(sym) else {
                    return Ok(vec![s.clone()]);
                };
                if !k.is_integer() || k.is_negative() {
                    return Err(err(format!("cannot substitute {sym}^{}", fmt_q(k))));
                }
                let mut rest = s.clone();
                rest.syms.remove(sym);
                Ok(Poly(vec![rest]).mul(&claim.pow(k.to_integer() as u32)).0)
            })?;
            (p, Some(format!("{sym} <= {claim}")))
        }
        Step::Square => (cur.mul(&cur), None),
        Step::Sqrt => (cur.try_map(|s| Ok(vec![s.pow(q(1, 2))]))?, None),
        Step::Sobolev(name) => {
            let r = sobolev_embed(name);
            (
                cur,
                Some(format!(
                    "L∞ of {} by (a^{{1/2}}∇)^i in L², i <= {}",
                    r.quantity, r.max_order
                )),
            )
        }
        Step::Absorb(only) => {
            let p = cur.try_map(|s| {
                let mut out = Summand::monomial(s.weight.clone());
                for (sym, k) in &s.syms {
                    let hit = only.as_ref().is_none_or(|o| o == sym);
                    match absorb_base(sym).filter(|_| hit) {
                        Some(b) => out.weight.set_exp(b, out.weight.exp(b) + k),
                        None => {
                            out.syms.insert(sym.clone(), *k);
                        }
                    }
                }
                Ok(vec![out])
            })?;
            (p, None)
        }
        Step::Young(sym, lo, hi) => {
            let p = cur.try_map(|s| match s.syms.get(sym) {
                Some(k) if k > lo && k < hi => {
                    let mut a = s.clone();
                    let mut b = s.clone();
                    for (t, e) in [(&mut a, lo), (&mut b, hi)] {
                        if e.is_zero() {
                            t.syms.remove(sym);
                        } else {
                            t.syms.insert(sym.clone(), *e);
                        }
                        t.weight.class = CoeffClass::Bounded;
                    }
                    Ok(vec![a, b])
                }
                _ => Ok(vec![s.clone()]),
            })?;
            (p, None)
        }
        Step::Gronwall(m) => {
            let v = dominance_check(&integrate_u(m).map_err(|e| err(e.to_string()))?, regime);
            if v.status != Status::Small {
                return Err(err(format!(
                    "Grönwall factor {m} integrates to {} which is not small",
                    v.bound
                )));
            }
            (
                cur,
                Some(format!(
                    "∫ {m} du = {} (slack {})",
                    v.bound,
                    fmt_q(&v.slack)
                )),
            )
        }
        _ => unreachable!("start steps handled above"),
    })
}

fn check_summand(s: &Summand, claim: &Poly, regime: &RegimeParameters) -> SummandCheck {
    let mut best: Option<SummandCheck> = None;
    for c in claim.0.iter().filter(|c| c.syms == s.syms) {
        let ratio = s.weight.div(&c.weight);
        let v = dominance_check(&ratio, regime);
        let bootstrap = ratio.exp(Base::O).is_positive() || ratio.exp(Base::R).is_positive();
        let (accepted, reason) = match v.status {
            Status::Small => (true, None),
            Status::Borderline if !bootstrap => (true, None),
            Status::Borderline => (
                false,
                Some("bootstrap constants need strictly negative slack".to_string()),
            ),
            Status::Fails => (
                false,
                v.reason.clone().or(Some("positive slack".to_string())),
            ),
        };
        let cand = SummandCheck {
            summand: s.to_string(),
            claim: Some(c.to_string()),
            verdict: Some(v),
            accepted,
            reason,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (cand.accepted, -cand.verdict.as_ref().unwrap().slack)
                    > (b.accepted, -b.verdict.as_ref().unwrap().slack)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.unwrap_or_else(|| SummandCheck {
        summand: s.to_string(),
        claim: None,
        verdict: None,
        accepted: false,
        reason: Some("no claim summand carries these norms".to_string()),
    })
}

fn transport_records(chain: &Chain, catalog: &EquationCatalog) -> Result<Vec<TransportRecord>> {
    chain
        .equations
        .iter()
        .map(|name| {
            let e = catalog.get(name).ok_or_else(|| Error::Chain {
                chain: chain.name.clone(),
                msg: format!("unknown equation `{name}`"),
            })?;
            let c = commute(e, Count::Sym)?;
            match c.direction {
                Direction::Nab3 => transport_bound_3(&c),
                _ => transport_bound_4(&c),
            }
        })
        .collect()
}

/// Replays every lane of `chain` and compares the sum with the claim.
pub fn certify_chain(
    chain: &Chain,
    corpus: &ChainCorpus,
    catalog: &EquationCatalog,
    regime: &RegimeParameters,
) -> Result<ChainVerdict> {
    let transport = transport_records(chain, catalog)?;
    let mut lanes = Vec::new();
    let mut total = Poly::zero();
    for lane in &chain.lanes {
        let mut cur: Option<Poly> = None;
        let mut steps = Vec::new();
        for (line, src, step) in &lane.steps {
            let (p, note) = apply(step, cur.take(), chain, corpus, regime)?;
            steps.push(StepLedger {
                line: *line,
                step: src.clone(),
                value: p.to_string(),
                note,
            });
            cur = Some(p);
        }
        let p = cur.unwrap_or_default();
        total = total.add(&p);
        lanes.push(LaneLedger {
            label: lane.label.clone(),
            steps,
            result: p.to_string(),
        });
    }
    let checks: Vec<SummandCheck> = total
        .0
        .iter()
        .map(|s| check_summand(s, &chain.claim, regime))
        .collect();
    let status = if checks.iter().any(|c| !c.accepted) {
        Status::Fails
    } else {
        checks
            .iter()
            .filter_map(|c| c.verdict.as_ref())
            .map(|v| v.status)
            .max()
            .unwrap_or(Status::Small)
    };
    let slack = checks
        .iter()
        .filter_map(|c| c.verdict.as_ref())
        .map(|v| v.slack)
        .max();
    let remainder_slack = total
        .0
        .iter()
        .filter(|s| s.syms.is_empty())
        .map(|s| dominance_check(&s.weight, regime).slack)
        .max();
    Ok(ChainVerdict {
        name: chain.name.clone(),
        prop: chain.prop.clone(),
        claim: chain.claim.to_string(),
        bound: total.to_string(),
        status,
        slack,
        remainder_slack,
        transport,
        lanes,
        checks,
    })
}

/// Certifies every chain of the corpus in parallel; results keep corpus order.
pub fn certify_all(
    corpus: &ChainCorpus,
    catalog: &EquationCatalog,
    regime: &RegimeParameters,
) -> Vec<Result<ChainVerdict>> {
    corpus
        .chains
        .par_iter()
        .map(|c| certify_chain(c, corpus, catalog, regime))
        .collect()
}

/// Markdown ledger of one verdict.
pub fn render_ledger(v: &ChainVerdict) -> String {
    let mut out = format!("## {}\n\n", v.name);
    if let Some(p) = &v.prop {
        out.push_str(&format!("- proposition: {p}\n"));
    }
    out.push_str(&format!("- claim: `{}`\n- status: {}\n", v.claim, v.status));
    if let Some(s) = v.slack {
        out.push_str(&format!("- slack: {}\n", fmt_q(&s)));
    }
    if let Some(s) = v.remainder_slack {
        out.push_str(&format!("- remainder slack: {}\n", fmt_q(&s)));
    }
    for t in &v.transport {
        out.push_str(&format!(
            "- transport {} ({}): lambda = {}, lambda1 = {}, measure {}\n",
            t.equation, t.direction, t.lambda, t.lambda1, t.measure
        ));
    }
    for lane in &v.lanes {
        out.push_str(&format!(
            "\n### term {}\n\n| line | step | value |\n|---|---|---|\n",
            lane.label
        ));
        for s in &lane.steps {
            let note = s
                .note
                .as_ref()
                .map(|n| format!(" ({n})"))
                .unwrap_or_default();
            out.push_str(&format!(
                "| {} | `{}`{} | `{}` |\n",
                s.line, s.step, note, s.value
            ));
        }
    }
    out.push_str("\n### comparison\n\n| summand | claim | slack | accepted |\n|---|---|---|---|\n");
    for c in &v.checks {
        let slack = c
            .verdict
            .as_ref()
            .map(|x| fmt_q(&x.slack))
            .unwrap_or_default();
        out.push_str(&format!(
            "| `{}` | `{}` | {} | {} |\n",
            c.summand,
            c.claim.clone().unwrap_or_default(),
            slack,
            c.accepted
        ));
    }
    out
}
