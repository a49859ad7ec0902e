//! Power counting in scale-invariant norms.
//!
//! Every rule acts on [`WeightMonomial`]s with exact rational exponents.
//! Absolute constants collapse to [`CoeffClass::Bounded`]; verdicts are
//! asymptotic in `a` under the worst-case substitution of [`dominance_check`].

pub mod chain;

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::commute::CommutedEquation;
use crate::dsl::{parse_term, Direction, SchematicTerm};
use crate::error::{Error, Result};
use crate::monomial::{Base, CoeffClass, WeightMonomial};
use crate::quantity::{Quantity, QuantityCatalog, RegimeParameters};
use crate::rational::{fmt_q, q, qi, serialize_q, Affine, Q};

pub use chain::{certify_all, certify_chain, parse_chains, ChainCorpus, ChainVerdict};

// ── Norms ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Norm {
    #[serde(rename = "inf")]
    LInf,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "1")]
    L1,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::LInf => "inf",
            Norm::L2 => "2",
            Norm::L1 => "1",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Norm> {
        match s {
            "inf" | "∞" | "Linf" => Ok(Norm::LInf),
            "2" | "L2" => Ok(Norm::L2),
            "1" | "L1" => Ok(Norm::L1),
            _ => Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!("unknown norm `{s}`"),
            }),
        }
    }
}

/// `a^{-s} |u|^{2s + k}` with `k = 1, 0, -1` for `L∞`, `L²`, `L¹`.
pub fn scale_weight(s2: Q, norm: Norm) -> WeightMonomial {
    let k = match norm {
        Norm::LInf => 1,
        Norm::L2 => 0,
        Norm::L1 => -1,
    };
    WeightMonomial::au(-s2, qi(2) * s2 + qi(k))
}

/// Factor converting a plain sphere norm of `q` into its scale-invariant norm.
pub fn norm_weight(q: &Quantity, norm: Norm) -> Result<WeightMonomial> {
    let s2 =
        q.s2.ok_or_else(|| Error::AmbiguousSignature(q.name.clone()))?;
    Ok(scale_weight(s2.value(), norm))
}

/// Same as [`norm_weight`] for `∇^i q`, whose signature is `s₂(q) + i/2`.
pub fn norm_weight_derived(name: &str, derivs: u32, norm: Norm) -> Result<WeightMonomial> {
    let q = QuantityCatalog::builtin().get(name)?;
    let s2 =
        q.s2.ok_or_else(|| Error::AmbiguousSignature(q.name.clone()))?;
    Ok(scale_weight(s2.value() + q_half(derivs), norm))
}

fn q_half(n: u32) -> Q {
    q(n as i64, 2)
}

// ── Hölder ──

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HolderBound {
    pub norm: Norm,
    pub gain: WeightMonomial,
}

/// Hölder in scale-invariant norms: `‖φ₁φ₂‖ ≤ |u|⁻¹ ‖φ₁‖ ‖φ₂‖` for the
/// pairings `(∞,2)→2`, `(∞,1)→1` and `(2,2)→1`, in either order.
pub fn holder_product(n1: Norm, n2: Norm) -> Result<HolderBound> {
    let (lo, hi) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
    let norm = match (lo, hi) {
        (Norm::LInf, Norm::L2) => Norm::L2,
        (Norm::LInf, Norm::L1) => Norm::L1,
        (Norm::L2, Norm::L2) => Norm::L1,
        _ => return Err(Error::UnsupportedPairing(n1.to_string(), n2.to_string())),
    };
    Ok(HolderBound {
        norm,
        gain: WeightMonomial::au(qi(0), qi(-1)),
    })
}

// ── Product table ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ProductKind {
    /// `∇^{i₁} ψ^{i₂ + extra}`.
    Psi,
    /// `∇^{i₁} ψ^{i₂ + extra} ∇^{i₃} Ψ`.
    PsiPsi,
}

impl FromStr for ProductKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ProductKind> {
        match s {
            "psi" => Ok(ProductKind::Psi),
            "psiPsi" => Ok(ProductKind::PsiPsi),
            _ => Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!("unknown product kind `{s}`"),
            }),
        }
    }
}

impl fmt::Display for ProductKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProductKind::Psi => "psi",
            ProductKind::PsiPsi => "psiPsi",
        })
    }
}

/// `L²_sc` bound of a product of Ricci coefficients, possibly ending in a
/// curvature component, with `extra` factors beyond the free count `i₂`.
pub fn product_bound(kind: ProductKind, extra: u32) -> Result<WeightMonomial> {
    let (pa, pu, po) = match (kind, extra) {
        (ProductKind::Psi, 0) => (qi(0), qi(1), 0),
        (ProductKind::Psi, 1) => (qi(0), qi(0), 1),
        (ProductKind::Psi, 2) => (qi(0), qi(-1), 2),
        (ProductKind::Psi, 3) => (qi(0), qi(-2), 3),
        (ProductKind::PsiPsi, 0) => (qi(0), qi(0), 1),
        (ProductKind::PsiPsi, 1) => (q(1, 2), qi(-1), 2),
        (ProductKind::PsiPsi, 2) => (qi(1), qi(-2), 3),
        _ => {
            return Err(Error::OutOfTable {
                kind: kind.to_string(),
                extra,
            })
        }
    };
    Ok(WeightMonomial::au(pa, pu).with(Base::O, qi(po)))
}

// ── Sobolev ──

/// `‖φ‖_{L∞_sc} ≲ Σ_{i ≤ max_order} ‖(a^{1/2}∇)^i φ‖_{L²_sc}` with weight `weight`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SobolevRule {
    pub quantity: String,
    pub max_order: u32,
    pub weight: WeightMonomial,
}

impl SobolevRule {
    /// Embedding an already embedded record changes nothing.
    pub fn embed(&self) -> SobolevRule {
        self.clone()
    }
}

pub fn sobolev_embed(quantity: &str) -> SobolevRule {
    SobolevRule {
        quantity: quantity.to_string(),
        max_order: 2,
        weight: WeightMonomial::one(),
    }
}

// ── Transport ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Variable {
    U,
    Ubar,
}

/// Inequality produced by integrating a commuted transport equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransportRecord {
    pub equation: String,
    pub direction: Direction,
    /// Coefficient of `trχ̄` on the left, in the commutation count `i`.
    #[serde(serialize_with = "serialize_affine")]
    pub lambda: Affine,
    /// `|u|` weight exponent `2(λ − ½)`; zero for `∇₄`.
    #[serde(serialize_with = "serialize_affine")]
    pub lambda1: Affine,
    pub variable: Variable,
    /// Measure of the integral in scale-invariant form.
    pub measure: WeightMonomial,
}

fn serialize_affine<S: serde::Serializer>(
    x: &Affine,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn wrong_direction(expected: Direction, e: &CommutedEquation) -> Error {
    Error::WrongDirection {
        expected: expected.to_string(),
        got: e.direction.to_string(),
    }
}

/// `‖∇ⁱφ‖(u̅) ≤ ‖∇ⁱφ‖(0) + ∫₀^{u̅} ‖F‖ du̅′`; the interval has length at most 1.
pub fn transport_bound_4(e: &CommutedEquation) -> Result<TransportRecord> {
    if e.direction != Direction::Nab4 {
        return Err(wrong_direction(Direction::Nab4, e));
    }
    Ok(TransportRecord {
        equation: e.name.clone(),
        direction: e.direction,
        lambda: e.lambda,
        lambda1: Affine::constant(qi(0)),
        variable: Variable::Ubar,
        measure: WeightMonomial::one(),
    })
}

/// `|u|^{λ₁}‖φ‖ ≤ |u∞|^{λ₁}‖φ(u∞)‖ + ∫|u′|^{λ₁}‖F‖ du′` with `λ₁ = 2(λ − ½)`.
pub fn transport_bound_3(e: &CommutedEquation) -> Result<TransportRecord> {
    if e.direction != Direction::Nab3 {
        return Err(wrong_direction(Direction::Nab3, e));
    }
    let lambda1 = Affine::new(qi(2) * (e.lambda.c0 - q(1, 2)), qi(2) * e.lambda.ci);
    Ok(TransportRecord {
        equation: e.name.clone(),
        direction: e.direction,
        lambda: e.lambda,
        lambda1,
        variable: Variable::U,
        measure: WeightMonomial::au(qi(1), qi(-2)),
    })
}

// ── Integration ──

/// `∫_{u∞}^{u} m du′`. Exponents `q < −1` integrate toward `u∞` and give
/// `q + 1`; `q = −1` is rejected; `q > −1` is evaluated at the `|u∞|` end.
pub fn integrate_u(m: &WeightMonomial) -> Result<WeightMonomial> {
    let e = m.exp(Base::U);
    let q1 = e + Q::one();
    if q1.is_zero() {
        return Err(Error::LogDivergence(m.to_string()));
    }
    let mut out = m.clone();
    if q1.is_negative() {
        out.set_exp(Base::U, q1);
    } else {
        out.set_exp(Base::U, Q::zero());
        out.set_exp(Base::UInf, m.exp(Base::UInf) + q1);
    }
    out.class = CoeffClass::Bounded;
    Ok(out)
}

/// Constant in `∫_{u∞}^{u} |u′|^q du′ ≤ c |u|^{q+1}` for `q < −1`.
pub fn integrate_u_constant(e: Q) -> Option<Q> {
    let q1 = e + Q::one();
    q1.is_negative().then(|| Q::one() / -q1)
}

/// Closed form of `∫_{u∞}^{u} |u′|^q du′` for `u∞ < u < 0`.
pub fn exact_u_integral(e: f64, u: f64, u_inf: f64) -> f64 {
    let (x, y) = (u.abs(), u_inf.abs());
    if (e + 1.0).abs() < 1e-15 {
        return (y / x).ln();
    }
    (y.powf(e + 1.0) - x.powf(e + 1.0)) / (e + 1.0)
}

/// `∫₀^{u̅} m du̅′` over an interval of length at most 1.
pub fn integrate_ubar(m: &WeightMonomial) -> WeightMonomial {
    m.clone()
}

// ── Flux ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypersurface {
    H,
    Hb,
}

impl FromStr for Hypersurface {
    type Err = Error;
    fn from_str(s: &str) -> Result<Hypersurface> {
        match s {
            "H" => Ok(Hypersurface::H),
            "Hb" => Ok(Hypersurface::Hb),
            _ => Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!("unknown hypersurface `{s}`"),
            }),
        }
    }
}

impl fmt::Display for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypersurface::H => "H",
            Hypersurface::Hb => "Hb",
        })
    }
}

/// Cauchy–Schwarz against a flux norm. For `∫ W ‖φ‖_{L²_sc(S)}`, returns the
/// factor multiplying `‖φ‖_{L²_sc}` of the hypersurface:
/// on `H` (measure `du̅`) the factor is `W`;
/// on `H̄` (measure `a/|u′|² du′`) it is `(∫ W² |u′|²/a du′)^{1/2}`.
pub fn cauchy_schwarz_flux(w: &WeightMonomial, hyp: Hypersurface) -> Result<WeightMonomial> {
    match hyp {
        Hypersurface::H => Ok(w.clone()),
        Hypersurface::Hb => {
            let sq = w.pow(qi(2)).mul(&WeightMonomial::au(qi(-1), qi(2)));
            let mut out = integrate_u(&sq)?.pow(q(1, 2));
            out.class = CoeffClass::Bounded;
            Ok(out)
        }
    }
}

// ── Dominance ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Small,
    Borderline,
    Fails,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Small => "small",
            Status::Borderline => "borderline",
            Status::Fails => "fails",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetVerdict {
    pub bound: WeightMonomial,
    #[serde(serialize_with = "serialize_q")]
    pub slack: Q,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn positive_part(x: Q) -> Q {
    if x.is_positive() {
        x
    } else {
        Q::zero()
    }
}

/// Exponent of `a` bounding `m` under `|u| ≥ a/4`, `u̅ ≤ 1`, `δ ≤ 1`,
/// `O, R ≤ a^{e}` and `|u∞| ≥ |u|` unbounded.
pub fn dominance_check(m: &WeightMonomial, regime: &RegimeParameters) -> BudgetVerdict {
    let s = m.exp(Base::UInf);
    // |u∞|^s ≤ |u|^s for s ≤ 0, so the two exponents combine.
    let q_eff = m.exp(Base::U) + s;
    let or = positive_part(m.exp(Base::O)) + positive_part(m.exp(Base::R));
    let slack = m.exp(Base::A) + q_eff + or * regime.or_exponent;
    let reason = if s.is_positive() {
        Some(format!("positive |u∞| exponent {}", fmt_q(&s)))
    } else if q_eff.is_positive() {
        Some(format!("positive |u| exponent {}", fmt_q(&q_eff)))
    } else if m.exp(Base::Delta).is_negative() {
        Some(format!(
            "negative δ exponent {}",
            fmt_q(&m.exp(Base::Delta))
        ))
    } else {
        None
    };
    let status = match (&reason, slack.signum()) {
        (Some(_), _) => Status::Fails,
        (None, x) if x.is_negative() => Status::Small,
        (None, x) if x.is_zero() => Status::Borderline,
        _ => Status::Fails,
    };
    BudgetVerdict {
        bound: m.clone(),
        slack,
        status,
        reason,
    }
}

// ── Energy pairs ──

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyPair {
    pub psi1: Vec<String>,
    pub psi2: Vec<String>,
    #[serde(serialize_with = "serialize_q")]
    pub lambda0: Q,
    /// `(1 + i)/2 + s₂(Ψ₁)`.
    #[serde(serialize_with = "serialize_affine")]
    pub lambda: Affine,
    /// `|u′|` exponent `2i + 4 s₂(Ψ₁)` in the bulk integrals.
    #[serde(serialize_with = "serialize_affine")]
    pub bulk_weight: Affine,
    #[serde(serialize_with = "serialize_terms")]
    pub f_shape: Vec<SchematicTerm>,
    #[serde(serialize_with = "serialize_terms")]
    pub g_shape: Vec<SchematicTerm>,
}

fn serialize_terms<S: serde::Serializer>(
    ts: &[SchematicTerm],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(ToString::to_string))
}

const F_ALPHA: [&str; 2] = [
    "nab^{i1} psi^{i2+1} nab^{i3} (chibh, trchib) nab^{i4} alpha | i1+i2+i3+i4+1=i",
    "nab^{i1} psi^{i2} nab^{i3} (psi, chih, chibh, trchibt) nab^{i4} (Psi, beta, alpha) | i1+i2+i3+i4=i",
];
const G_ALPHA: [&str; 1] =
    ["nab^{i1} psi^{i2} nab^{i3} (psi, chih) nab^{i4} (beta, alpha) | i1+i2+i3+i4=i"];
const F_REST: [&str; 2] = [
    "nab^{i1} psi^{i2+1} nab^{i3} (chibh, trchib) nab^{i4} Psi | i1+i2+i3+i4+1=i",
    "nab^{i1} psi^{i2} nab^{i3} (psi, chih, chibh, trchibt) nab^{i4} Psi | i1+i2+i3+i4=i",
];
const G_REST: [&str; 1] =
    ["nab^{i1} psi^{i2} nab^{i3} (psi, chih, chibh) nab^{i4} (Psi, alpha) | i1+i2+i3+i4=i"];

fn parse_all(lines: &[&str]) -> Vec<SchematicTerm> {
    lines
        .iter()
        .map(|l| parse_term(l).expect("shipped energy shape parses"))
        .collect()
}

/// The four Bianchi pairs `(Ψ₁, Ψ₂)` with
/// `∇₃Ψ₁ + λ₀ trχ̄ Ψ₁ − 𝒟Ψ₂ = F` and `∇₄Ψ₂ − 𝒟*Ψ₁ = G`.
pub fn energy_pairs() -> Vec<EnergyPair> {
    let rows: [(&[&str], &[&str], Q); 4] = [
        (&["alpha"], &["beta"], qi(0)),
        (&["beta"], &["rho", "sigma"], q(1, 2)),
        (&["rho", "sigma"], &["betabar"], qi(1)),
        (&["betabar"], &["alphabar"], q(3, 2)),
    ];
    rows.iter()
        .enumerate()
        .map(|(k, (p1, p2, s2))| {
            let (f, g) = if k == 0 {
                (&F_ALPHA[..], &G_ALPHA[..])
            } else {
                (&F_REST[..], &G_REST[..])
            };
            EnergyPair {
                psi1: p1.iter().map(|s| s.to_string()).collect(),
                psi2: p2.iter().map(|s| s.to_string()).collect(),
                lambda0: q(1, 2) + s2,
                lambda: Affine::new(q(1, 2) + s2, q(1, 2)),
                bulk_weight: Affine::new(qi(4) * s2, qi(2)),
                f_shape: parse_all(f),
                g_shape: parse_all(g),
            }
        })
        .collect()
}
