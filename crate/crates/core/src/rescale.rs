//! Exact δ-rescaling `(u, u̅, θ) ↦ δ·(u, u̅, θ)` of coordinates, metric,
//! connection coefficients, curvature components and their bounds.
//!
//! A bound `|X| ≤ c·m(a, |u|)` becomes `|X′| ≤ c·m · δ^{k − p}` in the primed
//! coordinates, where `k` is the homogeneity of `X` and `p` the `|u|`
//! exponent of `m` (from substituting `|u| = |u′|/δ`).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::monomial::{Base, WeightMonomial};
use crate::quantity::QuantityCatalog;
use crate::rational::{fmt_q, q, qi, Q};

// ── Homogeneity ──

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ObjectKind {
    Coordinate,
    Metric,
    InverseMetric,
    Christoffel,
    RiemannLowered,
    Ricci,
    Curvature,
}

impl ObjectKind {
    /// `X′ = δ^k X`.
    pub fn exponent(self) -> i64 {
        match self {
            ObjectKind::Coordinate => 1,
            ObjectKind::Metric => 2,
            ObjectKind::InverseMetric => -2,
            ObjectKind::Christoffel => 0,
            ObjectKind::RiemannLowered => 2,
            ObjectKind::Ricci => -1,
            ObjectKind::Curvature => -2,
        }
    }
}

/// Connection coefficients and null curvature components that rescale.
pub const RESCALED_QUANTITIES: [(&str, ObjectKind); 15] = [
    ("chih", ObjectKind::Ricci),
    ("trchi", ObjectKind::Ricci),
    ("chibh", ObjectKind::Ricci),
    ("trchib", ObjectKind::Ricci),
    ("eta", ObjectKind::Ricci),
    ("etabar", ObjectKind::Ricci),
    ("zeta", ObjectKind::Ricci),
    ("omega", ObjectKind::Ricci),
    ("omegabar", ObjectKind::Ricci),
    ("alpha", ObjectKind::Curvature),
    ("beta", ObjectKind::Curvature),
    ("rho", ObjectKind::Curvature),
    ("sigma", ObjectKind::Curvature),
    ("betabar", ObjectKind::Curvature),
    ("alphabar", ObjectKind::Curvature),
];

pub fn kind_of(name: &str) -> Result<ObjectKind> {
    RESCALED_QUANTITIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| Error::CatalogMiss(name.to_string()))
}

/// `2 − (n4 + nA + n3)`: `g′ = δ²g` and each frame vector carries `δ^{-1}`.
pub fn exponent_from_frame_count(name: &str) -> Result<i64> {
    let q = QuantityCatalog::builtin().get(name)?;
    let (n4, na, n3) = q
        .counts
        .ok_or_else(|| Error::CatalogMiss(name.to_string()))?;
    Ok(2 - (n4 + na + n3) as i64)
}

// ── Bounds ──

fn serialize_big<S: Serializer>(x: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_big(x))
}

pub fn fmt_big(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn big(x: Q) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// `coeff · mono`, with `δ` either symbolic (in `mono`) or folded into `coeff`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bound {
    #[serde(serialize_with = "serialize_big")]
    pub coeff: BigRational,
    pub mono: WeightMonomial,
}

impl Bound {
    pub fn new(mono: WeightMonomial) -> Self {
        Bound {
            coeff: BigRational::one(),
            mono,
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Bound::new(WeightMonomial::parse(src)?))
    }

    pub fn scaled(coeff: BigRational, mono: WeightMonomial) -> Self {
        Bound { coeff, mono }
    }

    fn mul(&self, o: &Bound) -> Bound {
        Bound {
            coeff: &self.coeff * &o.coeff,
            mono: self.mono.mul(&o.mono),
        }
    }

    /// Integer powers only touch the coefficient exactly.
    fn pow(&self, e: Q) -> Result<Bound> {
        if !e.is_integer() && !self.coeff.is_one() {
            return Err(Error::InvalidRegime(format!(
                "numeric scale factor {} raised to non-integer power {}",
                fmt_big(&self.coeff),
                fmt_q(&e)
            )));
        }
        let k = *e.numer();
        let coeff = if k >= 0 {
            num_traits::pow(self.coeff.clone(), k as usize)
        } else {
            num_traits::pow(self.coeff.recip(), (-k) as usize)
        };
        Ok(Bound {
            coeff,
            mono: self.mono.pow(e),
        })
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.is_one() {
            write!(f, "{}", self.mono)
        } else if self.mono.is_one() {
            write!(f, "{}", fmt_big(&self.coeff))
        } else {
            write!(f, "{} {}", fmt_big(&self.coeff), self.mono)
        }
    }
}

/// Scale factor of a rescaling: a symbol (`δ`, `|u∞|`) or an exact number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor(pub Bound);

impl Factor {
    pub fn delta() -> Self {
        Factor(Bound::new(WeightMonomial::base(Base::Delta, qi(1))))
    }

    pub fn u_inf() -> Self {
        Factor(Bound::new(WeightMonomial::base(Base::UInf, qi(1))))
    }

    pub fn value(d: BigRational) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::InvalidRegime(format!(
                "scale factor {} must be positive",
                fmt_big(&d)
            )));
        }
        Ok(Factor(Bound::scaled(d, WeightMonomial::one())))
    }

    pub fn inverse(&self) -> Self {
        Factor(Bound {
            coeff: self.0.coeff.recip(),
            mono: self.0.mono.inv(),
        })
    }

    pub fn compose(&self, o: &Factor) -> Self {
        Factor(self.0.mul(&o.0))
    }
}

/// `|X| ≤ b` to `|X′| ≤ b · s^{k − p}` with `|u|` read as `|u′|`.
pub fn rescale_bound(b: &Bound, kind: ObjectKind, s: &Factor) -> Result<Bound> {
    let e = qi(kind.exponent()) - b.mono.exp(Base::U);
    Ok(b.mul(&s.0.pow(e)?))
}

pub fn rescale_ricci(b: &Bound, s: &Factor) -> Result<Bound> {
    rescale_bound(b, ObjectKind::Ricci, s)
}

pub fn rescale_curvature(b: &Bound, s: &Factor) -> Result<Bound> {
    rescale_bound(b, ObjectKind::Curvature, s)
}

/// Applies the map with `s` and then `1/s`.
pub fn roundtrip(b: &Bound, kind: ObjectKind, s: &Factor) -> Result<Bound> {
    rescale_bound(&rescale_bound(b, kind, s)?, kind, &s.inverse())
}

/// Pointwise value `X′ = δ^k X` in float mode.
pub fn rescale_value(x: f64, kind: ObjectKind, delta: f64) -> f64 {
    x * delta.powi(kind.exponent() as i32)
}

/// Primed coordinates `δ·(u, u̅, θ¹, θ²)`, exact.
pub fn rescale_point(p: &[BigRational; 4], delta: &BigRational) -> [BigRational; 4] {
    p.clone().map(|x| x * delta)
}

// ── Boxed comparisons ──

/// Lower bound on `|u′|` available in the rescaled region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    /// `|u′| ≥ δa/4`
    #[serde(rename = "|u'| >= delta a/4")]
    DeltaAQuarter,
    /// `|u′| ≥ δa`
    #[serde(rename = "|u'| >= delta a")]
    DeltaA,
    /// `|u′| ≥ δa^{1/2}`
    #[serde(rename = "|u'| >= delta a^{1/2}")]
    DeltaSqrtA,
}

impl Constraint {
    /// `(c, m)` with `|u′| ≥ c·m`.
    fn floor(self) -> (BigRational, WeightMonomial) {
        let m = |pa: Q| WeightMonomial::base(Base::Delta, qi(1)).with(Base::A, pa);
        match self {
            Constraint::DeltaAQuarter => (big(q(1, 4)), m(qi(1))),
            Constraint::DeltaA => (BigRational::one(), m(qi(1))),
            Constraint::DeltaSqrtA => (BigRational::one(), m(q(1, 2))),
        }
    }

    pub fn parse(s: &str) -> Result<Constraint> {
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let body = norm
            .trim_start_matches("|u'|>=")
            .trim_start_matches("|u|>=");
        match body {
            "deltaa/4" | "δa/4" => Ok(Constraint::DeltaAQuarter),
            "deltaa" | "δa" => Ok(Constraint::DeltaA),
            "deltaa^{1/2}" | "deltaa^1/2" | "δa^{1/2}" => Ok(Constraint::DeltaSqrtA),
            _ => Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!("unknown constraint `{s}`"),
            }),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::DeltaAQuarter => "|u'| >= delta a/4",
            Constraint::DeltaA => "|u'| >= delta a",
            Constraint::DeltaSqrtA => "|u'| >= delta a^{1/2}",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "verdict")]
pub enum ImprovementVerdict {
    /// `bound ≤ constant · target` under the constraint, for `δ ≤ 1 ≤ a`.
    Pass {
        #[serde(serialize_with = "serialize_big")]
        constant: BigRational,
    },
    Fail {
        residual: WeightMonomial,
    },
    NoImprovementClaimed,
}

impl ImprovementVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ImprovementVerdict::Pass { .. })
    }
}

/// Checks `bound ≤ C·target` by substituting the smallest admissible `|u′|`
/// into the ratio; the residual must be `δ^{≥0} a^{≤0}`.
pub fn dominance_after_rescale(bound: &Bound, target: &Bound, c: Constraint) -> ImprovementVerdict {
    let ratio = bound.mono.div(&target.mono);
    let r = ratio.exp(Base::U);
    let (floor_c, floor_m) = c.floor();
    let mut residual = ratio.clone();
    residual.set_exp(Base::U, Q::zero());
    let mut constant = &bound.coeff / &target.coeff;
    if r.is_negative() {
        residual = residual.mul(&floor_m.pow(r));
        let k = -*r.numer();
        if !r.is_integer() {
            return ImprovementVerdict::Fail { residual: ratio };
        }
        constant *= num_traits::pow(floor_c.recip(), k as usize);
    } else if r.is_positive() {
        return ImprovementVerdict::Fail { residual: ratio };
    }
    let others_zero = [Base::UInf, Base::O, Base::R]
        .iter()
        .all(|b| residual.exp(*b).is_zero());
    if others_zero && residual.exp(Base::Delta) >= Q::zero() && residual.exp(Base::A) <= Q::zero() {
        ImprovementVerdict::Pass { constant }
    } else {
        ImprovementVerdict::Fail { residual }
    }
}

// ── Bound tables ──

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Improvement {
    pub target: Bound,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RescaleRow {
    pub quantity: String,
    pub kind: ObjectKind,
    pub bound: Bound,
    pub rescaled: Bound,
    pub improvement: Option<Improvement>,
    pub verdict: ImprovementVerdict,
}

fn m(s: &str) -> Bound {
    Bound::parse(s).expect("static monomial")
}

/// Quantity, bound, and optional boxed target with its constraint.
pub type BoundRow = (
    &'static str,
    &'static str,
    Option<(&'static str, Constraint)>,
);

/// Interior bounds and the boxed improvements claimed after rescaling.
pub const INTERIOR_BOUNDS: [BoundRow; 14] = [
    ("chih", "a^{1/2} |u|^-1", None),
    ("chibh", "a^{1/2} |u|^-2", None),
    ("trchi", "|u|^-1", None),
    ("eta", "a^{1/2} |u|^-2", None),
    ("etabar", "a^{1/2} |u|^-2", None),
    ("omega", "|u|^-1", None),
    (
        "omegabar",
        "a |u|^-3",
        Some(("delta a^{1/2} |u|^-2", Constraint::DeltaSqrtA)),
    ),
    (
        "trchibt",
        "a |u|^-3",
        Some(("delta a^{1/2} |u|^-2", Constraint::DeltaSqrtA)),
    ),
    ("beta", "a^{1/2} |u|^-2", None),
    ("rho", "a |u|^-3", None),
    ("sigma", "a |u|^-3", None),
    (
        "betabar",
        "a^{3/2} |u|^-4",
        Some(("delta a^{1/2} |u|^-3", Constraint::DeltaA)),
    ),
    ("alphabar", "a^2 |u|^-5", None),
    ("alpha", "a^{1/2} |u|^-1", None),
];

fn kind_of_row(name: &str) -> ObjectKind {
    if name == "trchibt" {
        ObjectKind::Ricci
    } else {
        kind_of(name).expect("listed quantity")
    }
}

/// Interior bounds carried to the primed region with symbolic `δ`.
pub fn rescaled_bound_table() -> Vec<RescaleRow> {
    INTERIOR_BOUNDS
        .iter()
        .map(|(name, b, imp)| {
            let kind = kind_of_row(name);
            let bound = m(b);
            let rescaled = rescale_bound(&bound, kind, &Factor::delta()).expect("symbolic factor");
            let improvement = imp.map(|(t, c)| Improvement {
                target: m(t),
                constraint: c,
            });
            let verdict = match &improvement {
                Some(i) => dominance_after_rescale(&rescaled, &i.target, i.constraint),
                None => ImprovementVerdict::NoImprovementClaimed,
            };
            RescaleRow {
                quantity: name.to_string(),
                kind,
                bound,
                rescaled,
                improvement,
                verdict,
            }
        })
        .collect()
}

/// Bounds at the critical scale, where the retarded time runs over `[−1, ·]`.
pub const CRITICAL_SCALE_BOUNDS: [(&str, &str); 12] = [
    ("chih", "a^{1/2} |u|^-1"),
    ("omega", "a^{1/2} |u|^-1"),
    ("trchi", "|u|^-1"),
    ("chibh", "a^{1/2} |uInf|^-1 |u|^-2"),
    ("eta", "a^{1/2} |uInf|^-1 |u|^-2"),
    ("etabar", "a^{1/2} |uInf|^-1 |u|^-2"),
    ("omegabar", "a^{1/2} |uInf|^-1 |u|^-2"),
    ("trchibt", "a^{1/2} |uInf|^-1 |u|^-2"),
    ("beta", "a^{1/2} |u|^-2"),
    ("rho", "a |uInf|^-1 |u|^-3"),
    ("sigma", "a |uInf|^-1 |u|^-3"),
    ("betabar", "a^{1/2} |uInf|^-1 |u|^-3"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub quantity: String,
    pub critical: Bound,
    /// Critical-scale bound scaled up by `|u∞|`.
    pub scaled_up: Bound,
    /// The interior bound of the same quantity.
    pub interior: Bound,
    pub divergent: bool,
}

/// Critical-scale bounds scaled up by `|u∞|`, set against the interior bounds.
/// Rows whose monomials differ are flagged, not reconciled.
pub fn critical_scale_comparison() -> Vec<ComparisonRow> {
    CRITICAL_SCALE_BOUNDS
        .iter()
        .map(|(name, b)| {
            let critical = m(b);
            let scaled_up = rescale_bound(&critical, kind_of_row(name), &Factor::u_inf())
                .expect("symbolic factor");
            let interior = INTERIOR_BOUNDS
                .iter()
                .find(|r| r.0 == *name)
                .map(|r| m(r.1))
                .expect("interior row");
            let divergent = scaled_up != interior;
            ComparisonRow {
                quantity: name.to_string(),
                critical,
                scaled_up,
                interior,
                divergent,
            }
        })
        .collect()
}
