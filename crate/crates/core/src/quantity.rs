//! Geometric symbols, signatures, anomaly weights and initial-data bounds.

use std::fmt;
use std::sync::OnceLock;

use num_traits::Zero;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::monomial::{Base, WeightMonomial};
use crate::rational::{fmt_q, parse_q, q, qi, Q};

/// Exact half-integer signature `s₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignatureValue(Q);

impl SignatureValue {
    pub fn new(v: Q) -> Option<Self> {
        (*v.denom() <= 2).then_some(SignatureValue(v))
    }

    pub fn half(twice: i64) -> Self {
        SignatureValue(q(twice, 2))
    }

    pub fn value(self) -> Q {
        self.0
    }
}

impl std::ops::Add for SignatureValue {
    type Output = SignatureValue;
    fn add(self, o: SignatureValue) -> SignatureValue {
        SignatureValue(self.0 + o.0)
    }
}

impl fmt::Display for SignatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_q(&self.0))
    }
}

impl Serialize for SignatureValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `0·n4 + ½·nA + 1·n3 − 1`.
pub fn signature_of(n4: u32, n_a: u32, n3: u32) -> SignatureValue {
    let _ = n4;
    SignatureValue(q(n_a as i64, 2) + qi(n3 as i64) - qi(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOp {
    Nab4,
    Nab,
    Nab3,
}

pub fn signature_of_derivative(base: SignatureValue, op: DerivOp) -> SignatureValue {
    let shift = match op {
        DerivOp::Nab4 => Q::zero(),
        DerivOp::Nab => q(1, 2),
        DerivOp::Nab3 => qi(1),
    };
    SignatureValue(base.0 + shift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    Curvature,
    RicciCoefficient,
    MetricComponent,
    Derived,
    Class,
}

impl QuantityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantityKind::Curvature => "curvature",
            QuantityKind::RicciCoefficient => "ricci-coefficient",
            QuantityKind::MetricComponent => "metric-component",
            QuantityKind::Derived => "derived",
            QuantityKind::Class => "class",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "curvature" => QuantityKind::Curvature,
            "ricci-coefficient" => QuantityKind::RicciCoefficient,
            "metric-component" => QuantityKind::MetricComponent,
            "derived" => QuantityKind::Derived,
            "class" => QuantityKind::Class,
            _ => return Err(Error::UnknownSymbol(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantity {
    pub name: String,
    pub rank: u32,
    /// Frame counts `(n4, nA, n3)` when the quantity is a frame contraction.
    pub counts: Option<(u32, u32, u32)>,
    /// `None` for classes whose members have differing signatures.
    pub s2: Option<SignatureValue>,
    pub anomaly: WeightMonomial,
    pub kind: QuantityKind,
    /// Members, for class symbols.
    pub members: Vec<String>,
}

impl Quantity {
    pub fn is_class(&self) -> bool {
        self.kind == QuantityKind::Class
    }
}

/// Names of the sixteen quantities in the signature table, with their values.
pub const SIGNATURE_TABLE: [(&str, i64); 16] = [
    ("alpha", 0),
    ("beta", 1),
    ("rho", 2),
    ("sigma", 2),
    ("K", 2),
    ("betabar", 3),
    ("alphabar", 4),
    ("chi", 0),
    ("omega", 0),
    ("zeta", 1),
    ("eta", 1),
    ("etabar", 1),
    ("trchib", 2),
    ("chibh", 2),
    ("omegabar", 2),
    ("gamma", 0),
];

pub const PSI_MEMBERS: [&str; 7] = [
    "eta", "etabar", "omega", "omegabar", "trchi", "trchibt", "zeta",
];
pub const CAP_PSI_MEMBERS: [&str; 6] = ["alpha", "alphabar", "beta", "betabar", "rho", "sigma"];

fn frame(
    name: &str,
    rank: u32,
    counts: (u32, u32, u32),
    anomaly: WeightMonomial,
    kind: QuantityKind,
) -> Quantity {
    Quantity {
        name: name.to_string(),
        rank,
        counts: Some(counts),
        s2: Some(signature_of(counts.0, counts.1, counts.2)),
        anomaly,
        kind,
        members: Vec::new(),
    }
}

fn plain(
    name: &str,
    rank: u32,
    twice_s2: i64,
    anomaly: WeightMonomial,
    kind: QuantityKind,
) -> Quantity {
    Quantity {
        name: name.to_string(),
        rank,
        counts: None,
        s2: Some(SignatureValue::half(twice_s2)),
        anomaly,
        kind,
        members: Vec::new(),
    }
}

fn class(name: &str, members: &[&str], s2: Option<SignatureValue>) -> Quantity {
    Quantity {
        name: name.to_string(),
        rank: 0,
        counts: None,
        s2,
        anomaly: WeightMonomial::one(),
        kind: QuantityKind::Class,
        members: members.iter().map(|m| m.to_string()).collect(),
    }
}

/// The immutable built-in symbol table.
#[derive(Debug, Clone)]
pub struct QuantityCatalog {
    entries: Vec<Quantity>,
}

impl QuantityCatalog {
    pub fn builtin() -> &'static QuantityCatalog {
        static CAT: OnceLock<QuantityCatalog> = OnceLock::new();
        CAT.get_or_init(build_builtin)
    }

    pub fn get(&self, name: &str) -> Result<&Quantity> {
        self.entries
            .iter()
            .find(|q| q.name == name)
            .ok_or_else(|| Error::CatalogMiss(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|q| q.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Quantity> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Concrete members covered by a symbol: itself for concrete quantities.
    pub fn leaves(&self, name: &str) -> Vec<String> {
        match self.get(name) {
            Ok(q) if q.is_class() => q.members.clone(),
            _ => vec![name.to_string()],
        }
    }

    /// One line per quantity:
    /// `name rank=R counts=n4,nA,n3 s2=S anomaly=M kind=K [members=..]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for q in &self.entries {
            let counts = match q.counts {
                Some((a, b, c)) => format!("{a},{b},{c}"),
                None => "-".to_string(),
            };
            let s2 =
                q.s2.map(|s| s.to_string())
                    .unwrap_or_else(|| "-".to_string());
            let anomaly = q.anomaly.to_string().replace(' ', "*");
            out.push_str(&format!(
                "{} rank={} counts={} s2={} anomaly={} kind={}",
                q.name,
                q.rank,
                counts,
                s2,
                anomaly,
                q.kind.as_str()
            ));
            if !q.members.is_empty() {
                out.push_str(&format!(" members={}", q.members.join(",")));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(src: &str) -> Result<QuantityCatalog> {
        let mut entries = Vec::new();
        for (ln, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syn = |msg: String| Error::Syntax {
                line: ln + 1,
                col: 1,
                msg,
            };
            let mut parts = line.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| syn("missing name".into()))?
                .to_string();
            let mut q = Quantity {
                name,
                rank: 0,
                counts: None,
                s2: None,
                anomaly: WeightMonomial::one(),
                kind: QuantityKind::Derived,
                members: Vec::new(),
            };
            for kv in parts {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| syn(format!("expected key=value, got `{kv}`")))?;
                match k {
                    "rank" => q.rank = v.parse().map_err(|_| syn(format!("bad rank `{v}`")))?,
                    "counts" if v == "-" => {}
                    "counts" => {
                        let c: Vec<u32> = v
                            .split(',')
                            .map(|x| x.parse().map_err(|_| syn(format!("bad counts `{v}`"))))
                            .collect::<Result<_>>()?;
                        if c.len() != 3 {
                            return Err(syn(format!("bad counts `{v}`")));
                        }
                        q.counts = Some((c[0], c[1], c[2]));
                    }
                    "s2" if v == "-" => {}
                    "s2" => {
                        q.s2 = Some(
                            SignatureValue::new(parse_q(v)?)
                                .ok_or_else(|| syn(format!("s2 `{v}` not a half-integer")))?,
                        )
                    }
                    "anomaly" => q.anomaly = WeightMonomial::parse(&v.replace('*', " "))?,
                    "kind" => q.kind = QuantityKind::parse(v)?,
                    "members" => q.members = v.split(',').map(str::to_string).collect(),
                    _ => return Err(syn(format!("unknown key `{k}`"))),
                }
            }
            entries.push(q);
        }
        Ok(QuantityCatalog { entries })
    }
}

fn build_builtin() -> QuantityCatalog {
    use QuantityKind::*;
    let one = WeightMonomial::one;
    let a_m_half = WeightMonomial::au(q(-1, 2), Q::zero());
    let entries = vec![
        frame("alpha", 2, (2, 2, 0), a_m_half.clone(), Curvature),
        frame("beta", 1, (2, 1, 1), one(), Curvature),
        frame("rho", 0, (2, 0, 2), one(), Curvature),
        frame("sigma", 0, (2, 0, 2), one(), Curvature),
        frame("betabar", 1, (1, 1, 2), one(), Curvature),
        frame("alphabar", 2, (0, 2, 2), one(), Curvature),
        frame("K", 0, (0, 4, 0), one(), Curvature),
        frame("chi", 2, (1, 2, 0), one(), RicciCoefficient),
        frame("chih", 2, (1, 2, 0), a_m_half, RicciCoefficient),
        frame("trchi", 0, (1, 2, 0), one(), RicciCoefficient),
        frame("chib", 2, (0, 2, 1), one(), RicciCoefficient),
        frame(
            "chibh",
            2,
            (0, 2, 1),
            WeightMonomial::au(q(1, 2), qi(-1)),
            RicciCoefficient,
        ),
        frame(
            "trchib",
            0,
            (0, 2, 1),
            WeightMonomial::au(qi(1), qi(-2)),
            RicciCoefficient,
        ),
        frame(
            "trchibt",
            0,
            (0, 2, 1),
            WeightMonomial::au(qi(1), qi(-1)),
            Derived,
        ),
        frame("eta", 1, (1, 1, 1), one(), RicciCoefficient),
        frame("etabar", 1, (1, 1, 1), one(), RicciCoefficient),
        frame("zeta", 1, (1, 1, 1), one(), RicciCoefficient),
        frame("omega", 0, (2, 0, 1), one(), RicciCoefficient),
        frame("omegabar", 0, (1, 0, 2), one(), RicciCoefficient),
        frame("gamma", 2, (0, 2, 0), one(), MetricComponent),
        plain("Omega", 0, 0, one(), MetricComponent),
        plain("uinv", 0, 2, one(), Derived),
        plain("one", 0, 0, one(), Derived),
        class("psi", &PSI_MEMBERS, Some(SignatureValue::half(1))),
        class("Psi", &CAP_PSI_MEMBERS, None),
        class("Psi'", &CAP_PSI_MEMBERS[1..], None),
    ];
    QuantityCatalog { entries }
}

/// Sup-norm bound on the initial cone, after the β̄/ᾱ relaxation.
pub fn initial_bound_of(name: &str, regime: &RegimeParameters) -> Result<WeightMonomial> {
    let _ = regime;
    let cat = QuantityCatalog::builtin();
    cat.get(name)?;
    let m = |pa: Q, pu: i64| {
        WeightMonomial::one()
            .with(Base::A, pa)
            .with(Base::UInf, qi(pu))
    };
    Ok(match name {
        "alpha" | "chih" => m(q(1, 2), -1),
        "beta" | "eta" | "etabar" | "zeta" | "chibh" => m(q(1, 2), -2),
        "rho" | "sigma" | "trchibt" | "omegabar" => m(qi(1), -3),
        "betabar" => m(q(3, 2), -4),
        "alphabar" => m(qi(2), -5),
        "omega" | "trchi" => m(qi(0), -1),
        "trchib" => m(qi(0), -1).bounded(),
        "one" => WeightMonomial::one(),
        _ => return Err(Error::NoInitialBound(name.to_string())),
    })
}

/// Quantities with a listed initial bound, in table order.
pub const INITIAL_TABLE: [&str; 16] = [
    "chih", "trchi", "omega", "eta", "etabar", "zeta", "omegabar", "chibh", "trchib", "trchibt",
    "alpha", "beta", "rho", "sigma", "betabar", "alphabar",
];

/// L∞ scale-invariant weight `a^{-s₂}|u|^{2s₂+1}` evaluated at `|u∞|`.
pub fn linf_sc_weight_at_u_inf(s2: SignatureValue) -> WeightMonomial {
    let s = s2.value();
    WeightMonomial::one()
        .with(Base::A, -s)
        .with(Base::UInf, qi(2) * s + qi(1))
}

/// Prefactor that normalizes the weighted initial bound to at most one.
pub fn initial_prefactor(name: &str) -> WeightMonomial {
    match name {
        "chih" | "alpha" => WeightMonomial::au(q(-1, 2), Q::zero()),
        "chibh" => WeightMonomial::one()
            .with(Base::A, q(1, 2))
            .with(Base::UInf, qi(-1)),
        "trchib" => WeightMonomial::one()
            .with(Base::A, qi(1))
            .with(Base::UInf, qi(-2)),
        _ => WeightMonomial::one(),
    }
}

/// `prefactor · ‖q‖_{L∞sc}(u∞)` as a monomial; equals one for every row.
pub fn normalized_initial(name: &str, regime: &RegimeParameters) -> Result<WeightMonomial> {
    let q = QuantityCatalog::builtin().get(name)?;
    let s2 =
        q.s2.ok_or_else(|| Error::AmbiguousSignature(name.to_string()))?;
    let bound = initial_bound_of(name, regime)?;
    let mut out = initial_prefactor(name)
        .mul(&linf_sc_weight_at_u_inf(s2))
        .mul(&bound);
    out.class = Default::default();
    Ok(out)
}

/// `(O+R)²⁰ ≤ a^{1/16}` gives `O, R ≤ a^{1/320}`.
pub const OR_EXPONENT: Q = Q::new_raw(1, 320);

/// Large-parameter regime `(a, u∞, δ, O, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeParameters {
    pub a: f64,
    pub u_inf: f64,
    pub delta: f64,
    pub o_bound: f64,
    pub r_bound: f64,
    /// Exponent `e` in the worst-case substitution `O, R := a^e`.
    #[serde(serialize_with = "crate::rational::serialize_q")]
    pub or_exponent: Q,
}

impl RegimeParameters {
    pub fn new(a: f64, u_inf: f64, delta: f64, o_bound: f64, r_bound: f64) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidRegime(m.to_string()));
        if !(a > 0.0 && a.is_finite()) {
            return bad("a must be positive");
        }
        if !(u_inf < 0.0 && u_inf.is_finite()) {
            return bad("u_inf must be negative");
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return bad("delta must lie in (0, 1]");
        }
        if !(o_bound > 0.0 && r_bound > 0.0) {
            return bad("O and R must be positive");
        }
        if a / 4.0 > u_inf.abs() {
            return bad("a/4 <= |u_inf| violated");
        }
        if 20.0 * (o_bound + r_bound).ln() > a.ln() / 16.0 {
            return bad("(O+R)^20 <= a^(1/16) violated");
        }
        Ok(RegimeParameters {
            a,
            u_inf,
            delta,
            o_bound,
            r_bound,
            or_exponent: OR_EXPONENT,
        })
    }

    /// `a = 2²⁰`, `u∞ = −2³⁰`, `δ = 1`, `O = R = ½` (so `(O+R)²⁰ = 1`).
    pub fn desk() -> Self {
        RegimeParameters {
            a: 1048576.0,
            u_inf: -1073741824.0,
            delta: 1.0,
            o_bound: 0.5,
            r_bound: 0.5,
            or_exponent: OR_EXPONENT,
        }
    }

    pub fn with_or_exponent(mut self, e: Q) -> Self {
        self.or_exponent = e;
        self
    }

    pub fn check_u(&self, u: f64) -> Result<()> {
        if u.abs() < self.a / 4.0 || u.abs() > self.u_inf.abs() {
            return Err(Error::InvalidRegime(format!(
                "|u| = {} outside [a/4, |u_inf|]",
                u.abs()
            )));
        }
        Ok(())
    }

    pub fn check_ubar(&self, ub: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&ub) {
            return Err(Error::InvalidRegime(format!("ubar = {ub} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Quantity-by-quantity consistency of stored signatures with frame counts.
pub fn table_mismatches(cat: &QuantityCatalog) -> Vec<String> {
    cat.iter()
        .filter_map(|q| {
            let (n4, na, n3) = q.counts?;
            (q.s2 != Some(signature_of(n4, na, n3))).then(|| q.name.clone())
        })
        .collect()
}
