//! Exact weight monomials over `a`, `|u|`, `|u∞|`, `O`, `R` and `δ`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, qi, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Base {
    A,
    U,
    UInf,
    O,
    R,
    Delta,
}

impl Base {
    pub const ALL: [Base; 6] = [Base::A, Base::U, Base::UInf, Base::O, Base::R, Base::Delta];

    pub fn symbol(self) -> &'static str {
        match self {
            Base::A => "a",
            Base::U => "|u|",
            Base::UInf => "|uInf|",
            Base::O => "O",
            Base::R => "R",
            Base::Delta => "delta",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Whether absolute constants have been absorbed into the monomial.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub enum CoeffClass {
    #[default]
    Unit,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WeightMonomial {
    exps: [Q; 6],
    pub class: CoeffClass,
}

impl WeightMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn base(b: Base, e: Q) -> Self {
        let mut m = Self::one();
        m.exps[b.index()] = e;
        m
    }

    /// `a^pa |u|^pu` with integer-over-denominator shorthand.
    pub fn au(pa: Q, pu: Q) -> Self {
        Self::one().with(Base::A, pa).with(Base::U, pu)
    }

    pub fn with(mut self, b: Base, e: Q) -> Self {
        self.exps[b.index()] = e;
        self
    }

    pub fn bounded(mut self) -> Self {
        self.class = CoeffClass::Bounded;
        self
    }

    pub fn exp(&self, b: Base) -> Q {
        self.exps[b.index()]
    }

    pub fn set_exp(&mut self, b: Base, e: Q) {
        self.exps[b.index()] = e;
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(Zero::is_zero)
    }

    pub fn mul(&self, o: &WeightMonomial) -> WeightMonomial {
        let mut exps = self.exps;
        for (e, x) in exps.iter_mut().zip(o.exps.iter()) {
            *e += x;
        }
        let class = self.class.max(o.class);
        WeightMonomial { exps, class }
    }

    pub fn pow(&self, k: Q) -> WeightMonomial {
        let mut exps = self.exps;
        for e in exps.iter_mut() {
            *e *= k;
        }
        WeightMonomial {
            exps,
            class: self.class,
        }
    }

    pub fn inv(&self) -> WeightMonomial {
        self.pow(-Q::one())
    }

    pub fn div(&self, o: &WeightMonomial) -> WeightMonomial {
        self.mul(&o.inv())
    }

    /// Replaces `|u|` by `|u∞|` (evaluation at the initial cone).
    pub fn at_u_inf(&self) -> WeightMonomial {
        let mut m = self.clone();
        let e = m.exp(Base::U);
        m.set_exp(Base::U, Q::zero());
        m.set_exp(Base::UInf, m.exp(Base::UInf) + e);
        m
    }

    /// Numerical value at concrete parameters.
    pub fn eval(&self, a: f64, u: f64, u_inf: f64, o: f64, r: f64, delta: f64) -> f64 {
        let vals = [a, u.abs(), u_inf.abs(), o, r, delta];
        self.exps
            .iter()
            .zip(vals)
            .map(|(e, v)| v.powf(*e.numer() as f64 / *e.denom() as f64))
            .product()
    }

    pub fn parse(src: &str) -> Result<WeightMonomial> {
        let toks: Vec<&str> = src.split_whitespace().collect();
        let (m, used) = parse_prefix(&toks)?;
        if used != toks.len() {
            return Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: format!("unexpected `{}` in monomial", toks[used]),
            });
        }
        Ok(m)
    }
}

/// Splits `x^{p}` / `x^p` into base text and exponent.
fn split_power(tok: &str) -> Result<(&str, Q)> {
    match tok.split_once('^') {
        None => Ok((tok, Q::one())),
        Some((b, e)) => {
            let e = e
                .strip_prefix('{')
                .and_then(|e| e.strip_suffix('}'))
                .unwrap_or(e);
            Ok((b, parse_q(e)?))
        }
    }
}

pub fn base_of(sym: &str) -> Option<Base> {
    Some(match sym {
        "a" => Base::A,
        "|u|" | "|u'|" => Base::U,
        "|uInf|" | "|u_inf|" | "|u∞|" => Base::UInf,
        "O" => Base::O,
        "R" => Base::R,
        "delta" | "δ" => Base::Delta,
        _ => return None,
    })
}

/// Consumes the longest prefix of whitespace-split tokens forming a monomial.
/// Returns the monomial and the number of tokens consumed.
pub fn parse_prefix(toks: &[&str]) -> Result<(WeightMonomial, usize)> {
    let mut m = WeightMonomial::one();
    let mut used = 0;
    for tok in toks {
        if *tok == "1" {
            used += 1;
            continue;
        }
        if *tok == "C" {
            m.class = CoeffClass::Bounded;
            used += 1;
            continue;
        }
        let (b, e) = split_power(tok)?;
        match base_of(b) {
            Some(base) => {
                m.exps[base.index()] += e;
                used += 1;
            }
            None => break,
        }
    }
    Ok((m, used))
}

impl fmt::Display for WeightMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.class == CoeffClass::Bounded {
            parts.push("C".to_string());
        }
        for b in Base::ALL {
            let e = self.exp(b);
            if e.is_zero() {
                continue;
            }
            if e == qi(1) {
                parts.push(b.symbol().to_string());
            } else {
                parts.push(format!("{}^{{{}}}", b.symbol(), fmt_q(&e)));
            }
        }
        if parts.iter().all(|p| p == "C") {
            parts.push("1".to_string());
        }
        write!(f, "{}", parts.join(" "))
    }
}

impl Serialize for WeightMonomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WeightMonomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        WeightMonomial::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn display_and_parse_round_trip() {
        let m = WeightMonomial::au(q(3, 2), qi(-3)).with(Base::O, qi(2));
        let s = m.to_string();
        assert_eq!(s, "a^{3/2} |u|^{-3} O^{2}");
        assert_eq!(WeightMonomial::parse(&s).unwrap(), m);
        assert_eq!(WeightMonomial::one().to_string(), "1");
        assert_eq!(WeightMonomial::parse("1").unwrap(), WeightMonomial::one());
        assert_eq!(
            WeightMonomial::parse("a |u|^-1").unwrap(),
            WeightMonomial::au(qi(1), qi(-1))
        );
    }

    #[test]
    fn multiplication_adds_exponents() {
        let m = WeightMonomial::au(q(1, 2), qi(-1));
        let n = WeightMonomial::au(q(1, 2), qi(-1));
        assert_eq!(m.mul(&n), WeightMonomial::au(qi(1), qi(-2)));
        assert!(m.mul(&m.inv()).is_one());
    }

    #[test]
    fn unknown_token_rejected() {
        assert!(WeightMonomial::parse("a zeta").is_err());
    }

    #[test]
    fn bounded_class_renders() {
        let m = WeightMonomial::one().bounded();
        assert_eq!(m.to_string(), "C 1");
        assert_eq!(WeightMonomial::parse("C 1").unwrap(), m);
    }
}
