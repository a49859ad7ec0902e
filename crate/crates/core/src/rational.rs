//! Exact rational helpers shared by the symbolic layers.

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Q = Rational64;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

/// Parses `n`, `-n` or `p/q`.
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::Syntax {
        line: 1,
        col: 1,
        msg: format!("bad rational `{s}`"),
    };
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => s.parse::<i64>().map(Q::from_integer).map_err(|_| bad()),
    }
}

/// `3`, `-1/2`, ... in lowest terms.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn serialize_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

/// Affine expression `c0 + ci·i` in the symbolic commutation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Affine {
    pub c0: Q,
    pub ci: Q,
}

impl Affine {
    pub fn constant(c0: Q) -> Self {
        Affine { c0, ci: Q::zero() }
    }

    pub fn new(c0: Q, ci: Q) -> Self {
        Affine { c0, ci }
    }

    pub fn at(&self, i: i64) -> Q {
        self.c0 + self.ci * qi(i)
    }
}

impl std::ops::Add for Affine {
    type Output = Affine;
    fn add(self, o: Affine) -> Affine {
        Affine {
            c0: self.c0 + o.c0,
            ci: self.ci + o.ci,
        }
    }
}

impl std::fmt::Display for Affine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ci.is_zero() {
            return write!(f, "{}", fmt_q(&self.c0));
        }
        let n = *self.ci.numer();
        let d = *self.ci.denom();
        let num = match n {
            1 => "i".to_string(),
            -1 => "-i".to_string(),
            _ => format!("{n}i"),
        };
        let ci = if d == 1 { num } else { format!("{num}/{d}") };
        if self.c0.is_zero() {
            write!(f, "{ci}")
        } else if self.c0.is_negative() {
            write!(f, "{ci} - {}", fmt_q(&-self.c0))
        } else {
            write!(f, "{ci} + {}", fmt_q(&self.c0))
        }
    }
}
