//! Outward-rounded interval arithmetic and directed conversion from exact
//! rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Closed interval `[lo, hi]` with `lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// `[mid − rad, mid + rad]`, rounded outward.
    pub fn around(mid: f64, rad: f64) -> Self {
        let rad = rad.abs();
        Interval {
            lo: (mid - rad).next_down(),
            hi: (mid + rad).next_up(),
        }
    }

    /// Tightest float interval containing an exact rational.
    pub fn from_exact(x: &BigRational) -> Self {
        Interval {
            lo: f64_below(x),
            hi: f64_above(x),
        }
    }

    pub fn from_exact_bounds(lo: &BigRational, hi: &BigRational) -> Self {
        Interval::new(f64_below(lo), f64_above(hi))
    }

    pub fn mid(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, o: Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(self, o: Interval) -> Self {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    /// Widens both ends by `e ≥ 0`.
    pub fn inflate(self, e: f64) -> Self {
        let e = e.abs();
        Interval {
            lo: (self.lo - e).next_down(),
            hi: (self.hi + e).next_up(),
        }
    }

    pub fn sqr(self) -> Self {
        if self.lo >= 0.0 {
            Interval {
                lo: (self.lo * self.lo).next_down().max(0.0),
                hi: (self.hi * self.hi).next_up(),
            }
        } else if self.hi <= 0.0 {
            Interval {
                lo: (self.hi * self.hi).next_down().max(0.0),
                hi: (self.lo * self.lo).next_up(),
            }
        } else {
            let m = self.lo.abs().max(self.hi);
            Interval {
                lo: 0.0,
                hi: (m * m).next_up(),
            }
        }
    }

    /// `1/x` for intervals not containing zero.
    pub fn recip(self) -> Option<Self> {
        if self.contains_zero() {
            return None;
        }
        Some(Interval {
            lo: (1.0 / self.hi).next_down(),
            hi: (1.0 / self.lo).next_up(),
        })
    }

    pub fn checked_div(self, o: Interval) -> Option<Self> {
        o.recip().map(|r| self * r)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo + o.lo).next_down(),
            hi: (self.hi + o.hi).next_up(),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval {
            lo: (self.lo - o.hi).next_down(),
            hi: (self.hi - o.lo).next_up(),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }
}

// ── Exact rationals ──

/// Exact value of a finite float.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Largest float `≤ x`.
pub fn f64_below(x: &BigRational) -> f64 {
    let mut f = x.to_f64().unwrap_or(f64::NAN);
    assert!(f.is_finite(), "rational out of float range");
    while exact(f) > *x {
        f = f.next_down();
    }
    f
}

/// Smallest float `≥ x`.
pub fn f64_above(x: &BigRational) -> f64 {
    let mut f = x.to_f64().unwrap_or(f64::NAN);
    assert!(f.is_finite(), "rational out of float range");
    while exact(f) < *x {
        f = f.next_up();
    }
    f
}

/// Rational bounds `lo ≤ x^{1/4} ≤ hi` for `x > 0`.
pub fn quarter_root_bounds(x: &BigRational) -> (BigRational, BigRational) {
    let guess = x.to_f64().expect("finite").powf(0.25);
    let pow4 = |r: &BigRational| {
        let s = r * r;
        &s * &s
    };
    let mut hi = guess;
    while pow4(&exact(hi)) < *x {
        hi = hi.next_up();
    }
    let mut lo = guess;
    while pow4(&exact(lo)) > *x {
        lo = lo.next_down();
    }
    (exact(lo), exact(hi))
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn max0(x: BigRational) -> BigRational {
    if x.is_negative() {
        BigRational::zero()
    } else {
        x
    }
}

/// `p/q` in lowest terms, or the integer.
pub fn fmt_exact(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
