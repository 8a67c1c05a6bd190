//! Integer interval arithmetic with infinite endpoints.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ext {
    NegInf,
    Fin(BigInt),
    PosInf,
}

impl Ext {
    fn rank(&self) -> i8 {
        match self {
            Ext::NegInf => -1,
            Ext::Fin(_) => 0,
            Ext::PosInf => 1,
        }
    }

    fn sign(&self) -> i8 {
        match self {
            Ext::NegInf => -1,
            Ext::PosInf => 1,
            Ext::Fin(n) if n.is_zero() => 0,
            Ext::Fin(n) if n.is_negative() => -1,
            Ext::Fin(_) => 1,
        }
    }

    fn inf(sign: i8) -> Ext {
        if sign < 0 {
            Ext::NegInf
        } else {
            Ext::PosInf
        }
    }

    fn add(&self, o: &Ext) -> Option<Ext> {
        Some(match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => return None,
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            _ => Ext::PosInf,
        })
    }

    fn neg(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(n) => Ext::Fin(-n),
        }
    }

    /// Endpoint product; `0 * inf` is 0 as usual for interval bounds.
    fn mul(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            _ => {
                let s = self.sign() * o.sign();
                if s == 0 {
                    Ext::Fin(BigInt::zero())
                } else {
                    Ext::inf(s)
                }
            }
        }
    }

    /// Truncating endpoint quotient; `b` is never zero.
    fn tdiv(&self, b: &Ext) -> Ext {
        match (self, b) {
            (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x / y),
            (Ext::Fin(_), _) => Ext::Fin(BigInt::zero()),
            (_, _) => {
                let s = self.sign() * b.sign();
                Ext::inf(s)
            }
        }
    }

    // With an infinite divisor the quotient tends to 0; using 0 for both
    // roundings keeps the enclosure sound.
    fn div_floor(&self, b: &Ext) -> Ext {
        match (self, b) {
            (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x.div_floor(y)),
            (Ext::Fin(_), _) => Ext::Fin(BigInt::zero()),
            _ => Ext::inf(self.sign() * b.sign()),
        }
    }

    fn div_ceil(&self, b: &Ext) -> Ext {
        match (self, b) {
            (Ext::Fin(x), Ext::Fin(y)) => Ext::Fin(x.div_ceil(y)),
            (Ext::Fin(_), _) => Ext::Fin(BigInt::zero()),
            _ => Ext::inf(self.sign() * b.sign()),
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// A non-empty integer interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Ext,
    pub hi: Ext,
}

impl Interval {
    pub fn full() -> Interval {
        Interval {
            lo: Ext::NegInf,
            hi: Ext::PosInf,
        }
    }

    pub fn point(n: BigInt) -> Interval {
        Interval {
            lo: Ext::Fin(n.clone()),
            hi: Ext::Fin(n),
        }
    }

    pub fn new(lo: Ext, hi: Ext) -> Option<Interval> {
        if lo <= hi && lo != Ext::PosInf && hi != Ext::NegInf {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn singleton(&self) -> Option<&BigInt> {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        let e = Ext::Fin(n.clone());
        self.lo <= e && e <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigInt::zero())
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        Interval::new(
            self.lo.clone().max(o.lo.clone()),
            self.hi.clone().min(o.hi.clone()),
        )
    }

    /// Number of integers in the interval, `None` when unbounded.
    pub fn width(&self) -> Option<BigInt> {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => Some(b - a + 1),
            _ => None,
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let lo = self.lo.add(&o.lo).unwrap_or(Ext::NegInf);
        let hi = self.hi.add(&o.hi).unwrap_or(Ext::PosInf);
        Interval { lo, hi }
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            self.lo.mul(&o.lo),
            self.lo.mul(&o.hi),
            self.hi.mul(&o.lo),
            self.hi.mul(&o.hi),
        ];
        Interval {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        }
    }

    pub fn square(&self) -> Interval {
        let m = self.mul(self);
        if self.contains_zero() {
            Interval {
                lo: Ext::Fin(BigInt::zero()),
                hi: m.hi,
            }
        } else {
            m
        }
    }

    /// Truncating division; `None` when the divisor can only be zero.
    pub fn tdiv(&self, o: &Interval) -> Option<Interval> {
        let mut parts = Vec::new();
        let neg = o.intersect(&Interval {
            lo: Ext::NegInf,
            hi: Ext::Fin(-BigInt::one()),
        });
        let pos = o.intersect(&Interval {
            lo: Ext::Fin(BigInt::one()),
            hi: Ext::PosInf,
        });
        for d in [neg, pos].into_iter().flatten() {
            let c = [
                self.lo.tdiv(&d.lo),
                self.lo.tdiv(&d.hi),
                self.hi.tdiv(&d.lo),
                self.hi.tdiv(&d.hi),
            ];
            let mut lo = c.iter().min().unwrap().clone();
            let mut hi = c.iter().max().unwrap().clone();
            // Quotients of a range spanning zero reach zero.
            if self.contains_zero() {
                lo = lo.min(Ext::Fin(BigInt::zero()));
                hi = hi.max(Ext::Fin(BigInt::zero()));
            }
            parts.push(Interval { lo, hi });
        }
        let mut it = parts.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |a, b| Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
        }))
    }

    /// `{ a : a * b ∈ self for some b ∈ divisor }` over integers, for a divisor
    /// that excludes zero. Returns `None` if the divisor contains zero.
    pub fn mul_inverse(&self, divisor: &Interval) -> Option<Interval> {
        if divisor.contains_zero() {
            return None;
        }
        let corners = [
            (&self.lo, &divisor.lo),
            (&self.lo, &divisor.hi),
            (&self.hi, &divisor.lo),
            (&self.hi, &divisor.hi),
        ];
        let lo = corners.iter().map(|(t, b)| t.div_ceil(b)).min().unwrap();
        let hi = corners.iter().map(|(t, b)| t.div_floor(b)).max().unwrap();
        Some(Interval { lo, hi })
    }

    /// Values whose square can lie in `self`.
    pub fn sqrt_inverse(&self) -> Option<Interval> {
        match &self.hi {
            Ext::PosInf => Some(Interval::full()),
            Ext::NegInf => None,
            Ext::Fin(h) if h.is_negative() => None,
            Ext::Fin(h) => {
                let r = h.sqrt();
                Some(Interval {
                    lo: Ext::Fin(-r.clone()),
                    hi: Ext::Fin(r),
                })
            }
        }
    }
}
