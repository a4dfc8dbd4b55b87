//! Closed `f64` intervals for enclosure-based pruning.
//!
//! Arithmetic is not directed-rounded; every operation widens its result by a
//! few ulps instead, which is enough for the enclosures this crate builds
//! (callers add their own explicit margin on top).

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

const WIDEN: f64 = 4.0 * f64::EPSILON;

fn widen(lo: f64, hi: f64) -> Interval {
    Interval {
        lo: lo - WIDEN * lo.abs(),
        hi: hi + WIDEN * hi.abs(),
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn inflate(&self, eps: f64) -> Self {
        Interval {
            lo: self.lo - eps,
            hi: self.hi + eps,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn scale(&self, k: f64) -> Interval {
        if k >= 0.0 {
            widen(self.lo * k, self.hi * k)
        } else {
            widen(self.hi * k, self.lo * k)
        }
    }

    pub fn powi(&self, e: u32) -> Interval {
        match e {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                let a = self.lo.powi(e as i32);
                let b = self.hi.powi(e as i32);
                if e % 2 == 1 || self.lo >= 0.0 {
                    widen(a.min(b), a.max(b))
                } else if self.hi <= 0.0 {
                    widen(b.min(a), a.max(b))
                } else {
                    widen(0.0, a.max(b))
                }
            }
        }
    }

    /// Open-interval test against `(c - r, c + r)`.
    pub fn meets_open_ball(&self, c: f64, r: f64) -> bool {
        self.lo < c + r && self.hi > c - r
    }

    /// Smallest distance from any point of the interval to the integers.
    /// Zero whenever the interval contains an integer.
    pub fn min_dist_to_int(&self) -> f64 {
        if self.width() >= 1.0 {
            return 0.0;
        }
        let k = self.lo.floor();
        if self.hi >= k + 1.0 || self.lo == k {
            return 0.0;
        }
        (self.lo - k).min(k + 1.0 - self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        widen(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        widen(self.lo - rhs.hi, self.hi - rhs.lo)
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
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        widen(lo, hi)
    }
}
