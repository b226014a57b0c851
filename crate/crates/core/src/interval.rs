//! Scalar interval arithmetic for building natural inclusion functions.
//!
//! Endpoints are computed in round-to-nearest; no outward rounding is applied.

use core::f64::consts::{FRAC_PI_2, TAU};
use core::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::arg("interval endpoints out of order"));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn scale(self, k: f64) -> Self {
        if k >= 0.0 {
            Self { lo: k * self.lo, hi: k * self.hi }
        } else {
            Self { lo: k * self.hi, hi: k * self.lo }
        }
    }

    pub fn sin(self) -> Self {
        interval_sin(self)
    }

    pub fn cos(self) -> Self {
        interval_sin(Interval { lo: self.lo + FRAC_PI_2, hi: self.hi + FRAC_PI_2 })
    }

    pub fn powi(self, k: u32) -> Self {
        match k {
            0 => Self::point(1.0),
            1 => self,
            _ => {
                let a = self.lo.powi(k as i32);
                let b = self.hi.powi(k as i32);
                if k % 2 == 1 || self.lo >= 0.0 {
                    Self { lo: a.min(b), hi: a.max(b) }
                } else if self.hi <= 0.0 {
                    Self { lo: b, hi: a }
                } else {
                    Self { lo: 0.0, hi: a.max(b) }
                }
            }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: self.lo - o.hi, hi: self.hi - o.lo }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Exact range of `sin` over `[lo, hi]`.
///
/// Interior extrema sit at `π/2 + 2πk` (value 1) and `−π/2 + 2πk` (value −1).
pub fn interval_sin(i: Interval) -> Interval {
    if i.width() >= TAU {
        return Interval { lo: -1.0, hi: 1.0 };
    }
    let (a, b) = (i.lo.sin(), i.hi.sin());
    let mut lo = a.min(b);
    let mut hi = a.max(b);
    if contains_phase(i, FRAC_PI_2) {
        hi = 1.0;
    }
    if contains_phase(i, -FRAC_PI_2) {
        lo = -1.0;
    }
    Interval { lo, hi }
}

/// Whether `phase + 2πk ∈ [lo, hi]` for some integer `k`.
fn contains_phase(i: Interval, phase: f64) -> bool {
    let k = ((i.lo - phase) / TAU).ceil();
    let candidate = phase + k * TAU;
    candidate <= i.hi || (candidate - TAU >= i.lo && candidate - TAU <= i.hi)
}
