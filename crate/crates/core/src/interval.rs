//! Closed intervals with rational endpoints.
//!
//! Field operations are exact. Irrational operations (sqrt, real powers,
//! exp, ln, sin, cos) return enclosures: sqrt through integer square roots at
//! a requested bit precision, the rest through f64 evaluation widened by a
//! relative margin that dominates libm error.

use crate::rat::{self, Rat};
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

/// Relative widening applied around f64 results.
const F64_REL: f64 = 1.0 / (1u64 << 44) as f64;
const F64_ABS: f64 = 1e-300;

fn widen(v: f64) -> RatInterval {
    assert!(v.is_finite(), "non-finite value in interval evaluation");
    let e = v.abs() * F64_REL + F64_ABS;
    RatInterval::new(rat::from_f64(v - e).expect("finite"), rat::from_f64(v + e).expect("finite"))
}

impl RatInterval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval with lo > hi");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rat) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn from_i64(n: i64) -> Self {
        RatInterval::point(rat::int(n))
    }

    pub fn hull_of(a: &Rat, b: &Rat) -> Self {
        if a <= b {
            RatInterval::new(a.clone(), b.clone())
        } else {
            RatInterval::new(b.clone(), a.clone())
        }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / rat::int(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Rat::zero())
    }

    pub fn encloses(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        RatInterval::new(
            rat::min_rat(&self.lo, &other.lo).clone(),
            rat::max_rat(&self.hi, &other.hi).clone(),
        )
    }

    /// Smallest absolute value.
    pub fn mig(&self) -> Rat {
        if self.contains_zero() {
            Rat::zero()
        } else {
            rat::min_rat(&self.lo.abs(), &self.hi.abs()).clone()
        }
    }

    /// Largest absolute value.
    pub fn mag(&self) -> Rat {
        rat::max_rat(&self.lo.abs(), &self.hi.abs()).clone()
    }

    pub fn abs(&self) -> RatInterval {
        RatInterval::new(self.mig(), self.mag())
    }

    /// Round endpoints outward to multiples of 2^-bits.
    pub fn round_out(&self, bits: u32) -> RatInterval {
        RatInterval::new(rat::floor_bits(&self.lo, bits), rat::ceil_bits(&self.hi, bits))
    }

    pub fn recip(&self) -> Option<RatInterval> {
        if self.contains_zero() {
            return None;
        }
        let (a, b) = (Rat::one() / &self.hi, Rat::one() / &self.lo);
        Some(RatInterval::new(a, b))
    }

    pub fn div(&self, other: &RatInterval) -> Option<RatInterval> {
        other.recip().map(|r| self * &r)
    }

    pub fn powi(&self, e: u32) -> RatInterval {
        if e == 0 {
            return RatInterval::point(Rat::one());
        }
        let a = rat::pow_int(&self.lo, e);
        let b = rat::pow_int(&self.hi, e);
        if e % 2 == 1 {
            RatInterval::new(a, b)
        } else if self.contains_zero() {
            RatInterval::new(Rat::zero(), rat::max_rat(&a, &b).clone())
        } else {
            RatInterval::hull_of(&a, &b)
        }
    }

    pub fn sqrt(&self, bits: u32) -> Option<RatInterval> {
        if self.lo.is_negative() {
            return None;
        }
        let (lo, _) = rat::sqrt_bounds(&self.lo, bits);
        let (_, hi) = rat::sqrt_bounds(&self.hi, bits);
        Some(RatInterval::new(lo, hi))
    }

    /// x^p for x > 0 (x >= 0 when p > 0) and a real exponent interval p.
    pub fn pow(&self, p: &RatInterval, bits: u32) -> Option<RatInterval> {
        if p.is_point() && p.lo.is_integer() && !p.lo.is_negative() {
            let e = p.lo.to_integer().to_u32()?;
            return Some(self.powi(e));
        }
        if p.is_point() && p.lo == rat::rat(1, 2) {
            return self.sqrt(bits);
        }
        if self.lo.is_negative() || (self.lo.is_zero() && !p.lo.is_positive()) {
            return None;
        }
        // monotone in each argument on the positive orthant: corners suffice
        let mut out: Option<RatInterval> = None;
        for x in [&self.lo, &self.hi] {
            for e in [&p.lo, &p.hi] {
                let v = if x.is_zero() {
                    RatInterval::point(Rat::zero())
                } else {
                    widen(rat::to_f64(x).powf(rat::to_f64(e)))
                };
                out = Some(match out {
                    None => v,
                    Some(o) => o.hull(&v),
                });
            }
        }
        let r = out?;
        let lo = if r.lo.is_negative() { Rat::zero() } else { r.lo };
        Some(RatInterval::new(lo, r.hi))
    }

    pub fn exp(&self) -> RatInterval {
        let a = widen(rat::to_f64(&self.lo).exp());
        let b = widen(rat::to_f64(&self.hi).exp());
        let lo = if a.lo.is_negative() { Rat::zero() } else { a.lo };
        RatInterval::new(lo, b.hi)
    }

    pub fn ln(&self) -> Option<RatInterval> {
        if !self.lo.is_positive() {
            return None;
        }
        let a = widen(rat::to_f64(&self.lo).ln());
        let b = widen(rat::to_f64(&self.hi).ln());
        Some(RatInterval::new(a.lo, b.hi))
    }

    fn trig(&self, f: fn(f64) -> f64, peaks: f64) -> RatInterval {
        let (a, b) = (rat::to_f64(&self.lo), rat::to_f64(&self.hi));
        if b - a >= 2.0 * std::f64::consts::PI {
            return RatInterval::new(rat::int(-1), rat::int(1));
        }
        let ends = widen(f(a)).hull(&widen(f(b)));
        // extrema sit at peaks + k*pi; include +-1 when one lies inside (with slack)
        let mut lo = ends.lo;
        let mut hi = ends.hi;
        let k0 = ((a - peaks) / std::f64::consts::PI).floor() as i64 - 1;
        let k1 = ((b - peaks) / std::f64::consts::PI).ceil() as i64 + 1;
        for k in k0..=k1 {
            let x = peaks + k as f64 * std::f64::consts::PI;
            if x >= a - 1e-9 && x <= b + 1e-9 {
                let v = f(x);
                if v > 0.0 {
                    hi = rat::int(1);
                } else {
                    lo = rat::int(-1);
                }
            }
        }
        let clamp = |x: Rat| x.max(rat::int(-1)).min(rat::int(1));
        RatInterval::new(clamp(lo), clamp(hi))
    }

    pub fn sin(&self) -> RatInterval {
        self.trig(f64::sin, std::f64::consts::FRAC_PI_2)
    }

    pub fn cos(&self) -> RatInterval {
        self.trig(f64::cos, 0.0)
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (rat::to_f64(&self.lo), rat::to_f64(&self.hi))
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl<'a> Add for &'a RatInterval {
    type Output = RatInterval;
    fn add(self, o: &'a RatInterval) -> RatInterval {
        RatInterval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }
}

impl<'a> Sub for &'a RatInterval {
    type Output = RatInterval;
    fn sub(self, o: &'a RatInterval) -> RatInterval {
        RatInterval::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }
}

impl<'a> Mul for &'a RatInterval {
    type Output = RatInterval;
    fn mul(self, o: &'a RatInterval) -> RatInterval {
        if self.is_point() && o.is_point() {
            return RatInterval::point(&self.lo * &o.lo);
        }
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().expect("four products").clone();
        let hi = c.iter().max().expect("four products").clone();
        RatInterval::new(lo, hi)
    }
}

impl Neg for &RatInterval {
    type Output = RatInterval;
    fn neg(self) -> RatInterval {
        RatInterval::new(-&self.hi, -&self.lo)
    }
}

impl Add for RatInterval {
    type Output = RatInterval;
    fn add(self, o: RatInterval) -> RatInterval {
        &self + &o
    }
}

impl Sub for RatInterval {
    type Output = RatInterval;
    fn sub(self, o: RatInterval) -> RatInterval {
        &self - &o
    }
}

impl Mul for RatInterval {
    type Output = RatInterval;
    fn mul(self, o: RatInterval) -> RatInterval {
        &self * &o
    }
}
