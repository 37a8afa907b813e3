//! Axis-aligned boxes with dyadic endpoints.

use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::Zero;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxD {
    #[serde(with = "rat::pair::vec")]
    pub lo: Vec<Rat>,
    #[serde(with = "rat::pair::vec")]
    pub hi: Vec<Rat>,
}

impl BoxD {
    pub fn new(lo: Vec<Rat>, hi: Vec<Rat>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "box with lo > hi");
        BoxD { lo, hi }
    }

    /// Smallest box with 2^-bits endpoints containing the given exact box.
    pub fn outward(lo: &[Rat], hi: &[Rat], bits: u32) -> Self {
        BoxD::new(
            lo.iter().map(|x| rat::floor_bits(x, bits)).collect(),
            hi.iter().map(|x| rat::ceil_bits(x, bits)).collect(),
        )
    }

    pub fn from_intervals(axes: &[RatInterval], bits: u32) -> Self {
        let lo: Vec<Rat> = axes.iter().map(|a| a.lo.clone()).collect();
        let hi: Vec<Rat> = axes.iter().map(|a| a.hi.clone()).collect();
        BoxD::outward(&lo, &hi, bits)
    }

    /// Outward rounding of this box.
    pub fn outward_of(&self, bits: u32) -> BoxD {
        BoxD::outward(&self.lo, &self.hi, bits)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn axis(&self, j: usize) -> RatInterval {
        RatInterval::new(self.lo[j].clone(), self.hi[j].clone())
    }

    pub fn width(&self, j: usize) -> Rat {
        &self.hi[j] - &self.lo[j]
    }

    pub fn center(&self) -> Vec<Rat> {
        (0..self.dim()).map(|j| self.axis(j).mid()).collect()
    }

    pub fn contains(&self, other: &BoxD) -> bool {
        (0..self.dim()).all(|j| self.lo[j] <= other.lo[j] && other.hi[j] <= self.hi[j])
    }

    pub fn contains_point(&self, p: &[Rat]) -> bool {
        (0..self.dim()).all(|j| self.lo[j] <= p[j] && p[j] <= self.hi[j])
    }

    pub fn intersects(&self, other: &BoxD) -> bool {
        (0..self.dim()).all(|j| self.lo[j] <= other.hi[j] && other.lo[j] <= self.hi[j])
    }

    pub fn join(&self, other: &BoxD) -> BoxD {
        BoxD::new(
            self.lo.iter().zip(&other.lo).map(|(a, b)| rat::min_rat(a, b).clone()).collect(),
            self.hi.iter().zip(&other.hi).map(|(a, b)| rat::max_rat(a, b).clone()).collect(),
        )
    }

    pub fn translate(&self, t: &[Rat]) -> BoxD {
        BoxD::new(
            self.lo.iter().zip(t).map(|(a, b)| a + b).collect(),
            self.hi.iter().zip(t).map(|(a, b)| a + b).collect(),
        )
    }

    /// Squared length of the diagonal.
    pub fn diameter_sq(&self) -> Rat {
        (0..self.dim()).map(|j| {
            let w = self.width(j);
            &w * &w
        })
        .fold(Rat::zero(), |a, b| a + b)
    }

    /// Distance between the j-projections (zero when they meet).
    pub fn gap(&self, other: &BoxD, j: usize) -> Rat {
        axis_gap(&self.lo[j], &self.hi[j], &other.lo[j], &other.hi[j])
    }

    /// Largest |x_j - y_j| over x in self, y in other.
    pub fn span(&self, other: &BoxD, j: usize) -> Rat {
        let a = &self.hi[j] - &other.lo[j];
        let b = &other.hi[j] - &self.lo[j];
        if a >= b {
            a
        } else {
            b
        }
    }

    pub fn to_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.lo.iter().map(rat::to_f64).collect(),
            self.hi.iter().map(rat::to_f64).collect(),
        )
    }
}

pub fn axis_gap(alo: &Rat, ahi: &Rat, blo: &Rat, bhi: &Rat) -> Rat {
    if ahi < blo {
        blo - ahi
    } else if bhi < alo {
        alo - bhi
    } else {
        Rat::zero()
    }
}

/// Distance between two finite unions of closed intervals.
pub fn union_gap(a: &[(Rat, Rat)], b: &[(Rat, Rat)]) -> Rat {
    let mut best: Option<Rat> = None;
    // sort both, sweep with the running max of the other side
    let mut ev: Vec<(&Rat, &Rat, bool)> = a
        .iter()
        .map(|(l, h)| (l, h, false))
        .chain(b.iter().map(|(l, h)| (l, h, true)))
        .collect();
    ev.sort_by(|x, y| x.0.cmp(y.0));
    let mut reach: [Option<&Rat>; 2] = [None, None];
    for (lo, hi, side) in ev {
        if let Some(r) = reach[!side as usize] {
            let d = if lo > r { lo - r } else { Rat::zero() };
            if best.as_ref().is_none_or(|b| &d < b) {
                best = Some(d);
            }
        }
        let slot = &mut reach[side as usize];
        if slot.is_none_or(|r| hi > r) {
            *slot = Some(hi);
        }
    }
    best.unwrap_or_else(Rat::zero)
}
