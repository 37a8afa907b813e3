//! Nonlinear companions and grid checks that H(a, K1, K2) covers an interval.

use super::family::HSpec;
use super::slice::{derivative_bound, solve, SolverOptions};
use super::ApplicationsError;
use crate::cantor1d::{self, GapTree, Interval1, NodeAddress, SymmetricSpec};
use crate::containment1d::{descend, ContainmentError, GapSource};
use crate::interval::RatInterval;
use crate::rat::{self, int, Rat};
use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearCompanion {
    pub tree: GapTree,
    #[serde(with = "rat::pair")]
    pub eta: Rat,
    pub increasing: bool,
    /// outward enclosure of every slice image of conv K1
    pub image_hull: Interval1,
}

fn iv(i: &Interval1) -> RatInterval {
    RatInterval::new(i.lo.clone(), i.hi.clone())
}

/// Symmetric K2 on the slice-image hull whose level-n gap is `factor * eta * min_gap(K1, n)`.
pub fn nonlinear_companion(
    k1: &GapTree,
    h: &HSpec,
    c_box: &Interval1,
    a_box: &Interval1,
    n: usize,
    factor: &Rat,
    bits: u32,
) -> Result<NonlinearCompanion, ApplicationsError> {
    if n > k1.depth() {
        return Err(ApplicationsError::LevelOutOfRange { n, depth: k1.depth() });
    }
    if n == 0 {
        return Err(ApplicationsError::InvalidParameter("depth must be positive".into()));
    }
    if !(factor > &Rat::zero() && factor < &Rat::one()) {
        return Err(ApplicationsError::InvalidParameter("factor must lie in (0, 1)".into()));
    }
    if !h.lambda.contains(a_box) {
        return Err(ApplicationsError::InvalidParameter("parameter box leaves the family's box".into()));
    }
    let x = iv(k1.hull());
    let db = derivative_bound(h, &iv(c_box), &iv(a_box), &x, bits)?;
    let y = iv(&db.y_box);
    let y = if y.lo.denom().bits() > 128 || y.hi.denom().bits() > 128 { y.round_out(bits) } else { y };
    let hull = Interval1::new(y.lo, y.hi);
    if !h.q2.contains(&hull) {
        return Err(ApplicationsError::HullOutsideDomain(format!("[{}, {}]", rat::to_f64(&hull.lo), rat::to_f64(&hull.hi))));
    }
    let mut gaps: Vec<Rat> = Vec::with_capacity(n);
    for lvl in 0..n {
        let want = factor * &db.eta * k1.min_gap(lvl)?;
        let bound = cantor1d::symmetric_gap_bound(&hull, &gaps);
        gaps.push(if want < bound { want } else { bound / int(2) });
    }
    let tree = cantor1d::build_symmetric(&SymmetricSpec { hull: hull.clone(), gaps })?;
    Ok(NonlinearCompanion { tree, eta: db.eta, increasing: db.increasing, image_hull: hull })
}

/// The image of K1 under one slice, split lazily with outward endpoint enclosures.
pub struct ImageTree<'a> {
    h: &'a HSpec,
    k1: &'a GapTree,
    c: Rat,
    a: Rat,
    increasing: bool,
    bits: u32,
    hull: Interval1,
}

impl<'a> ImageTree<'a> {
    pub fn new(h: &'a HSpec, k1: &'a GapTree, c: Rat, a: Rat, increasing: bool, bits: u32) -> Result<Self, ApplicationsError> {
        let e_lo = h.slice_point(&c, &a, &k1.hull().lo, bits)?;
        let e_hi = h.slice_point(&c, &a, &k1.hull().hi, bits)?;
        let hull = if increasing {
            Interval1::new(e_lo.lo, e_hi.hi)
        } else {
            Interval1::new(e_hi.lo, e_lo.hi)
        };
        Ok(ImageTree { h, k1, c, a, increasing, bits, hull })
    }

    /// K1 address of the image node at `addr`.
    pub fn preimage(&self, addr: &NodeAddress) -> NodeAddress {
        if self.increasing {
            addr.clone()
        } else {
            addr.complement()
        }
    }

    fn enclose(&self, x: &Rat) -> Result<RatInterval, ContainmentError> {
        self.h
            .slice_point(&self.c, &self.a, x, self.bits)
            .map_err(|e| ContainmentError::InvalidParameter(e.to_string()))
    }
}

impl GapSource for ImageTree<'_> {
    fn depth(&self) -> usize {
        self.k1.depth()
    }

    fn hull(&self) -> Interval1 {
        self.hull.clone()
    }

    fn split(&self, level: usize, index: u64, node: &Interval1) -> Result<(Interval1, Interval1), ContainmentError> {
        let pre = self.preimage(&NodeAddress::from_index(level, index));
        let gap = self.k1.gap(&pre)?;
        let (near, far) = if self.increasing { (&gap.lo, &gap.hi) } else { (&gap.hi, &gap.lo) };
        let left_end = self.enclose(near)?.hi;
        let right_start = self.enclose(far)?.lo;
        let left = Interval1::new(node.lo.clone(), rat::max_rat(&left_end, &node.lo).clone());
        let right = Interval1::new(rat::min_rat(&right_start, &node.hi).clone(), node.hi.clone());
        Ok((left, right))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "rat::pair")]
    pub c: Rat,
    #[serde(with = "rat::pair")]
    pub alpha: Rat,
    /// endpoint of the final K1 interval
    #[serde(with = "rat::pair")]
    pub k1: Rat,
    /// solver value of the slice at k1
    #[serde(with = "rat::pair")]
    pub k2: Rat,
    /// upper bound on |H(alpha, k1, k2) - c|
    pub residual: f64,
    /// length of the final K2 interval
    #[serde(with = "rat::pair")]
    pub bound: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFailure {
    #[serde(with = "rat::pair")]
    pub c: Rat,
    #[serde(with = "rat::pair")]
    pub alpha: Rat,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HInteriorReport {
    /// hull of the longest run of consecutive c values verified for every alpha
    pub certified_c_interval: Option<Interval1>,
    pub witnesses: Vec<Witness>,
    pub failures: Vec<GridFailure>,
}

/// One (c, alpha): gap dominance of the image over K2, the descent, and a witness.
#[allow(clippy::too_many_arguments)]
pub fn verify_point(
    h: &HSpec,
    k1: &GapTree,
    k2: &GapTree,
    c: &Rat,
    a: &Rat,
    n: usize,
    tol: f64,
    bits: u32,
) -> Result<Witness, ApplicationsError> {
    let ci = RatInterval::point(c.clone());
    let ai = RatInterval::point(a.clone());
    let db = derivative_bound(h, &ci, &ai, &iv(k1.hull()), bits)?;
    for lvl in 0..n {
        if db.eta.clone() * k1.min_gap(lvl)? <= k2.max_gap(lvl)? {
            return Err(ContainmentError::DominanceNotVerified.into());
        }
    }
    let image = ImageTree::new(h, k1, c.clone(), a.clone(), db.increasing, bits)?;
    let chain = descend(&image, k2, n)?;
    let (s, _) = chain.pairs.last().ok_or_else(|| ApplicationsError::InvalidParameter("depth must be positive".into()))?;
    let x = k1.interval(&image.preimage(s))?.lo;
    let sol = solve(h, rat::to_f64(c), rat::to_f64(a), rat::to_f64(&x), &SolverOptions { tol: tol.min(1e-12), max_iters: 200 })?;
    let y = rat::from_f64(sol.y).ok_or(ApplicationsError::NoBracket)?;
    let val = h
        .h_iv(&ai, &RatInterval::point(x.clone()), &RatInterval::point(y.clone()), bits)
        .ok_or_else(|| ApplicationsError::SliceUndefined("H at the witness".into()))?;
    let res = (&val - &ci).mag();
    let residual = rat::to_f64(&res);
    if residual > tol {
        return Err(ApplicationsError::ResidualTooLarge { residual, tol });
    }
    Ok(Witness { c: c.clone(), alpha: a.clone(), k1: x, k2: y, residual, bound: chain.bound })
}

/// Check every (c, alpha) on the grids; failures are collected, not raised.
#[allow(clippy::too_many_arguments, clippy::result_large_err)]
pub fn verify_h_interior(
    h: &HSpec,
    k1: &GapTree,
    k2: &GapTree,
    c_grid: &[Rat],
    a_grid: &[Rat],
    n: usize,
    tol: f64,
    bits: u32,
) -> Result<HInteriorReport, ApplicationsError> {
    let depth = k1.depth().min(k2.depth());
    if n == 0 || n > depth {
        return Err(ApplicationsError::LevelOutOfRange { n, depth });
    }
    if c_grid.is_empty() || a_grid.is_empty() {
        return Err(ApplicationsError::InvalidParameter("empty grid".into()));
    }
    let points: Vec<(&Rat, &Rat)> = c_grid.iter().flat_map(|c| a_grid.iter().map(move |a| (c, a))).collect();
    let results: Vec<Result<Witness, GridFailure>> = points
        .par_iter()
        .map(|(c, a)| {
            verify_point(h, k1, k2, c, a, n, tol, bits).map_err(|e| GridFailure {
                c: (*c).clone(),
                alpha: (*a).clone(),
                reason: e.to_string(),
            })
        })
        .collect();
    let ok_c: Vec<bool> = results.chunks(a_grid.len()).map(|row| row.iter().all(|r| r.is_ok())).collect();
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &ok) in ok_c.iter().chain(std::iter::once(&false)).enumerate() {
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    let certified_c_interval = best.map(|(s, e)| {
        let run = &c_grid[s..e];
        let lo = run.iter().min().expect("non-empty run").clone();
        let hi = run.iter().max().expect("non-empty run").clone();
        Interval1::new(lo, hi)
    });
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(w) => witnesses.push(w),
            Err(f) => failures.push(f),
        }
    }
    Ok(HInteriorReport { certified_c_interval, witnesses, failures })
}
