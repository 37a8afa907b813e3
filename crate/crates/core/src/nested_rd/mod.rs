//! Nested representations of Cantor sets in R^d built from dyadic cube covers,
//! separation and ratio bounds between components, certificate search and
//! orthogonal repair of degenerate geometry.

mod boxd;
mod cert;
mod line;
mod rep;
mod rotation;
mod source;

pub use boxd::{axis_gap, union_gap, BoxD};
pub use cert::{
    rotation_search, und_certificate, verify_certificate, CandidateFailure, CellRecord, CertNode, CertOptions,
    CubeBlock, PairRecord, RotationOutcome, SelectedComponent, UndCertificate,
};
pub use rep::{NestedRep, NodeId, NotShrinking, RepConfig};
pub use rotation::RotationMatrix;
pub use source::{AffineMap, CubeList, Factor, GeometrySource};

use crate::cantor1d::TreeError;
use crate::rat::Rat;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NestedError {
    #[error("geometry is empty")]
    EmptyGeometry,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid levels: {0}")]
    InvalidLevels(String),
    #[error("geometry needs {0} cells, over the configured limit")]
    TooManyCells(usize),
    #[error("components share a coordinate projection on axis {0}; ratios are unbounded")]
    DegeneratePair(usize),
    #[error("no certificate found: node {node} (generation {gen}) exhausted k = 1..{max_k}; {explanation}")]
    CertificateNotFound { node: String, gen: u32, max_k: u32, explanation: String },
    #[error("all {} rotation candidates failed", .0.len())]
    AllCandidatesFailed(Vec<CandidateFailure>),
    #[error("matrix is not orthogonal: defect {0}")]
    NotOrthogonal(f64),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Outer bounds on the coordinate-difference ratios between two components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioBounds {
    #[serde(with = "crate::rat::pair")]
    pub lo: Rat,
    #[serde(with = "crate::rat::pair")]
    pub hi: Rat,
    /// "hull" when taken from bounding boxes, "corners" when tightened by
    /// corner evaluation of the linear part.
    pub method: String,
}

impl RatioBounds {
    pub fn within(&self, kappa: &Rat) -> bool {
        &self.lo * kappa >= Rat::one() && &self.hi <= kappa
    }
}

/// Distance between the j-projections of two box unions, per axis.
pub fn axis_distances(a: &[BoxD], b: &[BoxD]) -> Vec<Rat> {
    let d = a[0].dim();
    (0..d)
        .map(|j| {
            let pa: Vec<(Rat, Rat)> = a.iter().map(|x| (x.lo[j].clone(), x.hi[j].clone())).collect();
            let pb: Vec<(Rat, Rat)> = b.iter().map(|x| (x.lo[j].clone(), x.hi[j].clone())).collect();
            union_gap(&pa, &pb)
        })
        .collect()
}

/// min over axes of the projection distance of two unions of boxes.
pub fn d_min(a: &[BoxD], b: &[BoxD]) -> Rat {
    assert!(!a.is_empty() && !b.is_empty(), "d_min of an empty component");
    axis_distances(a, b).into_iter().min().expect("dimension >= 1")
}

fn hull_of(boxes: &[BoxD]) -> BoxD {
    boxes[1..].iter().fold(boxes[0].clone(), |acc, b| acc.join(b))
}

/// Ratio bounds from per-axis distance d_j and bounding-box span D_j.
pub fn kappa_ratios(a: &[BoxD], b: &[BoxD]) -> Result<RatioBounds, NestedError> {
    let dist = axis_distances(a, b);
    let (ha, hb) = (hull_of(a), hull_of(b));
    ratio_from_ranges(&dist, &(0..dist.len()).map(|j| ha.span(&hb, j)).collect::<Vec<_>>())
}

pub(crate) fn ratio_from_ranges(dist: &[Rat], span: &[Rat]) -> Result<RatioBounds, NestedError> {
    if let Some(j) = dist.iter().position(|x| !x.is_positive()) {
        return Err(NestedError::DegeneratePair(j));
    }
    let d = dist.len();
    if d < 2 {
        return Ok(RatioBounds { lo: Rat::one(), hi: Rat::one(), method: "hull".into() });
    }
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let l = &dist[i] / &span[j];
            let h = &span[i] / &dist[j];
            if lo.as_ref().is_none_or(|x| &l < x) {
                lo = Some(l);
            }
            if hi.as_ref().is_none_or(|x| &h > x) {
                hi = Some(h);
            }
        }
    }
    Ok(RatioBounds { lo: lo.unwrap_or_else(Rat::zero), hi: hi.unwrap_or_else(Rat::zero), method: "hull".into() })
}

/// Tighter ratio bounds for images of boxes under a linear map.
///
/// For cells P_a, P_b the differences x - x' lie in M (P_a - P_b). When no
/// coordinate of that image box contains 0, each |w_i| / |w_j| is a
/// linear-fractional function of u in P_a - P_b, so its extremes sit at corners.
pub fn corner_ratio_bounds(map: &AffineMap, a_pre: &[BoxD], b_pre: &[BoxD]) -> Option<RatioBounds> {
    use crate::interval::RatInterval;
    let d = map.dim();
    if d < 2 {
        return None;
    }
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    for pa in a_pre {
        for pb in b_pre {
            let u: Vec<RatInterval> = (0..d)
                .map(|j| RatInterval::new(&pa.lo[j] - &pb.hi[j], &pa.hi[j] - &pb.lo[j]))
                .collect();
            let w = map.apply_linear(&u);
            if w.iter().any(|x| x.contains_zero()) {
                return None;
            }
            let free: Vec<usize> = (0..d).filter(|&j| !u[j].is_point()).collect();
            for mask in 0u32..(1 << free.len()) {
                let corner: Vec<RatInterval> = (0..d)
                    .map(|j| match free.iter().position(|&f| f == j) {
                        Some(bit) if mask >> bit & 1 == 1 => RatInterval::point(u[j].hi.clone()),
                        _ => RatInterval::point(u[j].lo.clone()),
                    })
                    .collect();
                let wc = map.apply_linear(&corner);
                for i in 0..d {
                    for j in 0..d {
                        if i == j {
                            continue;
                        }
                        let l = wc[i].mig() / wc[j].mag();
                        let h = wc[i].mag() / wc[j].mig();
                        if lo.as_ref().is_none_or(|x| &l < x) {
                            lo = Some(l);
                        }
                        if hi.as_ref().is_none_or(|x| &h > x) {
                            hi = Some(h);
                        }
                    }
                }
            }
        }
    }
    Some(RatioBounds { lo: lo?, hi: hi?, method: "corners".into() })
}

/// Intersection of two sound bounds.
pub(crate) fn tighten(a: RatioBounds, b: Option<RatioBounds>) -> RatioBounds {
    match b {
        None => a,
        Some(b) => {
            let method = if b.lo > a.lo || b.hi < a.hi { b.method } else { a.method };
            RatioBounds {
                lo: if b.lo > a.lo { b.lo } else { a.lo },
                hi: if b.hi < a.hi { b.hi } else { a.hi },
                method,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    fn sq(lo: (i64, i64), hi: (i64, i64), lo2: (i64, i64), hi2: (i64, i64)) -> BoxD {
        BoxD::new(vec![rat(lo.0, lo.1), rat(lo2.0, lo2.1)], vec![rat(hi.0, hi.1), rat(hi2.0, hi2.1)])
    }

    #[test]
    fn d_min_examples() {
        let a = sq((0, 1), (1, 3), (0, 1), (1, 3));
        let b = sq((2, 3), (1, 1), (2, 3), (1, 1));
        assert_eq!(d_min(&[a.clone()], &[b]), rat(1, 3));
        let c = sq((0, 1), (1, 1), (0, 1), (1, 1));
        let e = sq((2, 1), (4, 1), (3, 1), (5, 1));
        assert_eq!(d_min(&[c], &[e]), int(1));
        let f = sq((0, 1), (1, 3), (2, 3), (1, 1));
        assert_eq!(d_min(&[a], &[f]), int(0));
    }

    #[test]
    fn kappa_examples() {
        let a = sq((0, 1), (1, 3), (0, 1), (1, 3));
        let b = sq((2, 3), (1, 1), (2, 3), (1, 1));
        let r = kappa_ratios(&[a], &[b]).unwrap();
        assert_eq!((r.lo, r.hi), (rat(1, 3), int(3)));
        let p = BoxD::new(vec![int(1), int(2)], vec![int(1), int(2)]);
        let q = BoxD::new(vec![int(2), int(4)], vec![int(2), int(4)]);
        let r = kappa_ratios(&[p], &[q]).unwrap();
        assert_eq!((r.lo, r.hi), (rat(1, 2), int(2)));
        let u = sq((0, 1), (1, 1), (0, 1), (1, 1));
        let v = sq((0, 1), (1, 1), (2, 1), (3, 1));
        assert_eq!(kappa_ratios(&[u], &[v]), Err(NestedError::DegeneratePair(0)));
    }

    #[test]
    fn hull_bounds_hold_for_nonconvex_unions() {
        // L-shaped union against a far box: every point pair respects the hull bounds
        let a = vec![sq((0, 1), (1, 1), (0, 1), (1, 4)), sq((0, 1), (1, 4), (0, 1), (1, 1))];
        let b = vec![sq((2, 1), (3, 1), (3, 1), (4, 1))];
        let r = kappa_ratios(&a, &b).unwrap();
        for x in 0..=4 {
            for y in 0..=4 {
                let (px, py) = (rat(x, 4), rat(y, 4));
                let inside = (py <= rat(1, 4)) || (px <= rat(1, 4));
                if !inside {
                    continue;
                }
                for (qx, qy) in [(int(2), int(3)), (int(3), int(4)), (int(2), int(4)), (int(3), int(3))] {
                    let dx = (&qx - &px).abs();
                    let dy = (&qy - &py).abs();
                    for ratio in [&dx / &dy, &dy / &dx] {
                        assert!(r.lo <= ratio && ratio <= r.hi);
                    }
                }
            }
        }
    }

    #[test]
    fn corner_bounds_for_a_diagonal_map() {
        let m = AffineMap::from_exact(vec![vec![int(-1), int(0)], vec![int(1), int(0)]], vec![int(0), int(0)]).unwrap();
        let a = vec![BoxD::new(vec![int(0), int(0)], vec![rat(1, 3), int(0)])];
        let b = vec![BoxD::new(vec![rat(2, 3), int(0)], vec![int(1), int(0)])];
        let r = corner_ratio_bounds(&m, &a, &b).unwrap();
        assert_eq!((r.lo, r.hi), (int(1), int(1)));
        let overlap = vec![BoxD::new(vec![rat(1, 4), int(0)], vec![int(1), int(0)])];
        assert!(corner_ratio_bounds(&m, &a, &overlap).is_none());
    }
}

#[cfg(test)]
mod scenario_tests;
