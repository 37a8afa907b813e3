//! Pinned distance sets: |(k1, k2)|_alpha^alpha over a finite c-grid.

use super::family::{HFamily, HSpec};
use super::nonlinear::{nonlinear_companion, verify_h_interior, GridFailure, Witness};
use super::ApplicationsError;
use crate::cantor1d::{build_binary_ifs, GapTree, Interval1, NodeAddress};
use crate::containment1d::grid;
use crate::interval::RatInterval;
use crate::rat::{self, int, Rat};
use num::{One, Zero};
use serde::{Deserialize, Serialize};

fn d_two() -> usize {
    2
}
fn default_alpha() -> Rat {
    int(2)
}
fn default_tol() -> f64 {
    1e-8
}
fn default_factor() -> Rat {
    rat::rat(1, 2)
}
fn default_q2() -> Vec<Rat> {
    vec![rat::rat(1, 100), int(2)]
}
fn default_bits() -> u32 {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K1Spec {
    /// [lo, hi]
    #[serde(serialize_with = "rat::pair::vec::serialize", deserialize_with = "rat::loose::vec::deserialize")]
    pub hull: Vec<Rat>,
    #[serde(serialize_with = "rat::pair::serialize", deserialize_with = "rat::loose::deserialize")]
    pub ratio: Rat,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CGrid {
    #[serde(serialize_with = "rat::pair::serialize", deserialize_with = "rat::loose::deserialize")]
    pub lo: Rat,
    #[serde(serialize_with = "rat::pair::serialize", deserialize_with = "rat::loose::deserialize")]
    pub hi: Rat,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceDemoConfig {
    #[serde(default = "d_two")]
    pub d: usize,
    #[serde(
        default = "default_alpha",
        serialize_with = "rat::pair::serialize",
        deserialize_with = "rat::loose::deserialize"
    )]
    pub alpha: Rat,
    pub k1: K1Spec,
    pub c_grid: CGrid,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(
        default = "default_factor",
        serialize_with = "rat::pair::serialize",
        deserialize_with = "rat::loose::deserialize"
    )]
    pub factor: Rat,
    /// point of K1 used for the fixed coordinates; the right end of the first gap when absent
    #[serde(default, serialize_with = "ser_opt", deserialize_with = "rat::loose::opt::deserialize")]
    pub anchor: Option<Rat>,
    #[serde(
        default = "default_q2",
        serialize_with = "rat::pair::vec::serialize",
        deserialize_with = "rat::loose::vec::deserialize"
    )]
    pub q2: Vec<Rat>,
    #[serde(default = "default_bits")]
    pub bits: u32,
}

fn ser_opt<S: serde::Serializer>(v: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
    rat::pair::opt::serialize(v, s)
}

impl DistanceDemoConfig {
    pub fn standard() -> Self {
        DistanceDemoConfig {
            d: 2,
            alpha: int(2),
            k1: K1Spec { hull: vec![rat::rat(55, 100), rat::rat(65, 100)], ratio: rat::rat(1, 10), depth: 12 },
            c_grid: CGrid { lo: rat::rat(95, 100), hi: rat::rat(105, 100), count: 101 },
            tol: 1e-8,
            factor: default_factor(),
            anchor: None,
            q2: default_q2(),
            bits: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub d: usize,
    #[serde(with = "rat::pair")]
    pub alpha: Rat,
    #[serde(with = "rat::pair")]
    pub anchor: Rat,
    /// contribution of the fixed coordinates to the alpha-th power of the norm
    #[serde(with = "rat::pair")]
    pub offset: Rat,
    #[serde(with = "rat::pair")]
    pub eta: Rat,
    pub k2: GapTree,
    pub certified_c_interval: Option<Interval1>,
    /// inner enclosure of [c_lo^(1/alpha), c_hi^(1/alpha)]
    pub distance_interval: Option<Interval1>,
    pub witnesses: Vec<Witness>,
    pub failures: Vec<GridFailure>,
}

fn two(v: &[Rat], what: &str) -> Result<Interval1, ApplicationsError> {
    match v {
        [lo, hi] if lo < hi => Ok(Interval1::new(lo.clone(), hi.clone())),
        _ => Err(ApplicationsError::InvalidParameter(format!("{what} must be [lo, hi] with lo < hi"))),
    }
}

fn in_tree(k: &GapTree, x: &Rat) -> Result<bool, ApplicationsError> {
    Ok(k.level_intervals(k.depth())?.iter().any(|i| i.contains_point(x)))
}

pub fn pinned_distance_demo(cfg: &DistanceDemoConfig) -> Result<DistanceReport, ApplicationsError> {
    if cfg.alpha <= Rat::one() {
        return Err(ApplicationsError::InvalidParameter("alpha must exceed 1".into()));
    }
    if cfg.d < 2 || cfg.d % 2 == 1 {
        return Err(ApplicationsError::InvalidParameter("d must be even and at least 2".into()));
    }
    if cfg.d > 2 && !cfg.alpha.is_integer() {
        return Err(ApplicationsError::InvalidParameter("fixed coordinates need an integer alpha when d > 2".into()));
    }
    if cfg.c_grid.count == 0 || cfg.c_grid.lo > cfg.c_grid.hi {
        return Err(ApplicationsError::InvalidParameter("empty c grid".into()));
    }
    let hull = two(&cfg.k1.hull, "k1.hull")?;
    if !rat::is_positive(&hull.lo) {
        return Err(ApplicationsError::InvalidParameter("K1 must lie in (0, inf)".into()));
    }
    let k1 = build_binary_ifs(&hull, &cfg.k1.ratio, cfg.k1.depth)?;
    let anchor = match &cfg.anchor {
        Some(a) => {
            if !in_tree(&k1, a)? {
                return Err(ApplicationsError::InvalidParameter("anchor is not a point of K1".into()));
            }
            a.clone()
        }
        None => k1.gap(&NodeAddress::root())?.hi,
    };
    let m = cfg.d / 2;
    let power = if m > 1 {
        let e = cfg.alpha.to_integer().try_into().map_err(|_| ApplicationsError::InvalidParameter("alpha too large".into()))?;
        rat::pow_int(&anchor, e)
    } else {
        Rat::zero()
    };
    let offset = power * int(2 * (m as i64 - 1));
    let h = HSpec::new(
        HFamily::AlphaNorm { offset: offset.clone() },
        Interval1::new(cfg.alpha.clone(), cfg.alpha.clone()),
        hull,
        two(&cfg.q2, "q2")?,
    )?;
    let c_box = Interval1::new(cfg.c_grid.lo.clone(), cfg.c_grid.hi.clone());
    let a_box = Interval1::new(cfg.alpha.clone(), cfg.alpha.clone());
    let n = cfg.k1.depth;
    let comp = nonlinear_companion(&k1, &h, &c_box, &a_box, n, &cfg.factor, cfg.bits)?;
    let cs = grid(&cfg.c_grid.lo, &cfg.c_grid.hi, cfg.c_grid.count);
    let rep = verify_h_interior(&h, &k1, &comp.tree, &cs, std::slice::from_ref(&cfg.alpha), n, cfg.tol, cfg.bits)?;
    let inv = RatInterval::point(Rat::one() / &cfg.alpha);
    let root = |x: &Rat| RatInterval::point(x.clone()).pow(&inv, cfg.bits);
    let distance_interval = match &rep.certified_c_interval {
        Some(ci) => match (root(&ci.lo), root(&ci.hi)) {
            (Some(a), Some(b)) if a.hi <= b.lo => Some(Interval1::new(a.hi, b.lo)),
            _ => None,
        },
        None => None,
    };
    Ok(DistanceReport {
        d: cfg.d,
        alpha: cfg.alpha.clone(),
        anchor,
        offset,
        eta: comp.eta,
        k2: comp.tree,
        certified_c_interval: rep.certified_c_interval,
        distance_interval,
        witnesses: rep.witnesses,
        failures: rep.failures,
    })
}
