//! Gap dominance, containment chains and exact interior intervals on the line.

use crate::cantor1d::{self, affine_image, GapTree, Interval1, NodeAddress, SymmetricSpec, TreeError};
use crate::rat::{self, int, Rat};
use num::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainmentError {
    #[error("gap dominance does not hold for this pair")]
    DominanceNotVerified,
    #[error("chain broken at level {0}")]
    ChainBroken(usize),
    #[error("hull containment is not strict on both sides")]
    NoMargin,
    #[error("depth {n} exceeds tree depth {depth}")]
    DepthTooLarge { n: usize, depth: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Anything that can be split level by level like a gap tree.
pub trait GapSource {
    fn depth(&self) -> usize;
    fn hull(&self) -> Interval1;
    /// Children of node `(level, index)` whose interval is `node`.
    fn split(&self, level: usize, index: u64, node: &Interval1) -> Result<(Interval1, Interval1), ContainmentError>;
}

impl GapSource for GapTree {
    fn depth(&self) -> usize {
        GapTree::depth(self)
    }
    fn hull(&self) -> Interval1 {
        GapTree::hull(self).clone()
    }
    fn split(&self, level: usize, index: u64, node: &Interval1) -> Result<(Interval1, Interval1), ContainmentError> {
        Ok(GapTree::split(self, level, index, node))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    #[serde(with = "rat::pair")]
    pub min_gap_k: Rat,
    #[serde(with = "rat::pair")]
    pub max_gap_kt: Rat,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub hull_contained: bool,
    pub levels: Vec<LevelRecord>,
    pub overall: bool,
}

fn check_depth(k: &GapTree, kt: &GapTree, n: usize) -> Result<(), ContainmentError> {
    let depth = k.depth().min(kt.depth());
    if n > depth {
        return Err(ContainmentError::DepthTooLarge { n, depth });
    }
    Ok(())
}

/// Levels 0..N of `kt` have strictly shorter gaps than those of `k`, and hull(k) sits in hull(kt).
pub fn check_dominance(k: &GapTree, kt: &GapTree, n: usize) -> Result<DominanceReport, ContainmentError> {
    check_depth(k, kt, n)?;
    let hull_contained = kt.hull().contains(k.hull());
    let mut levels = Vec::with_capacity(n);
    for lvl in 0..n {
        let min_gap_k = k.min_gap(lvl)?;
        let max_gap_kt = kt.max_gap(lvl)?;
        levels.push(LevelRecord {
            n: lvl,
            pass: max_gap_kt < min_gap_k,
            min_gap_k,
            max_gap_kt,
        });
    }
    let overall = hull_contained && levels.iter().all(|r| r.pass);
    Ok(DominanceReport {
        hull_contained,
        levels,
        overall,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessChain {
    pub pairs: Vec<(NodeAddress, NodeAddress)>,
    #[serde(with = "rat::pair")]
    pub witness_k: Rat,
    #[serde(with = "rat::pair")]
    pub witness_kt: Rat,
    #[serde(with = "rat::pair")]
    pub bound: Rat,
    /// final intervals I(K) and I(Kt)
    pub last: (Interval1, Interval1),
}

/// The descent alone, with no dominance pre-check. Stops with `ChainBroken`
/// when neither child pair nests.
pub fn descend<A: GapSource, B: GapSource>(k: &A, kt: &B, n: usize) -> Result<WitnessChain, ContainmentError> {
    let depth = k.depth().min(kt.depth());
    if n > depth {
        return Err(ContainmentError::DepthTooLarge { n, depth });
    }
    let (mut a, mut c) = (k.hull(), kt.hull());
    if !c.contains(&a) {
        return Err(ContainmentError::ChainBroken(0));
    }
    let (mut s, mut sp) = (NodeAddress::root(), NodeAddress::root());
    let mut pairs = Vec::with_capacity(n);
    for lvl in 0..n {
        let (a0, a1) = k.split(lvl, s.index(), &a)?;
        let (c0, c1) = kt.split(lvl, sp.index(), &c)?;
        // left first, so ties are deterministic
        if c0.contains(&a0) {
            s = s.child(false);
            sp = sp.child(false);
            a = a0;
            c = c0;
        } else if c1.contains(&a1) {
            s = s.child(true);
            sp = sp.child(true);
            a = a1;
            c = c1;
        } else {
            return Err(ContainmentError::ChainBroken(lvl + 1));
        }
        pairs.push((s.clone(), sp.clone()));
    }
    Ok(WitnessChain {
        pairs,
        witness_k: a.mid(),
        witness_kt: c.mid(),
        bound: c.len(),
        last: (a, c),
    })
}

pub fn find_chain(k: &GapTree, kt: &GapTree, n: usize) -> Result<WitnessChain, ContainmentError> {
    if !check_dominance(k, kt, n)?.overall {
        return Err(ContainmentError::DominanceNotVerified);
    }
    descend(k, kt, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompanionOptions {
    pub margin: Rat,
    pub factor: Rat,
    /// replace an infeasible gap by half the feasible bound instead of failing
    pub cap: bool,
}

impl Default for CompanionOptions {
    fn default() -> Self {
        CompanionOptions {
            margin: rat::rat(1, 10),
            factor: rat::rat(1, 2),
            cap: true,
        }
    }
}

/// Symmetric tree on the inflated hull whose level-n gap is `factor * min_gap(K, n)`.
pub fn build_companion(k: &GapTree, n: usize, opts: &CompanionOptions) -> Result<GapTree, ContainmentError> {
    if opts.margin <= Rat::zero() {
        return Err(ContainmentError::InvalidParameter("margin must be positive".into()));
    }
    if !(opts.factor > Rat::zero() && opts.factor < Rat::one()) {
        return Err(ContainmentError::InvalidParameter("factor must lie in (0, 1)".into()));
    }
    if n == 0 || n > k.depth() {
        return Err(ContainmentError::DepthTooLarge { n, depth: k.depth() });
    }
    let h = k.hull();
    let hull = Interval1::new(&h.lo - &opts.margin, &h.hi + &opts.margin);
    let mut gaps: Vec<Rat> = Vec::with_capacity(n);
    for lvl in 0..n {
        let want = &opts.factor * k.min_gap(lvl)?;
        let bound = cantor1d::symmetric_gap_bound(&hull, &gaps);
        if want < bound {
            gaps.push(want);
        } else if opts.cap {
            gaps.push(bound / int(2));
        } else {
            return Err(TreeError::GapConstraintViolation(lvl).into());
        }
    }
    let tree = cantor1d::build_symmetric(&SymmetricSpec { hull, gaps })?;
    assert!(
        check_dominance(k, &tree, n)?.overall,
        "companion must dominate its source"
    );
    Ok(tree)
}

/// Exact set of translations t with hull(K) inside hull(Kt) + t.
pub fn certify_difference_interior(k: &GapTree, kt: &GapTree, n: usize) -> Result<Interval1, ContainmentError> {
    if !check_dominance(k, kt, n)?.overall {
        return Err(ContainmentError::DominanceNotVerified);
    }
    let (h, ht) = (k.hull(), kt.hull());
    if !(ht.lo < h.lo && h.hi < ht.hi) {
        return Err(ContainmentError::NoMargin);
    }
    Ok(Interval1::new(&h.hi - &ht.hi, &h.lo - &ht.lo))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(with = "rat::pair")]
    pub lambda_lo: Rat,
    #[serde(with = "rat::pair")]
    pub lambda_hi: Rat,
    #[serde(with = "rat::pair")]
    pub t_lo: Rat,
    #[serde(with = "rat::pair")]
    pub t_hi: Rat,
    pub lambda_count: usize,
    pub t_count: usize,
}

/// `count` evenly spaced points from lo to hi inclusive (just lo when count is 1).
pub fn grid(lo: &Rat, hi: &Rat, count: usize) -> Vec<Rat> {
    if count <= 1 {
        return vec![lo.clone()];
    }
    let step = (hi - lo) / int(count as i64 - 1);
    (0..count).map(|i| lo + &step * int(i as i64)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(with = "rat::pair")]
    pub lambda: Rat,
    #[serde(with = "rat::pair")]
    pub t: Rat,
    pub ok: bool,
    #[serde(with = "rat::pair::opt")]
    pub bound: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepResult {
    /// row-major: lambda outer, t inner
    pub results: Vec<SweepPoint>,
    #[serde(with = "rat::pair")]
    pub slack_lambda: Rat,
}

/// Largest scale the gaps of `kt` tolerate: min over levels of min_gap(K)/max_gap(Kt).
pub fn lambda_slack(k: &GapTree, kt: &GapTree, n: usize) -> Result<Rat, ContainmentError> {
    check_depth(k, kt, n)?;
    let mut best: Option<Rat> = None;
    for lvl in 0..n {
        let r = k.min_gap(lvl)? / kt.max_gap(lvl)?;
        best = Some(match best {
            Some(b) if b <= r => b,
            _ => r,
        });
    }
    best.ok_or(ContainmentError::InvalidParameter("depth must be positive".into()))
}

pub fn robustness_sweep(k: &GapTree, kt: &GapTree, pert: &PerturbationSpec, n: usize) -> Result<SweepResult, ContainmentError> {
    if pert.lambda_count == 0 || pert.t_count == 0 || pert.lambda_lo > pert.lambda_hi || pert.t_lo > pert.t_hi {
        return Err(ContainmentError::InvalidParameter("empty perturbation grid".into()));
    }
    if !check_dominance(k, kt, n)?.overall {
        return Err(ContainmentError::DominanceNotVerified);
    }
    let slack_lambda = lambda_slack(k, kt, n)?;
    let lams = grid(&pert.lambda_lo, &pert.lambda_hi, pert.lambda_count);
    let ts = grid(&pert.t_lo, &pert.t_hi, pert.t_count);
    let points: Vec<(Rat, Rat)> = lams
        .iter()
        .flat_map(|l| ts.iter().map(move |t| (l.clone(), t.clone())))
        .collect();
    let results = points
        .into_par_iter()
        .map(|(lambda, t)| {
            let chain = affine_image(kt, &lambda, &t)
                .ok()
                .and_then(|img| find_chain(k, &img, n).ok());
            SweepPoint {
                ok: chain.is_some(),
                bound: chain.map(|c| c.bound),
                lambda,
                t,
            }
        })
        .collect();
    Ok(SweepResult { results, slack_lambda })
}
