//! Finite-depth Cantor sets on the line, stored as binary gap trees.
//!
//! A tree of depth N has a gap inside every node interval above level N.
//! Symmetric trees only keep one gap length per level, which keeps deep
//! companions cheap; everything else is an explicit heap of gaps.

use crate::rat::{self, int, Rat};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("gap constraint violated at level {0}")]
    GapConstraintViolation(usize),
    #[error("gap at level {0} is not positive")]
    NonPositiveGap(usize),
    #[error("hull has zero or negative length")]
    DegenerateHull,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("ratio must lie strictly between 0 and 1/2")]
    InvalidRatio,
    #[error("level {level} out of range for depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("scale factor is zero")]
    ZeroScale,
    #[error("gap at {0} does not sit strictly inside its interval")]
    GapOutsideNode(String),
    #[error("gap list has {got} gaps, depth {depth} needs {need}")]
    GapCount { got: usize, need: usize, depth: usize },
    #[error("bad address {0:?}")]
    BadAddress(String),
    #[error("malformed tree: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval1 {
    #[serde(with = "rat::pair")]
    pub lo: Rat,
    #[serde(with = "rat::pair")]
    pub hi: Rat,
}

impl Interval1 {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi);
        Interval1 { lo, hi }
    }

    pub fn of(lo: (i64, i64), hi: (i64, i64)) -> Self {
        Interval1::new(rat::rat(lo.0, lo.1), rat::rat(hi.0, hi.1))
    }

    pub fn len(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, other: &Interval1) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_point(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// x -> lam x + t, endpoints swapped when lam < 0.
    pub fn map(&self, lam: &Rat, t: &Rat) -> Interval1 {
        let a = lam * &self.lo + t;
        let b = lam * &self.hi + t;
        if lam.is_negative() {
            Interval1::new(b, a)
        } else {
            Interval1::new(a, b)
        }
    }
}

impl fmt::Display for Interval1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Binary word addressing a node; the empty word is the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeAddress(Vec<bool>);

impl NodeAddress {
    pub fn root() -> Self {
        NodeAddress(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        NodeAddress(bits)
    }

    /// Address of node `index` (left to right) at level `len`.
    pub fn from_index(len: usize, index: u64) -> Self {
        NodeAddress((0..len).map(|k| (index >> (len - 1 - k)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn child(&self, right: bool) -> Self {
        let mut v = self.0.clone();
        v.push(right);
        NodeAddress(v)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_prefix_of(&self, other: &NodeAddress) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn complement(&self) -> Self {
        NodeAddress(self.0.iter().map(|b| !b).collect())
    }

    pub fn concat(&self, other: &NodeAddress) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        NodeAddress(v)
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for NodeAddress {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(TreeError::BadAddress(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NodeAddress)
    }
}

impl Serialize for NodeAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NodeAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricSpec {
    pub hull: Interval1,
    #[serde(with = "rat::pair::vec")]
    pub gaps: Vec<Rat>,
}

#[derive(Clone, Debug)]
enum GapStore {
    /// one length per level, gap centred in its interval
    Symmetric(Vec<Rat>),
    /// heap order: node (n, i) at (1 << n) - 1 + i
    Explicit(Vec<Interval1>),
}

#[derive(Clone, Debug)]
pub struct GapTree {
    hull: Interval1,
    depth: usize,
    gaps: GapStore,
}

fn heap_index(level: usize, index: u64) -> usize {
    ((1usize << level) - 1) + index as usize
}

/// Bound on the level-n gap: common interval length of a symmetric tree
/// after removing gaps at levels < n.
fn level_length(hull_len: &Rat, gaps: &[Rat], n: usize) -> Rat {
    let mut rem = hull_len.clone();
    for (k, g) in gaps.iter().take(n).enumerate() {
        rem -= g * rat::pow2(k as i64);
    }
    rem * rat::pow2(-(n as i64))
}

impl GapTree {
    pub fn hull(&self) -> &Interval1 {
        &self.hull
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.gaps, GapStore::Symmetric(_))
    }

    /// Per-level gap lengths if the tree is centrally symmetric.
    pub fn symmetric_gaps(&self) -> Option<&[Rat]> {
        match &self.gaps {
            GapStore::Symmetric(g) => Some(g),
            GapStore::Explicit(_) => None,
        }
    }

    fn check_level(&self, n: usize, allow_depth: bool) -> Result<(), TreeError> {
        let lim = if allow_depth { self.depth } else { self.depth - 1 };
        if n > lim {
            Err(TreeError::LevelOutOfRange {
                level: n,
                depth: self.depth,
            })
        } else {
            Ok(())
        }
    }

    /// Gap of the node at `level` whose interval is `node`, with left-to-right `index`.
    pub fn gap_in(&self, level: usize, index: u64, node: &Interval1) -> Interval1 {
        match &self.gaps {
            GapStore::Symmetric(g) => {
                let half = &g[level] / int(2);
                let m = node.mid();
                Interval1::new(&m - &half, &m + &half)
            }
            GapStore::Explicit(v) => v[heap_index(level, index)].clone(),
        }
    }

    /// Children of the node `(level, index)` with interval `node`.
    pub fn split(&self, level: usize, index: u64, node: &Interval1) -> (Interval1, Interval1) {
        let g = self.gap_in(level, index, node);
        (
            Interval1::new(node.lo.clone(), g.lo),
            Interval1::new(g.hi, node.hi.clone()),
        )
    }

    pub fn interval(&self, addr: &NodeAddress) -> Result<Interval1, TreeError> {
        self.check_level(addr.len(), true)?;
        let mut cur = self.hull.clone();
        let mut idx = 0u64;
        for (lvl, &b) in addr.bits().iter().enumerate() {
            let (l, r) = self.split(lvl, idx, &cur);
            cur = if b { r } else { l };
            idx = (idx << 1) | b as u64;
        }
        Ok(cur)
    }

    pub fn gap(&self, addr: &NodeAddress) -> Result<Interval1, TreeError> {
        self.check_level(addr.len(), false)?;
        let node = self.interval(addr)?;
        Ok(self.gap_in(addr.len(), addr.index(), &node))
    }

    /// All level-n intervals, left to right.
    pub fn level_intervals(&self, n: usize) -> Result<Vec<Interval1>, TreeError> {
        self.check_level(n, true)?;
        let mut cur = vec![self.hull.clone()];
        for lvl in 0..n {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (i, iv) in cur.iter().enumerate() {
                let (l, r) = self.split(lvl, i as u64, iv);
                next.push(l);
                next.push(r);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// All level-n gaps, left to right.
    pub fn level_gaps(&self, n: usize) -> Result<Vec<Interval1>, TreeError> {
        self.check_level(n, false)?;
        Ok(self
            .level_intervals(n)?
            .iter()
            .enumerate()
            .map(|(i, iv)| self.gap_in(n, i as u64, iv))
            .collect())
    }

    pub fn min_gap(&self, n: usize) -> Result<Rat, TreeError> {
        self.check_level(n, false)?;
        match &self.gaps {
            GapStore::Symmetric(g) => Ok(g[n].clone()),
            GapStore::Explicit(v) => Ok(v[heap_index(n, 0)..heap_index(n + 1, 0)]
                .iter()
                .map(|g| g.len())
                .min()
                .expect("nonempty level")),
        }
    }

    pub fn max_gap(&self, n: usize) -> Result<Rat, TreeError> {
        self.check_level(n, false)?;
        match &self.gaps {
            GapStore::Symmetric(g) => Ok(g[n].clone()),
            GapStore::Explicit(v) => Ok(v[heap_index(n, 0)..heap_index(n + 1, 0)]
                .iter()
                .map(|g| g.len())
                .max()
                .expect("nonempty level")),
        }
    }

    /// Longest level-n interval.
    pub fn max_interval(&self, n: usize) -> Result<Rat, TreeError> {
        self.check_level(n, true)?;
        match &self.gaps {
            GapStore::Symmetric(g) => Ok(level_length(&self.hull.len(), g, n)),
            GapStore::Explicit(_) => Ok(self
                .level_intervals(n)?
                .iter()
                .map(|i| i.len())
                .max()
                .expect("nonempty level")),
        }
    }

    /// The subtree rooted at `addr`, as a tree of its own.
    pub fn subtree(&self, addr: &NodeAddress) -> Result<GapTree, TreeError> {
        if addr.len() >= self.depth {
            return Err(TreeError::LevelOutOfRange {
                level: addr.len(),
                depth: self.depth,
            });
        }
        let hull = self.interval(addr)?;
        let depth = self.depth - addr.len();
        let gaps = match &self.gaps {
            GapStore::Symmetric(g) => GapStore::Symmetric(g[addr.len()..].to_vec()),
            GapStore::Explicit(_) => {
                let mut v = Vec::with_capacity((1 << depth) - 1);
                for k in 0..depth {
                    for i in 0..(1u64 << k) {
                        let sub = addr.concat(&NodeAddress::from_index(k, i));
                        v.push(self.gap(&sub)?);
                    }
                }
                GapStore::Explicit(v)
            }
        };
        Ok(GapTree { hull, depth, gaps })
    }

    /// Same tree cut at a smaller depth.
    pub fn truncate(&self, depth: usize) -> Result<GapTree, TreeError> {
        if depth == 0 {
            return Err(TreeError::ZeroDepth);
        }
        self.check_level(depth, true)?;
        let gaps = match &self.gaps {
            GapStore::Symmetric(g) => GapStore::Symmetric(g[..depth].to_vec()),
            GapStore::Explicit(v) => GapStore::Explicit(v[..heap_index(depth, 0)].to_vec()),
        };
        Ok(GapTree {
            hull: self.hull.clone(),
            depth,
            gaps,
        })
    }

    /// Every gap in heap order (level by level, left to right) with its address.
    pub fn gaps_in_order(&self) -> Vec<(NodeAddress, Interval1)> {
        let mut out = Vec::new();
        let mut cur = vec![self.hull.clone()];
        for lvl in 0..self.depth {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (i, iv) in cur.iter().enumerate() {
                let g = self.gap_in(lvl, i as u64, iv);
                out.push((NodeAddress::from_index(lvl, i as u64), g.clone()));
                next.push(Interval1::new(iv.lo.clone(), g.lo));
                next.push(Interval1::new(g.hi, iv.hi.clone()));
            }
            cur = next;
        }
        out
    }

    /// Assemble an explicit tree from gaps given in heap order.
    pub fn from_heap(hull: Interval1, depth: usize, gaps: Vec<Interval1>) -> Result<GapTree, TreeError> {
        if depth == 0 {
            return Err(TreeError::ZeroDepth);
        }
        if hull.len() <= Rat::zero() {
            return Err(TreeError::DegenerateHull);
        }
        let need = (1usize << depth) - 1;
        if gaps.len() != need {
            return Err(TreeError::GapCount {
                got: gaps.len(),
                need,
                depth,
            });
        }
        let tree = GapTree {
            hull,
            depth,
            gaps: GapStore::Explicit(gaps),
        };
        tree.validate()?;
        Ok(tree)
    }

    /// Assemble a tree from an unordered list of gaps. Gaps are placed largest
    /// first, ties broken leftmost first; each gap goes to the node containing it.
    pub fn from_gap_list(hull: Interval1, depth: usize, mut gaps: Vec<Interval1>) -> Result<GapTree, TreeError> {
        if depth == 0 {
            return Err(TreeError::ZeroDepth);
        }
        if hull.len() <= Rat::zero() {
            return Err(TreeError::DegenerateHull);
        }
        let need = (1usize << depth) - 1;
        if gaps.len() != need {
            return Err(TreeError::GapCount {
                got: gaps.len(),
                need,
                depth,
            });
        }
        gaps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.lo.cmp(&b.lo)));
        let mut slots: Vec<Option<Interval1>> = vec![None; need];
        let mut nodes: Vec<Option<Interval1>> = vec![None; need];
        nodes[0] = Some(hull.clone());
        for g in gaps {
            // descend from the root to the first node without a gap
            let (mut lvl, mut idx) = (0usize, 0u64);
            loop {
                if lvl >= depth {
                    return Err(TreeError::GapOutsideNode(format!("{g}")));
                }
                let h = heap_index(lvl, idx);
                let node = nodes[h].clone().expect("node assigned before descent");
                if !(node.lo < g.lo && g.hi < node.hi) {
                    return Err(TreeError::GapOutsideNode(format!("{g}")));
                }
                match &slots[h] {
                    None => {
                        if lvl + 1 < depth {
                            nodes[heap_index(lvl + 1, 2 * idx)] = Some(Interval1::new(node.lo.clone(), g.lo.clone()));
                            nodes[heap_index(lvl + 1, 2 * idx + 1)] = Some(Interval1::new(g.hi.clone(), node.hi.clone()));
                        }
                        slots[h] = Some(g);
                        break;
                    }
                    Some(existing) => {
                        let right = g.lo >= existing.hi;
                        if !right && g.hi > existing.lo {
                            return Err(TreeError::GapOutsideNode(format!("{g}")));
                        }
                        lvl += 1;
                        idx = 2 * idx + right as u64;
                    }
                }
            }
        }
        let gaps: Vec<Interval1> = slots
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or(TreeError::GapCount { got: 0, need, depth })?;
        GapTree::from_heap(hull, depth, gaps)
    }

    fn validate(&self) -> Result<(), TreeError> {
        let mut cur = vec![self.hull.clone()];
        for lvl in 0..self.depth {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (i, iv) in cur.iter().enumerate() {
                let g = self.gap_in(lvl, i as u64, iv);
                if !(iv.lo < g.lo && g.lo < g.hi && g.hi < iv.hi) {
                    return Err(TreeError::GapOutsideNode(NodeAddress::from_index(lvl, i as u64).to_string()));
                }
                next.push(Interval1::new(iv.lo.clone(), g.lo));
                next.push(Interval1::new(g.hi, iv.hi.clone()));
            }
            cur = next;
        }
        Ok(())
    }

    /// Rewrite as symmetric when every gap is centred and level lengths agree.
    fn normalized(self) -> GapTree {
        if self.is_symmetric() {
            return self;
        }
        let mut lens = Vec::with_capacity(self.depth);
        for n in 0..self.depth {
            let g = self.min_gap(n).expect("level in range");
            if g != self.max_gap(n).expect("level in range") {
                return self;
            }
            lens.push(g);
        }
        let cand = GapTree {
            hull: self.hull.clone(),
            depth: self.depth,
            gaps: GapStore::Symmetric(lens),
        };
        if cand.gaps_in_order() == self.gaps_in_order() {
            cand
        } else {
            self
        }
    }
}

impl PartialEq for GapTree {
    fn eq(&self, other: &Self) -> bool {
        if self.hull != other.hull || self.depth != other.depth {
            return false;
        }
        match (&self.gaps, &other.gaps) {
            (GapStore::Symmetric(a), GapStore::Symmetric(b)) => a == b,
            (GapStore::Explicit(a), GapStore::Explicit(b)) => a == b,
            _ => self.gaps_in_order() == other.gaps_in_order(),
        }
    }
}

pub fn build_symmetric(spec: &SymmetricSpec) -> Result<GapTree, TreeError> {
    if spec.gaps.is_empty() {
        return Err(TreeError::ZeroDepth);
    }
    let hl = spec.hull.len();
    if hl <= Rat::zero() {
        return Err(TreeError::DegenerateHull);
    }
    for (n, g) in spec.gaps.iter().enumerate() {
        if g <= &Rat::zero() {
            return Err(TreeError::NonPositiveGap(n));
        }
        if g >= &level_length(&hl, &spec.gaps, n) {
            return Err(TreeError::GapConstraintViolation(n));
        }
    }
    Ok(GapTree {
        hull: spec.hull.clone(),
        depth: spec.gaps.len(),
        gaps: GapStore::Symmetric(spec.gaps.clone()),
    })
}

/// Upper bound on the level-n gap of a symmetric tree with the given earlier gaps.
pub fn symmetric_gap_bound(hull: &Interval1, earlier: &[Rat]) -> Rat {
    level_length(&hull.len(), earlier, earlier.len())
}

/// Homogeneous Cantor set generated by x -> a x and x -> a x + (1 - a)|hull| on the hull.
pub fn build_binary_ifs(hull: &Interval1, a: &Rat, depth: usize) -> Result<GapTree, TreeError> {
    if !(a > &Rat::zero() && a < &rat::rat(1, 2)) {
        return Err(TreeError::InvalidRatio);
    }
    let hl = hull.len();
    let gaps = (0..depth)
        .map(|n| (Rat::one() - a * int(2)) * rat::pow_int(a, n as u32) * &hl)
        .collect();
    build_symmetric(&SymmetricSpec {
        hull: hull.clone(),
        gaps,
    })
}

/// Middle-thirds set on [0, 1].
pub fn middle_thirds(depth: usize) -> GapTree {
    build_binary_ifs(&Interval1::of((0, 1), (1, 1)), &rat::rat(1, 3), depth).expect("valid ratio")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapStats {
    pub min_gap: Rat,
    pub max_gap: Rat,
    pub intervals: Vec<Interval1>,
}

pub fn gap_stats(tree: &GapTree, n: usize) -> Result<GapStats, TreeError> {
    Ok(GapStats {
        min_gap: tree.min_gap(n)?,
        max_gap: tree.max_gap(n)?,
        intervals: tree.level_intervals(n)?,
    })
}

pub fn affine_image(tree: &GapTree, lam: &Rat, t: &Rat) -> Result<GapTree, TreeError> {
    if lam.is_zero() {
        return Err(TreeError::ZeroScale);
    }
    let hull = tree.hull.map(lam, t);
    let gaps = match &tree.gaps {
        GapStore::Symmetric(g) => GapStore::Symmetric(g.iter().map(|x| x * lam.abs()).collect()),
        GapStore::Explicit(v) => {
            let mut out = Vec::with_capacity(v.len());
            for lvl in 0..tree.depth {
                let width = 1u64 << lvl;
                for i in 0..width {
                    let src = if lam.is_negative() { width - 1 - i } else { i };
                    out.push(v[heap_index(lvl, src)].map(lam, t));
                }
            }
            GapStore::Explicit(out)
        }
    };
    Ok(GapTree {
        hull,
        depth: tree.depth,
        gaps,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureBounds {
    pub cover_measure: Rat,
    pub removed: Rat,
}

/// Total length of the level-n cover and of what was removed to get there.
pub fn measure_bounds(tree: &GapTree, n: usize) -> Result<MeasureBounds, TreeError> {
    tree.check_level(n, true)?;
    let removed = match &tree.gaps {
        GapStore::Symmetric(g) => g
            .iter()
            .take(n)
            .enumerate()
            .map(|(k, x)| x * rat::pow2(k as i64))
            .fold(Rat::zero(), |a, b| a + b),
        GapStore::Explicit(v) => v[..heap_index(n, 0)].iter().map(|g| g.len()).fold(Rat::zero(), |a, b| a + b),
    };
    Ok(MeasureBounds {
        cover_measure: tree.hull.len() - &removed,
        removed,
    })
}

#[derive(Serialize, Deserialize)]
struct GapRecord {
    addr: NodeAddress,
    #[serde(with = "rat::pair")]
    lo: Rat,
    #[serde(with = "rat::pair")]
    hi: Rat,
}

#[derive(Serialize, Deserialize)]
struct TreeRecord {
    hull: [serde_json::Number; 4],
    depth: usize,
    gaps: Vec<GapRecord>,
}

impl Serialize for GapTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use rat::pair::big_to_number as b;
        let h = &self.hull;
        TreeRecord {
            hull: [b(h.lo.numer()), b(h.lo.denom()), b(h.hi.numer()), b(h.hi.denom())],
            depth: self.depth,
            gaps: self
                .gaps_in_order()
                .into_iter()
                .map(|(addr, g)| GapRecord { addr, lo: g.lo, hi: g.hi })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GapTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use rat::pair::number_to_big as b;
        use serde::de::Error;
        let rec = TreeRecord::deserialize(d)?;
        let part = |i: usize| b(&rec.hull[i]).map_err(D::Error::custom);
        let (ln, ld, hn, hd) = (part(0)?, part(1)?, part(2)?, part(3)?);
        if ld.is_zero() || hd.is_zero() {
            return Err(D::Error::custom("zero denominator in hull"));
        }
        let hull = Interval1::new(Rat::new(ln, ld), Rat::new(hn, hd));
        if rec.depth == 0 || rec.depth > 40 {
            return Err(D::Error::custom(TreeError::Format(format!("depth {}", rec.depth))));
        }
        let need = (1usize << rec.depth) - 1;
        let mut slots: Vec<Option<Interval1>> = vec![None; need];
        for g in rec.gaps {
            if g.addr.len() >= rec.depth {
                return Err(D::Error::custom(TreeError::BadAddress(g.addr.to_string())));
            }
            let h = heap_index(g.addr.len(), g.addr.index());
            if slots[h].is_some() {
                return Err(D::Error::custom(TreeError::Format(format!("duplicate gap {}", g.addr))));
            }
            if g.lo > g.hi {
                return Err(D::Error::custom(TreeError::GapOutsideNode(g.addr.to_string())));
            }
            slots[h] = Some(Interval1::new(g.lo, g.hi));
        }
        let gaps = slots
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| D::Error::custom(TreeError::Format("missing gaps".into())))?;
        GapTree::from_heap(hull, rec.depth, gaps)
            .map(GapTree::normalized)
            .map_err(D::Error::custom)
    }
}

/// CSV rows `addr,lo_num,lo_den,hi_num,hi_den` for the level-n intervals.
pub fn intervals_csv(tree: &GapTree, n: usize) -> Result<String, TreeError> {
    let mut out = String::from("addr,lo_num,lo_den,hi_num,hi_den\n");
    for (i, iv) in tree.level_intervals(n)?.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            NodeAddress::from_index(n, i as u64),
            iv.lo.numer(),
            iv.lo.denom(),
            iv.hi.numer(),
            iv.hi.denom()
        ));
    }
    Ok(out)
}
