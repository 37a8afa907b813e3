//! The nested representation: generation 0 is the whole geometry, generation
//! g >= 1 holds the connected components of the dyadic cover at level
//! start_level + (g - 1) * refine_step.

use super::boxd::{axis_gap, BoxD};
use super::cert::{CellRecord, CubeBlock};
use super::line::LineRep;
use super::source::{AffineMap, Factor, GeometrySource};
use super::{corner_ratio_bounds, d_min, kappa_ratios, ratio_from_ranges, tighten, NestedError, RatioBounds};
use crate::rat::{self, Rat};
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepConfig {
    pub start_level: u32,
    pub leaf_level: u32,
    pub refine_step: u32,
    pub precision_bits: u32,
    /// Separations at or below this are not trusted.
    pub min_separation: Rat,
    pub max_cells: usize,
}

impl Default for RepConfig {
    fn default() -> Self {
        RepConfig {
            start_level: 2,
            leaf_level: 12,
            refine_step: 2,
            precision_bits: 64,
            min_separation: rat::pow2(-40),
            max_cells: 1 << 16,
        }
    }
}

impl RepConfig {
    pub fn level_of_gen(&self, gen: u32) -> u32 {
        if gen == 0 {
            0
        } else {
            self.start_level + (gen - 1) * self.refine_step
        }
    }

    pub fn max_gen(&self) -> u32 {
        1 + (self.leaf_level - self.start_level) / self.refine_step
    }

    fn validate(&self) -> Result<(), NestedError> {
        if self.refine_step == 0 || self.start_level >= self.leaf_level {
            return Err(NestedError::InvalidLevels(format!(
                "need start_level < leaf_level and refine_step >= 1, got {}, {}, {}",
                self.start_level, self.leaf_level, self.refine_step
            )));
        }
        if self.precision_bits < self.leaf_level + 8 {
            return Err(NestedError::InvalidLevels(format!(
                "precision of {} bits is too coarse for leaf level {}",
                self.precision_bits, self.leaf_level
            )));
        }
        Ok(())
    }
}

/// Node handle: one arena index per axis for products, a single index otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub Vec<u32>);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&x| x == 0) {
            return write!(f, "root");
        }
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// A node whose descendants at the leaf generation are no smaller than itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotShrinking {
    pub node: String,
    pub gen: u32,
}

#[derive(Clone, Debug)]
struct CellGeom {
    pre: Option<BoxD>,
    img: BoxD,
}

#[derive(Clone, Debug)]
struct CellNode {
    gen: u32,
    cells: Vec<u32>,
    children: Vec<u32>,
    bbox: BoxD,
}

#[derive(Clone, Debug)]
struct CellRep {
    cells: Vec<CellGeom>,
    nodes: Vec<CellNode>,
}

#[derive(Clone, Debug)]
enum Backend {
    Product(Vec<LineRep>),
    Cells(CellRep),
}

#[derive(Clone, Debug)]
pub struct NestedRep {
    dim: usize,
    config: RepConfig,
    hull: BoxD,
    map: Option<AffineMap>,
    backend: Backend,
    pub warnings: Vec<NotShrinking>,
}

/// Nodes examined by the shrink check after construction.
const SHRINK_CHECK_BUDGET: usize = 2048;

impl NestedRep {
    pub fn build(source: &GeometrySource, config: RepConfig) -> Result<Self, NestedError> {
        config.validate()?;
        source.validate()?;
        let dim = source.dim();
        let bits = config.precision_bits;
        let mut rep = match source {
            GeometrySource::Product { factors, map: None } => {
                let (lo, hi): (Vec<Rat>, Vec<Rat>) = factors.iter().map(|f| f.hull()).unzip();
                NestedRep {
                    dim,
                    hull: BoxD::outward(&lo, &hi, bits),
                    map: None,
                    backend: Backend::Product(factors.iter().map(|f| LineRep::new(f.clone(), bits)).collect()),
                    config,
                    warnings: Vec::new(),
                }
            }
            GeometrySource::Product { factors, map: Some(map) } => {
                let leaves: Vec<Vec<(Rat, Rat)>> = factors.iter().map(Factor::leaves).collect();
                let count = leaves.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
                match count {
                    Some(c) if c <= config.max_cells => {}
                    Some(c) => return Err(NestedError::TooManyCells(c)),
                    None => return Err(NestedError::TooManyCells(usize::MAX)),
                }
                let ranges: Vec<Vec<u32>> = leaves.iter().map(|l| (0..l.len() as u32).collect()).collect();
                let cells = cartesian(&ranges)
                    .into_iter()
                    .map(|idx| {
                        let lo: Vec<Rat> = (0..dim).map(|j| leaves[j][idx[j] as usize].0.clone()).collect();
                        let hi: Vec<Rat> = (0..dim).map(|j| leaves[j][idx[j] as usize].1.clone()).collect();
                        let img = BoxD::from_intervals(&map.apply_box(&lo, &hi), bits);
                        CellGeom { pre: Some(BoxD::outward(&lo, &hi, bits)), img }
                    })
                    .collect();
                NestedRep::from_cells(dim, config, Some(map.clone()), cells)?
            }
            GeometrySource::Cubes(list) => {
                if list.cubes.len() > config.max_cells {
                    return Err(NestedError::TooManyCells(list.cubes.len()));
                }
                let side = rat::pow2(-(list.level as i64));
                let mut cubes = list.cubes.clone();
                cubes.sort();
                cubes.dedup();
                let cells = cubes
                    .iter()
                    .map(|q| {
                        let lo: Vec<Rat> = q.iter().map(|&k| rat::int(k) * &side).collect();
                        let hi: Vec<Rat> = lo.iter().map(|x| x + &side).collect();
                        CellGeom { pre: None, img: BoxD::outward(&lo, &hi, bits) }
                    })
                    .collect();
                NestedRep::from_cells(dim, config, None, cells)?
            }
        };
        rep.warnings = rep.check_shrinking(SHRINK_CHECK_BUDGET);
        Ok(rep)
    }

    fn from_cells(dim: usize, config: RepConfig, map: Option<AffineMap>, cells: Vec<CellGeom>) -> Result<Self, NestedError> {
        let hull = cells[1..].iter().fold(cells[0].img.clone(), |acc, c| acc.join(&c.img));
        let n = cells.len();
        let mut nodes = vec![CellNode { gen: 0, cells: (0..n as u32).collect(), children: Vec::new(), bbox: hull.clone() }];
        let mut owner = vec![0u32; n];
        for gen in 1..=config.max_gen() {
            let m = config.level_of_gen(gen);
            let blocks = cells.iter().map(|c| cube_range(&c.img, m)).collect::<Result<Vec<_>, _>>()?;
            let groups = touching_groups(&blocks);
            let mut next_owner = vec![0u32; n];
            for g in groups {
                let parent = owner[g[0] as usize];
                let id = nodes.len() as u32;
                let bbox = g[1..].iter().fold(cells[g[0] as usize].img.clone(), |acc, &c| acc.join(&cells[c as usize].img));
                for &c in &g {
                    next_owner[c as usize] = id;
                }
                nodes[parent as usize].children.push(id);
                nodes.push(CellNode { gen, cells: g, children: Vec::new(), bbox });
            }
            owner = next_owner;
        }
        Ok(NestedRep {
            dim,
            config,
            hull,
            map,
            backend: Backend::Cells(CellRep { cells, nodes }),
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &RepConfig {
        &self.config
    }

    pub fn hull(&self) -> &BoxD {
        &self.hull
    }

    pub fn map(&self) -> Option<&AffineMap> {
        self.map.as_ref()
    }

    pub fn is_product(&self) -> bool {
        matches!(self.backend, Backend::Product(_))
    }

    pub fn root(&self) -> NodeId {
        match &self.backend {
            Backend::Product(_) => NodeId(vec![0; self.dim]),
            Backend::Cells(_) => NodeId(vec![0]),
        }
    }

    pub fn gen(&self, id: &NodeId) -> u32 {
        match &self.backend {
            Backend::Product(lines) => lines[0].node(id.0[0]).gen,
            Backend::Cells(c) => c.nodes[id.0[0] as usize].gen,
        }
    }

    pub fn level(&self, id: &NodeId) -> u32 {
        self.config.level_of_gen(self.gen(id))
    }

    /// Children of a node, expanding product axes on demand.
    pub fn children(&mut self, id: &NodeId) -> Vec<NodeId> {
        let gen = self.gen(id);
        if gen >= self.config.max_gen() {
            return Vec::new();
        }
        let m = self.config.level_of_gen(gen + 1);
        match &mut self.backend {
            Backend::Product(lines) => {
                let per_axis: Vec<Vec<u32>> =
                    lines.iter_mut().zip(&id.0).map(|(l, &i)| l.children(i, m).to_vec()).collect();
                cartesian(&per_axis).into_iter().map(NodeId).collect()
            }
            Backend::Cells(c) => c.nodes[id.0[0] as usize].children.iter().map(|&i| NodeId(vec![i])).collect(),
        }
    }

    /// Children already known, without expanding.
    pub fn cached_children(&self, id: &NodeId) -> Option<Vec<NodeId>> {
        match &self.backend {
            Backend::Product(lines) => {
                let per_axis: Option<Vec<Vec<u32>>> =
                    lines.iter().zip(&id.0).map(|(l, &i)| l.cached_children(i).map(|c| c.to_vec())).collect();
                Some(cartesian(&per_axis?).into_iter().map(NodeId).collect())
            }
            Backend::Cells(c) => {
                let n = &c.nodes[id.0[0] as usize];
                if n.gen >= self.config.max_gen() {
                    None
                } else {
                    Some(n.children.iter().map(|&i| NodeId(vec![i])).collect())
                }
            }
        }
    }

    /// Descendants exactly `k` generations below.
    pub fn descendants(&mut self, id: &NodeId, k: u32) -> Vec<NodeId> {
        let mut frontier = vec![id.clone()];
        for _ in 0..k {
            frontier = frontier.iter().flat_map(|n| self.children(n)).collect();
        }
        frontier
    }

    /// All components of generation `gen`.
    pub fn components_at(&mut self, gen: u32) -> Vec<NodeId> {
        let root = self.root();
        self.descendants(&root, gen)
    }

    pub fn bbox(&self, id: &NodeId) -> BoxD {
        match &self.backend {
            Backend::Product(lines) => {
                let (lo, hi): (Vec<Rat>, Vec<Rat>) = lines
                    .iter()
                    .zip(&id.0)
                    .map(|(l, &i)| {
                        let n = l.node(i);
                        (n.lo_r.clone(), n.hi_r.clone())
                    })
                    .unzip();
                BoxD::new(lo, hi)
            }
            Backend::Cells(c) => c.nodes[id.0[0] as usize].bbox.clone(),
        }
    }

    /// Boxes that jointly contain the component's part of the geometry.
    pub fn cells(&self, id: &NodeId) -> Vec<CellRecord> {
        match &self.backend {
            Backend::Product(_) => vec![CellRecord { pre: None, img: self.bbox(id) }],
            Backend::Cells(c) => c.nodes[id.0[0] as usize]
                .cells
                .iter()
                .map(|&i| {
                    let g = &c.cells[i as usize];
                    CellRecord { pre: g.pre.clone(), img: g.img.clone() }
                })
                .collect(),
        }
    }

    /// The component's cube cover as blocks of level-m cubes (one per cell).
    pub fn cube_blocks(&self, id: &NodeId) -> Vec<CubeBlock> {
        let m = self.level(id);
        let mut out: Vec<CubeBlock> = self
            .cells(id)
            .iter()
            .map(|c| {
                let (lo, hi) = cube_range(&c.img, m).expect("ranges were checked at build time");
                CubeBlock { level: m, lo, hi }
            })
            .collect();
        out.sort_by(|a, b| (&a.lo, &a.hi).cmp(&(&b.lo, &b.hi)));
        out.dedup();
        out
    }

    fn img_boxes(&self, id: &NodeId) -> Vec<BoxD> {
        self.cells(id).into_iter().map(|c| c.img).collect()
    }

    /// Lower bound on the separation of two components in every axis direction.
    pub fn d_min(&self, a: &NodeId, b: &NodeId) -> Rat {
        match &self.backend {
            Backend::Product(lines) => {
                let mut best: Option<Rat> = None;
                for (j, l) in lines.iter().enumerate() {
                    if a.0[j] == b.0[j] {
                        return Rat::zero();
                    }
                    let (x, y) = (l.node(a.0[j]), l.node(b.0[j]));
                    let g = axis_gap(&x.lo_r, &x.hi_r, &y.lo_r, &y.hi_r);
                    if best.as_ref().is_none_or(|b| &g < b) {
                        best = Some(g);
                    }
                }
                best.unwrap_or_else(Rat::zero)
            }
            Backend::Cells(_) => d_min(&self.img_boxes(a), &self.img_boxes(b)),
        }
    }

    /// d_min above the separation threshold and, when `kappa` is given, ratio
    /// bounds inside [1/kappa, kappa].
    pub fn compatible(&self, a: &NodeId, b: &NodeId, kappa: Option<&Rat>) -> bool {
        if let Backend::Product(lines) = &self.backend {
            if let Some(v) = self.compatible_scaled(lines, a, b, kappa) {
                return v;
            }
        }
        if self.d_min(a, b) <= self.config.min_separation {
            return false;
        }
        match kappa {
            None => true,
            Some(k) => self.kappa_ratios(a, b).is_ok_and(|r| r.within(k)),
        }
    }

    /// Integer version of `compatible` for products; None when out of range.
    fn compatible_scaled(&self, lines: &[LineRep], a: &NodeId, b: &NodeId, kappa: Option<&Rat>) -> Option<bool> {
        let d = self.dim;
        let mut gaps = Vec::with_capacity(d);
        let mut spans = Vec::with_capacity(d);
        for (j, l) in lines.iter().enumerate() {
            if a.0[j] == b.0[j] {
                return Some(false);
            }
            let (x0, x1) = l.node(a.0[j]).scaled?;
            let (y0, y1) = l.node(b.0[j]).scaled?;
            gaps.push((y0 - x1).max(x0 - y1).max(0));
            spans.push((x1 - y0).max(y1 - x0));
        }
        // gap > min_separation * 2^bits, i.e. gap * den > num * 2^bits
        let sep = &self.config.min_separation;
        let sep_num = sep.numer().to_i128()?.checked_shl(self.config.precision_bits)?;
        let sep_den = sep.denom().to_i128()?;
        let min_gap = *gaps.iter().min()?;
        if min_gap.checked_mul(sep_den)? <= sep_num {
            return Some(false);
        }
        let Some(k) = kappa else { return Some(true) };
        if d < 2 {
            return Some(Rat::one() <= *k);
        }
        let (kn, kd) = (k.numer().to_i128()?, k.denom().to_i128()?);
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                // d_i / D_j >= 1/kappa and D_i / d_j <= kappa
                if gaps[i].checked_mul(kn)? < spans[j].checked_mul(kd)? {
                    return Some(false);
                }
                if spans[i].checked_mul(kd)? > gaps[j].checked_mul(kn)? {
                    return Some(false);
                }
            }
        }
        Some(true)
    }

    /// Ratio bounds, tightened by corner evaluation when a linear map is present.
    pub fn kappa_ratios(&self, a: &NodeId, b: &NodeId) -> Result<RatioBounds, NestedError> {
        match &self.backend {
            Backend::Product(_) => {
                let (ba, bb) = (self.bbox(a), self.bbox(b));
                let dist: Vec<Rat> = (0..self.dim)
                    .map(|j| if a.0[j] == b.0[j] { Rat::zero() } else { ba.gap(&bb, j) })
                    .collect();
                let span: Vec<Rat> = (0..self.dim).map(|j| ba.span(&bb, j)).collect();
                ratio_from_ranges(&dist, &span)
            }
            Backend::Cells(_) => {
                let hull = kappa_ratios(&self.img_boxes(a), &self.img_boxes(b))?;
                let corners = self.map.as_ref().and_then(|m| {
                    let pa: Option<Vec<BoxD>> = self.cells(a).into_iter().map(|c| c.pre).collect();
                    let pb: Option<Vec<BoxD>> = self.cells(b).into_iter().map(|c| c.pre).collect();
                    corner_ratio_bounds(m, &pa?, &pb?)
                });
                Ok(tighten(hull, corners))
            }
        }
    }

    /// Topmost nodes whose single-child chain runs two or more generations
    /// down to the leaf generation without any reduction of the bounding box.
    pub fn check_shrinking(&mut self, budget: usize) -> Vec<NotShrinking> {
        let mut out = Vec::new();
        let leaf_scale = rat::pow2(-2 * self.config.leaf_level as i64);
        let mut queue = VecDeque::from([self.root()]);
        let mut seen = 0;
        while let Some(id) = queue.pop_front() {
            if seen >= budget {
                break;
            }
            seen += 1;
            let kids = self.children(&id);
            if self.gen(&id) >= 1 && kids.len() == 1 {
                let own = self.bbox(&id);
                let mut cur = kids[0].clone();
                let mut stuck = self.bbox(&cur) == own;
                let mut steps = 1;
                while stuck {
                    let next = self.children(&cur);
                    match next.len() {
                        0 => break,
                        1 => {
                            steps += 1;
                            cur = next[0].clone();
                            stuck = self.bbox(&cur) == own;
                        }
                        _ => stuck = false,
                    }
                }
                if stuck && steps >= 2 && own.diameter_sq() > leaf_scale {
                    out.push(NotShrinking { node: id.to_string(), gen: self.gen(&id) });
                    continue;
                }
            }
            queue.extend(kids);
        }
        out
    }

    /// Number of materialized nodes (per axis for products).
    pub fn materialized(&self) -> usize {
        match &self.backend {
            Backend::Product(lines) => lines.iter().map(|l| l.len()).sum(),
            Backend::Cells(c) => c.nodes.len(),
        }
    }
}

pub(crate) fn cartesian(per_axis: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![Vec::new()];
    for axis in per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &x in axis {
                let mut v = prefix.clone();
                v.push(x);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Indices of the closed level-m cubes meeting a box, per axis.
pub(crate) fn cube_range(b: &BoxD, m: u32) -> Result<(Vec<i128>, Vec<i128>), NestedError> {
    let conv = |x: num::BigInt| {
        x.to_i128().ok_or_else(|| NestedError::InvalidLevels(format!("cube index overflow at level {m}")))
    };
    let lo = b.lo.iter().map(|x| conv(rat::ceil_scaled(x, m) - 1)).collect::<Result<Vec<_>, _>>()?;
    let hi = b.hi.iter().map(|x| conv(rat::floor_scaled(x, m))).collect::<Result<Vec<_>, _>>()?;
    Ok((lo, hi))
}

/// Blocks whose closed cube unions touch, grouped (union-find, sweep on axis 0).
/// Groups come out ordered by their smallest member.
pub(crate) fn touching_groups(blocks: &[(Vec<i128>, Vec<i128>)]) -> Vec<Vec<u32>> {
    let n = blocks.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| blocks[i].0[0]);
    for (a, &i) in order.iter().enumerate() {
        let (ilo, ihi) = &blocks[i];
        for &j in &order[a + 1..] {
            let (jlo, jhi) = &blocks[j];
            if jlo[0] > ihi[0] + 1 {
                break;
            }
            let touch = (0..ilo.len()).all(|k| jlo[k] <= ihi[k] + 1 && ilo[k] <= jhi[k] + 1);
            if touch {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i as u32);
    }
    groups
}
