//! Non-degeneracy certificates: search, export and independent re-checking.

use super::boxd::BoxD;
use super::rep::{NestedRep, NodeId, RepConfig};
use super::rotation::RotationMatrix;
use super::source::{AffineMap, GeometrySource};
use super::{corner_ratio_bounds, d_min, kappa_ratios, tighten, NestedError, RatioBounds};
use crate::rat::{self, Rat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Source-space box, present when the geometry went through a linear map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<BoxD>,
    pub img: BoxD,
}

/// The level-`level` cubes with integer coordinates lo[j]..=hi[j] on each axis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeBlock {
    pub level: u32,
    pub lo: Vec<i128>,
    pub hi: Vec<i128>,
}

impl CubeBlock {
    pub fn as_box(&self) -> BoxD {
        let side = rat::pow2(-(self.level as i64));
        BoxD::new(
            self.lo.iter().map(|&k| Rat::from_integer(k.into()) * &side).collect(),
            self.hi.iter().map(|&k| Rat::from_integer((k + 1).into()) * &side).collect(),
        )
    }

    fn touches(&self, o: &CubeBlock) -> bool {
        (0..self.lo.len()).all(|j| o.lo[j] <= self.hi[j] + 1 && self.lo[j] <= o.hi[j] + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedComponent {
    pub node: String,
    pub gen: u32,
    pub level: u32,
    pub cells: Vec<CellRecord>,
    pub cubes: Vec<CubeBlock>,
}

impl SelectedComponent {
    /// Bounding box of the recorded image cells.
    pub fn hull(&self) -> BoxD {
        let mut it = self.cells.iter().map(|c| &c.img);
        let first = it.next().expect("component without cells").clone();
        it.fold(first, |acc, b| acc.join(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::rat::pair")]
    pub d_min: Rat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioBounds>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertNode {
    pub node: String,
    pub gen: u32,
    /// Generations between this node and its selections.
    pub k: u32,
    pub selected: Vec<SelectedComponent>,
    pub pairs: Vec<PairRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<CertNode>,
}

impl CertNode {
    pub fn min_d_min(&self) -> Option<&Rat> {
        self.pairs.iter().map(|p| &p.d_min).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndCertificate {
    pub dim: usize,
    #[serde(with = "crate::rat::pair::opt")]
    pub kappa: Option<Rat>,
    pub max_k: u32,
    pub depth: u32,
    pub precision_bits: u32,
    #[serde(with = "crate::rat::pair")]
    pub min_separation: Rat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<AffineMap>,
    pub hull: BoxD,
    pub root: CertNode,
}

impl UndCertificate {
    /// Certificate nodes at depth `t` (the root is depth 0), left to right.
    pub fn nodes_at(&self, t: u32) -> Vec<&CertNode> {
        let mut cur = vec![&self.root];
        for _ in 0..t {
            cur = cur.iter().flat_map(|n| n.children.iter()).collect();
        }
        cur
    }

    /// Every pair's ratio bounds, in tree order.
    pub fn all_ratios(&self) -> Vec<&RatioBounds> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(n) = stack.pop() {
            out.extend(n.pairs.iter().filter_map(|p| p.ratio.as_ref()));
            stack.extend(n.children.iter().rev());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertOptions {
    pub kappa: Option<Rat>,
    pub max_k: u32,
    pub depth: u32,
}

struct Search<'a> {
    rep: &'a mut NestedRep,
    opts: &'a CertOptions,
    failed: HashSet<(NodeId, u32)>,
    first_exhausted: Option<NodeId>,
}

impl Search<'_> {
    fn compatible(&self, a: &NodeId, b: &NodeId) -> bool {
        self.rep.compatible(a, b, self.opts.kappa.as_ref())
    }

    fn run(&mut self, node: &NodeId, remaining: u32) -> Option<CertNode> {
        if self.failed.contains(&(node.clone(), remaining)) {
            return None;
        }
        let need = self.rep.dim() + 1;
        let gen = self.rep.gen(node);
        for k in 1..=self.opts.max_k {
            if gen + k > self.rep.config().max_gen() {
                break;
            }
            let desc = self.rep.descendants(node, k);
            let n = desc.len();
            if n < need {
                continue;
            }
            let mut cache: Vec<Option<bool>> = vec![None; n * n];
            let mut chosen: Vec<usize> = Vec::with_capacity(need);
            let mut next = 0usize;
            loop {
                if chosen.len() == need {
                    let picks: Vec<NodeId> = chosen.iter().map(|&i| desc[i].clone()).collect();
                    if let Some(c) = self.assemble(node, k, &picks, remaining) {
                        return Some(c);
                    }
                    next = chosen.pop().expect("full clique") + 1;
                    continue;
                }
                let mut found = None;
                for c in next..n {
                    if n - c < need - chosen.len() {
                        break;
                    }
                    let ok = chosen.iter().all(|&p| {
                        let slot = p * n + c;
                        *cache[slot].get_or_insert_with(|| self.compatible(&desc[p], &desc[c]))
                    });
                    if ok {
                        found = Some(c);
                        break;
                    }
                }
                match found {
                    Some(c) => {
                        chosen.push(c);
                        next = c + 1;
                    }
                    None => match chosen.pop() {
                        Some(last) => next = last + 1,
                        None => break,
                    },
                }
            }
        }
        self.failed.insert((node.clone(), remaining));
        if self.first_exhausted.is_none() {
            self.first_exhausted = Some(node.clone());
        }
        None
    }

    fn assemble(&mut self, node: &NodeId, k: u32, picks: &[NodeId], remaining: u32) -> Option<CertNode> {
        let mut children = Vec::new();
        if remaining > 1 {
            for p in picks {
                children.push(self.run(p, remaining - 1)?);
            }
        }
        let rep = &*self.rep;
        let selected = picks
            .iter()
            .map(|p| SelectedComponent {
                node: p.to_string(),
                gen: rep.gen(p),
                level: rep.level(p),
                cells: rep.cells(p),
                cubes: rep.cube_blocks(p),
            })
            .collect();
        let mut pairs = Vec::new();
        for i in 0..picks.len() {
            for j in i + 1..picks.len() {
                pairs.push(PairRecord {
                    i,
                    j,
                    d_min: rep.d_min(&picks[i], &picks[j]),
                    ratio: rep.kappa_ratios(&picks[i], &picks[j]).ok(),
                });
            }
        }
        Some(CertNode { node: node.to_string(), gen: rep.gen(node), k, selected, pairs, children })
    }
}

/// Why the components below a node cannot be separated: slabs on some axis
/// that hold fewer than d + 1 groups.
fn explain(rep: &mut NestedRep, node: &NodeId, max_k: u32) -> String {
    let gen = rep.gen(node);
    let k = max_k.min(rep.config().max_gen().saturating_sub(gen));
    if k == 0 {
        return "node is already at the leaf generation".into();
    }
    let desc = rep.descendants(node, k);
    let need = rep.dim() + 1;
    if desc.len() < need {
        return format!("only {} components {} generation(s) below, need {}", desc.len(), k, need);
    }
    let boxes: Vec<BoxD> = desc.iter().map(|d| rep.bbox(d)).collect();
    let sep = rep.config().min_separation.clone();
    let mut notes = Vec::new();
    for j in 0..rep.dim() {
        let mut iv: Vec<(Rat, Rat)> = boxes.iter().map(|b| (b.lo[j].clone(), b.hi[j].clone())).collect();
        iv.sort();
        let mut slabs: Vec<(Rat, Rat)> = Vec::new();
        for (lo, hi) in iv {
            match slabs.last_mut() {
                Some(s) if &lo - &s.1 <= sep => {
                    if hi > s.1 {
                        s.1 = hi;
                    }
                }
                _ => slabs.push((lo, hi)),
            }
        }
        if slabs.len() < need {
            let desc: Vec<String> = slabs
                .iter()
                .map(|(a, b)| {
                    if a == b {
                        format!("x{} = {}", j + 1, rat::to_f64(a))
                    } else {
                        format!("x{} in [{:.6}, {:.6}]", j + 1, rat::to_f64(a), rat::to_f64(b))
                    }
                })
                .collect();
            let kind = if slabs.iter().all(|(a, b)| b - a <= sep) { "hyperplane(s)" } else { "slab(s)" };
            notes.push(format!("axis {}: all components lie in {} {} {}", j + 1, slabs.len(), kind, desc.join(", ")));
        }
    }
    if notes.is_empty() {
        "no axis-parallel confinement detected; search budget may simply be too small".into()
    } else {
        format!("likely degenerate: {}", notes.join("; "))
    }
}

/// Search for an arity-(d+1) certificate of the requested depth.
pub fn und_certificate(rep: &mut NestedRep, opts: &CertOptions) -> Result<UndCertificate, NestedError> {
    if opts.depth == 0 || opts.max_k == 0 {
        return Err(NestedError::InvalidLevels("depth and max_k must be positive".into()));
    }
    let root = rep.root();
    let mut s = Search { rep, opts, failed: HashSet::new(), first_exhausted: None };
    match s.run(&root, opts.depth) {
        Some(tree) => Ok(UndCertificate {
            dim: s.rep.dim(),
            kappa: opts.kappa.clone(),
            max_k: opts.max_k,
            depth: opts.depth,
            precision_bits: s.rep.config().precision_bits,
            min_separation: s.rep.config().min_separation.clone(),
            map: s.rep.map().cloned(),
            hull: s.rep.hull().clone(),
            root: tree,
        }),
        None => {
            let bad = s.first_exhausted.clone().unwrap_or(root);
            let gen = s.rep.gen(&bad);
            let explanation = explain(s.rep, &bad, opts.max_k);
            Err(NestedError::CertificateNotFound { node: bad.to_string(), gen, max_k: opts.max_k, explanation })
        }
    }
}

fn invalid(msg: String) -> NestedError {
    NestedError::InvalidCertificate(msg)
}

/// Re-check a certificate from its own contents.
pub fn verify_certificate(cert: &UndCertificate) -> Result<(), NestedError> {
    let top = vec![CellRecord { pre: None, img: cert.hull.clone() }];
    verify_node(cert, &cert.root, &top, 1)
}

fn verify_node(cert: &UndCertificate, node: &CertNode, parent: &[CellRecord], depth: u32) -> Result<(), NestedError> {
    let need = cert.dim + 1;
    if node.selected.len() != need {
        return Err(invalid(format!("node {} selects {} components, need {}", node.node, node.selected.len(), need)));
    }
    for s in &node.selected {
        if s.cells.is_empty() {
            return Err(invalid(format!("component {} has no cells", s.node)));
        }
        for c in &s.cells {
            if c.img.dim() != cert.dim {
                return Err(invalid(format!("component {} has a cell of wrong dimension", s.node)));
            }
            if !parent.iter().any(|p| p.img.contains(&c.img)) {
                return Err(invalid(format!("component {} leaves its parent {}", s.node, node.node)));
            }
            if !s.cubes.iter().any(|q| q.level == s.level && q.as_box().contains(&c.img)) {
                return Err(invalid(format!("component {} has a cell outside its cubes", s.node)));
            }
        }
        let mut reached = vec![false; s.cubes.len()];
        let mut stack = vec![0usize];
        reached[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..s.cubes.len() {
                if !reached[b] && s.cubes[a].touches(&s.cubes[b]) {
                    reached[b] = true;
                    stack.push(b);
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err(invalid(format!("cube cover of {} is not connected", s.node)));
        }
    }
    let mut seen = HashSet::new();
    for p in &node.pairs {
        if p.i >= p.j || p.j >= need || !seen.insert((p.i, p.j)) {
            return Err(invalid(format!("bad pair index at node {}", node.node)));
        }
        let (a, b) = (&node.selected[p.i], &node.selected[p.j]);
        let ia: Vec<BoxD> = a.cells.iter().map(|c| c.img.clone()).collect();
        let ib: Vec<BoxD> = b.cells.iter().map(|c| c.img.clone()).collect();
        let dm = d_min(&ia, &ib);
        if dm <= cert.min_separation || p.d_min > dm {
            return Err(invalid(format!("pair ({}, {}) at node {}: separation not confirmed", p.i, p.j, node.node)));
        }
        let recomputed = kappa_ratios(&ia, &ib).ok().map(|hull| {
            let corners = cert.map.as_ref().and_then(|m| {
                let pa: Option<Vec<BoxD>> = a.cells.iter().map(|c| c.pre.clone()).collect();
                let pb: Option<Vec<BoxD>> = b.cells.iter().map(|c| c.pre.clone()).collect();
                corner_ratio_bounds(m, &pa?, &pb?)
            });
            tighten(hull, corners)
        });
        match (&p.ratio, &recomputed) {
            (Some(r), Some(c)) if c.lo >= r.lo && c.hi <= r.hi => {}
            (None, _) => {}
            _ => return Err(invalid(format!("pair ({}, {}) at node {}: ratio bounds not confirmed", p.i, p.j, node.node))),
        }
        if let Some(k) = &cert.kappa {
            if !p.ratio.as_ref().is_some_and(|r| r.within(k)) {
                return Err(invalid(format!("pair ({}, {}) at node {}: ratio outside kappa", p.i, p.j, node.node)));
            }
        }
    }
    if seen.len() != need * (need - 1) / 2 {
        return Err(invalid(format!("node {} is missing pairs", node.node)));
    }
    if depth == cert.depth {
        if !node.children.is_empty() {
            return Err(invalid(format!("node {} is deeper than the stated depth", node.node)));
        }
        return Ok(());
    }
    if node.children.len() != need {
        return Err(invalid(format!("node {} has {} children, need {}", node.node, node.children.len(), need)));
    }
    for (s, c) in node.selected.iter().zip(&node.children) {
        if c.node != s.node {
            return Err(invalid(format!("child {} does not match selection {}", c.node, s.node)));
        }
        verify_node(cert, c, &s.cells, depth + 1)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateFailure {
    pub label: String,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct RotationOutcome {
    pub index: usize,
    pub rotation: RotationMatrix,
    pub certificate: UndCertificate,
    /// Earlier candidates, in list order.
    pub failures: Vec<CandidateFailure>,
}

fn try_candidate(
    source: &GeometrySource,
    rot: &RotationMatrix,
    config: &RepConfig,
    opts: &CertOptions,
) -> Result<UndCertificate, NestedError> {
    let geo = if rot.is_identity() { source.clone() } else { source.with_map(&rot.as_map())? };
    let mut rep = NestedRep::build(&geo, config.clone())?;
    und_certificate(&mut rep, opts)
}

/// First candidate, in list order, whose transformed geometry certifies.
pub fn rotation_search(
    source: &GeometrySource,
    candidates: &[RotationMatrix],
    config: &RepConfig,
    opts: &CertOptions,
) -> Result<RotationOutcome, NestedError> {
    let mut failures = Vec::new();
    let batch = rayon::current_num_threads().max(1);
    for (b, chunk) in candidates.chunks(batch).enumerate() {
        let results: Vec<_> = chunk.par_iter().map(|r| try_candidate(source, r, config, opts)).collect();
        for (i, (res, rot)) in results.into_iter().zip(chunk).enumerate() {
            match res {
                Ok(certificate) => {
                    return Ok(RotationOutcome { index: b * batch + i, rotation: rot.clone(), certificate, failures })
                }
                Err(e) => failures.push(CandidateFailure { label: rot.label.clone(), error: e.to_string() }),
            }
        }
    }
    Err(NestedError::AllCandidatesFailed(failures))
}
