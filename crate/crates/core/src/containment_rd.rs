//! Containment chains against a product companion in higher dimension.
//!
//! The companion is K0 x ... x K0 for one centrally symmetric K0. A chain step
//! splits the current cell by its central slits and keeps a selected
//! component whose box lands in one corner subcell.

use crate::cantor1d::{self, GapTree, Interval1, SymmetricSpec, TreeError};
use crate::interval::RatInterval;
use crate::nested_rd::{union_gap, AffineMap, BoxD, CertNode, UndCertificate};
use crate::rat::{self, int, Rat};
use num::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainmentRdError {
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("companion gap at level {0} is not below the separation")]
    InfeasibleGaps(usize),
    #[error("every selected component meets a slit at step {0}")]
    SlitBlocked(usize),
    #[error("no positive margin on axis {0}")]
    NoMargin(usize),
    #[error("certificate hull is not inside the companion hull")]
    HullNotContained,
    #[error("depth {n} exceeds available depth {depth}")]
    DepthTooLarge { n: usize, depth: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Per-level lower bounds d_1, d_2, ... on pairwise separation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationSequence {
    #[serde(with = "rat::pair::vec")]
    pub d: Vec<Rat>,
}

impl SeparationSequence {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// d_k is the smallest recorded d_min among certificate nodes at depth k - 1.
pub fn dk_sequence(cert: &UndCertificate) -> Result<SeparationSequence, ContainmentRdError> {
    let bad = |m: String| ContainmentRdError::InvalidCertificate(m);
    if cert.depth == 0 {
        return Err(bad("depth 0".into()));
    }
    let mut d = Vec::with_capacity(cert.depth as usize);
    for t in 0..cert.depth {
        let nodes = cert.nodes_at(t);
        if nodes.is_empty() {
            return Err(bad(format!("no nodes at depth {t}")));
        }
        let mut best: Option<&Rat> = None;
        for n in nodes {
            check_node(n, t + 1 < cert.depth).map_err(bad)?;
            let m = n.min_d_min().expect("checked non-empty");
            if best.is_none_or(|b| m < b) {
                best = Some(m);
            }
        }
        d.push(best.expect("non-empty level").clone());
    }
    Ok(SeparationSequence { d })
}

fn check_node(n: &CertNode, inner: bool) -> Result<(), String> {
    let s = n.selected.len();
    if s < 2 {
        return Err(format!("node {} selects {s} component(s)", n.node));
    }
    if n.pairs.len() != s * (s - 1) / 2 {
        return Err(format!("node {} records {} pairs for {s} components", n.node, n.pairs.len()));
    }
    if let Some(p) = n.pairs.iter().find(|p| !p.d_min.is_positive()) {
        return Err(format!("node {} pair ({}, {}) has d_min {}", n.node, p.i, p.j, p.d_min));
    }
    if n.selected.iter().any(|c| c.cells.is_empty()) {
        return Err(format!("node {} has a component without cells", n.node));
    }
    if inner && n.children.len() != s {
        return Err(format!("node {} has {} children for {s} selections", n.node, n.children.len()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CompanionRepr {
    dim: usize,
    hull: Interval1,
    #[serde(with = "rat::pair::vec")]
    gaps: Vec<Rat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    capped: Vec<usize>,
}

/// K0^d with its base tree. Level n of the tree removes the gap g_{n+1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompanionRepr", into = "CompanionRepr")]
pub struct ProductCompanion {
    pub dim: usize,
    pub base: GapTree,
    /// Tree levels whose gap was capped below the feasibility bound.
    pub capped: Vec<usize>,
}

impl TryFrom<CompanionRepr> for ProductCompanion {
    type Error = TreeError;
    fn try_from(r: CompanionRepr) -> Result<Self, TreeError> {
        let base = cantor1d::build_symmetric(&SymmetricSpec { hull: r.hull, gaps: r.gaps })?;
        Ok(ProductCompanion { dim: r.dim, base, capped: r.capped })
    }
}

impl From<ProductCompanion> for CompanionRepr {
    fn from(c: ProductCompanion) -> Self {
        CompanionRepr {
            dim: c.dim,
            hull: c.base.hull().clone(),
            gaps: c.gaps().to_vec(),
            capped: c.capped,
        }
    }
}

impl ProductCompanion {
    pub fn gaps(&self) -> &[Rat] {
        self.base.symmetric_gaps().expect("companion base is symmetric")
    }

    pub fn depth(&self) -> usize {
        self.base.depth()
    }

    pub fn hull_box(&self) -> BoxD {
        let h = self.base.hull();
        BoxD::new(vec![h.lo.clone(); self.dim], vec![h.hi.clone(); self.dim])
    }

    /// Common length of the level-n base intervals.
    pub fn level_length(&self, n: usize) -> Rat {
        cantor1d::symmetric_gap_bound(self.base.hull(), &self.gaps()[..n])
    }

    /// The cell S_{n,j} with per-axis level-n indices `idx`.
    pub fn cell(&self, n: usize, idx: &[u64]) -> Result<BoxD, ContainmentRdError> {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for &i in idx {
            let iv = self.base.interval(&cantor1d::NodeAddress::from_index(n, i))?;
            lo.push(iv.lo);
            hi.push(iv.hi);
        }
        Ok(BoxD::new(lo, hi))
    }
}

/// Companion on I^d, I = [min lo - margin, max hi + margin] over the axes of
/// `cert_hull`, with g_k = shrink * d_k unless that breaks feasibility.
pub fn build_product_companion(
    cert_hull: &BoxD,
    seps: &SeparationSequence,
    shrink: &Rat,
    margin: &Rat,
) -> Result<ProductCompanion, ContainmentRdError> {
    if !(shrink.is_positive() && shrink < &Rat::one()) {
        return Err(ContainmentRdError::InvalidParameter("shrink must lie in (0, 1)".into()));
    }
    if margin.is_negative() {
        return Err(ContainmentRdError::InvalidParameter("margin must be non-negative".into()));
    }
    if seps.is_empty() {
        return Err(ContainmentRdError::InvalidParameter("empty separation sequence".into()));
    }
    if let Some(k) = seps.d.iter().position(|x| !x.is_positive()) {
        return Err(ContainmentRdError::InvalidParameter(format!("separation d_{} is not positive", k + 1)));
    }
    let lo = cert_hull.lo.iter().min().expect("non-empty box") - margin;
    let hi = cert_hull.hi.iter().max().expect("non-empty box") + margin;
    if lo >= hi {
        return Err(ContainmentRdError::InvalidParameter("degenerate companion hull".into()));
    }
    let hull = Interval1::new(lo, hi);
    let mut gaps: Vec<Rat> = Vec::with_capacity(seps.len());
    let mut capped = Vec::new();
    for (k, d) in seps.d.iter().enumerate() {
        let want = shrink * d;
        let bound = cantor1d::symmetric_gap_bound(&hull, &gaps);
        let g = if want < bound {
            want
        } else {
            capped.push(k);
            bound / int(2)
        };
        if &g >= d {
            return Err(ContainmentRdError::InfeasibleGaps(k + 1));
        }
        gaps.push(g);
    }
    let base = cantor1d::build_symmetric(&SymmetricSpec { hull, gaps })?;
    Ok(ProductCompanion { dim: cert_hull.dim(), base, capped })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    /// Selected component kept at this step.
    pub sigma: String,
    /// Per-axis index of the level-n companion cell holding it.
    pub cell: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRd {
    pub steps: Vec<ChainStep>,
    #[serde(with = "rat::pair::vec")]
    pub translation: Vec<Rat>,
    /// Center of the last component box.
    #[serde(with = "rat::pair::vec")]
    pub witness_geometry: Vec<Rat>,
    /// Center of the last (translated) companion cell.
    #[serde(with = "rat::pair::vec")]
    pub witness_companion: Vec<Rat>,
    #[serde(with = "rat::pair")]
    pub level_length: Rat,
    /// d * level_length^2, the squared cell diameter.
    #[serde(with = "rat::pair")]
    pub bound_sq: Rat,
    /// Rational upper bound on the cell diameter.
    #[serde(with = "rat::pair")]
    pub bound: Rat,
}

pub fn find_chain_rd(cert: &UndCertificate, comp: &ProductCompanion, n: usize) -> Result<ChainRd, ContainmentRdError> {
    find_chain_rd_at(cert, comp, n, &vec![Rat::zero(); comp.dim])
}

/// Chain against the companion translated by `t`.
pub fn find_chain_rd_at(
    cert: &UndCertificate,
    comp: &ProductCompanion,
    n: usize,
    t: &[Rat],
) -> Result<ChainRd, ContainmentRdError> {
    let d = comp.dim;
    if cert.dim != d || t.len() != d {
        return Err(ContainmentRdError::DimensionMismatch(format!(
            "certificate {}, companion {d}, translation {}",
            cert.dim,
            t.len()
        )));
    }
    let depth = (cert.depth as usize).min(comp.depth());
    if n == 0 || n > depth {
        return Err(ContainmentRdError::DepthTooLarge { n, depth });
    }
    let neg: Vec<Rat> = t.iter().map(|x| -x).collect();
    // work in companion coordinates: move the geometry by -t
    if !comp.hull_box().contains(&cert.hull.translate(&neg)) {
        return Err(ContainmentRdError::HullNotContained);
    }
    let hull = comp.base.hull();
    let mut cell: Vec<Interval1> = vec![hull.clone(); d];
    let mut idx = vec![0u64; d];
    let mut node = &cert.root;
    let mut steps = Vec::with_capacity(n);
    let mut last = None;
    for level in 0..n {
        let halves: Vec<(Interval1, Interval1)> =
            (0..d).map(|j| comp.base.split(level, idx[j], &cell[j])).collect();
        let mut pick = None;
        for (p, sel) in node.selected.iter().enumerate() {
            let b = sel.hull().translate(&neg);
            let side: Option<Vec<bool>> = (0..d)
                .map(|j| {
                    let a = Interval1::new(b.lo[j].clone(), b.hi[j].clone());
                    if halves[j].0.contains(&a) {
                        Some(false)
                    } else if halves[j].1.contains(&a) {
                        Some(true)
                    } else {
                        None
                    }
                })
                .collect();
            if let Some(bits) = side {
                pick = Some((p, bits, b));
                break;
            }
        }
        let (p, bits, b) = pick.ok_or(ContainmentRdError::SlitBlocked(level + 1))?;
        for j in 0..d {
            idx[j] = 2 * idx[j] + bits[j] as u64;
            cell[j] = if bits[j] { halves[j].1.clone() } else { halves[j].0.clone() };
        }
        steps.push(ChainStep { sigma: node.selected[p].node.clone(), cell: idx.clone() });
        last = Some(b);
        if level + 1 < n {
            node = node.children.get(p).ok_or_else(|| {
                ContainmentRdError::InvalidCertificate(format!("node {} lacks child {p}", node.node))
            })?;
        }
    }
    let b = last.expect("n >= 1");
    let witness_geometry = b.center().iter().zip(t).map(|(c, s)| c + s).collect();
    let witness_companion = cell.iter().zip(t).map(|(iv, s)| iv.mid() + s).collect();
    let level_length = cell[0].len();
    let bound_sq = &level_length * &level_length * int(d as i64);
    let bound = rat::sqrt_bounds(&bound_sq, 64).1;
    Ok(ChainRd { steps, translation: t.to_vec(), witness_geometry, witness_companion, level_length, bound_sq, bound })
}

/// Translations t with cert_hull inside companion hull + t.
pub fn certify_sum_interior_rd(
    cert: &UndCertificate,
    comp: &ProductCompanion,
    n: usize,
) -> Result<BoxD, ContainmentRdError> {
    if cert.dim != comp.dim {
        return Err(ContainmentRdError::DimensionMismatch(format!("certificate {}, companion {}", cert.dim, comp.dim)));
    }
    let h = comp.base.hull();
    let c = &cert.hull;
    for j in 0..comp.dim {
        if !(h.lo < c.lo[j] && c.hi[j] < h.hi) {
            return Err(ContainmentRdError::NoMargin(j + 1));
        }
    }
    let out = BoxD::new(
        c.hi.iter().map(|x| x - &h.hi).collect(),
        c.lo.iter().map(|x| x - &h.lo).collect(),
    );
    // the corners are the tightest placements
    for corner in corners(&out) {
        find_chain_rd_at(cert, comp, n, &corner)?;
    }
    Ok(out)
}

fn corners(b: &BoxD) -> Vec<Vec<Rat>> {
    let d = b.dim();
    (0..1u64 << d)
        .map(|m| (0..d).map(|j| if m >> j & 1 == 1 { b.hi[j].clone() } else { b.lo[j].clone() }).collect())
        .collect()
}

/// Regular grid with `count` points per axis over `b`, row-major with axis 0 slowest.
pub fn box_grid(b: &BoxD, count: usize) -> Vec<Vec<Rat>> {
    let axes: Vec<Vec<Rat>> =
        (0..b.dim()).map(|j| crate::containment1d::grid(&b.lo[j], &b.hi[j], count)).collect();
    let mut out: Vec<Vec<Rat>> = vec![Vec::new()];
    for ax in &axes {
        out = out
            .iter()
            .flat_map(|p| {
                ax.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
    }
    out
}

/// Chains for every translation in `ts`, in input order.
pub fn chain_grid(
    cert: &UndCertificate,
    comp: &ProductCompanion,
    n: usize,
    ts: &[Vec<Rat>],
) -> Vec<Result<ChainRd, ContainmentRdError>> {
    ts.par_iter().map(|t| find_chain_rd_at(cert, comp, n, t)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionLevel {
    pub level: u32,
    #[serde(with = "rat::pair")]
    pub a: Rat,
    #[serde(with = "rat::pair")]
    pub b: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionReport {
    #[serde(with = "rat::pair")]
    pub lambda: Rat,
    pub levels: Vec<ContractionLevel>,
    pub holds: bool,
}

/// Separations b_n(g) of the images under `g` against lambda * a_n, where
/// lambda = 1 - 2 (1 + kappa (d - 1)) delta.
///
/// `g` must satisfy |J_jj| >= 1 - 2 delta and |J_jk| <= 2 delta off the diagonal.
pub fn contraction_check(
    cert: &UndCertificate,
    g: &AffineMap,
    delta: &Rat,
) -> Result<ContractionReport, ContainmentRdError> {
    let d = cert.dim;
    if g.dim() != d {
        return Err(ContainmentRdError::DimensionMismatch(format!("certificate {d}, map {}", g.dim())));
    }
    let kappa = cert
        .kappa
        .as_ref()
        .ok_or_else(|| ContainmentRdError::InvalidCertificate("certificate carries no kappa".into()))?;
    let two_delta = delta * int(2);
    for (i, row) in g.matrix.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            let ok = if i == j { m.mig() >= Rat::one() - &two_delta } else { m.mag() <= two_delta };
            if !ok {
                return Err(ContainmentRdError::InvalidParameter(format!("entry ({i}, {j}) is outside the delta ball")));
            }
        }
    }
    let lambda = Rat::one() - &two_delta * (Rat::one() + kappa * int(d as i64 - 1));
    if !lambda.is_positive() {
        return Err(ContainmentRdError::InvalidParameter("delta too large: lambda <= 0".into()));
    }
    let seps = dk_sequence(cert)?;
    let mut levels = Vec::with_capacity(seps.len());
    for (t, a) in seps.d.iter().enumerate() {
        let mut b: Option<Rat> = None;
        for node in cert.nodes_at(t as u32) {
            let images: Vec<Vec<Vec<(Rat, Rat)>>> = node
                .selected
                .iter()
                .map(|c| {
                    let mut per_axis = vec![Vec::new(); d];
                    for cell in &c.cells {
                        let im: Vec<RatInterval> = g.apply_box(&cell.img.lo, &cell.img.hi);
                        for (j, iv) in im.into_iter().enumerate() {
                            per_axis[j].push((iv.lo, iv.hi));
                        }
                    }
                    per_axis
                })
                .collect();
            for p in &node.pairs {
                let dm = (0..d)
                    .map(|j| union_gap(&images[p.i][j], &images[p.j][j]))
                    .min()
                    .expect("d >= 1");
                if b.as_ref().is_none_or(|x| &dm < x) {
                    b = Some(dm);
                }
            }
        }
        levels.push(ContractionLevel { level: t as u32 + 1, a: a.clone(), b: b.expect("pairs checked") });
    }
    let holds = levels.iter().all(|l| l.b >= &lambda * &l.a);
    Ok(ContractionReport { lambda, levels, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor1d::{middle_thirds, SymmetricSpec};
    use crate::containment1d::{build_companion, CompanionOptions};
    use crate::nested_rd::{und_certificate, CertOptions, Factor, GeometrySource, NestedRep, RepConfig};
    use crate::rat::{pow_int, rat};
    use std::sync::OnceLock;

    fn ninth(k: u32) -> Rat {
        Rat::one() / pow_int(&int(9), k)
    }

    fn mt_cert() -> &'static UndCertificate {
        static C: OnceLock<UndCertificate> = OnceLock::new();
        C.get_or_init(|| {
            let src = GeometrySource::product(vec![Factor::Tree(middle_thirds(6)), Factor::Tree(middle_thirds(6))]);
            let cfg = RepConfig { start_level: 2, leaf_level: 12, refine_step: 2, ..RepConfig::default() };
            let mut rep = NestedRep::build(&src, cfg).unwrap();
            und_certificate(&mut rep, &CertOptions { kappa: Some(int(9)), max_k: 2, depth: 3 }).unwrap()
        })
    }

    fn unit_hull(d: usize) -> BoxD {
        BoxD::new(vec![Rat::zero(); d], vec![Rat::one(); d])
    }

    #[test]
    fn dk_matches_ninth_powers() {
        let s = dk_sequence(mt_cert()).unwrap();
        assert_eq!(s.len(), 3);
        let slack = Rat::one() - rat::pow2(-30);
        for (k, d) in s.d.iter().enumerate() {
            let e = ninth(k as u32 + 1);
            assert!(d <= &e && d >= &(&e * &slack), "d_{} = {d}", k + 1);
        }
    }

    #[test]
    fn dk_single_level_and_zero_entry() {
        let mut c = mt_cert().clone();
        c.depth = 1;
        c.root.children.clear();
        assert_eq!(dk_sequence(&c).unwrap().len(), 1);
        let mut bad = mt_cert().clone();
        bad.root.children[1].pairs[0].d_min = Rat::zero();
        assert!(matches!(dk_sequence(&bad), Err(ContainmentRdError::InvalidCertificate(_))));
    }

    #[test]
    fn companion_uses_half_separations() {
        let seps = SeparationSequence { d: (1..=6).map(ninth).collect() };
        let c = build_product_companion(&unit_hull(2), &seps, &rat(1, 2), &Rat::zero()).unwrap();
        assert_eq!(c.base.hull(), &Interval1::of((0, 1), (1, 1)));
        assert!(c.capped.is_empty());
        for (k, g) in c.gaps().iter().enumerate() {
            assert_eq!(g, &(ninth(k as u32 + 1) / int(2)));
        }
    }

    #[test]
    fn companion_caps_constant_separations() {
        let seps = SeparationSequence { d: vec![rat(1, 4); 6] };
        let c = build_product_companion(&unit_hull(2), &seps, &rat(1, 2), &Rat::zero()).unwrap();
        let g = c.gaps();
        assert_eq!(&g[..3], &[rat(1, 8), rat(1, 8), rat(1, 8)]);
        // level lengths 1, 7/16, 5/32, 1/64: the fourth gap no longer fits
        assert_eq!(c.level_length(3), rat(1, 64));
        assert_eq!(g[3], rat(1, 128));
        assert_eq!(c.capped[0], 3);
        for (gk, dk) in g.iter().zip(&seps.d) {
            assert!(gk < dk);
        }
    }

    #[test]
    fn one_dimensional_companion_is_a_symmetric_tree() {
        let k = middle_thirds(8);
        let seps = SeparationSequence { d: (0..8).map(|n| k.min_gap(n).unwrap()).collect() };
        let h = BoxD::new(vec![Rat::zero()], vec![Rat::one()]);
        let c = build_product_companion(&h, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        let one = build_companion(&k, 8, &CompanionOptions::default()).unwrap();
        assert_eq!(c.base, one);
        assert_eq!(c.dim, 1);
    }

    #[test]
    fn companion_rejects_bad_parameters() {
        let seps = SeparationSequence { d: vec![rat(1, 9)] };
        for s in [Rat::zero(), Rat::one(), int(2)] {
            assert!(build_product_companion(&unit_hull(2), &seps, &s, &Rat::zero()).is_err());
        }
        let zero = SeparationSequence { d: vec![Rat::zero()] };
        assert!(build_product_companion(&unit_hull(2), &zero, &rat(1, 2), &Rat::zero()).is_err());
    }

    #[test]
    fn first_chain_step_exists() {
        let cert = mt_cert();
        let seps = dk_sequence(cert).unwrap();
        let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        assert_eq!(comp.gaps()[0], seps.d[0].clone() / int(2));
        let chain = find_chain_rd(cert, &comp, 1).unwrap();
        assert_eq!(chain.steps.len(), 1);
        let full = find_chain_rd(cert, &comp, 3).unwrap();
        let l = comp.level_length(3);
        assert_eq!(full.level_length, l);
        assert_eq!(full.bound_sq, &l * &l * int(2));
        assert!(&full.bound * &full.bound >= full.bound_sq);
    }

    #[test]
    fn witnesses_sit_in_the_last_cell() {
        let cert = mt_cert();
        let seps = dk_sequence(cert).unwrap();
        let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        let t = vec![rat(1, 20), rat(-1, 30)];
        let ch = find_chain_rd_at(cert, &comp, 3, &t).unwrap();
        let last = ch.steps.last().unwrap();
        let cell = comp.cell(3, &last.cell).unwrap().translate(&t);
        assert!(cell.contains_point(&ch.witness_geometry));
        assert!(cell.contains_point(&ch.witness_companion));
        let dist: Rat = (0..2)
            .map(|j| {
                let x = &ch.witness_geometry[j] - &ch.witness_companion[j];
                &x * &x
            })
            .sum();
        assert!(dist <= ch.bound_sq);
    }

    #[test]
    fn wide_first_gap_blocks_the_chain() {
        let cert = mt_cert();
        let hull = Interval1::new(rat(-1, 10), rat(11, 10));
        let base = cantor1d::build_symmetric(&SymmetricSpec { hull, gaps: vec![rat(11, 10), rat(1, 1000)] }).unwrap();
        let comp = ProductCompanion { dim: 2, base, capped: vec![] };
        assert_eq!(find_chain_rd(cert, &comp, 1), Err(ContainmentRdError::SlitBlocked(1)));
    }

    #[test]
    fn interior_box_examples() {
        let cert = mt_cert();
        let seps = dk_sequence(cert).unwrap();
        let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        let tiny = rat::pow2(-60);
        let b = certify_sum_interior_rd(cert, &comp, 3).unwrap();
        for j in 0..2 {
            assert!((&b.lo[j] + rat(1, 10)).abs() <= tiny && (&b.hi[j] - rat(1, 10)).abs() <= tiny);
        }
        // asymmetric hull [-0.2, 1.1]
        let mut exact = cert.clone();
        exact.hull = unit_hull(2);
        let mut wide = comp.clone();
        let gaps = comp.gaps().to_vec();
        wide.base = cantor1d::build_symmetric(&SymmetricSpec { hull: Interval1::new(rat(-1, 5), rat(11, 10)), gaps }).unwrap();
        let b = certify_sum_interior_rd(&exact, &wide, 3).unwrap();
        assert_eq!(b, BoxD::new(vec![rat(-1, 10); 2], vec![rat(1, 5); 2]));
        let mut flush = exact.clone();
        flush.hull = BoxD::new(vec![Rat::zero(), rat(-1, 5)], vec![Rat::one(), Rat::one()]);
        assert_eq!(certify_sum_interior_rd(&flush, &wide, 3), Err(ContainmentRdError::NoMargin(2)));
    }

    #[test]
    fn hull_outside_companion_is_rejected() {
        let cert = mt_cert();
        let seps = dk_sequence(cert).unwrap();
        let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        let t = vec![rat(1, 5), Rat::zero()];
        assert_eq!(find_chain_rd_at(cert, &comp, 2, &t), Err(ContainmentRdError::HullNotContained));
    }

    #[test]
    fn identity_map_keeps_separations() {
        let cert = mt_cert();
        let r = contraction_check(cert, &AffineMap::identity(2), &rat(1, 100)).unwrap();
        assert_eq!(r.lambda, rat(4, 5));
        assert!(r.holds);
        for l in &r.levels {
            assert_eq!(l.a, l.b);
        }
        let wild = AffineMap::from_exact(vec![vec![int(1), rat(1, 2)], vec![Rat::zero(), int(1)]], vec![Rat::zero(); 2]).unwrap();
        assert!(contraction_check(cert, &wild, &rat(1, 100)).is_err());
    }

    #[test]
    fn companion_json_round_trip() {
        let seps = SeparationSequence { d: vec![rat(1, 4); 5] };
        let c = build_product_companion(&unit_hull(2), &seps, &rat(1, 2), &rat(1, 10)).unwrap();
        let back: ProductCompanion = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn emitted_gaps_stay_below_separations(
                ds in proptest::collection::vec((1i64..200, 1i64..2000), 1..12),
                s in 1i64..10,
                m in 0i64..5,
            ) {
                let seps = SeparationSequence { d: ds.iter().map(|&(a, b)| rat(a, a + b)).collect() };
                let c = build_product_companion(&unit_hull(3), &seps, &rat(s, 10), &rat(m, 10)).unwrap();
                for (g, d) in c.gaps().iter().zip(&seps.d) {
                    prop_assert!(g < d);
                }
            }

            #[test]
            fn chain_bound_decays(ds in proptest::collection::vec(1i64..50, 2..10), d in 1usize..4) {
                let seps = SeparationSequence { d: ds.iter().map(|&a| rat(1, a * 3)).collect() };
                let hull = BoxD::new(vec![Rat::zero(); d], vec![Rat::one(); d]);
                let c = build_product_companion(&hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
                let full = &c.base.hull().len();
                for n in 1..=seps.len() {
                    let l = c.level_length(n);
                    prop_assert!(l < c.level_length(n - 1));
                    prop_assert!(l <= full * rat::pow2(-(n as i64)));
                }
            }
        }
    }
}
