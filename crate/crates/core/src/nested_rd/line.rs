//! One axis of a product geometry, expanded lazily one generation at a time.

use super::source::Factor;
use crate::cantor1d::Interval1;
use crate::rat::{self, Rat};

#[derive(Clone, Debug)]
struct Cell {
    level: usize,
    index: u64,
    iv: Interval1,
}

#[derive(Clone, Debug)]
pub(crate) struct LineNode {
    pub gen: u32,
    /// Exact ends; only the rounded ones feed the search.
    #[allow(dead_code)]
    pub lo: Rat,
    #[allow(dead_code)]
    pub hi: Rat,
    /// Outward roundings of lo and hi.
    pub lo_r: Rat,
    pub hi_r: Rat,
    /// lo_r and hi_r times 2^bits, when that fits.
    pub scaled: Option<(i128, i128)>,
    cells: Vec<Cell>,
    children: Option<Vec<u32>>,
}

#[derive(Clone, Debug)]
pub(crate) struct LineRep {
    factor: Factor,
    bits: u32,
    nodes: Vec<LineNode>,
}

impl LineRep {
    pub fn new(factor: Factor, bits: u32) -> Self {
        let (lo, hi) = factor.hull();
        let root = LineNode {
            gen: 0,
            scaled: scaled(&lo, &hi, bits),
            lo_r: rat::floor_bits(&lo, bits),
            hi_r: rat::ceil_bits(&hi, bits),
            lo: lo.clone(),
            hi: hi.clone(),
            cells: vec![Cell { level: 0, index: 0, iv: Interval1 { lo, hi } }],
            children: None,
        };
        LineRep { factor, bits, nodes: vec![root] }
    }

    pub fn node(&self, id: u32) -> &LineNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn cached_children(&self, id: u32) -> Option<&[u32]> {
        self.nodes[id as usize].children.as_deref()
    }

    fn is_leaf(&self, c: &Cell) -> bool {
        match &self.factor {
            Factor::Tree(t) => c.level >= t.depth(),
            Factor::Point(_) => true,
        }
    }

    /// Components of the level-`m` cover inside node `id`.
    pub fn children(&mut self, id: u32, m: u32) -> &[u32] {
        if self.nodes[id as usize].children.is_none() {
            let cells = std::mem::take(&mut self.nodes[id as usize].cells);
            let gen = self.nodes[id as usize].gen + 1;
            let mut fine = Vec::new();
            let mut stack: Vec<Cell> = cells.into_iter().rev().collect();
            while let Some(c) = stack.pop() {
                if !self.is_leaf(&c) && longer_than_pow2(&c.iv.len(), m) {
                    let Factor::Tree(t) = &self.factor else { unreachable!() };
                    let (a, b) = t.split(c.level, c.index, &c.iv);
                    stack.push(Cell { level: c.level + 1, index: 2 * c.index + 1, iv: b });
                    stack.push(Cell { level: c.level + 1, index: 2 * c.index, iv: a });
                } else {
                    fine.push(c);
                }
            }
            let mut groups: Vec<Vec<Cell>> = Vec::new();
            let mut reach = None;
            for c in fine {
                let first = rat::ceil_scaled(&c.iv.lo, m) - 1;
                let last = rat::floor_scaled(&c.iv.hi, m);
                match &reach {
                    Some(r) if first <= r + 1 => {
                        groups.last_mut().expect("open group").push(c);
                        if &last > r {
                            reach = Some(last);
                        }
                    }
                    _ => {
                        groups.push(vec![c]);
                        reach = Some(last);
                    }
                }
            }
            let mut ids = Vec::with_capacity(groups.len());
            for g in groups {
                let lo = g[0].iv.lo.clone();
                let hi = g.iter().map(|c| &c.iv.hi).max().expect("non-empty group").clone();
                ids.push(self.nodes.len() as u32);
                let (lo_r, hi_r) = (rat::floor_bits(&lo, self.bits), rat::ceil_bits(&hi, self.bits));
                let sc = scaled(&lo, &hi, self.bits);
                self.nodes.push(LineNode { gen, lo, hi, lo_r, hi_r, scaled: sc, cells: g, children: None });
            }
            self.nodes[id as usize].children = Some(ids);
        }
        self.nodes[id as usize].children.as_deref().expect("just computed")
    }
}

/// x > 2^-m
fn longer_than_pow2(x: &Rat, m: u32) -> bool {
    (x.numer() << m as usize) > *x.denom()
}

fn scaled(lo: &Rat, hi: &Rat, bits: u32) -> Option<(i128, i128)> {
    use num::ToPrimitive;
    let a = rat::floor_scaled(lo, bits).to_i128()?;
    let b = rat::ceil_scaled(hi, bits).to_i128()?;
    // headroom for differences and small products
    const LIM: i128 = 1 << 100;
    (a.abs() < LIM && b.abs() < LIM).then_some((a, b))
}
