//! Geometry fed into the nested representation.

use super::NestedError;
use crate::cantor1d::GapTree;
use crate::interval::RatInterval;
use crate::rat::{self, Rat};
use num::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug)]
pub enum Factor {
    Tree(GapTree),
    Point(Rat),
}

impl Factor {
    pub fn hull(&self) -> (Rat, Rat) {
        match self {
            Factor::Tree(t) => (t.hull().lo.clone(), t.hull().hi.clone()),
            Factor::Point(p) => (p.clone(), p.clone()),
        }
    }

    /// Finest intervals: the leaves of a tree, or the point itself.
    pub fn leaves(&self) -> Vec<(Rat, Rat)> {
        match self {
            Factor::Tree(t) => t
                .level_intervals(t.depth())
                .expect("depth is a valid level")
                .into_iter()
                .map(|i| (i.lo, i.hi))
                .collect(),
            Factor::Point(p) => vec![(p.clone(), p.clone())],
        }
    }
}

/// x -> M x + t with interval matrix entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<RatInterval>>,
    pub translation: Vec<RatInterval>,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        let matrix = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| RatInterval::point(if i == j { Rat::one() } else { Rat::zero() }))
                    .collect()
            })
            .collect();
        AffineMap { matrix, translation: vec![RatInterval::point(Rat::zero()); d] }
    }

    pub fn from_exact(matrix: Vec<Vec<Rat>>, translation: Vec<Rat>) -> Result<Self, NestedError> {
        let d = translation.len();
        if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
            return Err(NestedError::DimensionMismatch(format!(
                "matrix must be {d}x{d} to match the translation"
            )));
        }
        let matrix = matrix.into_iter().map(|r| r.into_iter().map(RatInterval::point).collect()).collect();
        Ok(AffineMap { matrix, translation: translation.into_iter().map(RatInterval::point).collect() })
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn is_identity(&self) -> bool {
        *self == AffineMap::identity(self.dim())
    }

    /// Entry-wise product `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let d = self.dim();
        let mut matrix = vec![vec![RatInterval::from_i64(0); d]; d];
        for (i, row) in matrix.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc = RatInterval::from_i64(0);
                for k in 0..d {
                    acc = &acc + &(&self.matrix[i][k] * &inner.matrix[k][j]);
                }
                *cell = acc;
            }
        }
        let translation = self
            .apply_linear(&inner.translation)
            .into_iter()
            .zip(&self.translation)
            .map(|(a, b)| &a + b)
            .collect();
        AffineMap { matrix, translation }
    }

    pub fn apply_point(&self, x: &[Rat]) -> Vec<RatInterval> {
        self.matrix
            .iter()
            .zip(&self.translation)
            .map(|(row, t)| {
                let mut acc = t.clone();
                for (m, xi) in row.iter().zip(x) {
                    acc = &acc + &(m * &RatInterval::point(xi.clone()));
                }
                acc
            })
            .collect()
    }

    /// Enclosure of the image of a box (exact interval arithmetic).
    pub fn apply_box(&self, lo: &[Rat], hi: &[Rat]) -> Vec<RatInterval> {
        let axes: Vec<RatInterval> = lo.iter().zip(hi).map(|(a, b)| RatInterval::new(a.clone(), b.clone())).collect();
        self.apply_linear(&axes)
            .into_iter()
            .zip(&self.translation)
            .map(|(v, t)| &v + t)
            .collect()
    }

    /// M u for an interval vector u, no translation.
    pub fn apply_linear(&self, u: &[RatInterval]) -> Vec<RatInterval> {
        self.matrix
            .iter()
            .map(|row| {
                let mut acc = RatInterval::from_i64(0);
                for (m, ui) in row.iter().zip(u) {
                    acc = &acc + &(m * ui);
                }
                acc
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry(#[serde(with = "rat::pair")] Rat, #[serde(with = "rat::pair")] Rat);

#[derive(Serialize, Deserialize)]
struct MapRepr {
    matrix: Vec<Vec<Entry>>,
    translation: Vec<Entry>,
}

fn entry(e: &RatInterval) -> Entry {
    Entry(e.lo.clone(), e.hi.clone())
}

fn parse_entry(e: &Entry) -> Result<RatInterval, String> {
    if e.0 > e.1 {
        return Err("interval entry with lo > hi".into());
    }
    Ok(RatInterval::new(e.0.clone(), e.1.clone()))
}

impl Serialize for AffineMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let matrix = self.matrix.iter().map(|r| r.iter().map(entry).collect()).collect();
        MapRepr { matrix, translation: self.translation.iter().map(entry).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = MapRepr::deserialize(d)?;
        let mut matrix = Vec::new();
        for row in &r.matrix {
            let out = row.iter().map(parse_entry).collect::<Result<Vec<_>, _>>();
            matrix.push(out.map_err(D::Error::custom)?);
        }
        let translation = r.translation.iter().map(parse_entry).collect::<Result<Vec<_>, _>>();
        Ok(AffineMap { matrix, translation: translation.map_err(D::Error::custom)? })
    }
}

/// Integer cube coordinates: the cube prod [k_j, k_j + 1] * 2^-level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeList {
    pub level: u32,
    pub cubes: Vec<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub enum GeometrySource {
    Product { factors: Vec<Factor>, map: Option<AffineMap> },
    Cubes(CubeList),
}

impl GeometrySource {
    pub fn product(factors: Vec<Factor>) -> Self {
        GeometrySource::Product { factors, map: None }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeometrySource::Product { factors, .. } => factors.len(),
            GeometrySource::Cubes(c) => c.cubes.first().map_or(0, |c| c.len()),
        }
    }

    pub fn validate(&self) -> Result<(), NestedError> {
        match self {
            GeometrySource::Product { factors, map } => {
                if factors.is_empty() {
                    return Err(NestedError::EmptyGeometry);
                }
                if let Some(m) = map {
                    if m.dim() != factors.len() || m.matrix.len() != m.dim() || m.matrix.iter().any(|r| r.len() != m.dim()) {
                        return Err(NestedError::DimensionMismatch(format!(
                            "map is {}-dimensional, geometry has {} factors",
                            m.dim(),
                            factors.len()
                        )));
                    }
                }
            }
            GeometrySource::Cubes(c) => {
                let d = self.dim();
                if c.cubes.is_empty() || d == 0 {
                    return Err(NestedError::EmptyGeometry);
                }
                if c.cubes.iter().any(|q| q.len() != d) {
                    return Err(NestedError::DimensionMismatch("cubes of mixed dimension".into()));
                }
            }
        }
        Ok(())
    }

    /// Compose a further linear map on the outside.
    pub fn with_map(&self, outer: &AffineMap) -> Result<GeometrySource, NestedError> {
        match self {
            GeometrySource::Product { factors, map } => {
                if outer.dim() != factors.len() {
                    return Err(NestedError::DimensionMismatch("map and geometry differ in dimension".into()));
                }
                let map = match map {
                    None => outer.clone(),
                    Some(m) => outer.compose(m),
                };
                Ok(GeometrySource::Product { factors: factors.clone(), map: Some(map) })
            }
            GeometrySource::Cubes(_) => Err(NestedError::DimensionMismatch(
                "cube lists cannot be transformed; give the geometry as a product".into(),
            )),
        }
    }
}
