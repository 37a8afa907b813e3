//! Geometry descriptions inside parameter blocks.

use crate::config::{parse, read_json, ConfigError};
use cantor_core::cantor1d::{build_binary_ifs, build_symmetric, middle_thirds, GapTree, Interval1, SymmetricSpec};
use cantor_core::nested_rd::{AffineMap, CubeList, Factor, GeometrySource, RepConfig};
use cantor_core::rat::{self, Rat};
use serde::Deserialize;
use serde_json::Value;
use std::path::Path;

/// A rational read from a JSON number, a "p/q" string or a [p, q] pair.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(transparent)]
pub struct Q(#[serde(deserialize_with = "rat::loose::deserialize")] pub Rat);

/// `count` points from lo to hi.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: Q,
    pub hi: Q,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> Vec<Rat> {
        cantor_core::containment1d::grid(&self.lo.0, &self.hi.0, self.count)
    }
}

pub fn interval(v: &[Q; 2], field: &str) -> Result<Interval1, ConfigError> {
    if v[0].0 > v[1].0 {
        return Err(ConfigError::field(field, "lo exceeds hi"));
    }
    Ok(Interval1::new(v[0].0.clone(), v[1].0.clone()))
}

fn kind<'a>(v: &'a Value, field: &str) -> Result<&'a str, ConfigError> {
    v.get("kind").and_then(Value::as_str).ok_or_else(|| ConfigError::field(field, "needs a string `kind`"))
}

#[derive(Deserialize)]
struct Depth {
    depth: usize,
}

#[derive(Deserialize)]
struct Ifs {
    hull: [Q; 2],
    ratio: Q,
    depth: usize,
}

#[derive(Deserialize)]
struct Sym {
    hull: [Q; 2],
    gaps: Vec<Q>,
}

#[derive(Deserialize)]
struct FileRef {
    path: String,
}

#[derive(Deserialize)]
struct Inline {
    tree: GapTree,
}

#[derive(Deserialize)]
struct PointFactor {
    value: Q,
}

/// A 1-D tree: middle-thirds, binary-ifs, symmetric, file or inline.
pub fn tree(v: &Value, field: &str, base: &Path) -> Result<GapTree, ConfigError> {
    let bad = |e: cantor_core::cantor1d::TreeError| ConfigError::field(field, e);
    match kind(v, field)? {
        "middle-thirds" => Ok(middle_thirds(parse::<Depth>(v, field)?.depth)),
        "binary-ifs" => {
            let p: Ifs = parse(v, field)?;
            build_binary_ifs(&interval(&p.hull, field)?, &p.ratio.0, p.depth).map_err(bad)
        }
        "symmetric" => {
            let p: Sym = parse(v, field)?;
            let spec = SymmetricSpec { hull: interval(&p.hull, field)?, gaps: p.gaps.into_iter().map(|q| q.0).collect() };
            build_symmetric(&spec).map_err(bad)
        }
        "file" => {
            let p: FileRef = parse(v, field)?;
            let path = base.join(&p.path);
            parse(&read_json(&path)?, field)
        }
        "inline" => Ok(parse::<Inline>(v, field)?.tree),
        other => Err(ConfigError::field(field, format!("unknown tree kind {other:?}"))),
    }
}

fn factor(v: &Value, field: &str, base: &Path) -> Result<Factor, ConfigError> {
    if kind(v, field)? == "point" {
        return Ok(Factor::Point(parse::<PointFactor>(v, field)?.value.0));
    }
    tree(v, field, base).map(Factor::Tree)
}

#[derive(Deserialize)]
struct ProductSpec {
    factors: Vec<Value>,
    #[serde(default)]
    matrix: Option<Vec<Vec<Q>>>,
    #[serde(default)]
    translation: Option<Vec<Q>>,
}

#[derive(Deserialize)]
struct CubesSpec {
    level: u32,
    cubes: Vec<Vec<i64>>,
}

/// Product of factors, optionally under an affine map, or an explicit cube list.
pub fn geometry(v: &Value, field: &str, base: &Path) -> Result<GeometrySource, ConfigError> {
    match kind(v, field)? {
        k @ ("product" | "affine") => {
            let p: ProductSpec = parse(v, field)?;
            let factors = p
                .factors
                .iter()
                .enumerate()
                .map(|(i, f)| factor(f, &format!("{field}.factors[{i}]"), base))
                .collect::<Result<Vec<_>, _>>()?;
            let d = factors.len();
            let map = match (p.matrix, p.translation) {
                (None, None) if k == "product" => None,
                (None, _) => return Err(ConfigError::field(field, "an affine geometry needs a matrix")),
                (Some(m), t) => {
                    let m: Vec<Vec<Rat>> = m.into_iter().map(|r| r.into_iter().map(|q| q.0).collect()).collect();
                    let t: Vec<Rat> = match t {
                        Some(t) => t.into_iter().map(|q| q.0).collect(),
                        None => vec![Rat::from_integer(0.into()); d],
                    };
                    Some(AffineMap::from_exact(m, t).map_err(|e| ConfigError::field(field, e))?)
                }
            };
            let src = GeometrySource::Product { factors, map };
            src.validate().map_err(|e| ConfigError::field(field, e))?;
            Ok(src)
        }
        "cubes" => {
            let p: CubesSpec = parse(v, field)?;
            let src = GeometrySource::Cubes(CubeList { level: p.level, cubes: p.cubes });
            src.validate().map_err(|e| ConfigError::field(field, e))?;
            Ok(src)
        }
        other => Err(ConfigError::field(field, format!("unknown geometry kind {other:?}"))),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepParams {
    #[serde(default = "two")]
    pub start_level: u32,
    #[serde(default = "twelve")]
    pub leaf_level: u32,
    #[serde(default = "two")]
    pub refine_step: u32,
    #[serde(default)]
    pub min_separation: Option<Q>,
    #[serde(default)]
    pub max_cells: Option<usize>,
}

fn two() -> u32 {
    2
}
fn twelve() -> u32 {
    12
}

impl Default for RepParams {
    fn default() -> Self {
        RepParams { start_level: 2, leaf_level: 12, refine_step: 2, min_separation: None, max_cells: None }
    }
}

impl RepParams {
    pub fn config(&self, bits: u32) -> RepConfig {
        let d = RepConfig::default();
        RepConfig {
            start_level: self.start_level,
            leaf_level: self.leaf_level,
            refine_step: self.refine_step,
            precision_bits: bits,
            min_separation: self.min_separation.clone().map_or(d.min_separation, |q| q.0),
            max_cells: self.max_cells.unwrap_or(d.max_cells),
        }
    }
}
