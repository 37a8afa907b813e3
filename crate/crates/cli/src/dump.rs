//! CSV geometry dumps from reports or tree files.

use cantor_core::cantor1d::{build_symmetric, intervals_csv, GapTree, SymmetricSpec};
use cantor_core::nested_rd::BoxD;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    CsvIntervals,
    CsvBoxes,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DumpError {
    #[error("{wanted} requested, but the input holds {found}")]
    KindMismatch { wanted: &'static str, found: &'static str },
    #[error("level {level} is not available (deepest is {depth})")]
    Level { level: usize, depth: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Where reports keep their 1-D trees, in lookup order.
const TREE_PATHS: [&[&str]; 4] = [
    &["results", "companion"],
    &["results", "report", "k2"],
    &["results", "report", "obstruction", "companion"],
    &["tree"],
];

#[derive(Deserialize)]
struct BoxRow {
    level: u32,
    node: String,
    #[serde(rename = "box")]
    bx: BoxD,
}

enum Geometry {
    Tree(GapTree),
    Boxes(Vec<BoxRow>),
}

fn at<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(v, |cur, k| cur.get(k))
}

fn find(v: &Value) -> Option<Geometry> {
    let as_tree = |x: &Value| {
        serde_json::from_value::<GapTree>(x.clone()).ok().or_else(|| {
            let spec = serde_json::from_value::<SymmetricSpec>(x.clone()).ok()?;
            build_symmetric(&spec).ok()
        })
    };
    if let Some(t) = as_tree(v) {
        return Some(Geometry::Tree(t));
    }
    if let Some(b) = at(v, &["results", "boxes"]) {
        if let Ok(rows) = serde_json::from_value::<Vec<BoxRow>>(b.clone()) {
            return Some(Geometry::Boxes(rows));
        }
    }
    TREE_PATHS.iter().find_map(|p| at(v, p).and_then(as_tree)).map(Geometry::Tree)
}

fn pair(r: &cantor_core::Rat) -> String {
    format!("{},{}", r.numer(), r.denom())
}

/// CSV text for `input` (a report or a tree), optionally at one level.
pub fn emit(input: &Value, format: Format, level: Option<usize>) -> Result<String, DumpError> {
    let geo = find(input).ok_or_else(|| DumpError::Malformed("no tree or box geometry found".into()))?;
    match (format, geo) {
        (Format::CsvIntervals, Geometry::Tree(t)) => {
            let n = level.unwrap_or(t.depth());
            if n > t.depth() {
                return Err(DumpError::Level { level: n, depth: t.depth() });
            }
            intervals_csv(&t, n).map_err(|e| DumpError::Malformed(e.to_string()))
        }
        (Format::CsvBoxes, Geometry::Boxes(rows)) => {
            let deepest = rows.iter().map(|r| r.level as usize).max().unwrap_or(0);
            let n = level.unwrap_or(deepest);
            let mut keep: Vec<&BoxRow> = rows.iter().filter(|r| r.level as usize == n).collect();
            if keep.is_empty() {
                return Err(DumpError::Level { level: n, depth: deepest });
            }
            keep.sort_by(|a, b| a.node.cmp(&b.node));
            let d = keep[0].bx.dim();
            let mut out = String::from("level,node");
            for j in 1..=d {
                out.push_str(&format!(",x{j}_lo_num,x{j}_lo_den,x{j}_hi_num,x{j}_hi_den"));
            }
            out.push('\n');
            for r in keep {
                out.push_str(&format!("{},{}", r.level, r.node));
                for j in 0..d {
                    out.push_str(&format!(",{},{}", pair(&r.bx.lo[j]), pair(&r.bx.hi[j])));
                }
                out.push('\n');
            }
            Ok(out)
        }
        (Format::CsvIntervals, Geometry::Boxes(_)) => {
            Err(DumpError::KindMismatch { wanted: "csv-intervals", found: "boxes in R^d" })
        }
        (Format::CsvBoxes, Geometry::Tree(_)) => Err(DumpError::KindMismatch { wanted: "csv-boxes", found: "a 1-D tree" }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cantor_core::cantor1d::middle_thirds;

    #[test]
    fn tree_rows() {
        let v = serde_json::to_value(middle_thirds(3)).unwrap();
        let csv = emit(&v, Format::CsvIntervals, Some(2)).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0], "addr,lo_num,lo_den,hi_num,hi_den");
        assert_eq!(rows[1], "00,0,1,1,9");
        assert!(matches!(emit(&v, Format::CsvBoxes, None), Err(DumpError::KindMismatch { .. })));
        assert!(matches!(emit(&v, Format::CsvIntervals, Some(4)), Err(DumpError::Level { .. })));
    }

    #[test]
    fn tree_inside_report() {
        let v = serde_json::json!({"results": {"companion": serde_json::to_value(middle_thirds(2)).unwrap()}});
        assert_eq!(emit(&v, Format::CsvIntervals, None).unwrap().lines().count(), 5);
        assert!(emit(&serde_json::json!({"results": {}}), Format::CsvIntervals, None).is_err());
    }
}
