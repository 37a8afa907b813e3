//! The named pipelines. Parameter problems are `ConfigError`s; failures of the
//! underlying computation end up in `Outcome::error` next to partial results.

use crate::config::{parse, ConfigError, Scenario};
use crate::specs::{self, interval, Range, RepParams, Q};
use cantor_core::applications::{erdos_obstruction, pinned_distance_demo, DistanceDemoConfig};
use cantor_core::cantor1d::{affine_image, GapTree, SymmetricSpec};
use cantor_core::containment1d::{
    build_companion, certify_difference_interior, check_dominance, find_chain, robustness_sweep, CompanionOptions,
    PerturbationSpec,
};
use cantor_core::containment_rd::{
    box_grid, build_product_companion, certify_sum_interior_rd, chain_grid, dk_sequence, find_chain_rd,
};
use cantor_core::nested_rd::{
    rotation_search, und_certificate, verify_certificate, BoxD, CertOptions, GeometrySource, NestedRep, RotationMatrix,
    UndCertificate,
};
use cantor_core::rat::{self, Rat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::Path;

pub struct Ctx<'a> {
    pub seed: u64,
    pub bits: u32,
    pub base: &'a Path,
}

#[derive(Debug)]
pub struct Outcome {
    pub results: Value,
    pub error: Option<String>,
}

struct Acc {
    map: Map<String, Value>,
}

impl Acc {
    fn new() -> Self {
        Acc { map: Map::new() }
    }

    fn put<T: Serialize>(&mut self, key: &str, v: &T) {
        self.map.insert(key.into(), serde_json::to_value(v).expect("report values serialize"));
    }

    fn done(self) -> Outcome {
        Outcome { results: Value::Object(self.map), error: None }
    }

    fn fail(self, e: impl ToString) -> Outcome {
        Outcome { results: Value::Object(self.map), error: Some(e.to_string()) }
    }
}

/// Unwrap a computation step or finish the pipeline with its error.
macro_rules! step {
    ($acc:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Ok($acc.fail(err)),
        }
    };
}

fn tenth() -> Q {
    Q(rat::rat(1, 10))
}
fn half() -> Q {
    Q(rat::rat(1, 2))
}
fn yes() -> bool {
    true
}

pub fn run(s: &Scenario, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    match s.pipeline.as_str() {
        "companion-1d" => companion_1d(&s.params, ctx),
        "interior-1d" => interior_1d(&s.params, ctx),
        "sweep-1d" => sweep_1d(&s.params, ctx),
        "nondegeneracy" => nondegeneracy(&s.params, ctx),
        "rotate-fix" => rotate_fix(&s.params, ctx),
        "companion-rd" => companion_rd(&s.params, ctx, false),
        "interior-rd" => companion_rd(&s.params, ctx, true),
        "distance-demo" => distance_demo(&s.params),
        "erdos-demo" => erdos_demo(&s.params, ctx),
        other => Err(ConfigError::field("pipeline", format!("unknown pipeline {other:?}"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    k: Value,
    #[serde(default)]
    kt: Option<Value>,
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default = "tenth")]
    margin: Q,
    #[serde(default = "half")]
    factor: Q,
    #[serde(default = "yes")]
    cap: bool,
    #[serde(default)]
    grid_count: Option<usize>,
    #[serde(default)]
    lambda: Option<Range>,
    #[serde(default)]
    t: Option<Range>,
}

struct LinePair {
    k: GapTree,
    kt: Result<GapTree, String>,
    n: usize,
}

fn line_pair(p: &Line, ctx: &Ctx) -> Result<LinePair, ConfigError> {
    let k = specs::tree(&p.k, "params.k", ctx.base)?;
    let n = p.depth.unwrap_or(k.depth());
    if n == 0 || n > k.depth() {
        return Err(ConfigError::field("params.depth", format!("must lie in 1..={}", k.depth())));
    }
    let kt = match &p.kt {
        Some(v) => Ok(specs::tree(v, "params.kt", ctx.base)?),
        None => {
            let opts = CompanionOptions { margin: p.margin.0.clone(), factor: p.factor.0.clone(), cap: p.cap };
            build_companion(&k, n, &opts).map_err(|e| e.to_string())
        }
    };
    Ok(LinePair { k, kt, n })
}

/// Symmetric trees go out as hull plus per-level gaps; a depth-20 gap list runs to hundreds of MB.
fn compact(t: &GapTree) -> Value {
    match t.symmetric_gaps() {
        Some(g) => serde_json::to_value(SymmetricSpec { hull: t.hull().clone(), gaps: g.to_vec() })
            .expect("spec serializes"),
        None => serde_json::to_value(t).expect("tree serializes"),
    }
}

fn companion_1d(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let p: Line = parse(v, "params")?;
    let LinePair { k, kt, n } = line_pair(&p, ctx)?;
    let mut acc = Acc::new();
    let kt = step!(acc, kt);
    acc.put("companion", &compact(&kt));
    let dom = step!(acc, check_dominance(&k, &kt, n));
    acc.put("dominance", &dom);
    let chain = step!(acc, find_chain(&k, &kt, n));
    acc.put("chain", &chain);
    let interior = step!(acc, certify_difference_interior(&k, &kt, n));
    acc.put("interior", &interior);
    Ok(acc.done())
}

fn interior_1d(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let p: Line = parse(v, "params")?;
    let count = p.grid_count.unwrap_or(1001);
    let LinePair { k, kt, n } = line_pair(&p, ctx)?;
    let mut acc = Acc::new();
    let kt = step!(acc, kt);
    let interior = step!(acc, certify_difference_interior(&k, &kt, n));
    acc.put("interior", &interior);
    let ts = cantor_core::containment1d::grid(&interior.lo, &interior.hi, count);
    use rayon::prelude::*;
    let res: Vec<Result<Rat, String>> = ts
        .par_iter()
        .map(|t| {
            let moved = affine_image(&kt, &Rat::from_integer(1.into()), t).map_err(|e| e.to_string())?;
            find_chain(&k, &moved, n).map(|c| c.bound).map_err(|e| e.to_string())
        })
        .collect();
    let failures: Vec<Value> = ts
        .iter()
        .zip(&res)
        .filter_map(|(t, r)| r.as_ref().err().map(|e| json!({"t": rat::pair::to_value(t), "error": e})))
        .collect();
    let max_bound = res.iter().filter_map(|r| r.as_ref().ok()).max().cloned();
    acc.put("grid_count", &count);
    acc.put("verified", &(count - failures.len()));
    acc.put("max_bound", &max_bound.map(|b| rat::pair::to_value(&b)));
    let nfail = failures.len();
    acc.put("failures", &failures);
    if nfail > 0 {
        return Ok(acc.fail(format!("{nfail} grid translations without a chain")));
    }
    Ok(acc.done())
}

fn sweep_1d(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let p: Line = parse(v, "params")?;
    let (Some(l), Some(t)) = (&p.lambda, &p.t) else {
        return Err(ConfigError::field("params", "sweep-1d needs `lambda` and `t` ranges"));
    };
    let pert = PerturbationSpec {
        lambda_lo: l.lo.0.clone(),
        lambda_hi: l.hi.0.clone(),
        t_lo: t.lo.0.clone(),
        t_hi: t.hi.0.clone(),
        lambda_count: l.count,
        t_count: t.count,
    };
    let LinePair { k, kt, n } = line_pair(&p, ctx)?;
    let mut acc = Acc::new();
    let kt = step!(acc, kt);
    let sweep = step!(acc, robustness_sweep(&k, &kt, &pert, n));
    let passed = sweep.results.iter().filter(|r| r.ok).count();
    let total = sweep.results.len();
    acc.put("sweep", &sweep);
    acc.put("passed", &passed);
    if passed < total {
        return Ok(acc.fail(format!("{} of {total} perturbations without a chain", total - passed)));
    }
    Ok(acc.done())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rd {
    geometry: Value,
    #[serde(default)]
    rep: RepParams,
    #[serde(default)]
    kappa: Option<Q>,
    #[serde(default = "three")]
    max_k: u32,
    #[serde(default = "two")]
    depth: u32,
    #[serde(default = "box_gens")]
    box_generations: Vec<u32>,
    #[serde(default = "four")]
    random_candidates: usize,
    #[serde(default = "half")]
    shrink: Q,
    #[serde(default = "tenth")]
    margin: Q,
    #[serde(default = "twenty_one")]
    grid_count: usize,
}

fn two() -> u32 {
    2
}
fn three() -> u32 {
    3
}
fn four() -> usize {
    4
}
fn twenty_one() -> usize {
    21
}
fn box_gens() -> Vec<u32> {
    vec![1, 2]
}

const MAX_BOXES: usize = 4096;

#[derive(Serialize)]
struct BoxRow {
    gen: u32,
    level: u32,
    node: String,
    #[serde(rename = "box")]
    bx: BoxD,
}

fn rd_setup(v: &Value, ctx: &Ctx) -> Result<(Rd, GeometrySource, CertOptions), ConfigError> {
    let p: Rd = parse(v, "params")?;
    let geo = specs::geometry(&p.geometry, "params.geometry", ctx.base)?;
    let opts = CertOptions { kappa: p.kappa.clone().map(|q| q.0), max_k: p.max_k, depth: p.depth };
    Ok((p, geo, opts))
}

fn nondegeneracy(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let (p, geo, opts) = rd_setup(v, ctx)?;
    let mut acc = Acc::new();
    let mut rep = step!(acc, NestedRep::build(&geo, p.rep.config(ctx.bits)));
    let mut rows = Vec::new();
    let mut truncated = false;
    for &g in &p.box_generations {
        if g > rep.config().max_gen() {
            continue;
        }
        for id in rep.components_at(g) {
            if rows.len() == MAX_BOXES {
                truncated = true;
                break;
            }
            rows.push(BoxRow { gen: g, level: rep.config().level_of_gen(g), node: id.to_string(), bx: rep.bbox(&id) });
        }
    }
    acc.put("boxes", &rows);
    if truncated {
        acc.put("boxes_truncated", &true);
    }
    let cert = und_certificate(&mut rep, &opts);
    acc.put("not_shrinking", &rep.warnings);
    let cert = step!(acc, cert);
    acc.put("certificate", &cert);
    step!(acc, verify_certificate(&cert));
    acc.put("verified", &true);
    let dk = step!(acc, dk_sequence(&cert));
    acc.put("dk", &dk);
    Ok(acc.done())
}

fn ratio_range(cert: &UndCertificate) -> Option<Value> {
    let rs = cert.all_ratios();
    let lo = rs.iter().map(|r| &r.lo).min()?;
    let hi = rs.iter().map(|r| &r.hi).max()?;
    Some(json!({"lo": rat::pair::to_value(lo), "hi": rat::pair::to_value(hi)}))
}

fn rotate_fix(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let (p, geo, opts) = rd_setup(v, ctx)?;
    let cands = RotationMatrix::default_candidates(geo.dim(), ctx.seed, p.random_candidates, ctx.bits);
    let mut acc = Acc::new();
    acc.put("candidates", &cands.iter().map(|c| c.label.clone()).collect::<Vec<_>>());
    let out = step!(acc, rotation_search(&geo, &cands, &p.rep.config(ctx.bits), &opts));
    acc.put("index", &out.index);
    acc.put("rotation", &json!({"label": out.rotation.label, "matrix": out.rotation.as_map()}));
    acc.put("failures", &out.failures);
    acc.put("ratio_range", &ratio_range(&out.certificate));
    acc.put("certificate", &out.certificate);
    step!(acc, verify_certificate(&out.certificate));
    acc.put("verified", &true);
    Ok(acc.done())
}

fn companion_rd(v: &Value, ctx: &Ctx, interior: bool) -> Result<Outcome, ConfigError> {
    let (p, geo, opts) = rd_setup(v, ctx)?;
    let mut acc = Acc::new();
    let mut rep = step!(acc, NestedRep::build(&geo, p.rep.config(ctx.bits)));
    let cert = step!(acc, und_certificate(&mut rep, &opts));
    if !interior {
        acc.put("certificate", &cert);
    }
    let dk = step!(acc, dk_sequence(&cert));
    acc.put("dk", &dk);
    let comp = step!(acc, build_product_companion(&cert.hull, &dk, &p.shrink.0, &p.margin.0));
    acc.put("companion", &comp);
    let n = cert.depth as usize;
    let chain = step!(acc, find_chain_rd(&cert, &comp, n));
    acc.put("chain", &chain);
    if interior {
        let b = step!(acc, certify_sum_interior_rd(&cert, &comp, n));
        acc.put("interior_box", &b);
        let ts = box_grid(&b, p.grid_count);
        let res = chain_grid(&cert, &comp, n, &ts);
        let failures: Vec<Value> = ts
            .iter()
            .zip(&res)
            .filter_map(|(t, r)| {
                r.as_ref().err().map(|e| json!({"t": t.iter().map(rat::pair::to_value).collect::<Vec<_>>(), "error": e.to_string()}))
            })
            .collect();
        acc.put("grid_points", &ts.len());
        acc.put("verified", &(ts.len() - failures.len()));
        let nfail = failures.len();
        acc.put("failures", &failures);
        if nfail > 0 {
            return Ok(acc.fail(format!("{nfail} grid translations without a chain")));
        }
    }
    Ok(acc.done())
}

fn distance_demo(v: &Value) -> Result<Outcome, ConfigError> {
    let cfg: DistanceDemoConfig = parse(v, "params")?;
    let mut acc = Acc::new();
    let rep = step!(acc, pinned_distance_demo(&cfg));
    let nfail = rep.failures.len();
    acc.put("report", &rep);
    if nfail > 0 {
        return Ok(acc.fail(format!("{nfail} grid values of c not verified")));
    }
    Ok(acc.done())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Erdos {
    k: Value,
    #[serde(default)]
    depth: Option<usize>,
    #[serde(default = "tenth")]
    margin: Q,
    #[serde(default = "half")]
    factor: Q,
    #[serde(default)]
    lambda: Option<Range>,
    #[serde(default)]
    t: Option<Range>,
    #[serde(default)]
    maps: Vec<[Q; 2]>,
    window: [Q; 2],
}

fn erdos_demo(v: &Value, ctx: &Ctx) -> Result<Outcome, ConfigError> {
    let p: Erdos = parse(v, "params")?;
    let k = specs::tree(&p.k, "params.k", ctx.base)?;
    let n = p.depth.unwrap_or(k.depth());
    let window = interval(&p.window, "params.window")?;
    let mut family: Vec<(Rat, Rat)> = Vec::new();
    match (&p.lambda, &p.t) {
        (Some(l), Some(t)) => {
            let ts = t.points();
            for l in l.points() {
                family.extend(ts.iter().map(|t| (l.clone(), t.clone())));
            }
        }
        (None, None) => {}
        _ => return Err(ConfigError::field("params", "`lambda` and `t` ranges go together")),
    }
    family.extend(p.maps.iter().map(|[l, t]| (l.0.clone(), t.0.clone())));
    let opts = CompanionOptions { margin: p.margin.0, factor: p.factor.0, cap: true };
    let mut acc = Acc::new();
    acc.put("maps_requested", &family.len());
    let rep = step!(acc, erdos_obstruction(&k, &family, &window, n, &opts));
    acc.put("report", &rep);
    Ok(acc.done())
}
