//! End-to-end acceptance checks, one line per criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use cantor_core::applications::{
    derivative_bound, erdos_obstruction, pinned_distance_demo, DistanceDemoConfig, HFamily, HSpec,
};
use cantor_core::cantor1d::{affine_image, build_binary_ifs, middle_thirds, GapTree, Interval1};
use cantor_core::containment1d::{
    build_companion, certify_difference_interior, check_dominance, find_chain, grid, robustness_sweep,
    CompanionOptions, PerturbationSpec,
};
use cantor_core::containment_rd::{
    box_grid, build_product_companion, certify_sum_interior_rd, chain_grid, contraction_check, dk_sequence,
    ContainmentRdError, ProductCompanion,
};
use cantor_core::interval::RatInterval;
use cantor_core::nested_rd::{
    rotation_search, und_certificate, verify_certificate, AffineMap, BoxD, CertOptions, Factor, GeometrySource,
    NestedError, NestedRep, RepConfig, RotationMatrix, UndCertificate,
};
use cantor_core::rat::{self, int, pow2, pow_int, rat};
use cantor_core::Rat;
use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Endpoints of interval lists as integers over one common denominator.
struct Scaled {
    den: BigInt,
}

impl Scaled {
    fn new<'a>(values: impl IntoIterator<Item = &'a Rat>) -> Self {
        let den = values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        Scaled { den }
    }

    fn int(&self, x: &Rat) -> BigInt {
        let q = x * Rat::from_integer(self.den.clone());
        assert!(q.is_integer(), "denominator does not cover {x}");
        q.to_integer()
    }

    fn list(&self, v: &[(Rat, Rat)]) -> Vec<(BigInt, BigInt)> {
        let mut out: Vec<_> = v.iter().map(|(a, b)| (self.int(a), self.int(b))).collect();
        out.sort();
        out
    }
}

/// Does some interval of `a` meet some interval of `b` shifted by `s`? Both sorted.
fn unions_meet(a: &[(BigInt, BigInt)], b: &[(BigInt, BigInt)], s: &BigInt) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (blo, bhi) = (&b[j].0 + s, &b[j].1 + s);
        if a[i].1 < blo {
            i += 1;
        } else if bhi < a[i].0 {
            j += 1;
        } else {
            return true;
        }
    }
    false
}

fn pairs(t: &GapTree, level: usize) -> Vec<(Rat, Rat)> {
    t.level_intervals(level).unwrap().into_iter().map(|i| (i.lo, i.hi)).collect()
}

fn mt_companion(depth: usize) -> (GapTree, GapTree) {
    let k = middle_thirds(depth);
    let kt = build_companion(&k, depth, &CompanionOptions::default()).unwrap();
    (k, kt)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let (k, kt) = mt_companion(20);
    let dom = check_dominance(&k, &kt, 20).map_err(err)?;
    let chain = find_chain(&k, &kt, 20).map_err(err)?;
    let elapsed = start.elapsed();
    ensure!(dom.overall && dom.levels.len() == 20 && dom.levels.iter().all(|l| l.pass), "dominance fails");
    let exact = (rat(7, 10) + rat(1, 2) * pow_int(&rat(2, 3), 20)) * pow2(-20);
    ensure!(chain.bound == exact, "bound {} differs from {}", chain.bound, exact);
    ensure!(chain.bound < rat(1, 1_000_000), "bound {} not below 1e-6", chain.bound);
    ensure!(chain.pairs.len() == 20, "chain has {} steps", chain.pairs.len());
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(format!("bound = {} ({:.3e}), {:?}", chain.bound, rat::to_f64(&chain.bound), elapsed))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let (k, kt) = mt_companion(20);
    let j = certify_difference_interior(&k, &kt, 20).map_err(err)?;
    ensure!(j == Interval1::new(rat(-1, 10), rat(1, 10)), "interior is [{}, {}]", j.lo, j.hi);
    let ts = grid(&j.lo, &j.hi, 1001);
    ensure!(ts.len() == 1001, "grid has {} points", ts.len());
    use rayon::prelude::*;
    let bad: Vec<String> = ts
        .par_iter()
        .filter_map(|t| {
            let moved = affine_image(&kt, &Rat::one(), t).ok()?;
            find_chain(&k, &moved, 20).err().map(|e| format!("t = {t}: {e}"))
        })
        .collect();
    let elapsed = start.elapsed();
    ensure!(bad.is_empty(), "{} grid points without a chain, first {}", bad.len(), bad[0]);
    ensure!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    // t lies in K_12 - Kt_12 exactly when Kt_12 + t meets K_12
    let (a, b) = (pairs(&k, 12), pairs(&kt, 12));
    let sc = Scaled::new(a.iter().chain(&b).flat_map(|(x, y)| [x, y]).chain(&ts));
    let (sa, sb) = (sc.list(&a), sc.list(&b));
    let missed = ts.iter().filter(|t| !unions_meet(&sa, &sb, &sc.int(t))).count();
    ensure!(missed == 0, "Minkowski oracle rejects {missed} grid points");
    Ok(format!("J = [-1/10, 1/10], 1001/1001 chains and oracle hits, {elapsed:?}"))
}

fn criterion_3() -> Check {
    let (k, kt) = mt_companion(20);
    let pert = PerturbationSpec {
        lambda_lo: rat(95, 100),
        lambda_hi: rat(105, 100),
        t_lo: rat(-4, 100),
        t_hi: rat(4, 100),
        lambda_count: 21,
        t_count: 21,
    };
    let s = robustness_sweep(&k, &kt, &pert, 20).map_err(err)?;
    ensure!(s.slack_lambda == int(2), "slack_lambda = {}", s.slack_lambda);
    ensure!(s.results.len() == 441, "{} sweep points", s.results.len());
    let failed = s.results.iter().filter(|p| !p.ok).count();
    ensure!(failed == 0, "{failed} sweep points fail");
    Ok("slack_lambda = 2, 441/441 sweep points".into())
}

fn mt2(depth: usize) -> GeometrySource {
    GeometrySource::product(vec![Factor::Tree(middle_thirds(depth)), Factor::Tree(middle_thirds(depth))])
}

fn cfg(start: u32, leaf: u32) -> RepConfig {
    RepConfig { start_level: start, leaf_level: leaf, refine_step: 2, ..RepConfig::default() }
}

fn kappa_nine_cert() -> &'static UndCertificate {
    static C: OnceLock<UndCertificate> = OnceLock::new();
    C.get_or_init(|| {
        let mut rep = NestedRep::build(&mt2(6), cfg(2, 12)).unwrap();
        und_certificate(&mut rep, &CertOptions { kappa: Some(int(9)), max_k: 2, depth: 3 }).unwrap()
    })
}

fn ninth(k: usize) -> Rat {
    Rat::one() / pow_int(&int(9), k as u32)
}

fn criterion_4() -> Check {
    let cert = kappa_nine_cert();
    verify_certificate(cert).map_err(err)?;
    let dk = dk_sequence(cert).map_err(err)?;
    ensure!(dk.len() == 3, "{} separations", dk.len());
    let slack = Rat::one() - pow2(-30);
    for (i, d) in dk.d.iter().enumerate() {
        let e = ninth(i + 1);
        ensure!(d <= &e && d >= &(&e * &slack), "d_{} = {d} outside [9^-k (1 - 2^-30), 9^-k]", i + 1);
    }
    let flat = GeometrySource::product(vec![Factor::Tree(middle_thirds(6)), Factor::Point(Rat::zero())]);
    let mut rep = NestedRep::build(&flat, cfg(2, 14)).map_err(err)?;
    match und_certificate(&mut rep, &CertOptions { kappa: None, max_k: 8, depth: 2 }) {
        Err(NestedError::CertificateNotFound { node, .. }) => ensure!(node == "root", "flat set fails at {node}"),
        other => return Err(format!("flat set: expected a failure, got {:?}", other.map(|c| c.depth))),
    }
    let opts = CertOptions { kappa: Some(rat(11, 10)), max_k: 3, depth: 2 };
    let cands = vec![RotationMatrix::identity(2), RotationMatrix::hyperplane_repair(2, 64).map_err(err)?];
    let out = rotation_search(&flat, &cands, &cfg(2, 14), &opts).map_err(err)?;
    ensure!(out.index == 1, "rotation search picked candidate {}", out.index);
    verify_certificate(&out.certificate).map_err(err)?;
    let eps = rat(1, 1_000_000_000);
    let ratios = out.certificate.all_ratios();
    ensure!(!ratios.is_empty(), "rotated certificate carries no ratios");
    for r in &ratios {
        ensure!(r.lo >= Rat::one() - &eps && r.hi <= Rat::one() + &eps, "ratio [{}, {}]", r.lo, r.hi);
    }
    Ok(format!("d_1..d_3 match 9^-k, flat set fails at root, rotated certificate with {} ratios in 1 +- 1e-9", ratios.len()))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let config = RepConfig { precision_bits: 80, ..cfg(2, 56) };
    let mut rep = NestedRep::build(&mt2(28), config).map_err(err)?;
    let cert = und_certificate(&mut rep, &CertOptions { kappa: Some(int(9)), max_k: 3, depth: 10 }).map_err(err)?;
    let seps = dk_sequence(&cert).map_err(err)?;
    ensure!(cert.hull == BoxD::new(vec![Rat::zero(); 2], vec![Rat::one(); 2]), "certificate hull is not [0, 1]^2");
    let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).map_err(err)?;
    ensure!(comp.base.hull() == &Interval1::new(rat(-1, 10), rat(11, 10)), "companion hull differs");
    let n = 10;
    let chain = cantor_core::containment_rd::find_chain_rd(&cert, &comp, n).map_err(err)?;
    let full = comp.base.hull().len();
    ensure!(chain.steps.len() == n, "chain has {} steps", chain.steps.len());
    ensure!(chain.bound_sq == &chain.level_length * &chain.level_length * int(2), "bound is not sqrt(2) |I_n|");
    ensure!(chain.level_length <= &full * pow2(-(n as i64)), "level length above |I| 2^-n");
    let j = certify_sum_interior_rd(&cert, &comp, n).map_err(err)?;
    ensure!(j == BoxD::new(vec![rat(-1, 10); 2], vec![rat(1, 10); 2]), "interior box is {j:?}");
    let ts = box_grid(&j, 21);
    ensure!(ts.len() == 441, "{} grid points", ts.len());
    let res = chain_grid(&cert, &comp, n, &ts);
    if let Some(e) = res.iter().find_map(|r| r.as_ref().err()) {
        let blocked = matches!(e, ContainmentRdError::SlitBlocked(_));
        return Err(format!("grid chain failed ({}): {e}", if blocked { "slit" } else { "other" }));
    }
    let oracle = box_oracle_misses(&comp, n, &ts);
    ensure!(oracle == 0, "box-intersection oracle rejects {oracle} grid points");
    Ok(format!(
        "depth-10 chain bound {:.3e}, interior [-1/10, 1/10]^2, 441/441 chains and oracle hits, {:?}",
        rat::to_f64(&chain.bound),
        start.elapsed()
    ))
}

/// The level-n companion cover meets the level-14 cover of middle-thirds^2
/// after translation. Both covers are products, so boxes meet exactly when
/// every axis projection does.
fn box_oracle_misses(comp: &ProductCompanion, n: usize, ts: &[Vec<Rat>]) -> usize {
    let k = pairs(&middle_thirds(14), 14);
    let c = pairs(&comp.base, n);
    let sc = Scaled::new(k.iter().chain(&c).flat_map(|(x, y)| [x, y]).chain(ts.iter().flatten()));
    let (sk, scc) = (sc.list(&k), sc.list(&c));
    ts.iter().filter(|t| !t.iter().all(|tj| unions_meet(&sk, &scc, &sc.int(tj)))).count()
}

/// b_n(g) recomputed pair by pair from the image cells.
fn brute_separations(cert: &UndCertificate, g: &AffineMap) -> Vec<Rat> {
    (0..cert.depth)
        .map(|t| {
            let mut best: Option<Rat> = None;
            for node in cert.nodes_at(t) {
                let imgs: Vec<Vec<Vec<RatInterval>>> = node
                    .selected
                    .iter()
                    .map(|c| c.cells.iter().map(|cell| g.apply_box(&cell.img.lo, &cell.img.hi)).collect())
                    .collect();
                for p in &node.pairs {
                    let dm = (0..cert.dim)
                        .map(|j| {
                            let mut m: Option<Rat> = None;
                            for a in &imgs[p.i] {
                                for b in &imgs[p.j] {
                                    let gap = rat::max_rat(&(&b[j].lo - &a[j].hi), &(&a[j].lo - &b[j].hi)).clone();
                                    let gap = if gap.is_negative() { Rat::zero() } else { gap };
                                    if m.as_ref().is_none_or(|x| &gap < x) {
                                        m = Some(gap);
                                    }
                                }
                            }
                            m.unwrap()
                        })
                        .min()
                        .unwrap();
                    if best.as_ref().is_none_or(|x| &dm < x) {
                        best = Some(dm);
                    }
                }
            }
            best.unwrap()
        })
        .collect()
}

fn criterion_6() -> Check {
    let cert = kappa_nine_cert();
    let delta = rat(1, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        // entries of J - I in [-0.005, 0.005] keep the Frobenius norm at most 0.01
        let e: Vec<Vec<Rat>> = (0..2).map(|_| (0..2).map(|_| rat(rng.gen_range(-5000..=5000), 1_000_000)).collect()).collect();
        let fro: Rat = e.iter().flatten().map(|x| x * x).sum();
        ensure!(fro <= rat(1, 10_000), "map {i}: |J - I|_F^2 = {fro}");
        let m: Vec<Vec<Rat>> = (0..2)
            .map(|r| (0..2).map(|c| if r == c { Rat::one() + &e[r][c] } else { e[r][c].clone() }).collect())
            .collect();
        let t = (0..2).map(|_| rat(rng.gen_range(-100..=100), 100)).collect();
        let g = AffineMap::from_exact(m, t).map_err(err)?;
        let r = contraction_check(cert, &g, &delta).map_err(err)?;
        ensure!(r.lambda == rat(4, 5), "lambda = {}", r.lambda);
        ensure!(r.holds, "map {i}: b_n(g) < lambda a_n");
        if i < 10 {
            let b = brute_separations(cert, &g);
            for (lvl, bb) in r.levels.iter().zip(&b) {
                ensure!(&lvl.b == bb, "map {i} level {}: {} vs brute force {}", lvl.level, lvl.b, bb);
            }
        }
        for l in &r.levels {
            worst = worst.min(rat::to_f64(&(&l.b / &l.a)));
        }
    }
    Ok(format!("100/100 maps keep b_n >= 0.8 a_n (smallest b_n / a_n = {worst:.4})"))
}

fn criterion_7() -> Check {
    let cfg = DistanceDemoConfig::standard();
    let r = pinned_distance_demo(&cfg).map_err(err)?;
    ensure!(r.failures.is_empty(), "{} grid failures, first {:?}", r.failures.len(), r.failures[0]);
    ensure!(r.witnesses.len() == 101, "{} witnesses", r.witnesses.len());
    let k1 = build_binary_ifs(&Interval1::new(rat(55, 100), rat(65, 100)), &rat(1, 10), 12).map_err(err)?;
    let leaves = k1.level_intervals(12).map_err(err)?;
    let tol = rat(1, 100_000_000);
    let mut worst = Rat::zero();
    for w in &r.witnesses {
        // exact rational residual, independent of the float solver
        let res = (&w.k1 * &w.k1 + &w.k2 * &w.k2 - &w.c).abs();
        ensure!(res <= tol, "c = {}: residual {}", w.c, rat::to_f64(&res));
        ensure!(leaves.iter().any(|i| i.contains_point(&w.k1)), "k1 = {} is not in K1", w.k1);
        ensure!(w.residual <= 1e-8, "reported residual {}", w.residual);
        if res > worst {
            worst = res;
        }
    }
    let h = HSpec::new(
        HFamily::AlphaNorm { offset: Rat::zero() },
        Interval1::new(int(2), int(2)),
        Interval1::new(rat(3, 5), rat(4, 5)),
        Interval1::new(rat(1, 100), int(2)),
    )
    .map_err(err)?;
    let pt = |x: Rat| RatInterval::point(x);
    let b = derivative_bound(&h, &pt(int(1)), &pt(int(2)), &RatInterval::new(rat(3, 5), rat(4, 5)), 64).map_err(err)?;
    ensure!(b.eta >= rat(3, 4), "eta = {} below 0.75", b.eta);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eta = rat::to_f64(&b.eta);
    let demo_eta = rat::to_f64(&r.eta);
    for _ in 0..10_000 {
        // g(x) = sqrt(c - x^2), |g'| = x / sqrt(c - x^2)
        let x: f64 = rng.gen_range(0.6..=0.8);
        let slope = x / (1.0 - x * x).sqrt();
        ensure!(slope >= eta, "|g'({x})| = {slope} < {eta}");
        let (c, x): (f64, f64) = (rng.gen_range(0.95..=1.05), rng.gen_range(0.55..=0.65));
        let slope = x / (c - x * x).sqrt();
        ensure!(slope >= demo_eta, "demo box: |g'({x})| = {slope} < {demo_eta} at c = {c}");
    }
    Ok(format!(
        "101/101 witnesses, worst exact residual {:.2e}, eta = {} on the stated box, 10^4 slope samples above eta",
        rat::to_f64(&worst),
        b.eta
    ))
}

fn criterion_8() -> Check {
    let k = middle_thirds(12);
    let ls = grid(&rat(99, 100), &rat(101, 100), 10);
    let ts = grid(&int(0), &int(5), 10);
    let family: Vec<(Rat, Rat)> = ls.iter().flat_map(|l| ts.iter().map(move |t| (l.clone(), t.clone()))).collect();
    let window = Interval1::new(int(-1), int(6));
    let r = erdos_obstruction(&k, &family, &window, 12, &CompanionOptions::default()).map_err(err)?;
    ensure!(r.maps.len() == 100, "{} maps", r.maps.len());
    let spacing = &r.obstruction.spacing;
    let identity = r.obstruction.companion.hull().len() - &r.lambda_max * k.hull().len();
    ensure!(r.spacing_identity && spacing == &identity, "spacing {spacing} differs from {identity}");
    let comp_leaves = pairs(&r.obstruction.companion, 12);
    let k_leaves = pairs(&k, 12);
    for m in &r.maps {
        // the witness sits in g(K) at level 12 and within `bound` of the chosen translate
        let in_image = k_leaves.iter().any(|(a, b)| {
            let (x, y) = (&m.lambda * a + &m.t, &m.lambda * b + &m.t);
            rat::min_rat(&x, &y) <= &m.point && &m.point <= rat::max_rat(&x, &y)
        });
        ensure!(in_image, "map ({}, {}): witness not in g(K)", m.lambda, m.t);
        let shift = spacing * int(m.k);
        let near = comp_leaves.iter().any(|(a, b)| a + &shift - &m.bound <= m.point && m.point <= b + &shift + &m.bound);
        ensure!(near, "map ({}, {}): witness far from translate {}", m.lambda, m.t, m.k);
    }
    let mut steep = family.clone();
    steep.push((rat(5, 2), int(0)));
    match erdos_obstruction(&k, &steep, &window, 12, &CompanionOptions::default()) {
        Err(cantor_core::applications::ApplicationsError::FamilyOutOfSlack { index: 100, .. }) => {}
        other => return Err(format!("lambda = 2.5 not rejected: {:?}", other.map(|r| r.maps.len()))),
    }
    Ok(format!("100/100 maps meet F, lambda = 2.5 rejected, spacing = {spacing}"))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run_cli(config: &Path, out: &Path) -> i32 {
    let args = ["cantor-forge", "run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    cantor_forge::main_with(args)
}

fn criterion_9() -> Check {
    for t in [middle_thirds(8), affine_image(&middle_thirds(5), &rat(-3, 7), &rat(1, 3)).map_err(err)?] {
        let back: GapTree = serde_json::from_str(&serde_json::to_string(&t).map_err(err)?).map_err(err)?;
        ensure!(back == t, "GapTree round trip differs");
    }
    let cert = kappa_nine_cert();
    let text = serde_json::to_string(cert).map_err(err)?;
    let back: UndCertificate = serde_json::from_str(&text).map_err(err)?;
    ensure!(&back == cert, "certificate round trip differs");
    ensure!(serde_json::to_string(&back).map_err(err)? == text, "certificate text changes on re-serialization");
    let dir = tempfile::tempdir().map_err(err)?;
    let mut names: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .map_err(err)?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    for p in &names {
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let (ca, cb) = (run_cli(p, &a), run_cli(p, &b));
        ensure!(ca == cb && ca != 1, "{}: exit codes {ca} and {cb}", p.display());
        let (ra, rb) = (std::fs::read(&a).map_err(err)?, std::fs::read(&b).map_err(err)?);
        ensure!(ra == rb, "{}: reports differ", p.display());
    }
    Ok(format!("trees and certificate round-trip, {} scenarios byte-identical across two runs", names.len()))
}

fn main() {
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
}
