use cantor_core::applications::{nonlinear_companion, verify_h_interior, HFamily, HSpec};
use cantor_core::cantor1d::{affine_image, build_binary_ifs, middle_thirds, GapTree, Interval1};
use cantor_core::containment1d::{
    build_companion, certify_difference_interior, find_chain, grid, lambda_slack, CompanionOptions, WitnessChain,
};
use cantor_core::containment_rd::{build_product_companion, dk_sequence, find_chain_rd_at, ProductCompanion};
use cantor_core::nested_rd::{und_certificate, CertOptions, Factor, GeometrySource, NestedRep, RepConfig};
use cantor_core::rat::{int, rat};
use cantor_core::Rat;
use num::{One, Signed};

fn in_level(t: &GapTree, n: usize, x: &Rat) -> bool {
    t.level_intervals(n).unwrap().iter().any(|i| i.contains_point(x))
}

#[test]
fn chain_witnesses_sit_in_both_covers() {
    let k = build_binary_ifs(&Interval1::new(int(0), int(1)), &rat(1, 4), 10).unwrap();
    let kt = build_companion(&k, 10, &CompanionOptions::default()).unwrap();
    let j = certify_difference_interior(&k, &kt, 10).unwrap();
    for t in grid(&j.lo, &j.hi, 17) {
        let moved = affine_image(&kt, &Rat::one(), &t).unwrap();
        let c = find_chain(&k, &moved, 10).unwrap();
        assert!(in_level(&k, 10, &c.witness_k));
        assert!(in_level(&moved, 10, &c.witness_kt));
        assert!((&c.witness_k - &c.witness_kt).abs() <= c.bound);
        let back: WitnessChain = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}

#[test]
fn slack_tracks_the_companion_factor() {
    let k = middle_thirds(12);
    for (f, slack) in [(rat(1, 2), int(2)), (rat(1, 4), int(4))] {
        let opts = CompanionOptions { factor: f, ..CompanionOptions::default() };
        let kt = build_companion(&k, 12, &opts).unwrap();
        assert_eq!(lambda_slack(&k, &kt, 12).unwrap(), slack);
    }
}

#[test]
fn affine_sum_companion_is_the_line_companion() {
    let k1 = middle_thirds(8);
    let h = HSpec::new(HFamily::AffineSum, Interval1::new(int(1), int(1)), Interval1::new(int(-1), int(2)), Interval1::new(int(-1), int(2)))
        .unwrap();
    let nc = nonlinear_companion(&k1, &h, &Interval1::new(rat(9, 10), rat(11, 10)), &Interval1::new(int(1), int(1)), 8, &rat(1, 2), 64)
        .unwrap();
    assert_eq!(nc.eta, int(1));
    assert!(!nc.increasing);
    let line = build_companion(&k1, 8, &CompanionOptions::default()).unwrap();
    assert_eq!(nc.tree, line);
    let cs = grid(&rat(95, 100), &rat(105, 100), 11);
    let r = verify_h_interior(&h, &k1, &nc.tree, &cs, &[int(1)], 8, 1e-10, 64).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures.first());
    for w in &r.witnesses {
        assert!((&w.k1 + &w.k2 - &w.c).abs() <= rat(1, 10_000_000_000));
        assert!(in_level(&k1, 8, &w.k1));
    }
}

#[test]
fn plane_chain_witness_is_within_the_bound() {
    let src = GeometrySource::product(vec![Factor::Tree(middle_thirds(6)), Factor::Tree(middle_thirds(6))]);
    let cfg = RepConfig { start_level: 2, leaf_level: 12, refine_step: 2, ..RepConfig::default() };
    let mut rep = NestedRep::build(&src, cfg).unwrap();
    let cert = und_certificate(&mut rep, &CertOptions { kappa: Some(int(9)), max_k: 2, depth: 3 }).unwrap();
    let seps = dk_sequence(&cert).unwrap();
    let comp = build_product_companion(&cert.hull, &seps, &rat(1, 2), &rat(1, 10)).unwrap();
    let t = vec![rat(-1, 20), rat(3, 40)];
    let ch = find_chain_rd_at(&cert, &comp, 3, &t).unwrap();
    let k = middle_thirds(6);
    for j in 0..2 {
        // the geometry witness is a box centre, so only the coarse cover is guaranteed
        assert!(in_level(&k, 1, &ch.witness_geometry[j]));
    }
    let d2: Rat = (0..2).map(|j| (&ch.witness_geometry[j] - &ch.witness_companion[j]).pow(2)).sum();
    assert!(d2 <= ch.bound_sq);
    let back: ProductCompanion = serde_json::from_str(&serde_json::to_string(&comp).unwrap()).unwrap();
    assert_eq!(back, comp);
}
