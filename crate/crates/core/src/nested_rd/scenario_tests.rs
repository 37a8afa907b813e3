use super::*;
use crate::cantor1d::middle_thirds;
use crate::rat::{int, pow2, rat, Rat};
use num::{One, Zero};
use proptest::prelude::*;

fn mt2(depth: usize) -> GeometrySource {
    GeometrySource::product(vec![Factor::Tree(middle_thirds(depth)), Factor::Tree(middle_thirds(depth))])
}

fn flat(depth: usize) -> GeometrySource {
    GeometrySource::product(vec![Factor::Tree(middle_thirds(depth)), Factor::Point(Rat::zero())])
}

fn cfg(start: u32, leaf: u32, step: u32) -> RepConfig {
    RepConfig { start_level: start, leaf_level: leaf, refine_step: step, ..RepConfig::default() }
}

#[test]
fn middle_thirds_square_cover() {
    let mut rep = NestedRep::build(&mt2(4), cfg(2, 8, 1)).unwrap();
    assert_eq!(rep.components_at(1).len(), 1);
    let corners = rep.components_at(2);
    assert_eq!(corners.len(), 4);
    let third = rat(1, 3);
    let tiny = pow2(-60);
    for c in &corners {
        let b = rep.bbox(c);
        assert!(b.width(0) <= &third + &tiny && b.width(1) <= &third + &tiny);
    }
    let mut rep = NestedRep::build(&mt2(4), cfg(2, 8, 2)).unwrap();
    assert_eq!(rep.components_at(1).len(), 1);
    assert_eq!(rep.components_at(2).len(), 16);
    let mut shallow = NestedRep::build(&mt2(1), cfg(2, 8, 2)).unwrap();
    let four = shallow.components_at(2);
    assert_eq!(four.len(), 4);
    assert_eq!(shallow.bbox(&four[3]), BoxD::new(vec![rat(2, 3); 2], vec![int(1); 2]).outward_of(64));
}

#[test]
fn single_point_chain() {
    let src = GeometrySource::product(vec![Factor::Point(rat(1, 3)), Factor::Point(rat(1, 5))]);
    let mut rep = NestedRep::build(&src, cfg(2, 12, 2)).unwrap();
    let mut id = rep.root();
    for _ in 0..rep.config().max_gen() {
        let kids = rep.children(&id);
        assert_eq!(kids.len(), 1);
        id = kids[0].clone();
    }
    assert!(rep.children(&id).is_empty());
    assert!(rep.warnings.is_empty());
    let blocks = rep.cube_blocks(&id);
    assert_eq!(blocks.len(), 1);
}

#[test]
fn flat_set_has_horizontal_runs_and_no_certificate() {
    let mut rep = NestedRep::build(&flat(8), cfg(2, 18, 2)).unwrap();
    for c in rep.components_at(3) {
        let b = rep.bbox(&c);
        assert_eq!((b.lo[1].clone(), b.hi[1].clone()), (Rat::zero(), Rat::zero()));
    }
    for max_k in [2, 4, 8] {
        let opts = CertOptions { kappa: None, max_k, depth: 1 };
        match und_certificate(&mut rep, &opts) {
            Err(NestedError::CertificateNotFound { node, explanation, .. }) => {
                assert_eq!(node, "root");
                assert!(explanation.contains("x2 = 0"), "{explanation}");
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}

#[test]
fn diagonal_certificate_without_kappa() {
    let mut rep = NestedRep::build(&mt2(6), cfg(2, 12, 2)).unwrap();
    let opts = CertOptions { kappa: None, max_k: 2, depth: 3 };
    let cert = und_certificate(&mut rep, &opts).unwrap();
    let first = cert.root.min_d_min().unwrap();
    assert!(first <= &rat(1, 9) && first > &(rat(1, 9) - pow2(-60)));
    verify_certificate(&cert).unwrap();
    assert_eq!(cert.nodes_at(2).len(), 9);
}

fn assert_dk(cert: &UndCertificate) {
    let slack = Rat::one() - pow2(-30);
    for k in 1..=cert.depth {
        let dk = cert.nodes_at(k - 1).iter().map(|n| n.min_d_min().unwrap().clone()).min().unwrap();
        let exact = Rat::one() / num::pow::pow(int(9), k as usize);
        assert!(dk <= exact && dk >= &exact * &slack, "level {k}: {dk}");
    }
}

#[test]
fn kappa_nine_certificate_has_ninth_powers() {
    let mut rep = NestedRep::build(&mt2(6), cfg(2, 12, 2)).unwrap();
    let opts = CertOptions { kappa: Some(int(9)), max_k: 2, depth: 3 };
    let cert = und_certificate(&mut rep, &opts).unwrap();
    verify_certificate(&cert).unwrap();
    assert_dk(&cert);
    for r in cert.all_ratios() {
        assert!(r.lo >= rat(1, 9) && r.hi <= int(9));
    }
    let text = serde_json::to_string(&cert).unwrap();
    let back: UndCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cert);
}

#[test]
fn kappa_monotone() {
    let opts = |k: Option<Rat>| CertOptions { kappa: k, max_k: 2, depth: 2 };
    let mut rep = NestedRep::build(&mt2(4), cfg(2, 10, 2)).unwrap();
    let tight = und_certificate(&mut rep, &opts(Some(int(9)))).is_ok();
    assert!(tight);
    for k in [rat(19, 2), int(10), int(100)] {
        assert!(und_certificate(&mut rep, &opts(Some(k))).is_ok());
    }
    assert!(und_certificate(&mut rep, &opts(None)).is_ok());
    // too strict to hold anywhere
    assert!(und_certificate(&mut rep, &opts(Some(rat(11, 10)))).is_err());
}

#[test]
fn tampered_certificate_rejected() {
    let mut rep = NestedRep::build(&mt2(4), cfg(2, 10, 2)).unwrap();
    let cert = und_certificate(&mut rep, &CertOptions { kappa: Some(int(9)), max_k: 2, depth: 2 }).unwrap();
    let mut bad = cert.clone();
    bad.root.pairs[0].d_min = int(1);
    assert!(verify_certificate(&bad).is_err());
    let mut bad = cert.clone();
    let moved = bad.root.selected[1].clone();
    bad.root.selected[0] = moved;
    assert!(verify_certificate(&bad).is_err());
    let mut bad = cert.clone();
    bad.root.children.pop();
    assert!(verify_certificate(&bad).is_err());
    let mut bad = cert;
    bad.kappa = Some(int(2));
    assert!(verify_certificate(&bad).is_err());
}

#[test]
fn rotation_repairs_flat_set() {
    let config = cfg(2, 14, 2);
    let opts = CertOptions { kappa: Some(rat(11, 10)), max_k: 3, depth: 2 };
    let candidates = vec![RotationMatrix::identity(2), RotationMatrix::hyperplane_repair(2, 64).unwrap()];
    let out = rotation_search(&flat(6), &candidates, &config, &opts).unwrap();
    assert_eq!(out.index, 1);
    assert_eq!(out.failures.len(), 1);
    assert!(out.failures[0].error.contains("no certificate"));
    let eps = rat(1, 1_000_000_000);
    let ratios = out.certificate.all_ratios();
    assert_eq!(ratios.len(), 3 + 9);
    for r in ratios {
        assert!(r.lo >= Rat::one() - &eps && r.hi <= Rat::one() + &eps, "{r:?}");
    }
    verify_certificate(&out.certificate).unwrap();
}

#[test]
fn rotation_edge_cases() {
    let config = cfg(2, 10, 2);
    let opts = CertOptions { kappa: None, max_k: 2, depth: 1 };
    let out = rotation_search(&mt2(4), &RotationMatrix::default_candidates(2, 1, 3, 64), &config, &opts).unwrap();
    assert_eq!(out.index, 0);
    assert!(out.failures.is_empty());
    match rotation_search(&mt2(4), &[], &config, &opts) {
        Err(NestedError::AllCandidatesFailed(v)) => assert!(v.is_empty()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn cell_backend_matches_product_backend() {
    let src = mt2(3);
    let GeometrySource::Product { factors, .. } = &src else { unreachable!() };
    let mapped = GeometrySource::Product { factors: factors.clone(), map: Some(AffineMap::identity(2)) };
    let mut a = NestedRep::build(&src, cfg(2, 8, 1)).unwrap();
    let mut b = NestedRep::build(&mapped, cfg(2, 8, 1)).unwrap();
    assert!(a.is_product() && !b.is_product());
    for g in 1..=a.config().max_gen() {
        let mut ba: Vec<BoxD> = a.components_at(g).iter().map(|c| a.bbox(c)).collect();
        let mut bb: Vec<BoxD> = b.components_at(g).iter().map(|c| b.bbox(c)).collect();
        ba.sort_by(|x, y| (&x.lo, &x.hi).cmp(&(&y.lo, &y.hi)));
        bb.sort_by(|x, y| (&x.lo, &x.hi).cmp(&(&y.lo, &y.hi)));
        assert_eq!(ba, bb, "generation {g}");
    }
}

#[test]
fn cube_list_source() {
    // three diagonal cubes at level 3, far apart
    let list = CubeList { level: 3, cubes: vec![vec![0, 0], vec![3, 3], vec![6, 6]] };
    let mut rep = NestedRep::build(&GeometrySource::Cubes(list), cfg(1, 6, 1)).unwrap();
    let cert = und_certificate(&mut rep, &CertOptions { kappa: None, max_k: 4, depth: 1 }).unwrap();
    assert_eq!(cert.root.min_d_min(), Some(&rat(1, 4)));
    verify_certificate(&cert).unwrap();
    // single cubes cannot shrink below their own size
    assert!(!rep.warnings.is_empty());
}

#[test]
fn propagation_on_constructed_example() {
    // a node with a separated triple only two generations down still certifies
    let list = CubeList { level: 6, cubes: vec![vec![0, 0], vec![2, 2], vec![4, 5], vec![40, 40]] };
    let mut rep = NestedRep::build(&GeometrySource::Cubes(list), cfg(1, 9, 1)).unwrap();
    let fail = und_certificate(&mut rep, &CertOptions { kappa: None, max_k: 1, depth: 1 });
    assert!(fail.is_err());
    assert!(und_certificate(&mut rep, &CertOptions { kappa: None, max_k: 8, depth: 1 }).is_ok());
}

#[test]
fn flat_set_reports_not_shrinking_only_when_shallow() {
    let rep = NestedRep::build(&flat(2), cfg(2, 12, 2)).unwrap();
    assert!(!rep.warnings.is_empty());
    let rep = NestedRep::build(&flat(12), cfg(2, 12, 2)).unwrap();
    assert!(rep.warnings.is_empty());
}

#[test]
fn rotation_preserves_distances_on_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut cands = RotationMatrix::quasi_random(3, 11, 3);
    cands.push(RotationMatrix::hyperplane_repair(3, 64).unwrap());
    for r in cands {
        let m = r.as_map();
        for _ in 0..50 {
            let p: Vec<Rat> = (0..3).map(|_| rat(rng.gen_range(-1000..1000), 1000)).collect();
            let q: Vec<Rat> = (0..3).map(|_| rat(rng.gen_range(-1000..1000), 1000)).collect();
            let (ip, iq) = (m.apply_point(&p), m.apply_point(&q));
            let mut img = crate::interval::RatInterval::from_i64(0);
            let mut src = Rat::zero();
            for j in 0..3 {
                let d = &ip[j] - &iq[j];
                img = &img + &(&d * &d);
                src += (&p[j] - &q[j]) * (&p[j] - &q[j]);
            }
            // |O u|^2 - |u|^2 = u^T (O^T O - I) u, bounded by d * defect * |u|^2
            let slack = &src * int(3) * &r.defect;
            assert!(img.lo <= &src + &slack && &src - &slack <= img.hi);
        }
    }
}

proptest! {
    #[test]
    fn outward_d_min_is_a_lower_bound(
        a in proptest::collection::vec((0i64..1000, 1i64..200), 2),
        b in proptest::collection::vec((0i64..1000, 1i64..200), 2),
        den in 3i64..1000,
    ) {
        let exact = |v: &[(i64, i64)]| {
            let lo: Vec<Rat> = v.iter().map(|x| rat(x.0, den)).collect();
            let hi: Vec<Rat> = v.iter().map(|x| rat(x.0 + x.1, den)).collect();
            (lo, hi)
        };
        let (al, ah) = exact(&a);
        let (bl, bh) = exact(&b);
        let truth = d_min(&[BoxD::new(al.clone(), ah.clone())], &[BoxD::new(bl.clone(), bh.clone())]);
        let coarse = d_min(&[BoxD::outward(&al, &ah, 20)], &[BoxD::outward(&bl, &bh, 20)]);
        let fine = d_min(&[BoxD::outward(&al, &ah, 60)], &[BoxD::outward(&bl, &bh, 60)]);
        prop_assert!(coarse <= fine && fine <= truth);
    }
}

#[test]
fn integer_compatibility_matches_rational() {
    let mut rep = NestedRep::build(&mt2(5), cfg(2, 12, 2)).unwrap();
    let comps = rep.components_at(3);
    let kappas = [None, Some(int(9)), Some(int(3)), Some(rat(7, 2))];
    let mut agree = 0;
    for a in comps.iter().take(40) {
        for b in comps.iter().skip(3).take(40) {
            for k in &kappas {
                let slow = rep.d_min(a, b) > rep.config().min_separation
                    && k.as_ref().is_none_or(|k| rep.kappa_ratios(a, b).is_ok_and(|r| r.within(k)));
                assert_eq!(rep.compatible(a, b, k.as_ref()), slow);
                agree += slow as usize;
            }
        }
    }
    assert!(agree > 0);
}
