use num::{BigInt, BigRational};

use super::*;
use crate::ndsl::parse;

fn sys(src: &str, name: &str) -> NdsSpec {
    parse(src).unwrap().compile(name).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

const EX31: &str = "space shift(2); system F { at ap(3,2,k): sigma^k; at ap(4,2,k): sigma^-k; }
                    system T = tail(F, 2);";
const EX33: &str = "space finite(2); system F { at 1: table{1->1,2->1}; else: table{1->2,2->2}; }
                    system L { else: table{1->2,2->2}; }";
const EX35: &str = "space finite(3); system F { at 1: table{1->2,2->3,3->1}; at 2: table{1->2,2->3,3->1}; \
                    at 3: table{1->2,2->3,3->1}; } system I { else: id; } \
                    system C { else: table{1->2,2->3,3->1}; }";
const EX36: &str = "space shift(2); system F { at odd(k): sigma^k; at even(k): sigma^-k; }";
const EX38: &str = "space circle(sqrt2m1); system G { at pow(3,0,k): rot^k; at pow(3,1,k): rot^-k; }";
const SIGMA: &str = "space shift(2); system S { else: sigma; }";

fn run(spec: &NdsSpec, prop: PropertyKind, r: u32, h: u64) -> Verdict {
    let v = check_property(spec, &prop, &CheckConfig::new(r, h)).unwrap();
    v.recheck(spec, h.min(256)).unwrap_or_else(|e| panic!("{prop}: evidence does not replay: {e}"));
    v
}

#[test]
fn alternating_shift_is_not_multi_transitive_but_its_tail_is() {
    let f = sys(EX31, "F");
    let v = run(&f, PropertyKind::MultiTransitive { m_max: 2 }, 1, 64);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Structural { .. }));
    let t = sys(EX31, "T");
    let v = run(&t, PropertyKind::MultiTransitive { m_max: 3 }, 1, 512);
    assert_eq!(v.status, Status::Witnessed, "{:?}", v.evidence);
    assert_eq!(run(&t, PropertyKind::Transitive, 1, 512).status, Status::Witnessed);
}

#[test]
fn eventually_constant_system_is_minimal_but_its_limit_is_not() {
    assert_eq!(run(&sys(EX33, "F"), PropertyKind::Minimal, 1, 10).status, Status::Witnessed);
    let v = run(&sys(EX33, "L"), PropertyKind::Minimal, 1, 10);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Exact { claim: Claim::NeverEnters(..), .. }));
}

#[test]
fn three_cycle_then_identity_is_transitive_but_identity_is_not() {
    assert_eq!(run(&sys(EX35, "F"), PropertyKind::Transitive, 1, 10).status, Status::Witnessed);
    assert_eq!(run(&sys(EX35, "F"), PropertyKind::Minimal, 1, 10).status, Status::Witnessed);
    let v = run(&sys(EX35, "I"), PropertyKind::Transitive, 1, 10);
    assert_eq!(v.status, Status::Refuted);
}

#[test]
fn odd_even_shift_is_syndetic_but_not_multi_transitive() {
    let f = sys(EX36, "F");
    let v = run(&f, PropertyKind::SyndeticallyTransitive, 1, 200);
    assert_eq!(v.status, Status::Witnessed);
    assert_eq!(v.gaps().unwrap().eventual_max_gap, 2);
    assert_eq!(run(&f, PropertyKind::MultiTransitive { m_max: 2 }, 1, 200).status, Status::Refuted);
}

#[test]
fn power_supported_rotation() {
    let g = sys(EX38, "G");
    let v = run(&g, PropertyKind::DensePeriodicPoints, 2, 64);
    assert_eq!(v.status, Status::Witnessed);
    let Evidence::Witnesses { entries, .. } = &v.evidence else { panic!() };
    assert!(entries.iter().all(|e| e.time == 2));
    // at r = 1 the single arc is almost the whole circle, so r = 2
    let v = run(&g, PropertyKind::SyndeticallyTransitive, 2, 64);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Structural { claim: Claim::FailsOff(..), .. }));
}

#[test]
fn odd_even_shift_sensitivity() {
    let f = sys(EX36, "F");
    let half = rat(1, 2);
    let v = run(&f, PropertyKind::MultiSensitive { delta: half.clone() }, 3, 128);
    assert_eq!(v.status, Status::Witnessed);
    let v = run(&f, PropertyKind::ThicklySensitive { delta: half.clone() }, 3, 128);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Structural { claim: Claim::FailsOnClass { modulus: 2, .. }, .. }));
    assert_eq!(run(&f, PropertyKind::Sensitive { delta: half }, 3, 128).status, Status::Witnessed);
}

#[test]
fn trivial_sensitivity_refutations() {
    let f = sys(EX36, "F");
    let v = run(&f, PropertyKind::Sensitive { delta: rat(3, 1) }, 1, 16);
    assert_eq!(v.status, Status::Refuted);
    assert!(!v.caveats.is_empty());
    assert_eq!(run(&sys(EX35, "F"), PropertyKind::Sensitive { delta: rat(1, 2) }, 1, 16).status, Status::Refuted);
}

#[test]
fn mixing_and_weak_mixing() {
    let s = sys(SIGMA, "S");
    assert_eq!(run(&s, PropertyKind::Mixing, 1, 64).status, Status::Witnessed);
    assert_eq!(run(&s, PropertyKind::WeaklyMixing { order: 3 }, 1, 64).status, Status::Witnessed);
    let v = run(&s, PropertyKind::MildlyMixing, 1, 64);
    assert_eq!(v.status, Status::Witnessed);
    assert!(!v.caveats.is_empty());
    let f = sys(EX31, "F");
    assert_eq!(run(&f, PropertyKind::Mixing, 1, 64).status, Status::Refuted);
    // large odd times move every cylinder far enough to meet any other
    assert_eq!(run(&f, PropertyKind::WeaklyMixing { order: 2 }, 1, 64).status, Status::Witnessed);
}

#[test]
fn strong_transitivity() {
    let c = sys(EX35, "C");
    let v = run(&c, PropertyKind::StronglyTransitive, 1, 32);
    assert_eq!(v.status, Status::Witnessed);
    assert_eq!(v.max_time(), Some(3));
    assert_eq!(run(&sys(SIGMA, "S"), PropertyKind::StronglyTransitive, 1, 32).status, Status::Refuted);
    assert_eq!(run(&sys(EX35, "I"), PropertyKind::StronglyTransitive, 1, 32).status, Status::Refuted);
}

#[test]
fn per_term_properties() {
    let v = run(&sys(EX33, "F"), PropertyKind::SurjectiveSequence, 1, 8);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Exact { claim: Claim::NotSurjectiveAt(1), .. }));
    assert_eq!(run(&sys(EX35, "F"), PropertyKind::SurjectiveSequence, 1, 8).status, Status::Witnessed);
    assert_eq!(run(&sys(EX36, "F"), PropertyKind::FeebleOpen, 1, 8).status, Status::Witnessed);
}

#[test]
fn almost_periodic_points() {
    let v = run(&sys(EX35, "C"), PropertyKind::AlmostPeriodicPoint { point: Some(2) }, 1, 16);
    assert_eq!(v.status, Status::Witnessed);
    // the constant map sends 1 to 2 for good
    let v = run(&sys(EX33, "L"), PropertyKind::AlmostPeriodicPoint { point: Some(1) }, 1, 16);
    assert_eq!(v.status, Status::Refuted);
    assert_eq!(
        run(&sys(SIGMA, "S"), PropertyKind::AlmostPeriodicPoint { point: None }, 2, 64).status,
        Status::Witnessed
    );
}

#[test]
fn totally_transitive_splits_into_iterates() {
    let v = run(&sys(SIGMA, "S"), PropertyKind::TotallyTransitive { s_max: 3 }, 1, 64);
    assert_eq!(v.status, Status::Witnessed);
    let Evidence::Parts { orders, .. } = &v.evidence else { panic!() };
    assert_eq!(orders, &vec![1, 2, 3]);
}

#[test]
fn gap_adversary_law() {
    let (g, law) = build_gap_adversary(&[4, 8, 16]).unwrap();
    let table = crate::maps::PrefixTable::build(&g, 128).unwrap();
    for n in 1..=128u64 {
        let want = if [4, 8, 16].contains(&n) { n as i64 } else { 0 };
        assert_eq!(table.get(n).exponent(), Some(want));
        assert_eq!(law.eval(n), want);
    }
    let (id, _) = build_gap_adversary(&[]).unwrap();
    assert!(crate::maps::PrefixTable::build(&id, 16).unwrap().get(16).is_identity());
    assert!(build_gap_adversary(&[4, 6]).is_err());
    assert!(build_progression_adversary(2).is_err());
}

#[test]
fn product_with_adversary_is_not_transitive() {
    let f = sys(EX31, "F");
    let (g, _) = build_progression_adversary(4).unwrap();
    assert_eq!(run(&g, PropertyKind::Transitive, 1, 64).status, Status::Witnessed);
    let p = NdsSpec::product(vec![f, g]).unwrap();
    let v = run(&p, PropertyKind::Transitive, 1, 64);
    assert_eq!(v.status, Status::Refuted);
    assert!(matches!(v.evidence, Evidence::Structural { .. }));
}

#[test]
fn consistency_over_extended_horizon() {
    let t = sys(EX31, "T");
    let rep = hitting_infinity_consistency(
        &t,
        &PropertyKind::MultiTransitive { m_max: 2 },
        &CheckConfig::new(1, 256),
        1024,
        5,
    )
    .unwrap();
    assert!(rep.ok, "{:?}", rep.failures);
    let s = sys(SIGMA, "S");
    let rep =
        hitting_infinity_consistency(&s, &PropertyKind::WeaklyMixing { order: 2 }, &CheckConfig::new(1, 64), 256, 10)
            .unwrap();
    assert!(rep.ok);
    assert!(hitting_infinity_consistency(
        &sys(EX35, "I"),
        &PropertyKind::WeaklyMixing { order: 2 },
        &CheckConfig::new(1, 16),
        64,
        3
    )
    .is_err());
}

#[test]
fn hierarchy_is_coherent() {
    for (src, name) in [(EX31, "F"), (EX31, "T"), (EX36, "F"), (SIGMA, "S")] {
        let s = sys(src, name);
        let st = |p| run(&s, p, 1, 128).status;
        if st(PropertyKind::MultiTransitive { m_max: 2 }) == Status::Witnessed {
            assert_eq!(st(PropertyKind::Transitive), Status::Witnessed);
        }
        if st(PropertyKind::WeaklyMixing { order: 3 }) == Status::Witnessed {
            assert_eq!(st(PropertyKind::WeaklyMixing { order: 2 }), Status::Witnessed);
        }
        if st(PropertyKind::Mixing) == Status::Witnessed {
            assert_ne!(st(PropertyKind::WeaklyMixing { order: 2 }), Status::Refuted);
        }
    }
}

#[test]
fn tampered_witness_fails_recheck() {
    let s = sys(EX36, "F");
    let mut v = run(&s, PropertyKind::Transitive, 1, 64);
    if let Evidence::Witnesses { entries, .. } = &mut v.evidence {
        // time 2 has exponent 0, and the two cylinders are disjoint
        let e = entries.iter_mut().find(|e| e.sets[0] == "[000@-1] -> [111@-1]").unwrap();
        e.time = 2;
    }
    assert!(v.recheck(&s, 64).is_err());
}
