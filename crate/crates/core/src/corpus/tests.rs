use super::*;
use crate::checkers::build_progression_adversary;

#[test]
fn checklist_is_complete() {
    let names: Vec<&str> = scenarios().iter().map(|s| s.name).collect();
    for want in [
        "example-3.1",
        "example-3.2",
        "example-3.3",
        "example-3.5",
        "example-3.6",
        "example-3.7",
        "example-3.8",
        "example-3.9",
        "theorem-3.5-adversary",
        "theorem-3.18",
        "theorem-final-strong",
    ] {
        assert!(names.contains(&want), "missing scenario {want}");
    }
}

#[test]
fn every_check_has_a_claim_and_an_expectation() {
    for s in scenarios() {
        let doc = s.document();
        assert_eq!(doc.checks.len(), s.claims.len(), "{}", s.name);
        assert!(doc.checks.iter().all(|c| c.expect.is_some()), "{}", s.name);
        assert!(!s.notes.is_empty());
    }
}

#[test]
fn filter_selects_by_glob() {
    let ex: Vec<&str> = select(Some("example-3.*")).unwrap().iter().map(|s| s.name).collect();
    assert_eq!(ex.len(), 8);
    assert!(ex.windows(2).all(|w| w[0] < w[1]));
    assert!(select(Some("nonexistent")).unwrap().is_empty());
    assert!(select(Some("[")).is_err());
}

#[test]
fn adversary_source_matches_the_builder() {
    let doc = select(Some("theorem-3.5-adversary")).unwrap()[0].document();
    let (g, _) = build_progression_adversary(4).unwrap();
    assert_eq!(doc.compile_with("G", 4096).unwrap(), g);
}

#[test]
fn interleaving_runs_grow() {
    let g = ops::interleave(
        crate::spaces::SpaceDesc::shift(),
        crate::maps::TermTemplate::ShiftPow(crate::maps::Exponent::Const(1)),
        20,
    )
    .unwrap();
    let moved: Vec<u64> = (1..=20).filter(|&n| !g.step_map(n).unwrap().is_identity()).collect();
    assert_eq!(moved, vec![1, 3, 6, 10, 15]);
}

#[test]
fn small_scenarios_pass() {
    for name in ["example-3.3", "example-3.5", "theorem-final-strong"] {
        let r = run_scenario(&select(Some(name)).unwrap()[0]);
        let bad: Vec<_> = r.expectations.iter().filter(|e| !e.pass).collect();
        assert!(r.pass, "{name}: {bad:#?}");
        assert!(r.expectations.iter().all(|e| e.digest.len() == 64));
    }
}
