//! Acceptance suite. Each test covers one criterion and prints a single
//! `criterion N: PASS|FAIL` line on stdout, bypassing output capture.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use num::{BigInt, BigRational, ToPrimitive};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ndslab::chaos::{
    lemma21_construct, li_yorke_scan, sparse_tail_pairs, verify_construction, Lemma21Outcome, ScanConfig,
};
use ndslab::checkers::{
    build_gap_adversary, build_progression_adversary, check_property, hitting_infinity_consistency, CheckConfig,
    Evidence, PropertyKind, Status, Verdict,
};
use ndslab::convergence::{check_collective_convergence, check_uniform_convergence};
use ndslab::corpus::{self, syndetic_sensitivity_bounds};
use ndslab::hitting::{HitEngine, SetTest};
use ndslab::maps::{derive_exponent_law, FiniteTable, MapTerm, NdsSpec, NormalMap};
use ndslab::ndsl::{parse, print, NdslDocument};
use ndslab::spaces::biword::BiWord;
use ndslab::spaces::{distance, enumerate_basis, BasicOpen, Point, SpaceDesc};

struct Criterion {
    n: u32,
    title: &'static str,
    start: Instant,
    checks: Vec<(String, bool)>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(n: u32, title: &'static str) -> Self {
        Criterion { n, title, start: Instant::now(), checks: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) -> bool {
        self.checks.push((label.into(), ok));
        ok
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Runs a check, replays its evidence and records the replay.
    fn verdict(&mut self, label: &str, spec: &NdsSpec, prop: PropertyKind, r: u32, h: u64) -> Verdict {
        let v = check_property(spec, &prop, &CheckConfig::new(r, h)).unwrap_or_else(|e| panic!("{label} {prop}: {e}"));
        let replay = v.recheck(spec, h.min(256));
        self.check(format!("{label} {prop} evidence replays"), replay.is_ok());
        v
    }

    fn finish(self) {
        let failed: Vec<&str> = self.checks.iter().filter(|(_, ok)| !ok).map(|(l, _)| l.as_str()).collect();
        let status = if failed.is_empty() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2}: {status} {} ({} checks, {:.1}s)",
            self.n,
            self.title,
            self.checks.len(),
            self.start.elapsed().as_secs_f64()
        );
        if !failed.is_empty() {
            line.push_str(&format!("; failed: {}", failed.join("; ")));
        }
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        for n in &self.notes {
            let _ = writeln!(out, "    {n}");
        }
        drop(out);
        assert!(failed.is_empty(), "{line}");
    }
}

fn doc(name: &str) -> NdslDocument {
    let s = corpus::select(Some(name)).unwrap();
    assert_eq!(s.len(), 1, "scenario {name}");
    s[0].document()
}

fn sys(d: &NdslDocument, name: &str) -> NdsSpec {
    d.compile(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn is_structural(v: &Verdict) -> bool {
    matches!(v.evidence, Evidence::Structural { .. })
}

fn cyl(start: i64, word: &[u8]) -> BasicOpen {
    BasicOpen::Cylinder { start, word: word.to_vec() }
}

// ---- independent oracles ------------------------------------------------

/// Time-`n` prefix maps built by hand from the terms, without `NormalMap`.
#[derive(Clone, Debug)]
enum Prefix {
    Shift(i64),
    /// `images[i]` is the image of point `i + 1`.
    Table(Vec<u32>),
    Rot(i64),
    Product(Vec<Prefix>),
}

impl Prefix {
    fn identity(space: &SpaceDesc) -> Prefix {
        match space {
            SpaceDesc::Shift { .. } => Prefix::Shift(0),
            SpaceDesc::Finite { point_count } => Prefix::Table((1..=*point_count).collect()),
            SpaceDesc::Circle { .. } => Prefix::Rot(0),
            SpaceDesc::Product(parts) => Prefix::Product(parts.iter().map(Prefix::identity).collect()),
        }
    }

    fn step(&mut self, t: &MapTerm) {
        match (self, t) {
            (_, MapTerm::Identity) => {}
            (Prefix::Shift(e), MapTerm::ShiftPow(k)) => *e += k,
            (Prefix::Rot(c), MapTerm::RotPow(k)) => *c += k,
            (Prefix::Table(v), MapTerm::FiniteFn(f)) => v.iter_mut().for_each(|x| *x = f.images()[*x as usize - 1]),
            (Prefix::Product(ps), MapTerm::Tuple(ts)) => ps.iter_mut().zip(ts).for_each(|(p, t)| p.step(t)),
            (p, t) => panic!("term {t:?} on prefix {p:?}"),
        }
    }

    fn same_as(&self, m: &NormalMap) -> bool {
        match (self, m) {
            (Prefix::Shift(e), NormalMap::Shift(f)) | (Prefix::Rot(e), NormalMap::Rot(f)) => e == f,
            (Prefix::Table(v), NormalMap::Table(t)) => v.as_slice() == t.images(),
            (Prefix::Product(ps), NormalMap::Product(ms)) => {
                ps.len() == ms.len() && ps.iter().zip(ms).all(|(p, m)| p.same_as(m))
            }
            _ => false,
        }
    }

    /// `f(U) ∩ V ≠ ∅`; `None` when a circle test sits within float error
    /// of its boundary.
    fn hits(&self, alpha: f64, u: &BasicOpen, v: &BasicOpen) -> Option<bool> {
        match (self, u, v) {
            (
                Prefix::Shift(e),
                BasicOpen::Cylinder { start: s, word: wu },
                BasicOpen::Cylinder { start: t, word: wv },
            ) => {
                // σ^e moves the block of U to start at s - e
                Some(wu.iter().enumerate().all(|(i, a)| {
                    let j = s - e + i as i64 - t;
                    j < 0 || j >= wv.len() as i64 || wv[j as usize] == *a
                }))
            }
            (Prefix::Table(img), BasicOpen::FiniteSet(a), BasicOpen::FiniteSet(b)) => {
                Some(a.iter().any(|x| b.contains(&img[*x as usize - 1])))
            }
            (Prefix::Rot(c), BasicOpen::Arc { center: cu, radius: ru }, BasicOpen::Arc { center: cv, radius: rv }) => {
                let pos = |q: &BigRational, k: i64| q.to_f64().unwrap() + k as f64 * alpha;
                let d = (pos(cu.0.q(), cu.0.c() + c) - pos(cv.0.q(), cv.0.c())).rem_euclid(1.0);
                let d = d.min(1.0 - d);
                let reach = ru.to_f64().unwrap() + rv.to_f64().unwrap();
                if (d - reach).abs() < 1e-9 {
                    None
                } else {
                    Some(d < reach)
                }
            }
            (Prefix::Product(ps), BasicOpen::Rect(us), BasicOpen::Rect(vs)) => {
                let mut all = Some(true);
                for ((p, u), v) in ps.iter().zip(us).zip(vs) {
                    match p.hits(alpha, u, v) {
                        Some(false) => return Some(false),
                        None => all = None,
                        Some(true) => {}
                    }
                }
                all
            }
            _ => panic!("mismatched sets"),
        }
    }
}

fn hand_prefixes(spec: &NdsSpec, h: u64) -> Vec<Prefix> {
    let mut p = Prefix::identity(spec.space());
    let mut out = vec![p.clone()];
    for i in 1..=h {
        p.step(&spec.eval_term(i).unwrap());
        out.push(p.clone());
    }
    out
}

/// Exponent of `f_1^n` for a shift system, `n = 0..=h`.
fn shift_exponents(spec: &NdsSpec, h: u64) -> Vec<i64> {
    hand_prefixes(spec, h)
        .into_iter()
        .map(|p| match p {
            Prefix::Shift(e) => e,
            other => panic!("not a shift system: {other:?}"),
        })
        .collect()
}

/// Hitting times in `[1, h]` of `(u, v)` from the hand-built prefixes.
fn oracle_hits(pre: &[Prefix], u: &BasicOpen, v: &BasicOpen) -> Vec<u64> {
    (1..pre.len()).filter(|&n| pre[n].hits(SQRT2M1, u, v) == Some(true)).map(|n| n as u64).collect()
}

const SQRT2M1: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Every named system of every corpus scenario.
fn corpus_systems() -> Vec<(String, NdsSpec)> {
    let mut out = Vec::new();
    for s in corpus::scenarios() {
        let d = s.document();
        for name in d.system_names() {
            out.push((format!("{}/{name}", s.name), sys(&d, name)));
        }
    }
    out
}

// ---- criteria -----------------------------------------------------------

#[test]
fn criterion_01_alternating_shift_and_its_tail() {
    let mut c = Criterion::new(1, "f refuted for multi-transitivity, its tail witnessed with l <= 2(M+1)");
    let d = doc("example-3.1");
    let (f, t) = (sys(&d, "F"), sys(&d, "T"));

    let v = c.verdict("F", &f, PropertyKind::MultiTransitive { m_max: 2 }, 2, 512);
    c.check("F multi-transitive:2 refuted", v.status == Status::Refuted);
    let validated = match &v.evidence {
        Evidence::Structural { validated_to, laws, .. } => *validated_to >= 2048 && !laws.is_empty(),
        _ => false,
    };
    c.check("structural evidence with a law validated to 2048", validated);
    let law = derive_exponent_law(&f, 2048).unwrap().expect("law");
    c.check("law: E(2t) = 0", law.values_on_class(2, 0) == Some(BTreeSet::from([0])));
    let e = shift_exponents(&f, 2048);
    c.check("hand-summed exponents vanish at every even n <= 2048", (1..=1024).all(|t| e[2 * t] == 0));
    c.check("law agrees with hand-summed exponents to 2048", (1..=2048u64).all(|n| law.eval(n) == e[n as usize]));

    // M: σ^n(U) ∩ V ≠ ∅ for every n >= M and every pair of r = 2 cylinders
    let sigma =
        NdsSpec::constant(SpaceDesc::shift(), ndslab::maps::TermTemplate::ShiftPow(ndslab::maps::Exponent::Const(1)))
            .unwrap();
    let pre = hand_prefixes(&sigma, 64);
    let basis = enumerate_basis(&SpaceDesc::shift(), 2);
    let mut m = 1u64;
    for u in &basis {
        for w in &basis {
            let hits = oracle_hits(&pre, u, w);
            let last_miss = (1..=64u64).rev().find(|n| !hits.contains(n)).unwrap_or(0);
            m = m.max(last_miss + 1);
        }
    }
    c.check("enumerated mixing bound M = 5", m == 5);
    for mm in 1..=3u32 {
        let v = c.verdict("T", &t, PropertyKind::MultiTransitive { m_max: mm }, 2, 512);
        c.check(format!("T multi-transitive:{mm} witnessed"), v.status == Status::Witnessed);
        let l = v.max_time().unwrap_or(u64::MAX);
        c.check(format!("T multi-transitive:{mm} l = {l} <= 2(M+1) = {}", 2 * (m + 1)), l <= 2 * (m + 1));
    }
    c.note(format!("M = {m}"));
    c.finish();
}

#[test]
fn criterion_02_mirrored_verdicts() {
    let mut c = Criterion::new(2, "mirrored system: f witnessed, its tail refuted");
    let d = doc("example-3.2");
    let (f, t) = (sys(&d, "F"), sys(&d, "T"));
    for mm in 1..=3u32 {
        let v = c.verdict("F", &f, PropertyKind::MultiTransitive { m_max: mm }, 2, 512);
        c.check(format!("F multi-transitive:{mm} witnessed"), v.status == Status::Witnessed);
    }
    let v = c.verdict("T", &t, PropertyKind::MultiTransitive { m_max: 2 }, 2, 512);
    c.check("T multi-transitive:2 refuted", v.status == Status::Refuted);
    c.check("T refutation is structural", is_structural(&v));
    let e = shift_exponents(&t, 2048);
    c.check("tail exponents vanish at every even n <= 2048", (1..=1024).all(|k| e[2 * k] == 0));
    c.finish();
}

#[test]
fn criterion_03_eventually_constant_finite_systems() {
    let mut c = Criterion::new(3, "finite sequences minimal and transitive, their limits not; both converge");
    for (name, limit, r0) in [
        ("example-3.3", MapTerm::FiniteFn(FiniteTable::new(vec![2, 2]).unwrap()), 2u64),
        ("example-3.5", MapTerm::Identity, 4),
    ] {
        let d = doc(name);
        let f = sys(&d, "F");
        let lim = sys(&d, if name == "example-3.3" { "L" } else { "I" });
        for p in [PropertyKind::Minimal, PropertyKind::Transitive] {
            let v = c.verdict(name, &f, p.clone(), 1, 64);
            c.check(format!("{name} F {p} witnessed"), v.status == Status::Witnessed);
            let v = c.verdict(name, &lim, p.clone(), 1, 64);
            c.check(format!("{name} limit {p} refuted"), v.status == Status::Refuted);
        }
        let u = check_uniform_convergence(&f, &limit, 512).unwrap();
        c.check(
            format!("{name} uniform convergence witnessed, r0 = {r0}"),
            u.status == Status::Witnessed && u.r0 == Some(r0),
        );
        let k = check_collective_convergence(&f, &limit, 512, 8).unwrap();
        c.check(format!("{name} collective convergence witnessed"), k.status == Status::Witnessed);
    }
    let f = sys(&doc("example-3.5"), "F");
    let (u, v) = (BasicOpen::finite_set([1]).unwrap(), BasicOpen::finite_set([2]).unwrap());
    let hs = HitEngine::new(&f, 512).unwrap().set(SetTest::Hitting { u: u.clone(), v: v.clone() }).unwrap();
    c.check("N({1}, {2}) = {1} on [1, 512]", hs.members == vec![1]);
    c.check("hand oracle agrees", oracle_hits(&hand_prefixes(&f, 512), &u, &v) == vec![1]);
    c.finish();
}

#[test]
fn criterion_04_gap_adversary() {
    let mut c = Criterion::new(4, "gap adversary transitive; product with the base never hits");
    let d = doc("theorem-3.5-adversary");
    let f = sys(&d, "F");
    let (u, v) = (cyl(-1, &[0, 0, 0]), cyl(-1, &[1, 1, 1]));
    let base_hits = HitEngine::new(&f, 512).unwrap().members(&SetTest::Hitting { u: u.clone(), v: v.clone() }).unwrap();
    // base misses, thinned to gaps > 2; a move at n is undone at n + 1 <= 512
    let misses: Vec<u64> = (1..512u64).filter(|n| !base_hits.contains(n) && n % 4 == 0).collect();
    c.check("base misses every multiple of 4 up to 508", misses == (1..=127).map(|k| 4 * k).collect::<Vec<_>>());
    let (g, law) = build_gap_adversary(&misses).unwrap();
    let vg = c.verdict("g", &g, PropertyKind::Transitive, 1, 512);
    c.check("g transitive at r = 1, H = 512", vg.status == Status::Witnessed);

    let p = NdsSpec::product(vec![f.clone(), g.clone()]).unwrap();
    let (uu, vv) = (BasicOpen::Rect(vec![u.clone(), u.clone()]), BasicOpen::Rect(vec![v.clone(), v.clone()]));
    let hs = HitEngine::new(&p, 512).unwrap().set(SetTest::Hitting { u: uu.clone(), v: vv.clone() }).unwrap();
    c.check("N(U×U, V×V) empty on [1, 512]", hs.members.is_empty());
    c.check("hand oracle agrees", oracle_hits(&hand_prefixes(&p, 512), &uu, &vv).is_empty());

    // even times: the base is the identity; odd times: the adversary is
    let fl = derive_exponent_law(&f, 2048).unwrap().expect("base law");
    c.check("even n: base exponent {0}", fl.values_on_class(2, 0) == Some(BTreeSet::from([0])));
    c.check("odd n <= 512: adversary exponent 0", (0..256u64).all(|m| law.eval(2 * m + 1) == 0));
    let ge = shift_exponents(&g, 512);
    c.check("adversary law matches hand-summed exponents", (1..=512u64).all(|n| law.eval(n) == ge[n as usize]));

    let (gp, _) = build_progression_adversary(4).unwrap();
    let pp = NdsSpec::product(vec![f, gp]).unwrap();
    let vp = c.verdict("base × progression adversary", &pp, PropertyKind::Transitive, 1, 512);
    c.check(
        "infinite adversary: product transitivity refuted structurally",
        vp.status == Status::Refuted && is_structural(&vp),
    );
    c.finish();
}

#[test]
fn criterion_05_odd_even_shift() {
    let mut c = Criterion::new(5, "odd/even shift: eventual gap 2, weakly mixing, not multi-transitive");
    let f = sys(&doc("example-3.6"), "F");
    let v = c.verdict("F", &f, PropertyKind::SyndeticallyTransitive, 2, 200);
    c.check("syndetically transitive witnessed, H = 200", v.status == Status::Witnessed);
    let gap = v.gaps().map(|g| g.eventual_max_gap);
    c.check(format!("eventual max gap {gap:?} = 2"), gap == Some(2));

    // oracle: the largest gap in [100, 200] over all pairs is 2
    let pre = hand_prefixes(&f, 200);
    let basis = enumerate_basis(f.space(), 2);
    let mut worst = 0;
    for u in &basis {
        for w in &basis {
            let tail: Vec<u64> = oracle_hits(&pre, u, w).into_iter().filter(|&n| n >= 100).collect();
            worst = worst.max(tail.windows(2).map(|p| p[1] - p[0]).max().unwrap_or(u64::MAX));
        }
    }
    c.check(format!("hand oracle eventual gap {worst} = 2"), worst == 2);

    let v = c.verdict("F", &f, PropertyKind::WeaklyMixing { order: 2 }, 2, 512);
    c.check("weakly-mixing:2 witnessed", v.status == Status::Witnessed);
    let v = c.verdict("F", &f, PropertyKind::MultiTransitive { m_max: 2 }, 2, 512);
    c.check("multi-transitive:2 refuted structurally", v.status == Status::Refuted && is_structural(&v));
    c.finish();
}

#[test]
fn criterion_06_power_supported_rotation() {
    let mut c = Criterion::new(6, "circle: dense periodic points, transitive at 3^k, not syndetic");
    let g = sys(&doc("example-3.8"), "G");
    let v = c.verdict("G", &g, PropertyKind::DensePeriodicPoints, 2, 512);
    c.check("dense periodic points witnessed", v.status == Status::Witnessed);
    if let Evidence::Witnesses { entries, .. } = &v.evidence {
        c.check("every basis arc holds a 2-periodic point", entries.iter().all(|e| e.time == 2));
    }
    let pre = hand_prefixes(&g, 512);
    c.check("C(2n) = 0 for 2n <= 512", (1..=256).all(|m| matches!(pre[2 * m], Prefix::Rot(0))));

    let powers: BTreeSet<u64> = (0..=7).map(|k| 3u64.pow(k)).collect();
    let v = c.verdict("G", &g, PropertyKind::Transitive, 2, 512);
    c.check("transitive witnessed", v.status == Status::Witnessed);
    let times: BTreeSet<u64> = match &v.evidence {
        Evidence::Witnesses { entries, .. } => entries.iter().map(|e| e.time).collect(),
        _ => BTreeSet::new(),
    };
    c.check(format!("witness times {times:?} within {{3^k : k <= 7}}"), !times.is_empty() && times.is_subset(&powers));
    c.check(
        "prefix map moves only at 3^k",
        (1..=512usize).all(|n| matches!(pre[n], Prefix::Rot(0)) || powers.contains(&(n as u64))),
    );

    let v = c.verdict("G", &g, PropertyKind::SyndeticallyTransitive, 2, 512);
    c.check("syndetically transitive refuted structurally", v.status == Status::Refuted && is_structural(&v));
    c.finish();
}

#[test]
fn criterion_07_multi_but_not_thick_sensitivity() {
    let mut c = Criterion::new(7, "odd/even shift: multi-sensitive, not thickly sensitive");
    let f = sys(&doc("example-3.9"), "F");
    let half = rat(1, 2);
    let cfg = CheckConfig::new(3, 128);
    c.check("tuples up to m = 3", cfg.multi_m == 3);
    let v = c.verdict("F", &f, PropertyKind::MultiSensitive { delta: half.clone() }, 3, 128);
    c.check("multi-sensitive:1/2 witnessed", v.status == Status::Witnessed);
    let v = c.verdict("F", &f, PropertyKind::ThicklySensitive { delta: half.clone() }, 3, 128);
    c.check("thickly-sensitive:1/2 refuted structurally", v.status == Status::Refuted && is_structural(&v));
    let e = shift_exponents(&f, 128);
    c.check("even times are the identity", (1..=64).all(|m| e[2 * m] == 0));
    // diam of a width-w cylinder: the two fills disagree everywhere outside
    for w in 3..=8i64 {
        let word = vec![0u8; (2 * w + 1) as usize];
        let a = Point::BiWord(BiWord::from_window(-w, word.clone(), 0));
        let b = Point::BiWord(BiWord::from_window(-w, word, 1));
        let d = distance(f.space(), &a, &b).unwrap();
        let want = BigRational::new(BigInt::from(2), BigInt::from(2).pow((w) as u32));
        c.check(format!("diam at w = {w} is 2^(1-w) < 1/2"), d.upper() == &want && want < half);
    }
    c.finish();
}

#[test]
fn criterion_08_consistency_of_common_hitting_sets() {
    let mut c = Criterion::new(8, "witnessed weakly-mixing and multi-transitive systems: >= 10 common hits to 2048");
    for s in corpus::scenarios() {
        let d = s.document();
        for dir in &d.checks {
            if dir.expect != Some(Status::Witnessed) {
                continue;
            }
            let prop = match &dir.property {
                PropertyKind::WeaklyMixing { .. } => PropertyKind::WeaklyMixing { order: 2 },
                PropertyKind::MultiTransitive { m_max } => PropertyKind::MultiTransitive { m_max: *m_max },
                _ => continue,
            };
            let spec = sys(&d, &dir.system);
            let cfg = corpus::directive_config(dir);
            let label = format!("{}/{} {prop}", s.name, dir.system);
            match hitting_infinity_consistency(&spec, &prop, &cfg, 2048, 10) {
                Ok(rep) => {
                    c.check(&label, rep.ok);
                    c.note(format!(
                        "{label}: {} minimal tuples (every other tuple contains one), 10th member <= {}, censored {}",
                        rep.tuples, rep.max_kth, rep.censored
                    ));
                }
                Err(e) => {
                    c.check(format!("{label}: {e}"), false);
                }
            }
        }
    }
    c.check("some systems covered", c.notes.len() >= 4);
    c.finish();
}

#[test]
fn criterion_09_nested_construction_and_li_yorke_scan() {
    let mut c = Criterion::new(9, "nested construction K = 4 and Li-Yorke scan");
    let s = sys(&doc("theorem-3.4-construction"), "S");
    let zero = Point::BiWord(BiWord::constant(0));
    let one = Point::BiWord(BiWord::constant(1));
    match lemma21_construct(&s, &zero, &one, 4, 256).unwrap() {
        Lemma21Outcome::Success(k) => {
            c.check("16 witnesses", k.witnesses.len() == 16);
            c.check("times strictly increase", k.times.windows(2).all(|w| w[0] < w[1]));
            let words: BTreeSet<&str> = k.witnesses.iter().map(|w| w.word.as_str()).collect();
            c.check("every {A,B}-word of length 4 appears once", words.len() == 16);
            c.check("exact verification", verify_construction(&s, &zero, &one, &k).is_ok());
            c.note(format!("times {:?}", k.times));
        }
        Lemma21Outcome::Failure { level, word, .. } => {
            c.check(format!("construction failed at level {level} on {word}"), false);
        }
    }

    let pairs = sparse_tail_pairs(&[24, 32, 48, 64]);
    let cfg = ScanConfig::default();
    c.check(
        "thresholds (2^-10, 1/2), H = 4096",
        cfg.eps_low == rat(1, 1024) && cfg.delta_high == half() && cfg.horizon == 4096,
    );
    let reps = li_yorke_scan(&s, &pairs, &cfg).unwrap();
    let q = reps.iter().filter(|r| r.qualifies).count();
    c.check(format!("{q} qualifying pairs >= 4"), q >= 4);
    // distances at the reported times, from the shifted words directly
    for (r, (x, y)) in reps.iter().zip(&pairs) {
        let (Point::BiWord(x), Point::BiWord(y)) = (x, y) else { unreachable!() };
        let at = |n: u64| x.shifted(n as i64).distance(&y.shifted(n as i64));
        if let (Some(lo), Some(hi)) = (r.close_at, r.far_at) {
            c.check(
                format!("pair {}: d at {lo} < eps, d at {hi} > delta", r.pair.1),
                at(lo) < cfg.eps_low && at(hi) > cfg.delta_high && lo >= 2048 && hi >= 2048,
            );
        }
    }
    c.finish();
}

fn half() -> BigRational {
    rat(1, 2)
}

#[test]
fn criterion_10_syndetic_sensitivity_of_the_shift() {
    let mut c = Criterion::new(10, "shift: syndetically transitive and sensitive, gap <= M1 + M2");
    let s = sys(&doc("theorem-3.18"), "S");
    let v = c.verdict("S", &s, PropertyKind::SyndeticallyTransitive, 2, 512);
    c.check("syndetically transitive witnessed", v.status == Status::Witnessed);
    let v = c.verdict("S", &s, PropertyKind::SyndeticallySensitive { delta: rat(1, 4) }, 2, 512);
    c.check("syndetically-sensitive:1/4 witnessed", v.status == Status::Witnessed);
    let checker_gap = v.gaps().map(|g| g.max_gap).unwrap_or(u64::MAX);
    let (m1, m2, observed) = syndetic_sensitivity_bounds(&s, 2, 512).unwrap();
    c.check(format!("observed gap {observed} <= M1 + M2 = {m1} + {m2}"), observed <= m1 + m2);
    c.check(format!("checker gap {checker_gap} <= M1 + M2"), checker_gap <= m1 + m2);
    // σ^n[w@-2] fixes indices -2-n..=2-n; over two symbols its diameter is
    // the weight of the free indices
    let diam = |n: i64| -> BigRational {
        let fixed = |i: i64| (-2 - n..=2 - n).contains(&i);
        let inner: BigRational = (-80..=80i64)
            .filter(|&i| !fixed(i))
            .map(|i| BigRational::new(BigInt::from(1), BigInt::from(2).pow(i.unsigned_abs() as u32)))
            .sum();
        inner
    };
    // indices beyond 80 weigh under 2^-78, far from the 1/4 threshold
    let members: Vec<u64> = (1..=512u64).filter(|&n| diam(n as i64) > rat(1, 4)).collect();
    let mut padded = vec![0];
    padded.extend(&members);
    padded.push(513);
    let oracle_gap = padded.windows(2).map(|w| w[1] - w[0]).max().unwrap();
    c.check(format!("hand separation gap {oracle_gap} equals observed"), oracle_gap == observed);
    let engine = HitEngine::new(&s, 512).unwrap();
    let same = enumerate_basis(s.space(), 2)
        .iter()
        .all(|u| engine.members(&SetTest::Separation { u: u.clone(), delta: rat(1, 4) }).unwrap() == members);
    c.check("engine separation sets equal the hand sets", same);
    c.note(format!("M1 = {m1}, M2 = {m2}, observed = {observed}"));
    c.finish();
}

/// Cover bound of a finite system: the least `M <= h` with every orbit
/// `f_1^1 x, ..., f_1^M x` covering the space, from hand-built prefixes.
fn cover_bound(pre: &[Prefix], points: u32) -> Option<u64> {
    let mut worst = 0;
    for x in 1..=points {
        let mut seen = BTreeSet::new();
        let m = (1..pre.len()).find(|&i| {
            let Prefix::Table(t) = &pre[i] else { panic!() };
            seen.insert(t[x as usize - 1]);
            seen.len() == points as usize
        })?;
        worst = worst.max(m as u64);
    }
    Some(worst)
}

fn random_surjective_system(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(4..=6u32);
    let perm = |rng: &mut ChaCha8Rng| {
        let mut p: Vec<u32> = (1..=n).collect();
        p.shuffle(rng);
        let pairs: Vec<String> = p.iter().enumerate().map(|(i, v)| format!("{}->{v}", i + 1)).collect();
        format!("table{{{}}}", pairs.join(", "))
    };
    let mut src = format!("space finite({n});\nsystem R {{\n");
    for i in 1..=8 {
        src.push_str(&format!("  at {i}: {};\n", perm(rng)));
    }
    src.push_str(&format!("  else: {};\n}}\n", perm(rng)));
    src
}

#[test]
fn criterion_11_strong_transitivity_and_tails() {
    let mut c = Criterion::new(11, "strong transitivity agrees between f and its tails, k <= 4");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut cases = vec![("3-cycle".to_string(), sys(&doc("theorem-final-strong"), "C"))];
    for i in 1..=2 {
        let src = random_surjective_system(&mut rng);
        cases.push((format!("random {i}"), sys(&parse(&src).unwrap(), "R")));
        c.note(format!("random {i}: {}", src.replace('\n', " ")));
    }
    for (name, f) in &cases {
        let SpaceDesc::Finite { point_count } = *f.space() else { panic!() };
        let s = c.verdict(name, f, PropertyKind::SurjectiveSequence, 1, 64);
        c.check(format!("{name} surjective"), s.status == Status::Witnessed);
        let vf = c.verdict(name, f, PropertyKind::StronglyTransitive, 1, 64);
        let mf = vf.max_time();
        c.note(format!("{name}: strongly-transitive {}, cover bound {mf:?}", vf.status));
        c.check(
            format!("{name}: checker bound {mf:?} matches hand oracle"),
            mf == cover_bound(&hand_prefixes(f, 64), point_count),
        );
        for k in 2..=4u64 {
            let t = NdsSpec::tail(f.clone(), k).unwrap();
            let vt = c.verdict(&format!("{name} tail {k}"), &t, PropertyKind::StronglyTransitive, 1, 64);
            c.check(format!("{name} tail {k}: {} = {}", vt.status, vf.status), vt.status == vf.status);
            let mt = vt.max_time();
            c.check(
                format!("{name} tail {k}: bound {mt:?} matches hand oracle"),
                mt == cover_bound(&hand_prefixes(&t, 64), point_count),
            );
            if let (Some(m), Some(mk)) = (mf, mt) {
                c.check(format!("{name} tail {k}: M_k = {mk} >= M - k"), m <= mk + k);
                c.check(format!("{name} tail {k}: M_k = {mk} <= M + k = {}", m + k), mk <= m + k);
            }
            // the step of the proof: f_k^i(f_1^{k-1} U) = f_1^{i+k-1}(U)
            let (pf, pt) = (hand_prefixes(f, 64 + k), hand_prefixes(&t, 64));
            let shifted = (1..=64usize).all(|i| {
                let (Prefix::Table(a), Prefix::Table(b), Prefix::Table(h)) =
                    (&pf[i + k as usize - 1], &pt[i], &pf[k as usize - 1])
                else {
                    panic!()
                };
                (0..point_count as usize).all(|x| a[x] == b[h[x] as usize - 1])
            });
            c.check(format!("{name} tail {k}: f_k^i after f_1^(k-1) equals f_1^(i+k-1)"), shifted);
        }
    }
    // outside the criterion: the forward direction fails without constant terms
    let d = doc("example-3.5");
    let f = sys(&d, "F");
    let vf = check_property(&f, &PropertyKind::StronglyTransitive, &CheckConfig::new(1, 64)).unwrap();
    let vt = check_property(&NdsSpec::tail(f, 2).unwrap(), &PropertyKind::StronglyTransitive, &CheckConfig::new(1, 64))
        .unwrap();
    c.note(format!(
        "finding: three 3-cycles then id (surjective, feebly open) is {} while its tail from 2 is {}",
        vf.status, vt.status
    ));
    c.finish();
}

// ---- criterion 12: engine oracles ---------------------------------------

fn prefix_oracle(c: &mut Criterion) {
    for (name, spec) in corpus_systems() {
        let hand = hand_prefixes(&spec, 1024);
        let mut step = NormalMap::identity(spec.space());
        let mut ok = true;
        for n in 1..=1024u64 {
            step = step.then(&NormalMap::from_term(spec.space(), &spec.eval_term(n).unwrap()).unwrap());
            let fast = spec.prefix_compose(n).unwrap();
            ok &= fast == step && hand[n as usize].same_as(&fast);
        }
        c.check(format!("{name}: prefix_compose = stepwise, n <= 1024"), ok);
    }
}

fn hitting_oracle(c: &mut Criterion) {
    let mut undecided = 0u64;
    let mut compared = 0u64;
    for (name, spec) in corpus_systems() {
        let pre = hand_prefixes(&spec, 256);
        let engine = HitEngine::new(&spec, 256).unwrap();
        let rs: &[u32] = match spec.space() {
            SpaceDesc::Shift { .. } => &[1, 2],
            SpaceDesc::Product(_) => &[1],
            _ => &[1, 2, 3],
        };
        let mut ok = true;
        for &r in rs {
            let basis = enumerate_basis(spec.space(), r);
            for u in &basis {
                for v in &basis {
                    let test = SetTest::Hitting { u: u.clone(), v: v.clone() };
                    let members = engine.members(&test).unwrap();
                    for (n, p) in pre.iter().enumerate().skip(1) {
                        match p.hits(SQRT2M1, u, v) {
                            Some(b) => {
                                compared += 1;
                                ok &= members.contains(&(n as u64)) == b;
                            }
                            None => undecided += 1,
                        }
                    }
                }
            }
        }
        c.check(format!("{name}: hitting sets = brute force, H = 256"), ok);
    }
    c.note(format!("hitting oracle: {compared} membership decisions compared, {undecided} too close for floats"));
}

/// Random valid NDSL source text with noisy layout.
fn random_document(rng: &mut ChaCha8Rng) -> String {
    let seps = [" ", "  ", "\n", " \t", " # note\n", " // note\n"];
    let mut toks: Vec<String> = Vec::new();
    let push = |toks: &mut Vec<String>, s: &str| toks.push(s.to_string());
    let space = rng.gen_range(0..3);
    let n_points = rng.gen_range(2..=6u32);
    match space {
        0 => toks.push(format!("space shift({});", rng.gen_range(2..=4))),
        1 => toks.push(format!("space finite({n_points});")),
        _ => {
            if rng.gen_bool(0.5) {
                push(&mut toks, "space circle(sqrt2m1);")
            } else {
                let den = rng.gen_range(3..=50u64);
                let num = rng.gen_range(1..den);
                toks.push(format!("space circle(alpha({num}/{den} +- 1/2^{}));", rng.gen_range(66..=100)));
            }
        }
    }
    let map = |rng: &mut ChaCha8Rng, binder: Option<&str>| -> String {
        let k = rng.gen_range(-3..=3i64);
        let exp = match (binder, rng.gen_range(0..4)) {
            (Some(b), 0) => format!("^{b}"),
            (Some(b), 1) => format!("^-{b}"),
            (Some(b), 2) => format!("^{}{b}", rng.gen_range(2..=4)),
            _ if k == 1 && rng.gen_bool(0.5) => String::new(),
            _ => format!("^{k}"),
        };
        match (space, rng.gen_range(0..4)) {
            (_, 0) => "id".into(),
            (0, _) => format!("sigma{exp}"),
            (1, _) => {
                let pairs: Vec<String> =
                    (1..=n_points).map(|i| format!("{i}->{}", rng.gen_range(1..=n_points))).collect();
                format!("table{{{}}}", pairs.join(","))
            }
            _ => format!("rot{exp}"),
        }
    };
    let mut names: Vec<String> = Vec::new();
    for s in 0..rng.gen_range(1..=4) {
        let name = format!("S{s}");
        if !names.is_empty() && rng.gen_bool(0.3) {
            let base = names.choose(rng).unwrap().clone();
            let body = match rng.gen_range(0..3) {
                0 => format!("tail({base}, {})", rng.gen_range(1..=5)),
                1 => format!("iterate({base}, {})", rng.gen_range(1..=5)),
                _ => format!("product({base}, {})", names.choose(rng).unwrap()),
            };
            toks.push(format!("system {name} = {body};"));
        } else {
            let mut rules = Vec::new();
            // an arithmetic progression of step d plus singletons off it
            let d = rng.gen_range(2..=4u64);
            let a = rng.gen_range(1..=d);
            let with_ap = rng.gen_bool(0.6);
            if with_ap {
                let style = rng.gen_range(0..3);
                let (pat, b) = match (style, d, a) {
                    (0, 2, 1) => ("odd(k)".to_string(), Some("k")),
                    (0, 2, 2) => ("even(k)".to_string(), Some("k")),
                    (1, _, _) => (format!("ap({a},{d})"), None),
                    _ => (format!("ap({a},{d},k)"), Some("k")),
                };
                rules.push(format!("at {pat}: {};", map(rng, b)));
            }
            if rng.gen_bool(0.3) && !(with_ap && d == 2) {
                rules.push(format!("at pow(2,{},j): {};", if with_ap { 1000 } else { 0 }, map(rng, Some("j"))));
            }
            let mut singles = BTreeSet::new();
            for _ in 0..rng.gen_range(0..3) {
                let i = rng.gen_range(1..=30u64);
                if !(with_ap && i >= a && (i - a) % d == 0) {
                    singles.insert(i);
                }
            }
            for i in singles {
                rules.push(format!("at {i}: {};", map(rng, None)));
            }
            rules.shuffle(rng);
            if rng.gen_bool(0.5) {
                let at = rng.gen_range(0..=rules.len());
                rules.insert(at, format!("else: {};", map(rng, None)));
            }
            toks.push(format!("system {name} {{"));
            toks.extend(rules);
            push(&mut toks, "}");
        }
        names.push(name);
    }
    let props = [
        "transitive",
        "weakly-mixing:3",
        "mixing",
        "mildly-mixing",
        "totally-transitive:2",
        "strongly-transitive",
        "multi-transitive:4",
        "syndetically-transitive",
        "minimal",
        "feeble-open",
        "dense-periodic-points",
        "almost-periodic-point",
        "almost-periodic-point:1",
        "sensitive:1/2",
        "syndetically-sensitive:2/8",
        "thickly-sensitive:1",
        "multi-sensitive:3/4",
        "surjective-sequence",
    ];
    for _ in 0..rng.gen_range(0..4) {
        let mut opts = Vec::new();
        if rng.gen_bool(0.5) {
            opts.push(format!("horizon {}", rng.gen_range(1..=4096)));
        }
        if rng.gen_bool(0.5) {
            opts.push(format!("basis {}", rng.gen_range(1..=8)));
        }
        if rng.gen_bool(0.5) {
            opts.push(format!("expect {}", ["witnessed", "refuted", "inconclusive"].choose(rng).unwrap()));
        }
        opts.shuffle(rng);
        toks.push(format!("check {} {} {};", names.choose(rng).unwrap(), props.choose(rng).unwrap(), opts.join(" ")));
    }
    let mut out = String::new();
    for t in toks {
        out.push_str(&t);
        out.push_str(seps.choose(rng).unwrap());
    }
    out
}

fn round_trip_oracle(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut valid, mut rejected, mut ok) = (0u32, 0u32, true);
    let mut first_failure = None;
    let mut reasons = std::collections::BTreeMap::new();
    while valid < 10_000 && rejected < 10_000 {
        let src = random_document(&mut rng);
        let d = match parse(&src) {
            Ok(d) => d,
            Err(diags) => {
                rejected += 1;
                for d in diags {
                    let why =
                        if d.message.contains("both match") { "overlapping rules".to_string() } else { d.message };
                    *reasons.entry(why).or_insert(0u32) += 1;
                }
                continue;
            }
        };
        valid += 1;
        let text = print(&d);
        let good = parse(&text).is_ok_and(|again| again == d && print(&again) == text);
        if !good && first_failure.is_none() {
            first_failure = Some(src);
        }
        ok &= good;
    }
    c.check(format!("{valid} random documents generated (>= 10^4)"), valid >= 10_000);
    c.check("print then parse is the identity", ok);
    c.note(format!("round trip: {valid} documents, {rejected} generated texts rejected by the parser: {reasons:?}"));
    if let Some(src) = first_failure {
        c.note(format!("first failing document: {src:?}"));
    }
}

fn hierarchy_oracle(c: &mut Criterion) {
    for (name, spec) in corpus_systems() {
        let cfg = CheckConfig::new(1, 128);
        let st = |p: PropertyKind| check_property(&spec, &p, &cfg).map(|v| v.status).unwrap_or(Status::Inconclusive);
        let mixing = st(PropertyKind::Mixing);
        let wm2 = st(PropertyKind::WeaklyMixing { order: 2 });
        let wm3 = st(PropertyKind::WeaklyMixing { order: 3 });
        let mt = st(PropertyKind::MultiTransitive { m_max: 2 });
        let tr = st(PropertyKind::Transitive);
        let ok = (mixing != Status::Witnessed || wm2 != Status::Refuted)
            && (wm3 != Status::Witnessed || wm2 == Status::Witnessed)
            && (mt != Status::Witnessed || tr == Status::Witnessed);
        c.check(format!("{name}: hierarchy coherent (mixing {mixing}, wm2 {wm2}, wm3 {wm3}, mt2 {mt}, tr {tr})"), ok);
    }
}

#[test]
fn criterion_12_engine_oracles() {
    let mut c = Criterion::new(12, "prefix composition, hitting sets, NDSL round trip, hierarchy coherence");
    type Part = fn(&mut Criterion);
    let parts: [(&str, Part); 4] = [
        ("prefix composition", prefix_oracle),
        ("hitting sets", hitting_oracle),
        ("round trip", round_trip_oracle),
        ("hierarchy", hierarchy_oracle),
    ];
    for (name, part) in parts {
        let t = Instant::now();
        part(&mut c);
        c.note(format!("{name}: {:.1}s", t.elapsed().as_secs_f64()));
    }
    c.finish();
}
