use std::collections::BTreeSet;
use std::fmt::Display;

use num::{BigInt, BigRational};
use serde::Serialize;
use serde_json::json;

use super::OpOutcome;
use crate::chaos::{
    lemma21_construct, li_yorke_scan, sparse_tail_pairs, verify_construction, Lemma21Outcome, ScanConfig,
};
use crate::checkers::{build_gap_adversary, check_property, CheckConfig, Evidence, PropertyKind, Status};
use crate::convergence::{check_collective_convergence, check_uniform_convergence, equicontinuity_modulus};
use crate::hitting::{gap_stats, HitEngine, SetTest};
use crate::maps::{derive_exponent_law, orbit, FiniteTable, MapTerm, NdsSpec, PrefixTable, TermTemplate};
use crate::ndsl::NdslDocument;
use crate::spaces::biword::BiWord;
use crate::spaces::{ball_cylinder, enumerate_basis, window_for_radius, BasicOpen, Point, SpaceDesc};

type Res<T> = Result<T, String>;

fn outcome<T: PartialEq + Display + Serialize>(
    label: &str,
    claim: &'static str,
    expected: T,
    observed: Res<T>,
) -> OpOutcome {
    match observed {
        Ok(v) => OpOutcome {
            label: label.to_string(),
            claim,
            expected: expected.to_string(),
            observed: v.to_string(),
            pass: v == expected,
            evidence: serde_json::to_value(&v).unwrap_or_default(),
        },
        Err(e) => OpOutcome {
            label: label.to_string(),
            claim,
            expected: expected.to_string(),
            observed: format!("error: {e}"),
            pass: false,
            evidence: json!({ "error": e }),
        },
    }
}

fn sys(doc: &NdslDocument, name: &str) -> Res<NdsSpec> {
    doc.compile(name).map_err(|e| e.to_string())
}

fn set_text(s: &BTreeSet<i64>) -> String {
    let v: Vec<String> = s.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

/// Values of the exponent law on `n ≡ r (mod m)`, validated to 2048.
fn law_class(spec: &NdsSpec, m: u64, r: u64) -> Res<String> {
    let law = derive_exponent_law(spec, 2048).map_err(|e| e.to_string())?.ok_or("no exponent law")?;
    law.values_on_class(m, r).map(|s| set_text(&s)).ok_or_else(|| "unbounded values".into())
}

fn table(v: &[u32]) -> MapTerm {
    MapTerm::FiniteFn(FiniteTable::new(v.to_vec()).expect("valid table"))
}

fn cyl(start: i64, word: &[u8]) -> BasicOpen {
    BasicOpen::Cylinder { start, word: word.to_vec() }
}

pub(super) fn none(_: &NdslDocument) -> Vec<OpOutcome> {
    Vec::new()
}

pub(super) fn alternating_shift(doc: &NdslDocument) -> Vec<OpOutcome> {
    vec![outcome(
        "exponent of f_1^n on even n",
        "f_1^{2t} = id for every t",
        "{0}".to_string(),
        sys(doc, "F").and_then(|f| law_class(&f, 2, 0)),
    )]
}

fn convergence_ops(doc: &NdslDocument, limit: MapTerm, r0: u64) -> Vec<OpOutcome> {
    let f = sys(doc, "F");
    let uni = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let v = check_uniform_convergence(f, &limit, 64).map_err(|e| e.to_string())?;
        Ok(format!("{} r0={}", v.status, v.r0.map_or("-".into(), |r| r.to_string())))
    });
    let col = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let v = check_collective_convergence(f, &limit, 64, 4).map_err(|e| e.to_string())?;
        Ok(format!("{} r0={}", v.status, v.r0.map_or("-".into(), |r| r.to_string())))
    });
    vec![
        outcome("uniform convergence of F", "f_n equals the limit from r0 on", format!("witnessed r0={r0}"), uni),
        outcome(
            "collective convergence of F, windows up to 4",
            "every window from r0 on is a power of the limit",
            format!("witnessed r0={r0}"),
            col,
        ),
    ]
}

pub(super) fn constant_limit(doc: &NdslDocument) -> Vec<OpOutcome> {
    convergence_ops(doc, table(&[2, 2]), 2)
}

pub(super) fn cycle_then_identity(doc: &NdslDocument) -> Vec<OpOutcome> {
    let f = sys(doc, "F");
    let hits = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let u = BasicOpen::finite_set([1]).map_err(|e| e.to_string())?;
        let v = BasicOpen::finite_set([2]).map_err(|e| e.to_string())?;
        let hs = HitEngine::new(f, 512).and_then(|e| e.set(SetTest::Hitting { u, v })).map_err(|e| e.to_string())?;
        Ok(format!("{:?}", hs.members))
    });
    let visits = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let o = orbit(f, &Point::FiniteId(1), 512).map_err(|e| e.to_string())?;
        let t: Vec<usize> =
            o.iter().enumerate().skip(1).filter(|(_, p)| **p == Point::FiniteId(2)).map(|(n, _)| n).collect();
        Ok(format!("{t:?}"))
    });
    let mut out = vec![
        outcome("N({1}, {2}) on [1, 512]", "the only hitting time is 1", "[1]".to_string(), hits),
        outcome("times n <= 512 with f_1^n(1) = 2", "the orbit of 1 enters {2} once", "[1]".to_string(), visits),
    ];
    out.extend(convergence_ops(doc, MapTerm::Identity, 4));
    out
}

pub(super) fn odd_even_shift(doc: &NdslDocument) -> Vec<OpOutcome> {
    let f = sys(doc, "F");
    let gap = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let v = check_property(f, &PropertyKind::SyndeticallyTransitive, &CheckConfig::new(2, 200))
            .map_err(|e| e.to_string())?;
        v.gaps().map(|g| g.eventual_max_gap).ok_or_else(|| format!("no gap summary ({})", v.status))
    });
    let col = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let v = check_collective_convergence(f, &MapTerm::Identity, 64, 4).map_err(|e| e.to_string())?;
        Ok(v.status.to_string())
    });
    let eq = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let one = BigRational::from_integer(BigInt::from(1));
        let e = equicontinuity_modulus(f, &one, 1, 64).map_err(|e| e.to_string())?;
        Ok(e.unbounded)
    });
    vec![
        outcome("eventual max gap of hitting sets, H = 200", "members recur every second step", 2u64, gap),
        outcome("collective convergence to id, K = 4, H = 64", "window exponents grow", "refuted".to_string(), col),
        outcome("equicontinuity modulus unbounded", "exponents m at n = 2m - 1", true, eq),
    ]
}

pub(super) fn disjoint_movers(doc: &NdslDocument) -> Vec<OpOutcome> {
    let both = sys(doc, "F").and_then(|f| {
        let g = sys(doc, "G")?;
        let tf = PrefixTable::build(&f, 512).map_err(|e| e.to_string())?;
        let tg = PrefixTable::build(&g, 512).map_err(|e| e.to_string())?;
        Ok((1..=512u64).filter(|&n| !tf.get(n).is_identity() && !tg.get(n).is_identity()).count() as u64)
    });
    vec![outcome(
        "times n <= 512 where neither factor is the identity",
        "f_1^{2m} = id and g_1^{2m-1} = id",
        0u64,
        both,
    )]
}

pub(super) fn power_rotation(doc: &NdslDocument) -> Vec<OpOutcome> {
    let g = sys(doc, "G");
    let powers: BTreeSet<u64> = (0..=7).map(|k| 3u64.pow(k)).collect();
    let times = g.as_ref().map_err(Clone::clone).and_then(|g| {
        let v = check_property(g, &PropertyKind::Transitive, &CheckConfig::new(2, 512)).map_err(|e| e.to_string())?;
        let Evidence::Witnesses { entries, .. } = &v.evidence else {
            return Err(format!("no witnesses ({})", v.status));
        };
        Ok(entries.iter().all(|e| powers.contains(&e.time)))
    });
    let even = g.as_ref().map_err(Clone::clone).and_then(|g| {
        let t = PrefixTable::build(g, 512).map_err(|e| e.to_string())?;
        Ok((1..=256u64).all(|m| t.get(2 * m).is_identity()))
    });
    vec![
        outcome("transitivity witness times lie in {3^k : k <= 7}", "only 3^k moves anything", true, times),
        outcome("f_1^{2m} = id for 2m <= 512", "every point is 2-periodic", true, even),
    ]
}

/// `f` at the triangular indices `1, 3, 6, 10, ...` up to `horizon`, the
/// identity elsewhere, so the identity runs grow by one each time.
pub fn interleave(space: SpaceDesc, f: TermTemplate, horizon: u64) -> Result<NdsSpec, String> {
    let rules = (1u64..)
        .map(|k| k * (k + 1) / 2)
        .take_while(|&t| t <= horizon)
        .map(|t| crate::maps::Rule::new(crate::maps::IndexPattern::Equals(t), f.clone()))
        .collect();
    NdsSpec::rules(space, rules, TermTemplate::Identity, horizon).map_err(|e| e.to_string())
}

/// Prefix maps are `f^{j(n)}` with `j(n) = #{k : k(k+1)/2 <= n}`, and the
/// run of equal prefixes after the j-th application has length `j`.
fn interleave_shape(space: SpaceDesc, f: TermTemplate, h: u64) -> Res<bool> {
    let g = interleave(space.clone(), f.clone(), h)?;
    let t = PrefixTable::build(&g, h).map_err(|e| e.to_string())?;
    let step = crate::maps::NormalMap::from_term(&space, &f.instantiate(1)).map_err(|e| e.to_string())?;
    let mut power = crate::maps::NormalMap::identity(&space);
    let mut j = 0u64;
    for n in 1..=h {
        if (j + 1) * (j + 2) / 2 == n {
            j += 1;
            power = power.then(&step);
        }
        if t.get(n) != &power {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(super) fn interleaved_sensitivity(_: &NdslDocument) -> Vec<OpOutcome> {
    let shift = interleave_shape(SpaceDesc::shift(), TermTemplate::ShiftPow(crate::maps::Exponent::Const(1)), 512);
    let cycle = FiniteTable::new(vec![2, 3, 1]).map_err(|e| e.to_string()).and_then(|c| {
        interleave_shape(SpaceDesc::finite(3).map_err(|e| e.to_string())?, TermTemplate::FiniteFn(c), 512)
    });
    vec![
        outcome("interleaving with f = σ: prefix maps f^{j(n)}", "identity runs grow by one", true, shift),
        outcome("interleaving with f = 3-cycle: prefix maps f^{j(n)}", "the shape does not depend on f", true, cycle),
    ]
}

pub(super) fn adversary(doc: &NdslDocument) -> Vec<OpOutcome> {
    let misses: Vec<u64> = (1..=127).map(|k| 4 * k).collect();
    let built = build_gap_adversary(&misses).map_err(|e| e.to_string());
    let g_trans = built.as_ref().map_err(Clone::clone).and_then(|(g, _)| {
        let v = check_property(g, &PropertyKind::Transitive, &CheckConfig::new(1, 512)).map_err(|e| e.to_string())?;
        Ok(v.status.to_string())
    });
    let empty = built.as_ref().map_err(Clone::clone).and_then(|(g, _)| {
        let f = sys(doc, "F")?;
        let p = NdsSpec::product(vec![f, g.clone()]).map_err(|e| e.to_string())?;
        let (u, v) = (cyl(-1, &[0, 0, 0]), cyl(-1, &[1, 1, 1]));
        let test = SetTest::Hitting { u: BasicOpen::Rect(vec![u.clone(), u]), v: BasicOpen::Rect(vec![v.clone(), v]) };
        let hs = HitEngine::new(&p, 512).and_then(|e| e.set(test)).map_err(|e| e.to_string())?;
        Ok(hs.members.len() as u64)
    });
    let odd = built.as_ref().map_err(Clone::clone).map(|(_, law)| (0..256u64).all(|m| law.eval(2 * m + 1) == 0));
    vec![
        outcome(
            "gap adversary for misses 4, 8, ..., 508: transitive, r = 1, H = 512",
            "g_1^{4k} = σ^{4k}",
            "witnessed".to_string(),
            g_trans,
        ),
        outcome(
            "|N(U×U, V×V)| on [1, 512] for the product with the gap adversary",
            "no time moves both factors",
            0u64,
            empty,
        ),
        outcome(
            "base exponent on even n",
            "f_1^{2t} = id",
            "{0}".to_string(),
            sys(doc, "F").and_then(|f| law_class(&f, 2, 0)),
        ),
        outcome("gap adversary exponent on odd n <= 512", "g_1^n = id off the miss times", true, odd),
        outcome(
            "progression adversary exponent on odd n",
            "g_1^n = id at odd n",
            "{0}".to_string(),
            sys(doc, "G").and_then(|g| law_class(&g, 2, 1)),
        ),
    ]
}

#[derive(Serialize, PartialEq)]
struct GapBound {
    m1: u64,
    m2: u64,
    observed: u64,
}

impl Display for GapBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} <= {} + {}", self.observed, self.m1, self.m2)
    }
}

/// Gap bounds from the proof: `V` a ball around `1^Z` away from the fixed
/// point `0^Z`, `W` a cylinder around `0^Z` that the first `M_1` shifts
/// keep inside the zero block.
pub fn syndetic_sensitivity_bounds(spec: &NdsSpec, r: u32, h: u64) -> Res<(u64, u64, u64)> {
    let engine = HitEngine::new(spec, h).map_err(|e| e.to_string())?;
    let basis = enumerate_basis(spec.space(), r);
    let max_gap = |test: SetTest| -> Res<u64> {
        let m = engine.members(&test).map_err(|e| e.to_string())?;
        Ok(gap_stats(&m, h).0)
    };
    let w = window_for_radius(&BigRational::new(3.into(), 4.into()));
    let v = ball_cylinder(&BiWord::constant(1), w);
    let mut m1 = 0;
    for u in &basis {
        m1 = m1.max(max_gap(SetTest::Hitting { u: u.clone(), v: v.clone() })?);
    }
    let ww = ball_cylinder(&BiWord::constant(0), w + m1 as u32);
    let mut m2 = 0;
    let mut observed = 0;
    let quarter = BigRational::new(1.into(), 4.into());
    for u in &basis {
        m2 = m2.max(max_gap(SetTest::Hitting { u: u.clone(), v: ww.clone() })?);
        observed = observed.max(max_gap(SetTest::Separation { u: u.clone(), delta: quarter.clone() })?);
    }
    Ok((m1, m2, observed))
}

pub(super) fn syndetic_bounds(doc: &NdslDocument) -> Vec<OpOutcome> {
    let b = sys(doc, "S").and_then(|s| syndetic_sensitivity_bounds(&s, 2, 512));
    let ok = b.clone().map(|(m1, m2, o)| o <= m1 + m2);
    let shown = b.map(|(m1, m2, observed)| GapBound { m1, m2, observed });
    let label = match &shown {
        Ok(g) => format!("separation gap {g}"),
        Err(_) => "separation gap bound".into(),
    };
    vec![outcome(&label, "N(U, δ) has gaps at most M_1 + M_2", true, ok)]
}

pub(super) fn final_strong(doc: &NdslDocument) -> Vec<OpOutcome> {
    let m = |name: &str| -> Res<u64> {
        let s = sys(doc, name)?;
        let v = check_property(&s, &PropertyKind::StronglyTransitive, &CheckConfig::default())
            .map_err(|e| e.to_string())?;
        if v.status != Status::Witnessed {
            return Err(format!("{name} is {}", v.status));
        }
        v.max_time().ok_or_else(|| "no cover bound".into())
    };
    let bounds = m("C").and_then(|c| Ok((c, m("T2")?, m("T4")?)));
    vec![
        outcome("cover bound M of the 3-cycle", "three images cover", 3u64, bounds.clone().map(|b| b.0)),
        outcome(
            "tails: M_k <= M + k and M <= M_k + k for k = 2, 4",
            "cover bounds move by at most k",
            true,
            bounds.map(|(c, t2, t4)| t2 <= c + 2 && t4 <= c + 4 && c <= t2 + 2 && c <= t4 + 4),
        ),
    ]
}

pub(super) fn construction(doc: &NdslDocument) -> Vec<OpOutcome> {
    let zero = Point::BiWord(BiWord::constant(0));
    let one = Point::BiWord(BiWord::constant(1));
    let built =
        sys(doc, "S").and_then(|s| match lemma21_construct(&s, &zero, &one, 4, 256).map_err(|e| e.to_string())? {
            Lemma21Outcome::Success(c) => {
                verify_construction(&s, &zero, &one, &c)?;
                Ok(c.witnesses.len() as u64)
            }
            Lemma21Outcome::Failure { level, word, .. } => Err(format!("failed at level {level} on {word}")),
        });
    let id_fails = sys(doc, "I").and_then(|i| {
        Ok(match lemma21_construct(&i, &zero, &one, 1, 256).map_err(|e| e.to_string())? {
            Lemma21Outcome::Failure { level, .. } => level as u64,
            Lemma21Outcome::Success(_) => 0,
        })
    });
    let scan = sys(doc, "S").and_then(|s| {
        let r = li_yorke_scan(&s, &sparse_tail_pairs(&[24, 32, 48, 64]), &ScanConfig::default())
            .map_err(|e| e.to_string())?;
        Ok(r.iter().filter(|r| r.qualifies).count() as u64)
    });
    vec![
        outcome("verified witnesses for K = 4, H = 256", "every {A,B}-word of length 4 is realised", 16u64, built),
        outcome("identity: failing level", "the identity never carries A_1 into B_1", 1u64, id_fails),
        outcome("qualifying Li-Yorke pairs, H = 4096", "sparse tails come close and far in the tail", 4u64, scan),
    ]
}
