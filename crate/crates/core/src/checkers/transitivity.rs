use rayon::prelude::*;

use super::{
    distinct, minimal_antichain, Bits, Check, CheckConfig, CheckError, Claim, Ctx, Evidence, GapSummary, PropertyKind,
    Status, TimeSet, Verdict, WitnessEntry,
};
use crate::hitting::{excluded_residues, gap_stats, HitEngine, SetTest, MAX_MODULUS};
use crate::maps::NdsSpec;

/// Residue mask, index of a representative test, and its trace.
type MaskRow = (u32, usize, Vec<String>);

/// Witness rows beyond this are counted but not stored.
pub(super) const MAX_ENTRIES: usize = 4096;

pub(super) fn set_name(t: &SetTest) -> String {
    match t {
        SetTest::Hitting { u, v } => format!("{u} -> {v}"),
        SetTest::Separation { u, delta } => format!("{u} apart by {delta}"),
    }
}

/// Caveat attached to every enumerative witness.
pub(super) fn finite_caveat(cfg: &CheckConfig) -> String {
    format!("witnessed up to basis resolution {} and horizon {}", cfg.resolution, cfg.horizon)
}

/// Searches tuples `(test_1, ..., test_m)`, one per scale, for which the
/// laws exclude every residue of `l` modulo some `M <= 12`. Positions take
/// their tests from `tests`.
pub(super) fn cover_search(ctx: &Ctx, tests: &[SetTest], scales: &[u64]) -> Option<(Vec<usize>, u64, Vec<String>)> {
    if ctx.law_objects().is_empty() {
        return None;
    }
    let space = ctx.space();
    let mut uniq_scales: Vec<u64> = scales.to_vec();
    uniq_scales.sort_unstable();
    uniq_scales.dedup();
    for m in 1..=MAX_MODULUS {
        let full: u32 = (1u32 << m) - 1;
        // per scale: distinct masks with a representative test and traces
        let per_scale: Vec<(u64, Vec<MaskRow>)> = uniq_scales
            .iter()
            .map(|&s| {
                let rows: Vec<(u32, Vec<String>)> = tests
                    .par_iter()
                    .map(|t| {
                        let ex = excluded_residues(space, t, &ctx.law, s, m);
                        let mask = ex.iter().fold(0u32, |acc, (r, _)| acc | 1 << r);
                        (mask, ex.into_iter().map(|(_, tr)| tr).collect())
                    })
                    .collect();
                let mut masks: Vec<(u32, usize, Vec<String>)> = Vec::new();
                for (i, (mask, tr)) in rows.into_iter().enumerate() {
                    if !masks.iter().any(|(mk, _, _)| *mk == mask) {
                        masks.push((mask, i, tr));
                    }
                }
                (s, masks)
            })
            .collect();
        let options: Vec<&Vec<(u32, usize, Vec<String>)>> =
            scales.iter().map(|s| &per_scale.iter().find(|(x, _)| x == s).expect("scale").1).collect();
        let mut pick = vec![0usize; scales.len()];
        if let Some(choice) = dfs(&options, 0, 0, full, &mut pick) {
            let idx: Vec<usize> = choice.iter().enumerate().map(|(p, &c)| options[p][c].1).collect();
            let trace = choice.iter().enumerate().flat_map(|(p, &c)| options[p][c].2.clone()).collect();
            return Some((idx, m, trace));
        }
    }
    None
}

fn dfs(
    options: &[&Vec<(u32, usize, Vec<String>)>],
    pos: usize,
    acc: u32,
    full: u32,
    pick: &mut [usize],
) -> Option<Vec<usize>> {
    if pos == options.len() {
        return (acc == full).then(|| pick.to_vec());
    }
    for (c, (mask, _, _)) in options[pos].iter().enumerate() {
        pick[pos] = c;
        if let Some(r) = dfs(options, pos + 1, acc | mask, full, pick) {
            return Some(r);
        }
    }
    None
}

/// A refutation that the tuple never holds jointly, by laws or by the exact
/// cycle of a finite-state system (`scanned` is how far `l` was enumerated
/// with an empty joint set).
pub(super) fn refute_tuple(ctx: &Ctx, tuple: &[(u64, SetTest)], scanned: Option<u64>) -> Option<Evidence> {
    if let (Some(exact), Some(l)) = (ctx.exact_len(), scanned) {
        if l >= exact {
            let (start, period) = ctx.cycle.expect("cycle");
            return Some(super::Evidence::Exact {
                detail: format!(
                    "prefix maps repeat with period {period} from n = {start}; no joint time up to l = {l} covers a full cycle"
                ),
                trace: tuple.iter().map(|(j, t)| format!("scale {j}: {}", set_name(t))).collect(),
                claim: Claim::NeverJointly(tuple.to_vec()),
            });
        }
    }
    let tests: Vec<SetTest> = tuple.iter().map(|(_, t)| t.clone()).collect();
    let scales: Vec<u64> = tuple.iter().map(|(j, _)| *j).collect();
    // each position only with its own test
    for m in 1..=MAX_MODULUS {
        let mut mask = 0u32;
        let mut trace = Vec::new();
        for (j, t) in tuple {
            for (r, tr) in excluded_residues(ctx.space(), t, &ctx.law, *j, m) {
                mask |= 1 << r;
                trace.push(tr);
            }
        }
        if mask == (1u32 << m) - 1 {
            return Some(ctx.structural(
                tests.iter().map(set_name).collect(),
                format!("every residue of l mod {m} is excluded by one of the sets at its scale"),
                trace,
                Claim::NeverJointly(tuple.to_vec()),
            ));
        }
    }
    let _ = scales;
    None
}

/// Searches all tuples of `tests` (one per scale) for a law-backed cover.
pub(super) fn refute_any(ctx: &Ctx, tests: &[SetTest], scales: &[u64]) -> Option<Evidence> {
    let (idx, m, trace) = cover_search(ctx, tests, scales)?;
    let tuple: Vec<(u64, SetTest)> = scales.iter().zip(&idx).map(|(j, &i)| (*j, tests[i].clone())).collect();
    Some(ctx.structural(
        tuple.iter().map(|(j, t)| format!("scale {j}: {}", set_name(t))).collect(),
        format!("every residue of l mod {m} is excluded by one of the sets at its scale"),
        trace,
        Claim::NeverJointly(tuple),
    ))
}

/// Enumerative witness rows for single tests.
fn single_entries(tests: &[SetTest], sets: &[TimeSet], h: u64) -> (Vec<WitnessEntry>, Vec<usize>, u64) {
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    let mut max_time = 0;
    for (i, (t, s)) in tests.iter().zip(sets).enumerate() {
        match s.yes.first().filter(|&n| n <= h) {
            Some(n) => {
                max_time = max_time.max(n);
                if entries.len() < MAX_ENTRIES {
                    entries.push(WitnessEntry {
                        sets: vec![set_name(t)],
                        time: n,
                        checks: vec![Check::Test(1, t.clone())],
                    });
                }
            }
            None => missing.push(i),
        }
    }
    (entries, missing, max_time)
}

/// Transitivity over single tests; shared with plain sensitivity.
pub(super) fn each_nonempty(ctx: &Ctx, prop: &PropertyKind, tests: Vec<SetTest>) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let len = h.max(ctx.exact_len().unwrap_or(0));
    let engine = HitEngine::new(ctx.spec, len)?;
    let sets = ctx.time_sets(&engine, &tests, len)?;
    let (entries, missing, max_time) = single_entries(&tests, &sets, h);
    if missing.is_empty() {
        return Ok(Verdict::new(
            prop,
            Status::Witnessed,
            Evidence::Witnesses {
                resolution: ctx.cfg.resolution,
                horizon: h,
                tuples: tests.len() as u64,
                max_time,
                entries,
                gaps: None,
                note: None,
            },
        )
        .caveat(finite_caveat(ctx.cfg)));
    }
    for &i in &missing {
        let empty_to = sets[i].yes.is_empty().then_some(len).filter(|_| !sets[i].undecided);
        if let Some(ev) = refute_tuple(ctx, &[(1, tests[i].clone())], empty_to) {
            return Ok(Verdict::new(prop, Status::Refuted, ev));
        }
        if let Some(ev) = sparse_empty(ctx, &tests[i], &sets[i], len) {
            return Ok(Verdict::new(prop, Status::Refuted, ev));
        }
    }
    let open: Vec<String> = missing.iter().take(8).map(|&i| set_name(&tests[i])).collect();
    let undecided = missing.iter().any(|&i| sets[i].undecided);
    let detail = format!(
        "{} of {} sets have no member up to {h}{}",
        missing.len(),
        tests.len(),
        if undecided { "; some times stayed undecided at the current alpha precision" } else { "" }
    );
    Ok(Verdict::new(prop, Status::Inconclusive, ctx.exhausted(open, detail)))
}

/// Empty on `[1, len]` and zero exponent outside a finite support inside it.
fn sparse_empty(ctx: &Ctx, test: &SetTest, set: &TimeSet, len: u64) -> Option<Evidence> {
    if !set.yes.is_empty() || set.undecided {
        return None;
    }
    let law = ctx.law.single()?;
    let crate::maps::SupportBound::Finite { last } = law.support()? else {
        return None;
    };
    if last > len {
        return None;
    }
    let id = crate::maps::NormalMap::identity(ctx.space());
    if test.holds(ctx.space(), &id).ok()? != crate::spaces::Decision::No {
        return None;
    }
    Some(ctx.structural(
        vec![set_name(test)],
        format!("E(n) = 0 for n > {last}, the identity misses, and no time up to {len} hits"),
        vec![format!("support [1,{last}] of {}", law.form)],
        Claim::NeverJointly(vec![(1, test.clone())]),
    ))
}

pub(super) fn transitive(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    each_nonempty(ctx, prop, ctx.pairs())
}

/// All `k`-subsets of `0..n`, in lexicographic order.
pub(super) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Common-time check for every `m`-tuple of tests at scale 1; used by weak
/// mixing and multi-sensitivity.
pub(super) fn common_times(
    ctx: &Ctx,
    prop: &PropertyKind,
    tests: Vec<SetTest>,
    m: usize,
) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let len = h.max(ctx.exact_len().unwrap_or(0));
    let engine = HitEngine::new(ctx.spec, len)?;
    let sets = ctx.time_sets(&engine, &tests, len)?;
    let (uniq, rep) = distinct(&sets);
    let anti = minimal_antichain(&uniq);
    let k = m.min(anti.len()).max(1);
    let combos = subsets(anti.len(), k);
    let results: Vec<(Vec<usize>, Option<u64>)> = combos
        .par_iter()
        .map(|c| {
            let mut acc = uniq[anti[c[0]]].clone();
            for &x in &c[1..] {
                acc.and_assign(&uniq[anti[x]]);
            }
            (c.clone(), acc.first())
        })
        .collect();
    let tuple_of = |c: &[usize]| -> Vec<SetTest> { c.iter().map(|&x| tests[rep[anti[x]]].clone()).collect() };
    let mut entries = Vec::new();
    let mut max_time = 0;
    let mut failing: Option<(Vec<usize>, Option<u64>)> = None;
    for (c, first) in &results {
        match first.filter(|&n| n <= h) {
            Some(n) => {
                max_time = max_time.max(n);
                if entries.len() < MAX_ENTRIES {
                    let tup = tuple_of(c);
                    entries.push(WitnessEntry {
                        sets: tup.iter().map(set_name).collect(),
                        time: n,
                        checks: tup.into_iter().map(|t| Check::Test(1, t)).collect(),
                    });
                }
            }
            None => {
                if failing.is_none() {
                    failing = Some((c.clone(), *first));
                }
            }
        }
    }
    let Some((c, first)) = failing else {
        return Ok(Verdict::new(
            prop,
            Status::Witnessed,
            Evidence::Witnesses {
                resolution: ctx.cfg.resolution,
                horizon: h,
                tuples: results.len() as u64,
                max_time,
                entries,
                gaps: None,
                note: Some(format!(
                    "{} basis tuples reduce to {} inclusion-minimal sets; all {k}-subsets checked",
                    tests.len(),
                    anti.len()
                )),
            },
        )
        .caveat(finite_caveat(ctx.cfg)));
    };
    let tup: Vec<(u64, SetTest)> = tuple_of(&c).into_iter().map(|t| (1, t)).collect();
    let undecided = c.iter().any(|&x| sets[rep[anti[x]]].undecided);
    let scanned = (first.is_none() && !undecided).then_some(len);
    if let Some(ev) = refute_tuple(ctx, &tup, scanned) {
        return Ok(Verdict::new(prop, Status::Refuted, ev));
    }
    if let Some(ev) = refute_any(ctx, &tests, &vec![1; k]) {
        return Ok(Verdict::new(prop, Status::Refuted, ev));
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(
            tup.iter().map(|(_, t)| set_name(t)).collect(),
            format!("no common time up to {h} for this tuple"),
        ),
    ))
}

pub(super) fn weakly_mixing(ctx: &Ctx, prop: &PropertyKind, order: u32) -> Result<Verdict, CheckError> {
    common_times(ctx, prop, ctx.pairs(), order as usize)
}

/// Smallest `t` with `[t, h]` inside the set.
fn tail_start(b: &Bits, h: u64) -> Option<u64> {
    if !b.get(h) {
        return None;
    }
    let mut t = h;
    while t > 1 && b.get(t - 1) {
        t -= 1;
    }
    Some(t)
}

/// Frequency classification of every set: `syndetic`, `thick` or `cofinite`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(super) enum Freq {
    Syndetic,
    Thick,
    Cofinite,
}

pub(super) fn frequency(
    ctx: &Ctx,
    prop: &PropertyKind,
    tests: Vec<SetTest>,
    want: Freq,
) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let len = h.max(ctx.exact_len().unwrap_or(0));
    let engine = HitEngine::new(ctx.spec, len)?;
    let sets = ctx.time_sets(&engine, &tests, len)?;
    let mut summary = GapSummary { max_gap: 0, eventual_max_gap: 0, censored_gap: 0, shortest_longest_run: u64::MAX };
    let mut entries = Vec::new();
    let mut max_time = 0;
    let mut weak: Vec<usize> = Vec::new();
    for (i, (t, s)) in tests.iter().zip(&sets).enumerate() {
        let members: Vec<u64> = s.yes.members().into_iter().filter(|&n| n <= h).collect();
        let (max_gap, eventual, censored, run, _) = gap_stats(&members, h);
        summary.max_gap = summary.max_gap.max(max_gap);
        summary.eventual_max_gap = summary.eventual_max_gap.max(eventual.unwrap_or(0));
        summary.censored_gap = summary.censored_gap.max(censored);
        summary.shortest_longest_run = summary.shortest_longest_run.min(run);
        let exact = exact_pattern(ctx, s);
        let ok = match (want, exact) {
            (Freq::Syndetic, Some(p)) => p.iter().any(|&b| b),
            (Freq::Thick | Freq::Cofinite, Some(p)) => p.iter().all(|&b| b),
            (Freq::Syndetic, None) => !members.is_empty() && max_gap <= ctx.cfg.gap_limit(),
            (Freq::Thick, None) => run >= ctx.cfg.run_limit(),
            (Freq::Cofinite, None) => tail_start(&s.yes, h).is_some_and(|t| t <= h / 2 + 1),
        };
        if !ok {
            weak.push(i);
        }
        if let Some(&n) = members.first() {
            max_time = max_time.max(n);
            if entries.len() < MAX_ENTRIES {
                entries.push(WitnessEntry {
                    sets: vec![set_name(t)],
                    time: n,
                    checks: vec![Check::Test(1, t.clone())],
                });
            }
        }
    }
    if summary.shortest_longest_run == u64::MAX {
        summary.shortest_longest_run = 0;
    }
    // structural refutations are sought on every set, not only the weak ones
    for (i, t) in tests.iter().enumerate() {
        if let Some(ev) = refute_frequency(ctx, t, &sets[i], want, len) {
            return Ok(Verdict::new(prop, Status::Refuted, ev));
        }
    }
    if weak.is_empty() {
        let note = match want {
            Freq::Syndetic => format!("every set has gaps <= {} on [1,{h}]", summary.max_gap),
            Freq::Thick => format!("every set has a run of length >= {} on [1,{h}]", summary.shortest_longest_run),
            Freq::Cofinite => format!("every set contains a tail [t,{h}] with t <= {}", h / 2 + 1),
        };
        let mut v = Verdict::new(
            prop,
            Status::Witnessed,
            Evidence::Witnesses {
                resolution: ctx.cfg.resolution,
                horizon: h,
                tuples: tests.len() as u64,
                max_time,
                entries,
                gaps: Some(summary),
                note: Some(note),
            },
        );
        if ctx.cycle.is_none() {
            v = v.caveat(finite_caveat(ctx.cfg));
        }
        return Ok(v);
    }
    let open = weak.iter().take(8).map(|&i| set_name(&tests[i])).collect();
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(open, format!("{} of {} sets lack enumerative evidence up to {h}", weak.len(), tests.len())),
    ))
}

/// Membership pattern over one full cycle, when the system is finite-state.
fn exact_pattern(ctx: &Ctx, s: &TimeSet) -> Option<Vec<bool>> {
    let (start, period) = ctx.cycle?;
    let start = start.max(1);
    Some((start..start + period).map(|n| s.yes.get(n)).collect())
}

fn refute_frequency(ctx: &Ctx, t: &SetTest, s: &TimeSet, want: Freq, len: u64) -> Option<Evidence> {
    if let (Some(p), Some((start, period))) = (exact_pattern(ctx, s), ctx.cycle) {
        let start = start.max(1);
        let fails = match want {
            Freq::Syndetic => !p.iter().any(|&b| b),
            _ => !p.iter().all(|&b| b),
        };
        if !fails {
            return None;
        }
        let r = p.iter().position(|&b| !b).expect("a miss");
        return Some(Evidence::Exact {
            detail: format!(
                "membership repeats with period {period} from n = {start}; pattern {}",
                p.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()
            ),
            trace: vec![set_name(t)],
            claim: Claim::FailsOnClass {
                test: t.clone(),
                modulus: period,
                residue: (start + r as u64) % period,
                from: start,
            },
        });
    }
    // an empty set is neither syndetic nor thick
    if let Some(ev) = refute_tuple(ctx, &[(1, t.clone())], None) {
        return Some(ev);
    }
    if want == Freq::Syndetic {
        if let Some(ev) = sparse_support(ctx, t) {
            return Some(ev);
        }
        let _ = len;
        return None;
    }
    // thick and cofinite fail as soon as one residue class is excluded
    for m in 2..=MAX_MODULUS {
        if let Some((r, tr)) = excluded_residues(ctx.space(), t, &ctx.law, 1, m).into_iter().next() {
            return Some(ctx.structural(
                vec![set_name(t)],
                format!("no member is {r} mod {m}, so runs are shorter than {m}"),
                vec![tr],
                Claim::FailsOnClass { test: t.clone(), modulus: m, residue: r, from: 1 },
            ));
        }
    }
    sparse_support(ctx, t)
}

fn sparse_support(ctx: &Ctx, t: &SetTest) -> Option<Evidence> {
    let views: Vec<(Option<usize>, crate::maps::ExponentLaw)> = ctx.law_objects();
    for (factor, law) in views {
        let support = law.support()?;
        let (space, test) = match factor {
            None => (ctx.space().clone(), t.clone()),
            Some(i) => {
                let crate::spaces::SpaceDesc::Product(ss) = ctx.space() else { continue };
                let SetTest::Hitting { u: crate::spaces::BasicOpen::Rect(us), v: crate::spaces::BasicOpen::Rect(vs) } =
                    t
                else {
                    continue;
                };
                (ss[i].clone(), SetTest::Hitting { u: us[i].clone(), v: vs[i].clone() })
            }
        };
        if !matches!(test, SetTest::Hitting { .. }) {
            continue;
        }
        let id = crate::maps::NormalMap::identity(&space);
        if test.holds(&space, &id).ok()? == crate::spaces::Decision::No {
            return Some(ctx.structural(
                vec![set_name(t)],
                format!("members lie in {support}, which has unbounded gaps"),
                vec![format!("E(n) = 0 off {support} by {}; the identity misses {}", law.form, set_name(&test))],
                Claim::FailsOff(t.clone(), support),
            ));
        }
    }
    None
}

pub(super) fn syndetically_transitive(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    frequency(ctx, prop, ctx.pairs(), Freq::Syndetic)
}

pub(super) fn mixing(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    frequency(ctx, prop, ctx.pairs(), Freq::Cofinite)
}

pub(super) fn mildly_mixing(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    let mut v = mixing(ctx, prop)?;
    if !ctx.space().has_isolated_points() {
        v.caveats.push("decided as mixing: without isolated points, mildly mixing and mixing coincide".into());
        return Ok(v);
    }
    if v.status == Status::Refuted {
        v.caveats.push("not mixing, hence not mildly mixing".into());
        return Ok(v);
    }
    let open = vec!["product with every transitive system".to_string()];
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(open, "the space has isolated points; only 'not mixing implies not mildly mixing' applies"),
    )
    .caveat("space has isolated points"))
}

pub(super) fn totally_transitive(
    spec: &NdsSpec,
    cfg: &CheckConfig,
    prop: &PropertyKind,
    s_max: u32,
) -> Result<Verdict, CheckError> {
    let mut parts = Vec::new();
    let mut orders = Vec::new();
    for s in 1..=s_max as u64 {
        let it = NdsSpec::iterate(spec.clone(), s)?;
        parts.push(super::check_property(&it, &PropertyKind::Transitive, cfg)?);
        orders.push(s);
    }
    let status = if parts.iter().all(|v| v.status == Status::Witnessed) {
        Status::Witnessed
    } else if parts.iter().any(|v| v.status == Status::Refuted) {
        Status::Refuted
    } else {
        Status::Inconclusive
    };
    Ok(Verdict::new(prop, status, Evidence::Parts { orders, parts }))
}

pub(super) fn multi_transitive(ctx: &Ctx, prop: &PropertyKind, m_max: u32) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let m_max = m_max as u64;
    let len_l = h.max(ctx.exact_len().unwrap_or(0));
    let engine = HitEngine::new(ctx.spec, m_max * len_l)?;
    let tests = ctx.pairs();
    let sets = ctx.time_sets(&engine, &tests, m_max * len_l)?;
    // D_j(p) = { l : test p holds at j·l }
    let scaled: Vec<(Vec<Bits>, Vec<usize>, Vec<usize>)> = (1..=m_max)
        .map(|j| {
            let ts: Vec<super::TimeSet> = sets
                .iter()
                .map(|s| {
                    let mut b = Bits::new(len_l);
                    for l in 1..=len_l {
                        if s.yes.get(j * l) {
                            b.set(l);
                        }
                    }
                    super::TimeSet { yes: b, undecided: s.undecided }
                })
                .collect();
            let (uniq, rep) = distinct(&ts);
            let anti = minimal_antichain(&uniq);
            (uniq, rep, anti)
        })
        .collect();
    let mut entries = Vec::new();
    let mut max_time = 0;
    let mut tuples = 0u64;
    for m in 1..=m_max as usize {
        let dims: Vec<usize> = (0..m).map(|j| scaled[j].2.len()).collect();
        let total: usize = dims.iter().product();
        let results: Vec<(Vec<usize>, Option<u64>)> = (0..total)
            .into_par_iter()
            .map(|mut code| {
                let mut pick = Vec::with_capacity(m);
                for d in &dims {
                    pick.push(code % d);
                    code /= d;
                }
                let mut acc = scaled[0].0[scaled[0].2[pick[0]]].clone();
                for j in 1..m {
                    acc.and_assign(&scaled[j].0[scaled[j].2[pick[j]]]);
                }
                (pick, acc.first())
            })
            .collect();
        tuples += results.len() as u64;
        let tuple_of = |pick: &[usize]| -> Vec<(u64, SetTest)> {
            pick.iter()
                .enumerate()
                .map(|(j, &c)| ((j + 1) as u64, tests[scaled[j].1[scaled[j].2[c]]].clone()))
                .collect()
        };
        for (pick, first) in &results {
            match first.filter(|&l| l <= h) {
                Some(l) => {
                    max_time = max_time.max(l);
                    if entries.len() < MAX_ENTRIES {
                        let tup = tuple_of(pick);
                        entries.push(WitnessEntry {
                            sets: tup.iter().map(|(j, t)| format!("{j}l: {}", set_name(t))).collect(),
                            time: l,
                            checks: tup.into_iter().map(|(j, t)| Check::Test(j, t)).collect(),
                        });
                    }
                }
                None => {
                    let tup = tuple_of(pick);
                    let undecided = pick.iter().enumerate().any(|(j, &c)| sets[scaled[j].1[scaled[j].2[c]]].undecided);
                    let scanned = (first.is_none() && !undecided).then_some(len_l);
                    if let Some(ev) = refute_tuple(ctx, &tup, scanned) {
                        return Ok(Verdict::new(prop, Status::Refuted, ev));
                    }
                    let scales: Vec<u64> = (1..=m as u64).collect();
                    if let Some(ev) = refute_any(ctx, &tests, &scales) {
                        return Ok(Verdict::new(prop, Status::Refuted, ev));
                    }
                    return Ok(Verdict::new(
                        prop,
                        Status::Inconclusive,
                        ctx.exhausted(
                            tup.iter().map(|(j, t)| format!("{j}l: {}", set_name(t))).collect(),
                            format!("no common l <= {h} for this {m}-tuple"),
                        ),
                    ));
                }
            }
        }
    }
    Ok(Verdict::new(
        prop,
        Status::Witnessed,
        Evidence::Witnesses {
            resolution: ctx.cfg.resolution,
            horizon: h,
            tuples,
            max_time,
            entries,
            gaps: None,
            note: Some(format!("smallest common l per tuple, tuples of size 1..={m_max}")),
        },
    )
    .caveat(finite_caveat(ctx.cfg)))
}
