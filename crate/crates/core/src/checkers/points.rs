use std::collections::{BTreeSet, HashSet};

use num::{BigInt, BigRational, Integer, One, Zero};

use super::transitivity::finite_caveat;
use super::{Check, CheckError, Claim, Ctx, Evidence, PropertyKind, Status, Verdict, WitnessEntry};
use crate::hitting::{gap_stats, prefix_cycle, SetTest};
use crate::maps::{orbit, ExponentLaw, LawForm, MapError, MapTerm, NdsSpec, NormalMap, SpecKind, TermTemplate};
use crate::spaces::{AffineAngle, BasicOpen, BiWord, Decision, Point, SpaceDesc};

/// Largest finite-state space enumerated point by point.
const MAX_POINTS: u64 = 4096;

/// Every point of a finite space or a product of finite spaces.
pub(super) fn all_points(space: &SpaceDesc) -> Option<Vec<Point>> {
    match space {
        SpaceDesc::Finite { point_count } => Some((1..=*point_count).map(Point::FiniteId).collect()),
        SpaceDesc::Product(parts) => {
            let mut size = 1u64;
            for p in parts {
                let SpaceDesc::Finite { point_count } = p else { return None };
                size = size.saturating_mul(*point_count as u64);
            }
            if size > MAX_POINTS {
                return None;
            }
            let mut acc: Vec<Vec<Point>> = vec![Vec::new()];
            for p in parts {
                let pts = all_points(p)?;
                acc = acc
                    .into_iter()
                    .flat_map(|pre| {
                        pts.iter().map(move |x| {
                            let mut v = pre.clone();
                            v.push(x.clone());
                            v
                        })
                    })
                    .collect();
            }
            Some(acc.into_iter().map(Point::Tuple).collect())
        }
        _ => None,
    }
}

/// The smallest open set around a point of a finite-state space.
fn point_set(p: &Point) -> BasicOpen {
    match p {
        Point::FiniteId(i) => BasicOpen::FiniteSet(BTreeSet::from([*i])),
        Point::Tuple(ps) => BasicOpen::Rect(ps.iter().map(point_set).collect()),
        _ => panic!("not a finite-state point"),
    }
}

fn contains(space: &SpaceDesc, o: &BasicOpen, p: &Point) -> Result<Decision, CheckError> {
    Ok(o.contains(space, p)?)
}

/// A point with `0^Z` on every shift factor, plus a basis set whose shift
/// part needs a nonzero symbol. Shift maps fix `0^Z`, so the point never
/// enters the set and no image of the set ever contains the point.
fn fixed_point_conflict(space: &SpaceDesc, basis: &[BasicOpen]) -> Option<(Point, BasicOpen)> {
    fn has_nonzero(o: &BasicOpen, s: &SpaceDesc) -> bool {
        match (o, s) {
            (BasicOpen::Cylinder { word, .. }, SpaceDesc::Shift { .. }) => word.iter().any(|&c| c != 0),
            (BasicOpen::Rect(parts), SpaceDesc::Product(ss)) => parts.iter().zip(ss).any(|(p, s)| has_nonzero(p, s)),
            _ => false,
        }
    }
    fn point(o: &BasicOpen, s: &SpaceDesc) -> Point {
        match (o, s) {
            (_, SpaceDesc::Shift { .. }) => Point::BiWord(BiWord::constant(0)),
            (BasicOpen::Rect(parts), SpaceDesc::Product(ss)) => {
                Point::Tuple(parts.iter().zip(ss).map(|(p, s)| point(p, s)).collect())
            }
            _ => o.sample_point(),
        }
    }
    let b = basis.iter().find(|b| has_nonzero(b, space))?;
    Some((point(b, space), b.clone()))
}

fn refuted_by_fixed_point(ctx: &Ctx, prop: &PropertyKind, why: &str) -> Option<Verdict> {
    let (p, b) = fixed_point_conflict(ctx.space(), &ctx.basis)?;
    Some(Verdict::new(
        prop,
        Status::Refuted,
        Evidence::Exact {
            detail: format!("shift maps fix {p}; {why}"),
            trace: vec![format!("{p} is not in {b}")],
            claim: Claim::NeverEnters(p, b),
        },
    ))
}

/// Horizon that covers one full cycle on finite-state systems, else `H`.
fn scan_len(ctx: &Ctx) -> u64 {
    ctx.cfg.horizon.max(ctx.exact_len().unwrap_or(0))
}

/// Open intervals `(a, b)` modulo 1; does their union cover the circle?
fn covers_circle(mut iv: Vec<(BigRational, BigRational)>) -> bool {
    if iv.iter().any(|(a, b)| b - a > BigRational::one()) {
        return true;
    }
    let mut all = Vec::with_capacity(iv.len() * 3);
    for (a, b) in iv.drain(..) {
        let fl = BigRational::from_integer(a.floor().to_integer());
        let (a, b) = (&a - &fl, &b - &fl);
        let one = BigRational::one();
        all.push((&a - &one, &b - &one));
        all.push((a.clone() + &one, b.clone() + &one));
        all.push((a, b));
    }
    let mut reach = BigRational::zero();
    loop {
        let best = all.iter().filter(|(a, _)| a < &reach).map(|(_, b)| b).max().cloned();
        match best {
            Some(b) if b > reach => {
                if b > BigRational::one() {
                    return true;
                }
                reach = b;
            }
            _ => return false,
        }
    }
}

/// Whether `f_1^1(U) ∪ ... ∪ f_1^m(U)` is the whole space.
pub(super) fn covers(spec: &NdsSpec, u: &BasicOpen, m: u64) -> Result<Decision, MapError> {
    let space = spec.space();
    if let Some(points) = all_points(space) {
        let mut hit: HashSet<Point> = HashSet::new();
        let mut acc = NormalMap::identity(space);
        let members: Vec<Point> =
            points.iter().filter(|p| u.contains(space, p) == Ok(Decision::Yes)).cloned().collect();
        for i in 1..=m {
            acc = acc.then(&spec.step_map(i)?);
            for p in &members {
                hit.insert(acc.apply(p));
            }
        }
        return Ok(Decision::from_bool(hit.len() == points.len()));
    }
    match (space, u) {
        (SpaceDesc::Shift { alphabet_size }, _) if *alphabet_size >= 2 => Ok(Decision::No),
        (SpaceDesc::Circle { alpha }, BasicOpen::Arc { center, radius }) => {
            let mut inner = Vec::new();
            let mut outer = Vec::new();
            let mut acc = NormalMap::identity(space);
            for i in 1..=m {
                acc = acc.then(&spec.step_map(i)?);
                let c = center.0.rotated(acc.exponent().unwrap_or(0)).enclosure(alpha);
                inner.push((&c.hi - radius, &c.lo + radius));
                outer.push((&c.lo - radius, &c.hi + radius));
            }
            Ok(if covers_circle(inner) {
                Decision::Yes
            } else if !covers_circle(outer) {
                Decision::No
            } else {
                Decision::Undecided
            })
        }
        _ => Ok(Decision::Undecided),
    }
}

fn witnessed(ctx: &Ctx, prop: &PropertyKind, entries: Vec<WitnessEntry>, note: String) -> Verdict {
    let max_time = entries.iter().map(|e| e.time).max().unwrap_or(0);
    Verdict::new(
        prop,
        Status::Witnessed,
        Evidence::Witnesses {
            resolution: ctx.cfg.resolution,
            horizon: ctx.cfg.horizon,
            tuples: entries.len() as u64,
            max_time,
            entries,
            gaps: None,
            note: Some(note),
        },
    )
}

pub(super) fn strongly_transitive(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let space = ctx.space();
    if let Some(points) = all_points(space) {
        let len = scan_len(ctx);
        let prefixes: Vec<NormalMap> = {
            let mut v = Vec::with_capacity(len as usize);
            let mut acc = NormalMap::identity(space);
            for i in 1..=len {
                acc = acc.then(&ctx.spec.step_map(i)?);
                v.push(acc.clone());
            }
            v
        };
        let mut entries = Vec::new();
        let mut late = Vec::new();
        for u in &ctx.basis {
            let members: Vec<&Point> = points.iter().filter(|p| u.contains(space, p) == Ok(Decision::Yes)).collect();
            let mut hit: HashSet<Point> = HashSet::new();
            let mut found = None;
            for (i, m) in prefixes.iter().enumerate() {
                for p in &members {
                    hit.insert(m.apply(p));
                }
                if hit.len() == points.len() {
                    found = Some(i as u64 + 1);
                    break;
                }
            }
            match found {
                Some(m) if m <= h => entries.push(WitnessEntry {
                    sets: vec![u.to_string()],
                    time: m,
                    checks: vec![Check::Covers(u.clone())],
                }),
                Some(m) => late.push(format!("{u} first covers at M = {m}")),
                None if ctx.cycle.is_some() => {
                    let q = points.iter().find(|p| !hit.contains(p)).expect("an uncovered point");
                    let test = SetTest::Hitting { u: u.clone(), v: point_set(q) };
                    let (start, period) = ctx.cycle.expect("cycle");
                    return Ok(Verdict::new(
                        prop,
                        Status::Refuted,
                        Evidence::Exact {
                            detail: format!(
                                "prefix maps repeat with period {period} from n = {start}; {q} is never in an image of {u}"
                            ),
                            trace: vec![format!("images scanned up to n = {len}")],
                            claim: Claim::NeverJointly(vec![(1, test)]),
                        },
                    ));
                }
                None => late.push(format!("{u} not covered up to {len}")),
            }
        }
        if late.is_empty() {
            let m = entries.iter().map(|e| e.time).max().unwrap_or(0);
            return Ok(witnessed(ctx, prop, entries, format!("every basis set covers the space by M = {m}")));
        }
        return Ok(Verdict::new(
            prop,
            Status::Inconclusive,
            ctx.exhausted(late, format!("no common cover bound within {h}")),
        ));
    }
    if let Some(v) = refuted_by_fixed_point(ctx, prop, "no image of a set missing that point contains it") {
        return Ok(v);
    }
    if let SpaceDesc::Circle { .. } = space {
        // finitely many rotations of an arc cannot cover when too short
        if let Some(law) = ctx.law.single() {
            if let (Some(vals), Some(BasicOpen::Arc { radius, .. })) = (law.values_on_class(1, 0), ctx.basis.first()) {
                let total = BigRational::from_integer(BigInt::from(vals.len() as i64 + 1)) * radius * BigInt::from(2);
                if total < BigRational::one() {
                    return Ok(Verdict::new(
                        prop,
                        Status::Refuted,
                        ctx.structural(
                            vec![ctx.basis[0].to_string()],
                            format!(
                                "E takes at most {} values, so the images of an arc of length {} have total length < 1",
                                vals.len(),
                                radius * BigInt::from(2)
                            ),
                            vec![format!("values {vals:?}")],
                            Claim::Static,
                        ),
                    ));
                }
            }
        }
        let mut entries = Vec::new();
        let mut open = Vec::new();
        for u in &ctx.basis {
            let mut found = None;
            for m in 1..=h {
                if covers(ctx.spec, u, m)? == Decision::Yes {
                    found = Some(m);
                    break;
                }
            }
            match found {
                Some(m) => entries.push(WitnessEntry {
                    sets: vec![u.to_string()],
                    time: m,
                    checks: vec![Check::Covers(u.clone())],
                }),
                None => open.push(u.to_string()),
            }
        }
        if open.is_empty() {
            let m = entries.iter().map(|e| e.time).max().unwrap_or(0);
            return Ok(witnessed(ctx, prop, entries, format!("every basis arc covers the circle by M = {m}"))
                .caveat(finite_caveat(ctx.cfg)));
        }
        return Ok(Verdict::new(prop, Status::Inconclusive, ctx.exhausted(open, format!("no cover found within {h}"))));
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(Vec::new(), "cover checks are implemented for finite-state systems, the shift and the circle"),
    ))
}

fn visits(spec: &NdsSpec, x: &Point, len: u64) -> Result<Vec<Point>, CheckError> {
    Ok(orbit(spec, x, len)?)
}

pub(super) fn minimal(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    let h = ctx.cfg.horizon;
    let space = ctx.space();
    if let Some(points) = all_points(space) {
        let len = scan_len(ctx);
        let mut entries = Vec::new();
        let mut late = Vec::new();
        for x in &points {
            let orb = visits(ctx.spec, x, len)?;
            for v in &ctx.basis {
                let first = orb.iter().position(|p| v.contains(space, p) == Ok(Decision::Yes));
                match first {
                    Some(n) if n as u64 <= h => entries.push(WitnessEntry {
                        sets: vec![x.to_string(), v.to_string()],
                        time: n as u64,
                        checks: vec![Check::Visit(x.clone(), v.clone())],
                    }),
                    None if ctx.cycle.is_some() => {
                        let (start, period) = ctx.cycle.expect("cycle");
                        return Ok(Verdict::new(
                            prop,
                            Status::Refuted,
                            Evidence::Exact {
                                detail: format!(
                                    "prefix maps repeat with period {period} from n = {start}; the orbit of {x} never enters {v}"
                                ),
                                trace: vec![format!("orbit scanned up to n = {len}")],
                                claim: Claim::NeverEnters(x.clone(), v.clone()),
                            },
                        ));
                    }
                    _ => late.push(format!("{x} -> {v}")),
                }
            }
        }
        if late.is_empty() {
            return Ok(witnessed(ctx, prop, entries, "every point visits every basis set".into()));
        }
        return Ok(Verdict::new(
            prop,
            Status::Inconclusive,
            ctx.exhausted(late, format!("visits not found within {h}")),
        ));
    }
    if let Some(v) = refuted_by_fixed_point(ctx, prop, "its orbit is not dense") {
        return Ok(v);
    }
    if let SpaceDesc::Circle { .. } = space {
        let x = Point::Angle(AffineAngle::rational(BigRational::zero()));
        let orb = visits(ctx.spec, &x, h)?;
        let mut entries = Vec::new();
        let mut open = Vec::new();
        for v in &ctx.basis {
            let mut first = None;
            for (n, p) in orb.iter().enumerate() {
                if contains(space, v, p)? == Decision::Yes {
                    first = Some(n as u64);
                    break;
                }
            }
            match first {
                Some(n) => entries.push(WitnessEntry {
                    sets: vec![x.to_string(), v.to_string()],
                    time: n,
                    checks: vec![Check::Visit(x.clone(), v.clone())],
                }),
                None => open.push(v.clone()),
            }
        }
        if open.is_empty() {
            return Ok(witnessed(ctx, prop, entries, format!("the orbit of {x} visits every basis arc"))
                .caveat(format!("checked on the representative point {x}"))
                .caveat(finite_caveat(ctx.cfg)));
        }
        // orbit confined to finitely many angles
        if let Some(vals) = ctx.law.single().and_then(|l| l.values_on_class(1, 0)) {
            for v in &open {
                let mut all_out = true;
                for e in vals.iter().chain(std::iter::once(&0)) {
                    if contains(space, v, &Point::Angle(AffineAngle::new(BigRational::zero(), *e)))? != Decision::No {
                        all_out = false;
                        break;
                    }
                }
                if all_out {
                    return Ok(Verdict::new(
                        prop,
                        Status::Refuted,
                        ctx.structural(
                            vec![v.to_string()],
                            format!("the orbit of {x} stays in {{E(n)·alpha}}, a finite set missing {v}"),
                            vec![format!("values of E: {vals:?}")],
                            Claim::NeverEnters(x.clone(), v.clone()),
                        ),
                    ));
                }
            }
        }
        return Ok(Verdict::new(
            prop,
            Status::Inconclusive,
            ctx.exhausted(open.iter().map(|v| v.to_string()).collect(), format!("no visit within {h}")),
        ));
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(Vec::new(), "representative points are defined for finite spaces, the shift and the circle"),
    ))
}

pub(super) fn feeble_open(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    let detail = match ctx.space() {
        SpaceDesc::Finite { .. } => "every subset of a discrete space is open",
        SpaceDesc::Shift { .. } => "shift powers are homeomorphisms",
        SpaceDesc::Circle { .. } => "rotations are homeomorphisms",
        SpaceDesc::Product(_) => "each factor map is open, so the product map is open",
    };
    Ok(Verdict::new(
        prop,
        Status::Witnessed,
        Evidence::Exact { detail: detail.into(), trace: Vec::new(), claim: Claim::Static },
    ))
}

pub(super) fn term_surjective(t: &MapTerm) -> bool {
    match t {
        MapTerm::FiniteFn(table) => table.is_surjective(),
        MapTerm::Tuple(ts) => ts.iter().all(term_surjective),
        _ => true,
    }
}

/// Every map the sequence can ever use is surjective.
fn all_templates_surjective(spec: &NdsSpec) -> bool {
    match spec.kind() {
        SpecKind::Rules { rules, default } => {
            rules.iter().map(|r| &r.term).chain(std::iter::once(default)).all(|t| match t {
                TermTemplate::FiniteFn(table) => table.is_surjective(),
                _ => true,
            })
        }
        SpecKind::Tail { base, .. } | SpecKind::Iterate { base, .. } => all_templates_surjective(base),
        SpecKind::Product(parts) => parts.iter().all(all_templates_surjective),
    }
}

pub(super) fn surjective(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    if all_templates_surjective(ctx.spec) {
        return Ok(Verdict::new(
            prop,
            Status::Witnessed,
            Evidence::Exact {
                detail: "every map the rules can produce is surjective".into(),
                trace: Vec::new(),
                claim: Claim::Static,
            },
        ));
    }
    let h = scan_len(ctx);
    for n in 1..=h {
        let t = ctx.spec.eval_term(n)?;
        if !term_surjective(&t) {
            return Ok(Verdict::new(
                prop,
                Status::Refuted,
                Evidence::Exact {
                    detail: format!("f_{n} = {t} is not surjective"),
                    trace: Vec::new(),
                    claim: Claim::NotSurjectiveAt(n),
                },
            ));
        }
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(Vec::new(), format!("a rule uses a non-surjective table but no term up to {h} does")),
    ))
}

/// Whether `f_1^{kn}(x) = x` for `kn <= len`.
fn fixed_by_multiples(spec: &NdsSpec, x: &Point, k: u64, len: u64) -> Result<bool, CheckError> {
    let mut acc = NormalMap::identity(spec.space());
    for i in 1..=len {
        acc = acc.then(&spec.step_map(i)?);
        if i % k == 0 && acc.apply(x) != *x {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The gcd of `E(kn)` over all `n`, when the law pins it down.
fn exponent_gcd(law: &ExponentLaw, k: u64) -> Option<i64> {
    if let LawForm::Linear { slope } = law.form {
        return Some(slope * k as i64);
    }
    let vals = law.values_on_class(k, 0)?;
    Some(vals.into_iter().fold(0i64, |g, v| g.gcd(&v)))
}

/// A `k`-periodic point inside `u`, with `k` and the reason.
fn periodic_in(
    ctx: &Ctx,
    spec: &NdsSpec,
    law: Option<&ExponentLaw>,
    u: &BasicOpen,
) -> Result<Option<(Point, u64, String)>, CheckError> {
    let max_k = ctx.cfg.max_period.max(1);
    match (spec.space(), u) {
        (SpaceDesc::Finite { .. }, _) => {
            let x = u.sample_point();
            let (start, period) = match prefix_cycle(spec) {
                Some(c) => c,
                None => (ctx.cfg.horizon, 0),
            };
            for k in 1..=max_k {
                let len = start.max(1) + k * period.max(1) + k;
                if fixed_by_multiples(spec, &x, k, len)? {
                    let how = if period > 0 { "exact over one cycle" } else { "checked up to H" };
                    let why = format!("{x} is {k}-periodic ({how})");
                    return Ok(Some((x, k, why)));
                }
            }
            Ok(None)
        }
        (SpaceDesc::Shift { .. }, BasicOpen::Cylinder { start, word }) => {
            let Some(law) = law else { return Ok(None) };
            for k in 1..=max_k {
                let Some(g) = exponent_gcd(law, k) else { continue };
                if g == 0 {
                    let x = u.sample_point();
                    return Ok(Some((x, k, format!("E({k}n) = 0 for all n by {}", law.form))));
                }
                let p = g.unsigned_abs() as usize;
                if p >= word.len() {
                    let mut w = word.clone();
                    w.resize(p, 0);
                    let x = Point::BiWord(BiWord::periodic(*start, w)?);
                    return Ok(Some((x, k, format!("{g} divides E({k}n) for all n by {}", law.form))));
                }
            }
            Ok(None)
        }
        (SpaceDesc::Circle { .. }, BasicOpen::Arc { .. }) => {
            let Some(law) = law else { return Ok(None) };
            for k in 1..=max_k {
                if exponent_gcd(law, k) == Some(0) {
                    return Ok(Some((u.sample_point(), k, format!("E({k}n) = 0 for all n by {}", law.form))));
                }
            }
            Ok(None)
        }
        (SpaceDesc::Product(_), BasicOpen::Rect(parts)) => {
            let factors = spec.factors().expect("product spec");
            let laws = match &ctx.law {
                crate::hitting::SystemLaw::Factors(ls) => ls.clone(),
                _ => vec![None; parts.len()],
            };
            let mut pts = Vec::new();
            let mut k = 1u64;
            let mut why = Vec::new();
            for ((f, part), l) in factors.iter().zip(parts).zip(&laws) {
                let Some((p, kf, w)) = periodic_in(ctx, f, l.as_ref(), part)? else { return Ok(None) };
                pts.push(p);
                k = k.lcm(&kf);
                why.push(w);
            }
            Ok(Some((Point::Tuple(pts), k, why.join("; "))))
        }
        _ => Ok(None),
    }
}

pub(super) fn dense_periodic(ctx: &Ctx, prop: &PropertyKind) -> Result<Verdict, CheckError> {
    let mut entries = Vec::new();
    let mut open = Vec::new();
    let mut reasons = BTreeSet::new();
    for u in &ctx.basis {
        match periodic_in(ctx, ctx.spec, ctx.law.single(), u)? {
            Some((x, k, why)) => {
                reasons.insert(why);
                entries.push(WitnessEntry {
                    sets: vec![u.to_string(), x.to_string()],
                    time: k,
                    checks: vec![Check::Periodic(x, k)],
                });
            }
            None => open.push(u.to_string()),
        }
    }
    if open.is_empty() {
        let mut v =
            witnessed(ctx, prop, entries, "every basis set contains a periodic point; time is the period".into());
        if let Evidence::Witnesses { note, .. } = &mut v.evidence {
            if reasons.len() <= 4 {
                *note = Some(format!(
                    "every basis set contains a periodic point; time is the period; {}",
                    reasons.into_iter().collect::<Vec<_>>().join("; ")
                ));
            }
        }
        return Ok(v.caveat(format!("checked on the basis at resolution {}", ctx.cfg.resolution)));
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(open, format!("no periodic point of period <= {} found", ctx.cfg.max_period)),
    ))
}

pub(super) fn almost_periodic(ctx: &Ctx, prop: &PropertyKind, point: Option<u32>) -> Result<Verdict, CheckError> {
    let space = ctx.space();
    let h = ctx.cfg.horizon;
    let x = match (space, all_points(space)) {
        (_, Some(points)) => {
            let i = point.unwrap_or(1);
            points
                .get(i.checked_sub(1).ok_or_else(|| CheckError::Invalid("point ids start at 1".into()))? as usize)
                .cloned()
                .ok_or_else(|| CheckError::Invalid(format!("no point {i} in {space}")))?
        }
        (_, None) if point.is_some() => {
            return Err(CheckError::Invalid("point ids are only meaningful on finite spaces".into()));
        }
        (SpaceDesc::Shift { .. }, None) => {
            Point::BiWord(ctx.cfg.shift_points.first().cloned().unwrap_or(BiWord::constant(0)))
        }
        (SpaceDesc::Circle { .. }, None) => Point::Angle(AffineAngle::rational(BigRational::zero())),
        _ => ctx.basis[0].sample_point(),
    };
    let nbhds: Vec<BasicOpen> =
        ctx.basis.iter().filter(|b| b.contains(space, &x) == Ok(Decision::Yes)).cloned().collect();
    let len = scan_len(ctx);
    let orb = visits(ctx.spec, &x, len)?;
    let mut entries = Vec::new();
    let mut weak = Vec::new();
    for v in &nbhds {
        let mut times = Vec::new();
        for (n, p) in orb.iter().enumerate().skip(1) {
            if contains(space, v, p)? == Decision::Yes {
                times.push(n as u64);
            }
        }
        if let Some((start, period)) = ctx.cycle {
            let start = start.max(1);
            if !times.iter().any(|&n| n >= start && n < start + period) {
                return Ok(Verdict::new(
                    prop,
                    Status::Refuted,
                    Evidence::Exact {
                        detail: format!(
                            "prefix maps repeat with period {period} from n = {start}; {x} never returns to {v} after that"
                        ),
                        trace: Vec::new(),
                        claim: Claim::FailsFrom(SetTest::Hitting { u: point_set(&x), v: v.clone() }, start),
                    },
                ));
            }
        } else {
            let within: Vec<u64> = times.iter().copied().filter(|&n| n <= h).collect();
            let (max_gap, ..) = gap_stats(&within, h);
            if within.is_empty() || max_gap > ctx.cfg.gap_limit() {
                weak.push(format!("{v}: largest gap {max_gap}"));
            }
        }
        if let Some(&n) = times.first() {
            entries.push(WitnessEntry {
                sets: vec![v.to_string()],
                time: n,
                checks: vec![Check::Visit(x.clone(), v.clone())],
            });
        }
    }
    if weak.is_empty() {
        let note = if ctx.cycle.is_some() {
            format!("{x} returns to each basis neighbourhood once per cycle")
        } else {
            format!("{x} returns to each basis neighbourhood with gaps <= {}", ctx.cfg.gap_limit())
        };
        let mut v = witnessed(ctx, prop, entries, note);
        if ctx.cycle.is_none() {
            v = v.caveat(finite_caveat(ctx.cfg));
        }
        return Ok(v);
    }
    Ok(Verdict::new(
        prop,
        Status::Inconclusive,
        ctx.exhausted(weak, format!("return gaps exceed {}", ctx.cfg.gap_limit())),
    ))
}
