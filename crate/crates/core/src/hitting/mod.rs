//! Hitting-time sets `N(U,V)`, separation sets `N(U,δ)` and their
//! syndetic / thick / cofinite classification.
//!
//! Gap convention: the member list is padded with `0` and `H + 1`, and
//! `max_gap` is the largest first difference of the padded list. The last
//! padded gap touches the horizon and is only a lower bound on the true gap,
//! so it is also reported on its own as `censored_gap`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num::{BigRational, Signed};
use rayon::prelude::*;
use serde::Serialize;

use crate::maps::{derive_exponent_law, ExponentLaw, MapError, NdsSpec, NormalMap, PrefixTable, SupportBound};
use crate::spaces::{diameter, intersect_basic, BasicOpen, Decision, Intersection, SpaceDesc, SpaceError};

#[derive(Debug, thiserror::Error)]
pub enum HitError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{0}")]
    Invalid(String),
}

/// Largest modulus tried when looking for excluded residue classes.
pub const MAX_MODULUS: u64 = 12;

/// Step budget for cycle detection on finite-state prefix sequences.
const CYCLE_BUDGET: u64 = 1 << 16;

/// What a member of a set has to satisfy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetTest {
    /// `f_1^n(U) ∩ V ≠ ∅`.
    Hitting { u: BasicOpen, v: BasicOpen },
    /// `diam f_1^n(U) > δ`.
    Separation { u: BasicOpen, delta: BigRational },
}

impl fmt::Display for SetTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetTest::Hitting { u, v } => write!(f, "N({u}, {v})"),
            SetTest::Separation { u, delta } => write!(f, "N({u}, {delta})"),
        }
    }
}

impl SetTest {
    fn u(&self) -> &BasicOpen {
        match self {
            SetTest::Hitting { u, .. } | SetTest::Separation { u, .. } => u,
        }
    }

    /// Exact membership for the time-`n` map, with a short witness.
    pub fn eval(&self, space: &SpaceDesc, map: &NormalMap) -> Result<(Decision, Option<String>), SpaceError> {
        let img = map.image(self.u());
        match self {
            SetTest::Hitting { v, .. } => Ok(match intersect_basic(space, &img, v)? {
                Intersection::Empty => (Decision::No, None),
                Intersection::Undecided => (Decision::Undecided, None),
                Intersection::Nonempty { set, .. } => (Decision::Yes, Some(format!("{map} meets in {set}"))),
            }),
            SetTest::Separation { delta, .. } => {
                let d = diameter(space, &img)?;
                let yes = d > *delta;
                Ok((Decision::from_bool(yes), yes.then(|| format!("{map}: diam {img} = {d}"))))
            }
        }
    }

    /// Membership only, without building a witness.
    pub fn holds(&self, space: &SpaceDesc, map: &NormalMap) -> Result<Decision, SpaceError> {
        match (self, map) {
            (
                SetTest::Hitting {
                    u: BasicOpen::Cylinder { start: a, word: wa },
                    v: BasicOpen::Cylinder { start: b, word: wb },
                },
                NormalMap::Shift(e),
            ) => {
                let a = a - e;
                let lo = a.max(*b);
                let hi = (a + wa.len() as i64).min(b + wb.len() as i64);
                Ok(Decision::from_bool((lo..hi).all(|i| wa[(i - a) as usize] == wb[(i - b) as usize])))
            }
            (SetTest::Hitting { u: BasicOpen::Rect(us), v: BasicOpen::Rect(vs) }, NormalMap::Product(ms)) => {
                let SpaceDesc::Product(spaces) = space else {
                    return Err(SpaceError::Mismatch("rectangles outside a product space".into()));
                };
                let mut out = Decision::Yes;
                for (((s, m), u), v) in spaces.iter().zip(ms).zip(us).zip(vs) {
                    match (SetTest::Hitting { u: u.clone(), v: v.clone() }).holds(s, m)? {
                        Decision::No => return Ok(Decision::No),
                        Decision::Undecided => out = Decision::Undecided,
                        Decision::Yes => {}
                    }
                }
                Ok(out)
            }
            (SetTest::Hitting { v, .. }, _) => Ok(intersect_basic(space, &map.image(self.u()), v)?.decision()),
            (SetTest::Separation { delta, .. }, _) => {
                Ok(Decision::from_bool(diameter(space, &map.image(self.u()))? > *delta))
            }
        }
    }

    /// Restriction of a rectangle test to one factor.
    fn component(&self, i: usize) -> Option<SetTest> {
        match self {
            SetTest::Hitting { u: BasicOpen::Rect(us), v: BasicOpen::Rect(vs) } => {
                Some(SetTest::Hitting { u: us.get(i)?.clone(), v: vs.get(i)?.clone() })
            }
            SetTest::Separation { u: BasicOpen::Rect(us), delta } => {
                Some(SetTest::Separation { u: us.get(i)?.clone(), delta: delta.clone() })
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    Hitting,
    Separation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MemberEvidence {
    pub n: u64,
    pub detail: String,
}

/// A hitting or separation set cut off at `horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingSet {
    pub space: SpaceDesc,
    pub test: SetTest,
    pub horizon: u64,
    pub members: Vec<u64>,
    /// Circle indices whose membership stayed undecided; excluded from
    /// `members` and from gap statistics.
    pub undecided: Vec<u64>,
    pub evidence: Vec<MemberEvidence>,
}

impl HittingSet {
    pub fn kind(&self) -> SetKind {
        match self.test {
            SetTest::Hitting { .. } => SetKind::Hitting,
            SetTest::Separation { .. } => SetKind::Separation,
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        self.members.binary_search(&n).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Keeps members `<= h`.
    pub fn truncated(&self, h: u64) -> HittingSet {
        let keep = |n: &u64| *n <= h;
        HittingSet {
            space: self.space.clone(),
            test: self.test.clone(),
            horizon: h.min(self.horizon),
            members: self.members.iter().copied().filter(keep).collect(),
            undecided: self.undecided.iter().copied().filter(keep).collect(),
            evidence: self.evidence.iter().filter(|e| e.n <= h).cloned().collect(),
        }
    }
}

/// Prefix maps `f_1^0..f_1^H` shared by many set computations.
pub struct HitEngine<'a> {
    spec: &'a NdsSpec,
    table: PrefixTable,
}

impl<'a> HitEngine<'a> {
    pub fn new(spec: &'a NdsSpec, horizon: u64) -> Result<Self, HitError> {
        if horizon == 0 {
            return Err(HitError::Invalid("horizon must be >= 1".into()));
        }
        Ok(HitEngine { spec, table: PrefixTable::build(spec, horizon)? })
    }

    pub fn spec(&self) -> &NdsSpec {
        self.spec
    }

    pub fn horizon(&self) -> u64 {
        self.table.len()
    }

    pub fn prefix(&self, n: u64) -> &NormalMap {
        self.table.get(n)
    }

    fn check(&self, test: &SetTest) -> Result<(), HitError> {
        let space = self.spec.space();
        let same = |o: &BasicOpen| -> Result<(), HitError> {
            diameter(space, o)?;
            Ok(())
        };
        match test {
            SetTest::Hitting { u, v } => {
                same(u)?;
                same(v)?;
            }
            SetTest::Separation { u, delta } => {
                same(u)?;
                if !delta.is_positive() {
                    return Err(HitError::Invalid("delta must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Decisions for every `n` in `[1, H]`, in order.
    pub fn decisions(&self, test: &SetTest) -> Result<Vec<Decision>, HitError> {
        self.check(test)?;
        let space = self.spec.space();
        (1..=self.horizon()).into_par_iter().map(|n| Ok(test.holds(space, self.table.get(n))?)).collect()
    }

    /// Membership at a single time `n <= H`.
    pub fn decide(&self, test: &SetTest, n: u64) -> Result<Decision, SpaceError> {
        test.holds(self.spec.space(), self.table.get(n))
    }

    pub fn members(&self, test: &SetTest) -> Result<Vec<u64>, HitError> {
        Ok(self.decisions(test)?.into_iter().zip(1u64..).filter(|(d, _)| *d == Decision::Yes).map(|(_, n)| n).collect())
    }

    pub fn set(&self, test: SetTest) -> Result<HittingSet, HitError> {
        self.check(&test)?;
        let space = self.spec.space();
        let rows: Vec<(Decision, Option<String>)> = (1..=self.horizon())
            .into_par_iter()
            .map(|n| test.eval(space, self.table.get(n)))
            .collect::<Result<_, _>>()?;
        let mut hs = HittingSet {
            space: space.clone(),
            test,
            horizon: self.horizon(),
            members: Vec::new(),
            undecided: Vec::new(),
            evidence: Vec::new(),
        };
        for (n, (d, detail)) in (1u64..).zip(rows) {
            match d {
                Decision::Yes => {
                    hs.members.push(n);
                    hs.evidence.push(MemberEvidence { n, detail: detail.unwrap_or_default() });
                }
                Decision::Undecided => hs.undecided.push(n),
                Decision::No => {}
            }
        }
        Ok(hs)
    }
}

pub fn hitting_set(spec: &NdsSpec, u: &BasicOpen, v: &BasicOpen, horizon: u64) -> Result<HittingSet, HitError> {
    HitEngine::new(spec, horizon)?.set(SetTest::Hitting { u: u.clone(), v: v.clone() })
}

pub fn separation_set(
    spec: &NdsSpec,
    u: &BasicOpen,
    delta: &BigRational,
    horizon: u64,
) -> Result<HittingSet, HitError> {
    HitEngine::new(spec, horizon)?.set(SetTest::Separation { u: u.clone(), delta: delta.clone() })
}

/// Exponent laws available for structural arguments about a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemLaw {
    Single(Option<ExponentLaw>),
    Factors(Vec<Option<ExponentLaw>>),
}

impl SystemLaw {
    /// Derives and validates laws up to `h`; factors get their own laws.
    pub fn derive(spec: &NdsSpec, h: u64) -> Result<Self, MapError> {
        match spec.factors() {
            Some(parts) => {
                Ok(SystemLaw::Factors(parts.iter().map(|p| derive_exponent_law(p, h)).collect::<Result<_, _>>()?))
            }
            None => Ok(SystemLaw::Single(derive_exponent_law(spec, h)?)),
        }
    }

    pub fn single(&self) -> Option<&ExponentLaw> {
        match self {
            SystemLaw::Single(l) => l.as_ref(),
            SystemLaw::Factors(_) => None,
        }
    }
}

/// A law-backed argument about every `n`, not just those up to the horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structural {
    /// No member is congruent to any listed residue.
    ExcludedClasses { modulus: u64, residues: Vec<u64>, trace: Vec<String> },
    /// Members lie inside a support with unbounded gaps (or a finite one).
    SparseSupport { support: SupportBound, law: String, trace: String },
    /// Membership is `pattern[(n - start) % period]` for all `n >= start`,
    /// and equals the enumeration below `start`.
    EventuallyPeriodic { start: u64, period: u64, pattern: Vec<bool> },
}

impl Structural {
    /// Whether the argument rules out `n` as a member.
    pub fn excludes(&self, n: u64) -> bool {
        match self {
            Structural::ExcludedClasses { modulus, residues, .. } => residues.contains(&(n % modulus)),
            Structural::SparseSupport { support, .. } => !support.contains(n),
            Structural::EventuallyPeriodic { start, period, pattern } => {
                n >= *start && !pattern[((n - start) % period) as usize]
            }
        }
    }
}

impl fmt::Display for Structural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structural::ExcludedClasses { modulus, residues, .. } => {
                let r: Vec<String> = residues.iter().map(|r| r.to_string()).collect();
                write!(f, "no member is {} mod {modulus}", r.join(" or "))
            }
            Structural::SparseSupport { support, law, .. } => write!(f, "members lie in {support} ({law})"),
            Structural::EventuallyPeriodic { start, period, pattern } => {
                let p: String = pattern.iter().map(|&b| if b { '1' } else { '0' }).collect();
                write!(f, "membership periodic from n = {start} with period {period}: {p}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyEvidence {
    pub horizon: u64,
    pub count: usize,
    /// Largest gap of the member list padded with `0` and `H + 1`.
    pub max_gap: u64,
    /// Largest gap between consecutive members in `[ceil(H/2), H]`, past
    /// the transient start; `None` with fewer than two members there.
    pub eventual_max_gap: Option<u64>,
    /// `H + 1 - last member`; a lower bound on the true trailing gap.
    pub censored_gap: u64,
    pub longest_run: u64,
    /// Smallest `t` with `[t, H]` inside the members.
    pub tail_start: Option<u64>,
    pub structural: Vec<Structural>,
}

impl FrequencyEvidence {
    fn periodic(&self) -> Option<(u64, u64, &[bool])> {
        self.structural.iter().find_map(|s| match s {
            Structural::EventuallyPeriodic { start, period, pattern } => Some((*start, *period, pattern.as_slice())),
            _ => None,
        })
    }

    fn sparse(&self) -> bool {
        self.structural.iter().any(|s| matches!(s, Structural::SparseSupport { .. }))
            || self.structural.iter().any(|s| matches!(s, Structural::ExcludedClasses { modulus: 1, .. }))
    }

    fn excluded_class(&self) -> Option<u64> {
        self.structural.iter().find_map(|s| match s {
            Structural::ExcludedClasses { modulus, .. } => Some(*modulus),
            _ => None,
        })
    }

    /// Structural verdict on syndeticity; enumeration alone never decides.
    pub fn syndetic(&self) -> Tri {
        if let Some((_, _, p)) = self.periodic() {
            return if p.iter().any(|&b| b) { Tri::Yes } else { Tri::No };
        }
        if self.sparse() {
            return Tri::No;
        }
        Tri::Unknown
    }

    pub fn thick(&self) -> Tri {
        if let Some((_, _, p)) = self.periodic() {
            return if p.iter().all(|&b| b) { Tri::Yes } else { Tri::No };
        }
        if self.sparse() || self.excluded_class().is_some() {
            return Tri::No;
        }
        Tri::Unknown
    }

    pub fn cofinite(&self) -> Tri {
        self.thick()
    }

    pub fn finite(&self) -> Tri {
        if let Some((_, _, p)) = self.periodic() {
            return if p.iter().any(|&b| b) { Tri::No } else { Tri::Yes };
        }
        if self.structural.iter().any(|s| {
            matches!(s, Structural::SparseSupport { support: SupportBound::Finite { .. }, .. })
                || matches!(s, Structural::ExcludedClasses { modulus: 1, .. })
        }) {
            return Tri::Yes;
        }
        Tri::Unknown
    }
}

/// Gap, run and tail statistics of a member list over `[1, h]`.
pub fn gap_stats(members: &[u64], h: u64) -> (u64, Option<u64>, u64, u64, Option<u64>) {
    let mut padded = Vec::with_capacity(members.len() + 2);
    padded.push(0);
    padded.extend_from_slice(members);
    padded.push(h + 1);
    let max_gap = padded.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(h + 1);
    let late: Vec<u64> = members.iter().copied().filter(|&n| n >= h.div_ceil(2)).collect();
    let eventual = late.windows(2).map(|w| w[1] - w[0]).max();
    let censored = h + 1 - members.last().copied().unwrap_or(0);
    let mut longest = 0u64;
    let mut run = 0u64;
    let mut prev = None;
    for &n in members {
        run = if prev == Some(n - 1) { run + 1 } else { 1 };
        longest = longest.max(run);
        prev = Some(n);
    }
    let tail = if members.last() == Some(&h) {
        let mut t = h;
        for &n in members.iter().rev().skip(1) {
            if n + 1 == t {
                t = n;
            } else {
                break;
            }
        }
        Some(t)
    } else {
        None
    };
    (max_gap, eventual, censored, longest, tail)
}

/// Enumerative statistics plus every structural argument the laws support.
pub fn classify_frequency(hs: &HittingSet, law: &SystemLaw, spec: Option<&NdsSpec>) -> FrequencyEvidence {
    let (max_gap, eventual_max_gap, censored_gap, longest_run, tail_start) = gap_stats(&hs.members, hs.horizon);
    let mut structural = Vec::new();
    if let Some(p) = spec.and_then(|s| periodic_membership(s, &hs.test)) {
        structural.push(p);
    } else {
        structural.extend(law_arguments(&hs.space, &hs.test, law));
    }
    FrequencyEvidence {
        horizon: hs.horizon,
        count: hs.members.len(),
        max_gap,
        eventual_max_gap,
        censored_gap,
        longest_run,
        tail_start,
        structural,
    }
}

/// Time-`n` map on a single shift or circle factor with net exponent `e`.
fn exp_map(space: &SpaceDesc, e: i64) -> Option<NormalMap> {
    match space {
        SpaceDesc::Shift { .. } => Some(NormalMap::Shift(e)),
        SpaceDesc::Circle { .. } => Some(NormalMap::Rot(e)),
        _ => None,
    }
}

/// `Some(true)` when no listed exponent lets the test succeed.
fn all_fail(space: &SpaceDesc, test: &SetTest, exps: &BTreeSet<i64>) -> Option<bool> {
    for &e in exps {
        match test.eval(space, &exp_map(space, e)?).ok()?.0 {
            Decision::No => {}
            Decision::Yes => return Some(false),
            Decision::Undecided => return None,
        }
    }
    Some(true)
}

/// Per-factor view: the space, the factor test, the law. A plain system is
/// its own single factor.
fn factor_views<'a>(
    space: &'a SpaceDesc,
    test: &SetTest,
    law: &'a SystemLaw,
) -> Vec<(&'a SpaceDesc, SetTest, &'a ExponentLaw)> {
    match (space, law) {
        (SpaceDesc::Product(spaces), SystemLaw::Factors(laws)) => spaces
            .iter()
            .zip(laws)
            .enumerate()
            .filter_map(|(i, (s, l))| Some((s, test.component(i)?, l.as_ref()?)))
            .collect(),
        (_, SystemLaw::Single(Some(l))) => vec![(space, test.clone(), l)],
        _ => Vec::new(),
    }
}

/// Residues `s mod modulus` such that the test fails at every time
/// `n = scale·l` with `l ≡ s`, by the laws alone; each with a trace line.
pub fn excluded_residues(
    space: &SpaceDesc,
    test: &SetTest,
    law: &SystemLaw,
    scale: u64,
    modulus: u64,
) -> Vec<(u64, String)> {
    let views = factor_views(space, test, law);
    let factor_count = match space {
        SpaceDesc::Product(s) => s.len(),
        _ => 1,
    };
    // hitting a rectangle fails as soon as one factor fails; separation
    // needs every factor to stay small
    let any_factor = matches!(test, SetTest::Hitting { .. });
    if views.is_empty() || (!any_factor && views.len() < factor_count) {
        return Vec::new();
    }
    let big = scale * modulus;
    let mut out = Vec::new();
    for s in 0..modulus {
        let class = (scale * s) % big;
        let mut hits = Vec::new();
        for (i, (sp, t, l)) in views.iter().enumerate() {
            let Some(vals) = l.values_on_class(big, class) else { continue };
            if all_fail(sp, t, &vals) == Some(true) {
                hits.push((i, vals));
            }
        }
        let excluded = if any_factor { !hits.is_empty() } else { hits.len() == views.len() };
        if excluded {
            let (i, vals) = &hits[0];
            let vs: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            let who = if factor_count > 1 { format!("factor {} ", i + 1) } else { String::new() };
            out.push((
                s,
                format!(
                    "n = {class} mod {big}: {who}exponents {{{}}} from {} all fail {}",
                    vs.join(","),
                    views[*i].2.form,
                    views[*i].1
                ),
            ));
        }
    }
    out
}

fn law_arguments(space: &SpaceDesc, test: &SetTest, law: &SystemLaw) -> Vec<Structural> {
    let mut out = Vec::new();
    for m in 1..=MAX_MODULUS {
        let ex = excluded_residues(space, test, law, 1, m);
        if !ex.is_empty() {
            let (residues, trace) = ex.into_iter().unzip();
            out.push(Structural::ExcludedClasses { modulus: m, residues, trace });
            break;
        }
    }
    if matches!(test, SetTest::Hitting { .. }) {
        for (s, t, l) in factor_views(space, test, law) {
            let Some(support) = l.support() else { continue };
            if all_fail(s, &t, &BTreeSet::from([0])) == Some(true) {
                out.push(Structural::SparseSupport {
                    trace: format!("E(n) = 0 off {support} and the identity fails {t}"),
                    support,
                    law: l.form.to_string(),
                });
                break;
            }
        }
    }
    out
}

/// `(start, period)` with `f_1^{n + period} = f_1^n` for all `n >= start`,
/// found by cycle detection on finite-state systems.
pub fn prefix_cycle(spec: &NdsSpec) -> Option<(u64, u64)> {
    let (r0, p) = spec.eventual_period()?;
    if !finite_state(spec.space()) {
        return None;
    }
    let mut seen: HashMap<(NormalMap, u64), u64> = HashMap::new();
    let mut acc = NormalMap::identity(spec.space());
    for n in 0..=CYCLE_BUDGET {
        if n > 0 {
            acc = acc.then(&spec.step_map(n).ok()?);
        }
        // f_{n+1} depends only on (n + 1) mod p once n + 1 >= r0
        if n + 1 >= r0 {
            let key = (acc.clone(), n % p);
            if let Some(&first) = seen.get(&key) {
                return Some((first, n - first));
            }
            seen.insert(key, n);
        }
    }
    None
}

/// Exact membership for all `n` on finite-state systems.
pub fn periodic_membership(spec: &NdsSpec, test: &SetTest) -> Option<Structural> {
    let (start, period) = prefix_cycle(spec)?;
    let start = start.max(1);
    let space = spec.space();
    let mut pattern = Vec::with_capacity(period as usize);
    for n in start..start + period {
        match test.eval(space, &spec.prefix_compose(n).ok()?).ok()?.0 {
            Decision::Undecided => return None,
            d => pattern.push(d == Decision::Yes),
        }
    }
    Some(Structural::EventuallyPeriodic { start, period, pattern })
}

fn finite_state(space: &SpaceDesc) -> bool {
    match space {
        SpaceDesc::Finite { .. } => true,
        SpaceDesc::Product(parts) => parts.iter().all(finite_state),
        _ => false,
    }
}
