//! Verdicts for the transitivity, mixing, sensitivity and periodicity
//! properties, quantified over a finite basis and a finite horizon.
//!
//! A verdict is `Witnessed` only with a witness per basis tuple, and
//! `Refuted` only with an argument that covers every time: a validated
//! exponent law, an exact cycle of a finite-state system, or a point fixed by
//! every map. Everything else is `Inconclusive`.

mod adversary;
mod bits;
mod points;
mod property;
mod sensitivity;
mod transitivity;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::hitting::{prefix_cycle, HitEngine, HitError, SetTest, SystemLaw};
use crate::maps::{ExponentLaw, MapError, NdsSpec, SupportBound};
use crate::spaces::{enumerate_basis, BasicOpen, BiWord, Decision, Point, SpaceDesc, SpaceError};

pub use adversary::{
    build_gap_adversary, build_progression_adversary, hitting_infinity_consistency, ConsistencyReport,
};
pub use bits::{minimal_antichain, Bits};
pub use property::{parse_rational, PropertyKind, PropertyParseError, Status, PROPERTY_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Hit(#[from] HitError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub resolution: u32,
    pub horizon: u64,
    /// Laws are validated against stepwise composition up to here.
    pub law_horizon: u64,
    /// Largest gap accepted as enumerative evidence of syndeticity;
    /// defaults to `H / 4`.
    pub syndetic_gap: Option<u64>,
    /// Shortest run accepted as evidence of thickness; defaults to `H / 4`.
    pub thick_run: Option<u64>,
    /// Tuple size for multi-sensitivity.
    pub multi_m: u32,
    /// Representative points for minimality on the shift.
    pub shift_points: Vec<BiWord>,
    /// Largest period tried for periodic points.
    pub max_period: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            resolution: 2,
            horizon: 512,
            law_horizon: 2048,
            syndetic_gap: None,
            thick_run: None,
            multi_m: 3,
            shift_points: default_shift_points(),
            max_period: 12,
        }
    }
}

impl CheckConfig {
    pub fn new(resolution: u32, horizon: u64) -> Self {
        CheckConfig { resolution, horizon, ..CheckConfig::default() }
    }

    pub fn gap_limit(&self) -> u64 {
        self.syndetic_gap.unwrap_or((self.horizon / 4).max(1))
    }

    pub fn run_limit(&self) -> u64 {
        self.thick_run.unwrap_or((self.horizon / 4).max(1))
    }
}

/// All-0, all-1, and the concatenation of all binary words of length <= 4
/// placed at index 0.
pub fn default_shift_points() -> Vec<BiWord> {
    let mut w = Vec::new();
    for len in 1..=4u32 {
        for code in 0..(1u32 << len) {
            for b in (0..len).rev() {
                w.push(((code >> b) & 1) as u8);
            }
        }
    }
    vec![BiWord::constant(0), BiWord::constant(1), BiWord::from_window(0, w, 0)]
}

/// One row of a witness table: the sets of a basis tuple and the smallest
/// time that works for all of them.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessEntry {
    pub sets: Vec<String>,
    pub time: u64,
    #[serde(skip)]
    pub checks: Vec<Check>,
}

/// A replayable fact behind a witness entry.
#[derive(Clone, Debug)]
pub enum Check {
    /// The test holds at `multiplier · time`.
    Test(u64, SetTest),
    /// `f_1^time(p)` lies in the set.
    Visit(Point, BasicOpen),
    /// `f_1^{k n}(p) = p` for every `n`.
    Periodic(Point, u64),
    /// `f_1^1(U) ∪ ... ∪ f_1^time(U)` is the whole space.
    Covers(BasicOpen),
}

/// Gap statistics across all sets of a frequency check.
#[derive(Clone, Debug, Serialize)]
pub struct GapSummary {
    /// Largest gap with the `{0, H + 1}` padding.
    pub max_gap: u64,
    /// Largest gap between consecutive members in the second half of the
    /// window.
    pub eventual_max_gap: u64,
    /// Largest trailing gap touching the horizon.
    pub censored_gap: u64,
    pub shortest_longest_run: u64,
}

/// What a refutation claims, stated so it can be re-run on any horizon.
#[derive(Clone, Debug)]
pub enum Claim {
    /// For every `l`, some `(j, test)` fails at time `j · l`.
    NeverJointly(Vec<(u64, SetTest)>),
    /// The test fails at every time outside the support.
    FailsOff(SetTest, SupportBound),
    /// The test fails at every `n >= from` with `n ≡ residue (mod modulus)`.
    FailsOnClass { test: SetTest, modulus: u64, residue: u64, from: u64 },
    /// The point's orbit, time 0 included, never enters the open set.
    NeverEnters(Point, BasicOpen),
    /// The test fails at every `n >= from`.
    FailsFrom(SetTest, u64),
    /// `f_n` is not surjective.
    NotSurjectiveAt(u64),
    /// Recorded only; nothing to replay (trivial diameter bounds, per-term
    /// checks).
    Static,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Witnesses {
        resolution: u32,
        horizon: u64,
        /// Basis tuples after removing duplicate and dominated sets.
        tuples: u64,
        max_time: u64,
        entries: Vec<WitnessEntry>,
        gaps: Option<GapSummary>,
        note: Option<String>,
    },
    Structural {
        sets: Vec<String>,
        argument: String,
        trace: Vec<String>,
        laws: Vec<String>,
        validated_to: u64,
        #[serde(skip)]
        claim: Claim,
        #[serde(skip)]
        law_objects: Vec<(Option<usize>, ExponentLaw)>,
    },
    Exact {
        detail: String,
        trace: Vec<String>,
        #[serde(skip)]
        claim: Claim,
    },
    Exhausted {
        resolution: u32,
        horizon: u64,
        open: Vec<String>,
        detail: String,
    },
    /// Sub-verdicts on the iterate systems of the listed orders.
    Parts {
        orders: Vec<u64>,
        parts: Vec<Verdict>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub property: PropertyKind,
    pub status: Status,
    pub evidence: Evidence,
    pub caveats: Vec<String>,
}

impl Verdict {
    fn new(property: &PropertyKind, status: Status, evidence: Evidence) -> Self {
        Verdict { property: property.clone(), status, evidence, caveats: Vec::new() }
    }

    fn caveat(mut self, c: impl Into<String>) -> Self {
        self.caveats.push(c.into());
        self
    }

    /// Largest reported witness time, if the evidence is a witness table.
    pub fn max_time(&self) -> Option<u64> {
        match &self.evidence {
            Evidence::Witnesses { max_time, .. } => Some(*max_time),
            _ => None,
        }
    }

    pub fn gaps(&self) -> Option<&GapSummary> {
        match &self.evidence {
            Evidence::Witnesses { gaps, .. } => gaps.as_ref(),
            _ => None,
        }
    }

    /// Replays the evidence against `spec`: every witness entry is re-tested
    /// at its time, every law re-validated, every refutation claim re-run on
    /// `[1, h]`.
    pub fn recheck(&self, spec: &NdsSpec, h: u64) -> Result<(), String> {
        recheck_evidence(spec, &self.evidence, h)
    }
}

fn recheck_evidence(spec: &NdsSpec, ev: &Evidence, h: u64) -> Result<(), String> {
    let space = spec.space();
    let fails = |test: &SetTest, n: u64| -> Result<bool, String> {
        let m = spec.prefix_compose(n).map_err(|e| e.to_string())?;
        Ok(test.holds(space, &m).map_err(|e| e.to_string())? == Decision::No)
    };
    let replay = |claim: &Claim| -> Result<(), String> {
        match claim {
            Claim::NeverJointly(tests) => {
                let jmax = tests.iter().map(|(j, _)| *j).max().unwrap_or(1);
                for l in 1..=h / jmax {
                    let mut any = false;
                    for (j, t) in tests {
                        if fails(t, j * l)? {
                            any = true;
                            break;
                        }
                    }
                    if !any {
                        return Err(format!("claimed joint failure does not hold at l = {l}"));
                    }
                }
                Ok(())
            }
            Claim::FailsOff(t, support) => {
                for n in (1..=h).filter(|n| !support.contains(*n)) {
                    if !fails(t, n)? {
                        return Err(format!("{t} holds at n = {n} outside {support}"));
                    }
                }
                Ok(())
            }
            Claim::FailsOnClass { test, modulus, residue, from } => {
                for n in (*from.max(&1)..=h).filter(|n| n % modulus == *residue) {
                    if !fails(test, n)? {
                        return Err(format!("{test} holds at n = {n} = {residue} mod {modulus}"));
                    }
                }
                Ok(())
            }
            Claim::NeverEnters(p, o) => {
                let orbit = crate::maps::orbit(spec, p, h).map_err(|e| e.to_string())?;
                for (n, x) in orbit.iter().enumerate() {
                    if o.contains(space, x).map_err(|e| e.to_string())? != Decision::No {
                        return Err(format!("orbit of {p} enters {o} at n = {n}"));
                    }
                }
                Ok(())
            }
            Claim::FailsFrom(test, from) => {
                for n in *from.max(&1)..=h {
                    if !fails(test, n)? {
                        return Err(format!("{test} holds at n = {n} >= {from}"));
                    }
                }
                Ok(())
            }
            Claim::NotSurjectiveAt(n) => {
                if points::term_surjective(&spec.eval_term(*n).map_err(|e| e.to_string())?) {
                    return Err(format!("f_{n} is surjective"));
                }
                Ok(())
            }
            Claim::Static => Ok(()),
        }
    };
    match ev {
        Evidence::Witnesses { entries, .. } => {
            for e in entries {
                for c in &e.checks {
                    match c {
                        Check::Test(j, t) => {
                            if fails(t, j * e.time)? {
                                return Err(format!("witness {} at time {} fails", t, j * e.time));
                            }
                        }
                        Check::Visit(p, o) => {
                            let m = spec.prefix_compose(e.time).map_err(|e| e.to_string())?;
                            if o.contains(space, &m.apply(p)).map_err(|e| e.to_string())? != Decision::Yes {
                                return Err(format!("f_1^{}({p}) is not in {o}", e.time));
                            }
                        }
                        Check::Covers(u) => {
                            if points::covers(spec, u, e.time).map_err(|e| e.to_string())? != Decision::Yes {
                                return Err(format!("images of {u} up to time {} do not cover", e.time));
                            }
                        }
                        Check::Periodic(p, k) => {
                            for n in 1..=(h / k).max(1) {
                                let m = spec.prefix_compose(k * n).map_err(|e| e.to_string())?;
                                if m.apply(p) != *p {
                                    return Err(format!("{p} is not fixed at time {}", k * n));
                                }
                            }
                        }
                    }
                }
            }
            Ok(())
        }
        Evidence::Structural { claim, law_objects, .. } => {
            for (factor, law) in law_objects {
                let target = match factor {
                    Some(i) => &spec.factors().ok_or("factor law on a non-product")?[*i],
                    None => spec,
                };
                law.validate(target, law.validated_up_to).map_err(|e| e.to_string())?;
            }
            replay(claim)
        }
        Evidence::Exact { claim, .. } => replay(claim),
        Evidence::Exhausted { .. } => Ok(()),
        Evidence::Parts { orders, parts } => orders.iter().zip(parts).try_for_each(|(k, v)| {
            let it = NdsSpec::iterate(spec.clone(), *k).map_err(|e| e.to_string())?;
            v.recheck(&it, h)
        }),
    }
}

/// Hitting or separation bitset over `[1, len]` plus whether any time was
/// left undecided.
#[derive(Clone, Debug)]
pub(crate) struct TimeSet {
    pub yes: Bits,
    pub undecided: bool,
}

/// Shared state for one check.
pub(crate) struct Ctx<'a> {
    pub spec: &'a NdsSpec,
    pub cfg: &'a CheckConfig,
    pub basis: Vec<BasicOpen>,
    pub law: SystemLaw,
    /// `(start, period)` of the prefix maps on finite-state systems.
    pub cycle: Option<(u64, u64)>,
}

impl<'a> Ctx<'a> {
    pub fn new(spec: &'a NdsSpec, cfg: &'a CheckConfig) -> Result<Self, CheckError> {
        if cfg.resolution == 0 || cfg.horizon == 0 {
            return Err(CheckError::Invalid("resolution and horizon must be >= 1".into()));
        }
        let law_h = cfg.law_horizon.max(cfg.horizon);
        Ok(Ctx {
            spec,
            cfg,
            basis: enumerate_basis(spec.space(), cfg.resolution),
            law: SystemLaw::derive(spec, law_h)?,
            cycle: prefix_cycle(spec),
        })
    }

    pub fn space(&self) -> &SpaceDesc {
        self.spec.space()
    }

    /// Horizon that decides every time-periodic question exactly on
    /// finite-state systems: one full cycle past its start.
    pub fn exact_len(&self) -> Option<u64> {
        self.cycle.map(|(s, p)| s.max(1) + p - 1)
    }

    pub fn pairs(&self) -> Vec<SetTest> {
        let mut out = Vec::with_capacity(self.basis.len() * self.basis.len());
        for u in &self.basis {
            for v in &self.basis {
                out.push(SetTest::Hitting { u: u.clone(), v: v.clone() });
            }
        }
        out
    }

    /// Time sets over `[1, len]`, one per test, in input order. Rectangle
    /// tests on products reuse per-factor sets.
    pub fn time_sets(&self, engine: &HitEngine, tests: &[SetTest], len: u64) -> Result<Vec<TimeSet>, CheckError> {
        let space = self.space();
        if let (SpaceDesc::Product(spaces), true) =
            (space, tests.iter().all(|t| matches!(t, SetTest::Hitting { u: BasicOpen::Rect(_), .. })))
        {
            // factor pairs first, then intersect
            let mut keys: Vec<(usize, SetTest)> = Vec::new();
            let mut index: HashMap<(usize, String), usize> = HashMap::new();
            let mut plan: Vec<Vec<usize>> = Vec::with_capacity(tests.len());
            for t in tests {
                let SetTest::Hitting { u: BasicOpen::Rect(us), v: BasicOpen::Rect(vs) } = t else { unreachable!() };
                let mut row = Vec::with_capacity(us.len());
                for (i, (u, v)) in us.iter().zip(vs).enumerate() {
                    let ft = SetTest::Hitting { u: u.clone(), v: v.clone() };
                    let key = (i, format!("{u}|{v}"));
                    let id = *index.entry(key).or_insert_with(|| {
                        keys.push((i, ft));
                        keys.len() - 1
                    });
                    row.push(id);
                }
                plan.push(row);
            }
            let factor_sets: Vec<TimeSet> = keys
                .par_iter()
                .map(|(i, t)| {
                    let mut ts = TimeSet { yes: Bits::new(len), undecided: false };
                    for n in 1..=len {
                        let m = &engine.prefix(n).components().expect("product map")[*i];
                        match t.holds(&spaces[*i], m)? {
                            Decision::Yes => ts.yes.set(n),
                            Decision::Undecided => ts.undecided = true,
                            Decision::No => {}
                        }
                    }
                    Ok(ts)
                })
                .collect::<Result<_, CheckError>>()?;
            return Ok(plan
                .into_par_iter()
                .map(|row| {
                    let mut acc = factor_sets[row[0]].clone();
                    for &id in &row[1..] {
                        acc.yes.and_assign(&factor_sets[id].yes);
                        acc.undecided |= factor_sets[id].undecided;
                    }
                    acc
                })
                .collect());
        }
        tests
            .par_iter()
            .map(|t| {
                let mut ts = TimeSet { yes: Bits::new(len), undecided: false };
                for n in 1..=len {
                    match engine.decide(t, n)? {
                        Decision::Yes => ts.yes.set(n),
                        Decision::Undecided => ts.undecided = true,
                        Decision::No => {}
                    }
                }
                Ok(ts)
            })
            .collect()
    }

    pub fn law_strings(&self) -> Vec<String> {
        self.law_objects().iter().map(|(_, l)| l.form.to_string()).collect()
    }

    pub fn law_objects(&self) -> Vec<(Option<usize>, ExponentLaw)> {
        match &self.law {
            SystemLaw::Single(Some(l)) => vec![(None, l.clone())],
            SystemLaw::Single(None) => Vec::new(),
            SystemLaw::Factors(ls) => ls.iter().enumerate().filter_map(|(i, l)| Some((Some(i), l.clone()?))).collect(),
        }
    }

    pub fn law_validated_to(&self) -> u64 {
        self.cfg.law_horizon.max(self.cfg.horizon)
    }

    pub fn structural(&self, sets: Vec<String>, argument: String, trace: Vec<String>, claim: Claim) -> Evidence {
        Evidence::Structural {
            sets,
            argument,
            trace,
            laws: self.law_strings(),
            validated_to: self.law_validated_to(),
            claim,
            law_objects: self.law_objects(),
        }
    }

    pub fn exhausted(&self, open: Vec<String>, detail: impl Into<String>) -> Evidence {
        Evidence::Exhausted { resolution: self.cfg.resolution, horizon: self.cfg.horizon, open, detail: detail.into() }
    }
}

/// Groups equal time sets; returns the distinct sets and, for each, the
/// index of its first test.
pub(crate) fn distinct(sets: &[TimeSet]) -> (Vec<Bits>, Vec<usize>) {
    let mut seen: HashMap<&Bits, usize> = HashMap::new();
    let mut out = Vec::new();
    let mut rep = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        if !seen.contains_key(&s.yes) {
            seen.insert(&s.yes, out.len());
            out.push(s.yes.clone());
            rep.push(i);
        }
    }
    (out, rep)
}

/// Decides `prop` for `spec` at basis resolution `cfg.resolution` and horizon
/// `cfg.horizon`.
pub fn check_property(spec: &NdsSpec, prop: &PropertyKind, cfg: &CheckConfig) -> Result<Verdict, CheckError> {
    let ctx = Ctx::new(spec, cfg)?;
    match prop {
        PropertyKind::Transitive => transitivity::transitive(&ctx, prop),
        PropertyKind::WeaklyMixing { order } => transitivity::weakly_mixing(&ctx, prop, *order),
        PropertyKind::Mixing => transitivity::mixing(&ctx, prop),
        PropertyKind::MildlyMixing => transitivity::mildly_mixing(&ctx, prop),
        PropertyKind::TotallyTransitive { s_max } => transitivity::totally_transitive(spec, cfg, prop, *s_max),
        PropertyKind::StronglyTransitive => points::strongly_transitive(&ctx, prop),
        PropertyKind::MultiTransitive { m_max } => transitivity::multi_transitive(&ctx, prop, *m_max),
        PropertyKind::SyndeticallyTransitive => transitivity::syndetically_transitive(&ctx, prop),
        PropertyKind::Minimal => points::minimal(&ctx, prop),
        PropertyKind::FeebleOpen => points::feeble_open(&ctx, prop),
        PropertyKind::SurjectiveSequence => points::surjective(&ctx, prop),
        PropertyKind::DensePeriodicPoints => points::dense_periodic(&ctx, prop),
        PropertyKind::AlmostPeriodicPoint { point } => points::almost_periodic(&ctx, prop, *point),
        PropertyKind::Sensitive { delta } => sensitivity::sensitive(&ctx, prop, delta),
        PropertyKind::SyndeticallySensitive { delta } => sensitivity::syndetically_sensitive(&ctx, prop, delta),
        PropertyKind::ThicklySensitive { delta } => sensitivity::thickly_sensitive(&ctx, prop, delta),
        PropertyKind::MultiSensitive { delta } => sensitivity::multi_sensitive(&ctx, prop, delta),
    }
}

#[cfg(test)]
mod tests;
