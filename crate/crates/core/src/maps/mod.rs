//! Map terms, rule-based map sequences, exact composition and derived systems.

mod law;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::integer::lcm;
use thiserror::Error;

use crate::spaces::{ArcCenter, BasicOpen, Point, SpaceDesc, SpaceError};

pub use law::{derive_exponent_law, ExponentLaw, LawForm, SupportBound};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("rules {first} and {second} both match index {index}")]
    Overlap { index: u64, first: String, second: String },
    #[error("term {term} does not act on {space}")]
    WrongSpace { term: String, space: String },
    #[error("invalid map: {0}")]
    Invalid(String),
    #[error("exponent law {law} disagrees with composition at n = {n}: law {expected}, actual {actual}")]
    LawValidation { law: String, n: u64, expected: i64, actual: i64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Total self-map of `{1, ..., n}`, stored 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteTable(Vec<u32>);

impl FiniteTable {
    pub fn new(images: Vec<u32>) -> Result<Self, MapError> {
        let n = images.len() as u32;
        if n == 0 {
            return Err(MapError::Invalid("empty table".into()));
        }
        if let Some(bad) = images.iter().find(|&&v| v == 0 || v > n) {
            return Err(MapError::Invalid(format!("table image {bad} outside 1..={n}")));
        }
        Ok(FiniteTable(images))
    }

    pub fn identity(n: u32) -> Self {
        FiniteTable((1..=n).collect())
    }

    pub fn constant(n: u32, value: u32) -> Result<Self, MapError> {
        Self::new(vec![value; n as usize])
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: u32) -> u32 {
        self.0[(i - 1) as usize]
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    pub fn is_surjective(&self) -> bool {
        let hit: BTreeSet<u32> = self.0.iter().copied().collect();
        hit.len() == self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| v == i as u32 + 1)
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &FiniteTable) -> FiniteTable {
        FiniteTable(self.0.iter().map(|&v| after.get(v)).collect())
    }
}

impl fmt::Display for FiniteTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().enumerate().map(|(i, v)| format!("{}->{}", i + 1, v)).collect();
        write!(f, "table{{{}}}", parts.join(","))
    }
}

/// A single map `f_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MapTerm {
    Identity,
    ShiftPow(i64),
    RotPow(i64),
    FiniteFn(FiniteTable),
    Tuple(Vec<MapTerm>),
}

impl fmt::Display for MapTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapTerm::Identity => write!(f, "id"),
            MapTerm::ShiftPow(e) => write!(f, "sigma^{e}"),
            MapTerm::RotPow(c) => write!(f, "rot^{c}"),
            MapTerm::FiniteFn(t) => write!(f, "{t}"),
            MapTerm::Tuple(ts) => {
                let s: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
                write!(f, "({})", s.join(", "))
            }
        }
    }
}

/// Exponent of a rule term: a constant, or `scale·k` at the k-th match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Const(i64),
    Ordinal(i64),
}

impl Exponent {
    pub fn value(self, ordinal: u64) -> i64 {
        match self {
            Exponent::Const(c) => c,
            Exponent::Ordinal(s) => s * ordinal as i64,
        }
    }

    pub fn negated(self) -> Exponent {
        match self {
            Exponent::Const(c) => Exponent::Const(-c),
            Exponent::Ordinal(s) => Exponent::Ordinal(-s),
        }
    }

    pub fn is_ordinal(self) -> bool {
        matches!(self, Exponent::Ordinal(s) if s != 0)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Const(c) => write!(f, "{c}"),
            Exponent::Ordinal(1) => write!(f, "k"),
            Exponent::Ordinal(-1) => write!(f, "-k"),
            Exponent::Ordinal(s) => write!(f, "{s}k"),
        }
    }
}

/// Right-hand side of a rule; may depend on the match ordinal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermTemplate {
    Identity,
    ShiftPow(Exponent),
    RotPow(Exponent),
    FiniteFn(FiniteTable),
}

impl TermTemplate {
    pub fn instantiate(&self, ordinal: u64) -> MapTerm {
        match self {
            TermTemplate::Identity => MapTerm::Identity,
            TermTemplate::ShiftPow(e) => MapTerm::ShiftPow(e.value(ordinal)),
            TermTemplate::RotPow(e) => MapTerm::RotPow(e.value(ordinal)),
            TermTemplate::FiniteFn(t) => MapTerm::FiniteFn(t.clone()),
        }
    }

    pub fn uses_ordinal(&self) -> bool {
        match self {
            TermTemplate::ShiftPow(e) | TermTemplate::RotPow(e) => e.is_ordinal(),
            _ => false,
        }
    }

    /// Exponent of a shift or rotation template; `Identity` counts as 0.
    pub fn exponent(&self) -> Option<Exponent> {
        match self {
            TermTemplate::Identity => Some(Exponent::Const(0)),
            TermTemplate::ShiftPow(e) | TermTemplate::RotPow(e) => Some(*e),
            TermTemplate::FiniteFn(_) => None,
        }
    }

    fn check_space(&self, space: &SpaceDesc) -> Result<(), MapError> {
        let ok = match (self, space) {
            (TermTemplate::Identity, _) => true,
            (TermTemplate::ShiftPow(_), SpaceDesc::Shift { .. }) => true,
            (TermTemplate::RotPow(_), SpaceDesc::Circle { .. }) => true,
            (TermTemplate::FiniteFn(t), SpaceDesc::Finite { point_count }) => t.len() == *point_count,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(MapError::WrongSpace { term: self.to_string(), space: space.to_string() })
        }
    }
}

impl fmt::Display for TermTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermTemplate::Identity => write!(f, "id"),
            TermTemplate::ShiftPow(e) => write!(f, "sigma^{e}"),
            TermTemplate::RotPow(e) => write!(f, "rot^{e}"),
            TermTemplate::FiniteFn(t) => write!(f, "{t}"),
        }
    }
}

/// Set of indices a rule fires on; matches are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexPattern {
    Equals(u64),
    /// `first, first + step, ...`
    ArithProg {
        first: u64,
        step: u64,
    },
    /// `base^k + offset` for `k >= 1`.
    PowerPos {
        base: u64,
        offset: u64,
    },
}

impl IndexPattern {
    pub fn validate(&self) -> Result<(), MapError> {
        match *self {
            IndexPattern::Equals(0) => Err(MapError::Invalid("indices start at 1".into())),
            IndexPattern::ArithProg { first, step } if first == 0 || step == 0 => {
                Err(MapError::Invalid("progression needs first >= 1 and step >= 1".into()))
            }
            IndexPattern::PowerPos { base, .. } if base < 2 => Err(MapError::Invalid("power base must be >= 2".into())),
            _ => Ok(()),
        }
    }

    /// Match ordinal of `n`, if `n` matches.
    pub fn matches(&self, n: u64) -> Option<u64> {
        match *self {
            IndexPattern::Equals(m) => (m == n).then_some(1),
            IndexPattern::ArithProg { first, step } => {
                (n >= first && (n - first).is_multiple_of(step)).then(|| (n - first) / step + 1)
            }
            IndexPattern::PowerPos { base, offset } => {
                if n <= offset {
                    return None;
                }
                let mut v = n - offset;
                let mut k = 0;
                while v.is_multiple_of(base) {
                    v /= base;
                    k += 1;
                }
                (v == 1 && k >= 1).then_some(k)
            }
        }
    }

    /// The k-th matching index (k >= 1); `None` on overflow or past the end.
    pub fn nth(&self, k: u64) -> Option<u64> {
        if k == 0 {
            return None;
        }
        match *self {
            IndexPattern::Equals(m) => (k == 1).then_some(m),
            IndexPattern::ArithProg { first, step } => step.checked_mul(k - 1)?.checked_add(first),
            IndexPattern::PowerPos { base, offset } => base.checked_pow(u32::try_from(k).ok()?)?.checked_add(offset),
        }
    }

    pub fn first(&self) -> u64 {
        self.nth(1).unwrap_or(u64::MAX)
    }

    /// The pattern moved one index later.
    pub fn successor(&self) -> IndexPattern {
        match *self {
            IndexPattern::Equals(m) => IndexPattern::Equals(m + 1),
            IndexPattern::ArithProg { first, step } => IndexPattern::ArithProg { first: first + 1, step },
            IndexPattern::PowerPos { base, offset } => IndexPattern::PowerPos { base, offset: offset + 1 },
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, IndexPattern::Equals(_))
    }

    /// Matching indices up to `h`.
    pub fn members_upto(&self, h: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut k = 1;
        while let Some(n) = self.nth(k) {
            if n > h {
                break;
            }
            out.push(n);
            k += 1;
        }
        out
    }

    /// Whether some match is congruent to `r` modulo `m`.
    pub fn meets_class(&self, m: u64, r: u64) -> bool {
        let r = r % m;
        match *self {
            IndexPattern::Equals(n) => n % m == r,
            IndexPattern::ArithProg { first, step } => (0..m).any(|j| (first + step * j) % m == r),
            IndexPattern::PowerPos { base, offset } => {
                // b^k mod m is periodic after at most log2(m) steps with period < m
                let mut p = base % m;
                for _ in 0..(2 * m + 64) {
                    if (p + offset) % m == r {
                        return true;
                    }
                    p = (p * base) % m;
                }
                false
            }
        }
    }

    /// Largest gap between consecutive matches is unbounded.
    pub fn has_unbounded_gaps(&self) -> bool {
        !matches!(self, IndexPattern::ArithProg { .. })
    }
}

impl fmt::Display for IndexPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexPattern::Equals(n) => write!(f, "{n}"),
            IndexPattern::ArithProg { first, step } => write!(f, "ap({first},{step})"),
            IndexPattern::PowerPos { base, offset } => write!(f, "pow({base},{offset})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub pattern: IndexPattern,
    pub term: TermTemplate,
}

impl Rule {
    pub fn new(pattern: IndexPattern, term: TermTemplate) -> Self {
        Rule { pattern, term }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.pattern, self.term)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpecKind {
    Rules {
        rules: Vec<Rule>,
        default: TermTemplate,
    },
    /// `f_{k,∞}`.
    Tail {
        k: u64,
        base: Box<NdsSpec>,
    },
    /// `f^{[k]}`.
    Iterate {
        k: u64,
        base: Box<NdsSpec>,
    },
    Product(Vec<NdsSpec>),
}

/// A map sequence `f_1, f_2, ...` over one phase space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NdsSpec {
    space: SpaceDesc,
    kind: SpecKind,
}

pub const DEFAULT_VALIDATION_HORIZON: u64 = 4096;

impl NdsSpec {
    /// Rule-based sequence; patterns are checked pairwise disjoint on `[1, horizon]`.
    pub fn rules(space: SpaceDesc, rules: Vec<Rule>, default: TermTemplate, horizon: u64) -> Result<Self, MapError> {
        if matches!(space, SpaceDesc::Product(_)) {
            return Err(MapError::Invalid("rule blocks act on a single factor space".into()));
        }
        if default.uses_ordinal() {
            return Err(MapError::Invalid("the default term cannot use the match ordinal".into()));
        }
        default.check_space(&space)?;
        for r in &rules {
            r.pattern.validate()?;
            r.term.check_space(&space)?;
        }
        check_disjoint(&rules, horizon)?;
        Ok(NdsSpec { space, kind: SpecKind::Rules { rules, default } })
    }

    /// The same map at every index.
    pub fn constant(space: SpaceDesc, term: TermTemplate) -> Result<Self, MapError> {
        Self::rules(space, Vec::new(), term, 0)
    }

    pub fn tail(base: NdsSpec, k: u64) -> Result<Self, MapError> {
        if k == 0 {
            return Err(MapError::Invalid("tail index must be >= 1".into()));
        }
        Ok(NdsSpec { space: base.space.clone(), kind: SpecKind::Tail { k, base: Box::new(base) } })
    }

    pub fn iterate(base: NdsSpec, k: u64) -> Result<Self, MapError> {
        if k == 0 {
            return Err(MapError::Invalid("iterate order must be >= 1".into()));
        }
        Ok(NdsSpec { space: base.space.clone(), kind: SpecKind::Iterate { k, base: Box::new(base) } })
    }

    pub fn product(parts: Vec<NdsSpec>) -> Result<Self, MapError> {
        if parts.len() < 2 {
            return Err(MapError::Invalid("a product needs at least two factors".into()));
        }
        let space = SpaceDesc::Product(parts.iter().map(|p| p.space.clone()).collect());
        Ok(NdsSpec { space, kind: SpecKind::Product(parts) })
    }

    pub fn space(&self) -> &SpaceDesc {
        &self.space
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    /// `f_i`.
    pub fn eval_term(&self, i: u64) -> Result<MapTerm, MapError> {
        assert!(i >= 1, "indices start at 1");
        match &self.kind {
            SpecKind::Rules { rules, default } => {
                let mut hit: Option<(&Rule, u64)> = None;
                for r in rules {
                    if let Some(k) = r.pattern.matches(i) {
                        if let Some((prev, _)) = hit {
                            return Err(MapError::Overlap { index: i, first: prev.to_string(), second: r.to_string() });
                        }
                        hit = Some((r, k));
                    }
                }
                Ok(match hit {
                    Some((r, k)) => r.term.instantiate(k),
                    None => default.instantiate(0),
                })
            }
            SpecKind::Tail { k, base } => base.eval_term(i + k - 1),
            SpecKind::Iterate { k, base } => Ok(base.window_compose(k * (i - 1) + 1, *k)?.to_term()),
            SpecKind::Product(parts) => {
                Ok(MapTerm::Tuple(parts.iter().map(|p| p.eval_term(i)).collect::<Result<_, _>>()?))
            }
        }
    }

    pub fn step_map(&self, i: u64) -> Result<NormalMap, MapError> {
        NormalMap::from_term(&self.space, &self.eval_term(i)?)
    }

    /// `f_i^k = f_{i+k-1} ∘ ... ∘ f_i`; identity for `k = 0`.
    pub fn window_compose(&self, i: u64, k: u64) -> Result<NormalMap, MapError> {
        if let SpecKind::Product(parts) = &self.kind {
            return Ok(NormalMap::Product(parts.iter().map(|p| p.window_compose(i, k)).collect::<Result<_, _>>()?));
        }
        if let SpecKind::Tail { k: t, base } = &self.kind {
            return base.window_compose(i + t - 1, k);
        }
        if let SpecKind::Iterate { k: s, base } = &self.kind {
            return base.window_compose(s * (i - 1) + 1, s * k);
        }
        let mut acc = NormalMap::identity(&self.space);
        for j in i..i + k {
            acc = acc.then(&self.step_map(j)?);
        }
        Ok(acc)
    }

    /// `f_1^n`.
    pub fn prefix_compose(&self, n: u64) -> Result<NormalMap, MapError> {
        self.window_compose(1, n)
    }

    /// Whether the default term fires at infinitely many indices.
    pub fn default_is_recurrent(&self) -> bool {
        let SpecKind::Rules { rules, .. } = &self.kind else {
            return false;
        };
        let start = rules.iter().map(|r| r.pattern.first()).filter(|&f| f != u64::MAX).max().unwrap_or(0) + 1;
        let period = rules
            .iter()
            .filter_map(|r| match r.pattern {
                IndexPattern::ArithProg { step, .. } => Some(step),
                _ => None,
            })
            .fold(1u64, lcm);
        // power patterns have density zero, so only progressions can cover a
        // whole residue class
        (start..start + period).any(|n| {
            !rules.iter().any(|r| matches!(r.pattern, IndexPattern::ArithProg { .. }) && r.pattern.matches(n).is_some())
        })
    }

    /// `(r0, p)` with `f_{n+p} = f_n` for all `n >= r0`, when the term
    /// sequence is provably eventually periodic.
    pub fn eventual_period(&self) -> Option<(u64, u64)> {
        match &self.kind {
            SpecKind::Rules { rules, .. } => {
                let mut r0 = 1u64;
                let mut p = 1u64;
                for r in rules {
                    match r.pattern {
                        IndexPattern::Equals(n) => r0 = r0.max(n + 1),
                        IndexPattern::ArithProg { first, step } => {
                            if r.term.uses_ordinal() {
                                return None;
                            }
                            r0 = r0.max(first);
                            p = lcm(p, step);
                        }
                        IndexPattern::PowerPos { .. } => return None,
                    }
                }
                Some((r0, p))
            }
            SpecKind::Tail { k, base } => {
                let (r0, p) = base.eventual_period()?;
                Some(((r0 + 1).saturating_sub(*k).max(1), p))
            }
            SpecKind::Iterate { k, base } => {
                let (r0, p) = base.eventual_period()?;
                // window k(n-1)+1 starts at or after r0 once n >= (r0-1)/k + 1
                let n0 = (r0 + k - 2) / k + 1;
                Some((n0, p / num::integer::gcd(p, *k)))
            }
            SpecKind::Product(parts) => {
                let mut r0 = 1;
                let mut p = 1;
                for q in parts {
                    let (a, b) = q.eventual_period()?;
                    r0 = r0.max(a);
                    p = lcm(p, b);
                }
                Some((r0, p))
            }
        }
    }

    /// Every index at which a non-default rule fires, up to `h`.
    pub fn rule_indices_upto(&self, h: u64) -> BTreeSet<u64> {
        match &self.kind {
            SpecKind::Rules { rules, .. } => rules.iter().flat_map(|r| r.pattern.members_upto(h)).collect(),
            _ => BTreeSet::new(),
        }
    }

    pub fn factors(&self) -> Option<&[NdsSpec]> {
        match &self.kind {
            SpecKind::Product(parts) => Some(parts),
            _ => None,
        }
    }
}

fn check_disjoint(rules: &[Rule], horizon: u64) -> Result<(), MapError> {
    let mut owner: BTreeMap<u64, usize> = BTreeMap::new();
    for (idx, r) in rules.iter().enumerate() {
        // finite patterns are checked exactly regardless of the horizon
        let h = if r.pattern.is_finite() { u64::MAX } else { horizon };
        for n in r.pattern.members_upto(h) {
            if let Some(&prev) = owner.get(&n) {
                return Err(MapError::Overlap { index: n, first: rules[prev].to_string(), second: r.to_string() });
            }
            owner.insert(n, idx);
        }
    }
    // a finite index may also lie on an infinite pattern beyond the horizon
    for (idx, r) in rules.iter().enumerate() {
        if let IndexPattern::Equals(n) = r.pattern {
            for (jdx, q) in rules.iter().enumerate() {
                if jdx != idx && !q.pattern.is_finite() && q.pattern.matches(n).is_some() {
                    return Err(MapError::Overlap { index: n, first: q.to_string(), second: r.to_string() });
                }
            }
        }
    }
    Ok(())
}

/// Closed form of a finite composition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NormalMap {
    Shift(i64),
    Rot(i64),
    Table(FiniteTable),
    Product(Vec<NormalMap>),
}

impl NormalMap {
    pub fn identity(space: &SpaceDesc) -> NormalMap {
        match space {
            SpaceDesc::Shift { .. } => NormalMap::Shift(0),
            SpaceDesc::Circle { .. } => NormalMap::Rot(0),
            SpaceDesc::Finite { point_count } => NormalMap::Table(FiniteTable::identity(*point_count)),
            SpaceDesc::Product(parts) => NormalMap::Product(parts.iter().map(NormalMap::identity).collect()),
        }
    }

    pub fn from_term(space: &SpaceDesc, term: &MapTerm) -> Result<NormalMap, MapError> {
        let bad = || MapError::WrongSpace { term: term.to_string(), space: space.to_string() };
        match (space, term) {
            (_, MapTerm::Identity) => Ok(NormalMap::identity(space)),
            (SpaceDesc::Shift { .. }, MapTerm::ShiftPow(e)) => Ok(NormalMap::Shift(*e)),
            (SpaceDesc::Circle { .. }, MapTerm::RotPow(c)) => Ok(NormalMap::Rot(*c)),
            (SpaceDesc::Finite { point_count }, MapTerm::FiniteFn(t)) if t.len() == *point_count => {
                Ok(NormalMap::Table(t.clone()))
            }
            (SpaceDesc::Product(spaces), MapTerm::Tuple(ts)) if spaces.len() == ts.len() => Ok(NormalMap::Product(
                spaces.iter().zip(ts).map(|(s, t)| NormalMap::from_term(s, t)).collect::<Result<_, _>>()?,
            )),
            _ => Err(bad()),
        }
    }

    pub fn to_term(&self) -> MapTerm {
        match self {
            NormalMap::Shift(e) => MapTerm::ShiftPow(*e),
            NormalMap::Rot(c) => MapTerm::RotPow(*c),
            NormalMap::Table(t) => MapTerm::FiniteFn(t.clone()),
            NormalMap::Product(ms) => MapTerm::Tuple(ms.iter().map(|m| m.to_term()).collect()),
        }
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &NormalMap) -> NormalMap {
        match (self, next) {
            (NormalMap::Shift(a), NormalMap::Shift(b)) => NormalMap::Shift(a + b),
            (NormalMap::Rot(a), NormalMap::Rot(b)) => NormalMap::Rot(a + b),
            (NormalMap::Table(a), NormalMap::Table(b)) => NormalMap::Table(a.then(b)),
            (NormalMap::Product(xs), NormalMap::Product(ys)) => {
                NormalMap::Product(xs.iter().zip(ys).map(|(x, y)| x.then(y)).collect())
            }
            _ => panic!("composing maps of different spaces"),
        }
    }

    /// Net shift power or rotation coefficient.
    pub fn exponent(&self) -> Option<i64> {
        match self {
            NormalMap::Shift(e) | NormalMap::Rot(e) => Some(*e),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            NormalMap::Shift(e) | NormalMap::Rot(e) => *e == 0,
            NormalMap::Table(t) => t.is_identity(),
            NormalMap::Product(ms) => ms.iter().all(|m| m.is_identity()),
        }
    }

    pub fn components(&self) -> Option<&[NormalMap]> {
        match self {
            NormalMap::Product(ms) => Some(ms),
            _ => None,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        match (self, p) {
            (NormalMap::Shift(e), Point::BiWord(w)) => Point::BiWord(w.shifted(*e)),
            (NormalMap::Rot(c), Point::Angle(a)) => Point::Angle(a.rotated(*c)),
            (NormalMap::Table(t), Point::FiniteId(i)) => Point::FiniteId(t.get(*i)),
            (NormalMap::Product(ms), Point::Tuple(ps)) => {
                Point::Tuple(ms.iter().zip(ps).map(|(m, p)| m.apply(p)).collect())
            }
            _ => panic!("applying a map to a point of another space"),
        }
    }

    pub fn image(&self, a: &BasicOpen) -> BasicOpen {
        match (self, a) {
            (NormalMap::Shift(e), BasicOpen::Cylinder { start, word }) => {
                BasicOpen::Cylinder { start: start - e, word: word.clone() }
            }
            (NormalMap::Rot(c), BasicOpen::Arc { center, radius }) => {
                BasicOpen::Arc { center: ArcCenter(center.0.rotated(*c)), radius: radius.clone() }
            }
            (NormalMap::Table(t), BasicOpen::FiniteSet(ids)) => {
                BasicOpen::FiniteSet(ids.iter().map(|&i| t.get(i)).collect())
            }
            (NormalMap::Product(ms), BasicOpen::Rect(parts)) => {
                BasicOpen::Rect(ms.iter().zip(parts).map(|(m, p)| m.image(p)).collect())
            }
            _ => panic!("image of an open set of another space"),
        }
    }

    /// Full inverse image; `None` when it is empty.
    pub fn preimage(&self, a: &BasicOpen) -> Option<BasicOpen> {
        match (self, a) {
            (NormalMap::Shift(e), BasicOpen::Cylinder { start, word }) => {
                Some(BasicOpen::Cylinder { start: start + e, word: word.clone() })
            }
            (NormalMap::Rot(c), BasicOpen::Arc { center, radius }) => {
                Some(BasicOpen::Arc { center: ArcCenter(center.0.rotated(-c)), radius: radius.clone() })
            }
            (NormalMap::Table(t), BasicOpen::FiniteSet(ids)) => {
                let pre: BTreeSet<u32> = (1..=t.len()).filter(|&i| ids.contains(&t.get(i))).collect();
                (!pre.is_empty()).then_some(BasicOpen::FiniteSet(pre))
            }
            (NormalMap::Product(ms), BasicOpen::Rect(parts)) => {
                Some(BasicOpen::Rect(ms.iter().zip(parts).map(|(m, p)| m.preimage(p)).collect::<Option<_>>()?))
            }
            _ => panic!("preimage of an open set of another space"),
        }
    }
}

impl fmt::Display for NormalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// Prefix compositions `f_1^0, ..., f_1^n` built by one left fold.
#[derive(Clone, Debug)]
pub struct PrefixTable {
    maps: Vec<NormalMap>,
}

impl PrefixTable {
    pub fn build(spec: &NdsSpec, n: u64) -> Result<Self, MapError> {
        let mut maps = Vec::with_capacity(n as usize + 1);
        let mut acc = NormalMap::identity(spec.space());
        maps.push(acc.clone());
        for i in 1..=n {
            acc = acc.then(&spec.step_map(i)?);
            maps.push(acc.clone());
        }
        Ok(PrefixTable { maps })
    }

    pub fn len(&self) -> u64 {
        self.maps.len() as u64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: u64) -> &NormalMap {
        &self.maps[n as usize]
    }

    /// Exponents `E(0), ..., E(n)` of shift or rotation systems.
    pub fn exponents(&self) -> Option<Vec<i64>> {
        self.maps.iter().map(|m| m.exponent()).collect()
    }
}

/// Orbit point `f_1^n(p)` for `n = 0..=h`, computed by stepwise application.
pub fn orbit(spec: &NdsSpec, p: &Point, h: u64) -> Result<Vec<Point>, MapError> {
    let mut out = Vec::with_capacity(h as usize + 1);
    let mut x = p.clone();
    out.push(x.clone());
    for i in 1..=h {
        x = spec.step_map(i)?.apply(&x);
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::BiWord;

    fn alternating() -> NdsSpec {
        NdsSpec::rules(
            SpaceDesc::shift(),
            vec![
                Rule::new(IndexPattern::ArithProg { first: 3, step: 2 }, TermTemplate::ShiftPow(Exponent::Ordinal(1))),
                Rule::new(IndexPattern::ArithProg { first: 4, step: 2 }, TermTemplate::ShiftPow(Exponent::Ordinal(-1))),
            ],
            TermTemplate::Identity,
            DEFAULT_VALIDATION_HORIZON,
        )
        .unwrap()
    }

    fn power_rotation() -> NdsSpec {
        NdsSpec::rules(
            SpaceDesc::circle(),
            vec![
                Rule::new(IndexPattern::PowerPos { base: 3, offset: 0 }, TermTemplate::RotPow(Exponent::Ordinal(1))),
                Rule::new(IndexPattern::PowerPos { base: 3, offset: 1 }, TermTemplate::RotPow(Exponent::Ordinal(-1))),
            ],
            TermTemplate::Identity,
            DEFAULT_VALIDATION_HORIZON,
        )
        .unwrap()
    }

    fn cycle3() -> FiniteTable {
        FiniteTable::new(vec![2, 3, 1]).unwrap()
    }

    #[test]
    fn eval_term_dispatch() {
        assert_eq!(power_rotation().eval_term(3).unwrap(), MapTerm::RotPow(1));
        assert_eq!(power_rotation().eval_term(4).unwrap(), MapTerm::RotPow(-1));
        assert_eq!(power_rotation().eval_term(5).unwrap(), MapTerm::Identity);
        assert_eq!(power_rotation().eval_term(27).unwrap(), MapTerm::RotPow(3));
        assert_eq!(alternating().eval_term(1).unwrap(), MapTerm::Identity);
        assert_eq!(alternating().eval_term(5).unwrap(), MapTerm::ShiftPow(2));
        assert_eq!(alternating().eval_term(6).unwrap(), MapTerm::ShiftPow(-2));
    }

    #[test]
    fn overlapping_rules_are_rejected() {
        let err = NdsSpec::rules(
            SpaceDesc::shift(),
            vec![
                Rule::new(IndexPattern::ArithProg { first: 1, step: 2 }, TermTemplate::ShiftPow(Exponent::Const(1))),
                Rule::new(IndexPattern::Equals(7), TermTemplate::Identity),
            ],
            TermTemplate::Identity,
            16,
        )
        .unwrap_err();
        assert!(matches!(err, MapError::Overlap { index: 7, .. }));
    }

    #[test]
    fn window_compose_closed_forms() {
        let s = alternating();
        assert!(s.window_compose(5, 0).unwrap().is_identity());
        for t in 1..50 {
            assert_eq!(s.prefix_compose(2 * t).unwrap(), NormalMap::Shift(0));
            assert_eq!(s.prefix_compose(2 * t + 1).unwrap(), NormalMap::Shift(t as i64));
        }
    }

    #[test]
    fn prefix_table_matches_direct_composition() {
        let s = power_rotation();
        let t = PrefixTable::build(&s, 300).unwrap();
        for n in [0, 1, 3, 4, 9, 10, 27, 28, 81, 243, 244, 300] {
            assert_eq!(t.get(n), &s.prefix_compose(n).unwrap());
        }
        // C(n) = k exactly at n = 3^k
        let e = t.exponents().unwrap();
        for (n, c) in e.iter().enumerate().skip(1) {
            let expect = IndexPattern::PowerPos { base: 3, offset: 0 }.matches(n as u64).unwrap_or(0) as i64;
            assert_eq!(*c, expect, "n = {n}");
        }
    }

    #[test]
    fn tail_and_iterate() {
        let s = alternating();
        let t = NdsSpec::tail(s.clone(), 2).unwrap();
        assert_eq!(t.eval_term(1).unwrap(), MapTerm::Identity);
        assert_eq!(t.eval_term(2).unwrap(), MapTerm::ShiftPow(1));
        let it = NdsSpec::iterate(s.clone(), 3).unwrap();
        for n in 1..100 {
            assert_eq!(it.prefix_compose(n).unwrap(), s.prefix_compose(3 * n).unwrap());
        }
    }

    #[test]
    fn images_and_preimages() {
        let c = BasicOpen::cylinder(0, vec![1]).unwrap();
        assert_eq!(NormalMap::Shift(0).image(&c), c);
        assert_eq!(NormalMap::Shift(1).image(&c), BasicOpen::cylinder(-1, vec![1]).unwrap());
        // σ(x)_i = x_{i+1}
        let x = BiWord::from_window(0, vec![1], 0);
        let y = NormalMap::Shift(1).apply(&Point::BiWord(x));
        let img = NormalMap::Shift(1).image(&c);
        assert_eq!(img.contains(&SpaceDesc::shift(), &y).unwrap(), crate::spaces::Decision::Yes);
        let f = NormalMap::Table(cycle3());
        assert_eq!(f.image(&BasicOpen::finite_set([1]).unwrap()), BasicOpen::finite_set([2]).unwrap());
        let k = NormalMap::Table(FiniteTable::constant(3, 2).unwrap());
        assert_eq!(k.preimage(&BasicOpen::finite_set([1]).unwrap()), None);
        assert_eq!(k.preimage(&BasicOpen::finite_set([2]).unwrap()), Some(BasicOpen::finite_set([1, 2, 3]).unwrap()));
    }

    #[test]
    fn apply_examples() {
        let f = NormalMap::Table(cycle3());
        let mut p = Point::FiniteId(1);
        for _ in 0..3 {
            p = f.apply(&p);
        }
        assert_eq!(p, Point::FiniteId(1));
        let a = |c| crate::spaces::AffineAngle::new(num::BigRational::from_integer(0.into()), c);
        assert_eq!(NormalMap::Rot(2).apply(&Point::Angle(a(0))), Point::Angle(a(2)));
        assert!(!FiniteTable::constant(2, 2).unwrap().is_surjective());
        assert!(cycle3().is_surjective());
    }

    #[test]
    fn eventual_periods() {
        let f = TermTemplate::FiniteFn(cycle3());
        let s = NdsSpec::rules(
            SpaceDesc::finite(3).unwrap(),
            (1..=3).map(|n| Rule::new(IndexPattern::Equals(n), f.clone())).collect(),
            TermTemplate::Identity,
            64,
        )
        .unwrap();
        assert_eq!(s.eventual_period(), Some((4, 1)));
        assert_eq!(NdsSpec::tail(s.clone(), 2).unwrap().eventual_period(), Some((3, 1)));
        assert_eq!(alternating().eventual_period(), None);
        assert!(!alternating().default_is_recurrent());
        assert!(power_rotation().default_is_recurrent());
    }

    #[test]
    fn power_pattern_classes() {
        let p = IndexPattern::PowerPos { base: 3, offset: 0 };
        assert!(p.meets_class(2, 1));
        assert!(!p.meets_class(2, 0));
        assert!(!p.meets_class(3, 1));
        assert_eq!(p.members_upto(100), vec![3, 9, 27, 81]);
    }
}
