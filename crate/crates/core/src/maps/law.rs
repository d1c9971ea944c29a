//! Closed forms for the net exponent `E(n)` of `f_1^n` on shift and rotation
//! systems. Every law is checked against stepwise composition before use.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{Exponent, IndexPattern, MapError, NdsSpec, PrefixTable, SpecKind, TermTemplate};
use crate::spaces::SpaceDesc;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LawForm {
    /// `E(n) = slope·n`.
    Linear { slope: i64 },
    /// `E(n) = value(k)` at the k-th match of `pattern`, 0 elsewhere.
    Sparse { pattern: IndexPattern, value: Exponent },
    /// Piecewise constant: `E(n)` is the value at the greatest key `<= n`,
    /// 0 before the first key.
    Step { values: BTreeMap<u64, i64> },
    /// `E(n) = base(n + k - 1) - base(k - 1)`.
    Tail { k: u64, base: Box<LawForm> },
    /// `E(n) = base(k·n)`.
    Iterate { k: u64, base: Box<LawForm> },
}

/// Indices outside of which `E` vanishes; both shapes have unbounded gaps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SupportBound {
    /// `E(n) != 0` only at `n = base^j + offset`, `j >= 1`.
    Powers { base: u64, offset: i64 },
    /// `E(n) = 0` for all `n > last`.
    Finite { last: u64 },
}

impl SupportBound {
    pub fn contains(&self, n: u64) -> bool {
        match *self {
            SupportBound::Finite { last } => n <= last,
            SupportBound::Powers { base, offset } => {
                let v = n as i64 - offset;
                v > 1 && IndexPattern::PowerPos { base, offset: 0 }.matches(v as u64).is_some()
            }
        }
    }
}

impl fmt::Display for SupportBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportBound::Powers { base, offset } => write!(f, "{{{base}^j{offset:+}}}"),
            SupportBound::Finite { last } => write!(f, "[1,{last}]"),
        }
    }
}

impl LawForm {
    pub fn eval(&self, n: u64) -> i64 {
        match self {
            LawForm::Linear { slope } => slope * n as i64,
            LawForm::Sparse { pattern, value } => pattern.matches(n).map(|k| value.value(k)).unwrap_or(0),
            LawForm::Step { values } => values.range(..=n).next_back().map(|(_, v)| *v).unwrap_or(0),
            LawForm::Tail { k, base } => base.eval(n + k - 1) - base.eval(k - 1),
            LawForm::Iterate { k, base } => base.eval(k * n),
        }
    }

    /// A finite superset of `{E(n) : n >= 1, n ≡ r (mod m)}`, or `None` when
    /// the values may be unbounded.
    pub fn values_on_class(&self, m: u64, r: u64) -> Option<BTreeSet<i64>> {
        let r = r % m;
        match self {
            LawForm::Linear { slope } => (*slope == 0).then(|| BTreeSet::from([0])),
            LawForm::Sparse { pattern, value } => {
                if !pattern.meets_class(m, r) {
                    return Some(BTreeSet::from([0]));
                }
                match value {
                    Exponent::Const(c) => Some(BTreeSet::from([0, *c])),
                    Exponent::Ordinal(0) => Some(BTreeSet::from([0])),
                    Exponent::Ordinal(_) => None,
                }
            }
            LawForm::Step { values } => {
                let last = values.keys().next_back().copied().unwrap_or(0);
                let mut out = BTreeSet::new();
                let first = if r == 0 { m } else { r };
                let mut n = first;
                while n <= last {
                    out.insert(self.eval(n));
                    n += m;
                }
                out.insert(self.eval(last.max(1) + m));
                Some(out)
            }
            LawForm::Tail { k, base } => {
                let shift = base.eval(k - 1);
                let vals = base.values_on_class(m, (r + k - 1) % m)?;
                Some(vals.into_iter().map(|v| v - shift).collect())
            }
            LawForm::Iterate { k, base } => base.values_on_class(k * m, (k * r) % (k * m)),
        }
    }

    /// Bound on the support of `E` with unbounded gaps, when one exists.
    pub fn support(&self) -> Option<SupportBound> {
        match self {
            LawForm::Linear { slope } => (*slope == 0).then_some(SupportBound::Finite { last: 0 }),
            LawForm::Sparse { pattern, value } => match *pattern {
                _ if *value == Exponent::Const(0) || *value == Exponent::Ordinal(0) => {
                    Some(SupportBound::Finite { last: 0 })
                }
                IndexPattern::PowerPos { base, offset } => Some(SupportBound::Powers { base, offset: offset as i64 }),
                IndexPattern::Equals(n) => Some(SupportBound::Finite { last: n }),
                IndexPattern::ArithProg { .. } => None,
            },
            LawForm::Step { values } => {
                let (last, v) = values.iter().next_back().map(|(k, v)| (*k, *v)).unwrap_or((0, 0));
                (v == 0).then_some(SupportBound::Finite { last })
            }
            LawForm::Tail { k, base } => {
                if base.eval(k - 1) != 0 {
                    return None;
                }
                match base.support()? {
                    SupportBound::Finite { last } => Some(SupportBound::Finite { last: last.saturating_sub(k - 1) }),
                    SupportBound::Powers { base, offset } => {
                        Some(SupportBound::Powers { base, offset: offset - (*k as i64 - 1) })
                    }
                }
            }
            LawForm::Iterate { k, base } => match base.support()? {
                SupportBound::Finite { last } => Some(SupportBound::Finite { last: last / k }),
                SupportBound::Powers { .. } => None,
            },
        }
    }
}

impl fmt::Display for LawForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawForm::Linear { slope } => write!(f, "E(n) = {slope}n"),
            LawForm::Sparse { pattern, value } => {
                write!(f, "E(n) = {value} at the k-th index of {pattern}, else 0")
            }
            LawForm::Step { values } => {
                let parts: Vec<String> = values.iter().map(|(n, v)| format!("{n}:{v}")).collect();
                write!(f, "E step function {{{}}}", parts.join(", "))
            }
            LawForm::Tail { k, base } => write!(f, "tail {k} of [{base}]"),
            LawForm::Iterate { k, base } => write!(f, "iterate {k} of [{base}]"),
        }
    }
}

/// A closed form validated against stepwise composition on `[1, validated_up_to]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExponentLaw {
    pub form: LawForm,
    pub validated_up_to: u64,
}

impl ExponentLaw {
    pub fn eval(&self, n: u64) -> i64 {
        self.form.eval(n)
    }

    pub fn values_on_class(&self, m: u64, r: u64) -> Option<BTreeSet<i64>> {
        self.form.values_on_class(m, r)
    }

    pub fn support(&self) -> Option<SupportBound> {
        self.form.support()
    }

    /// Re-checks the law on `[1, h]`.
    pub fn validate(&self, spec: &NdsSpec, h: u64) -> Result<(), MapError> {
        let table = PrefixTable::build(spec, h)?;
        let exps = table
            .exponents()
            .ok_or_else(|| MapError::Invalid("exponent laws need a shift or rotation system".into()))?;
        for n in 1..=h {
            let expected = self.form.eval(n);
            if expected != exps[n as usize] {
                return Err(MapError::LawValidation {
                    law: self.form.to_string(),
                    n,
                    expected,
                    actual: exps[n as usize],
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExponentLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (validated to n = {})", self.form, self.validated_up_to)
    }
}

fn derive_form(spec: &NdsSpec) -> Option<LawForm> {
    match spec.kind() {
        SpecKind::Rules { rules, default } => {
            let d = match default.exponent()? {
                Exponent::Const(c) => c,
                Exponent::Ordinal(_) => return None,
            };
            if rules.is_empty() {
                return Some(LawForm::Linear { slope: d });
            }
            if d != 0 {
                return None;
            }
            if rules.iter().all(|r| r.pattern.is_finite()) {
                let mut pts: Vec<(u64, i64)> = Vec::new();
                for r in rules {
                    let IndexPattern::Equals(n) = r.pattern else { unreachable!() };
                    pts.push((n, r.term.exponent()?.value(1)));
                }
                pts.sort();
                let mut values = BTreeMap::new();
                let mut acc = 0;
                for (n, e) in pts {
                    acc += e;
                    values.insert(n, acc);
                }
                return Some(LawForm::Step { values });
            }
            // telescoping pair: the second rule fires one index after the
            // first with the negated exponent
            if let [a, b] = rules.as_slice() {
                for (x, y) in [(a, b), (b, a)] {
                    let (ex, ey) = (x.term.exponent()?, y.term.exponent()?);
                    if x.pattern.successor() == y.pattern && ey == ex.negated() && kind_matches(&x.term, &y.term) {
                        return Some(LawForm::Sparse { pattern: x.pattern.clone(), value: ex });
                    }
                }
            }
            None
        }
        SpecKind::Tail { k, base } => Some(LawForm::Tail { k: *k, base: Box::new(derive_form(base)?) }),
        SpecKind::Iterate { k, base } => Some(LawForm::Iterate { k: *k, base: Box::new(derive_form(base)?) }),
        SpecKind::Product(_) => None,
    }
}

fn kind_matches(a: &TermTemplate, b: &TermTemplate) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Detects a closed form for `E(n)` and validates it for all `n <= h`.
/// A law that fails validation is a hard error.
pub fn derive_exponent_law(spec: &NdsSpec, h: u64) -> Result<Option<ExponentLaw>, MapError> {
    if !matches!(spec.space(), SpaceDesc::Shift { .. } | SpaceDesc::Circle { .. }) {
        return Ok(None);
    }
    let Some(form) = derive_form(spec) else {
        return Ok(None);
    };
    let law = ExponentLaw { form, validated_up_to: h };
    law.validate(spec, h)?;
    Ok(Some(law))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Rule, DEFAULT_VALIDATION_HORIZON};

    fn pair(first: IndexPattern, second: IndexPattern, space: SpaceDesc, rot: bool) -> NdsSpec {
        let t = |e| if rot { TermTemplate::RotPow(e) } else { TermTemplate::ShiftPow(e) };
        NdsSpec::rules(
            space,
            vec![Rule::new(first, t(Exponent::Ordinal(1))), Rule::new(second, t(Exponent::Ordinal(-1)))],
            TermTemplate::Identity,
            DEFAULT_VALIDATION_HORIZON,
        )
        .unwrap()
    }

    fn ap(first: u64, step: u64) -> IndexPattern {
        IndexPattern::ArithProg { first, step }
    }

    #[test]
    fn alternating_law_with_leading_identity() {
        let s = pair(ap(3, 2), ap(4, 2), SpaceDesc::shift(), false);
        let law = derive_exponent_law(&s, 2048).unwrap().unwrap();
        for t in 1..1024u64 {
            assert_eq!(law.eval(2 * t), 0);
            assert_eq!(law.eval(2 * t + 1), t as i64);
        }
        assert_eq!(law.values_on_class(2, 0), Some(BTreeSet::from([0])));
        assert_eq!(law.values_on_class(2, 1), None);
    }

    #[test]
    fn odd_even_law() {
        let s = pair(ap(1, 2), ap(2, 2), SpaceDesc::shift(), false);
        let law = derive_exponent_law(&s, 1024).unwrap().unwrap();
        for m in 1..500u64 {
            assert_eq!(law.eval(2 * m - 1), m as i64);
            assert_eq!(law.eval(2 * m), 0);
        }
    }

    #[test]
    fn power_law_on_circle() {
        let p = IndexPattern::PowerPos { base: 3, offset: 0 };
        let s = pair(p.clone(), p.successor(), SpaceDesc::circle(), true);
        let law = derive_exponent_law(&s, 2200).unwrap().unwrap();
        assert_eq!(law.support(), Some(SupportBound::Powers { base: 3, offset: 0 }));
        assert_eq!(law.values_on_class(2, 0), Some(BTreeSet::from([0])));
    }

    #[test]
    fn tail_and_iterate_laws_validate() {
        let s = pair(ap(3, 2), ap(4, 2), SpaceDesc::shift(), false);
        let t = NdsSpec::tail(s.clone(), 2).unwrap();
        let law = derive_exponent_law(&t, 1024).unwrap().unwrap();
        // the tail is the odd/even-shifted system: E(2t) = t
        assert_eq!(law.eval(8), 4);
        assert_eq!(law.values_on_class(2, 1), Some(BTreeSet::from([0])));
        let it = NdsSpec::iterate(s, 2).unwrap();
        let law = derive_exponent_law(&it, 512).unwrap().unwrap();
        assert_eq!(law.values_on_class(1, 0), Some(BTreeSet::from([0])));
    }

    #[test]
    fn step_law_from_isolated_pairs() {
        let rules = [4u64, 8, 16]
            .iter()
            .flat_map(|&n| {
                [
                    Rule::new(IndexPattern::Equals(n), TermTemplate::ShiftPow(Exponent::Const(n as i64))),
                    Rule::new(IndexPattern::Equals(n + 1), TermTemplate::ShiftPow(Exponent::Const(-(n as i64)))),
                ]
            })
            .collect();
        let s = NdsSpec::rules(SpaceDesc::shift(), rules, TermTemplate::Identity, 64).unwrap();
        let law = derive_exponent_law(&s, 128).unwrap().unwrap();
        for n in 1..=128u64 {
            let want = if [4, 8, 16].contains(&n) { n as i64 } else { 0 };
            assert_eq!(law.eval(n), want);
        }
        assert_eq!(law.support(), Some(SupportBound::Finite { last: 17 }));
        assert_eq!(law.values_on_class(2, 1), Some(BTreeSet::from([0])));
    }

    #[test]
    fn bogus_law_is_a_hard_error() {
        let s = pair(ap(1, 2), ap(2, 2), SpaceDesc::shift(), false);
        let law = ExponentLaw { form: LawForm::Linear { slope: 0 }, validated_up_to: 10 };
        assert!(matches!(law.validate(&s, 10), Err(MapError::LawValidation { n: 1, .. })));
    }
}
