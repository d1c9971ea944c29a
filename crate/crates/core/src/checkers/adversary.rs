use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::transitivity::{set_name, subsets};
use super::{distinct, minimal_antichain, Bits, CheckConfig, CheckError, Ctx, PropertyKind, Status, TimeSet};
use crate::hitting::HitEngine;
use crate::maps::{derive_exponent_law, Exponent, ExponentLaw, IndexPattern, LawForm, NdsSpec, Rule, TermTemplate};
use crate::spaces::SpaceDesc;

/// Tuples beyond this are not examined by the consistency check.
const MAX_TUPLES: usize = 20_000;

/// `g_{n_k} = σ^{n_k}`, `g_{n_k+1} = σ^{-n_k}`, identity elsewhere, so that
/// `g_1^n = σ^n` exactly at the listed times and the identity otherwise.
pub fn build_gap_adversary(miss_times: &[u64]) -> Result<(NdsSpec, ExponentLaw), CheckError> {
    if miss_times.first() == Some(&0) {
        return Err(CheckError::Invalid("miss times start at 1".into()));
    }
    if let Some(w) = miss_times.windows(2).find(|w| w[1] <= w[0] + 2) {
        return Err(CheckError::Invalid(format!(
            "consecutive miss times must differ by more than 2, got {} and {}",
            w[0], w[1]
        )));
    }
    let mut rules = Vec::with_capacity(2 * miss_times.len());
    let mut values = BTreeMap::new();
    for &n in miss_times {
        let e = i64::try_from(n).map_err(|_| CheckError::Invalid(format!("miss time {n} too large")))?;
        rules.push(Rule::new(IndexPattern::Equals(n), TermTemplate::ShiftPow(Exponent::Const(e))));
        rules.push(Rule::new(IndexPattern::Equals(n + 1), TermTemplate::ShiftPow(Exponent::Const(-e))));
        values.insert(n, e);
        values.insert(n + 1, 0);
    }
    let last = miss_times.last().map_or(1, |n| n + 2);
    let spec = NdsSpec::rules(SpaceDesc::shift(), rules, TermTemplate::Identity, last)?;
    let law = ExponentLaw { form: LawForm::Step { values }, validated_up_to: 0 };
    let h = (2 * last).max(128);
    law.validate(&spec, h)?;
    Ok((spec, ExponentLaw { validated_up_to: h, ..law }))
}

/// The same construction for the infinite list `step, 2·step, ...`.
pub fn build_progression_adversary(step: u64) -> Result<(NdsSpec, ExponentLaw), CheckError> {
    if step <= 2 {
        return Err(CheckError::Invalid("consecutive miss times must differ by more than 2".into()));
    }
    let s = i64::try_from(step).map_err(|_| CheckError::Invalid("step too large".into()))?;
    let rules = vec![
        Rule::new(IndexPattern::ArithProg { first: step, step }, TermTemplate::ShiftPow(Exponent::Ordinal(s))),
        Rule::new(IndexPattern::ArithProg { first: step + 1, step }, TermTemplate::ShiftPow(Exponent::Ordinal(-s))),
    ];
    let spec = NdsSpec::rules(SpaceDesc::shift(), rules, TermTemplate::Identity, 4096)?;
    let law = derive_exponent_law(&spec, 2048)?
        .ok_or_else(|| CheckError::Invalid("no closed form for the progression adversary".into()))?;
    Ok((spec, law))
}

/// K-th common time of each examined tuple over an extended horizon.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub property: String,
    pub k: u64,
    pub horizon: u64,
    pub tuples: u64,
    /// Largest K-th member over all tuples.
    pub max_kth: u64,
    /// Tuples with fewer than K members, with the count found.
    pub failures: Vec<(Vec<String>, u64)>,
    /// Some tuple had undecided times, so a failure may be precision, not content.
    pub censored: bool,
    pub ok: bool,
}

/// Checks that a property already witnessed at `cfg` has common hitting sets
/// with at least `k` members up to `ext_h`.
pub fn hitting_infinity_consistency(
    spec: &NdsSpec,
    prop: &PropertyKind,
    cfg: &CheckConfig,
    ext_h: u64,
    k: u64,
) -> Result<ConsistencyReport, CheckError> {
    let m = match prop {
        PropertyKind::WeaklyMixing { order: 2 } => 1u64,
        PropertyKind::MultiTransitive { m_max } => *m_max as u64,
        _ => return Err(CheckError::Invalid("consistency applies to weakly-mixing:2 and multi-transitive".into())),
    };
    let verdict = super::check_property(spec, prop, cfg)?;
    if verdict.status != Status::Witnessed {
        return Err(CheckError::Invalid(format!("{prop} is {} at the given resolution and horizon", verdict.status)));
    }
    let ext = CheckConfig { horizon: ext_h.max(cfg.horizon), ..cfg.clone() };
    let ctx = Ctx::new(spec, &ext)?;
    let len = ext.horizon;
    let engine = HitEngine::new(spec, m * len)?;
    let tests = ctx.pairs();
    let sets = ctx.time_sets(&engine, &tests, m * len)?;
    let censored = sets.iter().any(|s| s.undecided);
    // tuples: pairs of tests at scale 1, or one test per scale j = 1..m
    let tuples: Vec<(Vec<String>, Bits)> = if m == 1 {
        let (uniq, rep) = distinct(&sets);
        let anti = minimal_antichain(&uniq);
        subsets(anti.len(), 2.min(anti.len()))
            .into_iter()
            .take(MAX_TUPLES)
            .map(|c| {
                let mut acc = uniq[anti[c[0]]].clone();
                for &x in &c[1..] {
                    acc.and_assign(&uniq[anti[x]]);
                }
                (c.iter().map(|&x| set_name(&tests[rep[anti[x]]])).collect(), acc)
            })
            .collect()
    } else {
        let scaled: Vec<(Vec<Bits>, Vec<usize>, Vec<usize>)> = (1..=m)
            .map(|j| {
                let ts: Vec<TimeSet> = sets
                    .iter()
                    .map(|s| {
                        let mut b = Bits::new(len);
                        for l in 1..=len {
                            if s.yes.get(j * l) {
                                b.set(l);
                            }
                        }
                        TimeSet { yes: b, undecided: s.undecided }
                    })
                    .collect();
                let (uniq, rep) = distinct(&ts);
                let anti = minimal_antichain(&uniq);
                (uniq, rep, anti)
            })
            .collect();
        let dims: Vec<usize> = scaled.iter().map(|s| s.2.len()).collect();
        let total = dims.iter().product::<usize>().min(MAX_TUPLES);
        (0..total)
            .into_par_iter()
            .map(|mut code| {
                let mut names = Vec::new();
                let mut acc: Option<Bits> = None;
                for (j, d) in dims.iter().enumerate() {
                    let c = code % d;
                    code /= d;
                    let (uniq, rep, anti) = &scaled[j];
                    names.push(format!("{}l: {}", j + 1, set_name(&tests[rep[anti[c]]])));
                    let b = &uniq[anti[c]];
                    acc = Some(match acc {
                        None => b.clone(),
                        Some(a) => a.and(b),
                    });
                }
                (names, acc.expect("m >= 1"))
            })
            .collect()
    };
    let mut failures = Vec::new();
    let mut max_kth = 0;
    for (names, b) in &tuples {
        match b.nth(k) {
            Some(n) => max_kth = max_kth.max(n),
            None => failures.push((names.clone(), b.count())),
        }
    }
    Ok(ConsistencyReport {
        property: prop.to_string(),
        k,
        horizon: len,
        tuples: tuples.len() as u64,
        max_kth,
        ok: failures.is_empty(),
        failures,
        censored,
    })
}
