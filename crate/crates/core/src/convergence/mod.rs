//! Supremum distance between maps, uniform and collective convergence to a
//! limit map, and a modulus of equicontinuity for windows of bounded length.
//!
//! On the shift and on finite spaces two distinct maps sit at a fixed
//! positive sup distance, so convergence there is eventual equality.

use num::{BigInt, BigRational, Signed, Zero};
use serde::Serialize;

use crate::checkers::Status;
use crate::maps::{MapError, MapTerm, NdsSpec, NormalMap, SpecKind, TermTemplate};
use crate::spaces::{alpha::circle_dist_bounds, Distance, Enclosure, SpaceDesc};

#[derive(Debug, thiserror::Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{0}")]
    Invalid(String),
}

/// `D(a, b) = sup_x d(a x, b x)`.
pub fn sup_distance(space: &SpaceDesc, a: &NormalMap, b: &NormalMap) -> Result<Distance, ConvergenceError> {
    match (space, a, b) {
        (SpaceDesc::Shift { .. }, NormalMap::Shift(x), NormalMap::Shift(y)) => {
            // blocks of |x - y| alternating 0 and k-1 disagree everywhere
            Ok(Distance::Exact(if x == y { BigRational::zero() } else { space.diameter() }))
        }
        (SpaceDesc::Finite { point_count }, NormalMap::Table(s), NormalMap::Table(t))
            if s.len() == *point_count && t.len() == *point_count =>
        {
            Ok(Distance::Exact(if s == t { BigRational::zero() } else { BigRational::from_integer(1.into()) }))
        }
        (SpaceDesc::Circle { alpha }, NormalMap::Rot(x), NormalMap::Rot(y)) => {
            if x == y {
                return Ok(Distance::Exact(BigRational::zero()));
            }
            let e = alpha.enclosure().affine(&BigInt::from(x - y), &BigRational::zero());
            let (lo, hi) = circle_dist_bounds(&e);
            Ok(Distance::Enclosed(Enclosure { lo, hi }))
        }
        (SpaceDesc::Product(parts), NormalMap::Product(xs), NormalMap::Product(ys))
            if xs.len() == parts.len() && ys.len() == parts.len() =>
        {
            let mut acc = Distance::Exact(BigRational::zero());
            for ((s, x), y) in parts.iter().zip(xs).zip(ys) {
                acc = acc.max(sup_distance(s, x, y)?);
            }
            Ok(acc)
        }
        _ => Err(ConvergenceError::Invalid(format!("maps {a} and {b} do not both act on {space}"))),
    }
}

/// `D(f_r^k, f^k)` at one window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceEntry {
    pub r: u64,
    pub k: u64,
    pub distance: String,
    /// Lower bound of the distance is positive.
    pub separated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceVerdict {
    pub status: Status,
    /// First index from which every window matches the limit.
    pub r0: Option<u64>,
    /// Nonzero distances seen below `r0`, or a sample of separations.
    pub distances: Vec<DistanceEntry>,
    pub separation: Option<DistanceEntry>,
    pub detail: String,
}

fn entry(space: &SpaceDesc, r: u64, k: u64, a: &NormalMap, b: &NormalMap) -> Result<DistanceEntry, ConvergenceError> {
    let d = sup_distance(space, a, b)?;
    Ok(DistanceEntry { r, k, separated: d.lower().is_positive(), distance: d.to_string() })
}

fn same(space: &SpaceDesc, t: &TermTemplate, limit: &NormalMap) -> bool {
    !t.uses_ordinal() && NormalMap::from_term(space, &t.instantiate(1)).is_ok_and(|m| &m == limit)
}

/// Every term at an index beyond `h` equals `limit`, read off the rules.
fn emits_limit_beyond(spec: &NdsSpec, limit: &NormalMap, h: u64) -> bool {
    match spec.kind() {
        SpecKind::Rules { rules, default } => {
            let start = rules.iter().map(|r| r.pattern.first()).filter(|&f| f != u64::MAX).max().unwrap_or(0) + 1;
            let rules_ok = rules.iter().all(|r| {
                let fires_late = !r.pattern.is_finite() || r.pattern.first() > h;
                !fires_late || same(spec.space(), &r.term, limit)
            });
            let default_late = spec.default_is_recurrent() || h < start;
            rules_ok && (!default_late || same(spec.space(), default, limit))
        }
        SpecKind::Tail { k, base } => emits_limit_beyond(base, limit, h + k - 1),
        SpecKind::Product(parts) => match limit {
            NormalMap::Product(ms) => parts.iter().zip(ms).all(|(p, m)| emits_limit_beyond(p, m, h)),
            _ => false,
        },
        SpecKind::Iterate { .. } => false,
    }
}

/// A term pattern that fires infinitely often and stays at a fixed positive
/// distance from `limit`.
fn separates_forever(spec: &NdsSpec, limit: &NormalMap) -> Option<String> {
    let space = spec.space();
    match spec.kind() {
        SpecKind::Rules { rules, default } => {
            for r in rules.iter().filter(|r| !r.pattern.is_finite()) {
                let growing = r.term.uses_ordinal()
                    && matches!(r.term, TermTemplate::ShiftPow(_))
                    && r.term.exponent().is_some_and(|e| e.value(1) != 0);
                if growing {
                    return Some(format!("rule `{r}` emits a different shift power at each match"));
                }
                if !r.term.uses_ordinal() && !same(space, &r.term, limit) {
                    return Some(format!("rule `{r}` fires infinitely often with a term other than {limit}"));
                }
            }
            if spec.default_is_recurrent() && !same(space, default, limit) {
                return Some(format!("the default term {default} fires infinitely often and differs from {limit}"));
            }
            None
        }
        SpecKind::Tail { base, .. } => separates_forever(base, limit),
        SpecKind::Product(parts) => match limit {
            NormalMap::Product(ms) => parts.iter().zip(ms).find_map(|(p, m)| separates_forever(p, m)),
            _ => None,
        },
        SpecKind::Iterate { .. } => None,
    }
}

fn limit_map(spec: &NdsSpec, limit: &MapTerm) -> Result<NormalMap, ConvergenceError> {
    Ok(NormalMap::from_term(spec.space(), limit)?)
}

/// Samples of windows within `[1, h]` that stay away from the limit.
fn separations(spec: &NdsSpec, lim: &NormalMap, h: u64, k_max: u64) -> Result<Vec<DistanceEntry>, ConvergenceError> {
    let mut out = Vec::new();
    let mut lk = NormalMap::identity(spec.space());
    for k in 1..=k_max {
        lk = lk.then(lim);
        for r in 1..=h {
            let e = entry(spec.space(), r, k, &spec.window_compose(r, k)?, &lk)?;
            if e.separated {
                out.push(e);
                if out.len() >= 16 {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// Convergence of `f_n` to `limit` in the sup metric.
pub fn check_uniform_convergence(
    spec: &NdsSpec,
    limit: &MapTerm,
    h: u64,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    check_collective_convergence(spec, limit, h, 1)
}

/// Convergence of every window `f_r^k` (`k <= k_max`) to `f^k`.
pub fn check_collective_convergence(
    spec: &NdsSpec,
    limit: &MapTerm,
    h: u64,
    k_max: u64,
) -> Result<ConvergenceVerdict, ConvergenceError> {
    if h == 0 || k_max == 0 {
        return Err(ConvergenceError::Invalid("horizon and window length must be >= 1".into()));
    }
    let lim = limit_map(spec, limit)?;
    let space = spec.space();
    let mut last_bad = 0u64;
    let mut bad = Vec::new();
    let mut lk = NormalMap::identity(space);
    for k in 1..=k_max {
        lk = lk.then(&lim);
        for r in 1..=h {
            let e = entry(space, r, k, &spec.window_compose(r, k)?, &lk)?;
            if e.distance != "0" {
                last_bad = last_bad.max(r);
                if bad.len() < 16 {
                    bad.push(e);
                }
            }
        }
    }
    if let Some(why) = separates_forever(spec, &lim) {
        let sep = separations(spec, &lim, h, 1)?;
        return Ok(ConvergenceVerdict {
            status: Status::Refuted,
            r0: None,
            separation: sep.last().cloned(),
            distances: sep,
            detail: why,
        });
    }
    let r0 = last_bad + 1;
    // windows starting at or after r0 only see indices >= r0
    if r0 <= h && emits_limit_beyond(spec, &lim, h) {
        return Ok(ConvergenceVerdict {
            status: Status::Witnessed,
            r0: Some(r0),
            distances: bad,
            separation: None,
            detail: format!("every window of length <= {k_max} from r0 = {r0} on equals the matching power of {lim}"),
        });
    }
    Ok(ConvergenceVerdict {
        status: Status::Inconclusive,
        r0: (r0 <= h).then_some(r0),
        distances: bad,
        separation: None,
        detail: format!("windows agree with {lim} from {r0} up to {h}, but the rules do not force it beyond"),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Equicontinuity {
    #[serde(serialize_with = "rational_text")]
    pub xi: Option<BigRational>,
    /// Largest `|exponent|` of any window of length <= k from n <= H on a
    /// shift factor.
    pub max_exponent: Option<u64>,
    pub unbounded: bool,
}

fn rational_text<S: serde::Serializer>(x: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&v.to_string()),
        None => s.serialize_none(),
    }
}

/// Whether some shift term's exponent grows with its match ordinal.
fn growing_shift(spec: &NdsSpec) -> bool {
    match spec.kind() {
        SpecKind::Rules { rules, .. } => rules.iter().any(|r| {
            !r.pattern.is_finite() && matches!(r.term, TermTemplate::ShiftPow(e) if e.is_ordinal() && e.value(1) != 0)
        }),
        SpecKind::Tail { base, .. } | SpecKind::Iterate { base, .. } => growing_shift(base),
        SpecKind::Product(parts) => parts.iter().any(growing_shift),
    }
}

/// A `ξ > 0` such that `d(x, y) < ξ` implies `d(f_n^k x, f_n^k y) < ε/2`
/// for all `n <= h`.
pub fn equicontinuity_modulus(
    spec: &NdsSpec,
    eps: &BigRational,
    k: u64,
    h: u64,
) -> Result<Equicontinuity, ConvergenceError> {
    if !eps.is_positive() || k == 0 {
        return Err(ConvergenceError::Invalid("epsilon must be positive and k >= 1".into()));
    }
    let half = eps / BigInt::from(2);
    match spec.space() {
        SpaceDesc::Finite { .. } | SpaceDesc::Circle { .. } => {
            Ok(Equicontinuity { xi: Some(half), max_exponent: None, unbounded: false })
        }
        SpaceDesc::Shift { .. } => {
            if growing_shift(spec) {
                return Ok(Equicontinuity { xi: None, max_exponent: None, unbounded: true });
            }
            let mut l = 0u64;
            for n in 1..=h {
                let mut acc = 0i64;
                for j in 0..k {
                    acc += spec.step_map(n + j)?.exponent().unwrap_or(0);
                    l = l.max(acc.unsigned_abs());
                }
            }
            // σ^e is 2^|e|-Lipschitz
            let xi = half / BigInt::from(2).pow(l as u32);
            Ok(Equicontinuity { xi: Some(xi), max_exponent: Some(l), unbounded: false })
        }
        SpaceDesc::Product(_) => {
            let mut xi: Option<BigRational> = None;
            let mut max_exponent = None;
            for f in spec.factors().expect("product spec") {
                let e = equicontinuity_modulus(f, eps, k, h)?;
                let Some(x) = e.xi else { return Ok(e) };
                max_exponent = max_exponent.max(e.max_exponent);
                xi = Some(match xi {
                    Some(y) if y < x => y,
                    _ => x,
                });
            }
            Ok(Equicontinuity { xi, max_exponent, unbounded: false })
        }
    }
}
