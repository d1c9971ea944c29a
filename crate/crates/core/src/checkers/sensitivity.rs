use num::BigRational;

use super::transitivity::{common_times, each_nonempty, frequency, Freq};
use super::{CheckError, Claim, Ctx, Evidence, PropertyKind, Status, Verdict};
use crate::hitting::SetTest;
use crate::spaces::SpaceDesc;

/// Refutations that need no enumeration: `δ` at least the diameter, a
/// discrete space, or an isometric rotation.
fn trivial(ctx: &Ctx, prop: &PropertyKind, delta: &BigRational) -> Option<Verdict> {
    let space = ctx.space();
    let diam = space.diameter();
    if delta >= &diam {
        return Some(
            Verdict::new(
                prop,
                Status::Refuted,
                Evidence::Exact {
                    detail: format!("delta = {delta} is at least the diameter {diam}; no two points are farther apart"),
                    trace: Vec::new(),
                    claim: Claim::Static,
                },
            )
            .caveat("refuted trivially: delta >= diameter of the space"),
        );
    }
    let detail = match space {
        SpaceDesc::Finite { .. } => "singletons are open and have diameter 0",
        SpaceDesc::Circle { .. } => "rotations preserve distance, so a short enough arc never spreads",
        SpaceDesc::Product(parts) if parts.iter().all(|p| matches!(p, SpaceDesc::Finite { .. })) => {
            "the product is finite and discrete; singletons have diameter 0"
        }
        _ => return None,
    };
    Some(Verdict::new(
        prop,
        Status::Refuted,
        Evidence::Exact { detail: detail.into(), trace: Vec::new(), claim: Claim::Static },
    ))
}

fn separation_tests(ctx: &Ctx, delta: &BigRational) -> Vec<SetTest> {
    ctx.basis.iter().map(|u| SetTest::Separation { u: u.clone(), delta: delta.clone() }).collect()
}

pub(super) fn sensitive(ctx: &Ctx, prop: &PropertyKind, delta: &BigRational) -> Result<Verdict, CheckError> {
    if let Some(v) = trivial(ctx, prop, delta) {
        return Ok(v);
    }
    each_nonempty(ctx, prop, separation_tests(ctx, delta))
}

pub(super) fn syndetically_sensitive(
    ctx: &Ctx,
    prop: &PropertyKind,
    delta: &BigRational,
) -> Result<Verdict, CheckError> {
    if let Some(v) = trivial(ctx, prop, delta) {
        return Ok(v);
    }
    frequency(ctx, prop, separation_tests(ctx, delta), Freq::Syndetic)
}

pub(super) fn thickly_sensitive(ctx: &Ctx, prop: &PropertyKind, delta: &BigRational) -> Result<Verdict, CheckError> {
    if let Some(v) = trivial(ctx, prop, delta) {
        return Ok(v);
    }
    frequency(ctx, prop, separation_tests(ctx, delta), Freq::Thick)
}

pub(super) fn multi_sensitive(ctx: &Ctx, prop: &PropertyKind, delta: &BigRational) -> Result<Verdict, CheckError> {
    if let Some(v) = trivial(ctx, prop, delta) {
        return Ok(v);
    }
    common_times(ctx, prop, separation_tests(ctx, delta), ctx.cfg.multi_m.max(1) as usize)
}
