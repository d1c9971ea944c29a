use std::fmt::Write;

use super::{NdslDocument, SystemBody};
use crate::maps::{Exponent, IndexPattern, Rule, TermTemplate};
use crate::spaces::{AlphaSource, SpaceDesc};

fn space(s: &SpaceDesc) -> String {
    match s {
        SpaceDesc::Shift { alphabet_size } => format!("shift({alphabet_size})"),
        SpaceDesc::Finite { point_count } => format!("finite({point_count})"),
        SpaceDesc::Circle { alpha } => match alpha.source() {
            AlphaSource::Sqrt2Minus1 => "circle(sqrt2m1)".into(),
            AlphaSource::Custom { num, den, radius_log2 } => format!("circle(alpha({num}/{den} +- 1/2^{radius_log2}))"),
        },
        // products are never declared directly
        SpaceDesc::Product(_) => s.to_string(),
    }
}

fn exponent(e: Exponent) -> String {
    match e {
        Exponent::Const(1) => String::new(),
        Exponent::Const(c) => format!("^{c}"),
        Exponent::Ordinal(1) => "^k".into(),
        Exponent::Ordinal(-1) => "^-k".into(),
        Exponent::Ordinal(s) => format!("^{s}*k"),
    }
}

fn term(t: &TermTemplate) -> String {
    match t {
        TermTemplate::Identity => "id".into(),
        TermTemplate::ShiftPow(e) => format!("sigma{}", exponent(*e)),
        TermTemplate::RotPow(e) => format!("rot{}", exponent(*e)),
        TermTemplate::FiniteFn(t) => t.to_string(),
    }
}

fn pattern(r: &Rule) -> String {
    let k = if r.term.uses_ordinal() || matches!(r.term.exponent(), Some(Exponent::Ordinal(_))) { ",k" } else { "" };
    match r.pattern {
        IndexPattern::Equals(n) => n.to_string(),
        IndexPattern::ArithProg { first, step } => format!("ap({first},{step}{k})"),
        IndexPattern::PowerPos { base, offset } => format!("pow({base},{offset}{k})"),
    }
}

/// Canonical text: one item per line, rules ordered by first index, single
/// spaces. Parsing the output yields an equal document.
pub fn print(doc: &NdslDocument) -> String {
    let mut out = format!("space {};\n", space(&doc.space));
    for sys in &doc.systems {
        out.push('\n');
        match &sys.body {
            SystemBody::Rules { rules, default } => {
                let _ = writeln!(out, "system {} {{", sys.name);
                for r in rules {
                    let _ = writeln!(out, "  at {}: {};", pattern(r), term(&r.term));
                }
                if *default != TermTemplate::Identity {
                    let _ = writeln!(out, "  else: {};", term(default));
                }
                out.push_str("}\n");
            }
            SystemBody::Tail { base, k } => {
                let _ = writeln!(out, "system {} = tail({base}, {k});", sys.name);
            }
            SystemBody::Iterate { base, k } => {
                let _ = writeln!(out, "system {} = iterate({base}, {k});", sys.name);
            }
            SystemBody::Product(parts) => {
                let _ = writeln!(out, "system {} = product({});", sys.name, parts.join(", "));
            }
        }
    }
    if !doc.checks.is_empty() {
        out.push('\n');
    }
    for c in &doc.checks {
        let _ = write!(out, "check {} {}", c.system, c.property);
        if let Some(h) = c.horizon {
            let _ = write!(out, " horizon {h}");
        }
        if let Some(b) = c.basis {
            let _ = write!(out, " basis {b}");
        }
        if let Some(s) = c.expect {
            let _ = write!(out, " expect {s}");
        }
        out.push_str(";\n");
    }
    out
}
