use serde::Serialize;
use serde_json::Value;

use crate::checkers::{CheckConfig, Evidence, Verdict};
use crate::corpus::ScenarioReport;
use crate::spaces::alpha::default_alpha_bits;
use crate::spaces::SpaceDesc;

pub const SCHEMA_VERSION: u32 = 1;

/// Witness rows kept in a report; the digest covers all of them.
const MAX_ENTRIES: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct ConfigSummary {
    pub resolution: u32,
    pub horizon: u64,
    pub law_horizon: u64,
    pub syndetic_gap: u64,
    pub thick_run: u64,
    pub multi_m: u32,
    pub alpha_bits: u32,
    /// `log2` of the α enclosure width, when the space has a circle factor.
    pub alpha_width_log2: Option<i64>,
}

impl ConfigSummary {
    pub fn new(cfg: &CheckConfig, space: Option<&SpaceDesc>) -> Self {
        ConfigSummary {
            resolution: cfg.resolution,
            horizon: cfg.horizon,
            law_horizon: cfg.law_horizon,
            syndetic_gap: cfg.gap_limit(),
            thick_run: cfg.run_limit(),
            multi_m: cfg.multi_m,
            alpha_bits: default_alpha_bits(),
            alpha_width_log2: space.and_then(circle_width),
        }
    }
}

fn circle_width(s: &SpaceDesc) -> Option<i64> {
    match s {
        SpaceDesc::Circle { alpha } => Some(alpha.width_log2()),
        SpaceDesc::Product(parts) => parts.iter().find_map(circle_width),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub system: String,
    pub property: String,
    /// `witnessed` for requested properties, the pinned status for
    /// directives, `any` when a directive pins none.
    pub expected: String,
    pub status: String,
    pub pass: bool,
    pub config: ConfigSummary,
    pub evidence: Value,
    /// SHA-256 of the full serialized evidence.
    pub digest: String,
    pub caveats: Vec<String>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum ReportBody {
    Check { results: Vec<CheckResult> },
    Corpus { filter: Option<String>, scenarios: Vec<ScenarioReport> },
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub input: Input,
    #[serde(flatten)]
    pub body: ReportBody,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(input: Input, body: ReportBody, warnings: Vec<String>) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            input,
            body,
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Serialized evidence with witness tables cut to their first rows.
pub fn evidence_summary(v: &Verdict) -> (Value, String) {
    let full = serde_json::to_value(&v.evidence).expect("evidence serializes");
    let digest = crate::corpus::digest(&full);
    let mut short = full;
    if let Evidence::Witnesses { entries, .. } = &v.evidence {
        if entries.len() > MAX_ENTRIES {
            if let Some(obj) = short.as_object_mut() {
                obj.insert("entries_total".into(), entries.len().into());
                if let Some(Value::Array(a)) = obj.get_mut("entries") {
                    a.truncate(MAX_ENTRIES);
                }
            }
        }
    }
    (short, digest)
}
