//! Command-line front end. Exit codes: 0 all checks as requested, 1 some
//! check refuted (or contradicts its pinned status), 2 some check
//! inconclusive, 3 input errors.

pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::checkers::{check_property, CheckConfig, PropertyKind, Status};
use crate::corpus::{self, DEFAULT_HORIZON, DEFAULT_RESOLUTION};
use crate::ndsl::{parse, NdslDocument};
use report::{evidence_summary, CheckResult, ConfigSummary, Input, ReportBody, ReportDocument};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum DiagFormat {
    #[default]
    Text,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "ndslab", version, about = "Exact checks for non-autonomous discrete systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check properties of a system in an NDSL file. Without --property the
    /// file's own check directives run.
    Check {
        file: PathBuf,
        /// System to check; defaults to the first one in the file.
        #[arg(long)]
        system: Option<String>,
        /// Property in kebab-case, parameter after a colon
        /// (`weakly-mixing:3`, `sensitive:1/4`). Repeatable.
        #[arg(long = "property", value_parser = parse_property)]
        properties: Vec<PropertyKind>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Basis resolution.
        #[arg(long)]
        basis: Option<u32>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Rendering of parser diagnostics on stderr.
        #[arg(long, value_enum, default_value_t)]
        diagnostics: DiagFormat,
    },
    /// Run the scenario corpus.
    Corpus {
        /// Glob over scenario names, e.g. `example-3.*`.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

fn parse_property(s: &str) -> Result<PropertyKind, String> {
    s.parse::<PropertyKind>().map_err(|e| e.to_string())
}

/// Parses `args` (program name first) and runs; usage errors exit with 3.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match cli.command {
        Command::Check { file, system, properties, horizon, basis, format, diagnostics } => {
            let opts = CheckOptions { system, properties, horizon, basis, format, diagnostics };
            cmd_check(&file, &opts, out, err)
        }
        Command::Corpus { filter, format } => cmd_corpus(filter.as_deref(), format, out, err),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

struct Job {
    system: String,
    property: PropertyKind,
    expect: Option<Status>,
    cfg: CheckConfig,
}

fn run_job(doc: &NdslDocument, job: &Job) -> Result<CheckResult, String> {
    let spec = doc.compile(&job.system).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let v = check_property(&spec, &job.property, &job.cfg).map_err(|e| e.to_string())?;
    let elapsed_ms = t.elapsed().as_millis() as u64;
    let (evidence, digest) = evidence_summary(&v);
    let pass = job.expect.is_none_or(|s| s == v.status);
    Ok(CheckResult {
        system: job.system.clone(),
        property: job.property.to_string(),
        expected: job.expect.map_or_else(|| "any".into(), |s| s.to_string()),
        status: v.status.to_string(),
        pass,
        config: ConfigSummary::new(&job.cfg, Some(&doc.space)),
        evidence,
        digest,
        caveats: v.caveats,
        elapsed_ms,
    })
}

/// Flags of the `check` command.
#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    pub system: Option<String>,
    pub properties: Vec<PropertyKind>,
    pub horizon: Option<u64>,
    pub basis: Option<u32>,
    pub format: Format,
    pub diagnostics: DiagFormat,
}

pub fn cmd_check(file: &std::path::Path, opts: &CheckOptions, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let CheckOptions { system, properties, horizon, basis, format, diagnostics } = opts;
    let (system, horizon, basis) = (system.as_deref(), *horizon, *basis);
    let bytes = match std::fs::read(file) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", file.display());
            return EXIT_INPUT;
        }
    };
    let Ok(text) = String::from_utf8(bytes.clone()) else {
        let _ = writeln!(err, "error: {} is not valid UTF-8", file.display());
        return EXIT_INPUT;
    };
    let doc = match parse(&text) {
        Ok(d) => d,
        Err(diags) => {
            for d in diags {
                let _ = match diagnostics {
                    DiagFormat::Text => writeln!(err, "{}:{d}", file.display()),
                    DiagFormat::Json => {
                        let mut v = serde_json::to_value(&d).expect("diagnostics serialize");
                        v["file"] = file.display().to_string().into();
                        writeln!(err, "{v}")
                    }
                };
            }
            return EXIT_INPUT;
        }
    };
    let cfg_for = |h: Option<u64>, r: Option<u32>| {
        CheckConfig::new(basis.or(r).unwrap_or(DEFAULT_RESOLUTION), horizon.or(h).unwrap_or(DEFAULT_HORIZON))
    };
    let jobs: Vec<Job> = if properties.is_empty() {
        doc.checks
            .iter()
            .filter(|c| system.is_none_or(|s| s == c.system))
            .map(|c| Job {
                system: c.system.clone(),
                property: c.property.clone(),
                expect: c.expect,
                cfg: cfg_for(c.horizon, c.basis),
            })
            .collect()
    } else {
        let Some(name) = system.map(str::to_string).or_else(|| doc.systems.first().map(|s| s.name.clone())) else {
            let _ = writeln!(err, "error: {} defines no system", file.display());
            return EXIT_INPUT;
        };
        if doc.system(&name).is_none() {
            let _ = writeln!(err, "error: unknown system `{name}` (known: {})", doc.system_names().join(", "));
            return EXIT_INPUT;
        }
        properties
            .iter()
            .map(|p| Job {
                system: name.clone(),
                property: p.clone(),
                expect: Some(Status::Witnessed),
                cfg: cfg_for(None, None),
            })
            .collect()
    };
    let mut warnings = Vec::new();
    if jobs.is_empty() {
        warnings.push("nothing to check: no --property given and no matching check directives".to_string());
    }
    let mut results = Vec::with_capacity(jobs.len());
    for job in &jobs {
        match run_job(&doc, job) {
            Ok(r) => results.push(r),
            Err(e) => {
                let _ = writeln!(err, "error: {} {}: {e}", job.system, job.property);
                return EXIT_INPUT;
            }
        }
    }
    let code = exit_code(&results);
    let input = Input { path: file.display().to_string(), sha256: sha256_hex(&bytes) };
    for w in &warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match *format {
        Format::Json => {
            let doc = ReportDocument::new(input, ReportBody::Check { results }, warnings);
            let _ = writeln!(out, "{}", doc.to_json());
        }
        Format::Table => {
            let _ =
                writeln!(out, "{:<12} {:<32} {:<13} {:<13} {:<4}", "system", "property", "expected", "status", "ok");
            for r in &results {
                let _ = writeln!(
                    out,
                    "{:<12} {:<32} {:<13} {:<13} {:<4}",
                    r.system,
                    r.property,
                    r.expected,
                    r.status,
                    if r.pass { "yes" } else { "no" }
                );
                for c in &r.caveats {
                    let _ = writeln!(out, "    caveat: {c}");
                }
            }
        }
    }
    code
}

fn exit_code(results: &[CheckResult]) -> i32 {
    let failing = |s: &str| results.iter().any(|r| !r.pass && r.status == s);
    if failing("refuted") || failing("witnessed") {
        EXIT_REFUTED
    } else if failing("inconclusive") {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

pub fn cmd_corpus(filter: Option<&str>, format: Format, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let selected = match corpus::select(filter) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: bad filter pattern: {e}");
            return EXIT_INPUT;
        }
    };
    let mut warnings = Vec::new();
    if selected.is_empty() {
        warnings.push(format!("no scenario matches `{}`", filter.unwrap_or("*")));
        let _ = writeln!(err, "warning: {}", warnings[0]);
    }
    let mut h = Sha256::new();
    for s in &selected {
        h.update(s.name.as_bytes());
        h.update([0]);
        h.update(s.source.as_bytes());
    }
    let input = Input { path: "corpus".into(), sha256: format!("{:x}", h.finalize()) };
    let scenarios: Vec<_> = selected.iter().map(corpus::run_scenario).collect();
    let code = if scenarios.iter().all(|s| s.pass) { EXIT_OK } else { EXIT_REFUTED };
    match format {
        Format::Json => {
            let doc = ReportDocument::new(
                input,
                ReportBody::Corpus { filter: filter.map(str::to_string), scenarios },
                warnings,
            );
            let _ = writeln!(out, "{}", doc.to_json());
        }
        Format::Table => {
            let _ = writeln!(
                out,
                "{:<26} {:<9} {:<64} {:<18} {:<18} {:<4}",
                "scenario", "kind", "expectation", "expected", "observed", "ok"
            );
            for s in &scenarios {
                for e in &s.expectations {
                    let kind = serde_json::to_value(&e.kind).ok().and_then(|v| v.as_str().map(str::to_string));
                    let _ = writeln!(
                        out,
                        "{:<26} {:<9} {:<64} {:<18} {:<18} {:<4}",
                        s.name,
                        kind.unwrap_or_default(),
                        fit(&e.label, 64),
                        fit(&e.expected, 18),
                        fit(&e.observed, 18),
                        if e.pass { "yes" } else { "no" }
                    );
                }
            }
        }
    }
    code
}

/// Cuts `s` to `w` characters so table columns stay aligned.
fn fit(s: &str, w: usize) -> String {
    if s.chars().count() <= w {
        s.to_string()
    } else {
        let mut t: String = s.chars().take(w - 1).collect();
        t.push('~');
        t
    }
}
