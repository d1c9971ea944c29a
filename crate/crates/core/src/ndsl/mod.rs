//! NDSL: a small line-oriented language for map sequences, derived systems
//! and check requests. The grammar is in `docs/ndsl.ebnf`.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::Serialize;

use crate::checkers::{PropertyKind, Status};
use crate::maps::{MapError, NdsSpec, Rule, TermTemplate, DEFAULT_VALIDATION_HORIZON};
use crate::spaces::SpaceDesc;

pub use printer::print;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Lexical,
    Syntax,
    Semantic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl Diagnostic {
    pub fn semantic(line: u32, col: u32, message: impl Into<String>) -> Self {
        Diagnostic { kind: DiagnosticKind::Semantic, line, col, message: message.into(), expected: Vec::new() }
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Lexical => "lexical error",
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Semantic => "semantic error",
        };
        write!(f, "{}:{}: {kind}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemBody {
    /// Rules sorted by first matching index.
    Rules {
        rules: Vec<Rule>,
        default: TermTemplate,
    },
    Tail {
        base: String,
        k: u64,
    },
    Iterate {
        base: String,
        k: u64,
    },
    Product(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemDef {
    pub name: String,
    pub body: SystemBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckDirective {
    pub system: String,
    pub property: PropertyKind,
    pub horizon: Option<u64>,
    pub basis: Option<u32>,
    pub expect: Option<Status>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdslDocument {
    pub space: SpaceDesc,
    pub systems: Vec<SystemDef>,
    pub checks: Vec<CheckDirective>,
}

#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Indices up to which infinite patterns are checked for overlap.
    pub validation_horizon: u64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { validation_horizon: DEFAULT_VALIDATION_HORIZON }
    }
}

/// Parses with default options. All diagnostics of the first failing phase
/// are returned; parsing always terminates.
pub fn parse(text: &str) -> Result<NdslDocument, Vec<Diagnostic>> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, opts: ParseOptions) -> Result<NdslDocument, Vec<Diagnostic>> {
    parser::parse_document(text, opts)
}

impl NdslDocument {
    pub fn system(&self, name: &str) -> Option<&SystemDef> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn system_names(&self) -> Vec<&str> {
        self.systems.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn compile(&self, name: &str) -> Result<NdsSpec, MapError> {
        self.compile_with(name, DEFAULT_VALIDATION_HORIZON)
    }

    pub fn compile_with(&self, name: &str, horizon: u64) -> Result<NdsSpec, MapError> {
        let def = self.system(name).ok_or_else(|| MapError::Invalid(format!("unknown system `{name}`")))?;
        match &def.body {
            SystemBody::Rules { rules, default } => {
                NdsSpec::rules(self.space.clone(), rules.clone(), default.clone(), horizon)
            }
            SystemBody::Tail { base, k } => NdsSpec::tail(self.compile_with(base, horizon)?, *k),
            SystemBody::Iterate { base, k } => NdsSpec::iterate(self.compile_with(base, horizon)?, *k),
            SystemBody::Product(parts) => {
                NdsSpec::product(parts.iter().map(|p| self.compile_with(p, horizon)).collect::<Result<_, _>>()?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Exponent, IndexPattern, MapTerm};

    #[test]
    fn odd_even_sugar() {
        let doc = parse("space shift(2); system F { at odd(k): sigma^k; at even(k): sigma^-k; }").unwrap();
        let s = doc.compile("F").unwrap();
        assert_eq!(s.eval_term(1).unwrap(), MapTerm::ShiftPow(1));
        assert_eq!(s.eval_term(2).unwrap(), MapTerm::ShiftPow(-1));
        assert_eq!(s.eval_term(5).unwrap(), MapTerm::ShiftPow(3));
        let SystemBody::Rules { rules, .. } = &doc.systems[0].body else { panic!() };
        assert_eq!(rules[0].pattern, IndexPattern::ArithProg { first: 1, step: 2 });
        assert_eq!(rules[1].term, TermTemplate::ShiftPow(Exponent::Ordinal(-1)));
    }

    #[test]
    fn power_patterns_on_the_circle() {
        let doc = parse("space circle(sqrt2m1); system G { at pow(3,0,k): rot^k; at pow(3,1,k): rot^-k; else: id; }")
            .unwrap();
        let s = doc.compile("G").unwrap();
        assert_eq!(s.eval_term(9).unwrap(), MapTerm::RotPow(2));
        assert_eq!(s.eval_term(10).unwrap(), MapTerm::RotPow(-2));
        assert_eq!(s.eval_term(11).unwrap(), MapTerm::Identity);
    }

    #[test]
    fn missing_map_expression_is_a_syntax_error() {
        let errs = parse("space shift(2); system H { at 1: }").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::Syntax);
        assert_eq!((errs[0].line, errs[0].col), (1, 34));
        assert!(errs[0].expected.iter().any(|e| e.contains("sigma")));
    }

    #[test]
    fn overlapping_rules_name_both() {
        let errs = parse("space shift(2); system H { at ap(1,2): sigma; at 5: id; }").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::Semantic);
        assert!(errs[0].message.contains("ap(1,2)") && errs[0].message.contains("at 5"), "{}", errs[0].message);
    }

    #[test]
    fn unknown_names() {
        let errs = parse("space shift(2); system T = tail(F, 2);").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::Semantic);
        let errs = parse("space shift(2); system F { at ap(1,2,k): sigma^j; }").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::Semantic);
    }

    #[test]
    fn diagnostics_render_as_json_lines() {
        let errs = parse("space shift(2); system H { at 1: }").unwrap_err();
        let line = errs[0].to_json_line();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["kind"], "syntax");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn print_round_trips_and_normalizes() {
        let src = "space shift(2);\nsystem F{at ap(4,2,k):sigma^-k;   at ap(3,2,k): sigma^k;}\n\
                   system T = tail(F,2); system P = product(F, T);\ncheck T multi-transitive:3 horizon 512 basis 2 expect witnessed;";
        let doc = parse(src).unwrap();
        let text = print(&doc);
        assert!(text.contains("product(F, T)"));
        // rules are ordered by first matching index
        assert!(text.find("ap(3,2,k)").unwrap() < text.find("ap(4,2,k)").unwrap());
        assert_eq!(parse(&text).unwrap(), doc);
    }
}
