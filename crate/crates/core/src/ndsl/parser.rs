use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use super::{CheckDirective, Diagnostic, DiagnosticKind, NdslDocument, ParseOptions, SystemBody, SystemDef};
use crate::checkers::{PropertyKind, Status};
use crate::maps::{Exponent, FiniteTable, IndexPattern, NdsSpec, Rule, TermTemplate};
use crate::spaces::{IrrationalEnclosure, SpaceDesc};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// A rule before space checks: the binder name is kept for diagnostics.
struct RawRule {
    pattern: IndexPattern,
    binder: Option<String>,
    term: RawTerm,
    line: u32,
    col: u32,
}

enum RawExp {
    Const(i64),
    Scaled(i64, String),
}

enum RawTerm {
    Id,
    Sigma(RawExp),
    Rot(RawExp),
    Table(Vec<(u64, u64)>),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> Diagnostic {
        let t = self.peek();
        Diagnostic {
            kind: DiagnosticKind::Syntax,
            line: t.line,
            col: t.col,
            message: format!("unexpected {}", t.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump()))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.peek().tok {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn space(&mut self) -> PResult<SpaceDesc> {
        let (kind, tok) = self.ident("`shift`, `finite` or `circle`")?;
        let sem = |m: String| Diagnostic::semantic(tok.line, tok.col, m);
        match kind.as_str() {
            "shift" => {
                self.expect(Tok::LParen)?;
                let n = self.int()?;
                self.expect(Tok::RParen)?;
                if !(2..=16).contains(&n) {
                    return Err(sem(format!("alphabet size {n} outside 2..=16")));
                }
                Ok(SpaceDesc::Shift { alphabet_size: n as u8 })
            }
            "finite" => {
                self.expect(Tok::LParen)?;
                let n = self.int()?;
                self.expect(Tok::RParen)?;
                if !(1..=4096).contains(&n) {
                    return Err(sem(format!("point count {n} outside 1..=4096")));
                }
                Ok(SpaceDesc::Finite { point_count: n as u32 })
            }
            "circle" => {
                self.expect(Tok::LParen)?;
                let (a, atok) = self.ident("`sqrt2m1` or `alpha`")?;
                let alpha = match a.as_str() {
                    "sqrt2m1" => IrrationalEnclosure::sqrt2_minus_1(),
                    "alpha" => {
                        self.expect(Tok::LParen)?;
                        let num = self.int()?;
                        self.expect(Tok::Slash)?;
                        let den = self.int()?;
                        self.expect(Tok::PlusMinus)?;
                        let one = self.int()?;
                        self.expect(Tok::Slash)?;
                        let two = self.int()?;
                        self.expect(Tok::Caret)?;
                        let m = self.int()?;
                        self.expect(Tok::RParen)?;
                        if one != 1 || two != 2 {
                            return Err(Diagnostic::semantic(
                                atok.line,
                                atok.col,
                                "enclosure radius must be written 1/2^m",
                            ));
                        }
                        let num = i64::try_from(num).map_err(|_| sem("numerator too large".into()))?;
                        let m = u32::try_from(m).map_err(|_| sem("radius exponent too large".into()))?;
                        IrrationalEnclosure::custom(num, den, m)
                            .map_err(|e| Diagnostic::semantic(atok.line, atok.col, e.to_string()))?
                    }
                    _ => {
                        return Err(Diagnostic {
                            kind: DiagnosticKind::Syntax,
                            line: atok.line,
                            col: atok.col,
                            message: format!("unexpected `{a}`"),
                            expected: vec!["`sqrt2m1`".into(), "`alpha`".into()],
                        })
                    }
                };
                self.expect(Tok::RParen)?;
                Ok(SpaceDesc::Circle { alpha })
            }
            _ => Err(Diagnostic {
                kind: DiagnosticKind::Syntax,
                line: tok.line,
                col: tok.col,
                message: format!("unexpected `{kind}`"),
                expected: vec!["`shift`".into(), "`finite`".into(), "`circle`".into()],
            }),
        }
    }

    fn binder(&mut self) -> PResult<Option<String>> {
        if self.peek().tok == Tok::Comma {
            self.bump();
            Ok(Some(self.ident("ordinal name")?.0))
        } else {
            Ok(None)
        }
    }

    fn pattern(&mut self) -> PResult<(IndexPattern, Option<String>)> {
        if let Tok::Int(n) = self.peek().tok {
            self.bump();
            return Ok((IndexPattern::Equals(n), None));
        }
        let expected = ["integer", "`ap(a,d[,k])`", "`pow(b,o[,k])`", "`odd(k)`", "`even(k)`"];
        let Tok::Ident(name) = self.peek().tok.clone() else {
            return Err(self.unexpected(&expected));
        };
        match name.as_str() {
            "ap" | "pow" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.int()?;
                self.expect(Tok::Comma)?;
                let b = self.int()?;
                let binder = self.binder()?;
                self.expect(Tok::RParen)?;
                let p = if name == "ap" {
                    IndexPattern::ArithProg { first: a, step: b }
                } else {
                    IndexPattern::PowerPos { base: a, offset: b }
                };
                Ok((p, binder))
            }
            "odd" | "even" => {
                self.bump();
                let mut binder = None;
                if self.peek().tok == Tok::LParen {
                    self.bump();
                    binder = Some(self.ident("ordinal name")?.0);
                    self.expect(Tok::RParen)?;
                }
                let first = if name == "odd" { 1 } else { 2 };
                Ok((IndexPattern::ArithProg { first, step: 2 }, binder))
            }
            _ => Err(self.unexpected(&expected)),
        }
    }

    fn exponent(&mut self) -> PResult<RawExp> {
        if self.peek().tok != Tok::Caret {
            return Ok(RawExp::Const(1));
        }
        self.bump();
        let sign = match self.peek().tok {
            Tok::Minus => {
                self.bump();
                -1
            }
            Tok::Plus => {
                self.bump();
                1
            }
            _ => 1,
        };
        let too_big = |t: &Token| Diagnostic::semantic(t.line, t.col, "exponent too large");
        match self.peek().tok.clone() {
            Tok::Int(n) => {
                let t = self.bump();
                let n = i64::try_from(n).map_err(|_| too_big(&t))? * sign;
                if self.peek().tok == Tok::Star {
                    self.bump();
                    let (name, _) = self.ident("ordinal name")?;
                    return Ok(RawExp::Scaled(n, name));
                }
                if let Tok::Ident(name) = self.peek().tok.clone() {
                    self.bump();
                    return Ok(RawExp::Scaled(n, name));
                }
                Ok(RawExp::Const(n))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(RawExp::Scaled(sign, name))
            }
            _ => Err(self.unexpected(&["integer", "ordinal name"])),
        }
    }

    fn map_expr(&mut self) -> PResult<RawTerm> {
        let expected = ["`id`", "`sigma`", "`rot`", "`table{...}`"];
        let Tok::Ident(name) = self.peek().tok.clone() else {
            return Err(self.unexpected(&expected));
        };
        match name.as_str() {
            "id" => {
                self.bump();
                Ok(RawTerm::Id)
            }
            "sigma" => {
                self.bump();
                Ok(RawTerm::Sigma(self.exponent()?))
            }
            "rot" => {
                self.bump();
                Ok(RawTerm::Rot(self.exponent()?))
            }
            "table" => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let mut pairs = Vec::new();
                loop {
                    let a = self.int()?;
                    self.expect(Tok::Arrow)?;
                    let b = self.int()?;
                    pairs.push((a, b));
                    match self.peek().tok {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBrace => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected(&["`,`", "`}`"])),
                    }
                }
                Ok(RawTerm::Table(pairs))
            }
            _ => Err(self.unexpected(&expected)),
        }
    }

    fn property(&mut self) -> PResult<PropertyKind> {
        let (name, tok) = self.ident("property name")?;
        let mut param = None;
        if self.peek().tok == Tok::Colon {
            self.bump();
            let a = self.int()?;
            if self.peek().tok == Tok::Slash {
                self.bump();
                let b = self.int()?;
                param = Some(format!("{a}/{b}"));
            } else {
                param = Some(a.to_string());
            }
        }
        PropertyKind::from_parts(&name, param.as_deref()).map_err(|e| Diagnostic::semantic(tok.line, tok.col, e.0))
    }
}

fn resolve_exp(e: &RawExp, binder: &Option<String>, line: u32, col: u32) -> PResult<Exponent> {
    match e {
        RawExp::Const(c) => Ok(Exponent::Const(*c)),
        RawExp::Scaled(s, name) => match binder {
            Some(b) if b == name => Ok(Exponent::Ordinal(*s)),
            _ => Err(Diagnostic::semantic(
                line,
                col,
                format!("unknown name `{name}`: the pattern binds no such ordinal"),
            )),
        },
    }
}

fn resolve_term(raw: &RawRule, space: &SpaceDesc) -> PResult<TermTemplate> {
    let (line, col) = (raw.line, raw.col);
    let t = match &raw.term {
        RawTerm::Id => TermTemplate::Identity,
        RawTerm::Sigma(e) => TermTemplate::ShiftPow(resolve_exp(e, &raw.binder, line, col)?),
        RawTerm::Rot(e) => TermTemplate::RotPow(resolve_exp(e, &raw.binder, line, col)?),
        RawTerm::Table(pairs) => table(pairs, space, line, col)?,
    };
    match (&t, space) {
        (TermTemplate::ShiftPow(_), SpaceDesc::Shift { .. })
        | (TermTemplate::RotPow(_), SpaceDesc::Circle { .. })
        | (TermTemplate::FiniteFn(_), SpaceDesc::Finite { .. })
        | (TermTemplate::Identity, _) => Ok(t),
        _ => Err(Diagnostic::semantic(line, col, format!("`{t}` does not act on {space}"))),
    }
}

fn table(pairs: &[(u64, u64)], space: &SpaceDesc, line: u32, col: u32) -> PResult<TermTemplate> {
    let SpaceDesc::Finite { point_count } = space else {
        return Err(Diagnostic::semantic(line, col, "tables act on finite spaces only"));
    };
    let n = *point_count as u64;
    let mut images = vec![0u32; n as usize];
    for &(a, b) in pairs {
        if a == 0 || a > n || b == 0 || b > n {
            return Err(Diagnostic::semantic(line, col, format!("table entry {a}->{b} outside 1..={n}")));
        }
        if images[(a - 1) as usize] != 0 {
            return Err(Diagnostic::semantic(line, col, format!("point {a} mapped twice")));
        }
        images[(a - 1) as usize] = b as u32;
    }
    if let Some(i) = images.iter().position(|&v| v == 0) {
        return Err(Diagnostic::semantic(line, col, format!("table leaves point {} unmapped", i + 1)));
    }
    Ok(TermTemplate::FiniteFn(FiniteTable::new(images).expect("checked entries")))
}

pub(super) fn parse_document(text: &str, opts: ParseOptions) -> Result<NdslDocument, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    parse_items(&mut p, opts).map_err(|d| vec![d])
}

fn parse_items(p: &mut Parser, opts: ParseOptions) -> PResult<NdslDocument> {
    let mut space: Option<SpaceDesc> = None;
    let mut systems: Vec<SystemDef> = Vec::new();
    let mut checks = Vec::new();
    let mut names = BTreeSet::new();
    loop {
        let tok = p.peek().clone();
        match &tok.tok {
            Tok::Eof => break,
            Tok::Ident(k) if k == "space" => {
                p.bump();
                let s = p.space()?;
                p.expect(Tok::Semi)?;
                if space.is_some() {
                    return Err(Diagnostic::semantic(tok.line, tok.col, "space declared twice"));
                }
                space = Some(s);
            }
            Tok::Ident(k) if k == "system" => {
                p.bump();
                let Some(sp) = space.clone() else {
                    return Err(Diagnostic::semantic(
                        tok.line,
                        tok.col,
                        "a system needs a preceding space declaration",
                    ));
                };
                let (name, ntok) = p.ident("system name")?;
                if names.contains(&name) {
                    return Err(Diagnostic::semantic(ntok.line, ntok.col, format!("system `{name}` defined twice")));
                }
                let body = match p.peek().tok {
                    Tok::LBrace => rule_block(p, &sp, &name, ntok.line, ntok.col, opts)?,
                    Tok::Eq => {
                        p.bump();
                        let b = derived(p, &names)?;
                        p.expect(Tok::Semi)?;
                        b
                    }
                    _ => return Err(p.unexpected(&["`{`", "`=`"])),
                };
                names.insert(name.clone());
                systems.push(SystemDef { name, body });
            }
            Tok::Ident(k) if k == "check" => {
                p.bump();
                let (system, stok) = p.ident("system name")?;
                if !names.contains(&system) {
                    return Err(Diagnostic::semantic(stok.line, stok.col, format!("unknown system `{system}`")));
                }
                let property = p.property()?;
                let mut c = CheckDirective { system, property, horizon: None, basis: None, expect: None };
                loop {
                    if p.is_kw("horizon") {
                        p.bump();
                        let t = p.peek().clone();
                        let h = p.int()?;
                        if h == 0 {
                            return Err(Diagnostic::semantic(t.line, t.col, "horizon must be >= 1"));
                        }
                        c.horizon = Some(h);
                    } else if p.is_kw("basis") {
                        p.bump();
                        let t = p.peek().clone();
                        let r = p.int()?;
                        if r == 0 || r > 64 {
                            return Err(Diagnostic::semantic(t.line, t.col, "basis resolution must lie in 1..=64"));
                        }
                        c.basis = Some(r as u32);
                    } else if p.is_kw("expect") {
                        p.bump();
                        let (s, t) = p.ident("`witnessed`, `refuted` or `inconclusive`")?;
                        c.expect = Some(s.parse::<Status>().map_err(|e| Diagnostic::semantic(t.line, t.col, e.0))?);
                    } else {
                        break;
                    }
                }
                if p.peek().tok != Tok::Semi {
                    return Err(p.unexpected(&["`horizon`", "`basis`", "`expect`", "`;`"]));
                }
                p.bump();
                checks.push(c);
            }
            _ => return Err(p.unexpected(&["`space`", "`system`", "`check`", "end of input"])),
        }
    }
    let Some(space) = space else {
        let t = p.peek();
        return Err(Diagnostic::semantic(t.line, t.col, "missing space declaration"));
    };
    Ok(NdslDocument { space, systems, checks })
}

fn rule_block(
    p: &mut Parser,
    space: &SpaceDesc,
    name: &str,
    line: u32,
    col: u32,
    opts: ParseOptions,
) -> PResult<SystemBody> {
    p.expect(Tok::LBrace)?;
    let mut raws = Vec::new();
    let mut default: Option<TermTemplate> = None;
    loop {
        let t = p.peek().clone();
        if p.is_kw("at") {
            p.bump();
            let (pattern, binder) = p.pattern()?;
            p.expect(Tok::Colon)?;
            let term = p.map_expr()?;
            p.expect(Tok::Semi)?;
            raws.push(RawRule { pattern, binder, term, line: t.line, col: t.col });
        } else if p.is_kw("else") {
            p.bump();
            p.expect(Tok::Colon)?;
            let term = p.map_expr()?;
            p.expect(Tok::Semi)?;
            if default.is_some() {
                return Err(Diagnostic::semantic(t.line, t.col, "more than one `else` rule"));
            }
            let raw = RawRule { pattern: IndexPattern::Equals(1), binder: None, term, line: t.line, col: t.col };
            default = Some(resolve_term(&raw, space)?);
        } else if t.tok == Tok::RBrace {
            p.bump();
            break;
        } else {
            return Err(p.unexpected(&["`at`", "`else`", "`}`"]));
        }
    }
    let mut rules = Vec::with_capacity(raws.len());
    for r in &raws {
        r.pattern.validate().map_err(|e| Diagnostic::semantic(r.line, r.col, e.to_string()))?;
        rules.push(Rule::new(r.pattern.clone(), resolve_term(r, space)?));
    }
    rules.sort_by_key(|r| r.pattern.first());
    let default = default.unwrap_or(TermTemplate::Identity);
    NdsSpec::rules(space.clone(), rules.clone(), default.clone(), opts.validation_horizon)
        .map_err(|e| Diagnostic::semantic(line, col, format!("system `{name}`: {e}")))?;
    Ok(SystemBody::Rules { rules, default })
}

fn derived(p: &mut Parser, names: &BTreeSet<String>) -> PResult<SystemBody> {
    let (op, tok) = p.ident("`tail`, `iterate` or `product`")?;
    let known = |p: &mut Parser| -> PResult<String> {
        let (n, t) = p.ident("system name")?;
        if names.contains(&n) {
            Ok(n)
        } else {
            Err(Diagnostic::semantic(t.line, t.col, format!("unknown system `{n}`")))
        }
    };
    match op.as_str() {
        "tail" | "iterate" => {
            p.expect(Tok::LParen)?;
            let base = known(p)?;
            p.expect(Tok::Comma)?;
            let t = p.peek().clone();
            let k = p.int()?;
            p.expect(Tok::RParen)?;
            if k == 0 {
                return Err(Diagnostic::semantic(t.line, t.col, format!("{op} index must be >= 1")));
            }
            Ok(if op == "tail" { SystemBody::Tail { base, k } } else { SystemBody::Iterate { base, k } })
        }
        "product" => {
            p.expect(Tok::LParen)?;
            let mut parts = vec![known(p)?];
            while p.peek().tok == Tok::Comma {
                p.bump();
                parts.push(known(p)?);
            }
            p.expect(Tok::RParen)?;
            if parts.len() < 2 {
                return Err(Diagnostic::semantic(tok.line, tok.col, "a product needs at least two factors"));
            }
            Ok(SystemBody::Product(parts))
        }
        _ => Err(Diagnostic {
            kind: DiagnosticKind::Syntax,
            line: tok.line,
            col: tok.col,
            message: format!("unexpected `{op}`"),
            expected: vec!["`tail`".into(), "`iterate`".into(), "`product`".into()],
        }),
    }
}
