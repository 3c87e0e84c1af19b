// SPDX-License-Identifier: Apache-2.0

//! iproute2-style configuration grammar.
//!
//! ```text
//! route add <prefix> [encap seg6local action {End|End.AD|End.AS|End.AM}
//!       [chain {inbound|fromVNF}] [oif I] [iif I] [nh6 A] [age S]
//!       [segs S1,S2,...] [src A]] [via A] [dev I] [table N]
//! route del <prefix> [table N]
//! rule add [pref N] {iif I table N | seg6local-behaviour <kind> | table N}
//! rule del {pref N | iif I table N | seg6local-behaviour <kind>}
//! vnf bind <iface> [type {passthrough|end}] [sid A]... [route <prefix>]...
//! link add <iface>
//! show
//! ```
//!
//! A leading `$` prompt and `ip -6` are stripped, so listings can be pasted
//! verbatim. Lines ending in `\` continue on the next line.

use std::net::Ipv6Addr;

use thiserror::Error;

use crate::behavior::{BehaviorKind, Chain};
use crate::routing::{Prefix, TableId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    SyntaxError { column: usize, message: String },
    #[error("unknown keyword `{word}` at column {column}")]
    UnknownKeyword { column: usize, word: String },
    #[error("missing required {0}")]
    MissingRequired(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seg6LocalSpec {
    pub kind: BehaviorKind,
    /// Absent for single bidirectional instances.
    pub chain: Option<Chain>,
    pub oif: Option<String>,
    pub iif: Option<String>,
    pub nh6: Option<Ipv6Addr>,
    pub age: Option<u32>,
    pub segs: Option<Vec<Ipv6Addr>>,
    pub src: Option<Ipv6Addr>,
    /// Raw End.AS headers in hex, as printed by `show`.
    pub headers: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSpec {
    pub prefix: Prefix,
    pub table: TableId,
    pub via: Option<Ipv6Addr>,
    pub dev: Option<String>,
    pub seg6local: Option<Seg6LocalSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSelectorSpec {
    All,
    Iif(String),
    Seg6LocalBehaviour(BehaviorKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    pub priority: Option<u32>,
    pub selector: RuleSelectorSpec,
    pub table: Option<TableId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VnfType {
    /// Legacy VNF: one routing lookup, packet returned unchanged.
    PassThrough,
    /// SR-aware VNF applying End.
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigCommand {
    RouteAdd(RouteSpec),
    RouteDel { prefix: Prefix, table: TableId },
    RuleAdd(RuleSpec),
    RuleDel(RuleSpec),
    VnfBind {
        iface: String,
        vnf: VnfType,
        /// SIDs an SR-aware VNF answers to.
        sids: Vec<Ipv6Addr>,
        routes: Vec<Prefix>,
    },
    LinkAdd { name: String },
    Show,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (c.is_whitespace() || c == '\\', start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.peek();
        self.pos += usize::from(t.is_some());
        t
    }

    fn expect(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        self.next().ok_or_else(|| ParseError::SyntaxError {
            column: self.end_column,
            message: format!("expected {what}"),
        })
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.expect(kw)?;
        if t.text == kw {
            Ok(())
        } else {
            Err(syntax(t, format!("expected `{kw}`")))
        }
    }

    fn value<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let t = self.expect(what)?;
        t.text.parse().map_err(|_| syntax(t, format!("invalid {what} `{}`", t.text)))
    }
}

fn syntax(t: Token<'_>, message: String) -> ParseError {
    ParseError::SyntaxError {
        column: t.column,
        message,
    }
}

fn unknown(t: Token<'_>) -> ParseError {
    ParseError::UnknownKeyword {
        column: t.column,
        word: t.text.to_string(),
    }
}

fn set_once<T>(slot: &mut Option<T>, v: T, t: Token<'_>) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(syntax(t, format!("`{}` given twice", t.text)));
    }
    *slot = Some(v);
    Ok(())
}

/// Parses one command line. Returns `Ok(None)` for blank and comment lines.
pub fn parse_command(line: &str) -> Result<Option<ConfigCommand>, ParseError> {
    let body = line.split('#').next().unwrap_or("");
    let mut tokens = tokenize(body);
    if tokens.first().is_some_and(|t| t.text == "$") {
        tokens.remove(0);
    } else if let Some(t) = tokens.first_mut() {
        if let Some(rest) = t.text.strip_prefix('$') {
            t.text = rest;
            t.column += 1;
        }
    }
    if tokens.first().is_some_and(|t| t.text == "ip") {
        tokens.remove(0);
        if tokens.first().is_some_and(|t| t.text == "-6") {
            tokens.remove(0);
        }
    }
    if tokens.is_empty() {
        return Ok(None);
    }
    let mut c = Cursor {
        tokens,
        pos: 0,
        end_column: body.trim_end().len() + 1,
    };
    let object = c.expect("command")?;
    let cmd = match object.text {
        "show" => ConfigCommand::Show,
        "route" => {
            let verb = c.expect("route verb")?;
            match verb.text {
                "add" => ConfigCommand::RouteAdd(parse_route(&mut c)?),
                "del" | "delete" => {
                    let r = parse_route(&mut c)?;
                    ConfigCommand::RouteDel {
                        prefix: r.prefix,
                        table: r.table,
                    }
                }
                _ => return Err(unknown(verb)),
            }
        }
        "rule" => {
            let verb = c.expect("rule verb")?;
            match verb.text {
                "add" => ConfigCommand::RuleAdd(parse_rule(&mut c, true)?),
                "del" | "delete" => ConfigCommand::RuleDel(parse_rule(&mut c, false)?),
                _ => return Err(unknown(verb)),
            }
        }
        "vnf" => {
            c.keyword("bind")?;
            parse_vnf(&mut c)?
        }
        "link" => {
            c.keyword("add")?;
            let name = c.expect("interface name")?.text.to_string();
            ConfigCommand::LinkAdd { name }
        }
        _ => return Err(unknown(object)),
    };
    if let Some(t) = c.next() {
        return Err(syntax(t, format!("unexpected `{}`", t.text)));
    }
    Ok(Some(cmd))
}

fn parse_route(c: &mut Cursor<'_>) -> Result<RouteSpec, ParseError> {
    let pt = c.expect("prefix")?;
    let prefix: Prefix = pt
        .text
        .parse()
        .map_err(|_| syntax(pt, format!("invalid prefix `{}`", pt.text)))?;
    let mut table = None;
    let mut via = None;
    let mut dev = None;
    let mut seg6local = None;
    while let Some(t) = c.next() {
        match t.text {
            "table" => set_once(&mut table, c.value::<TableId>("table")?, t)?,
            "via" => set_once(&mut via, c.value::<Ipv6Addr>("address")?, t)?,
            "dev" => set_once(&mut dev, c.expect("device")?.text.to_string(), t)?,
            "encap" => {
                c.keyword("seg6local")?;
                let spec = parse_seg6local(c)?;
                set_once(&mut seg6local, spec, t)?;
            }
            _ => return Err(unknown(t)),
        }
    }
    Ok(RouteSpec {
        prefix,
        table: table.unwrap_or(TableId::MAIN),
        via,
        dev,
        seg6local,
    })
}

fn parse_seg6local(c: &mut Cursor<'_>) -> Result<Seg6LocalSpec, ParseError> {
    c.keyword("action")?;
    let kt = c.expect("behavior")?;
    let kind: BehaviorKind = kt.text.parse().map_err(|e: String| syntax(kt, e))?;
    let mut spec = Seg6LocalSpec {
        kind,
        chain: None,
        oif: None,
        iif: None,
        nh6: None,
        age: None,
        segs: None,
        src: None,
        headers: None,
    };
    while let Some(t) = c.peek() {
        match t.text {
            "chain" => {
                c.next();
                let v = c.expect("chain direction")?;
                let chain = v.text.parse().map_err(|e: String| syntax(v, e))?;
                set_once(&mut spec.chain, chain, t)?;
            }
            "oif" => {
                c.next();
                set_once(&mut spec.oif, c.expect("interface")?.text.to_string(), t)?;
            }
            "iif" => {
                c.next();
                set_once(&mut spec.iif, c.expect("interface")?.text.to_string(), t)?;
            }
            "nh6" => {
                c.next();
                set_once(&mut spec.nh6, c.value("address")?, t)?;
            }
            "age" => {
                c.next();
                set_once(&mut spec.age, c.value("age")?, t)?;
            }
            "src" => {
                c.next();
                set_once(&mut spec.src, c.value("address")?, t)?;
            }
            "segs" => {
                c.next();
                let v = c.expect("segment list")?;
                let segs = v
                    .text
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<Ipv6Addr>, _>>()
                    .map_err(|_| syntax(v, format!("invalid segment list `{}`", v.text)))?;
                set_once(&mut spec.segs, segs, t)?;
            }
            "headers" => {
                c.next();
                let v = c.expect("hex headers")?;
                let h = hex::decode(v.text).map_err(|_| syntax(v, "invalid hex headers".into()))?;
                set_once(&mut spec.headers, h, t)?;
            }
            _ => break,
        }
    }
    if kind == BehaviorKind::EndAs && spec.segs.is_none() && spec.headers.is_none() {
        return Err(ParseError::MissingRequired("segs for End.AS".into()));
    }
    if kind != BehaviorKind::EndAs && (spec.segs.is_some() || spec.headers.is_some()) {
        return Err(ParseError::SyntaxError {
            column: c.end_column,
            message: format!("{kind} does not take a segment list"),
        });
    }
    if kind == BehaviorKind::EndAd && spec.chain.is_none() && spec.oif.is_none() {
        return Err(ParseError::MissingRequired("oif for End.AD".into()));
    }
    if spec.chain == Some(Chain::FromVnf) && spec.iif.is_none() {
        return Err(ParseError::MissingRequired("iif for chain fromVNF".into()));
    }
    Ok(spec)
}

fn parse_rule(c: &mut Cursor<'_>, adding: bool) -> Result<RuleSpec, ParseError> {
    let mut priority = None;
    let mut selector = None;
    let mut table = None;
    while let Some(t) = c.next() {
        match t.text {
            "pref" | "priority" | "preference" => set_once(&mut priority, c.value("priority")?, t)?,
            "from" => {
                let v = c.expect("source")?;
                if v.text != "all" {
                    return Err(syntax(v, "only `from all` is supported".into()));
                }
            }
            "iif" => set_once(&mut selector, RuleSelectorSpec::Iif(c.expect("interface")?.text.to_string()), t)?,
            "seg6local-behaviour" | "seg6local-behavior" => {
                let v = c.expect("behavior")?;
                let kind = v.text.parse().map_err(|e: String| syntax(v, e))?;
                set_once(&mut selector, RuleSelectorSpec::Seg6LocalBehaviour(kind), t)?;
            }
            "table" | "lookup" => set_once(&mut table, c.value::<TableId>("table")?, t)?,
            _ => return Err(unknown(t)),
        }
    }
    let selector = match selector {
        Some(s) => s,
        None if table.is_some() => RuleSelectorSpec::All,
        None if !adding && priority.is_some() => RuleSelectorSpec::All,
        None => return Err(ParseError::MissingRequired("rule selector".into())),
    };
    if adding && matches!(selector, RuleSelectorSpec::Iif(_)) && table.is_none() {
        return Err(ParseError::MissingRequired("table for iif rule".into()));
    }
    Ok(RuleSpec {
        priority,
        selector,
        table,
    })
}

fn parse_vnf(c: &mut Cursor<'_>) -> Result<ConfigCommand, ParseError> {
    let iface = c.expect("interface")?.text.to_string();
    let mut vnf = None;
    let mut sids = Vec::new();
    let mut routes = Vec::new();
    while let Some(t) = c.next() {
        match t.text {
            "sid" => sids.push(c.value("address")?),
            "type" => {
                let v = c.expect("VNF type")?;
                let ty = match v.text {
                    "passthrough" | "legacy" => VnfType::PassThrough,
                    "end" | "End" => VnfType::End,
                    _ => return Err(syntax(v, format!("unknown VNF type `{}`", v.text))),
                };
                set_once(&mut vnf, ty, t)?;
            }
            "route" => {
                let v = c.expect("prefix")?;
                routes.push(v.text.parse().map_err(|_| syntax(v, format!("invalid prefix `{}`", v.text)))?);
            }
            _ => return Err(unknown(t)),
        }
    }
    let vnf = vnf.unwrap_or(VnfType::PassThrough);
    if vnf == VnfType::End && sids.is_empty() {
        return Err(ParseError::MissingRequired("sid for an End VNF".into()));
    }
    Ok(ConfigCommand::VnfBind { iface, vnf, sids, routes })
}

/// A command together with the (first) script line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptLine {
    pub line: usize,
    pub command: ConfigCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {error}")]
pub struct ScriptParseError {
    pub line: usize,
    pub error: ParseError,
}

/// Splits a script into commands, joining `\` continuations.
pub fn parse_script(script: &str) -> Result<Vec<ScriptLine>, ScriptParseError> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut start = 0;
    for (i, raw) in script.lines().enumerate() {
        if pending.is_empty() {
            start = i + 1;
        }
        let trimmed = raw.trim_end();
        if let Some(head) = trimmed.strip_suffix('\\') {
            pending.push_str(head);
            pending.push(' ');
            continue;
        }
        pending.push_str(trimmed);
        let line = std::mem::take(&mut pending);
        if let Some(command) = parse_command(&line).map_err(|error| ScriptParseError { line: start, error })? {
            out.push(ScriptLine { line: start, command });
        }
    }
    if !pending.trim().is_empty() {
        if let Some(command) = parse_command(&pending).map_err(|error| ScriptParseError { line: start, error })? {
            out.push(ScriptLine { line: start, command });
        }
    }
    Ok(out)
}
