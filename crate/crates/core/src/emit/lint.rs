//! Lightweight readers for the emitted texts: a structural scanner that
//! recovers each action's shape, and a smoke check for delimiters,
//! declarations and the priming discipline of each backend.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StackEffect {
    Keep,
    Push(String),
    Pop(String),
}

impl fmt::Display for StackEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackEffect::Keep => f.write_str("keep"),
            StackEffect::Push(n) => write!(f, "push {n}"),
            StackEffect::Pop(n) => write!(f, "pop {n}"),
        }
    }
}

/// Name, source node, target node and stack effect of an action as read
/// back from emitted text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionShape {
    pub name: String,
    pub source: Option<String>,
    pub target: String,
    pub stack: StackEffect,
}

/// Lines following `start` that satisfy `keep`, stopping at the first
/// that does not.
fn section<'a>(lines: &[&'a str], start: usize, keep: impl Fn(&str) -> bool) -> Vec<&'a str> {
    lines[start + 1..].iter().take_while(|l| keep(l)).copied().collect()
}

pub fn scan_tla(text: &str) -> Result<Vec<ActionShape>, String> {
    let lines: Vec<&str> = text.lines().collect();
    let next = lines
        .iter()
        .position(|l| *l == "Next ==")
        .ok_or("no `Next ==` definition")?;
    let names: Vec<&str> = section(&lines, next, |l| l.starts_with("    \\/ "))
        .iter()
        .map(|l| l.trim_start_matches("    \\/ "))
        .collect();
    let mut out = Vec::new();
    for name in names {
        let head = format!("{name} ==");
        let start = lines
            .iter()
            .position(|l| *l == head)
            .ok_or_else(|| format!("no definition of `{name}`"))?;
        let body: Vec<&str> = section(&lines, start, |l| l.starts_with("    /\\ "))
            .iter()
            .map(|l| l.trim_start_matches("    /\\ "))
            .collect();
        let quoted = |l: &str, prefix: &str| {
            l.strip_prefix(prefix)
                .map(|r| r.trim_matches('"').to_string())
        };
        let source = body.iter().find_map(|l| quoted(l, "n = "));
        let target = body
            .iter()
            .find_map(|l| quoted(l, "n' = "))
            .ok_or_else(|| format!("`{name}` does not set n'"))?;
        let stack = if body.contains(&"st' = st") {
            StackEffect::Keep
        } else if let Some(rest) = body.iter().find_map(|l| l.strip_prefix("st' = Push(<<\"")) {
            StackEffect::Push(rest.split('"').next().unwrap_or_default().to_string())
        } else if body.contains(&"st' = Pop(st)") {
            let site = body
                .iter()
                .find_map(|l| quoted(l, "Top(st)[1] = "))
                .ok_or_else(|| format!("`{name}` pops without a site test"))?;
            StackEffect::Pop(site)
        } else {
            return Err(format!("`{name}` has no stack update"));
        };
        out.push(ActionShape {
            name: name.to_string(),
            source,
            target,
            stack,
        });
    }
    Ok(out)
}

pub fn scan_smv(text: &str) -> Result<Vec<ActionShape>, String> {
    let lines: Vec<&str> = text.lines().collect();
    let trans = lines
        .iter()
        .position(|l| *l == "TRANS")
        .ok_or("no TRANS section")?;
    let names: Vec<String> = section(&lines, trans, |l| l.starts_with("  "))
        .iter()
        .map(|l| {
            l.trim()
                .trim_start_matches("| ")
                .trim_end_matches(';')
                .to_string()
        })
        .filter(|n| n != "FALSE")
        .collect();
    let mut out = Vec::new();
    for name in names {
        let head = format!("  {name} :=");
        let start = lines
            .iter()
            .position(|l| *l == head)
            .ok_or_else(|| format!("no define for `{name}`"))?;
        let mut body = Vec::new();
        for l in &lines[start + 1..] {
            let t = l.trim().trim_start_matches("& ");
            body.push(t.trim_end_matches(';'));
            if t.ends_with(';') {
                break;
            }
        }
        let source = body.iter().find_map(|l| l.strip_prefix("n = ")).map(str::to_string);
        let target = body
            .iter()
            .find_map(|l| l.strip_prefix("next(n) = "))
            .ok_or_else(|| format!("`{name}` does not set next(n)"))?
            .to_string();
        let stack = if body.contains(&"stack_keep") {
            StackEffect::Keep
        } else if let Some(r) = body.iter().find_map(|l| l.strip_prefix("push_")) {
            StackEffect::Push(r.to_string())
        } else if let Some(s) = body.iter().find_map(|l| l.strip_prefix("pop_")) {
            StackEffect::Pop(s.to_string())
        } else {
            return Err(format!("`{name}` has no stack update"));
        };
        out.push(ActionShape {
            name,
            source,
            target,
            stack,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num,
    Str,
    Punct(String),
}

/// Splits one line into tokens. `ops` lists multi-character operators,
/// longest first.
fn tokenize(line: &str, ops: &[&str]) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Num);
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i == chars.len() {
                return Err("unterminated string".into());
            }
            i += 1;
            out.push(Tok::Str);
        } else {
            let rest: String = chars[i..].iter().collect();
            let op = ops
                .iter()
                .find(|o| rest.starts_with(**o))
                .map(|o| o.to_string())
                .unwrap_or_else(|| c.to_string());
            i += op.chars().count();
            out.push(Tok::Punct(op));
        }
    }
    Ok(out)
}

fn check_balance(tokens: &[(usize, Tok)], pairs: &[(&str, &str)], out: &mut Vec<String>) {
    let mut stack: Vec<(&str, usize)> = Vec::new();
    for (line, t) in tokens {
        let s = match t {
            Tok::Punct(p) => p.as_str(),
            Tok::Ident(i) if pairs.iter().any(|(a, b)| a == i || b == i) => i.as_str(),
            _ => continue,
        };
        if let Some((open, _)) = pairs.iter().find(|(o, _)| *o == s) {
            stack.push((open, *line));
        } else if let Some((open, _)) = pairs.iter().find(|(_, c)| *c == s) {
            match stack.pop() {
                Some((o, _)) if o == *open => {}
                _ => out.push(format!("line {line}: unbalanced `{s}`")),
            }
        }
    }
    for (o, line) in stack {
        out.push(format!("line {line}: unclosed `{o}`"));
    }
}

const TLA_OPS: &[&str] = &[
    "<<", ">>", "<=", ">=", "=>", "==", "/\\", "\\/", "\\in", "\\o", "\\A", "\\E", "\\div", "..",
];

const TLA_BUILTINS: &[&str] = &[
    "MODULE", "EXTENDS", "Integers", "Sequences", "CONSTANT", "VARIABLES", "TRUE", "FALSE",
    "BOOLEAN", "Int", "Len", "Head", "Tail", "UNCHANGED", "IF", "THEN", "ELSE",
];

/// Checks delimiters, that every identifier is a builtin, a declared
/// variable or constant, an earlier definition or a bound name, and that
/// primes only follow variables and never occur in `Init` or `TypeOK`.
pub fn lint_tla(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut tokens = Vec::new();
    let mut declared: BTreeSet<String> = TLA_BUILTINS.iter().map(|s| s.to_string()).collect();
    let mut variables = BTreeSet::new();
    let mut local: BTreeSet<String> = BTreeSet::new();
    let mut current = String::new();
    let mut pending: Option<String> = None;
    let mut saw_end = false;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split("\\*").next().unwrap_or_default();
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("----") {
            if !line.contains(" MODULE ") {
                out.push(format!("line {line_no}: malformed module header"));
            }
            continue;
        }
        if line.starts_with("====") {
            saw_end = true;
            continue;
        }
        let toks = match tokenize(line, TLA_OPS) {
            Ok(t) => t,
            Err(e) => {
                out.push(format!("line {line_no}: {e}"));
                continue;
            }
        };
        let top_level = !line.starts_with(' ');
        if top_level {
            if let Some(name) = pending.take() {
                declared.insert(name);
            }
            local.clear();
            let is_def = toks.iter().any(|t| *t == Tok::Punct("==".into()));
            if let (true, Some(Tok::Ident(name))) = (is_def, toks.first()) {
                current = name.clone();
                pending = Some(name.clone());
                // Parameters sit between the name and `==`.
                for t in toks.iter().skip(1) {
                    match t {
                        Tok::Ident(p) => {
                            local.insert(p.clone());
                        }
                        Tok::Punct(p) if p == "==" => break,
                        _ => {}
                    }
                }
            }
            if let Some(Tok::Ident(kw)) = toks.first() {
                if kw == "VARIABLES" || kw == "CONSTANT" {
                    for t in &toks[1..] {
                        if let Tok::Ident(v) = t {
                            declared.insert(v.clone());
                            if kw == "VARIABLES" {
                                variables.insert(v.clone());
                            }
                        }
                    }
                    continue;
                }
            }
        }
        let mut prev: Option<&Tok> = None;
        for t in &toks {
            match t {
                Tok::Ident(name) => {
                    if matches!(prev, Some(Tok::Punct(p)) if p == "\\A" || p == "\\E") {
                        local.insert(name.clone());
                    } else if !declared.contains(name)
                        && !local.contains(name)
                        && pending.as_deref() != Some(name.as_str())
                    {
                        out.push(format!("line {line_no}: undeclared `{name}`"));
                    }
                }
                Tok::Punct(p) if p == "'" => {
                    if current == "Init" || current == "TypeOK" {
                        out.push(format!("line {line_no}: prime inside {current}"));
                    }
                    match prev {
                        Some(Tok::Ident(v)) if variables.contains(v) => {}
                        _ => out.push(format!("line {line_no}: prime on a non-variable")),
                    }
                }
                _ => {}
            }
            prev = Some(t);
        }
        tokens.extend(toks.into_iter().map(|t| (line_no, t)));
    }
    check_balance(&tokens, &[("(", ")"), ("[", "]"), ("{", "}"), ("<<", ">>")], &mut out);
    if !saw_end {
        out.push("missing `====` module end".into());
    }
    out
}

const SMV_OPS: &[&str] = &[":=", "!=", "<=", ">=", "->", ".."];

const SMV_BUILTINS: &[&str] = &[
    "MODULE", "main", "VAR", "DEFINE", "INIT", "TRANS", "TRUE", "FALSE", "boolean", "integer",
    "array", "of", "case", "esac", "next", "in", "mod", "none",
];

/// Checks delimiters and `case`/`esac` nesting, that identifiers are
/// declared somewhere (defines may be used before they appear), that
/// `next` applies only to variables and stays out of INIT, and that no
/// TLA-style primes slipped through.
pub fn lint_smv(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut declared: BTreeSet<String> = SMV_BUILTINS.iter().map(|s| s.to_string()).collect();
    let mut variables = BTreeSet::new();
    let mut lines = Vec::new();
    let mut section = "";
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split("--").next().unwrap_or_default();
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            section = match line.trim() {
                "VAR" => "VAR",
                "DEFINE" => "DEFINE",
                "INIT" => "INIT",
                "TRANS" => "TRANS",
                l if l.starts_with("MODULE ") => "MODULE",
                other => {
                    out.push(format!("line {line_no}: unexpected `{other}`"));
                    ""
                }
            };
            continue;
        }
        let toks = match tokenize(line, SMV_OPS) {
            Ok(t) => t,
            Err(e) => {
                out.push(format!("line {line_no}: {e}"));
                continue;
            }
        };
        match (section, toks.first(), toks.get(1)) {
            ("VAR", Some(Tok::Ident(v)), Some(Tok::Punct(p))) if p == ":" => {
                declared.insert(v.clone());
                variables.insert(v.clone());
                let mut in_enum = false;
                for t in &toks[2..] {
                    match t {
                        Tok::Punct(p) if p == "{" => in_enum = true,
                        Tok::Punct(p) if p == "}" => in_enum = false,
                        Tok::Ident(c) if in_enum => {
                            declared.insert(c.clone());
                        }
                        _ => {}
                    }
                }
            }
            ("DEFINE", Some(Tok::Ident(v)), Some(Tok::Punct(p))) if p == ":=" => {
                declared.insert(v.clone());
            }
            _ => {}
        }
        lines.push((line_no, section, toks));
    }
    let mut all = Vec::new();
    for (line_no, section, toks) in &lines {
        for (i, t) in toks.iter().enumerate() {
            match t {
                Tok::Ident(name) if !declared.contains(name) => {
                    out.push(format!("line {line_no}: undeclared `{name}`"));
                }
                Tok::Ident(name) if name == "next" => {
                    if *section == "INIT" || *section == "VAR" {
                        out.push(format!("line {line_no}: next() in {section}"));
                    }
                    match (toks.get(i + 1), toks.get(i + 2)) {
                        (Some(Tok::Punct(p)), Some(Tok::Ident(v))) if p == "(" && variables.contains(v) => {}
                        _ => out.push(format!("line {line_no}: next() of a non-variable")),
                    }
                }
                Tok::Punct(p) if p == "'" => out.push(format!("line {line_no}: prime in nuXmv text")),
                _ => {}
            }
            all.push((*line_no, t.clone()));
        }
    }
    check_balance(&all, &[("(", ")"), ("[", "]"), ("{", "}"), ("case", "esac")], &mut out);
    out
}
