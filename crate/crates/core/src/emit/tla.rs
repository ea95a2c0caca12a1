use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::expr::Expr;
use crate::sts::{StackOp, Sts, StsAction};
use crate::value::Domain;

use super::{header, identifiers, print_expr, uses_division, EmitError, EmitterOptions, Syntax};

const RESERVED: &[&str] = &[
    "ASSUME", "ASSUMPTION", "AXIOM", "CASE", "CHOOSE", "CONSTANT", "CONSTANTS", "DOMAIN", "ELSE",
    "ENABLED", "EXCEPT", "EXTENDS", "IF", "IN", "INSTANCE", "LET", "LOCAL", "MODULE", "OTHER",
    "SUBSET", "THEN", "THEOREM", "UNCHANGED", "UNION", "VARIABLE", "VARIABLES", "WITH", "BOOLEAN",
    "TRUE", "FALSE", "STRING", "Nat", "Int", "Len", "Head", "Tail", "Seq", "Append", "SubSeq",
    "SelectSeq", "Integers", "Sequences", "Naturals", "vars", "Nodes", "Push", "Pop", "Top",
    "TypeOK", "Init", "Next", "Spec", "StackCapacity", "CDiv", "CMod", "Abs", "n", "st",
];

fn set_of(d: Domain) -> String {
    match d {
        Domain::Bool => "BOOLEAN".into(),
        Domain::Range(lo, hi) => format!("{lo}..{hi}"),
        Domain::Int => "Int".into(),
    }
}

fn syntax() -> Syntax {
    Syntax {
        and: "/\\",
        or: "\\/",
        not: "~",
        implies: "=>",
        eq: "=",
        ne: "#",
        tru: "TRUE",
        fals: "FALSE",
        div: |a, b| format!("CDiv({a}, {b})"),
        rem: |a, b| format!("CMod({a}, {b})"),
        primed: |x| format!("{x}'"),
        member: |x, d| format!("{x} \\in {}", set_of(d)),
    }
}

fn quote(node: &str) -> String {
    format!("\"{node}\"")
}

/// Orders conjuncts so TLC meets every `x' = e` that determines `x'` before
/// any conjunct reading `x'`. When no conjunct is ready, the first
/// undetermined variable is drawn from its domain, which the typing
/// already implies.
fn tlc_order(
    body: &[Expr],
    assigned: &mut BTreeSet<String>,
    domains: &BTreeMap<String, Domain>,
) -> Vec<Expr> {
    let mut rest: Vec<Expr> = body.to_vec();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let ready = rest.iter().position(|c| {
            let mut primed = c.primed_vars();
            if let Some((x, rhs)) = c.as_definition() {
                if !assigned.contains(x) {
                    primed = rhs.primed_vars();
                }
            }
            primed.iter().all(|v| assigned.contains(v))
        });
        match ready {
            Some(i) => {
                let c = rest.remove(i);
                if let Some((x, _)) = c.as_definition() {
                    assigned.insert(x.to_string());
                }
                out.push(c);
            }
            None => {
                let x = rest
                    .iter()
                    .flat_map(|c| c.primed_vars())
                    .filter(|v| !assigned.contains(v))
                    .min()
                    .expect("a stuck conjunct has an undetermined primed variable");
                out.push(Expr::eq(Expr::primed(x.clone()), Expr::Any(domains[&x])));
                assigned.insert(x);
            }
        }
    }
    out
}

fn pin_var(c: &Expr) -> Option<&str> {
    match c.as_definition() {
        Some((x, Expr::Var { name, primed: false })) if name == x => Some(x),
        _ => None,
    }
}

/// Returns the module text and the TLC configuration.
pub fn emit_tla(sts: &Sts, opts: &EmitterOptions) -> Result<(String, String), EmitError> {
    opts.check_module_name(RESERVED)?;
    let domains: BTreeMap<String, Domain> = sts
        .scalars()
        .map(|v| (v.name.clone(), v.domain.expect("scalars have domains")))
        .collect();
    if let Some(v) = sts.scalars().find(|v| !v.domain.is_some_and(|d| d.is_finite())) {
        return Err(EmitError::UnboundedDomain(v.name.clone()));
    }
    let ids = identifiers(sts.scalars().map(|v| v.name.as_str()), RESERVED);
    let syn = syntax();
    let p = |e: &Expr| print_expr(e, &syn, &ids);
    let id = |n: &str| ids[n].clone();

    let mut t = header("\\*", &opts.source_digest);
    let _ = writeln!(t, "---- MODULE {} ----", opts.module_name);
    t.push_str("EXTENDS Integers, Sequences\n\n");
    t.push_str("CONSTANT StackCapacity\n\n");
    let all: Vec<String> = ["n".to_string(), "st".to_string()]
        .into_iter()
        .chain(sts.scalars().map(|v| id(&v.name)))
        .collect();
    let _ = writeln!(t, "VARIABLES {}\n", all.join(", "));
    let _ = writeln!(t, "vars == <<{}>>\n", all.join(", "));
    let nodes: Vec<String> = sts.nodes.keys().map(|n| quote(n)).collect();
    let _ = writeln!(t, "Nodes == {{{}}}\n", nodes.join(", "));
    t.push_str("Push(e, s) == <<e>> \\o s\n");
    t.push_str("Pop(s) == Tail(s)\n");
    t.push_str("Top(s) == Head(s)\n\n");
    if uses_division(sts) {
        t.push_str("Abs(x) == IF x < 0 THEN -x ELSE x\n");
        t.push_str("CDiv(a, b) == IF (a < 0) = (b < 0) THEN Abs(a) \\div Abs(b) ELSE -(Abs(a) \\div Abs(b))\n");
        t.push_str("CMod(a, b) == a - b * CDiv(a, b)\n\n");
    }

    t.push_str("TypeOK ==\n");
    t.push_str("    /\\ n \\in Nodes\n");
    t.push_str("    /\\ Len(st) <= StackCapacity\n");
    t.push_str("    /\\ \\A i \\in 1..Len(st) : st[i][1] \\in Nodes\n");
    for v in sts.scalars() {
        let _ = writeln!(t, "    /\\ {} \\in {}", id(&v.name), set_of(v.domain.expect("scalar")));
    }
    t.push('\n');

    t.push_str("Init ==\n");
    let _ = writeln!(t, "    /\\ n = {}", quote(&sts.init_node));
    t.push_str("    /\\ st = <<>>\n");
    for v in sts.scalars().filter(|v| v.owner.is_none()) {
        let _ = writeln!(t, "    /\\ {} \\in {}", id(&v.name), set_of(v.domain.expect("scalar")));
    }
    for c in sts.init_globals.conjuncts() {
        if *c != Expr::Bool(true) {
            let _ = writeln!(t, "    /\\ {}", p(c));
        }
    }
    for (name, v) in &sts.init_locals {
        let lit = match v {
            crate::value::Value::Int(i) => i.to_string(),
            crate::value::Value::Bool(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
        };
        let _ = writeln!(t, "    /\\ {} = {lit}", id(name));
    }
    t.push('\n');

    for a in &sts.actions {
        write_action(&mut t, sts, a, &domains, &ids, &syn);
    }

    t.push_str("Next ==\n");
    for a in &sts.actions {
        let _ = writeln!(t, "    \\/ {}", a.name);
    }
    t.push('\n');
    t.push_str("Spec == Init /\\ [][Next]_vars\n\n");
    t.push_str("====\n");

    let mut cfg = header("\\*", &opts.source_digest);
    cfg.push_str("SPECIFICATION Spec\n");
    let _ = writeln!(cfg, "CONSTANT StackCapacity = {}", opts.stack_capacity);
    cfg.push_str("INVARIANT TypeOK\n");
    Ok((t, cfg))
}

fn write_action(
    t: &mut String,
    sts: &Sts,
    a: &StsAction,
    domains: &BTreeMap<String, Domain>,
    ids: &BTreeMap<String, String>,
    syn: &Syntax,
) {
    let p = |e: &Expr| print_expr(e, syn, ids);
    let mut lines: Vec<String> = Vec::new();
    if let Some(src) = &a.source {
        lines.push(format!("n = {}", quote(src)));
    }
    lines.extend(a.guards.iter().map(p));
    let mut assigned = BTreeSet::new();
    match &a.stack {
        StackOp::Keep => {
            lines.push(format!("n' = {}", quote(&a.target)));
            lines.push("st' = st".into());
        }
        StackOp::Push { ret, saved } => {
            lines.push("Len(st) < StackCapacity".into());
            lines.push(format!("n' = {}", quote(&a.target)));
            let saved: Vec<String> = saved.iter().map(|s| ids[s].clone()).collect();
            lines.push(format!("st' = Push(<<{}, <<{}>>>>, st)", quote(ret), saved.join(", ")));
        }
        StackOp::Pop { site, restore } => {
            lines.push("st # <<>>".into());
            lines.push(format!("Top(st)[1] = {}", quote(site)));
            lines.push(format!("n' = {}", quote(&a.target)));
            lines.push("st' = Pop(st)".into());
            for (i, r) in restore.iter().enumerate() {
                lines.push(format!("{}' = Top(st)[2][{}]", ids[r], i + 1));
                assigned.insert(r.clone());
            }
        }
    }
    let pins: Vec<&str> = a.body.iter().filter_map(pin_var).collect();
    if !pins.is_empty() {
        let names: Vec<String> = pins.iter().map(|x| ids[*x].clone()).collect();
        lines.push(format!("UNCHANGED <<{}>>", names.join(", ")));
        assigned.extend(pins.iter().map(|x| x.to_string()));
    }
    let rest: Vec<Expr> = a.body.iter().filter(|c| pin_var(c).is_none()).cloned().collect();
    let mut ordered = tlc_order(&rest, &mut assigned, domains);
    for v in sts.scalars() {
        if !assigned.contains(&v.name) {
            ordered.push(Expr::eq(Expr::primed(v.name.clone()), Expr::Any(domains[&v.name])));
        }
    }
    lines.extend(ordered.iter().map(p));
    let _ = writeln!(t, "{} ==", a.name);
    for l in lines {
        let _ = writeln!(t, "    /\\ {l}");
    }
    t.push('\n');
}
