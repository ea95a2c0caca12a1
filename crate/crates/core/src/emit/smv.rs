use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::expr::Expr;
use crate::sts::{StackOp, Sts};
use crate::value::{Domain, Value};

use super::{header, identifiers, print_expr, EmitError, EmitterOptions, Syntax};

const RESERVED: &[&str] = &[
    "MODULE", "DEFINE", "MDEFINE", "CONSTANTS", "VAR", "IVAR", "FROZENVAR", "INIT", "TRANS",
    "INVAR", "SPEC", "CTLSPEC", "LTLSPEC", "PSLSPEC", "COMPUTE", "NAME", "INVARSPEC", "FAIRNESS",
    "JUSTICE", "COMPASSION", "ISA", "ASSIGN", "CONSTRAINT", "SIMPWFF", "CTLWFF", "LTLWFF",
    "PSLWFF", "COMPWFF", "IN", "MIN", "MAX", "MIRROR", "PRED", "PREDICATES", "process", "array",
    "of", "boolean", "integer", "real", "word", "word1", "bool", "signed", "unsigned", "extend",
    "resize", "sizeof", "uwconst", "swconst", "EX", "AX", "EF", "AF", "EG", "AG", "E", "F", "O",
    "G", "H", "X", "Y", "Z", "A", "U", "S", "V", "T", "BU", "EBF", "ABF", "EBG", "ABG", "case",
    "esac", "mod", "next", "init", "union", "in", "xor", "xnor", "self", "TRUE", "FALSE", "count",
    "abs", "max", "min", "toint", "floor", "typeof", "main", "sp", "none", "stack_keep",
    "top_node", "stk_node", "n",
];

fn type_of(d: Domain) -> String {
    match d {
        Domain::Bool => "boolean".into(),
        Domain::Range(lo, hi) => format!("{lo}..{hi}"),
        Domain::Int => "integer".into(),
    }
}

fn syntax() -> Syntax {
    Syntax {
        and: "&",
        or: "|",
        not: "!",
        implies: "->",
        eq: "=",
        ne: "!=",
        tru: "TRUE",
        fals: "FALSE",
        div: |a, b| format!("{a} / {b}"),
        rem: |a, b| format!("{a} mod {b}"),
        primed: |x| format!("next({x})"),
        member: |x, d| match d {
            Domain::Bool => format!("{x} in {{TRUE, FALSE}}"),
            Domain::Range(lo, hi) => format!("{x} >= {lo} & {x} <= {hi}"),
            Domain::Int => "TRUE".into(),
        },
    }
}

fn literal(v: Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Bool(true) => "TRUE".into(),
        Value::Bool(false) => "FALSE".into(),
    }
}

fn push_macro(ret: &str) -> String {
    format!("push_{ret}")
}

fn pop_macro(site: &str) -> String {
    format!("pop_{site}")
}

/// Returns the nuXmv model. The stack is a node array and one array per
/// saved local, all of `stack_capacity` slots, plus the depth `sp`; slots
/// above `sp` hold `none` and initial values so equal stacks print equal.
pub fn emit_nuxmv(sts: &Sts, opts: &EmitterOptions) -> Result<String, EmitError> {
    opts.check_module_name(RESERVED)?;
    let cap = opts.stack_capacity;
    let has_push = sts.actions.iter().any(|a| a.is_push());
    match sts.max_call_depth() {
        Some(needed) if needed > cap => return Err(EmitError::CapacityTooSmall { needed, capacity: cap }),
        None if cap == 0 && has_push => {
            return Err(EmitError::CapacityTooSmall { needed: 1, capacity: 0 })
        }
        _ => {}
    }
    let init: BTreeMap<&str, Value> = sts.init_locals.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    // Locals some push saves, in variable order.
    let saved: Vec<&str> = {
        let mut all: Vec<&str> = sts
            .actions
            .iter()
            .filter_map(|a| match &a.stack {
                StackOp::Push { saved, .. } => Some(saved.iter().map(String::as_str)),
                _ => None,
            })
            .flatten()
            .collect();
        all.sort_by_key(|v| sts.variables.iter().position(|w| w.name == *v));
        all.dedup();
        all
    };

    let mut reserved: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    reserved.extend(sts.nodes.keys().cloned());
    for v in &saved {
        reserved.push(format!("stk_{v}"));
        reserved.push(format!("top_{v}"));
    }
    for a in &sts.actions {
        match &a.stack {
            StackOp::Push { ret, .. } => reserved.push(push_macro(ret)),
            StackOp::Pop { site, .. } => reserved.push(pop_macro(site)),
            StackOp::Keep => {}
        }
    }
    let reserved: Vec<&str> = reserved.iter().map(String::as_str).collect();
    let ids = identifiers(sts.scalars().map(|v| v.name.as_str()), &reserved);
    let syn = syntax();
    let p = |e: &Expr| print_expr(e, &syn, &ids);
    let stacked = cap > 0 && has_push;

    let mut t = header("--", &opts.source_digest);
    let _ = writeln!(t, "-- model {}", opts.module_name);
    t.push_str("MODULE main\n");
    t.push_str("VAR\n");
    let nodes: Vec<&str> = sts.nodes.keys().map(String::as_str).collect();
    let _ = writeln!(t, "  n : {{{}}};", nodes.join(", "));
    let _ = writeln!(t, "  sp : 0..{cap};");
    if stacked {
        let _ = writeln!(t, "  stk_node : array 0..{} of {{none, {}}};", cap - 1, nodes.join(", "));
        for v in &saved {
            let d = sts.domain_of(v).expect("saved locals are variables");
            let _ = writeln!(t, "  stk_{v} : array 0..{} of {};", cap - 1, type_of(d));
        }
    }
    for v in sts.scalars() {
        let _ = writeln!(t, "  {} : {};", ids[&v.name], type_of(v.domain.expect("scalar")));
    }

    t.push_str("DEFINE\n");
    let slots = if stacked { cap } else { 0 };
    if stacked {
        let mut top = |name: &str, arr: &str, default: &str| {
            let _ = write!(t, "  {name} := case");
            for j in 0..slots {
                let _ = write!(t, " sp = {} : {arr}[{j}];", j + 1);
            }
            let _ = writeln!(t, " TRUE : {default}; esac;");
        };
        top("top_node", "stk_node", "none");
        for v in &saved {
            top(&format!("top_{v}"), &format!("stk_{v}"), &literal(init[v]));
        }
    }
    let arrays: Vec<String> = if stacked {
        std::iter::once("stk_node".to_string())
            .chain(saved.iter().map(|v| format!("stk_{v}")))
            .collect()
    } else {
        Vec::new()
    };
    let mut keep = vec!["next(sp) = sp".to_string()];
    for arr in &arrays {
        for j in 0..slots {
            keep.push(format!("next({arr}[{j}]) = {arr}[{j}]"));
        }
    }
    let _ = writeln!(t, "  stack_keep := {};", keep.join(" & "));

    let mut emitted = std::collections::BTreeSet::new();
    for a in &sts.actions {
        match &a.stack {
            StackOp::Push { ret, saved: vals } if emitted.insert(push_macro(ret)) => {
                let mut parts = vec![format!("sp < {cap}"), "next(sp) = sp + 1".to_string()];
                for arr in &arrays {
                    let src = if arr == "stk_node" {
                        Some(ret.clone())
                    } else {
                        vals.iter()
                            .find(|v| format!("stk_{v}") == *arr)
                            .map(|v| ids[v].clone())
                    };
                    for j in 0..slots {
                        parts.push(match &src {
                            Some(x) => format!(
                                "next({arr}[{j}]) = case sp = {j} : {x}; TRUE : {arr}[{j}]; esac"
                            ),
                            None => format!("next({arr}[{j}]) = {arr}[{j}]"),
                        });
                    }
                }
                let _ = writeln!(t, "  {} := {};", push_macro(ret), parts.join(" & "));
            }
            StackOp::Pop { site, restore } if emitted.insert(pop_macro(site)) => {
                let mut parts = vec![
                    "sp > 0".to_string(),
                    format!("top_node = {site}"),
                    "next(sp) = sp - 1".to_string(),
                ];
                for arr in &arrays {
                    let default = if arr == "stk_node" {
                        "none".to_string()
                    } else {
                        literal(init[&arr["stk_".len()..]])
                    };
                    for j in 0..slots {
                        parts.push(format!(
                            "next({arr}[{j}]) = case sp = {} : {default}; TRUE : {arr}[{j}]; esac",
                            j + 1
                        ));
                    }
                }
                for r in restore {
                    parts.push(format!("next({}) = top_{r}", ids[r]));
                }
                let _ = writeln!(t, "  {} := {};", pop_macro(site), parts.join(" & "));
            }
            _ => {}
        }
    }

    for a in &sts.actions {
        let mut lines = Vec::new();
        if let Some(src) = &a.source {
            lines.push(format!("n = {src}"));
        }
        lines.extend(a.guards.iter().map(p));
        lines.push(format!("next(n) = {}", a.target));
        lines.push(match &a.stack {
            StackOp::Keep => "stack_keep".to_string(),
            StackOp::Push { ret, .. } => push_macro(ret),
            StackOp::Pop { site, .. } => pop_macro(site),
        });
        lines.extend(a.body.iter().map(p));
        let _ = writeln!(t, "  {} :=", a.name);
        for (i, l) in lines.iter().enumerate() {
            let sep = if i == 0 { "  " } else { "& " };
            let end = if i + 1 == lines.len() { ";" } else { "" };
            let _ = writeln!(t, "    {sep}{l}{end}");
        }
    }

    t.push_str("INIT\n");
    let mut init_lines = vec![format!("n = {}", sts.init_node), "sp = 0".to_string()];
    for arr in &arrays {
        let default = if arr == "stk_node" {
            "none".to_string()
        } else {
            literal(init[&arr["stk_".len()..]])
        };
        for j in 0..slots {
            init_lines.push(format!("{arr}[{j}] = {default}"));
        }
    }
    for c in sts.init_globals.conjuncts() {
        if *c != Expr::Bool(true) {
            init_lines.push(p(c));
        }
    }
    for (name, v) in &sts.init_locals {
        init_lines.push(format!("{} = {}", ids[name], literal(*v)));
    }
    write_disjunction(&mut t, &init_lines, "&");

    t.push_str("TRANS\n");
    let names: Vec<String> = sts.actions.iter().map(|a| a.name.clone()).collect();
    if names.is_empty() {
        t.push_str("  FALSE;\n");
    } else {
        write_disjunction(&mut t, &names, "|");
    }
    Ok(t)
}

fn write_disjunction(t: &mut String, items: &[String], op: &str) {
    for (i, l) in items.iter().enumerate() {
        let sep = if i == 0 { "  ".to_string() } else { format!("{op} ") };
        let end = if i + 1 == items.len() { ";" } else { "" };
        let _ = writeln!(t, "  {sep}{l}{end}");
    }
}
