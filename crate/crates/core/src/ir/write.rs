use std::fmt::Write as _;

use super::{AnnotatedProgram, Contract, Statement};

/// Renders a program in the `.apg` format. `parse_program` of the result is
/// structurally equal to `prog`.
pub fn serialize_program(prog: &AnnotatedProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {} main {}", prog.name, prog.main);
    for g in &prog.globals {
        let _ = writeln!(out, "global {} : {}", g.name, g.domain);
    }
    let _ = writeln!(out, "init {}", prog.init_globals);
    for p in prog.procedures.values() {
        out.push('\n');
        let _ = writeln!(out, "procedure {} entry {}", p.name, p.entry_block);
        for l in &p.locals {
            let init = p
                .init_locals
                .get(&l.name)
                .copied()
                .unwrap_or_else(|| l.domain.default_value());
            let _ = writeln!(out, "  local {} : {} = {}", l.name, l.domain, init);
        }
        for b in p.blocks.values() {
            let _ = write!(out, "  block {}", b.id);
            if let Contract::Spec {
                requires,
                ensures,
                assigns,
            } = &b.contract
            {
                let _ = write!(out, " contract requires {requires} ensures {ensures}");
                if !assigns.is_empty() {
                    let _ = write!(out, " assigns {}", assigns.join(", "));
                }
            }
            out.push('\n');
            for (id, stmt) in &b.points {
                let s = match stmt {
                    Statement::Assign { target, expr } => format!("{target} := {expr}"),
                    Statement::Jump(b) => format!("jump {b}"),
                    Statement::Call(p) => format!("call {p}"),
                    Statement::Return => "return".into(),
                    Statement::Skip => "skip".into(),
                };
                let _ = writeln!(out, "    point {id} : {s}");
            }
            for e in &b.edges {
                let _ = write!(out, "    edge {} -> {}", e.from, e.to);
                if let Some(g) = &e.guard {
                    let _ = write!(out, " when {g}");
                }
                out.push('\n');
            }
            let _ = writeln!(out, "    entry {}", b.entry);
            let _ = writeln!(out, "    exit {}", b.exit);
        }
    }
    out
}
