use std::fmt::Write as _;

use crate::flow::{EdgeLabel, FlowGraph};

use super::header;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One cluster per procedure. Entry nodes are bold, return nodes have a
/// double border, and call edges carry the callee's name.
pub fn emit_dot(fg: &FlowGraph, source_digest: &str) -> String {
    let mut t = header("//", source_digest);
    let _ = writeln!(t, "digraph \"{}\" {{", escape(&fg.name));
    if !fg.procedures.is_empty() {
        t.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    }
    for p in fg.procedures.values() {
        let _ = writeln!(t, "  subgraph \"cluster_{}\" {{", escape(&p.name));
        let _ = writeln!(t, "    label=\"{}\";", escape(&p.name));
        for (id, node) in &p.nodes {
            let mut attrs = vec![format!(
                "label=\"{}: {}\"",
                p.short_name(id),
                escape(&node.label.describe())
            )];
            if *id == p.entry {
                attrs.push("style=bold".into());
            }
            if *id == p.ret {
                attrs.push("peripheries=2".into());
            }
            let _ = writeln!(t, "    \"{}\" [{}];", escape(id), attrs.join(", "));
        }
        for e in &p.edges {
            let _ = write!(t, "    \"{}\" -> \"{}\"", escape(&e.from), escape(&e.to));
            if let EdgeLabel::Call(q) = &e.label {
                let _ = write!(t, " [label=\"{}\"]", escape(q));
            }
            t.push_str(";\n");
        }
        t.push_str("  }\n");
    }
    t.push_str("}\n");
    t
}
