//! Flow graphs: per-procedure graphs whose nodes carry actions and whose
//! edges are silent or labelled with the called procedure.

mod translate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::action::Action;
use crate::diag::{DiagCode, Diagnostic};
use crate::expr::Expr;
use crate::value::{Domain, Value, VarDecl};

pub use translate::{translate, TranslateError};

pub type NodeId = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Eps,
    Call(String),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Eps => f.write_str("eps"),
            EdgeLabel::Call(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowEdge {
    pub from: NodeId,
    pub label: EdgeLabel,
    pub to: NodeId,
}

/// Which case of the labelling produced a node's base action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabelKind {
    /// Contract of the named block (a jump target or a callee's entry block).
    Contract(String),
    /// An assignment, printed as source text.
    Statement(String),
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeLabel {
    pub kind: LabelKind,
    pub base: Action,
    /// Path conditions conjoined to the base action.
    pub guards: Vec<Expr>,
}

impl NodeLabel {
    /// The full label: base action and every guard.
    pub fn action(&self) -> Action {
        self.guards
            .iter()
            .fold(self.base.clone(), |acc, g| acc.and(&Action::new(g.clone())))
    }

    /// Short human-readable form, e.g. `id && 1 != 0` or `a_c_havoc`.
    pub fn describe(&self) -> String {
        let mut s = match &self.kind {
            LabelKind::Contract(b) => format!("a_c_{b}"),
            LabelKind::Statement(text) => format!("a_s[{text}]"),
            LabelKind::Identity => "id".to_string(),
        };
        for g in &self.guards {
            s.push_str(" && ");
            s.push_str(&g.to_string());
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNode {
    pub id: NodeId,
    pub label: NodeLabel,
    /// Control point the node came from, `proc/block/point`, or
    /// `proc/<return>` for a synthetic return node.
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureFlowGraph {
    pub name: String,
    /// Short name used in generated identifiers (`m` for `main`).
    pub abbrev: String,
    pub nodes: IndexMap<NodeId, FlowNode>,
    pub edges: Vec<FlowEdge>,
    pub entry: NodeId,
    pub ret: NodeId,
    pub locals: Vec<VarDecl>,
    pub init_locals: BTreeMap<String, Value>,
}

impl ProcedureFlowGraph {
    pub fn successors<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a FlowEdge> + 'a {
        self.edges.iter().filter(move |e| e.from == node)
    }

    /// Position of `node` in declaration order, 1-based; used for short
    /// action names such as `m3`.
    pub fn index_of(&self, node: &str) -> Option<usize> {
        self.nodes.get_index_of(node).map(|i| i + 1)
    }

    /// Short node name such as `m3` or `p2_4`.
    pub fn short_name(&self, node: &str) -> String {
        let k = self.index_of(node).unwrap_or(0);
        if self.abbrev.ends_with(|c: char| c.is_ascii_digit()) {
            format!("{}_{k}", self.abbrev)
        } else {
            format!("{}{k}", self.abbrev)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    pub name: String,
    pub main: String,
    pub globals: Vec<VarDecl>,
    pub init_globals: Expr,
    pub procedures: IndexMap<String, ProcedureFlowGraph>,
}

impl FlowGraph {
    /// Domains of globals and of the locals of `proc`.
    pub fn scope_of(&self, proc: &str) -> BTreeMap<String, Domain> {
        let mut out: BTreeMap<String, Domain> = self
            .globals
            .iter()
            .map(|g| (g.name.clone(), g.domain))
            .collect();
        if let Some(p) = self.procedures.get(proc) {
            out.extend(p.locals.iter().map(|l| (l.name.clone(), l.domain)));
        }
        out
    }

    /// Whether `node` of `proc` is main's return node, whose self-loop
    /// stutters.
    pub fn is_stutter_node(&self, proc: &str, node: &str) -> bool {
        proc == self.main && self.procedures.get(proc).is_some_and(|p| p.ret == node)
    }

    /// Guards of main's return node. They are checked on the post-state of
    /// every step that enters that node from elsewhere, since the stutter
    /// step itself ignores them.
    pub fn entry_guards(&self) -> Vec<Expr> {
        let main = &self.procedures[&self.main];
        main.nodes[&main.ret].label.guards.clone()
    }

    /// The action executed when leaving `node`. At main's return node the
    /// guard conjuncts are dropped so that terminated runs can stutter.
    pub fn step_action(&self, proc: &str, node: &str) -> Option<Action> {
        let n = self.procedures.get(proc)?.nodes.get(node)?;
        if self.is_stutter_node(proc, node) {
            Some(n.label.base.clone())
        } else {
            Some(n.label.action())
        }
    }

    /// Procedure owning `node`.
    pub fn owner_of(&self, node: &str) -> Option<&ProcedureFlowGraph> {
        self.procedures.values().find(|p| p.nodes.contains_key(node))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),
}

/// Nodes reachable from the entry of `proc` via edges of any label.
pub fn reachable_nodes(fg: &FlowGraph, proc: &str) -> Result<BTreeSet<NodeId>, FlowError> {
    let p = fg
        .procedures
        .get(proc)
        .ok_or_else(|| FlowError::UnknownProcedure(proc.to_string()))?;
    let mut seen = BTreeSet::from([p.entry.clone()]);
    let mut queue = VecDeque::from([p.entry.as_str()]);
    while let Some(n) = queue.pop_front() {
        for e in p.successors(n) {
            if seen.insert(e.to.clone()) {
                queue.push_back(&e.to);
            }
        }
    }
    Ok(seen)
}

/// Reports every reachable node without an outgoing edge. Return nodes of
/// procedures other than main are exempt: they pop instead.
pub fn check_totality(fg: &FlowGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for p in fg.procedures.values() {
        let reach = reachable_nodes(fg, &p.name).unwrap_or_default();
        for n in p.nodes.keys() {
            if !reach.contains(n) || (p.name != fg.main && *n == p.ret) {
                continue;
            }
            if p.successors(n).next().is_none() {
                out.push(Diagnostic::new(
                    DiagCode::NonTotalNode,
                    format!("{}/{n}", p.name),
                    format!("node `{n}` has no outgoing edge"),
                ));
            }
        }
    }
    out
}

/// `main: 4 nodes, 5 edges; steering: 4 nodes, 3 edges`
pub fn summary(fg: &FlowGraph) -> String {
    let plural = |n: usize, word: &str| {
        if n == 1 {
            format!("{n} {word}")
        } else {
            format!("{n} {word}s")
        }
    };
    fg.procedures
        .values()
        .map(|p| {
            format!(
                "{}: {}, {}",
                p.name,
                plural(p.nodes.len(), "node"),
                plural(p.edges.len(), "edge")
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}
