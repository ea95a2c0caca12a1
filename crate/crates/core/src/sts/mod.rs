//! Symbolic transition systems: a node variable `n`, a stack `st`, scalar
//! variables for globals and for every procedure's locals, an initial
//! predicate, and a next-state relation given as named actions. Both model
//! emitters print this form, and [`execute_sts`] interprets it.

mod compare;
mod exec;
mod mutate;

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::expr::Expr;
use crate::flow::{check_totality, EdgeLabel, FlowGraph, NodeId, ProcedureFlowGraph};
use crate::pds::init_locals;
use crate::value::{Domain, Value};

pub use compare::{compare_with_pds, EquivalenceVerdict};
pub use exec::{execute_sts, pop_entry, push_entry, DeadlockCause, Interpreter, StackEntry, StsReport, StsState};
pub use mutate::{mutate, Mutation};

pub const DEFAULT_STACK_CAPACITY: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StsError {
    #[error("flow graph is not total: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    NonTotalFlowGraph(Vec<Diagnostic>),
    #[error("label of call node `{0}` changes local variables")]
    CallLabelWritesLocals(NodeId),
    #[error("label of return node `{0}` constrains local post-state values")]
    ReturnLabelWritesLocals(NodeId),
    #[error("mangled local `{0}` clashes with a global of the same name")]
    NameClash(String),
    #[error("variable `{0}` has an unbounded domain")]
    InfiniteDomain(String),
    #[error("stack bound {max_stack} does not fit a stack capacity of {capacity}")]
    BoundMismatch { max_stack: usize, capacity: usize },
    #[error(transparent)]
    Pds(#[from] crate::pds::PdsError),
    #[error(transparent)]
    Action(#[from] crate::action::ActionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StsVarKind {
    Node,
    Stack,
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StsVar {
    pub name: String,
    pub kind: StsVarKind,
    /// Scalar domain; `None` for `n` and `st`.
    pub domain: Option<Domain>,
    /// Procedure owning a local, `None` for globals and `n`/`st`.
    pub owner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StackOp {
    Keep,
    /// Push `(ret, values of saved)`.
    Push { ret: NodeId, saved: Vec<String> },
    /// Requires the top entry to name `site`, restores `restore` from it
    /// and pops.
    Pop { site: NodeId, restore: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StsAction {
    pub name: String,
    /// The action requires `n = source`; `None` drops that test.
    pub source: Option<NodeId>,
    pub target: NodeId,
    pub stack: StackOp,
    /// Path conditions, over unprimed variables.
    pub guards: Vec<Expr>,
    /// Remaining conjuncts over STS variables, including every frame
    /// condition; `x' == any(D)` is a havoc.
    pub body: Vec<Expr>,
}

impl StsAction {
    pub fn is_push(&self) -> bool {
        matches!(self.stack, StackOp::Push { .. })
    }

    pub fn is_pop(&self) -> bool {
        matches!(self.stack, StackOp::Pop { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sts {
    pub name: String,
    pub variables: Vec<StsVar>,
    /// Every node id with its procedure, procedures in flow-graph order.
    pub nodes: IndexMap<NodeId, String>,
    pub main: String,
    /// Predicate over the globals.
    pub init_globals: Expr,
    pub init_node: NodeId,
    /// Initial value of every mangled local.
    pub init_locals: Vec<(String, Value)>,
    pub actions: Vec<StsAction>,
    pub stack_capacity: usize,
}

impl Sts {
    pub fn scalars(&self) -> impl Iterator<Item = &StsVar> {
        self.variables.iter().filter(|v| v.kind == StsVarKind::Scalar)
    }

    /// Domain of the scalar `name`. Scalars may share a name with `n` or
    /// `st`; emitters rename them.
    pub fn domain_of(&self, name: &str) -> Option<Domain> {
        self.scalars().find(|v| v.name == name).and_then(|v| v.domain)
    }

    pub fn action(&self, name: &str) -> Option<&StsAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// Mangled locals of `proc`, in declaration order.
    pub fn locals_of(&self, proc: &str) -> Vec<String> {
        self.variables
            .iter()
            .filter(|v| v.owner.as_deref() == Some(proc))
            .map(|v| v.name.clone())
            .collect()
    }

    /// Largest number of stack entries any run needs, or `None` when the
    /// call graph is recursive.
    pub fn max_call_depth(&self) -> Option<usize> {
        let mut calls: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for a in &self.actions {
            if let (Some(src), true) = (&a.source, a.is_push()) {
                calls
                    .entry(self.nodes[src].as_str())
                    .or_default()
                    .insert(self.nodes[&a.target].as_str());
            }
        }
        fn depth<'a>(
            p: &'a str,
            calls: &BTreeMap<&'a str, BTreeSet<&'a str>>,
            path: &mut Vec<&'a str>,
        ) -> Option<usize> {
            if path.contains(&p) {
                return None;
            }
            path.push(p);
            let mut best = 0;
            for q in calls.get(p).into_iter().flatten() {
                best = best.max(1 + depth(q, calls, path)?);
            }
            path.pop();
            Some(best)
        }
        depth(&self.main, &calls, &mut Vec::new())
    }

    /// Procedures whose locals are saved on the stack by some push.
    pub fn saving_procedures(&self) -> BTreeSet<String> {
        self.actions
            .iter()
            .filter_map(|a| match &a.stack {
                StackOp::Push { saved, .. } => saved.first().and_then(|s| {
                    self.variables
                        .iter()
                        .find(|v| v.name == *s)
                        .and_then(|v| v.owner.clone())
                }),
                _ => None,
            })
            .collect()
    }
}

pub fn mangle(proc: &str, var: &str) -> String {
    format!("{proc}__{var}")
}

/// Renames `proc`'s locals in `e` to their mangled names.
fn mangle_expr(p: &ProcedureFlowGraph, e: &Expr) -> Expr {
    let map: BTreeMap<String, String> = p
        .locals
        .iter()
        .map(|l| (l.name.clone(), mangle(&p.name, &l.name)))
        .collect();
    e.rename(&map)
}

/// If `c` is `x' == x`, returns `x`.
fn pin_of(c: &Expr) -> Option<&str> {
    match c.as_definition() {
        Some((x, Expr::Var { name, primed: false })) if name == x => Some(x),
        _ => None,
    }
}

fn pin(v: &str) -> Expr {
    Expr::eq(Expr::primed(v), Expr::var(v))
}

fn literal(v: Value) -> Expr {
    match v {
        Value::Int(i) => Expr::Int(i),
        Value::Bool(b) => Expr::Bool(b),
    }
}

struct Ctx {
    locals: BTreeMap<String, Vec<String>>,
    init: BTreeMap<String, Value>,
    names: BTreeSet<String>,
}

impl Ctx {
    fn unique(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut k = 2;
        while !self.names.insert(name.clone()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        name
    }

    /// Pins for every local not owned by any of `procs`.
    fn pins_except(&self, procs: &[&str]) -> Vec<Expr> {
        self.locals
            .iter()
            .filter(|(p, _)| !procs.contains(&p.as_str()))
            .flat_map(|(_, vs)| vs.iter().map(|v| pin(v)))
            .collect()
    }

    fn resets(&self, proc: &str, skip: &[String]) -> Vec<Expr> {
        self.locals[proc]
            .iter()
            .filter(|v| !skip.contains(v))
            .map(|v| Expr::eq(Expr::primed(v.clone()), literal(self.init[v])))
            .collect()
    }

    /// Base label conjuncts of `node` with pins on `proc`'s locals removed.
    /// Fails if any other conjunct constrains a primed local.
    fn without_local_pins(&self, p: &ProcedureFlowGraph, base: &Expr) -> Option<Vec<Expr>> {
        let locals = &self.locals[&p.name];
        let mut out = Vec::new();
        for c in mangle_expr(p, base).conjuncts() {
            let touches = c.primed_vars().iter().any(|v| locals.contains(v));
            if !touches {
                out.push(c.clone());
            } else if !pin_of(c).is_some_and(|x| locals.iter().any(|l| l == x)) {
                return None;
            }
        }
        Some(out)
    }
}

/// Builds the transition system of a flow graph: one action per silent
/// edge, per call edge, and per (return node, return site) pair.
pub fn sts_of_flow_graph(fg: &FlowGraph, stack_capacity: usize) -> Result<Sts, StsError> {
    let diags = check_totality(fg);
    if !diags.is_empty() {
        return Err(StsError::NonTotalFlowGraph(diags));
    }
    let mut variables = vec![
        StsVar {
            name: "n".into(),
            kind: StsVarKind::Node,
            domain: None,
            owner: None,
        },
        StsVar {
            name: "st".into(),
            kind: StsVarKind::Stack,
            domain: None,
            owner: None,
        },
    ];
    for g in &fg.globals {
        variables.push(StsVar {
            name: g.name.clone(),
            kind: StsVarKind::Scalar,
            domain: Some(g.domain),
            owner: None,
        });
    }
    let globals: BTreeSet<&str> = fg.globals.iter().map(|g| g.name.as_str()).collect();
    let mut locals = BTreeMap::new();
    let mut init = BTreeMap::new();
    let mut init_list = Vec::new();
    for p in fg.procedures.values() {
        let l0 = init_locals(p);
        let mut names = Vec::new();
        for l in &p.locals {
            let m = mangle(&p.name, &l.name);
            if globals.contains(m.as_str()) {
                return Err(StsError::NameClash(m));
            }
            variables.push(StsVar {
                name: m.clone(),
                kind: StsVarKind::Scalar,
                domain: Some(l.domain),
                owner: Some(p.name.clone()),
            });
            let v = l0.get(&l.name).expect("init covers every local");
            init.insert(m.clone(), v);
            init_list.push((m.clone(), v));
            names.push(m);
        }
        locals.insert(p.name.clone(), names);
    }
    let mut ctx = Ctx {
        locals,
        init,
        names: BTreeSet::new(),
    };

    // Entering main's return node from elsewhere requires its guards to
    // hold afterwards.
    let main = &fg.procedures[&fg.main];
    let entry_guards: Vec<Expr> = fg
        .entry_guards()
        .iter()
        .map(|g| mangle_expr(main, g).prime_all())
        .collect();
    let entering = |target: &NodeId, source: &NodeId| *target == main.ret && *source != main.ret;

    let mut actions = Vec::new();
    for p in fg.procedures.values() {
        for (id, node) in &p.nodes {
            let stutter = fg.is_stutter_node(&p.name, id);
            let guards: Vec<Expr> = if stutter {
                Vec::new()
            } else {
                node.label.guards.iter().map(|g| mangle_expr(p, g)).collect()
            };
            let base = &node.label.base.expr;
            let short = p.short_name(id);
            let call_edges = p
                .successors(id)
                .filter(|e| matches!(e.label, EdgeLabel::Call(_)))
                .count();
            for e in p.successors(id) {
                match &e.label {
                    EdgeLabel::Eps => {
                        let mut body: Vec<Expr> =
                            mangle_expr(p, base).conjuncts().into_iter().cloned().collect();
                        body.retain(|c| *c != Expr::Bool(true));
                        body.extend(ctx.pins_except(&[&p.name]));
                        if entering(&e.to, id) {
                            body.extend(entry_guards.iter().cloned());
                        }
                        let name = if stutter && e.to == *id {
                            format!("{short}_stutter")
                        } else {
                            format!("{short}_to_{}", p.short_name(&e.to))
                        };
                        actions.push(StsAction {
                            name: ctx.unique(name),
                            source: Some(id.clone()),
                            target: e.to.clone(),
                            stack: StackOp::Keep,
                            guards: guards.clone(),
                            body,
                        });
                    }
                    EdgeLabel::Call(q) => {
                        let callee = &fg.procedures[q];
                        let mut body = ctx
                            .without_local_pins(p, base)
                            .ok_or_else(|| StsError::CallLabelWritesLocals(id.clone()))?;
                        body.retain(|c| *c != Expr::Bool(true));
                        body.extend(ctx.resets(&p.name, &[]));
                        if callee.name != p.name {
                            body.extend(ctx.resets(&callee.name, &[]));
                        }
                        body.extend(ctx.pins_except(&[&p.name, &callee.name]));
                        let mut name = format!("{short}_call_{q}");
                        if call_edges > 1 {
                            name = format!("{name}_to_{}", p.short_name(&e.to));
                        }
                        actions.push(StsAction {
                            name: ctx.unique(name),
                            source: Some(id.clone()),
                            target: callee.entry.clone(),
                            stack: StackOp::Push {
                                ret: e.to.clone(),
                                saved: ctx.locals[&p.name].clone(),
                            },
                            guards: guards.clone(),
                            body,
                        });
                    }
                }
            }
            if *id == p.ret && p.name != fg.main {
                let sites: Vec<(&ProcedureFlowGraph, &NodeId)> = fg
                    .procedures
                    .values()
                    .flat_map(|c| {
                        c.edges
                            .iter()
                            .filter(|e| e.label == EdgeLabel::Call(p.name.clone()))
                            .map(move |e| (c, &e.to))
                    })
                    .collect();
                let mut seen_sites = BTreeSet::new();
                let distinct: Vec<_> = sites
                    .into_iter()
                    .filter(|(_, s)| seen_sites.insert((*s).clone()))
                    .collect();
                let several = distinct.len() > 1;
                for (caller, site) in distinct {
                    let mut body = ctx
                        .without_local_pins(p, base)
                        .ok_or_else(|| StsError::ReturnLabelWritesLocals(id.clone()))?;
                    body.retain(|c| *c != Expr::Bool(true));
                    let restore = ctx.locals[&caller.name].clone();
                    if caller.name != p.name {
                        body.extend(ctx.resets(&p.name, &restore));
                    }
                    body.extend(ctx.pins_except(&[&p.name, &caller.name]));
                    if entering(site, id) {
                        body.extend(entry_guards.iter().cloned());
                    }
                    let mut name = format!("{short}_return");
                    if several {
                        name = format!("{name}_{}", caller.short_name(site));
                    }
                    actions.push(StsAction {
                        name: ctx.unique(name),
                        source: Some(id.clone()),
                        target: site.clone(),
                        stack: StackOp::Pop {
                            site: site.clone(),
                            restore,
                        },
                        guards: guards.clone(),
                        body,
                    });
                }
            }
        }
    }
    Ok(Sts {
        name: fg.name.clone(),
        variables,
        nodes: fg
            .procedures
            .values()
            .flat_map(|p| p.nodes.keys().map(|n| (n.clone(), p.name.clone())))
            .collect(),
        main: fg.main.clone(),
        init_globals: fg.init_globals.clone(),
        init_node: fg.procedures[&fg.main].entry.clone(),
        init_locals: init_list,
        actions,
        stack_capacity,
    })
}
