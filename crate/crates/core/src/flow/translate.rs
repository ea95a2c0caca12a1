use std::collections::{BTreeMap, BTreeSet, VecDeque};

use indexmap::IndexMap;
use thiserror::Error;

use super::{EdgeLabel, FlowEdge, FlowGraph, FlowNode, LabelKind, NodeLabel, ProcedureFlowGraph};
use crate::action::{action_of_contract, action_of_guard, action_of_statement, id_action, Action, ActionError};
use crate::diag::Diagnostic;
use crate::expr::Expr;
use crate::ir::{validate_program, AnnotatedProcedure, AnnotatedProgram, Contract, Statement};
use crate::value::Domain;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("program is not well formed ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("unannotated jumps in `{proc}` re-enter block `{block}` outside tail position")]
    CyclicUnannotatedJumps { proc: String, block: String },
    #[error("the return node of `{0}` is unreachable from its entry")]
    UnreachableExit(String),
    #[error(transparent)]
    Action(#[from] ActionError),
}

/// A node before guard splitting.
struct Raw {
    kind: LabelKind,
    base: Action,
    /// Callee when outgoing edges are call edges.
    call: Option<String>,
    origin: String,
    /// A `return` or `skip` point, usable as the return node as is.
    plain: bool,
}

struct RawEdge {
    from: usize,
    to: usize,
    guard: Option<Expr>,
}

/// One block being inlined.
struct Frame {
    block: String,
    entry: Option<usize>,
    /// Instantiated from the exit point of its parent (or is the root).
    tail: bool,
}

struct Builder<'a> {
    prog: &'a AnnotatedProgram,
    proc: &'a AnnotatedProcedure,
    frame_vars: BTreeSet<String>,
    scope: BTreeMap<String, Domain>,
    raws: Vec<Raw>,
    edges: Vec<RawEdge>,
    stack: Vec<Frame>,
    nested_returns: Vec<usize>,
}

impl Builder<'_> {
    fn cyclic(&self, block: &str) -> TranslateError {
        TranslateError::CyclicUnannotatedJumps {
            proc: self.proc.name.clone(),
            block: block.to_string(),
        }
    }

    fn add(&mut self, raw: Raw) -> usize {
        self.raws.push(raw);
        self.raws.len() - 1
    }

    fn identity(&self) -> Action {
        id_action(&self.frame_vars)
    }

    /// Creates the node for a point that is not an unannotated jump.
    fn concrete(&mut self, origin: String, stmt: &Statement) -> Result<usize, TranslateError> {
        let (kind, base, call, plain) = match stmt {
            Statement::Jump(b) => {
                let c = &self.proc.blocks[b].contract;
                (
                    LabelKind::Contract(b.clone()),
                    action_of_contract(c, &self.scope)?,
                    None,
                    false,
                )
            }
            Statement::Call(q) => match self.prog.entry_contract(q) {
                Some(c @ Contract::Spec { .. }) => (
                    LabelKind::Contract(self.prog.procedures[q].entry_block.clone()),
                    action_of_contract(c, &self.scope)?,
                    None,
                    false,
                ),
                _ => (LabelKind::Identity, self.identity(), Some(q.clone()), false),
            },
            Statement::Assign { target, expr } => (
                LabelKind::Statement(format!("{target} := {expr}")),
                action_of_statement(stmt, &self.frame_vars)?,
                None,
                false,
            ),
            Statement::Return | Statement::Skip => (LabelKind::Identity, self.identity(), None, true),
        };
        Ok(self.add(Raw {
            kind,
            base,
            call,
            origin,
            plain,
        }))
    }

    fn is_transparent(&self, stmt: &Statement) -> Option<String> {
        match stmt {
            Statement::Jump(b) if self.proc.blocks[b].contract.is_empty() => Some(b.clone()),
            _ => None,
        }
    }

    /// Resolves an unannotated jump at `point` (of the top frame's block) to
    /// its entry node and outflow node.
    fn jump(
        &mut self,
        point: &str,
        exit: &str,
        target: &str,
    ) -> Result<(usize, Option<usize>), TranslateError> {
        let at_exit = point == exit;
        if let Some(i) = self.stack.iter().position(|f| f.block == target) {
            let tail = at_exit && self.stack[i + 1..].iter().all(|f| f.tail);
            return match self.stack[i].entry {
                Some(e) if tail => Ok((e, None)),
                _ => Err(self.cyclic(target)),
            };
        }
        self.instantiate(target, at_exit)
    }

    /// Inlines a copy of `block_id`; returns its entry node and the node
    /// control leaves it from (if any).
    fn instantiate(&mut self, block_id: &str, tail: bool) -> Result<(usize, Option<usize>), TranslateError> {
        let proc = self.proc;
        let block = &proc.blocks[block_id];
        let root = self.stack.is_empty();
        self.stack.push(Frame {
            block: block_id.to_string(),
            entry: None,
            tail,
        });

        let mut ins: BTreeMap<&str, usize> = BTreeMap::new();
        let mut outs: BTreeMap<&str, Option<usize>> = BTreeMap::new();
        let mut pending = Vec::new();
        for (id, stmt) in &block.points {
            if let Some(target) = self.is_transparent(stmt) {
                pending.push((id.as_str(), target));
                continue;
            }
            let origin = format!("{}/{}/{}", proc.name, block_id, id);
            let n = self.concrete(origin, stmt)?;
            ins.insert(id, n);
            let out = if matches!(stmt, Statement::Return) && !root {
                self.nested_returns.push(n);
                None
            } else {
                Some(n)
            };
            outs.insert(id, out);
        }
        if let Some(&e) = ins.get(block.entry.as_str()) {
            self.stack.last_mut().expect("frame pushed above").entry = Some(e);
        }
        // The entry is resolved first so that tail jumps further down can
        // loop back to it.
        pending.sort_by_key(|(id, _)| *id != block.entry);
        for (id, target) in pending {
            let (i, o) = self.jump(id, &block.exit, &target)?;
            ins.insert(id, i);
            outs.insert(id, o);
            if id == block.entry {
                self.stack.last_mut().expect("frame pushed above").entry = Some(i);
            }
        }
        let entry = ins[block.entry.as_str()];
        self.stack.last_mut().expect("frame pushed above").entry = Some(entry);

        for e in &block.edges {
            if let Some(from) = outs[e.from.as_str()] {
                self.edges.push(RawEdge {
                    from,
                    to: ins[e.to.as_str()],
                    guard: e.guard.clone(),
                });
            }
        }
        let exit = outs[block.exit.as_str()];
        self.stack.pop();
        Ok((entry, exit))
    }

    fn synthetic_return(&mut self) -> usize {
        let base = self.identity();
        self.add(Raw {
            kind: LabelKind::Identity,
            base,
            call: None,
            origin: format!("{}/<return>", self.proc.name),
            plain: true,
        })
    }

    fn guard_classes(&self, entry: usize) -> Vec<Vec<Option<Expr>>> {
        let mut classes: Vec<Vec<Option<Expr>>> = vec![Vec::new(); self.raws.len()];
        classes[entry].push(None);
        for e in &self.edges {
            if !classes[e.to].contains(&e.guard) {
                classes[e.to].push(e.guard.clone());
            }
        }
        classes
    }
}

/// A procedure graph with positional node ids, before naming.
struct Shaped {
    nodes: Vec<(NodeLabel, String)>,
    edges: Vec<(usize, EdgeLabel, usize)>,
    ret: usize,
    callees: Vec<String>,
}

fn shape(prog: &AnnotatedProgram, proc: &AnnotatedProcedure) -> Result<Shaped, TranslateError> {
    let scope = prog.scope_of(&proc.name);
    let mut b = Builder {
        prog,
        proc,
        frame_vars: scope.keys().cloned().collect(),
        scope,
        raws: Vec::new(),
        edges: Vec::new(),
        stack: Vec::new(),
        nested_returns: Vec::new(),
    };
    let (entry, exit) = b.instantiate(&proc.entry_block, true)?;

    let mut ret = match exit {
        Some(x) if b.raws[x].plain && !b.edges.iter().any(|e| e.from == x) => x,
        Some(x) => {
            let r = b.synthetic_return();
            b.edges.push(RawEdge {
                from: x,
                to: r,
                guard: None,
            });
            r
        }
        None => b.synthetic_return(),
    };
    if b.guard_classes(entry)[ret].len() > 1 {
        let r = b.synthetic_return();
        b.edges.push(RawEdge {
            from: ret,
            to: r,
            guard: None,
        });
        ret = r;
    }
    for n in std::mem::take(&mut b.nested_returns) {
        b.edges.push(RawEdge {
            from: n,
            to: ret,
            guard: None,
        });
    }

    let classes = b.guard_classes(entry);
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); b.raws.len()];
    for (i, e) in b.edges.iter().enumerate() {
        out_edges[e.from].push(i);
    }
    let class_of = |raw: usize, g: &Option<Expr>| {
        classes[raw]
            .iter()
            .position(|c| c == g)
            .expect("every edge guard is a class of its target")
    };

    // Depth-first preorder over (raw node, guard class) copies.
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut stack: Vec<((usize, usize), usize)> = vec![((entry, 0), 0)];
    index.insert((entry, 0), 0);
    order.push((entry, 0));
    while let Some((copy, next)) = stack.last_mut() {
        let Some(&ei) = out_edges[copy.0].get(*next) else {
            stack.pop();
            continue;
        };
        *next += 1;
        let e = &b.edges[ei];
        let target = (e.to, class_of(e.to, &e.guard));
        if !index.contains_key(&target) {
            index.insert(target, order.len());
            order.push(target);
            stack.push((target, 0));
        }
    }

    let Some(&ret_pos) = index.get(&(ret, 0)) else {
        return Err(TranslateError::UnreachableExit(proc.name.clone()));
    };
    let mut callees = Vec::new();
    let mut edges = Vec::new();
    for (pos, &(raw, _)) in order.iter().enumerate() {
        let label = match &b.raws[raw].call {
            Some(q) => {
                if !callees.contains(q) {
                    callees.push(q.clone());
                }
                EdgeLabel::Call(q.clone())
            }
            None => EdgeLabel::Eps,
        };
        for &ei in &out_edges[raw] {
            let e = &b.edges[ei];
            let to = index[&(e.to, class_of(e.to, &e.guard))];
            edges.push((pos, label.clone(), to));
        }
    }
    let nodes = order
        .iter()
        .map(|&(raw, class)| {
            let r = &b.raws[raw];
            let guards: Vec<Expr> = classes[raw][class].iter().cloned().collect();
            for g in &guards {
                action_of_guard(g)?;
            }
            Ok((
                NodeLabel {
                    kind: r.kind.clone(),
                    base: r.base.clone(),
                    guards,
                },
                r.origin.clone(),
            ))
        })
        .collect::<Result<Vec<_>, TranslateError>>()?;
    Ok(Shaped {
        nodes,
        edges,
        ret: ret_pos,
        callees,
    })
}

/// Shortest prefix of each name that no other name starts with; the full
/// name when every prefix is shared.
fn abbreviations(names: &[String]) -> Vec<String> {
    names
        .iter()
        .map(|n| {
            let chars: Vec<(usize, char)> = n.char_indices().collect();
            for (k, _) in chars.iter().enumerate() {
                let end = chars.get(k + 1).map_or(n.len(), |c| c.0);
                let prefix = &n[..end];
                if names.iter().all(|o| o == n || !o.starts_with(prefix)) {
                    return prefix.to_string();
                }
            }
            n.clone()
        })
        .collect()
}

/// Abstracts an annotated program into a flow graph: annotated blocks and
/// calls to annotated procedures become contract actions, unannotated
/// jumps are inlined, guards are conjoined to node labels, and main's
/// return node gets a stutter self-loop. Only main and procedures that
/// remain targets of call edges get a graph of their own.
pub fn translate(prog: &AnnotatedProgram) -> Result<FlowGraph, TranslateError> {
    let diags = validate_program(prog);
    if !diags.is_empty() {
        return Err(TranslateError::Invalid(diags));
    }
    let mut shaped: IndexMap<String, Shaped> = IndexMap::new();
    let mut queue = VecDeque::from([prog.main.clone()]);
    while let Some(p) = queue.pop_front() {
        if shaped.contains_key(&p) {
            continue;
        }
        let s = shape(prog, &prog.procedures[&p])?;
        queue.extend(s.callees.iter().cloned());
        shaped.insert(p, s);
    }

    let names: Vec<String> = shaped.keys().cloned().collect();
    let abbrevs = abbreviations(&names);
    let mut procedures = IndexMap::new();
    for ((name, s), abbrev) in shaped.into_iter().zip(abbrevs) {
        let id = |k: usize| format!("n_{abbrev}_{}", k + 1);
        let ap = &prog.procedures[&name];
        let nodes: IndexMap<String, FlowNode> = s
            .nodes
            .into_iter()
            .enumerate()
            .map(|(k, (label, origin))| (id(k), FlowNode { id: id(k), label, origin }))
            .collect();
        let mut edges: Vec<FlowEdge> = s
            .edges
            .into_iter()
            .map(|(f, label, t)| FlowEdge {
                from: id(f),
                label,
                to: id(t),
            })
            .collect();
        if name == prog.main {
            edges.push(FlowEdge {
                from: id(s.ret),
                label: EdgeLabel::Eps,
                to: id(s.ret),
            });
        }
        procedures.insert(
            name.clone(),
            ProcedureFlowGraph {
                name,
                abbrev: abbrev.clone(),
                entry: id(0),
                ret: id(s.ret),
                nodes,
                edges,
                locals: ap.locals.clone(),
                init_locals: ap.init_locals.clone(),
            },
        );
    }
    Ok(FlowGraph {
        name: prog.name.clone(),
        main: prog.main.clone(),
        globals: prog.globals.clone(),
        init_globals: prog.init_globals.clone(),
        procedures,
    })
}
