use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use crate::action::{enumerate_posts, eval_expr, Action, State};
use crate::expr::Expr;
use crate::flow::NodeId;
use crate::pds::all_valuations;
use crate::value::{Domain, Valuation, Value};

use super::{StackOp, Sts, StsAction, StsError};

/// A stack entry: return node and the saved locals of the caller.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StackEntry {
    pub node: NodeId,
    pub saved: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StsState {
    pub node: NodeId,
    pub vars: Valuation,
    /// Top first.
    pub stack: Vec<StackEntry>,
}

impl fmt::Display for StsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.vars.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "n={} | {} | st=[", self.node, vars.join(", "))?;
        for (i, e) in self.stack.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let saved: Vec<String> = e.saved.iter().map(|v| v.to_string()).collect();
            write!(f, "({}, <{}>)", e.node, saved.join(", "))?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeadlockCause {
    NoEnabledAction,
    /// Only pushes were enabled and the stack was full.
    StackOverflow,
}

impl fmt::Display for DeadlockCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeadlockCause::NoEnabledAction => "no enabled action",
            DeadlockCause::StackOverflow => "stack overflow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StsReport {
    /// Reachable states in breadth-first discovery order.
    pub visited: Vec<StsState>,
    pub deadlocks: Vec<(StsState, DeadlockCause)>,
    /// The step bound cut the search short.
    pub truncated: bool,
}

/// Steps an [`Sts`] one state at a time. Each action's relation is built
/// once: guards, body, and a havoc of every scalar it leaves open.
pub struct Interpreter<'a> {
    sts: &'a Sts,
    domains: BTreeMap<String, Domain>,
    relations: Vec<Expr>,
}

impl<'a> Interpreter<'a> {
    pub fn new(sts: &'a Sts) -> Result<Self, StsError> {
        let domains: BTreeMap<String, Domain> = sts
            .scalars()
            .map(|v| (v.name.clone(), v.domain.expect("scalars have domains")))
            .collect();
        for (name, d) in &domains {
            if !d.is_finite() {
                return Err(StsError::InfiniteDomain(name.clone()));
            }
        }
        let relations = sts
            .actions
            .iter()
            .map(|a| Self::relation(a, &domains))
            .collect();
        Ok(Interpreter {
            sts,
            domains,
            relations,
        })
    }

    /// Guards and body, plus a havoc of every scalar the action neither
    /// mentions primed nor restores from the stack.
    fn relation(a: &StsAction, domains: &BTreeMap<String, Domain>) -> Expr {
        let mut parts: Vec<Expr> = a.guards.iter().chain(&a.body).cloned().collect();
        let mut mentioned = std::collections::BTreeSet::new();
        for c in &a.body {
            mentioned.extend(c.primed_vars());
        }
        if let StackOp::Pop { restore, .. } = &a.stack {
            mentioned.extend(restore.iter().cloned());
        }
        for (name, d) in domains {
            if !mentioned.contains(name) {
                parts.push(Expr::eq(Expr::primed(name.clone()), Expr::Any(*d)));
            }
        }
        Expr::conjoin(parts)
    }

    pub fn initial_states(&self) -> Result<Vec<StsState>, StsError> {
        let gdom: BTreeMap<String, Domain> = self
            .sts
            .scalars()
            .filter(|v| v.owner.is_none())
            .map(|v| (v.name.clone(), v.domain.expect("scalars have domains")))
            .collect();
        let mut out = Vec::new();
        for g in all_valuations(&gdom)? {
            let lookup = |n: &str| g.get(n);
            if eval_expr(&self.sts.init_globals, &lookup, &lookup)? != Value::Bool(true) {
                continue;
            }
            let mut vars = g.clone();
            for (name, v) in &self.sts.init_locals {
                vars.set(name.clone(), *v);
            }
            out.push(StsState {
                node: self.sts.init_node.clone(),
                vars,
                stack: Vec::new(),
            });
        }
        Ok(out)
    }

    /// Successors of `s`, sorted and without duplicates, and whether a
    /// push was blocked by the stack capacity.
    pub fn successors(&self, s: &StsState) -> Result<(Vec<StsState>, bool), StsError> {
        let (steps, blocked) = self.steps(s)?;
        let mut out: Vec<StsState> = steps.into_iter().map(|(_, t)| t).collect();
        out.sort();
        out.dedup();
        Ok((out, blocked))
    }

    /// Successors of `s` paired with the index of the action taken, in
    /// action order, and whether a push was blocked by the stack capacity.
    pub fn steps(&self, s: &StsState) -> Result<(Vec<(usize, StsState)>, bool), StsError> {
        let mut out = Vec::new();
        let mut blocked = false;
        let pre = State::new(Valuation::new(), s.vars.clone());
        for (i, (a, rel)) in self.sts.actions.iter().zip(&self.relations).enumerate() {
            if a.source.as_ref().is_some_and(|src| *src != s.node) {
                continue;
            }
            let mut rel = rel.clone();
            let stack = match &a.stack {
                StackOp::Keep => s.stack.clone(),
                StackOp::Push { ret, saved } => {
                    let entry = StackEntry {
                        node: ret.clone(),
                        saved: saved
                            .iter()
                            .map(|v| s.vars.get(v).expect("saved locals are variables"))
                            .collect(),
                    };
                    match push_entry(&s.stack, entry, self.sts.stack_capacity) {
                        Some(st) => st,
                        None => {
                            let enabled = !enumerate_posts(&Action::new(rel), &pre, &self.domains)?.is_empty();
                            blocked |= enabled;
                            continue;
                        }
                    }
                }
                StackOp::Pop { site, restore } => {
                    let Some((top, rest)) = pop_entry(&s.stack) else { continue };
                    if top.node != *site || top.saved.len() != restore.len() {
                        continue;
                    }
                    for (name, v) in restore.iter().zip(&top.saved) {
                        let lit = match v {
                            Value::Int(i) => Expr::Int(*i),
                            Value::Bool(b) => Expr::Bool(*b),
                        };
                        rel = Expr::and(rel, Expr::eq(Expr::primed(name.clone()), lit));
                    }
                    rest
                }
            };
            for t in enumerate_posts(&Action::new(rel), &pre, &self.domains)? {
                out.push((
                    i,
                    StsState {
                        node: a.target.clone(),
                        vars: t.global,
                        stack: stack.clone(),
                    },
                ));
            }
        }
        Ok((out, blocked))
    }
}

/// `stack` with `entry` on top, or `None` if it already holds `capacity`
/// entries.
pub fn push_entry(stack: &[StackEntry], entry: StackEntry, capacity: usize) -> Option<Vec<StackEntry>> {
    if stack.len() >= capacity {
        return None;
    }
    let mut out = Vec::with_capacity(stack.len() + 1);
    out.push(entry);
    out.extend_from_slice(stack);
    Some(out)
}

/// The top entry and the rest of `stack`, or `None` if it is empty.
pub fn pop_entry(stack: &[StackEntry]) -> Option<(StackEntry, Vec<StackEntry>)> {
    let (top, rest) = stack.split_first()?;
    Some((top.clone(), rest.to_vec()))
}

/// Breadth-first execution of `sts` from its initial states, visiting at
/// most `max_steps` states. Unmentioned variables are havocked, and a
/// push on a full stack is disabled.
pub fn execute_sts(sts: &Sts, max_steps: usize) -> Result<StsReport, StsError> {
    let interp = Interpreter::new(sts)?;
    let mut report = StsReport {
        visited: Vec::new(),
        deadlocks: Vec::new(),
        truncated: false,
    };
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for s in interp.initial_states()? {
        if seen.len() >= max_steps {
            report.truncated = true;
            break;
        }
        if seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        let (succs, blocked) = interp.successors(&s)?;
        if succs.is_empty() {
            let cause = if blocked {
                DeadlockCause::StackOverflow
            } else {
                DeadlockCause::NoEnabledAction
            };
            report.deadlocks.push((s.clone(), cause));
        }
        for t in succs {
            if seen.contains(&t) {
                continue;
            }
            if seen.len() >= max_steps {
                report.truncated = true;
                continue;
            }
            seen.insert(t.clone());
            queue.push_back(t);
        }
        report.visited.push(s);
    }
    Ok(report)
}
