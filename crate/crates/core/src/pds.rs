//! The pushdown system induced by a flow graph: global states are control
//! states, stack frames are (node, local state) pairs. Rewrite rules are
//! generated on demand from node labels rather than materialized.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::action::{enumerate_posts, eval_expr, Action, ActionError, State};
use crate::expr::Expr;
use crate::flow::{EdgeLabel, FlowGraph, NodeId, ProcedureFlowGraph};
use crate::value::{Domain, Valuation, Value};

pub const DEFAULT_MAX_STEPS: usize = 100_000;
pub const DEFAULT_MAX_STACK: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PdsError {
    #[error("variable `{0}` has an unbounded domain; explicit exploration needs finite domains")]
    InfiniteDomain(String),
    #[error("no global state satisfies the init predicate")]
    UnsatisfiableInit,
    #[error("malformed configuration: {0}")]
    MalformedConfiguration(String),
    #[error("`{0}` is not a global variable")]
    NonGlobalVariable(String),
    #[error("the system has no initial configuration")]
    NoInitialConfiguration,
    #[error(transparent)]
    Action(#[from] ActionError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frame {
    pub node: NodeId,
    pub locals: Valuation,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.node, self.locals)
    }
}

/// A global state and a stack of frames, top first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub global: Valuation,
    pub stack: Vec<Frame>,
}

impl Configuration {
    pub fn top(&self) -> Option<&Frame> {
        self.stack.first()
    }

    fn key(&self) -> (Option<&str>, &Valuation, Option<&Valuation>, &[Frame]) {
        (
            self.stack.first().map(|f| f.node.as_str()),
            &self.global,
            self.stack.first().map(|f| &f.locals),
            self.stack.get(1..).unwrap_or(&[]),
        )
    }
}

/// Top node first, then global state, then top locals, then the rest of
/// the stack.
impl Ord for Configuration {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Configuration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.global.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{} |", g.join(", "))?;
        for fr in &self.stack {
            write!(f, " {fr}")?;
        }
        Ok(())
    }
}

/// A finite prefix of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub configurations: Vec<Configuration>,
    /// The walk reached its requested length (or its target).
    pub complete: bool,
    /// The last configuration has no successor.
    pub deadlock: bool,
}

impl Trace {
    /// Projection of the trace onto global states.
    pub fn state_run(&self) -> Vec<Valuation> {
        self.configurations.iter().map(|c| c.global.clone()).collect()
    }

    pub fn top_nodes(&self) -> Vec<&str> {
        self.configurations
            .iter()
            .filter_map(|c| c.top().map(|f| f.node.as_str()))
            .collect()
    }
}

/// One line per configuration: `<step> | <globals> | <frames>`.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.configurations.iter().enumerate() {
            writeln!(f, "{i} | {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreReport {
    /// Reachable configurations in breadth-first discovery order.
    pub visited: Vec<Configuration>,
    pub deadlocks: Vec<Configuration>,
    /// A step or stack bound cut the search short.
    pub truncated: bool,
    pub max_stack_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds { truncated: bool, visited: usize },
    Violated { trace: Trace },
}

/// The pushdown system induced by a flow graph.
#[derive(Debug, Clone)]
pub struct InducedPds {
    pub flow_graph: FlowGraph,
    /// Per procedure: domains of globals and that procedure's locals.
    pub domains: BTreeMap<String, BTreeMap<String, Domain>>,
    pub initial: Vec<Configuration>,
    owner: HashMap<NodeId, String>,
    actions: HashMap<NodeId, Action>,
    /// Main's return node and its guards, checked on entry.
    entry_check: (NodeId, Vec<Expr>),
}

/// All valuations of `vars` (ascending, lexicographic by name).
pub fn all_valuations(vars: &BTreeMap<String, Domain>) -> Result<Vec<Valuation>, PdsError> {
    let mut out = vec![Valuation::new()];
    for (name, d) in vars {
        let values = d
            .values()
            .ok_or_else(|| PdsError::InfiniteDomain(name.clone()))?;
        out = out
            .into_iter()
            .flat_map(|v| {
                values.iter().map(move |x| {
                    let mut w = v.clone();
                    w.set(name.clone(), *x);
                    w
                })
            })
            .collect();
    }
    Ok(out)
}

/// Global states satisfying `init`, in ascending order.
pub fn initial_globals(fg: &FlowGraph, init: &Expr) -> Result<Vec<Valuation>, PdsError> {
    let gdom: BTreeMap<String, Domain> = fg.globals.iter().map(|g| (g.name.clone(), g.domain)).collect();
    let mut out = Vec::new();
    for v in all_valuations(&gdom)? {
        let lookup = |n: &str| v.get(n);
        if eval_expr(init, &lookup, &lookup)? == Value::Bool(true) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(PdsError::UnsatisfiableInit);
    }
    Ok(out)
}

pub fn init_locals(p: &ProcedureFlowGraph) -> Valuation {
    p.locals
        .iter()
        .map(|l| {
            let v = p
                .init_locals
                .get(&l.name)
                .copied()
                .unwrap_or_else(|| l.domain.default_value());
            (l.name.clone(), v)
        })
        .collect()
}

impl InducedPds {
    /// Induces the system with the flow graph's own init predicate.
    pub fn new(fg: &FlowGraph) -> Result<Self, PdsError> {
        Self::with_init(fg, &fg.init_globals)
    }

    pub fn with_init(fg: &FlowGraph, init: &Expr) -> Result<Self, PdsError> {
        let mut domains = BTreeMap::new();
        let mut owner = HashMap::new();
        let mut actions = HashMap::new();
        for p in fg.procedures.values() {
            let scope = fg.scope_of(&p.name);
            for n in p.nodes.keys() {
                let a = fg.step_action(&p.name, n).expect("node of this procedure");
                for w in &a.writes {
                    if !scope.get(w).is_some_and(|d| d.is_finite()) {
                        return Err(PdsError::InfiniteDomain(w.clone()));
                    }
                }
                owner.insert(n.clone(), p.name.clone());
                actions.insert(n.clone(), a);
            }
            domains.insert(p.name.clone(), scope);
        }
        let main = &fg.procedures[&fg.main];
        let l0 = init_locals(main);
        let initial = initial_globals(fg, init)?
            .into_iter()
            .map(|g| Configuration {
                global: g,
                stack: vec![Frame {
                    node: main.entry.clone(),
                    locals: l0.clone(),
                }],
            })
            .collect();
        Ok(InducedPds {
            flow_graph: fg.clone(),
            domains,
            initial,
            owner,
            actions,
            entry_check: (main.ret.clone(), fg.entry_guards()),
        })
    }

    fn procedure_of(&self, c: &Configuration) -> Result<&ProcedureFlowGraph, PdsError> {
        let top = c
            .top()
            .ok_or_else(|| PdsError::MalformedConfiguration("empty stack".into()))?;
        let p = self
            .owner
            .get(&top.node)
            .ok_or_else(|| PdsError::MalformedConfiguration(format!("unknown node `{}`", top.node)))?;
        let proc = &self.flow_graph.procedures[p];
        let same_vars = top.locals.len() == proc.locals.len()
            && proc.locals.iter().all(|l| top.locals.get(&l.name).is_some());
        if !same_vars {
            return Err(PdsError::MalformedConfiguration(format!(
                "locals {} do not belong to `{}`",
                top.locals, proc.name
            )));
        }
        Ok(proc)
    }

    /// Whether a step from `from` may land in `frame` with `global`: a
    /// step entering main's return node must satisfy its guards.
    fn admits(&self, from: &str, frame: &Frame, global: &Valuation) -> Result<bool, PdsError> {
        let (ret, guards) = &self.entry_check;
        if frame.node != *ret || from == ret {
            return Ok(true);
        }
        let lookup = |n: &str| frame.locals.get(n).or_else(|| global.get(n));
        for g in guards {
            if eval_expr(g, &lookup, &lookup)? != Value::Bool(true) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Immediate successors, sorted and without duplicates.
    pub fn successors(&self, c: &Configuration) -> Result<Vec<Configuration>, PdsError> {
        let proc = self.procedure_of(c)?;
        let top = &c.stack[0];
        let pre = State::new(top.locals.clone(), c.global.clone());
        let posts = enumerate_posts(&self.actions[&top.node], &pre, &self.domains[&proc.name])?;
        let mut out = Vec::new();
        for e in proc.successors(&top.node) {
            for t in &posts {
                let landing = Frame {
                    node: e.to.clone(),
                    locals: t.local.clone(),
                };
                if e.label == EdgeLabel::Eps && !self.admits(&top.node, &landing, &t.global)? {
                    continue;
                }
                let mut stack = Vec::with_capacity(c.stack.len() + 1);
                if let EdgeLabel::Call(q) = &e.label {
                    let callee = &self.flow_graph.procedures[q];
                    stack.push(Frame {
                        node: callee.entry.clone(),
                        locals: init_locals(callee),
                    });
                }
                stack.push(landing);
                stack.extend_from_slice(&c.stack[1..]);
                out.push(Configuration {
                    global: t.global.clone(),
                    stack,
                });
            }
        }
        if top.node == proc.ret && proc.name != self.flow_graph.main && c.stack.len() > 1 {
            for t in &posts {
                if !self.admits(&top.node, &c.stack[1], &t.global)? {
                    continue;
                }
                out.push(Configuration {
                    global: t.global.clone(),
                    stack: c.stack[1..].to_vec(),
                });
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Breadth-first exploration from the initial configurations. At most
    /// `max_steps` configurations are visited; successors deeper than
    /// `max_stack` frames are not entered. Either bound sets `truncated`.
    pub fn explore(&self, max_steps: usize, max_stack: usize) -> Result<ExploreReport, PdsError> {
        let mut report = ExploreReport {
            visited: Vec::new(),
            deadlocks: Vec::new(),
            truncated: false,
            max_stack_depth: 0,
        };
        self.bfs(max_steps, max_stack, &mut report.truncated, |c, succs| {
            report.max_stack_depth = report.max_stack_depth.max(c.stack.len());
            if succs.is_empty() {
                report.deadlocks.push(c.clone());
            }
            report.visited.push(c.clone());
            None::<()>
        })?;
        Ok(report)
    }

    /// Generic BFS driver. `visit` sees every dequeued configuration with
    /// its successors and may stop the search by returning `Some`.
    fn bfs<T>(
        &self,
        max_steps: usize,
        max_stack: usize,
        truncated: &mut bool,
        mut visit: impl FnMut(&Configuration, &[Configuration]) -> Option<T>,
    ) -> Result<Option<T>, PdsError> {
        let mut seen: HashSet<Configuration> = HashSet::new();
        let mut queue = VecDeque::new();
        for c in &self.initial {
            if c.stack.len() > max_stack {
                *truncated = true;
                continue;
            }
            if seen.len() >= max_steps {
                *truncated = true;
                break;
            }
            if seen.insert(c.clone()) {
                queue.push_back(c.clone());
            }
        }
        while let Some(c) = queue.pop_front() {
            let succs = self.successors(&c)?;
            if let Some(t) = visit(&c, &succs) {
                return Ok(Some(t));
            }
            for s in succs {
                if seen.contains(&s) {
                    continue;
                }
                if s.stack.len() > max_stack || seen.len() >= max_steps {
                    *truncated = true;
                    continue;
                }
                seen.insert(s.clone());
                queue.push_back(s);
            }
        }
        Ok(None)
    }

    /// Checks that `phi` (over globals) holds in every reachable
    /// configuration. A violation comes with a shortest trace.
    pub fn check_invariant(
        &self,
        phi: &Expr,
        max_steps: usize,
        max_stack: usize,
    ) -> Result<Verdict, PdsError> {
        let globals: Vec<&str> = self.flow_graph.globals.iter().map(|g| g.name.as_str()).collect();
        if phi.has_primes() {
            return Err(PdsError::NonGlobalVariable(phi.to_string()));
        }
        for v in phi.unprimed_vars() {
            if !globals.contains(&v.as_str()) {
                return Err(PdsError::NonGlobalVariable(v));
            }
        }
        let holds = |c: &Configuration| -> Result<bool, PdsError> {
            let lookup = |n: &str| c.global.get(n);
            Ok(eval_expr(phi, &lookup, &lookup)? == Value::Bool(true))
        };

        let mut parent: HashMap<Configuration, Option<Configuration>> = HashMap::new();
        for c in &self.initial {
            parent.entry(c.clone()).or_insert(None);
        }
        let mut truncated = false;
        let mut visited = 0usize;
        let mut error = None;
        let found = self.bfs(max_steps, max_stack, &mut truncated, |c, succs| {
            visited += 1;
            match holds(c) {
                Ok(true) => {}
                Ok(false) => return Some(c.clone()),
                Err(e) => {
                    error = Some(e);
                    return Some(c.clone());
                }
            }
            for s in succs {
                parent.entry(s.clone()).or_insert_with(|| Some(c.clone()));
            }
            None
        })?;
        if let Some(e) = error {
            return Err(e);
        }
        let Some(bad) = found else {
            return Ok(Verdict::Holds { truncated, visited });
        };
        let mut configurations = vec![bad.clone()];
        let mut cur = bad;
        while let Some(Some(p)) = parent.get(&cur) {
            configurations.push(p.clone());
            cur = p.clone();
        }
        configurations.reverse();
        Ok(Verdict::Violated {
            trace: Trace {
                configurations,
                complete: true,
                deadlock: false,
            },
        })
    }

    /// A seeded random walk of `length` configurations, choosing uniformly
    /// among initial configurations and among successors.
    pub fn sample_run(&self, length: usize, seed: u64) -> Result<Trace, PdsError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cur = self
            .initial
            .choose(&mut rng)
            .cloned()
            .ok_or(PdsError::NoInitialConfiguration)?;
        let mut configurations = Vec::with_capacity(length);
        let mut deadlock = false;
        while configurations.len() < length {
            configurations.push(cur.clone());
            if configurations.len() == length {
                break;
            }
            let succs = self.successors(&cur)?;
            match succs.choose(&mut rng) {
                Some(next) => cur = next.clone(),
                None => {
                    deadlock = true;
                    break;
                }
            }
        }
        Ok(Trace {
            complete: configurations.len() == length,
            configurations,
            deadlock,
        })
    }
}
