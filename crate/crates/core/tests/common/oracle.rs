//! Brute-force reference for the pushdown semantics: every rewrite rule is
//! materialized by enumerating pairs of scope states, then applied to
//! configurations directly.

use std::collections::{BTreeMap, HashMap};

use flowmc_core::action::{action_of_guard, eval_action};
use flowmc_core::flow::{EdgeLabel, FlowGraph};
use flowmc_core::pds::{all_valuations, init_locals, Configuration, Frame, InducedPds};
use flowmc_core::{Action, State, Valuation};

/// Right-hand side of a materialized rewrite rule.
#[derive(Debug, Clone)]
pub enum Rhs {
    Replace(Frame),
    Push { callee: Frame, site: Frame },
    Pop,
}

/// Every rule `<g, (n, l)> -> <g', rhs>`, keyed by its left-hand side.
pub type Rules = HashMap<(Valuation, Frame), Vec<(Valuation, Rhs)>>;

/// The action a node executes: its full label, except that main's return
/// node drops its guards so that finished runs can stutter.
fn node_action(fg: &FlowGraph, proc: &str, node: &str) -> Action {
    let p = &fg.procedures[proc];
    let label = &p.nodes[node].label;
    if proc == fg.main && node == p.ret {
        label.base.clone()
    } else {
        label.action()
    }
}

/// Whether landing in `frame` with `global` after leaving `from` passes
/// the guards of main's return node.
fn enters_ok(fg: &FlowGraph, from: &str, frame: &Frame, global: &Valuation) -> bool {
    let main = &fg.procedures[&fg.main];
    if frame.node != main.ret || from == main.ret {
        return true;
    }
    let t = State::new(frame.locals.clone(), global.clone());
    main.nodes[&main.ret]
        .label
        .guards
        .iter()
        .all(|g| eval_action(&action_of_guard(g).unwrap(), &t, &t).unwrap())
}

/// Materializes every rule by enumerating all pairs of scope states of
/// each procedure. Exponential, which is fine for the small scopes here.
pub fn materialize(fg: &FlowGraph) -> Rules {
    let gdom: BTreeMap<_, _> = fg.globals.iter().map(|g| (g.name.clone(), g.domain)).collect();
    let globals = all_valuations(&gdom).unwrap();
    let mut rules: Rules = HashMap::new();
    for p in fg.procedures.values() {
        let ldom: BTreeMap<_, _> = p.locals.iter().map(|l| (l.name.clone(), l.domain)).collect();
        let locals = all_valuations(&ldom).unwrap();
        let states: Vec<State> = globals
            .iter()
            .flat_map(|g| locals.iter().map(move |l| State::new(l.clone(), g.clone())))
            .collect();
        for n in p.nodes.keys() {
            let a = node_action(fg, &p.name, n);
            for s in &states {
                let top = Frame {
                    node: n.clone(),
                    locals: s.local.clone(),
                };
                let out = rules.entry((s.global.clone(), top)).or_default();
                for t in &states {
                    let framed = gdom
                        .keys()
                        .chain(ldom.keys())
                        .all(|v| a.writes.contains(v) || s.get(v) == t.get(v));
                    if !framed || !eval_action(&a, s, t).unwrap() {
                        continue;
                    }
                    for e in p.successors(n) {
                        let landing = Frame {
                            node: e.to.clone(),
                            locals: t.local.clone(),
                        };
                        let rhs = match &e.label {
                            EdgeLabel::Eps => {
                                if !enters_ok(fg, n, &landing, &t.global) {
                                    continue;
                                }
                                Rhs::Replace(landing)
                            }
                            EdgeLabel::Call(q) => {
                                let callee = &fg.procedures[q];
                                Rhs::Push {
                                    callee: Frame {
                                        node: callee.entry.clone(),
                                        locals: init_locals(callee),
                                    },
                                    site: landing,
                                }
                            }
                        };
                        out.push((t.global.clone(), rhs));
                    }
                    if *n == p.ret && p.name != fg.main {
                        out.push((t.global.clone(), Rhs::Pop));
                    }
                }
            }
        }
    }
    rules
}

pub fn apply(fg: &FlowGraph, rules: &Rules, c: &Configuration) -> Vec<Configuration> {
    let top = &c.stack[0];
    let rest = &c.stack[1..];
    let mut out = Vec::new();
    for (g, rhs) in rules.get(&(c.global.clone(), top.clone())).into_iter().flatten() {
        let stack = match rhs {
            Rhs::Replace(f) => [std::slice::from_ref(f), rest].concat(),
            Rhs::Push { callee, site } => [&[callee.clone(), site.clone()][..], rest].concat(),
            Rhs::Pop => {
                if rest.is_empty() || !enters_ok(fg, &top.node, &rest[0], g) {
                    continue;
                }
                rest.to_vec()
            }
        };
        out.push(Configuration {
            global: g.clone(),
            stack,
        });
    }
    out.sort();
    out.dedup();
    out
}

/// Compares on-demand successors with the materialized rules on every
/// configuration reachable within the bounds.
pub fn agrees_with_oracle(fg: &FlowGraph, max_steps: usize, max_stack: usize) -> Result<usize, String> {
    let pds = InducedPds::new(fg).map_err(|e| e.to_string())?;
    let rules = materialize(fg);
    let report = pds.explore(max_steps, max_stack).unwrap();
    for c in &report.visited {
        let got = pds.successors(c).unwrap();
        let want = apply(fg, &rules, c);
        if got != want {
            return Err(format!("at {c}:\n got  {got:?}\n want {want:?}"));
        }
    }
    Ok(report.visited.len())
}
