//! Shared helpers for the integration tests: fixture access, a fixed-seed
//! proptest configuration, and a generator of well-formed programs.

#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use indexmap::IndexMap;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use flowmc_core::expr::{BinaryOp, UnaryOp};
use flowmc_core::flow::{translate, FlowGraph};
use flowmc_core::ir::{AnnotatedBlock, AnnotatedProcedure, BlockEdge, Contract, Statement};
use flowmc_core::{load_program, AnnotatedProgram, Domain, Expr, Value, VarDecl};

/// Fixtures that translate and have finite domains.
pub const FINITE: &[&str] = &[
    "annotated_call",
    "call_return",
    "guarded_branch",
    "minimal",
    "recursion",
    "stee",
    "stee_mode",
    "stee_mode_safe",
    "while_loop",
];

/// Every fixture that translates, including the unbounded one.
pub const TRANSLATABLE: &[&str] = &[
    "annotated_call",
    "call_return",
    "guarded_branch",
    "minimal",
    "recursion",
    "stee",
    "stee_mode",
    "stee_mode_safe",
    "unbounded",
    "while_loop",
];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_text(name: &str) -> String {
    let path = fixtures_dir().join(format!("{name}.apg"));
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn program(name: &str) -> AnnotatedProgram {
    load_program(&fixture_text(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn flow(name: &str) -> FlowGraph {
    translate(&program(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// 256 cases from a fixed seed, no failure files.
pub fn config() -> Config {
    Config {
        cases: 256,
        rng_seed: RngSeed::Fixed(0x5eed_f10c),
        failure_persistence: None,
        ..Config::default()
    }
}

fn bin(op: BinaryOp, l: Expr, r: Expr) -> Expr {
    Expr::bin(op, l, r)
}

/// Variables in scope, split by type, with the range of each int.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub bools: Vec<String>,
    pub ints: Vec<(String, i64)>,
}

impl Scope {
    fn of(vars: &[VarDecl]) -> Scope {
        let mut s = Scope::default();
        for v in vars {
            match v.domain {
                Domain::Bool => s.bools.push(v.name.clone()),
                Domain::Range(_, hi) => s.ints.push((v.name.clone(), hi)),
                Domain::Int => s.ints.push((v.name.clone(), 2)),
            }
        }
        s
    }
}

pub fn int_expr(scope: &Scope) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![(0i64..=2).prop_map(Expr::Int).boxed()];
    if !scope.ints.is_empty() {
        let names: Vec<String> = scope.ints.iter().map(|(n, _)| n.clone()).collect();
        leaves.push(prop::sample::select(names).prop_map(Expr::var).boxed());
    }
    let leaf = prop::strategy::Union::new(leaves);
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::Add, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::Sub, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::Mul, l, r)),
            inner.prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
        ]
    })
    .boxed()
}

pub fn bool_expr(scope: &Scope) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![any::<bool>().prop_map(Expr::Bool).boxed()];
    if !scope.bools.is_empty() {
        leaves.push(prop::sample::select(scope.bools.clone()).prop_map(Expr::var).boxed());
    }
    let ints = int_expr(scope);
    let cmp = prop::sample::select(vec![
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
    ]);
    leaves.push((cmp, ints.clone(), ints).prop_map(|(op, l, r)| bin(op, l, r)).boxed());
    let leaf = prop::strategy::Union::new(leaves);
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::And, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::Or, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinaryOp::Implies, l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| bin(BinaryOp::Eq, l, r)),
        ]
    })
    .boxed()
}

/// Expression of the type of `decl`.
fn expr_for(decl: &VarDecl, scope: &Scope) -> BoxedStrategy<Expr> {
    match decl.domain {
        Domain::Bool => bool_expr(scope),
        _ => int_expr(scope),
    }
}

/// Shape chosen before any expression: which variables exist and how many
/// points each procedure has.
#[derive(Debug, Clone)]
struct Skeleton {
    globals: Vec<VarDecl>,
    /// Per procedure: optional bool local with its initial value, and the
    /// number of points before the exit.
    procs: Vec<(Option<bool>, usize)>,
}

fn skeleton() -> impl Strategy<Value = Skeleton> {
    let global = prop_oneof![Just(Domain::Bool), (1i64..=2).prop_map(|hi| Domain::Range(0, hi))];
    (
        prop::collection::vec(global, 1..=2),
        prop::collection::vec((prop::option::of(any::<bool>()), 1usize..=4), 1..=3),
    )
        .prop_map(|(doms, procs)| Skeleton {
            globals: doms
                .into_iter()
                .enumerate()
                .map(|(i, d)| VarDecl::new(format!("g{i}"), d))
                .collect(),
            procs,
        })
}

/// What a non-exit point does before its expression is drawn.
#[derive(Debug, Clone, Copy)]
enum PointKind {
    Skip,
    /// Assign to the variable with this index in scope order.
    Assign(usize),
    /// Call the procedure this many places later (wrapping to a skip if
    /// there is none).
    Call(usize),
    Jump,
}

fn point_kind() -> impl Strategy<Value = PointKind> {
    prop_oneof![
        2 => Just(PointKind::Skip),
        4 => (0usize..8).prop_map(PointKind::Assign),
        3 => (1usize..3).prop_map(PointKind::Call),
        1 => Just(PointKind::Jump),
    ]
}

fn proc_name(i: usize) -> String {
    if i == 0 {
        "main".into()
    } else {
        format!("p{i}")
    }
}

fn procedure(
    sk: &Skeleton,
    i: usize,
) -> BoxedStrategy<AnnotatedProcedure> {
    let (local, npoints) = sk.procs[i];
    let name = proc_name(i);
    let nprocs = sk.procs.len();
    let mut vars = sk.globals.clone();
    if local.is_some() {
        vars.push(VarDecl::new("l", Domain::Bool));
    }
    let scope = Scope::of(&vars);
    let gscope = Scope::of(&sk.globals);
    let kinds = prop::collection::vec(point_kind(), npoints);
    // Guards on the chain edges and on one optional forward skip.
    let guards = prop::collection::vec(prop::option::weighted(0.3, bool_expr(&scope)), npoints);
    let skip = prop::option::weighted(0.4, (0..npoints, 2..=npoints + 1, bool_expr(&scope)));
    let entry_contract = if i > 0 {
        prop::option::weighted(0.35, contract(&gscope, &sk.globals)).boxed()
    } else {
        Just(None).boxed()
    };
    let aux_contract = prop::option::weighted(0.5, contract(&scope, &vars));
    let aux_assign = (0..vars.len()).prop_flat_map({
        let vars = vars.clone();
        let scope = scope.clone();
        move |k| expr_for(&vars[k], &scope).prop_map(move |e| (k, e))
    });
    let assigns = prop::collection::vec(
        (0..vars.len()).prop_flat_map({
            let vars = vars.clone();
            let scope = scope.clone();
            move |k| expr_for(&vars[k], &scope).prop_map(move |e| (k, e))
        }),
        npoints,
    );
    (kinds, guards, skip, entry_contract, aux_contract, aux_assign, assigns)
        .prop_map(move |(kinds, guards, skip, entry_contract, aux_contract, aux_assign, assigns)| {
            let mut points = IndexMap::new();
            let mut jumped = false;
            for (k, kind) in kinds.iter().enumerate() {
                let stmt = match *kind {
                    PointKind::Skip => Statement::Skip,
                    PointKind::Assign(_) => {
                        let (v, e) = &assigns[k];
                        Statement::Assign {
                            target: vars[*v].name.clone(),
                            expr: e.clone(),
                        }
                    }
                    PointKind::Call(d) if i + d < nprocs => Statement::Call(proc_name(i + d)),
                    PointKind::Jump if !jumped => {
                        jumped = true;
                        Statement::Jump("aux".into())
                    }
                    _ => Statement::Skip,
                };
                points.insert(format!("v{k}"), stmt);
            }
            let exit = format!("v{npoints}");
            points.insert(exit.clone(), Statement::Return);
            let mut edges: Vec<BlockEdge> = (0..npoints)
                .map(|k| BlockEdge {
                    from: format!("v{k}"),
                    to: format!("v{}", k + 1),
                    guard: guards[k].clone(),
                })
                .collect();
            if let Some((from, to, g)) = &skip {
                if *to > from + 1 && *to <= npoints {
                    edges.push(BlockEdge {
                        from: format!("v{from}"),
                        to: format!("v{to}"),
                        guard: Some(g.clone()),
                    });
                }
            }
            let mut blocks = IndexMap::new();
            blocks.insert(
                "body".to_string(),
                AnnotatedBlock {
                    id: "body".into(),
                    points,
                    edges,
                    entry: "v0".into(),
                    exit,
                    contract: entry_contract.clone().unwrap_or(Contract::Empty),
                },
            );
            if jumped {
                let (v, e) = aux_assign.clone();
                blocks.insert(
                    "aux".to_string(),
                    AnnotatedBlock {
                        id: "aux".into(),
                        points: IndexMap::from([(
                            "a".to_string(),
                            Statement::Assign {
                                target: vars[v].name.clone(),
                                expr: e,
                            },
                        )]),
                        edges: Vec::new(),
                        entry: "a".into(),
                        exit: "a".into(),
                        contract: aux_contract.clone().unwrap_or(Contract::Empty),
                    },
                );
            }
            let (locals, init_locals) = match local {
                Some(v) => (
                    vec![VarDecl::new("l", Domain::Bool)],
                    BTreeMap::from([("l".to_string(), Value::Bool(v))]),
                ),
                None => (Vec::new(), BTreeMap::new()),
            };
            AnnotatedProcedure {
                name: name.clone(),
                locals,
                init_locals,
                blocks,
                entry_block: "body".into(),
            }
        })
        .boxed()
}

/// A contract over `scope` assigning a subset of `vars`. Ensures may
/// relate a variable to the old value of another of the same type.
fn contract(scope: &Scope, vars: &[VarDecl]) -> BoxedStrategy<Contract> {
    let n = vars.len();
    let vars = vars.to_vec();
    let scope = scope.clone();
    (
        prop::sample::subsequence((0..n).collect::<Vec<_>>(), 0..=n),
        bool_expr(&scope),
        prop::option::of(bool_expr(&scope)),
        prop::option::of((0..n, 0..n)),
    )
        .prop_map(move |(assigned, requires, extra, link)| {
            let mut ensures = vec![extra.unwrap_or(Expr::Bool(true))];
            if let Some((a, b)) = link {
                if vars[a].domain.ty() == vars[b].domain.ty() {
                    ensures.push(Expr::eq(Expr::var(vars[a].name.clone()), Expr::Old(vars[b].name.clone())));
                }
            }
            Contract::Spec {
                requires,
                ensures: Expr::conjoin(ensures),
                assigns: assigned.into_iter().map(|k| vars[k].name.clone()).collect(),
            }
        })
        .boxed()
}

/// Well-formed programs with one or two small globals, up to three
/// procedures calling only later ones, guards, and optional contracts and
/// jumps. They always translate and have finite domains.
pub fn arb_program() -> impl Strategy<Value = AnnotatedProgram> {
    skeleton().prop_flat_map(|sk| {
        let procs: Vec<BoxedStrategy<AnnotatedProcedure>> =
            (0..sk.procs.len()).map(|i| procedure(&sk, i)).collect();
        let gscope = Scope::of(&sk.globals);
        let init = prop_oneof![Just(Expr::Bool(true)), bool_expr(&gscope)];
        let globals = sk.globals.clone();
        (procs, init).prop_map(move |(procs, init)| AnnotatedProgram {
            name: "generated".into(),
            main: "main".into(),
            globals: globals.clone(),
            init_globals: init,
            procedures: procs.into_iter().map(|p| (p.name.clone(), p)).collect(),
        })
    })
}
