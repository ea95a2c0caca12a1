mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use common::{bool_expr, config, int_expr, Scope};
use flowmc_core::action::{
    action_of_contract, action_of_guard, enumerate_posts, eval_action, id_action,
};
use flowmc_core::ir::Contract;
use flowmc_core::pds::all_valuations;
use flowmc_core::{Action, Domain, Expr, State, Valuation, Value};

/// Three variables, domains of size 2, 3 and 4.
fn domains() -> BTreeMap<String, Domain> {
    BTreeMap::from([
        ("x".to_string(), Domain::Bool),
        ("y".to_string(), Domain::Range(0, 2)),
        ("z".to_string(), Domain::Range(0, 3)),
    ])
}

fn scope() -> Scope {
    Scope {
        bools: vec!["x".into()],
        ints: vec![("y".into(), 2), ("z".into(), 3)],
    }
}

fn states() -> Vec<State> {
    all_valuations(&domains())
        .unwrap()
        .into_iter()
        .map(|v| State::new(Valuation::new(), v))
        .collect()
}

/// Primes the variables whose bit is set in `mask` (x, y, z).
fn prime_some(e: &Expr, mask: u8) -> Expr {
    e.map_vars(&mut |n, primed| {
        let bit = match n {
            "x" => 1,
            "y" => 2,
            _ => 4,
        };
        if primed || mask & bit != 0 {
            Expr::primed(n)
        } else {
            Expr::var(n)
        }
    })
}

fn conjunct() -> impl Strategy<Value = Expr> {
    let s = scope();
    prop_oneof![
        (bool_expr(&s), 0u8..8).prop_map(|(e, m)| prime_some(&e, m)),
        (int_expr(&s), prop::sample::select(vec!["y", "z"]), 0u8..8)
            .prop_map(|(e, v, m)| Expr::eq(Expr::primed(v), prime_some(&e, m))),
        (bool_expr(&s), 0u8..8).prop_map(|(e, m)| Expr::eq(Expr::primed("x"), prime_some(&e, m))),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(|v| {
            let d = domains()[v];
            Expr::eq(Expr::primed(v), Expr::Any(d))
        }),
    ]
}

fn arb_action() -> impl Strategy<Value = Action> {
    prop::collection::vec(conjunct(), 1..=3).prop_map(|cs| Action::new(Expr::conjoin(cs)))
}

fn arb_state() -> impl Strategy<Value = State> {
    (0usize..24).prop_map(|i| states()[i].clone())
}

fn agree_outside(a: &Action, s: &State, t: &State) -> bool {
    s.global
        .iter()
        .all(|(k, v)| a.writes.contains(k) || t.get(k) == Some(v))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn identity_relates_exactly_agreeing_states(s in arb_state(), t in arb_state(), mask in 0u8..8) {
        let vars: Vec<String> = ["x", "y", "z"]
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, v)| v.to_string())
            .collect();
        let id = id_action(&vars);
        let agree = vars.iter().all(|v| s.get(v) == t.get(v));
        prop_assert_eq!(eval_action(&id, &s, &t).unwrap(), agree);
        prop_assert!(eval_action(&id, &s, &s).unwrap());
    }

    #[test]
    fn conjunction_is_pointwise_and(a in arb_action(), b in arb_action(), s in arb_state(), t in arb_state()) {
        let both = eval_action(&a.and(&b), &s, &t).unwrap();
        prop_assert_eq!(both, eval_action(&a, &s, &t).unwrap() && eval_action(&b, &s, &t).unwrap());
    }

    #[test]
    fn enumerate_posts_matches_brute_force(a in arb_action()) {
        let doms = domains();
        let all = states();
        for pre in &all {
            let posts = enumerate_posts(&a, pre, &doms).unwrap();
            let want: Vec<State> = all
                .iter()
                .filter(|t| agree_outside(&a, pre, t) && eval_action(&a, pre, t).unwrap())
                .cloned()
                .collect();
            let got: BTreeSet<&State> = posts.iter().collect();
            prop_assert_eq!(got.len(), posts.len(), "duplicate posts");
            prop_assert_eq!(got, want.iter().collect::<BTreeSet<_>>(), "pre {:?}", pre);
        }
    }

    #[test]
    fn guards_ignore_the_post_state(b in bool_expr(&scope()), s in arb_state(), t in arb_state(), u in arb_state()) {
        let g = action_of_guard(&b).unwrap();
        prop_assert_eq!(eval_action(&g, &s, &t).unwrap(), eval_action(&g, &s, &u).unwrap());
    }

    #[test]
    fn contracts_keep_unassigned_variables(
        requires in bool_expr(&scope()),
        ensures in bool_expr(&scope()),
        assigns in prop::sample::subsequence(vec!["x", "y", "z"], 0..=3),
    ) {
        let c = Contract::Spec {
            requires,
            ensures,
            assigns: assigns.iter().map(|s| s.to_string()).collect(),
        };
        let a = action_of_contract(&c, &domains()).unwrap();
        for pre in states() {
            for post in enumerate_posts(&a, &pre, &domains()).unwrap() {
                for v in ["x", "y", "z"] {
                    if !assigns.contains(&v) {
                        prop_assert_eq!(pre.get(v), post.get(v), "{} changed", v);
                    }
                }
            }
        }
    }
}

#[test]
fn havoc_contract_reaches_every_assignment() {
    let c = Contract::Spec {
        requires: Expr::Bool(true),
        ensures: Expr::Bool(true),
        assigns: vec!["x".into(), "y".into()],
    };
    let a = action_of_contract(&c, &domains()).unwrap();
    let pre = &states()[0];
    let posts = enumerate_posts(&a, pre, &domains()).unwrap();
    assert_eq!(posts.len(), 6);
    assert!(posts.iter().all(|p| p.get("z") == pre.get("z")));
}

#[test]
fn unsatisfiable_guard_has_no_posts() {
    let a = action_of_guard(&Expr::eq(Expr::Int(1), Expr::Int(0))).unwrap();
    for pre in states() {
        assert!(enumerate_posts(&a, &pre, &domains()).unwrap().is_empty());
    }
}

#[test]
fn primed_guard_is_rejected() {
    assert!(action_of_guard(&Expr::primed("x")).is_err());
}

#[test]
fn posts_come_in_lexicographic_order() {
    let a = Action::new(Expr::and(
        Expr::eq(Expr::primed("y"), Expr::Any(Domain::Range(0, 2))),
        Expr::eq(Expr::primed("x"), Expr::Any(Domain::Bool)),
    ));
    let posts = enumerate_posts(&a, &states()[0], &domains()).unwrap();
    let keys: Vec<(Value, Value)> = posts
        .iter()
        .map(|p| (p.get("x").unwrap(), p.get("y").unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 6);
}
