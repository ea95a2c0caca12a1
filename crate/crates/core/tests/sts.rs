mod common;

use proptest::prelude::*;

use common::{arb_program, config, flow, FINITE};
use flowmc_core::flow::translate;
use flowmc_core::pds::{InducedPds, PdsError};
use flowmc_core::sts::{
    compare_with_pds, execute_sts, mutate, pop_entry, push_entry, sts_of_flow_graph, DeadlockCause,
    EquivalenceVerdict, Interpreter, Mutation, StackEntry, StackOp, Sts, StsError,
};
use flowmc_core::Value;

const CAPACITY: usize = 4;

fn sts(name: &str) -> Sts {
    sts_of_flow_graph(&flow(name), CAPACITY).unwrap()
}

fn crosscheck(name: &str, sts: &Sts) -> EquivalenceVerdict {
    let pds = InducedPds::new(&flow(name)).unwrap();
    compare_with_pds(sts, &pds, 100_000, CAPACITY + 1).unwrap()
}

#[test]
fn encoding_matches_pds_on_finite_fixtures() {
    for name in FINITE {
        let v = crosscheck(name, &sts(name));
        assert!(matches!(v, EquivalenceVerdict::Equivalent { .. }), "{name}: {v}");
    }
}

#[test]
fn every_mutation_is_caught() {
    let mut caught = 0;
    for m in Mutation::ALL {
        let mutant = mutate(&sts("stee"), m).unwrap_or_else(|| panic!("{m} does not apply to stee"));
        let v = crosscheck("stee", &mutant);
        assert!(matches!(v, EquivalenceVerdict::Divergent { .. }), "{m}: {v}");
        caught += 1;
    }
    assert!(caught >= 5);
}

#[test]
fn mutations_are_caught_beyond_stee() {
    for name in ["call_return", "guarded_branch", "stee_mode"] {
        for m in Mutation::ALL {
            let Some(mutant) = mutate(&sts(name), m) else { continue };
            let v = crosscheck(name, &mutant);
            assert!(matches!(v, EquivalenceVerdict::Divergent { .. }), "{name} {m}: {v}");
        }
    }
}

#[test]
fn mutation_names_round_trip() {
    for m in Mutation::ALL {
        assert_eq!(m.name().parse::<Mutation>(), Ok(m));
    }
    assert!("bogus".parse::<Mutation>().is_err());
}

#[test]
fn stee_action_names() {
    let names: Vec<String> = sts("stee").actions.iter().map(|a| a.name.clone()).collect();
    assert_eq!(
        names,
        [
            "m1_to_m2",
            "m1_to_m4",
            "m2_call_steering",
            "m3_to_m1",
            "m4_stutter",
            "s1_to_s2",
            "s2_to_s3",
            "s3_to_s4",
            "s4_return",
        ]
    );
}

#[test]
fn entering_main_return_checks_its_guards() {
    let s = sts("stee");
    let a = s.action("m1_to_m4").unwrap();
    assert!(a.body.iter().any(|c| c.to_string() == "1 == 0"), "{:?}", a.body);
    let stutter = s.action("m4_stutter").unwrap();
    assert!(stutter.guards.is_empty());
    assert_eq!(stutter.source.as_deref(), Some("n_m_4"));
    assert_eq!(stutter.target, "n_m_4");
}

#[test]
fn zero_capacity_overflows_at_the_first_call() {
    let s = sts_of_flow_graph(&flow("call_return"), 0).unwrap();
    let r = execute_sts(&s, 10_000).unwrap();
    assert!(!r.deadlocks.is_empty());
    assert!(r.deadlocks.iter().all(|(_, c)| *c == DeadlockCause::StackOverflow));
}

#[test]
fn bounds_must_fit_the_capacity() {
    let fg = flow("call_return");
    let s = sts_of_flow_graph(&fg, 2).unwrap();
    let pds = InducedPds::new(&fg).unwrap();
    assert_eq!(
        compare_with_pds(&s, &pds, 1000, 4),
        Err(StsError::BoundMismatch { max_stack: 4, capacity: 2 })
    );
    assert_eq!(
        compare_with_pds(&s, &pds, 1000, 0),
        Err(StsError::BoundMismatch { max_stack: 0, capacity: 2 })
    );
    assert!(compare_with_pds(&s, &pds, 1000, 3).is_ok());
}

#[test]
fn small_step_budget_is_inconclusive() {
    let v = crosscheck_with_steps("stee", 5);
    assert!(matches!(v, EquivalenceVerdict::Inconclusive { .. }), "{v}");
}

fn crosscheck_with_steps(name: &str, steps: usize) -> EquivalenceVerdict {
    let fg = flow(name);
    let pds = InducedPds::new(&fg).unwrap();
    compare_with_pds(&sts(name), &pds, steps, CAPACITY + 1).unwrap()
}

/// Unbounded domains can be encoded (the emitters need that) but not executed.
#[test]
fn unbounded_domains_are_not_executed() {
    let s = sts_of_flow_graph(&flow("unbounded"), CAPACITY).unwrap();
    assert_eq!(execute_sts(&s, 100), Err(StsError::InfiniteDomain("count".into())));
}

#[test]
fn execution_is_deterministic() {
    for name in FINITE {
        let s = sts(name);
        assert_eq!(execute_sts(&s, 100_000).unwrap(), execute_sts(&s, 100_000).unwrap(), "{name}");
    }
}

#[test]
fn stee_state_count_matches_pds() {
    let r = execute_sts(&sts("stee"), 100_000).unwrap();
    assert_eq!(r.visited.len(), 45);
    assert!(r.deadlocks.is_empty());
    assert!(!r.truncated);
}

fn entry_strategy() -> impl Strategy<Value = StackEntry> {
    (
        prop::sample::select(vec!["n_m_1", "n_m_3", "n_p1_2"]),
        prop::collection::vec(prop_oneof![any::<bool>().prop_map(Value::Bool), (0i64..3).prop_map(Value::Int)], 0..3),
    )
        .prop_map(|(n, saved)| StackEntry { node: n.into(), saved })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn push_then_pop_is_identity(
        stack in prop::collection::vec(entry_strategy(), 0..5),
        e in entry_strategy(),
        capacity in 0usize..7,
    ) {
        match push_entry(&stack, e.clone(), capacity) {
            Some(pushed) => {
                prop_assert!(stack.len() < capacity);
                prop_assert_eq!(pushed.len(), stack.len() + 1);
                prop_assert_eq!(pop_entry(&pushed), Some((e, stack)));
            }
            None => prop_assert!(stack.len() >= capacity),
        }
    }

    #[test]
    fn pop_then_push_restores(stack in prop::collection::vec(entry_strategy(), 1..5)) {
        let (top, rest) = pop_entry(&stack).unwrap();
        prop_assert_eq!(push_entry(&rest, top, stack.len()), Some(stack));
    }

    #[test]
    fn encoding_matches_pds_on_generated_programs(p in arb_program()) {
        let fg = translate(&p).unwrap();
        let pds = match InducedPds::new(&fg) {
            Ok(pds) => pds,
            Err(PdsError::UnsatisfiableInit) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let s = sts_of_flow_graph(&fg, 3).unwrap();
        let v = compare_with_pds(&s, &pds, 20_000, 4).unwrap();
        prop_assert!(matches!(v, EquivalenceVerdict::Equivalent { .. }), "{}", v);
    }

    /// Every action tests `n`, and a step only uses actions whose source is
    /// the current node; pops also need a matching stack top.
    #[test]
    fn dispatch_follows_the_node_variable(p in arb_program()) {
        let fg = translate(&p).unwrap();
        let s = sts_of_flow_graph(&fg, 3).unwrap();
        prop_assert!(s.actions.iter().all(|a| a.source.is_some()));
        let Ok(r) = execute_sts(&s, 2_000) else { return Ok(()) };
        let interp = Interpreter::new(&s).unwrap();
        for st in r.visited.iter().take(200) {
            let (steps, _) = interp.steps(st).unwrap();
            for (i, t) in steps {
                let a = &s.actions[i];
                prop_assert_eq!(a.source.as_ref(), Some(&st.node));
                prop_assert_eq!(&t.node, &a.target);
                match &a.stack {
                    StackOp::Keep => prop_assert_eq!(&t.stack, &st.stack),
                    StackOp::Push { .. } => prop_assert_eq!(&t.stack[1..], &st.stack[..]),
                    StackOp::Pop { site, .. } => {
                        prop_assert_eq!(&st.stack[0].node, site);
                        prop_assert_eq!(&t.stack[..], &st.stack[1..]);
                    }
                }
            }
        }
    }
}
