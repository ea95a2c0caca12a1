mod common;

use std::fs;

use proptest::prelude::*;

use common::{arb_program, config, fixtures_dir, flow, TRANSLATABLE};
use flowmc_core::emit::{
    emit_dot, emit_nuxmv, emit_tla, lint_smv, lint_tla, normalize_header, scan_smv, scan_tla, EmitError,
    EmitterOptions,
};
use flowmc_core::flow::translate;
use flowmc_core::sts::{sts_of_flow_graph, Sts, DEFAULT_STACK_CAPACITY};

const DIGEST: &str = "0000000000000000000000000000000000000000000000000000000000000000";

fn sts(name: &str) -> Sts {
    sts_of_flow_graph(&flow(name), DEFAULT_STACK_CAPACITY).unwrap()
}

fn opts(s: &Sts) -> EmitterOptions {
    EmitterOptions::for_sts(s, DIGEST)
}

/// Every emitted text of a fixture, by file extension. TLA+ needs finite
/// domains, so the unbounded fixture has no `.tla`/`.cfg`.
fn outputs(name: &str) -> Vec<(&'static str, String)> {
    let fg = flow(name);
    let s = sts(name);
    let mut out = vec![("dot", emit_dot(&fg, DIGEST))];
    if let Ok((tla, cfg)) = emit_tla(&s, &opts(&s)) {
        out.push(("tla", tla));
        out.push(("cfg", cfg));
    }
    out.push(("smv", emit_nuxmv(&s, &opts(&s)).unwrap()));
    out
}

/// Emitted models are pinned under `fixtures/golden/`, header normalized.
/// Set `UPDATE_GOLDEN=1` to rewrite them after an intended change.
#[test]
fn emitted_models_match_goldens() {
    let dir = fixtures_dir().join("golden");
    let bless = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut checked = 0;
    for name in TRANSLATABLE {
        for (ext, text) in outputs(name) {
            let text = normalize_header(&text);
            let path = dir.join(format!("{name}.{ext}"));
            if bless {
                fs::write(&path, &text).unwrap();
            }
            let pinned = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(text, pinned, "{}", path.display());
            checked += 1;
        }
    }
    assert_eq!(checked, 4 * TRANSLATABLE.len() - 2);
}

#[test]
fn backends_agree_on_actions() {
    for name in TRANSLATABLE {
        let s = sts(name);
        let smv = scan_smv(&emit_nuxmv(&s, &opts(&s)).unwrap()).unwrap();
        assert_eq!(smv.len(), s.actions.len(), "{name}");
        if let Ok((tla, _)) = emit_tla(&s, &opts(&s)) {
            assert_eq!(scan_tla(&tla).unwrap(), smv, "{name}");
        }
    }
}

#[test]
fn emitted_models_lint_clean() {
    for name in TRANSLATABLE {
        let s = sts(name);
        assert_eq!(lint_smv(&emit_nuxmv(&s, &opts(&s)).unwrap()), Vec::<String>::new(), "{name}");
        if let Ok((tla, _)) = emit_tla(&s, &opts(&s)) {
            assert_eq!(lint_tla(&tla), Vec::<String>::new(), "{name}");
        }
    }
}

#[test]
fn header_records_version_and_digest() {
    let s = sts("stee");
    let (tla, _) = emit_tla(&s, &opts(&s)).unwrap();
    let first = tla.lines().next().unwrap();
    assert!(first.starts_with("\\* flowmc "), "{first}");
    assert!(first.ends_with(&format!("source sha256:{DIGEST}")), "{first}");
    let smv = emit_nuxmv(&s, &opts(&s)).unwrap();
    assert!(smv.starts_with("-- flowmc "));
    assert_eq!(normalize_header(&normalize_header(&smv)), normalize_header(&smv));
}

#[test]
fn header_is_the_only_digest_dependence() {
    let s = sts("stee");
    let other = EmitterOptions::for_sts(&s, "f".repeat(64));
    assert_ne!(emit_nuxmv(&s, &opts(&s)).unwrap(), emit_nuxmv(&s, &other).unwrap());
    assert_eq!(
        normalize_header(&emit_nuxmv(&s, &opts(&s)).unwrap()),
        normalize_header(&emit_nuxmv(&s, &other).unwrap())
    );
}

#[test]
fn tla_refuses_unbounded_domains() {
    let s = sts("unbounded");
    assert_eq!(emit_tla(&s, &opts(&s)), Err(EmitError::UnboundedDomain("count".into())));
}

#[test]
fn stack_capacity_must_cover_the_call_depth() {
    let s = sts_of_flow_graph(&flow("stee"), 0).unwrap();
    assert!(matches!(
        emit_nuxmv(&s, &opts(&s)),
        Err(EmitError::CapacityTooSmall { needed: 1, capacity: 0 })
    ));
    let s = sts_of_flow_graph(&flow("recursion"), 0).unwrap();
    assert!(matches!(emit_nuxmv(&s, &opts(&s)), Err(EmitError::CapacityTooSmall { .. })));
}

#[test]
fn module_names_are_checked() {
    let s = sts("stee");
    let bad = EmitterOptions {
        module_name: "9lives".into(),
        ..opts(&s)
    };
    assert_eq!(emit_tla(&s, &bad), Err(EmitError::InvalidModuleName("9lives".into())));
}

#[test]
fn reserved_names_are_renamed() {
    let text = "program p\nglobal n : bool\nglobal st : int 0..1\nprocedure main\n  block b\n    point a : n := !n\n    point r : return\n    edge a -> r\n    entry a\n    exit r\n";
    let fg = translate(&flowmc_core::load_program(text).unwrap()).unwrap();
    let s = sts_of_flow_graph(&fg, 2).unwrap();
    let (tla, _) = emit_tla(&s, &opts(&s)).unwrap();
    let smv = emit_nuxmv(&s, &opts(&s)).unwrap();
    assert!(tla.contains("n_") && tla.contains("st_"));
    assert_eq!(lint_tla(&tla), Vec::<String>::new());
    assert_eq!(lint_smv(&smv), Vec::<String>::new());
    assert_eq!(scan_tla(&tla).unwrap(), scan_smv(&smv).unwrap());
}

#[test]
fn dot_of_minimal_program() {
    let dot = emit_dot(&flow("minimal"), DIGEST);
    assert!(dot.starts_with("// flowmc "));
    assert!(dot.contains("digraph"));
    assert_eq!(dot.matches("->").count(), 1);
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn generated_models_agree_and_lint_clean(p in arb_program()) {
        let fg = translate(&p).unwrap();
        let s = sts_of_flow_graph(&fg, 3).unwrap();
        let (tla, cfg) = emit_tla(&s, &opts(&s)).unwrap();
        let smv = emit_nuxmv(&s, &opts(&s)).unwrap();
        prop_assert_eq!(lint_tla(&tla), Vec::<String>::new());
        prop_assert_eq!(lint_smv(&smv), Vec::<String>::new());
        prop_assert_eq!(scan_tla(&tla).unwrap(), scan_smv(&smv).unwrap());
        prop_assert_eq!(emit_tla(&s, &opts(&s)).unwrap(), (tla, cfg));
        prop_assert_eq!(emit_nuxmv(&s, &opts(&s)).unwrap(), smv);
        prop_assert_eq!(emit_dot(&fg, DIGEST), emit_dot(&fg, DIGEST));
    }
}
