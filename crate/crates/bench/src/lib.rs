//! Fixture access for the pipeline benchmarks.

use std::path::PathBuf;

use flowmc_core::flow::{translate, FlowGraph};
use flowmc_core::{load_program, AnnotatedProgram};

pub fn fixture(name: &str) -> AnnotatedProgram {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}.apg"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load_program(&text).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn flow(name: &str) -> FlowGraph {
    translate(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}
