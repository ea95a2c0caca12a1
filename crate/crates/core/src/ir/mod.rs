//! Annotated programs: procedures made of labelled code-block graphs whose
//! blocks may carry requires/ensures/assigns contracts.

mod parse;
mod validate;
mod write;

use std::collections::BTreeMap;

use indexmap::IndexMap;

use crate::diag::Diagnostic;
use crate::expr::Expr;
use crate::value::{Domain, Value, VarDecl};

pub use parse::parse_program;
pub use validate::validate_program;
pub use write::serialize_program;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedProgram {
    pub name: String,
    pub main: String,
    pub globals: Vec<VarDecl>,
    /// Predicate over globals describing the initial global states.
    pub init_globals: Expr,
    pub procedures: IndexMap<String, AnnotatedProcedure>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedProcedure {
    pub name: String,
    pub locals: Vec<VarDecl>,
    pub init_locals: BTreeMap<String, Value>,
    pub blocks: IndexMap<String, AnnotatedBlock>,
    pub entry_block: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedBlock {
    pub id: String,
    /// Control points with their statements, in declaration order.
    pub points: IndexMap<String, Statement>,
    pub edges: Vec<BlockEdge>,
    pub entry: String,
    pub exit: String,
    pub contract: Contract,
}

/// Intra-block control edge; `guard == None` is the empty path condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEdge {
    pub from: String,
    pub to: String,
    pub guard: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Assign { target: String, expr: Expr },
    Jump(String),
    Call(String),
    Return,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contract {
    Empty,
    Spec {
        requires: Expr,
        ensures: Expr,
        assigns: Vec<String>,
    },
}

impl Contract {
    pub fn is_empty(&self) -> bool {
        matches!(self, Contract::Empty)
    }
}

impl AnnotatedProgram {
    pub fn global(&self, name: &str) -> Option<&VarDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Contract on the entry block of `proc`, if that procedure exists.
    pub fn entry_contract(&self, proc: &str) -> Option<&Contract> {
        let p = self.procedures.get(proc)?;
        p.blocks.get(&p.entry_block).map(|b| &b.contract)
    }

    /// Domains of globals plus the locals of `proc`, keyed by name.
    pub fn scope_of(&self, proc: &str) -> BTreeMap<String, Domain> {
        let mut out: BTreeMap<String, Domain> = self
            .globals
            .iter()
            .map(|g| (g.name.clone(), g.domain))
            .collect();
        if let Some(p) = self.procedures.get(proc) {
            out.extend(p.locals.iter().map(|l| (l.name.clone(), l.domain)));
        }
        out
    }

    /// Names of procedures that contain a call to `proc`, in declaration order.
    pub fn callers_of(&self, proc: &str) -> Vec<&str> {
        self.procedures
            .values()
            .filter(|p| {
                p.blocks.values().any(|b| {
                    b.points
                        .values()
                        .any(|s| matches!(s, Statement::Call(q) if q == proc))
                })
            })
            .map(|p| p.name.as_str())
            .collect()
    }
}

impl AnnotatedBlock {
    pub fn successors<'a>(&'a self, point: &'a str) -> impl Iterator<Item = &'a BlockEdge> + 'a {
        self.edges.iter().filter(move |e| e.from == point)
    }
}

/// Parses and validates in one step.
pub fn load_program(text: &str) -> Result<AnnotatedProgram, Vec<Diagnostic>> {
    let prog = parse_program(text)?;
    let diags = validate_program(&prog);
    if diags.is_empty() {
        Ok(prog)
    } else {
        Err(diags)
    }
}
