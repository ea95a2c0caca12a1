//! Contract-based abstraction of annotated programs into flow graphs,
//! their pushdown-system semantics, and TLA+/nuXmv model emission.

pub mod action;
pub mod diag;
pub mod emit;
pub mod expr;
pub mod flow;
pub mod ir;
pub mod pds;
pub mod sts;
pub mod syntax;
pub mod value;

pub use action::{Action, ActionError, State};
pub use diag::{DiagCode, Diagnostic};
pub use expr::Expr;
pub use ir::{load_program, parse_program, serialize_program, validate_program, AnnotatedProgram};
pub use value::{Domain, Valuation, Value, VarDecl};
