//! Serializers: an [`Sts`] to a TLA+ module with its TLC configuration or
//! to a nuXmv model, and a [`FlowGraph`](crate::flow::FlowGraph) to DOT.
//! Every emitted file starts with a one-line provenance header that
//! [`normalize_header`] blanks out for golden comparisons.

mod dot;
mod lint;
mod smv;
mod tla;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::sts::Sts;
use crate::value::Domain;

pub use dot::emit_dot;
pub use lint::{lint_smv, lint_tla, scan_smv, scan_tla, ActionShape, StackEffect};
pub use smv::emit_nuxmv;
pub use tla::emit_tla;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("variable `{0}` has an unbounded domain; TLC needs finite domains")]
    UnboundedDomain(String),
    #[error("calls nest {needed} deep but the stack capacity is {capacity}")]
    CapacityTooSmall { needed: usize, capacity: usize },
    #[error("`{0}` is not a usable module name")]
    InvalidModuleName(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitterOptions {
    pub module_name: String,
    pub stack_capacity: usize,
    /// Digest of the source program, recorded in the header.
    pub source_digest: String,
}

impl EmitterOptions {
    pub fn for_sts(sts: &Sts, source_digest: impl Into<String>) -> Self {
        EmitterOptions {
            module_name: sts.name.clone(),
            stack_capacity: sts.stack_capacity,
            source_digest: source_digest.into(),
        }
    }

    fn check_module_name(&self, reserved: &[&str]) -> Result<(), EmitError> {
        let name = &self.module_name;
        let ok = name.starts_with(|c: char| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !reserved.contains(&name.as_str());
        if ok {
            Ok(())
        } else {
            Err(EmitError::InvalidModuleName(name.clone()))
        }
    }
}

fn header(comment: &str, digest: &str) -> String {
    format!("{comment} flowmc {TOOL_VERSION}, source sha256:{digest}\n")
}

/// Replaces the provenance header, if present, by a fixed line so that
/// emitted texts from different versions or sources compare equal.
pub fn normalize_header(text: &str) -> String {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    for comment in ["\\*", "--", "//"] {
        if first.starts_with(&format!("{comment} flowmc ")) {
            return format!("{comment} flowmc <header>\n{rest}");
        }
    }
    text.to_string()
}

/// Maps STS variable names to backend identifiers, appending `_` to any
/// name that collides with a reserved word or with an earlier result.
fn identifiers<'a>(names: impl IntoIterator<Item = &'a str>, reserved: &[&str]) -> BTreeMap<String, String> {
    let mut taken: BTreeSet<String> = reserved.iter().map(|s| s.to_string()).collect();
    let names: Vec<&str> = names.into_iter().collect();
    // Unchanged names claim their spelling first.
    for n in &names {
        if !reserved.contains(n) {
            taken.insert(n.to_string());
        }
    }
    let mut out = BTreeMap::new();
    for n in names {
        let mut id = n.to_string();
        if reserved.contains(&n) {
            while taken.contains(&id) {
                id.push('_');
            }
            taken.insert(id.clone());
        }
        out.insert(n.to_string(), id);
    }
    out
}

/// Operator spellings of one backend.
struct Syntax {
    and: &'static str,
    or: &'static str,
    not: &'static str,
    implies: &'static str,
    eq: &'static str,
    ne: &'static str,
    tru: &'static str,
    fals: &'static str,
    div: fn(&str, &str) -> String,
    rem: fn(&str, &str) -> String,
    primed: fn(&str) -> String,
    member: fn(&str, Domain) -> String,
}

/// Prints `e` with every compound operand parenthesized, so neither
/// backend's precedence rules matter. `ids` renames variables.
fn print_expr(e: &Expr, syn: &Syntax, ids: &BTreeMap<String, String>) -> String {
    let var = |n: &str| ids.get(n).cloned().unwrap_or_else(|| n.to_string());
    let sub = |e: &Expr| {
        let s = print_expr(e, syn, ids);
        match e {
            Expr::Binary(..) | Expr::Unary(..) => format!("({s})"),
            Expr::Int(i) if *i < 0 => format!("({s})"),
            _ => s,
        }
    };
    match e {
        Expr::Int(i) => i.to_string(),
        Expr::Bool(true) => syn.tru.to_string(),
        Expr::Bool(false) => syn.fals.to_string(),
        Expr::Var { name, primed } => {
            if *primed {
                (syn.primed)(&var(name))
            } else {
                var(name)
            }
        }
        Expr::Old(name) => var(name),
        Expr::Any(d) => format!("any({d})"),
        Expr::Unary(UnaryOp::Not, x) => format!("{}{}", syn.not, sub(x)),
        Expr::Unary(UnaryOp::Neg, x) => format!("-{}", sub(x)),
        Expr::Binary(BinaryOp::Eq, l, r) if matches!(**r, Expr::Any(_)) => {
            let Expr::Any(d) = **r else { unreachable!() };
            (syn.member)(&sub(l), d)
        }
        Expr::Binary(op, l, r) => {
            let (a, b) = (sub(l), sub(r));
            let sym = match op {
                BinaryOp::And => syn.and,
                BinaryOp::Or => syn.or,
                BinaryOp::Implies => syn.implies,
                BinaryOp::Eq => syn.eq,
                BinaryOp::Ne => syn.ne,
                BinaryOp::Div => return (syn.div)(&a, &b),
                BinaryOp::Mod => return (syn.rem)(&a, &b),
                other => other.symbol(),
            };
            format!("{a} {sym} {b}")
        }
    }
}

fn uses_division(sts: &Sts) -> bool {
    fn has(e: &Expr) -> bool {
        match e {
            Expr::Binary(BinaryOp::Div | BinaryOp::Mod, _, _) => true,
            Expr::Binary(_, l, r) => has(l) || has(r),
            Expr::Unary(_, x) => has(x),
            _ => false,
        }
    }
    has(&sts.init_globals)
        || sts
            .actions
            .iter()
            .any(|a| a.guards.iter().chain(&a.body).any(has))
}
