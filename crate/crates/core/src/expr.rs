//! Expression AST shared by the program IR and by actions.
//!
//! Variables carry a `primed` flag: unprimed occurrences are read in the
//! pre-state, primed ones in the post-state. `old(x)` only appears in
//! contract `ensures` clauses and is lowered to an unprimed read.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::value::{Domain, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Implies,
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinaryOp {
    /// Binding strength; larger binds tighter. C-style ordering with
    /// implication below `||`.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Implies => 1,
            BinaryOp::Or => 2,
            BinaryOp::And => 3,
            BinaryOp::Eq | BinaryOp::Ne => 4,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 5,
            BinaryOp::Add | BinaryOp::Sub => 6,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 7,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinaryOp::Implies)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Implies => "=>",
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var { name: String, primed: bool },
    /// Pre-state reference inside an `ensures` clause.
    Old(String),
    /// Nondeterministic choice; only meaningful as the right operand of `==`.
    Any(Domain),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var {
            name: name.into(),
            primed: false,
        }
    }

    pub fn primed(name: impl Into<String>) -> Expr {
        Expr::Var {
            name: name.into(),
            primed: true,
        }
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnaryOp::Not, Box::new(e))
    }

    pub fn bin(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinaryOp::Eq, l, r)
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::bin(BinaryOp::And, l, r)
    }

    /// Left-nested conjunction, the shape `a && b && c` parses to; the empty
    /// conjunction is `true`.
    pub fn conjoin(parts: impl IntoIterator<Item = Expr>) -> Expr {
        parts
            .into_iter()
            .reduce(Expr::and)
            .unwrap_or(Expr::Bool(true))
    }

    /// Flattens nested `&&` into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::Binary(BinaryOp::And, l, r) => {
                    go(l, out);
                    go(r, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Calls `f(name, primed)` for every variable occurrence. `old(x)`
    /// counts as an unprimed occurrence of `x`.
    pub fn visit_vars(&self, f: &mut impl FnMut(&str, bool)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Any(_) => {}
            Expr::Var { name, primed } => f(name, *primed),
            Expr::Old(name) => f(name, false),
            Expr::Unary(_, e) => e.visit_vars(f),
            Expr::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    pub fn unprimed_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |n, p| {
            if !p {
                out.insert(n.to_string());
            }
        });
        out
    }

    pub fn primed_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |n, p| {
            if p {
                out.insert(n.to_string());
            }
        });
        out
    }

    pub fn has_primes(&self) -> bool {
        let mut any = false;
        self.visit_vars(&mut |_, p| any |= p);
        any
    }

    pub fn contains_old(&self) -> bool {
        match self {
            Expr::Old(_) => true,
            Expr::Unary(_, e) => e.contains_old(),
            Expr::Binary(_, l, r) => l.contains_old() || r.contains_old(),
            _ => false,
        }
    }

    pub fn contains_any(&self) -> bool {
        match self {
            Expr::Any(_) => true,
            Expr::Unary(_, e) => e.contains_any(),
            Expr::Binary(_, l, r) => l.contains_any() || r.contains_any(),
            _ => false,
        }
    }

    /// Rebuilds the expression with every variable mapped through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&str, bool) -> Expr) -> Expr {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Any(_) => self.clone(),
            Expr::Var { name, primed } => f(name, *primed),
            Expr::Old(name) => f(name, false),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map_vars(f))),
            Expr::Binary(op, l, r) => {
                Expr::Binary(*op, Box::new(l.map_vars(f)), Box::new(r.map_vars(f)))
            }
        }
    }

    /// Renames variables (both primed and unprimed occurrences).
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Expr {
        self.map_vars(&mut |n, primed| Expr::Var {
            name: map.get(n).cloned().unwrap_or_else(|| n.to_string()),
            primed,
        })
    }

    /// Lowers an `ensures` clause to post-state form: `old(x)` becomes `x`
    /// and plain `x` becomes `x'`.
    pub fn to_post_state(&self) -> Expr {
        match self {
            Expr::Old(name) => Expr::var(name.clone()),
            Expr::Var { name, .. } => Expr::primed(name.clone()),
            Expr::Int(_) | Expr::Bool(_) | Expr::Any(_) => self.clone(),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.to_post_state())),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.to_post_state()),
                Box::new(r.to_post_state()),
            ),
        }
    }

    /// Primes every unprimed variable.
    pub fn prime_all(&self) -> Expr {
        self.map_vars(&mut |n, _| Expr::primed(n))
    }

    /// If this is `x' == e` (or `e == x'`) with `x'` the only occurrence of a
    /// primed `x`, returns `(x, e)`.
    pub fn as_definition(&self) -> Option<(&str, &Expr)> {
        if let Expr::Binary(BinaryOp::Eq, l, r) = self {
            if let Expr::Var { name, primed: true } = &**l {
                return Some((name, r));
            }
            if let Expr::Var { name, primed: true } = &**r {
                if !matches!(&**l, Expr::Any(_)) {
                    return Some((name, l));
                }
            }
        }
        None
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var { name, primed } => {
                f.write_str(name)?;
                if *primed {
                    f.write_str("'")?;
                }
                Ok(())
            }
            Expr::Old(name) => write!(f, "old({name})"),
            Expr::Any(d) => write!(f, "any({d})"),
            Expr::Unary(op, e) => {
                f.write_str(match op {
                    UnaryOp::Not => "!",
                    UnaryOp::Neg => "-",
                })?;
                // `-3` would re-parse as a literal, `--x` as two tokens.
                let needs_parens = match (&**e, op) {
                    (Expr::Binary(..), _) => true,
                    (Expr::Int(_), UnaryOp::Neg) => true,
                    (Expr::Unary(UnaryOp::Neg, _), UnaryOp::Neg) => true,
                    _ => false,
                };
                if needs_parens {
                    f.write_str("(")?;
                    e.fmt_prec(f, 0)?;
                    f.write_str(")")
                } else {
                    e.fmt_prec(f, 8)
                }
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let paren = p < min;
                if paren {
                    f.write_str("(")?;
                }
                let (lmin, rmin) = if op.right_assoc() {
                    (p + 1, p)
                } else {
                    (p, p + 1)
                };
                l.fmt_prec(f, lmin)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_prec(f, rmin)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("expected {expected} but `{expr}` has type {found}")]
    Mismatch {
        expr: String,
        expected: Type,
        found: Type,
    },
    #[error("`{0}` compares operands of different types")]
    Heterogeneous(String),
    #[error("`any(..)` may only appear as the right operand of `==`")]
    MisplacedAny,
}

/// Computes the type of `e`, resolving variables through `lookup`.
pub fn type_of(e: &Expr, lookup: &impl Fn(&str) -> Option<Type>) -> Result<Type, TypeError> {
    let expect = |sub: &Expr, want: Type| -> Result<(), TypeError> {
        let t = type_of(sub, lookup)?;
        if t == want {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                expr: sub.to_string(),
                expected: want,
                found: t,
            })
        }
    };
    match e {
        Expr::Int(_) => Ok(Type::Int),
        Expr::Bool(_) => Ok(Type::Bool),
        Expr::Var { name, .. } | Expr::Old(name) => {
            lookup(name).ok_or_else(|| TypeError::UnknownVariable(name.clone()))
        }
        Expr::Any(_) => Err(TypeError::MisplacedAny),
        Expr::Unary(UnaryOp::Not, x) => expect(x, Type::Bool).map(|_| Type::Bool),
        Expr::Unary(UnaryOp::Neg, x) => expect(x, Type::Int).map(|_| Type::Int),
        Expr::Binary(op, l, r) => match op {
            BinaryOp::Implies | BinaryOp::Or | BinaryOp::And => {
                expect(l, Type::Bool)?;
                expect(r, Type::Bool)?;
                Ok(Type::Bool)
            }
            BinaryOp::Eq | BinaryOp::Ne => {
                let lt = type_of(l, lookup)?;
                if let Expr::Any(d) = &**r {
                    if *op == BinaryOp::Eq {
                        return if d.ty() == lt {
                            Ok(Type::Bool)
                        } else {
                            Err(TypeError::Heterogeneous(e.to_string()))
                        };
                    }
                }
                let rt = type_of(r, lookup)?;
                if lt == rt {
                    Ok(Type::Bool)
                } else {
                    Err(TypeError::Heterogeneous(e.to_string()))
                }
            }
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                expect(l, Type::Int)?;
                expect(r, Type::Int)?;
                Ok(Type::Bool)
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => {
                expect(l, Type::Int)?;
                expect(r, Type::Int)?;
                Ok(Type::Int)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_uses_minimal_parentheses() {
        let e = Expr::bin(
            BinaryOp::Mul,
            Expr::bin(BinaryOp::Add, Expr::var("x"), Expr::Int(1)),
            Expr::var("y"),
        );
        assert_eq!(e.to_string(), "(x + 1) * y");
        let e = Expr::bin(
            BinaryOp::Sub,
            Expr::var("a"),
            Expr::bin(BinaryOp::Sub, Expr::var("b"), Expr::var("c")),
        );
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = Expr::eq(Expr::primed("x"), Expr::Any(Domain::Range(0, 3)));
        assert_eq!(e.to_string(), "x' == any(int 0..3)");
    }

    #[test]
    fn conjuncts_flatten_nested_and() {
        let e = Expr::conjoin([Expr::var("a"), Expr::var("b"), Expr::var("c")]);
        assert_eq!(e.conjuncts().len(), 3);
        assert_eq!(Expr::conjoin([]), Expr::Bool(true));
    }

    #[test]
    fn post_state_lowering() {
        let e = Expr::eq(
            Expr::var("x"),
            Expr::bin(BinaryOp::Add, Expr::Old("x".into()), Expr::Int(1)),
        );
        assert_eq!(e.to_post_state().to_string(), "x' == x + 1");
    }

    #[test]
    fn typing_rejects_mixed_comparison() {
        let env = |n: &str| match n {
            "b" => Some(Type::Bool),
            "x" => Some(Type::Int),
            _ => None,
        };
        let bad = Expr::eq(Expr::var("b"), Expr::var("x"));
        assert!(matches!(type_of(&bad, &env), Err(TypeError::Heterogeneous(_))));
        let ok = Expr::bin(BinaryOp::Lt, Expr::var("x"), Expr::Int(3));
        assert_eq!(type_of(&ok, &env), Ok(Type::Bool));
        assert!(matches!(
            type_of(&Expr::var("z"), &env),
            Err(TypeError::UnknownVariable(_))
        ));
    }
}
