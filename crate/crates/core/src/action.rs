//! Actions: boolean expressions over pre-state (`x`) and post-state (`x'`)
//! variables, read as binary relations on states.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::ir::{Contract, Statement};
use crate::value::{Domain, Valuation, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("arithmetic overflow in `{0}`")]
    Overflow(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("`{0}` has no action form; it is handled structurally")]
    UnsupportedStatement(String),
    #[error("the empty contract has no action")]
    EmptyContract,
    #[error("guard `{0}` mentions a primed variable")]
    PrimedInGuard(String),
    #[error("variable `{0}` is written but its domain is not finite")]
    InfiniteDomain(String),
}

/// A state split into its local and global parts. Names are disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub local: Valuation,
    pub global: Valuation,
}

impl State {
    pub fn new(local: Valuation, global: Valuation) -> Self {
        State { local, global }
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.local.get(name).or_else(|| self.global.get(name))
    }

    /// Overwrites `name` in whichever component binds it.
    fn assign(&mut self, name: &str, v: Value) {
        if self.local.0.contains_key(name) {
            self.local.set(name, v);
        } else {
            self.global.set(name, v);
        }
    }
}

/// A boolean expression with its read and write sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub expr: Expr,
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
}

impl Action {
    pub fn new(expr: Expr) -> Self {
        let reads = expr.unprimed_vars();
        let writes = expr.primed_vars();
        Action {
            expr,
            reads,
            writes,
        }
    }

    pub fn truth() -> Self {
        Action::new(Expr::Bool(true))
    }

    /// `self ∧ other` as one flat conjunction, dropping literal `true`s.
    pub fn and(&self, other: &Action) -> Action {
        let parts = self
            .expr
            .conjuncts()
            .into_iter()
            .chain(other.expr.conjuncts())
            .filter(|c| **c != Expr::Bool(true))
            .cloned();
        Action::new(Expr::conjoin(parts))
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.expr.fmt(f)
    }
}

/// `x' == x` for every `x` in `vars`, in name order.
pub fn id_action<'a>(vars: impl IntoIterator<Item = &'a String>) -> Action {
    let set: BTreeSet<&String> = vars.into_iter().collect();
    Action::new(Expr::conjoin(
        set.into_iter()
            .map(|v| Expr::eq(Expr::primed(v.clone()), Expr::var(v.clone()))),
    ))
}

/// Lowers an assignment or `skip` over the given frame.
pub fn action_of_statement(s: &Statement, frame: &BTreeSet<String>) -> Result<Action, ActionError> {
    match s {
        Statement::Assign { target, expr } => {
            let def = Action::new(Expr::eq(Expr::primed(target.clone()), expr.clone()));
            Ok(def.and(&id_action(frame.iter().filter(|v| *v != target))))
        }
        Statement::Skip => Ok(id_action(frame)),
        Statement::Jump(b) => Err(ActionError::UnsupportedStatement(format!("jump {b}"))),
        Statement::Call(p) => Err(ActionError::UnsupportedStatement(format!("call {p}"))),
        Statement::Return => Err(ActionError::UnsupportedStatement("return".into())),
    }
}

/// Lowers a contract over `frame` (variable name to domain). Assigned
/// variables that `ensures` does not mention get an explicit
/// `x' == any(D)` conjunct so they stay in the write set as havocs.
pub fn action_of_contract(
    c: &Contract,
    frame: &BTreeMap<String, Domain>,
) -> Result<Action, ActionError> {
    let Contract::Spec {
        requires,
        ensures,
        assigns,
    } = c
    else {
        return Err(ActionError::EmptyContract);
    };
    let post = ensures.to_post_state();
    let pinned = post.primed_vars();
    let mut parts = Vec::new();
    if *requires != Expr::Bool(true) {
        parts.push(requires.clone());
    }
    let assigned: BTreeSet<&String> = assigns.iter().collect();
    for v in &assigned {
        if !pinned.contains(*v) {
            let d = frame.get(*v).copied().unwrap_or(Domain::Int);
            parts.push(Expr::eq(Expr::primed((*v).clone()), Expr::Any(d)));
        }
    }
    if post != Expr::Bool(true) {
        parts.push(post);
    }
    let keep = id_action(frame.keys().filter(|v| !assigned.contains(v)));
    Ok(Action::new(Expr::conjoin(parts)).and(&keep))
}

/// A guard read over the pre-state only.
pub fn action_of_guard(b: &Expr) -> Result<Action, ActionError> {
    if b.has_primes() {
        return Err(ActionError::PrimedInGuard(b.to_string()));
    }
    Ok(Action::new(b.clone()))
}

/// Evaluates `e` with unprimed names resolved by `pre` and primed names by
/// `post`. `&&`, `||` and `=>` short-circuit.
pub fn eval_expr(
    e: &Expr,
    pre: &dyn Fn(&str) -> Option<Value>,
    post: &dyn Fn(&str) -> Option<Value>,
) -> Result<Value, ActionError> {
    let boolean = |x: &Expr| -> Result<bool, ActionError> {
        eval_expr(x, pre, post)?
            .as_bool()
            .ok_or_else(|| ActionError::TypeError(format!("`{x}` is not boolean")))
    };
    let int = |x: &Expr| -> Result<i64, ActionError> {
        eval_expr(x, pre, post)?
            .as_int()
            .ok_or_else(|| ActionError::TypeError(format!("`{x}` is not an integer")))
    };
    Ok(match e {
        Expr::Int(i) => Value::Int(*i),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var { name, primed } => {
            let v = if *primed { post(name) } else { pre(name) };
            v.ok_or_else(|| {
                ActionError::UnboundVariable(if *primed {
                    format!("{name}'")
                } else {
                    name.clone()
                })
            })?
        }
        Expr::Old(name) => pre(name).ok_or_else(|| ActionError::UnboundVariable(name.clone()))?,
        Expr::Any(_) => {
            return Err(ActionError::TypeError(
                "`any(..)` may only appear as the right operand of `==`".into(),
            ))
        }
        Expr::Unary(UnaryOp::Not, x) => Value::Bool(!boolean(x)?),
        Expr::Unary(UnaryOp::Neg, x) => Value::Int(
            int(x)?
                .checked_neg()
                .ok_or_else(|| ActionError::Overflow(e.to_string()))?,
        ),
        Expr::Binary(op, l, r) => match op {
            BinaryOp::And => Value::Bool(boolean(l)? && boolean(r)?),
            BinaryOp::Or => Value::Bool(boolean(l)? || boolean(r)?),
            BinaryOp::Implies => Value::Bool(!boolean(l)? || boolean(r)?),
            BinaryOp::Eq | BinaryOp::Ne => {
                let lv = eval_expr(l, pre, post)?;
                let same = match &**r {
                    Expr::Any(d) if *op == BinaryOp::Eq => d.contains(lv),
                    _ => {
                        let rv = eval_expr(r, pre, post)?;
                        if std::mem::discriminant(&lv) != std::mem::discriminant(&rv) {
                            return Err(ActionError::TypeError(format!(
                                "`{e}` compares values of different types"
                            )));
                        }
                        lv == rv
                    }
                };
                Value::Bool(same == (*op == BinaryOp::Eq))
            }
            BinaryOp::Lt => Value::Bool(int(l)? < int(r)?),
            BinaryOp::Le => Value::Bool(int(l)? <= int(r)?),
            BinaryOp::Gt => Value::Bool(int(l)? > int(r)?),
            BinaryOp::Ge => Value::Bool(int(l)? >= int(r)?),
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => {
                let (a, b) = (int(l)?, int(r)?);
                let overflow = || ActionError::Overflow(e.to_string());
                if matches!(op, BinaryOp::Div | BinaryOp::Mod) && b == 0 {
                    return Err(ActionError::DivisionByZero(e.to_string()));
                }
                // Rust's `/` and `%` already truncate toward zero.
                Value::Int(
                    match op {
                        BinaryOp::Add => a.checked_add(b),
                        BinaryOp::Sub => a.checked_sub(b),
                        BinaryOp::Mul => a.checked_mul(b),
                        BinaryOp::Div => a.checked_div(b),
                        _ => a.checked_rem(b),
                    }
                    .ok_or_else(overflow)?,
                )
            }
        },
    })
}

/// True iff `(pre, post)` is in the relation of `a`.
pub fn eval_action(a: &Action, pre: &State, post: &State) -> Result<bool, ActionError> {
    let v = eval_expr(&a.expr, &|n| pre.get(n), &|n| post.get(n))?;
    v.as_bool()
        .ok_or_else(|| ActionError::TypeError(format!("action `{}` is not boolean", a.expr)))
}

/// All post-states of `a` from `pre` that agree with `pre` outside the
/// write set, in lexicographic order of the written variables (by name,
/// then value).
pub fn enumerate_posts(
    a: &Action,
    pre: &State,
    domains: &BTreeMap<String, Domain>,
) -> Result<Vec<State>, ActionError> {
    let writes: Vec<&String> = a.writes.iter().collect();
    for w in &writes {
        if pre.get(w).is_none() {
            return Err(ActionError::UnboundVariable((*w).clone()));
        }
        match domains.get(*w) {
            Some(d) if d.is_finite() => {}
            _ => return Err(ActionError::InfiniteDomain((*w).clone())),
        }
    }
    let index: BTreeMap<&str, usize> = writes
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let level_of = |e: &Expr| -> Option<usize> {
        e.primed_vars()
            .iter()
            .filter_map(|v| index.get(v.as_str()).copied())
            .max()
    };

    let mut checks: Vec<Vec<&Expr>> = vec![Vec::new(); writes.len()];
    let mut defs: Vec<Option<&Expr>> = vec![None; writes.len()];
    let mut upfront = Vec::new();
    for c in a.expr.conjuncts() {
        let Some(level) = level_of(c) else {
            upfront.push(c);
            continue;
        };
        if defs[level].is_none() {
            if let Some((x, rhs)) = c.as_definition() {
                let solvable = index.get(x) == Some(&level)
                    && !matches!(rhs, Expr::Any(_))
                    && level_of(rhs).is_none_or(|l| l < level);
                if solvable {
                    defs[level] = Some(rhs);
                    continue;
                }
            }
        }
        checks[level].push(c);
    }

    let pre_lookup = |n: &str| pre.get(n);
    for c in upfront {
        let ok = eval_expr(c, &pre_lookup, &pre_lookup)?;
        if ok != Value::Bool(true) {
            return Ok(Vec::new());
        }
    }

    let candidates: Vec<Vec<Value>> = writes
        .iter()
        .map(|w| domains[*w].values().unwrap_or_default())
        .collect();
    let mut out = Vec::new();
    let mut post = pre.clone();
    search(
        0, &writes, &defs, &checks, &candidates, domains, pre, &mut post, &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn search(
    level: usize,
    writes: &[&String],
    defs: &[Option<&Expr>],
    checks: &[Vec<&Expr>],
    candidates: &[Vec<Value>],
    domains: &BTreeMap<String, Domain>,
    pre: &State,
    post: &mut State,
    out: &mut Vec<State>,
) -> Result<(), ActionError> {
    if level == writes.len() {
        out.push(post.clone());
        return Ok(());
    }
    let name = writes[level];
    let values = match defs[level] {
        Some(rhs) => {
            let snapshot = post.clone();
            let v = eval_expr(rhs, &|n| pre.get(n), &|n| snapshot.get(n))?;
            if domains[name].contains(v) {
                vec![v]
            } else {
                Vec::new()
            }
        }
        None => candidates[level].clone(),
    };
    'values: for v in values {
        post.assign(name, v);
        for c in &checks[level] {
            let snapshot = &*post;
            if eval_expr(c, &|n| pre.get(n), &|n| snapshot.get(n))? != Value::Bool(true) {
                continue 'values;
            }
        }
        search(
            level + 1,
            writes,
            defs,
            checks,
            candidates,
            domains,
            pre,
            post,
            out,
        )?;
    }
    post.assign(name, pre.get(name).expect("written variable is bound"));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr;

    fn st(pairs: &[(&str, Value)]) -> State {
        State::new(
            Valuation::new(),
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
    }

    fn act(text: &str) -> Action {
        Action::new(parse_expr(text).unwrap())
    }

    #[test]
    fn increment_relation() {
        let a = act("x' == x + 1");
        let pre = st(&[("x", Value::Int(1))]);
        assert!(eval_action(&a, &pre, &st(&[("x", Value::Int(2))])).unwrap());
        assert!(!eval_action(&a, &pre, &st(&[("x", Value::Int(3))])).unwrap());
    }

    #[test]
    fn division_truncates_toward_zero() {
        let e = parse_expr("-7 / 2 == -3 && -7 % 2 == -1 && 7 % -2 == 1").unwrap();
        let none = |_: &str| None;
        assert_eq!(eval_expr(&e, &none, &none), Ok(Value::Bool(true)));
        let z = parse_expr("1 / 0 == 0").unwrap();
        assert!(matches!(
            eval_expr(&z, &none, &none),
            Err(ActionError::DivisionByZero(_))
        ));
    }

    #[test]
    fn identity_over_empty_set_is_true() {
        assert_eq!(id_action(&BTreeSet::new()).expr, Expr::Bool(true));
    }

    #[test]
    fn statement_lowering_adds_frame() {
        let frame: BTreeSet<String> = ["x".into(), "y".into()].into();
        let s = Statement::Assign {
            target: "x".into(),
            expr: parse_expr("x + 1").unwrap(),
        };
        let a = action_of_statement(&s, &frame).unwrap();
        assert_eq!(a.to_string(), "x' == x + 1 && y' == y");
        assert!(matches!(
            action_of_statement(&Statement::Return, &frame),
            Err(ActionError::UnsupportedStatement(_))
        ));
    }

    #[test]
    fn contract_lowering_substitutes_old() {
        let frame: BTreeMap<String, Domain> =
            [("x".into(), Domain::Range(0, 9)), ("y".into(), Domain::Bool)].into();
        let c = Contract::Spec {
            requires: Expr::Bool(true),
            ensures: parse_expr("x == old(x) + 1").unwrap(),
            assigns: vec!["x".into()],
        };
        let a = action_of_contract(&c, &frame).unwrap();
        assert_eq!(a.to_string(), "x' == x + 1 && y' == y");
        assert_eq!(
            action_of_contract(&Contract::Empty, &frame),
            Err(ActionError::EmptyContract)
        );
    }

    #[test]
    fn havoc_respects_requires() {
        let frame: BTreeMap<String, Domain> = [("x".into(), Domain::Range(0, 3))].into();
        let c = Contract::Spec {
            requires: parse_expr("x > 0").unwrap(),
            ensures: Expr::Bool(true),
            assigns: vec!["x".into()],
        };
        let a = action_of_contract(&c, &frame).unwrap();
        let posts = enumerate_posts(&a, &st(&[("x", Value::Int(2))]), &frame).unwrap();
        let xs: Vec<_> = posts.iter().map(|p| p.get("x").unwrap()).collect();
        assert_eq!(xs, (0..4).map(Value::Int).collect::<Vec<_>>());
        assert!(enumerate_posts(&a, &st(&[("x", Value::Int(0))]), &frame)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn guard_rejects_primes() {
        assert!(matches!(
            action_of_guard(&parse_expr("x' == 0").unwrap()),
            Err(ActionError::PrimedInGuard(_))
        ));
        assert_eq!(
            action_of_guard(&parse_expr("1 != 0").unwrap()).unwrap().writes.len(),
            0
        );
    }

    #[test]
    fn enumeration_drops_out_of_domain_posts() {
        let d: BTreeMap<String, Domain> = [("x".into(), Domain::Range(0, 3))].into();
        let a = act("x' == x + 1");
        assert!(enumerate_posts(&a, &st(&[("x", Value::Int(3))]), &d)
            .unwrap()
            .is_empty());
        let d: BTreeMap<String, Domain> = [("x".into(), Domain::Int)].into();
        assert_eq!(
            enumerate_posts(&a, &st(&[("x", Value::Int(3))]), &d),
            Err(ActionError::InfiniteDomain("x".into()))
        );
    }

    #[test]
    fn posts_keep_local_and_global_split() {
        let pre = State::new(
            [("l".to_string(), Value::Bool(false))].into_iter().collect(),
            [("g".to_string(), Value::Bool(true))].into_iter().collect(),
        );
        let d: BTreeMap<String, Domain> =
            [("l".into(), Domain::Bool), ("g".into(), Domain::Bool)].into();
        let posts = enumerate_posts(&act("l' == g && g' == !g"), &pre, &d).unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].local.get("l"), Some(Value::Bool(true)));
        assert_eq!(posts[0].global.get("g"), Some(Value::Bool(false)));
    }
}
