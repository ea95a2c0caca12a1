use std::fmt;
use std::str::FromStr;

use crate::expr::Expr;

use super::{pin_of, StackOp, Sts};

/// Deliberate encoding faults, used to show that the cross-check notices
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Negates the first guard of the first guarded action.
    NegateGuard,
    /// Drops the first frame conjunct `x' == x` over a non-singleton domain.
    DropFrameConjunct,
    /// Pushes the call node instead of the return site.
    SwapPush,
    /// Lets the first return action fire at any node.
    DropReturnTest,
    /// Negates the initial predicate on globals.
    WrongInit,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::NegateGuard,
        Mutation::DropFrameConjunct,
        Mutation::SwapPush,
        Mutation::DropReturnTest,
        Mutation::WrongInit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::NegateGuard => "negate-guard",
            Mutation::DropFrameConjunct => "drop-frame",
            Mutation::SwapPush => "swap-push",
            Mutation::DropReturnTest => "drop-return-test",
            Mutation::WrongInit => "wrong-init",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Mutation::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mutation `{s}`, expected one of {}", names.join(", "))
            })
    }
}

/// Applies `m`, or returns `None` when the system has nothing it could
/// apply to (no guard, no push, ...).
pub fn mutate(sts: &Sts, m: Mutation) -> Option<Sts> {
    let mut out = sts.clone();
    match m {
        Mutation::NegateGuard => {
            let a = out.actions.iter_mut().find(|a| !a.guards.is_empty())?;
            a.guards[0] = Expr::not(a.guards[0].clone());
        }
        Mutation::DropFrameConjunct => {
            let (ai, ci) = sts.actions.iter().enumerate().find_map(|(i, a)| {
                a.body
                    .iter()
                    .position(|c| {
                        pin_of(c).is_some_and(|x| {
                            sts.domain_of(x)
                                .and_then(|d| d.size())
                                .is_none_or(|n| n > 1)
                        })
                    })
                    .map(|j| (i, j))
            })?;
            out.actions[ai].body.remove(ci);
        }
        Mutation::SwapPush => {
            let a = out.actions.iter_mut().find(|a| a.is_push())?;
            if let StackOp::Push { ret, .. } = &mut a.stack {
                *ret = a.source.clone()?;
            }
        }
        Mutation::DropReturnTest => {
            out.actions.iter_mut().find(|a| a.is_pop())?.source = None;
        }
        Mutation::WrongInit => {
            out.init_globals = Expr::not(out.init_globals.clone());
        }
    }
    Some(out)
}
