use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::pds::{Configuration, InducedPds};
use crate::value::Valuation;

use super::exec::{Interpreter, StackEntry, StsState};
use super::{mangle, Sts, StsError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivalenceVerdict {
    /// Same reachable states and the same successor relation on them.
    Equivalent { states: usize },
    Divergent { witness: String },
    /// The step bound was hit before either side was exhausted.
    Inconclusive { reason: String },
}

impl fmt::Display for EquivalenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivalenceVerdict::Equivalent { states } => write!(f, "equivalent ({states} states)"),
            EquivalenceVerdict::Divergent { witness } => write!(f, "divergent: {witness}"),
            EquivalenceVerdict::Inconclusive { reason } => write!(f, "inconclusive: {reason}"),
        }
    }
}

/// The STS state a PDS configuration corresponds to: the top frame gives
/// `n` and its procedure's locals, lower frames become stack entries, and
/// every other local sits at its initial value.
fn encode(sts: &Sts, pds: &InducedPds, c: &Configuration) -> StsState {
    let fg = &pds.flow_graph;
    let mut vars: Valuation = c.global.clone();
    for (name, v) in &sts.init_locals {
        vars.set(name.clone(), *v);
    }
    let top = &c.stack[0];
    let owner = fg.owner_of(&top.node).expect("configuration nodes belong to the graph");
    for (k, v) in top.locals.iter() {
        vars.set(mangle(&owner.name, k), v);
    }
    let stack = c.stack[1..]
        .iter()
        .map(|f| {
            let p = fg.owner_of(&f.node).expect("configuration nodes belong to the graph");
            StackEntry {
                node: f.node.clone(),
                saved: p
                    .locals
                    .iter()
                    .map(|l| f.locals.get(&l.name).expect("frame covers its locals"))
                    .collect(),
            }
        })
        .collect();
    StsState {
        node: top.node.clone(),
        vars,
        stack,
    }
}

/// Compares the reachable states and successor relations of `sts` and
/// `pds`. The PDS is bounded at `max_stack` frames, which the STS matches
/// with `max_stack - 1` stack entries; that must fit the STS capacity.
pub fn compare_with_pds(
    sts: &Sts,
    pds: &InducedPds,
    max_steps: usize,
    max_stack: usize,
) -> Result<EquivalenceVerdict, StsError> {
    if max_stack == 0 || max_stack - 1 > sts.stack_capacity {
        return Err(StsError::BoundMismatch {
            max_stack,
            capacity: sts.stack_capacity,
        });
    }
    let mut bounded = sts.clone();
    bounded.stack_capacity = max_stack - 1;
    let interp = Interpreter::new(&bounded)?;

    let pds_report = pds.explore(max_steps, max_stack)?;
    let sts_report = super::execute_sts(&bounded, max_steps)?;
    if pds_report.visited.len() >= max_steps || sts_report.truncated {
        return Ok(EquivalenceVerdict::Inconclusive {
            reason: format!("step bound {max_steps} reached"),
        });
    }

    let encoded: Vec<StsState> = pds_report
        .visited
        .iter()
        .map(|c| encode(&bounded, pds, c))
        .collect();
    let pds_set: HashSet<&StsState> = encoded.iter().collect();
    let sts_set: HashSet<&StsState> = sts_report.visited.iter().collect();
    if let Some((c, _)) = pds_report
        .visited
        .iter()
        .zip(&encoded)
        .find(|(_, s)| !sts_set.contains(s))
    {
        return Ok(EquivalenceVerdict::Divergent {
            witness: format!("PDS configuration [{c}] has no STS counterpart"),
        });
    }
    if let Some(s) = sts_report.visited.iter().find(|s| !pds_set.contains(s)) {
        return Ok(EquivalenceVerdict::Divergent {
            witness: format!("STS state [{s}] has no PDS counterpart"),
        });
    }

    for (c, s) in pds_report.visited.iter().zip(&encoded) {
        let expected: BTreeSet<StsState> = pds
            .successors(c)?
            .iter()
            .filter(|d| d.stack.len() <= max_stack)
            .map(|d| encode(&bounded, pds, d))
            .collect();
        let actual: BTreeSet<StsState> = interp.successors(s)?.0.into_iter().collect();
        if expected != actual {
            let extra = actual.difference(&expected).next();
            let missing = expected.difference(&actual).next();
            let witness = match (extra, missing) {
                (Some(t), _) => format!("STS steps from [{s}] to [{t}], the PDS does not"),
                (None, Some(t)) => format!("PDS steps from [{c}] to [{t}], the STS does not"),
                (None, None) => unreachable!("sets differ"),
            };
            return Ok(EquivalenceVerdict::Divergent { witness });
        }
    }
    Ok(EquivalenceVerdict::Equivalent {
        states: encoded.len(),
    })
}
