//! Well-formedness checks beyond structure: flow legality against the
//! machine topology, object-thimac encapsulation, computed classification,
//! deletion cascades and behavioral aggregation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::diagnostic::{self, Code, Diagnostic};
use crate::model::{ActionKind, EdgeKind, EdgeRef, LinkKind, ModelError, StaticModel, ThimacId};

/// How strictly flow legality is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Strict,
    #[default]
    Relaxed,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            other => Err(format!("unknown mode `{other}` (expected strict or relaxed)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Relaxed => "relaxed",
        })
    }
}

/// Legal (src, dst) kind pairs for a flow inside one machine.
pub const INTRA_MACHINE_FLOWS: [(ActionKind, ActionKind); 7] = {
    use ActionKind::*;
    [
        (Receive, Process),
        (Receive, Release),
        (Process, Release),
        (Create, Process),
        (Create, Release),
        (Release, Transfer),
        (Transfer, Receive),
    ]
};

/// Is a flow between these kinds legal? `same_machine` is true when both
/// actions have the same owner.
pub fn is_legal_flow(src: ActionKind, dst: ActionKind, same_machine: bool) -> bool {
    if same_machine {
        INTRA_MACHINE_FLOWS.contains(&(src, dst))
    } else {
        src == ActionKind::Transfer && dst == ActionKind::Transfer
    }
}

pub fn check_flow_legality(model: &StaticModel, mode: Mode) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for flow in model.flows() {
        let src = model.action(&flow.src).expect("valid model");
        let dst = model.action(&flow.dst).expect("valid model");
        let same = src.owner == dst.owner;
        if is_legal_flow(src.kind, dst.kind, same) {
            continue;
        }
        let diag = if same {
            Diagnostic::error(
                Code::IllegalIntraFlow,
                flow.id(),
                format!(
                    "{} -> {} is not a legal hop inside machine `{}`",
                    src.kind, dst.kind, src.owner
                ),
            )
        } else {
            Diagnostic::error(
                Code::IllegalInterFlow,
                flow.id(),
                format!(
                    "flow from `{}` to `{}` must go transfer -> transfer, found {} -> {}",
                    src.owner, dst.owner, src.kind, dst.kind
                ),
            )
        };
        out.push(match mode {
            Mode::Strict => diag,
            Mode::Relaxed => diag.downgraded(),
        });
    }
    for trigger in model.triggers() {
        let src = model.owner_of(&trigger.src);
        if src == model.owner_of(&trigger.dst) {
            out.push(Diagnostic::warning(
                Code::SameMachineTrigger,
                trigger.id(),
                format!("trigger stays inside machine `{src}`"),
            ));
        }
    }
    diagnostic::sort(&mut out);
    out
}

/// Edges by which something outside `whole` reaches one of its composite
/// descendants without going through an action of `whole` itself.
fn bypass_edges<'m>(model: &'m StaticModel, whole: &ThimacId) -> Vec<EdgeRef<'m>> {
    let inside = |t: &ThimacId| model.is_inside(t, whole);
    let mine = |t: &ThimacId| t == whole || model.is_inside(t, whole);
    model
        .edges()
        .filter(|e| {
            let a = model.owner_of(e.src);
            let b = model.owner_of(e.dst);
            (inside(a) && !mine(b)) || (inside(b) && !mine(a))
        })
        .collect()
}

pub fn check_oo_encapsulation(model: &StaticModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for t in model.thimacs().iter().filter(|t| t.declared_oo) {
        for edge in bypass_edges(model, &t.id) {
            let what = match edge.kind {
                EdgeKind::Flow => "flow",
                EdgeKind::Trigger => "trigger",
            };
            out.push(Diagnostic::error(
                Code::BoundaryBypass,
                edge.id(),
                format!(
                    "{what} between `{}` and `{}` bypasses object thimac `{}`",
                    model.owner_of(edge.src),
                    model.owner_of(edge.dst),
                    t.id
                ),
            ));
        }
    }
    diagnostic::sort(&mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Oo,
    NonOo,
    Leaf,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Oo => "OO",
            Verdict::NonOo => "NON_OO",
            Verdict::Leaf => "LEAF",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub thimac: ThimacId,
    pub verdict: Verdict,
    /// Set when every part is SHARED. Such a thimac controls no contained
    /// part, so its OO verdict holds only vacuously.
    pub shared_parts_only: bool,
}

/// Computed classification of every thimac, in declaration order.
pub fn classify(model: &StaticModel) -> Vec<Classification> {
    model
        .thimacs()
        .iter()
        .map(|t| {
            let mut any = false;
            let mut composite = false;
            for (_, kind) in model.parts_of(&t.id) {
                any = true;
                composite |= kind == LinkKind::Composite;
            }
            let verdict = if !any {
                Verdict::Leaf
            } else if bypass_edges(model, &t.id).is_empty() {
                Verdict::Oo
            } else {
                Verdict::NonOo
            };
            Classification {
                thimac: t.id.clone(),
                verdict,
                shared_parts_only: any && !composite,
            }
        })
        .collect()
}

/// Thimacs removed along with `t`: `t` and everything reachable from it over
/// COMPOSITE links. SHARED parts survive.
pub fn deletion_impact(model: &StaticModel, t: &ThimacId) -> Result<BTreeSet<ThimacId>, ModelError> {
    let mut out = model.descendants(t, &[LinkKind::Composite])?;
    out.insert(t.clone());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("EMPTY_KINDS: at least one action kind is required")]
    EmptyKinds,
}

/// Per-part actions induced when `whole` performs each of `kinds`: every
/// (descendant, kind) pair over COMPOSITE and SHARED links.
pub fn behavioral_aggregation(
    model: &StaticModel,
    whole: &ThimacId,
    kinds: &BTreeSet<ActionKind>,
) -> Result<BTreeSet<(ThimacId, ActionKind)>, AggregationError> {
    let parts = model.descendants(whole, &LinkKind::ALL)?;
    if kinds.is_empty() {
        return Err(AggregationError::EmptyKinds);
    }
    Ok(parts
        .into_iter()
        .flat_map(|p| kinds.iter().map(move |&k| (p.clone(), k)))
        .collect())
}
