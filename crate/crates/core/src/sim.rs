//! Behavioral models and the token simulator.
//!
//! A behavioral model orders events. [`simulate`] fires the events in a
//! deterministic topological order of that chronology and, inside each event,
//! fires its actions in topological order of the event's subdiagram. Things
//! are tracked as tokens:
//!
//! * firing an action first pulls one token along every inbound flow. A flow
//!   whose source holds nothing is starved: STRICT stops with
//!   [`SimError::StarvedFlow`], RELAXED mints an EXTERNAL token standing in
//!   for the environment. A TRANSFER with no inbound flow or trigger is an
//!   entry point at the model boundary and is treated the same way.
//! * each inbound trigger whose source has held a token mints one TRIGGERED
//!   token at its target. The source keeps its tokens. A CREATE target mints
//!   only its own CREATED token.
//! * CREATE mints one CREATED token. PROCESS marks the tokens it holds.
//! * a TRANSFER with no outbound flow passes its tokens out of the model.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::checker::Mode;
use crate::diagnostic::{self, Code, Diagnostic};
use crate::events::{DependencyGraph, Event};
use crate::model::{ActionId, ActionKind, StaticModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehavioralModel {
    pub id: String,
    /// Events in declaration order.
    pub event_ids: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl BehavioralModel {
    /// `ids[0] -> ids[1] -> ...`
    pub fn chain(id: &str, ids: &[&str]) -> Self {
        BehavioralModel {
            id: id.to_owned(),
            event_ids: ids.iter().map(|s| s.to_string()).collect(),
            edges: ids
                .windows(2)
                .map(|w| (w[0].to_owned(), w[1].to_owned()))
                .collect(),
        }
    }

    fn indexed_edges(&self) -> Result<Vec<(usize, usize)>, SimError> {
        let index: HashMap<&str, usize> = self
            .event_ids
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        self.edges
            .iter()
            .map(|(a, b)| {
                let a = *index
                    .get(a.as_str())
                    .ok_or_else(|| SimError::UnknownEvent(a.clone()))?;
                let b = *index
                    .get(b.as_str())
                    .ok_or_else(|| SimError::UnknownEvent(b.clone()))?;
                Ok((a, b))
            })
            .collect()
    }

    pub fn is_cyclic(&self) -> Result<bool, SimError> {
        let edges = self.indexed_edges()?;
        Ok(crate::events::has_cycle(self.event_ids.len(), edges.into_iter()))
    }
}

pub type TokenId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenOrigin {
    External,
    Created,
    Triggered,
}

impl TokenOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenOrigin::External => "EXTERNAL",
            TokenOrigin::Created => "CREATED",
            TokenOrigin::Triggered => "TRIGGERED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub origin: TokenOrigin,
    pub birth_action: ActionId,
    /// Thing label of the birth action.
    pub label: Option<String>,
    /// PROCESS actions that handled this token, in order.
    pub history: Vec<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub event: String,
    pub action: ActionId,
    pub kind: ActionKind,
    /// Tokens brought into the action by its inbound flows and triggers.
    pub consumed: Vec<TokenId>,
    /// Tokens the action holds or passes on after firing.
    pub emitted: Vec<TokenId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exit {
    pub token: TokenId,
    pub action: ActionId,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    /// Every minted token, in mint order.
    pub tokens: Vec<Token>,
    pub firings: Vec<Firing>,
    /// Sorted by token id.
    pub exits: Vec<Exit>,
    pub final_locations: BTreeMap<TokenId, ActionId>,
}

impl Trace {
    pub fn count_origin(&self, origin: TokenOrigin) -> usize {
        self.tokens.iter().filter(|t| t.origin == origin).count()
    }

    /// Events in the order they first fired.
    pub fn fired_events(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for f in &self.firings {
            if out.last() != Some(&f.event.as_str()) {
                out.push(&f.event);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("CYCLIC_EVENT {0}: the event's subdiagram contains a cycle")]
    CyclicEvent(String),
    #[error("STARVED_FLOW {flow}: no token available while firing event {event}")]
    StarvedFlow { event: String, flow: String },
    #[error("UNKNOWN_EVENT {0}: event is not declared")]
    UnknownEvent(String),
    #[error("CYCLIC_BEHAVIOR {0}: the chronology contains a cycle")]
    CyclicBehavior(String),
    #[error("INVALID_EVENT {event}: {message}")]
    InvalidEvent { event: String, message: String },
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::CyclicEvent(_) => "CYCLIC_EVENT",
            SimError::StarvedFlow { .. } => "STARVED_FLOW",
            SimError::UnknownEvent(_) => "UNKNOWN_EVENT",
            SimError::CyclicBehavior(_) => "CYCLIC_BEHAVIOR",
            SimError::InvalidEvent { .. } => "INVALID_EVENT",
        }
    }
}

/// Reachability (paths of length >= 1) over `n` nodes.
fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
    }
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = succ[start].clone();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(&succ[v]);
                }
            }
            seen
        })
        .collect()
}

/// Compare a declared chronology against derived dependencies.
pub fn validate_chronology(
    b: &BehavioralModel,
    deps: &DependencyGraph,
) -> Result<Vec<Diagnostic>, SimError> {
    let known: BTreeSet<&str> = deps.nodes.iter().map(String::as_str).collect();
    if let Some(missing) = b.event_ids.iter().find(|e| !known.contains(e.as_str())) {
        return Err(SimError::UnknownEvent(missing.clone()));
    }
    let edges = b.indexed_edges()?;
    let reach = reachability(b.event_ids.len(), &edges);
    let index: HashMap<&str, usize> = b
        .event_ids
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();

    let mut out = Vec::new();
    for (from, to) in &deps.edges {
        let (Some(&i), Some(&j)) = (index.get(from.as_str()), index.get(to.as_str())) else {
            continue;
        };
        if reach[j][i] && !reach[i][j] {
            out.push(Diagnostic::error(
                Code::DepViolation,
                &b.id,
                format!("{from} feeds {to}, but the chronology places {to} before {from}"),
            ));
        }
    }
    if crate::events::has_cycle(b.event_ids.len(), edges.into_iter()) {
        out.push(Diagnostic::warning(
            Code::CyclicBehavior,
            &b.id,
            "chronology contains a cycle and cannot be simulated",
        ));
    }
    diagnostic::sort(&mut out);
    Ok(out)
}

/// Topological order over `n` nodes, smallest ready index first. `None` on a
/// cycle.
fn stable_toposort(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(a, b) in edges {
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Topological order of the chronology, ties broken by declaration order.
pub fn linearize(b: &BehavioralModel) -> Result<Vec<String>, SimError> {
    let edges = b.indexed_edges()?;
    let order = stable_toposort(b.event_ids.len(), &edges)
        .ok_or_else(|| SimError::CyclicBehavior(b.id.clone()))?;
    Ok(order.into_iter().map(|i| b.event_ids[i].clone()).collect())
}

struct Simulator<'m> {
    model: &'m StaticModel,
    mode: Mode,
    resident: Vec<VecDeque<TokenId>>,
    activated: Vec<bool>,
    trace: Trace,
}

impl<'m> Simulator<'m> {
    fn mint(&mut self, origin: TokenOrigin, at: &ActionId) -> TokenId {
        let id = self.trace.tokens.len() as TokenId + 1;
        let label = self.model.action(at).and_then(|a| a.thing_label.clone());
        self.trace.tokens.push(Token {
            id,
            origin,
            birth_action: at.clone(),
            label,
            history: Vec::new(),
        });
        id
    }

    fn token_mut(&mut self, id: TokenId) -> &mut Token {
        &mut self.trace.tokens[(id - 1) as usize]
    }

    fn starved(&mut self, event: &str, flow: String, at: &ActionId) -> Result<TokenId, SimError> {
        match self.mode {
            Mode::Strict => Err(SimError::StarvedFlow {
                event: event.to_owned(),
                flow,
            }),
            Mode::Relaxed => Ok(self.mint(TokenOrigin::External, at)),
        }
    }

    fn fire(&mut self, event: &str, x: &ActionId) -> Result<(), SimError> {
        let model = self.model;
        let pos = model.action_position(x).expect("validated event");
        let action = &model.actions()[pos];
        let mut consumed = Vec::new();

        let mut inbound = 0;
        for flow in model.flows_into(x) {
            inbound += 1;
            let src = model.action_position(&flow.src).expect("valid model");
            let token = match self.resident[src].pop_front() {
                Some(t) => t,
                None => self.starved(event, flow.id(), x)?,
            };
            consumed.push(token);
        }
        let mut triggered = 0;
        for trigger in model.triggers_into(x) {
            triggered += 1;
            let src = model.action_position(&trigger.src).expect("valid model");
            if action.kind != ActionKind::Create && self.activated[src] {
                consumed.push(self.mint(TokenOrigin::Triggered, x));
            }
        }
        if action.kind == ActionKind::Transfer && inbound == 0 && triggered == 0 {
            consumed.push(self.starved(event, format!("<boundary>->{x}"), x)?);
        }

        let mut emitted = consumed.clone();
        match action.kind {
            ActionKind::Create => emitted.push(self.mint(TokenOrigin::Created, x)),
            ActionKind::Process => {
                for &t in &emitted {
                    self.token_mut(t).history.push(x.clone());
                }
            }
            _ => {}
        }
        self.resident[pos].extend(emitted.iter().copied());
        if !self.resident[pos].is_empty() {
            self.activated[pos] = true;
        }
        if action.kind == ActionKind::Transfer && model.flows_out_of(x).next().is_none() {
            for token in self.resident[pos].drain(..) {
                self.trace.exits.push(Exit {
                    token,
                    action: x.clone(),
                });
            }
        }
        self.trace.firings.push(Firing {
            event: event.to_owned(),
            action: x.clone(),
            kind: action.kind,
            consumed,
            emitted,
        });
        Ok(())
    }

    fn fire_event(&mut self, event: &Event) -> Result<(), SimError> {
        let model = self.model;
        let mut members: Vec<&ActionId> = event.action_ids.iter().collect();
        for id in &members {
            if model.action(id).is_none() {
                return Err(SimError::InvalidEvent {
                    event: event.id.clone(),
                    message: format!("unknown action `{id}`"),
                });
            }
        }
        members.sort_by_key(|id| model.action_position(id));
        let local: HashMap<&ActionId, usize> =
            members.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let sub = model
            .induced_subgraph(members.iter().copied())
            .expect("checked above");
        let edges: Vec<(usize, usize)> = sub
            .edges()
            .map(|e| (local[e.src], local[e.dst]))
            .collect();
        let order = stable_toposort(members.len(), &edges)
            .ok_or_else(|| SimError::CyclicEvent(event.id.clone()))?;
        for i in order {
            self.fire(&event.id, members[i])?;
        }
        Ok(())
    }
}

/// Execute a behavioral model; see the module docs for the firing rules.
pub fn simulate(
    model: &StaticModel,
    events: &[Event],
    b: &BehavioralModel,
    mode: Mode,
) -> Result<Trace, SimError> {
    let by_id: HashMap<&str, &Event> = events.iter().map(|e| (e.id.as_str(), e)).collect();
    for id in &b.event_ids {
        if !by_id.contains_key(id.as_str()) {
            return Err(SimError::UnknownEvent(id.clone()));
        }
    }
    let order = linearize(b)?;
    let n = model.actions().len();
    let mut sim = Simulator {
        model,
        mode,
        resident: vec![VecDeque::new(); n],
        activated: vec![false; n],
        trace: Trace::default(),
    };
    for id in &order {
        sim.fire_event(by_id[id.as_str()])?;
    }
    let mut trace = sim.trace;
    trace.exits.sort_by_key(|e| e.token);
    for (pos, tokens) in sim.resident.iter().enumerate() {
        for &t in tokens {
            trace
                .final_locations
                .insert(t, model.actions()[pos].id.clone());
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Number of items examined.
    pub checked: usize,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn from_failures(checked: usize, failures: Vec<String>) -> Self {
        CheckOutcome {
            passed: failures.is_empty(),
            checked,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MintAccounting {
    pub passed: bool,
    pub minted: usize,
    pub final_count: usize,
    pub exited: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConservationReport {
    /// PROCESS firings hand on exactly the tokens they took in.
    pub process_neutral: CheckOutcome,
    /// Every exited token was last emitted by the TRANSFER it exited from.
    pub exits_via_transfer: CheckOutcome,
    /// Every minted token ends either at a location or in the exits.
    pub mint_accounting: MintAccounting,
}

impl ConservationReport {
    pub fn all_passed(&self) -> bool {
        self.process_neutral.passed
            && self.exits_via_transfer.passed
            && self.mint_accounting.passed
    }
}

impl fmt::Display for ConservationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(
            f,
            "conservation process_neutral {} (process_firings={})",
            verdict(self.process_neutral.passed),
            self.process_neutral.checked
        )?;
        writeln!(
            f,
            "conservation exits_via_transfer {} (exits={})",
            verdict(self.exits_via_transfer.passed),
            self.exits_via_transfer.checked
        )?;
        let m = &self.mint_accounting;
        write!(
            f,
            "conservation mint_accounting {} (minted={} final={} exited={})",
            verdict(m.passed),
            m.minted,
            m.final_count,
            m.exited
        )
    }
}

/// Recheck a trace's token bookkeeping from the record alone.
pub fn conservation_check(trace: &Trace) -> ConservationReport {
    let mut process_failures = Vec::new();
    let mut process_count = 0;
    for (i, f) in trace.firings.iter().enumerate() {
        if f.kind != ActionKind::Process {
            continue;
        }
        process_count += 1;
        let mut before = f.consumed.clone();
        let mut after = f.emitted.clone();
        before.sort_unstable();
        after.sort_unstable();
        if before != after {
            process_failures.push(format!(
                "firing {i} at {} took {} tokens and handed on {}",
                f.action,
                before.len(),
                after.len()
            ));
        }
    }

    let mut exit_failures = Vec::new();
    for exit in &trace.exits {
        let last = trace
            .firings
            .iter()
            .rev()
            .find(|f| f.emitted.contains(&exit.token));
        match last {
            Some(f) if f.kind == ActionKind::Transfer && f.action == exit.action => {}
            Some(f) => exit_failures.push(format!(
                "token {} exited at {} but was last at {} ({})",
                exit.token, exit.action, f.action, f.kind
            )),
            None => exit_failures.push(format!("token {} exited without being emitted", exit.token)),
        }
    }

    let minted: BTreeSet<TokenId> = trace.tokens.iter().map(|t| t.id).collect();
    let mut accounted: Vec<TokenId> = trace.final_locations.keys().copied().collect();
    accounted.extend(trace.exits.iter().map(|e| e.token));
    let accounted_set: BTreeSet<TokenId> = accounted.iter().copied().collect();
    let mint_ok = trace.tokens.len() == accounted.len()
        && minted.len() == trace.tokens.len()
        && accounted_set == minted;

    ConservationReport {
        process_neutral: CheckOutcome::from_failures(process_count, process_failures),
        exits_via_transfer: CheckOutcome::from_failures(trace.exits.len(), exit_failures),
        mint_accounting: MintAccounting {
            passed: mint_ok,
            minted: trace.tokens.len(),
            final_count: trace.final_locations.len(),
            exited: trace.exits.len(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, Action, Declarations, Flow, Thimac, Trigger};

    fn single_create() -> (StaticModel, Vec<Event>) {
        let t = Thimac::root("T", false);
        let a = Action::new(ActionKind::Create, &t.id, Some("x"));
        let e = Event::new("E", [a.id.clone()]);
        let m = build_model(Declarations {
            thimacs: vec![t],
            actions: vec![a],
            ..Default::default()
        })
        .unwrap();
        (m, vec![e])
    }

    #[test]
    fn lone_create_mints_once() {
        let (m, events) = single_create();
        let b = BehavioralModel::chain("b", &["E"]);
        let trace = simulate(&m, &events, &b, Mode::Strict).unwrap();
        assert_eq!(trace.firings.len(), 1);
        assert_eq!(trace.tokens.len(), 1);
        assert_eq!(trace.tokens[0].origin, TokenOrigin::Created);
        assert_eq!(trace.tokens[0].label.as_deref(), Some("x"));
        assert!(conservation_check(&trace).all_passed());
    }

    #[test]
    fn ties_follow_declaration_order() {
        let b = BehavioralModel {
            id: "b".into(),
            event_ids: vec!["Ea".into(), "Eb".into(), "Ec".into()],
            edges: vec![],
        };
        assert_eq!(linearize(&b).unwrap(), ["Ea", "Eb", "Ec"]);
        let b = BehavioralModel {
            edges: vec![("Ec".into(), "Ea".into())],
            ..b
        };
        assert_eq!(linearize(&b).unwrap(), ["Eb", "Ec", "Ea"]);
    }

    #[test]
    fn cycles_are_rejected() {
        let b = BehavioralModel {
            id: "loop".into(),
            event_ids: vec!["A".into(), "B".into()],
            edges: vec![("A".into(), "B".into()), ("B".into(), "A".into())],
        };
        assert_eq!(linearize(&b), Err(SimError::CyclicBehavior("loop".into())));
        let deps = DependencyGraph {
            nodes: vec!["A".into(), "B".into()],
            ..Default::default()
        };
        let diags = validate_chronology(&b, &deps).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::CyclicBehavior);
    }

    #[test]
    fn single_event_without_deps_is_clean() {
        let b = BehavioralModel::chain("b", &["E"]);
        let deps = DependencyGraph {
            nodes: vec!["E".into()],
            ..Default::default()
        };
        assert!(validate_chronology(&b, &deps).unwrap().is_empty());
        let other = DependencyGraph::default();
        assert_eq!(
            validate_chronology(&b, &other),
            Err(SimError::UnknownEvent("E".into()))
        );
    }

    fn relay() -> StaticModel {
        // transfer.In -> receive.In -> process.In ~> process.In:mark
        let t = Thimac::root("In", false);
        let tr = Action::new(ActionKind::Transfer, &t.id, None);
        let rc = Action::new(ActionKind::Receive, &t.id, None);
        let pr = Action::new(ActionKind::Process, &t.id, None);
        let mk = Action::new(ActionKind::Process, &t.id, Some("mark"));
        build_model(Declarations {
            flows: vec![Flow::new(&tr.id, &rc.id), Flow::new(&rc.id, &pr.id)],
            triggers: vec![Trigger::new(&pr.id, &mk.id)],
            thimacs: vec![t],
            actions: vec![tr, rc, pr, mk],
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn boundary_entry_depends_on_mode() {
        let m = relay();
        let all: Vec<ActionId> = m.actions().iter().map(|a| a.id.clone()).collect();
        let events = vec![Event::new("E", all)];
        let b = BehavioralModel::chain("b", &["E"]);
        let err = simulate(&m, &events, &b, Mode::Strict).unwrap_err();
        assert_eq!(err.code(), "STARVED_FLOW");
        let trace = simulate(&m, &events, &b, Mode::Relaxed).unwrap();
        assert_eq!(trace.count_origin(TokenOrigin::External), 1);
        assert_eq!(trace.count_origin(TokenOrigin::Triggered), 1);
        assert_eq!(trace.tokens[0].history, vec![ActionId::from("process.In")]);
        assert_eq!(
            trace.final_locations.get(&1),
            Some(&ActionId::from("process.In"))
        );
        assert!(conservation_check(&trace).all_passed());
    }

    #[test]
    fn transfer_without_outflow_exits() {
        let t = Thimac::root("Out", false);
        let rl = Action::new(ActionKind::Release, &t.id, None);
        let tr = Action::new(ActionKind::Transfer, &t.id, None);
        let cr = Action::new(ActionKind::Create, &t.id, None);
        let m = build_model(Declarations {
            flows: vec![Flow::new(&cr.id, &rl.id), Flow::new(&rl.id, &tr.id)],
            thimacs: vec![t],
            actions: vec![rl, tr, cr],
            ..Default::default()
        })
        .unwrap();
        let all: Vec<ActionId> = m.actions().iter().map(|a| a.id.clone()).collect();
        let trace = simulate(
            &m,
            &[Event::new("E", all)],
            &BehavioralModel::chain("b", &["E"]),
            Mode::Strict,
        )
        .unwrap();
        let order: Vec<&str> = trace.firings.iter().map(|f| f.action.as_str()).collect();
        assert_eq!(order, ["create.Out", "release.Out", "transfer.Out"]);
        assert_eq!(
            trace.exits,
            vec![Exit {
                token: 1,
                action: ActionId::from("transfer.Out")
            }]
        );
        assert!(trace.final_locations.is_empty());
        assert!(conservation_check(&trace).all_passed());
    }

    #[test]
    fn cyclic_event_fails() {
        let t = Thimac::root("C", false);
        let a = Action::new(ActionKind::Receive, &t.id, None);
        let b = Action::new(ActionKind::Process, &t.id, None);
        let m = build_model(Declarations {
            flows: vec![Flow::new(&a.id, &b.id)],
            triggers: vec![Trigger::new(&b.id, &a.id)],
            thimacs: vec![t],
            actions: vec![a.clone(), b.clone()],
            ..Default::default()
        })
        .unwrap();
        let err = simulate(
            &m,
            &[Event::new("E", [a.id, b.id])],
            &BehavioralModel::chain("b", &["E"]),
            Mode::Relaxed,
        )
        .unwrap_err();
        assert_eq!(err, SimError::CyclicEvent("E".into()));
    }

    #[test]
    fn empty_trace_passes() {
        let r = conservation_check(&Trace::default());
        assert!(r.all_passed());
        assert_eq!(r.mint_accounting.minted, 0);
        assert_eq!(r.process_neutral.checked, 0);
    }

    #[test]
    fn duplicate_accounting_fails() {
        let (m, events) = single_create();
        let mut trace = simulate(&m, &events, &BehavioralModel::chain("b", &["E"]), Mode::Strict)
            .unwrap();
        trace.exits.push(Exit {
            token: 1,
            action: ActionId::from("create.T:x"),
        });
        let r = conservation_check(&trace);
        assert!(!r.mint_accounting.passed);
        assert!(!r.exits_via_transfer.passed);
    }
}
