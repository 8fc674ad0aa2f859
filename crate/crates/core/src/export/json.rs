use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::events::Event;
use crate::model::{
    build_model, Action, ActionId, ActionKind, Declarations, Flow, LinkKind, PartLink, Subject,
    Thimac, ThimacId, Trigger,
};
use crate::parser::{is_identifier, ModelDocument};
use crate::sim::{BehavioralModel, Exit, Firing, Token, TokenId, TokenOrigin, Trace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JsonError {
    #[error("MALFORMED_JSON at line {line}, column {column}: {message}")]
    MalformedJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("SCHEMA_VIOLATION at {path}: {message}")]
    SchemaViolation { path: String, message: String },
}

impl JsonError {
    pub fn code(&self) -> &'static str {
        match self {
            JsonError::MalformedJson { .. } => "MALFORMED_JSON",
            JsonError::SchemaViolation { .. } => "SCHEMA_VIOLATION",
        }
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        JsonError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Values with a canonical JSON form.
pub trait JsonDocument: Sized {
    #[doc(hidden)]
    type Repr: Serialize + DeserializeOwned;
    #[doc(hidden)]
    fn to_repr(&self) -> Self::Repr;
    #[doc(hidden)]
    fn from_repr(repr: Self::Repr) -> Result<Self, JsonError>;
}

/// Compact JSON with object keys in sorted order and arrays sorted by id.
pub fn to_json<T: JsonDocument>(value: &T) -> String {
    serde_json::to_string(&value.to_repr()).expect("in-memory values serialize")
}

pub fn from_json<T: JsonDocument>(text: &str) -> Result<T, JsonError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| JsonError::MalformedJson {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let repr: T::Repr = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = pointer(e.path());
        JsonError::schema(path, e.into_inner().to_string())
    })?;
    T::from_repr(repr)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

// Mirror types: fields are listed alphabetically so serialization emits
// sorted keys without depending on map ordering.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRepr {
    actions: Vec<ActionRepr>,
    behaviors: Vec<BehaviorRepr>,
    events: Vec<EventRepr>,
    flows: Vec<EdgeRepr>,
    part_links: Vec<LinkRepr>,
    thimacs: Vec<ThimacRepr>,
    tmkit_version: u32,
    triggers: Vec<EdgeRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionRepr {
    id: ActionId,
    kind: ActionKind,
    owner: ThimacId,
    thing_label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorRepr {
    edges: Vec<(String, String)>,
    event_ids: Vec<String>,
    id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRepr {
    action_ids: Vec<ActionId>,
    id: String,
    name: String,
    time_label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRepr {
    dst: ActionId,
    src: ActionId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRepr {
    kind: LinkKind,
    part: ThimacId,
    whole: ThimacId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThimacRepr {
    declared_oo: bool,
    id: ThimacId,
    name: String,
    parent: Option<ThimacId>,
}

fn check_version(v: u32) -> Result<(), JsonError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(JsonError::schema(
            "/tmkit_version",
            format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
        ))
    }
}

fn check_unique<'a>(
    field: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<Vec<&'a str>, JsonError> {
    let mut seen = BTreeSet::new();
    let mut all = Vec::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            return Err(JsonError::schema(
                format!("/{field}/{i}/id"),
                format!("duplicate id `{id}`"),
            ));
        }
        all.push(id);
    }
    Ok(all)
}

impl JsonDocument for ModelDocument {
    type Repr = DocumentRepr;

    fn to_repr(&self) -> DocumentRepr {
        let m = &self.model;
        let mut thimacs: Vec<ThimacRepr> = m
            .thimacs()
            .iter()
            .map(|t| ThimacRepr {
                declared_oo: t.declared_oo,
                id: t.id.clone(),
                name: t.name.clone(),
                parent: t.parent.clone(),
            })
            .collect();
        thimacs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut part_links: Vec<LinkRepr> = m
            .part_links()
            .iter()
            .map(|l| LinkRepr {
                kind: l.kind,
                part: l.part.clone(),
                whole: l.whole.clone(),
            })
            .collect();
        part_links.sort_by(|a, b| (&a.whole, &a.part, a.kind).cmp(&(&b.whole, &b.part, b.kind)));
        let mut actions: Vec<ActionRepr> = m
            .actions()
            .iter()
            .map(|a| ActionRepr {
                id: a.id.clone(),
                kind: a.kind,
                owner: a.owner.clone(),
                thing_label: a.thing_label.clone(),
            })
            .collect();
        actions.sort_by(|a, b| a.id.cmp(&b.id));
        let edges = |pairs: Vec<(String, &ActionId, &ActionId)>| {
            let mut pairs = pairs;
            pairs.sort();
            pairs
                .into_iter()
                .map(|(_, src, dst)| EdgeRepr {
                    dst: dst.clone(),
                    src: src.clone(),
                })
                .collect::<Vec<_>>()
        };
        let flows = edges(m.flows().iter().map(|f| (f.id(), &f.src, &f.dst)).collect());
        let triggers = edges(m.triggers().iter().map(|t| (t.id(), &t.src, &t.dst)).collect());
        let mut events: Vec<EventRepr> = self
            .events
            .iter()
            .map(|e| EventRepr {
                action_ids: e.action_ids.iter().cloned().collect(),
                id: e.id.clone(),
                name: e.name.clone(),
                time_label: e.time_label.clone(),
            })
            .collect();
        events.sort_by(|a, b| a.id.cmp(&b.id));
        let mut behaviors: Vec<BehaviorRepr> = self
            .behaviors
            .iter()
            .map(|b| BehaviorRepr {
                edges: b.edges.clone(),
                event_ids: b.event_ids.clone(),
                id: b.id.clone(),
            })
            .collect();
        behaviors.sort_by(|a, b| a.id.cmp(&b.id));
        DocumentRepr {
            actions,
            behaviors,
            events,
            flows,
            part_links,
            thimacs,
            tmkit_version: SCHEMA_VERSION,
            triggers,
        }
    }

    fn from_repr(r: DocumentRepr) -> Result<Self, JsonError> {
        check_version(r.tmkit_version)?;
        for (i, t) in r.thimacs.iter().enumerate() {
            if !is_identifier(&t.name) {
                return Err(JsonError::schema(
                    format!("/thimacs/{i}/name"),
                    format!("`{}` is not an identifier", t.name),
                ));
            }
            let expected = match &t.parent {
                Some(p) => p.child(&t.name),
                None => ThimacId::new(t.name.clone()),
            };
            if t.id != expected {
                return Err(JsonError::schema(
                    format!("/thimacs/{i}/id"),
                    format!("id `{}` should be `{expected}`", t.id),
                ));
            }
        }
        for (i, a) in r.actions.iter().enumerate() {
            if let Some(l) = &a.thing_label {
                if !is_identifier(l) {
                    return Err(JsonError::schema(
                        format!("/actions/{i}/thing_label"),
                        format!("`{l}` is not an identifier"),
                    ));
                }
            }
            let expected = ActionId::canonical(a.kind, &a.owner, a.thing_label.as_deref());
            if a.id != expected {
                return Err(JsonError::schema(
                    format!("/actions/{i}/id"),
                    format!("id `{}` should be `{expected}`", a.id),
                ));
            }
        }
        let decls = Declarations {
            thimacs: r
                .thimacs
                .iter()
                .map(|t| Thimac {
                    id: t.id.clone(),
                    name: t.name.clone(),
                    parent: t.parent.clone(),
                    declared_oo: t.declared_oo,
                })
                .collect(),
            part_links: r
                .part_links
                .iter()
                .map(|l| PartLink {
                    whole: l.whole.clone(),
                    part: l.part.clone(),
                    kind: l.kind,
                })
                .collect(),
            actions: r
                .actions
                .iter()
                .map(|a| Action::new(a.kind, &a.owner, a.thing_label.as_deref()))
                .collect(),
            flows: r.flows.iter().map(|f| Flow::new(&f.src, &f.dst)).collect(),
            triggers: r.triggers.iter().map(|t| Trigger::new(&t.src, &t.dst)).collect(),
        };
        let model = build_model(decls).map_err(|errors| {
            let e = &errors[0];
            let path = match &e.subject {
                Subject::Thimac(id) => index_path("thimacs", r.thimacs.iter().position(|t| &t.id == id)),
                Subject::Action(id) => index_path("actions", r.actions.iter().position(|a| &a.id == id)),
                Subject::PartLink(w, p) => index_path(
                    "part_links",
                    r.part_links.iter().position(|l| &l.whole == w && &l.part == p),
                ),
                Subject::Flow(s, d) => {
                    index_path("flows", r.flows.iter().position(|f| &f.src == s && &f.dst == d))
                }
                Subject::Trigger(s, d) => index_path(
                    "triggers",
                    r.triggers.iter().position(|t| &t.src == s && &t.dst == d),
                ),
            };
            JsonError::schema(path, format!("{} {}: {}", e.code, e.subject, e.message))
        })?;

        check_unique("events", r.events.iter().map(|e| e.id.as_str()))?;
        let mut events = Vec::with_capacity(r.events.len());
        for (i, e) in r.events.into_iter().enumerate() {
            if !is_identifier(&e.id) {
                return Err(JsonError::schema(
                    format!("/events/{i}/id"),
                    format!("`{}` is not an identifier", e.id),
                ));
            }
            if e.action_ids.is_empty() {
                return Err(JsonError::schema(
                    format!("/events/{i}/action_ids"),
                    "an event covers at least one action",
                ));
            }
            for (j, a) in e.action_ids.iter().enumerate() {
                if model.action(a).is_none() {
                    return Err(JsonError::schema(
                        format!("/events/{i}/action_ids/{j}"),
                        format!("unknown action `{a}`"),
                    ));
                }
            }
            events.push(Event {
                id: e.id,
                name: e.name,
                action_ids: e.action_ids.into_iter().collect(),
                time_label: e.time_label,
            });
        }

        let declared: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
        check_unique("behaviors", r.behaviors.iter().map(|b| b.id.as_str()))?;
        let mut behaviors = Vec::with_capacity(r.behaviors.len());
        for (i, b) in r.behaviors.into_iter().enumerate() {
            if !is_identifier(&b.id) {
                return Err(JsonError::schema(
                    format!("/behaviors/{i}/id"),
                    format!("`{}` is not an identifier", b.id),
                ));
            }
            let mut members = BTreeSet::new();
            for (j, e) in b.event_ids.iter().enumerate() {
                if !declared.contains(e.as_str()) {
                    return Err(JsonError::schema(
                        format!("/behaviors/{i}/event_ids/{j}"),
                        format!("unknown event `{e}`"),
                    ));
                }
                if !members.insert(e.as_str()) {
                    return Err(JsonError::schema(
                        format!("/behaviors/{i}/event_ids/{j}"),
                        format!("event `{e}` listed twice"),
                    ));
                }
            }
            let mut seen = BTreeSet::new();
            for (j, (from, to)) in b.edges.iter().enumerate() {
                for (k, end) in [from, to].into_iter().enumerate() {
                    if !members.contains(end.as_str()) {
                        return Err(JsonError::schema(
                            format!("/behaviors/{i}/edges/{j}/{k}"),
                            format!("`{end}` is not one of the behavior's events"),
                        ));
                    }
                }
                if !seen.insert((from, to)) {
                    return Err(JsonError::schema(
                        format!("/behaviors/{i}/edges/{j}"),
                        "duplicate edge",
                    ));
                }
            }
            behaviors.push(BehavioralModel {
                id: b.id,
                event_ids: b.event_ids,
                edges: b.edges,
            });
        }
        Ok(ModelDocument {
            model,
            events,
            behaviors,
        })
    }
}

fn index_path(field: &str, index: Option<usize>) -> String {
    match index {
        Some(i) => format!("/{field}/{i}"),
        None => format!("/{field}"),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRepr {
    exits: Vec<ExitRepr>,
    final_locations: Vec<LocationRepr>,
    firings: Vec<FiringRepr>,
    tmkit_version: u32,
    tokens: Vec<TokenRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExitRepr {
    action: ActionId,
    token: TokenId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationRepr {
    action: ActionId,
    token: TokenId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiringRepr {
    action: ActionId,
    consumed: Vec<TokenId>,
    emitted: Vec<TokenId>,
    event: String,
    kind: ActionKind,
    seq: usize,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
enum OriginRepr {
    External,
    Created,
    Triggered,
}

impl From<TokenOrigin> for OriginRepr {
    fn from(o: TokenOrigin) -> Self {
        match o {
            TokenOrigin::External => OriginRepr::External,
            TokenOrigin::Created => OriginRepr::Created,
            TokenOrigin::Triggered => OriginRepr::Triggered,
        }
    }
}

impl From<OriginRepr> for TokenOrigin {
    fn from(o: OriginRepr) -> Self {
        match o {
            OriginRepr::External => TokenOrigin::External,
            OriginRepr::Created => TokenOrigin::Created,
            OriginRepr::Triggered => TokenOrigin::Triggered,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenRepr {
    birth_action: ActionId,
    history: Vec<ActionId>,
    id: TokenId,
    label: Option<String>,
    origin: OriginRepr,
}

impl JsonDocument for Trace {
    type Repr = TraceRepr;

    fn to_repr(&self) -> TraceRepr {
        let mut exits: Vec<ExitRepr> = self
            .exits
            .iter()
            .map(|e| ExitRepr {
                action: e.action.clone(),
                token: e.token,
            })
            .collect();
        exits.sort_by_key(|e| e.token);
        let mut tokens: Vec<TokenRepr> = self
            .tokens
            .iter()
            .map(|t| TokenRepr {
                birth_action: t.birth_action.clone(),
                history: t.history.clone(),
                id: t.id,
                label: t.label.clone(),
                origin: t.origin.into(),
            })
            .collect();
        tokens.sort_by_key(|t| t.id);
        TraceRepr {
            exits,
            final_locations: self
                .final_locations
                .iter()
                .map(|(token, action)| LocationRepr {
                    action: action.clone(),
                    token: *token,
                })
                .collect(),
            firings: self
                .firings
                .iter()
                .enumerate()
                .map(|(seq, f)| FiringRepr {
                    action: f.action.clone(),
                    consumed: f.consumed.clone(),
                    emitted: f.emitted.clone(),
                    event: f.event.clone(),
                    kind: f.kind,
                    seq,
                })
                .collect(),
            tmkit_version: SCHEMA_VERSION,
            tokens,
        }
    }

    fn from_repr(r: TraceRepr) -> Result<Self, JsonError> {
        check_version(r.tmkit_version)?;
        let mut known = BTreeSet::new();
        let mut last = None;
        for (i, t) in r.tokens.iter().enumerate() {
            if last.is_some_and(|l| t.id <= l) {
                return Err(JsonError::schema(
                    format!("/tokens/{i}/id"),
                    "token ids must be unique and increasing",
                ));
            }
            last = Some(t.id);
            known.insert(t.id);
        }
        let unknown = |path: String, id: TokenId| {
            JsonError::schema(path, format!("unknown token {id}"))
        };
        for (i, f) in r.firings.iter().enumerate() {
            if f.seq != i {
                return Err(JsonError::schema(
                    format!("/firings/{i}/seq"),
                    format!("expected sequence number {i}"),
                ));
            }
            for (field, ids) in [("consumed", &f.consumed), ("emitted", &f.emitted)] {
                for (j, id) in ids.iter().enumerate() {
                    if !known.contains(id) {
                        return Err(unknown(format!("/firings/{i}/{field}/{j}"), *id));
                    }
                }
            }
        }
        for (i, e) in r.exits.iter().enumerate() {
            if !known.contains(&e.token) {
                return Err(unknown(format!("/exits/{i}/token"), e.token));
            }
        }
        let mut final_locations = BTreeMap::new();
        for (i, l) in r.final_locations.into_iter().enumerate() {
            if !known.contains(&l.token) {
                return Err(unknown(format!("/final_locations/{i}/token"), l.token));
            }
            if final_locations.insert(l.token, l.action).is_some() {
                return Err(JsonError::schema(
                    format!("/final_locations/{i}/token"),
                    format!("token {} located twice", l.token),
                ));
            }
        }
        Ok(Trace {
            tokens: r
                .tokens
                .into_iter()
                .map(|t| Token {
                    id: t.id,
                    origin: t.origin.into(),
                    birth_action: t.birth_action,
                    label: t.label,
                    history: t.history,
                })
                .collect(),
            firings: r
                .firings
                .into_iter()
                .map(|f| Firing {
                    event: f.event,
                    action: f.action,
                    kind: f.kind,
                    consumed: f.consumed,
                    emitted: f.emitted,
                })
                .collect(),
            exits: r
                .exits
                .into_iter()
                .map(|e| Exit {
                    token: e.token,
                    action: e.action,
                })
                .collect(),
            final_locations,
        })
    }
}
