//! Thinging machine models: parsing, structural checks, aggregation
//! queries, event chronologies and token simulation.

pub mod checker;
pub mod cli;
pub mod corpus;
pub mod diagnostic;
pub mod events;
pub mod export;
pub mod model;
pub mod parser;
pub mod sim;

pub use checker::Mode;
pub use diagnostic::{Code, Diagnostic, Severity};
pub use events::{DependencyGraph, Event};
pub use model::{
    build_model, Action, ActionId, ActionKind, Declarations, Flow, LinkKind, PartLink,
    StaticModel, Thimac, ThimacId, Trigger,
};
pub use parser::{parse, round_trip, ModelDocument, ParseError, SourceSpan};
pub use sim::{BehavioralModel, Trace};
