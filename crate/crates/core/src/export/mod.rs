//! DOT and canonical JSON output.

mod dot;
mod json;

pub use dot::{to_dot_behavior, to_dot_static, DotDocument};
pub use json::{from_json, to_json, JsonDocument, JsonError, SCHEMA_VERSION};
