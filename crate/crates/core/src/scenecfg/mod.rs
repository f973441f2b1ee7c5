//! Scenario files: parsing, validation, canonical serialization, command-line
//! overrides and camera view expansion.

mod document;
mod schema;
mod types;
mod views;

pub use document::{emit, inline_value, parse_document, Node, NodeKind};
pub use schema::{validate, validate_camera};
pub use types::*;
pub use views::expand_views;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown key `{path}` (line {line}, column {col})")]
    UnknownKey { path: String, line: usize, col: usize },
    #[error("missing required key `{path}`")]
    MissingKey { path: String },
    #[error("bad value for `{path}` (line {line}, column {col}): {msg}")]
    Type {
        path: String,
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("invalid `{path}`: {msg}")]
    Validation { path: String, msg: String },
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    schema::decode(&parse_document(text)?)
}

/// Canonical text: keys in schema order, every default written out, floats
/// in shortest round-trip form.
pub fn serialize_scenario(s: &Scenario) -> String {
    emit(&schema::encode(s))
}

/// Parses a document and applies `key.path=value` overrides before decoding.
/// Values are typed by the field they land on, so `attack.epsilon=4` and
/// `render.shadows=false` need no quoting.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Scenario, ConfigError> {
    let mut root = parse_document(text)?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    schema::decode(&root)
}

pub fn apply_override(root: &mut Node, assignment: &str) -> Result<(), ConfigError> {
    let bad = |msg: String| ConfigError::Syntax { line: 0, col: 0, msg };
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| bad(format!("override {assignment:?} is not `key=value`")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad(format!("malformed override path {path:?}")));
    }
    let value = inline_value(value.trim(), 0, 0)?;
    let mut node = root;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        node = match &mut node.kind {
            NodeKind::Map(entries) => {
                let i = match entries.iter().position(|(k, _)| k == key) {
                    Some(i) => i,
                    None => {
                        // New keys are inserted; decoding rejects any the schema does not know.
                        entries.push((key.to_string(), Node::map(vec![])));
                        entries.len() - 1
                    }
                };
                &mut entries[i].1
            }
            NodeKind::List(items) => {
                let i: usize = key
                    .parse()
                    .ok()
                    .filter(|i| *i < items.len())
                    .ok_or_else(|| bad(format!("override path {path:?}: no list element {key:?}")))?;
                &mut items[i]
            }
            NodeKind::Scalar { .. } => {
                return Err(ConfigError::UnknownKey {
                    path: keys[..=depth].join("."),
                    line: 0,
                    col: 0,
                })
            }
        };
        if last {
            *node = value.clone();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
