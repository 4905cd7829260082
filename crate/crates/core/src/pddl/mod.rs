//! STRIPS subset of PDDL: parsing, validation, grounding and transition
//! semantics.
//!
//! Supported requirements are `:strips`, `:typing` (flat types) and
//! `:negative-preconditions`. Anything else is rejected with an explicit
//! "unsupported feature" diagnostic rather than silently ignored.

mod ground;
mod model;
mod parse;
pub mod sexpr;
mod state;

pub use ground::{ground, GoalSpec, GroundAction, GroundProblem, GroundingOptions, PlanError};
pub use model::{ActionSchema, AtomTemplate, DomainDef, Literal, PredicateDecl, ProblemDef, TypedName};
pub use parse::{parse_domain, parse_problem};
pub use state::State;

use sexpr::Pos;
use thiserror::Error;

/// Type that marks the parameters of a tool-construction action.
pub const TOOL_PART_TYPE: &str = "tool-part";
/// Schemas with this prefix have their `tool-part` parameters designated as
/// the ordered object combination.
pub const JOIN_PREFIX: &str = "join-";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported feature at {line}:{col}: {feature}")]
    Unsupported { line: usize, col: usize, feature: String },
    #[error("undeclared predicate '{name}' at {line}:{col}")]
    UndeclaredPredicate { name: String, line: usize, col: usize },
    #[error("undeclared type '{name}' at {line}:{col}")]
    UndeclaredType { name: String, line: usize, col: usize },
    #[error("arity mismatch for '{name}' at {line}:{col}: expected {expected}, found {found}")]
    Arity { name: String, expected: usize, found: usize, line: usize, col: usize },
    #[error("unknown term '{name}' at {line}:{col}")]
    UnknownTerm { name: String, line: usize, col: usize },
    #[error("type mismatch at {line}:{col}: '{term}' is '{found}', expected '{expected}'")]
    TypeMismatch { term: String, found: String, expected: String, line: usize, col: usize },
    #[error("problem is for domain '{found}', but domain is '{expected}'")]
    DomainMismatch { expected: String, found: String },
    #[error("duplicate declaration of '{name}'")]
    Duplicate { name: String },
    #[error("grounding produces more than {cap} actions (worst schema: '{schema}', up to {estimate} groundings)")]
    GroundingExplosion { schema: String, estimate: u128, cap: usize },
}

impl PddlError {
    pub(crate) fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        PddlError::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
    }

    pub(crate) fn unsupported(pos: Pos, feature: impl Into<String>) -> Self {
        PddlError::Unsupported { line: pos.line, col: pos.col, feature: feature.into() }
    }
}
